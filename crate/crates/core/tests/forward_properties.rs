use nlos_core::forward::{simulate_response, transpose_response, Scene, ScenePoint};
use nlos_core::geometry::{make_grid, ApertureGrid, GridLabel, PhysicalConstants, TimeBase, Vec3};
use proptest::prelude::*;

fn c1() -> PhysicalConstants<f64> {
    PhysicalConstants::new(1.0).unwrap()
}

fn grid(corner: (f64, f64), step: f64, n: (usize, usize), label: GridLabel) -> ApertureGrid<f64> {
    make_grid(Vec3::new(corner.0, corner.1, 0.0), Vec3::new(step, 0.0, 0.0), Vec3::new(0.0, step, 0.0), n, label).unwrap()
}

fn arb_point() -> impl Strategy<Value = ScenePoint<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, 0.5..2.0f64, 0.1..1.0f64, -0.4..0.4f64, -0.4..0.4f64, 0.0..0.5f64)
        .prop_map(|(x, y, z, albedo, nx, ny, gloss)| {
            let normal = Vec3::new(nx, ny, -1.0).normalized().unwrap();
            ScenePoint::new(Vec3::new(x, y, z), albedo, normal, gloss, 4.0).unwrap()
        })
}

fn arb_scene(max_points: usize) -> impl Strategy<Value = Vec<ScenePoint<f64>>> {
    prop::collection::vec(arb_point(), 1..=max_points)
}

fn timebase() -> TimeBase<f64> {
    TimeBase::new(0.05, 400, 0.0).unwrap()
}

/// Every chain of scatterer indices with no immediate repeats.
fn enumerate_chains(n: usize, max_bounces: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for _ in 0..max_bounces {
        out.extend(frontier.iter().cloned());
        frontier = frontier
            .iter()
            .flat_map(|ch| (0..n).filter(move |&j| j != *ch.last().unwrap()).map(move |j| [ch.clone(), vec![j]].concat()))
            .collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn swapping_apertures_transposes_response(points in arb_scene(5), bounces in 1usize..=3) {
        let scene = Scene::new(points, bounces, vec![]).unwrap();
        let a = grid((-0.5, -0.3), 0.25, (4, 3), GridLabel::Projector);
        let b = grid((-0.2, -0.6), 0.3, (3, 4), GridLabel::Camera);
        let tb = timebase();
        let ab = simulate_response(&scene, &a, &b, &tb, &c1()).unwrap().response;
        let ba = simulate_response(&scene, &b.clone().with_label(GridLabel::Projector), &a.clone().with_label(GridLabel::Camera), &tb, &c1())
            .unwrap()
            .response;
        let back = transpose_response(&ba);
        prop_assert_eq!(ab.values(), back.values());
    }

    #[test]
    fn disjoint_single_bounce_scenes_superpose(first in arb_scene(3), second in arb_scene(3)) {
        let p = grid((-0.5, -0.5), 0.5, (3, 3), GridLabel::Projector);
        let c = grid((-0.5, -0.5), 0.5, (3, 3), GridLabel::Camera);
        let tb = timebase();
        let sim = |pts: Vec<ScenePoint<f64>>| {
            simulate_response(&Scene::new(pts, 1, vec![]).unwrap(), &p, &c, &tb, &c1()).unwrap().response
        };
        let union = sim([first.clone(), second.clone()].concat());
        let sum = sim(first).sum_with(&sim(second)).unwrap();
        for (u, s) in union.values().iter().zip(sum.values()) {
            prop_assert!((u - s).abs() <= 1e-12 * s.abs().max(1e-300));
        }
    }

    #[test]
    fn doubling_albedo_doubles_single_bounce_response(points in arb_scene(4)) {
        let p = grid((-0.5, -0.5), 0.5, (3, 3), GridLabel::Projector);
        let c = grid((-0.5, -0.5), 0.5, (3, 3), GridLabel::Camera);
        let halved: Vec<_> = points.iter().map(|s| ScenePoint { albedo: s.albedo / 2.0, ..*s }).collect();
        let tb = timebase();
        let full = simulate_response(&Scene::new(points, 1, vec![]).unwrap(), &p, &c, &tb, &c1()).unwrap().response;
        let half = simulate_response(&Scene::new(halved, 1, vec![]).unwrap(), &p, &c, &tb, &c1()).unwrap().response;
        let doubled: Vec<f64> = half.values().iter().map(|v| 2.0 * v).collect();
        prop_assert_eq!(full.values(), &doubled[..]);
    }

    #[test]
    fn earliest_bin_matches_shortest_path(points in arb_scene(4), bounces in 1usize..=3) {
        let p = grid((-0.5, -0.5), 0.5, (3, 3), GridLabel::Projector);
        let c = grid((-0.5, -0.5), 0.5, (3, 3), GridLabel::Camera);
        // facing-wall normals keep every geometric factor positive
        let points: Vec<_> = points.iter().map(|s| ScenePoint::facing_wall(s.position, s.albedo).unwrap()).collect();
        let scene = Scene::new(points.clone(), bounces, vec![]).unwrap();
        let tb = timebase();
        let h = simulate_response(&scene, &p, &c, &tb, &c1()).unwrap().response;
        let mut shortest = f64::INFINITY;
        for xp in p.points() {
            for xc in c.points() {
                for chain in enumerate_chains(points.len(), bounces) {
                    let mut len = xp.distance(points[chain[0]].position);
                    for w in chain.windows(2) {
                        len += points[w[0]].position.distance(points[w[1]].position);
                    }
                    len += points[*chain.last().unwrap()].position.distance(*xc);
                    shortest = shortest.min(len);
                }
            }
        }
        let [n_p, n_c, n_t] = h.shape();
        let earliest = (0..n_p)
            .flat_map(|i| (0..n_c).map(move |j| (i, j)))
            .filter_map(|(i, j)| h.series(i, j).iter().position(|v| *v > 0.0))
            .min()
            .unwrap();
        let expected = (shortest / tb.bin_width).floor() as usize;
        prop_assert!(expected < n_t);
        prop_assert_eq!(earliest, expected);
    }
}
