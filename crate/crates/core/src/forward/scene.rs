use crate::error::{NlosError, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;

/// A scatterer in the hidden volume.
///
/// Reflectance is Lambertian blended with a Phong lobe about the mirror direction:
/// `albedo * ((1 - gloss_weight) + gloss_weight * cos(alpha)^gloss_exponent)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePoint<T> {
    pub position: Vec3<T>,
    pub albedo: T,
    pub normal: Vec3<T>,
    pub gloss_weight: T,
    pub gloss_exponent: T,
}

impl<T: Real> ScenePoint<T> {
    pub fn new(position: Vec3<T>, albedo: T, normal: Vec3<T>, gloss_weight: T, gloss_exponent: T) -> Result<Self> {
        let p = Self { position, albedo, normal, gloss_weight, gloss_exponent };
        p.validate()?;
        Ok(p)
    }

    /// Diffuse scatterer facing the relay wall (normal -z).
    pub fn facing_wall(position: Vec3<T>, albedo: T) -> Result<Self> {
        Self::new(position, albedo, Vec3::new(T::zero(), T::zero(), -T::one()), T::zero(), T::one())
    }

    fn validate(&self) -> Result<()> {
        if !(T::zero()..=T::one()).contains(&self.albedo) {
            return Err(NlosError::Parameter(format!("albedo must lie in [0, 1], got {}", self.albedo)));
        }
        if !(T::zero()..=T::one()).contains(&self.gloss_weight) {
            return Err(NlosError::Parameter(format!("gloss weight must lie in [0, 1], got {}", self.gloss_weight)));
        }
        if !(self.gloss_exponent >= T::one()) {
            return Err(NlosError::Parameter(format!("gloss exponent must be >= 1, got {}", self.gloss_exponent)));
        }
        let tol = (T::epsilon() * T::lit(64.0)).max(T::lit(1e-12));
        if (self.normal.norm() - T::one()).abs() > tol {
            return Err(NlosError::Parameter("scatterer normal must have unit length".into()));
        }
        if !self.position.is_finite() {
            return Err(NlosError::Parameter("scatterer position must be finite".into()));
        }
        Ok(())
    }

    /// Reflectance for light arriving along `incoming` (propagation direction, unit)
    /// and leaving along `outgoing` (unit).
    pub(crate) fn reflectance(&self, incoming: Vec3<T>, outgoing: Vec3<T>) -> T {
        let diffuse = T::one() - self.gloss_weight;
        if self.gloss_weight == T::zero() {
            return self.albedo * diffuse;
        }
        let mirror = incoming - self.normal * (T::lit(2.0) * incoming.dot(self.normal));
        let cos_alpha = mirror.dot(outgoing).max(T::zero());
        self.albedo * (diffuse + self.gloss_weight * cos_alpha.powf(self.gloss_exponent))
    }
}

/// Opaque rectangle `corner + a*edge_u + b*edge_v`, `a, b` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occluder<T> {
    pub corner: Vec3<T>,
    pub edge_u: Vec3<T>,
    pub edge_v: Vec3<T>,
}

impl<T: Real> Occluder<T> {
    pub fn new(corner: Vec3<T>, edge_u: Vec3<T>, edge_v: Vec3<T>) -> Result<Self> {
        if edge_u.cross(edge_v).norm() <= T::epsilon() {
            return Err(NlosError::Geometry("occluder edges are parallel".into()));
        }
        Ok(Self { corner, edge_u, edge_v })
    }

    /// True when the open segment `a -> b` crosses the rectangle.
    pub fn blocks(&self, a: Vec3<T>, b: Vec3<T>) -> bool {
        let n = self.edge_u.cross(self.edge_v);
        let d = b - a;
        let denom = n.dot(d);
        if denom.abs() <= T::epsilon() * n.norm() * d.norm() {
            return false;
        }
        let t = n.dot(self.corner - a) / denom;
        let eps = T::lit(1e-9);
        if t <= eps || t >= T::one() - eps {
            return false;
        }
        let q = a + d * t - self.corner;
        let uu = self.edge_u.dot(self.edge_u);
        let vv = self.edge_v.dot(self.edge_v);
        let uv = self.edge_u.dot(self.edge_v);
        let qu = q.dot(self.edge_u);
        let qv = q.dot(self.edge_v);
        let det = uu * vv - uv * uv;
        let alpha = (qu * vv - qv * uv) / det;
        let beta = (qv * uu - qu * uv) / det;
        (T::zero()..=T::one()).contains(&alpha) && (T::zero()..=T::one()).contains(&beta)
    }
}

/// Hidden scene: scatterers, bounce budget and occluders.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene<T> {
    pub points: Vec<ScenePoint<T>>,
    pub max_bounces: usize,
    pub occluders: Vec<Occluder<T>>,
}

pub const MAX_BOUNCES: usize = 3;

impl<T: Real> Scene<T> {
    pub fn new(points: Vec<ScenePoint<T>>, max_bounces: usize, occluders: Vec<Occluder<T>>) -> Result<Self> {
        if !(1..=MAX_BOUNCES).contains(&max_bounces) {
            return Err(NlosError::Parameter(format!(
                "max_bounces must lie in [1, {MAX_BOUNCES}], got {max_bounces}"
            )));
        }
        if let Some(i) = points.iter().position(|p| !(p.position.z > T::zero())) {
            return Err(NlosError::Geometry(format!("scatterer {i} is not in front of the relay wall (z > 0)")));
        }
        Ok(Self { points, max_bounces, occluders })
    }

    pub fn empty() -> Self {
        Self { points: Vec::new(), max_bounces: 1, occluders: Vec::new() }
    }

    /// Every ordered chain of scatterer indices with 1..=max_bounces entries and no
    /// immediate repeats.
    pub fn chains(&self) -> Vec<Vec<usize>> {
        let n = self.points.len();
        let mut out = Vec::new();
        let mut frontier: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for _ in 0..self.max_bounces {
            out.extend(frontier.iter().cloned());
            let mut next = Vec::new();
            for chain in &frontier {
                let last = *chain.last().expect("non-empty chain");
                for j in (0..n).filter(|&j| j != last) {
                    let mut c = chain.clone();
                    c.push(j);
                    next.push(c);
                }
            }
            frontier = next;
        }
        out
    }
}
