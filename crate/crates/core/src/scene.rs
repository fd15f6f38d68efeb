//! Workspace geometry, obstacles, points of interest and the sensor model.
//!
//! Everything here is immutable once built and every predicate is a pure
//! function of its inputs, so a [`Scene`] can be shared freely across threads.
//!
//! Points are stored as `[f64; 3]`. Planar scenes keep `z = 0` and ignore the
//! third axis in every test.

use crate::coverage::CoverageSet;
use thiserror::Error;

pub type Point = [f64; 3];

/// Part of a segment, measured from the sensor, that may block a POI.
/// The last sliver before the POI is ignored so POIs lying exactly on an
/// obstacle surface stay visible from the side they face.
const OCCLUSION_END: f64 = 1.0 - 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("workspace dimension must be 2 or 3, got {0}")]
    BadDimension(usize),
    #[error("degenerate workspace bounds on axis {axis}: [{lower}, {upper}]")]
    DegenerateBounds { axis: usize, lower: f64, upper: f64 },
    #[error("obstacle {index}: {reason}")]
    BadObstacle { index: usize, reason: String },
    #[error("POI {index} at {point:?} lies outside the workspace bounds")]
    PoiOutOfBounds { index: usize, point: Point },
    #[error("invalid sensor: {0}")]
    BadSensor(String),
    #[error("point {0:?} lies outside the workspace bounds")]
    OutOfBounds(Point),
    #[error("motion endpoint {0:?} is in collision")]
    InvalidEndpoint(Point),
    #[error("collision resolution must be positive, got {0}")]
    BadResolution(f64),
}

/// Axis-aligned workspace box in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    dim: usize,
    lower: Point,
    upper: Point,
}

impl Workspace {
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self, SceneError> {
        let dim = lower.len();
        if !(dim == 2 || dim == 3) || upper.len() != dim {
            return Err(SceneError::BadDimension(dim.max(upper.len())));
        }
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for axis in 0..dim {
            if !(lower[axis] < upper[axis]) {
                return Err(SceneError::DegenerateBounds {
                    axis,
                    lower: lower[axis],
                    upper: upper[axis],
                });
            }
            lo[axis] = lower[axis];
            hi[axis] = upper[axis];
        }
        Ok(Workspace {
            dim,
            lower: lo,
            upper: hi,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.dim]
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|a| p[a] >= self.lower[a] && p[a] <= self.upper[a])
    }

    /// Shortest side length of the box.
    pub fn shortest_extent(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.upper[a] - self.lower[a])
            .fold(f64::INFINITY, f64::min)
    }

    fn contains_ball(&self, p: &Point, radius: f64) -> bool {
        (0..self.dim).all(|a| p[a] - radius >= self.lower[a] && p[a] + radius <= self.upper[a])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Obstacle {
    Sphere { center: Point, radius: f64 },
    Box { min: Point, max: Point },
}

impl Obstacle {
    fn validate(&self, dim: usize, index: usize) -> Result<(), SceneError> {
        let bad = |reason: &str| SceneError::BadObstacle {
            index,
            reason: reason.to_string(),
        };
        match self {
            Obstacle::Sphere { radius, .. } if !(*radius > 0.0) => {
                Err(bad("radius must be positive"))
            }
            Obstacle::Box { min, max } if (0..dim).any(|a| !(min[a] < max[a])) => {
                Err(bad("box min corner must be below max corner on every axis"))
            }
            _ => Ok(()),
        }
    }

    /// Squared distance from `p` to the solid obstacle (0 inside).
    fn distance_sq(&self, p: &Point, dim: usize) -> f64 {
        match self {
            Obstacle::Sphere { center, radius } => {
                let d = dist(p, center, dim) - radius;
                if d <= 0.0 {
                    0.0
                } else {
                    d * d
                }
            }
            Obstacle::Box { min, max } => (0..dim)
                .map(|a| {
                    let d = (min[a] - p[a]).max(p[a] - max[a]).max(0.0);
                    d * d
                })
                .sum(),
        }
    }

    fn in_collision(&self, p: &Point, radius: f64, dim: usize) -> bool {
        match self {
            Obstacle::Sphere { center, radius: r } => dist(p, center, dim) <= r + radius,
            Obstacle::Box { .. } => self.distance_sq(p, dim) <= radius * radius,
        }
    }

    /// Does the segment `a + s (b - a)`, `s ∈ [0, s_max]`, pass through the obstacle?
    fn blocks_segment(&self, a: &Point, b: &Point, s_max: f64, dim: usize) -> bool {
        match self {
            Obstacle::Sphere { center, radius } => {
                // Closest point of the truncated segment to the center; quadratic in s.
                let mut dd = 0.0;
                let mut dc = 0.0;
                for k in 0..dim {
                    let d = b[k] - a[k];
                    dd += d * d;
                    dc += d * (center[k] - a[k]);
                }
                let s = if dd > 0.0 {
                    (dc / dd).clamp(0.0, s_max)
                } else {
                    0.0
                };
                let mut q = [0.0; 3];
                for k in 0..dim {
                    q[k] = a[k] + s * (b[k] - a[k]);
                }
                dist(&q, center, dim) < *radius
            }
            Obstacle::Box { min, max } => {
                // Slab method.
                let mut t0: f64 = 0.0;
                let mut t1: f64 = s_max;
                for k in 0..dim {
                    let d = b[k] - a[k];
                    if d == 0.0 {
                        if a[k] < min[k] || a[k] > max[k] {
                            return false;
                        }
                    } else {
                        let mut lo = (min[k] - a[k]) / d;
                        let mut hi = (max[k] - a[k]) / d;
                        if lo > hi {
                            std::mem::swap(&mut lo, &mut hi);
                        }
                        t0 = t0.max(lo);
                        t1 = t1.min(hi);
                        if t0 >= t1 {
                            return false;
                        }
                    }
                }
                t0 < t1
            }
        }
    }
}

/// Sensor range/field-of-view model.
///
/// The field-of-view test accepts a POI when the angle between the viewing
/// direction and `poi - position` is at most `fov_half_angle`. A half-angle
/// of π (or a pose without a direction) makes the sensor omnidirectional.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSpec {
    pub range: f64,
    pub fov_half_angle: f64,
    pub occlusion_enabled: bool,
}

impl SensorSpec {
    pub fn omnidirectional(range: f64, occlusion_enabled: bool) -> Self {
        SensorSpec {
            range,
            fov_half_angle: std::f64::consts::PI,
            occlusion_enabled,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.range > 0.0) {
            return Err(SceneError::BadSensor(format!(
                "range must be positive, got {}",
                self.range
            )));
        }
        if !(self.fov_half_angle > 0.0 && self.fov_half_angle <= std::f64::consts::PI) {
            return Err(SceneError::BadSensor(format!(
                "fov_half_angle must lie in (0, pi], got {}",
                self.fov_half_angle
            )));
        }
        Ok(())
    }

    pub fn is_omnidirectional(&self) -> bool {
        self.fov_half_angle >= std::f64::consts::PI
    }
}

/// Sensor position plus optional unit viewing direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPose {
    pub position: Point,
    pub direction: Option<Point>,
}

/// Immutable inspection scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    workspace: Workspace,
    obstacles: Vec<Obstacle>,
    pois: Vec<Point>,
    sensor: SensorSpec,
}

impl Scene {
    pub fn new(
        workspace: Workspace,
        obstacles: Vec<Obstacle>,
        pois: Vec<Point>,
        sensor: SensorSpec,
    ) -> Result<Self, SceneError> {
        for (i, o) in obstacles.iter().enumerate() {
            o.validate(workspace.dim, i)?;
        }
        for (index, p) in pois.iter().enumerate() {
            if !workspace.contains(p) {
                return Err(SceneError::PoiOutOfBounds { index, point: *p });
            }
        }
        sensor.validate()?;
        Ok(Scene {
            workspace,
            obstacles,
            pois,
            sensor,
        })
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn pois(&self) -> &[Point] {
        &self.pois
    }

    pub fn num_pois(&self) -> usize {
        self.pois.len()
    }

    pub fn sensor(&self) -> &SensorSpec {
        &self.sensor
    }

    pub fn dim(&self) -> usize {
        self.workspace.dim
    }

    /// Collision test for a robot ball of `robot_radius` centered at `p`.
    pub fn is_collision_free(&self, p: &Point, robot_radius: f64) -> Result<bool, SceneError> {
        if !self.workspace.contains(p) {
            return Err(SceneError::OutOfBounds(*p));
        }
        Ok(self.point_free(p, robot_radius))
    }

    fn point_free(&self, p: &Point, robot_radius: f64) -> bool {
        self.workspace.contains_ball(p, robot_radius)
            && !self
                .obstacles
                .iter()
                .any(|o| o.in_collision(p, robot_radius, self.workspace.dim))
    }

    /// Checks the straight segment `a → b` at spacing no larger than `resolution`.
    pub fn validate_segment(
        &self,
        a: &Point,
        b: &Point,
        robot_radius: f64,
        resolution: f64,
    ) -> Result<bool, SceneError> {
        self.validate_segment_counted(a, b, robot_radius, resolution)
            .map(|(ok, _)| ok)
    }

    /// Like [`Scene::validate_segment`], also returning how many interior
    /// samples were collision-checked.
    ///
    /// Samples sit at dyadic fractions `i / 2^k` with `k` the smallest level
    /// whose spacing is within `resolution`, checked coarse level first.
    /// A finer resolution checks a superset of the samples of a coarser one,
    /// and the endpoints are put in a canonical order so the result does not
    /// depend on direction.
    pub fn validate_segment_counted(
        &self,
        a: &Point,
        b: &Point,
        robot_radius: f64,
        resolution: f64,
    ) -> Result<(bool, u64), SceneError> {
        if !(resolution > 0.0) {
            return Err(SceneError::BadResolution(resolution));
        }
        for p in [a, b] {
            if !self.is_collision_free(p, robot_radius)? {
                return Err(SceneError::InvalidEndpoint(*p));
            }
        }
        let (a, b) = if lex_le(a, b) { (a, b) } else { (b, a) };
        let dim = self.workspace.dim;
        let length = dist(a, b, dim);
        let mut levels = 0u32;
        while length / 2f64.powi(levels as i32) > resolution && levels < 48 {
            levels += 1;
        }
        let mut checked = 0u64;
        for level in 1..=levels {
            let denom = 2f64.powi(level as i32);
            let count = 1u64 << (level - 1);
            for j in 0..count {
                let t = (2 * j + 1) as f64 / denom;
                let mut q = [0.0; 3];
                for k in 0..dim {
                    q[k] = a[k] + t * (b[k] - a[k]);
                }
                checked += 1;
                if !self.point_free(&q, robot_radius) {
                    return Ok((false, checked));
                }
            }
        }
        Ok((true, checked))
    }

    /// POIs seen from `pose`.
    pub fn visible_pois(&self, pose: &SensorPose) -> CoverageSet {
        let dim = self.workspace.dim;
        let mut out = CoverageSet::new(self.pois.len());
        let cos_half = self.sensor.fov_half_angle.cos();
        let cone = if self.sensor.is_omnidirectional() {
            None
        } else {
            pose.direction
        };
        let range_sq = self.sensor.range * self.sensor.range;
        for (i, poi) in self.pois.iter().enumerate() {
            let mut d = [0.0; 3];
            let mut len_sq = 0.0;
            for k in 0..dim {
                d[k] = poi[k] - pose.position[k];
                len_sq += d[k] * d[k];
            }
            if len_sq > range_sq {
                continue;
            }
            if let Some(dir) = cone {
                if len_sq > 0.0 {
                    let dot: f64 = (0..dim).map(|k| d[k] * dir[k]).sum();
                    let dir_len: f64 = (0..dim).map(|k| dir[k] * dir[k]).sum::<f64>().sqrt();
                    if dot < len_sq.sqrt() * dir_len * cos_half {
                        continue;
                    }
                }
            }
            if self.sensor.occlusion_enabled
                && self
                    .obstacles
                    .iter()
                    .any(|o| o.blocks_segment(&pose.position, poi, OCCLUSION_END, dim))
            {
                continue;
            }
            out.insert(i);
        }
        out
    }
}

#[inline]
pub(crate) fn dist(a: &Point, b: &Point, dim: usize) -> f64 {
    (0..dim)
        .map(|k| (a[k] - b[k]) * (a[k] - b[k]))
        .sum::<f64>()
        .sqrt()
}

fn lex_le(a: &Point, b: &Point) -> bool {
    for k in 0..3 {
        if a[k] < b[k] {
            return true;
        }
        if a[k] > b[k] {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ws2(lo: f64, hi: f64) -> Workspace {
        Workspace::new(&[lo, lo], &[hi, hi]).unwrap()
    }

    fn omni(range: f64, occlusion: bool) -> SensorSpec {
        SensorSpec::omnidirectional(range, occlusion)
    }

    fn pose(x: f64, y: f64) -> SensorPose {
        SensorPose {
            position: [x, y, 0.0],
            direction: None,
        }
    }

    fn sphere(x: f64, y: f64, r: f64) -> Obstacle {
        Obstacle::Sphere {
            center: [x, y, 0.0],
            radius: r,
        }
    }

    #[test]
    fn collision_examples() {
        let empty = Scene::new(ws2(-5.0, 5.0), vec![], vec![], omni(1.0, false)).unwrap();
        assert!(empty.is_collision_free(&[1.0, 2.0, 0.0], 0.0).unwrap());

        let s = Scene::new(
            ws2(-5.0, 5.0),
            vec![sphere(0.0, 0.0, 1.0)],
            vec![],
            omni(1.0, false),
        )
        .unwrap();
        assert!(!s.is_collision_free(&[0.5, 0.0, 0.0], 0.0).unwrap());

        let b = Scene::new(
            ws2(-5.0, 5.0),
            vec![Obstacle::Box {
                min: [0.0, 0.0, 0.0],
                max: [1.0, 1.0, 0.0],
            }],
            vec![],
            omni(1.0, false),
        )
        .unwrap();
        // distance from (1.05, 0.5) to the box is 0.05
        assert!(!b.is_collision_free(&[1.05, 0.5, 0.0], 0.1).unwrap());
        assert!(b.is_collision_free(&[1.05, 0.5, 0.0], 0.04).unwrap());

        assert_eq!(
            s.is_collision_free(&[6.0, 0.0, 0.0], 0.0),
            Err(SceneError::OutOfBounds([6.0, 0.0, 0.0]))
        );
        // inside bounds but the ball sticks out
        assert!(!empty.is_collision_free(&[4.95, 0.0, 0.0], 0.1).unwrap());
    }

    #[test]
    fn segment_examples() {
        let empty = Scene::new(ws2(-5.0, 5.0), vec![], vec![], omni(1.0, false)).unwrap();
        assert!(empty
            .validate_segment(&[-4.0, -4.0, 0.0], &[4.0, 3.0, 0.0], 0.0, 0.01)
            .unwrap());

        let s = Scene::new(
            ws2(-5.0, 5.0),
            vec![sphere(0.0, 0.0, 1.0)],
            vec![],
            omni(1.0, false),
        )
        .unwrap();
        assert!(!s
            .validate_segment(&[-2.0, 0.0, 0.0], &[2.0, 0.0, 0.0], 0.0, 0.5)
            .unwrap());
        assert_eq!(
            s.validate_segment(&[0.0, 0.0, 0.0], &[2.0, 0.0, 0.0], 0.0, 0.5),
            Err(SceneError::InvalidEndpoint([0.0, 0.0, 0.0]))
        );
        assert!(matches!(
            s.validate_segment(&[-2.0, 0.0, 0.0], &[2.0, 0.0, 0.0], 0.0, 0.0),
            Err(SceneError::BadResolution(_))
        ));
    }

    #[test]
    fn segment_near_sphere_agrees_with_dense_oracle() {
        // Passes 0.01 m above the sphere surface.
        let s = Scene::new(
            ws2(-5.0, 5.0),
            vec![sphere(0.0, 0.0, 1.0)],
            vec![],
            omni(1.0, false),
        )
        .unwrap();
        let a = [-2.0, 1.01, 0.0];
        let b = [2.0, 1.01, 0.0];
        let ok = s.validate_segment(&a, &b, 0.0, 0.005).unwrap();
        // Independent check: uniform sampling at 10x finer spacing.
        let n = (4.0 / 0.0005) as usize;
        let dense_ok = (0..=n).all(|i| {
            let t = i as f64 / n as f64;
            let p = [a[0] + t * (b[0] - a[0]), a[1], 0.0];
            (p[0] * p[0] + p[1] * p[1]).sqrt() > 1.0
        });
        assert!(ok);
        assert_eq!(ok, dense_ok);
    }

    #[test]
    fn visibility_examples() {
        let s = Scene::new(
            ws2(-5.0, 5.0),
            vec![],
            vec![[1.0, 0.0, 0.0], [3.0, 0.0, 0.0]],
            omni(2.0, false),
        )
        .unwrap();
        assert_eq!(
            s.visible_pois(&pose(0.0, 0.0)).iter().collect::<Vec<_>>(),
            vec![0]
        );
        assert!(s.visible_pois(&pose(-4.5, 4.5)).is_empty());

        // POI behind a sphere: the pose→POI segment crosses it at x ∈ [0.5, 1.5].
        let occ = Scene::new(
            ws2(-5.0, 5.0),
            vec![sphere(1.0, 0.0, 0.5)],
            vec![[2.0, 0.0, 0.0]],
            omni(5.0, true),
        )
        .unwrap();
        assert!(occ.visible_pois(&pose(0.0, 0.0)).is_empty());
        // Same geometry with occlusion off.
        let no_occ = Scene::new(
            ws2(-5.0, 5.0),
            vec![sphere(1.0, 0.0, 0.5)],
            vec![[2.0, 0.0, 0.0]],
            omni(5.0, false),
        )
        .unwrap();
        assert_eq!(no_occ.visible_pois(&pose(0.0, 0.0)).count(), 1);
    }

    #[test]
    fn surface_pois_visible_from_their_side_only() {
        let s = Scene::new(
            ws2(-5.0, 5.0),
            vec![Obstacle::Box {
                min: [0.0, 0.0, 0.0],
                max: [1.0, 1.0, 0.0],
            }],
            vec![[1.0, 0.5, 0.0], [0.0, 0.5, 0.0]],
            omni(5.0, true),
        )
        .unwrap();
        let seen = s.visible_pois(&pose(3.0, 0.5));
        assert!(seen.contains(0));
        assert!(!seen.contains(1));
    }

    #[test]
    fn field_of_view_cone() {
        let sensor = SensorSpec {
            range: 10.0,
            fov_half_angle: 47f64.to_radians(),
            occlusion_enabled: false,
        };
        let s = Scene::new(
            ws2(-5.0, 5.0),
            vec![],
            vec![[2.0, 0.0, 0.0], [2.0, 2.5, 0.0], [-2.0, 0.0, 0.0]],
            sensor,
        )
        .unwrap();
        let p = SensorPose {
            position: [0.0, 0.0, 0.0],
            direction: Some([1.0, 0.0, 0.0]),
        };
        // 51.3 degrees off axis for the second POI
        assert_eq!(s.visible_pois(&p).iter().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            Workspace::new(&[0.0], &[1.0]),
            Err(SceneError::BadDimension(1))
        ));
        assert!(matches!(
            Workspace::new(&[0.0, 1.0], &[1.0, 1.0]),
            Err(SceneError::DegenerateBounds { axis: 1, .. })
        ));
        assert!(matches!(
            Scene::new(
                ws2(0.0, 1.0),
                vec![sphere(0.5, 0.5, 0.0)],
                vec![],
                omni(1.0, false)
            ),
            Err(SceneError::BadObstacle { index: 0, .. })
        ));
        assert!(matches!(
            Scene::new(
                ws2(0.0, 1.0),
                vec![],
                vec![[0.5, 0.5, 0.0], [2.0, 0.0, 0.0]],
                omni(1.0, false)
            ),
            Err(SceneError::PoiOutOfBounds { index: 1, .. })
        ));
        assert!(Scene::new(ws2(0.0, 1.0), vec![], vec![], omni(0.0, false)).is_err());
    }

    fn random_scene() -> impl Strategy<Value = Scene> {
        (
            proptest::collection::vec((-4.0..4.0f64, -4.0..4.0f64, 0.2..1.0f64), 0..4),
            proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..12),
        )
            .prop_map(|(obs, pois)| {
                Scene::new(
                    ws2(-5.0, 5.0),
                    obs.into_iter().map(|(x, y, r)| sphere(x, y, r)).collect(),
                    pois.into_iter().map(|(x, y)| [x, y, 0.0]).collect(),
                    omni(3.0, true),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn visibility_is_monotone_in_range(scene in random_scene(), x in -5.0..5.0f64, y in -5.0..5.0f64, extra in 0.0..5.0f64) {
            let near = scene.visible_pois(&pose(x, y));
            let mut bigger = scene.clone();
            bigger.sensor.range += extra;
            let far = bigger.visible_pois(&pose(x, y));
            prop_assert!(far.is_superset(&near));
            prop_assert_eq!(near.width(), scene.num_pois());
            prop_assert_eq!(scene.visible_pois(&pose(x, y)), near);
        }

        #[test]
        fn segment_check_symmetric_and_refinement_monotone(
            scene in random_scene(),
            a in (-5.0..5.0f64, -5.0..5.0f64),
            b in (-5.0..5.0f64, -5.0..5.0f64),
            res in 0.05..2.0f64,
        ) {
            let a = [a.0, a.1, 0.0];
            let b = [b.0, b.1, 0.0];
            prop_assume!(scene.is_collision_free(&a, 0.0).unwrap() && scene.is_collision_free(&b, 0.0).unwrap());
            let ab = scene.validate_segment(&a, &b, 0.0, res).unwrap();
            let ba = scene.validate_segment(&b, &a, 0.0, res).unwrap();
            prop_assert_eq!(ab, ba);
            let fine = scene.validate_segment(&a, &b, 0.0, res / 3.0).unwrap();
            prop_assert!(ab || !fine, "finer resolution flipped false to true");
        }
    }
}
