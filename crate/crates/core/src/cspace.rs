//! Configurations, robot models, the path metric and primitive samplers.

use crate::scene::{Point, Scene, SceneError, SensorPose, Workspace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CspaceError {
    #[error("configuration has {got} values, robot model expects {expected}")]
    ModelMismatch { expected: usize, got: usize },
    #[error("interpolation parameter {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("robot radius must be non-negative, got {0}")]
    BadRadius(f64),
    #[error("{kind} robots need a {needed}D workspace, got {got}D")]
    WorkspaceMismatch {
        kind: RobotKind,
        needed: usize,
        got: usize,
    },
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut w = a - two_pi * ((a + PI) / two_pi).floor();
    if w <= -PI {
        w += two_pi;
    }
    if w > PI {
        w -= two_pi;
    }
    w
}

/// A point in configuration space; the layout is fixed by the [`RobotModel`].
#[derive(Clone, PartialEq)]
pub struct Configuration(SmallVec<[f64; 5]>);

impl Configuration {
    pub fn new(values: &[f64]) -> Self {
        Configuration(SmallVec::from_slice(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Configuration").field(&&self.0[..]).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobotKind {
    /// `(x, y)` point robot in the plane.
    Planar2D,
    /// `(x, y, z, yaw, pitch)`; the sensor looks along yaw/pitch.
    Spatial3DYawPitch,
}

impl fmt::Display for RobotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RobotKind::Planar2D => "planar2d",
            RobotKind::Spatial3DYawPitch => "spatial3d_yaw_pitch",
        })
    }
}

impl RobotKind {
    pub fn translational_dims(self) -> usize {
        match self {
            RobotKind::Planar2D => 2,
            RobotKind::Spatial3DYawPitch => 3,
        }
    }

    pub fn config_len(self) -> usize {
        match self {
            RobotKind::Planar2D => 2,
            RobotKind::Spatial3DYawPitch => 5,
        }
    }
}

/// Robot occupancy (a ball) and metric weights.
///
/// Length is the Euclidean translation plus `yaw_weight·|Δyaw|` plus
/// `pitch_weight·|Δpitch|`, each angle difference taken along the shortest arc.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub kind: RobotKind,
    pub radius: f64,
    pub yaw_weight: f64,
    pub pitch_weight: f64,
    /// Sampling range for pitch; yaw always spans the full circle.
    pub pitch_limits: (f64, f64),
}

impl RobotModel {
    pub fn planar(radius: f64) -> Self {
        RobotModel {
            kind: RobotKind::Planar2D,
            radius,
            yaw_weight: 1.0,
            pitch_weight: 1.0,
            pitch_limits: (-PI / 2.0, PI / 2.0),
        }
    }

    pub fn spatial(radius: f64) -> Self {
        RobotModel {
            kind: RobotKind::Spatial3DYawPitch,
            ..Self::planar(radius)
        }
    }

    pub fn validate(&self, workspace: &Workspace) -> Result<(), CspaceError> {
        if !(self.radius >= 0.0) {
            return Err(CspaceError::BadRadius(self.radius));
        }
        let needed = self.kind.translational_dims();
        if workspace.dim() != needed {
            return Err(CspaceError::WorkspaceMismatch {
                kind: self.kind,
                needed,
                got: workspace.dim(),
            });
        }
        Ok(())
    }

    pub fn check(&self, q: &Configuration) -> Result<(), CspaceError> {
        let expected = self.kind.config_len();
        if q.len() != expected {
            return Err(CspaceError::ModelMismatch {
                expected,
                got: q.len(),
            });
        }
        Ok(())
    }

    /// Builds a configuration, wrapping the angular components.
    pub fn configuration(&self, values: &[f64]) -> Result<Configuration, CspaceError> {
        let mut q = Configuration::new(values);
        self.check(&q)?;
        for a in self.kind.translational_dims()..q.len() {
            q.0[a] = wrap_angle(q.0[a]);
        }
        Ok(q)
    }

    pub fn occupancy_point(&self, q: &Configuration) -> Point {
        let v = q.values();
        match self.kind {
            RobotKind::Planar2D => [v[0], v[1], 0.0],
            RobotKind::Spatial3DYawPitch => [v[0], v[1], v[2]],
        }
    }

    pub fn sensor_pose(&self, q: &Configuration) -> SensorPose {
        let v = q.values();
        match self.kind {
            RobotKind::Planar2D => SensorPose {
                position: [v[0], v[1], 0.0],
                direction: None,
            },
            RobotKind::Spatial3DYawPitch => {
                let (yaw, pitch) = (v[3], v[4]);
                SensorPose {
                    position: [v[0], v[1], v[2]],
                    direction: Some([
                        pitch.cos() * yaw.cos(),
                        pitch.cos() * yaw.sin(),
                        pitch.sin(),
                    ]),
                }
            }
        }
    }

    fn angle_weight(&self, axis: usize) -> f64 {
        if axis == 3 {
            self.yaw_weight
        } else {
            self.pitch_weight
        }
    }

    pub fn distance(&self, a: &Configuration, b: &Configuration) -> Result<f64, CspaceError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.distance_unchecked(a, b))
    }

    pub(crate) fn distance_unchecked(&self, a: &Configuration, b: &Configuration) -> f64 {
        let (a, b) = (a.values(), b.values());
        let t = self.kind.translational_dims();
        let trans = (0..t)
            .map(|k| (a[k] - b[k]) * (a[k] - b[k]))
            .sum::<f64>()
            .sqrt();
        let ang: f64 = (t..a.len())
            .map(|k| self.angle_weight(k) * wrap_angle(b[k] - a[k]).abs())
            .sum();
        trans + ang
    }

    /// Lower bound on `distance` from the translational part alone.
    pub(crate) fn translational_distance(&self, a: &Configuration, b: &Configuration) -> f64 {
        let t = self.kind.translational_dims();
        let (a, b) = (a.values(), b.values());
        (0..t)
            .map(|k| (a[k] - b[k]) * (a[k] - b[k]))
            .sum::<f64>()
            .sqrt()
    }

    pub fn interpolate(
        &self,
        a: &Configuration,
        b: &Configuration,
        t: f64,
    ) -> Result<Configuration, CspaceError> {
        self.check(a)?;
        self.check(b)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(CspaceError::OutOfRange(t));
        }
        Ok(self.interpolate_unchecked(a, b, t))
    }

    fn interpolate_unchecked(&self, a: &Configuration, b: &Configuration, t: f64) -> Configuration {
        if t == 0.0 {
            return a.clone();
        }
        if t == 1.0 {
            return b.clone();
        }
        let tdims = self.kind.translational_dims();
        let (va, vb) = (a.values(), b.values());
        let mut out = a.clone();
        for k in 0..va.len() {
            out.0[k] = if k < tdims {
                va[k] + t * (vb[k] - va[k])
            } else {
                wrap_angle(va[k] + t * wrap_angle(vb[k] - va[k]))
            };
        }
        out
    }

    /// Moves from `near` toward `target` by at most `step`.
    pub fn steer(
        &self,
        near: &Configuration,
        target: &Configuration,
        step: f64,
    ) -> Result<Configuration, CspaceError> {
        let d = self.distance(near, target)?;
        if d <= step {
            return Ok(target.clone());
        }
        Ok(self.interpolate_unchecked(near, target, step / d))
    }

    /// Uniform sample over the workspace box and the angle ranges.
    pub fn sample_uniform<R: Rng + ?Sized>(
        &self,
        workspace: &Workspace,
        rng: &mut R,
    ) -> Configuration {
        self.sample_in(workspace.lower(), workspace.upper(), rng)
    }

    /// Uniform sample over explicit translational bounds; a zero-width
    /// interval pins that coordinate.
    pub fn sample_in<R: Rng + ?Sized>(
        &self,
        lower: &[f64],
        upper: &[f64],
        rng: &mut R,
    ) -> Configuration {
        let t = self.kind.translational_dims();
        let mut v: SmallVec<[f64; 5]> = SmallVec::new();
        for k in 0..t {
            let u: f64 = rng.random();
            v.push(lower[k] + (upper[k] - lower[k]) * u);
        }
        if self.kind == RobotKind::Spatial3DYawPitch {
            let u: f64 = rng.random();
            v.push(wrap_angle(-PI + 2.0 * PI * u));
            let u: f64 = rng.random();
            let (lo, hi) = self.pitch_limits;
            v.push(wrap_angle(lo + (hi - lo) * u));
        }
        Configuration(v)
    }

    pub fn is_collision_free(&self, scene: &Scene, q: &Configuration) -> Result<bool, SceneError> {
        scene.is_collision_free(&self.occupancy_point(q), self.radius)
    }

    /// Collision check of the interpolated motion `a → b`.
    pub fn validate_motion(
        &self,
        scene: &Scene,
        a: &Configuration,
        b: &Configuration,
        resolution: f64,
    ) -> Result<bool, SceneError> {
        self.validate_motion_counted(scene, a, b, resolution)
            .map(|(ok, _)| ok)
    }

    pub(crate) fn validate_motion_counted(
        &self,
        scene: &Scene,
        a: &Configuration,
        b: &Configuration,
        resolution: f64,
    ) -> Result<(bool, u64), SceneError> {
        // Occupancy depends on the translational part only, which interpolates linearly.
        scene.validate_segment_counted(
            &self.occupancy_point(a),
            &self.occupancy_point(b),
            self.radius,
            resolution,
        )
    }
}

/// Independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Sampling = 1,
    Acceptance = 2,
    Scenario = 3,
}

#[derive(Debug, Clone, Copy)]
pub struct RngStreams {
    seed: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        RngStreams { seed }
    }

    pub fn stream(&self, which: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(which as u64);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn planar() -> RobotModel {
        RobotModel::planar(0.0)
    }

    fn q(v: &[f64]) -> Configuration {
        Configuration::new(v)
    }

    fn yaw_q(yaw: f64) -> Configuration {
        q(&[0.0, 0.0, 0.0, yaw, 0.0])
    }

    #[test]
    fn distance_examples() {
        let m = planar();
        assert_eq!(m.distance(&q(&[0.0, 0.0]), &q(&[3.0, 4.0])).unwrap(), 5.0);
        assert_eq!(m.distance(&q(&[1.5, -2.0]), &q(&[1.5, -2.0])).unwrap(), 0.0);
        let s = RobotModel::spatial(0.0);
        let d = s.distance(&yaw_q(3.0), &yaw_q(-3.0)).unwrap();
        // shortest arc oracle: min(|Δ|, 2π - |Δ|)
        let oracle = f64::min(6.0, 2.0 * PI - 6.0);
        assert!((d - oracle).abs() < 1e-12);
        assert!((d - 0.283_185_307).abs() < 1e-8);
        assert_eq!(
            m.distance(&q(&[0.0, 0.0]), &q(&[0.0, 0.0, 1.0])),
            Err(CspaceError::ModelMismatch {
                expected: 2,
                got: 3
            })
        );
    }

    #[test]
    fn interpolate_examples() {
        let m = planar();
        let a = q(&[0.0, 0.0]);
        let b = q(&[2.0, 2.0]);
        assert_eq!(m.interpolate(&a, &b, 0.0).unwrap(), a);
        assert_eq!(m.interpolate(&a, &b, 1.0).unwrap(), b);
        assert_eq!(m.interpolate(&a, &b, 0.5).unwrap(), q(&[1.0, 1.0]));
        assert_eq!(
            m.interpolate(&a, &b, 1.5),
            Err(CspaceError::OutOfRange(1.5))
        );

        let s = RobotModel::spatial(0.0);
        let mid = s.interpolate(&yaw_q(3.0), &yaw_q(-3.0), 0.5).unwrap();
        assert!((mid.values()[3].abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-6.0) - (2.0 * PI - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn steer_examples() {
        let m = planar();
        let near = q(&[0.0, 0.0]);
        assert_eq!(
            m.steer(&near, &q(&[0.3, 0.4]), 1.0).unwrap(),
            q(&[0.3, 0.4])
        );
        assert_eq!(
            m.steer(&near, &q(&[10.0, 0.0]), 1.0).unwrap(),
            q(&[1.0, 0.0])
        );
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let ws = Workspace::new(&[0.0, 0.0], &[10.0, 5.0]).unwrap();
        let m = planar();
        let a = m.sample_uniform(&ws, &mut RngStreams::new(7).stream(Stream::Sampling));
        let b = m.sample_uniform(&ws, &mut RngStreams::new(7).stream(Stream::Sampling));
        assert_eq!(a, b);
        let golden = [9.921087752234984, 0.04525705136746938];
        assert_eq!(a.values(), &golden);
        let other = m.sample_uniform(&ws, &mut RngStreams::new(7).stream(Stream::Acceptance));
        assert_ne!(a, other);
    }

    #[test]
    fn sampling_means_near_midpoints() {
        let ws = Workspace::new(&[0.0, 0.0, 0.0], &[10.0, 4.0, 2.0]).unwrap();
        let m = RobotModel::spatial(0.0);
        let mut rng = RngStreams::new(1).stream(Stream::Sampling);
        let n = 10_000;
        let mut sums = [0.0; 5];
        for _ in 0..n {
            let s = m.sample_uniform(&ws, &mut rng);
            for (acc, v) in sums.iter_mut().zip(s.values()) {
                *acc += v;
            }
        }
        let mids = [5.0, 2.0, 1.0, 0.0, 0.0];
        let widths = [10.0, 4.0, 2.0, 2.0 * PI, PI];
        for k in 0..5 {
            let mean = sums[k] / n as f64;
            // within 5% of the interval width around the midpoint
            assert!(
                (mean - mids[k]).abs() <= 0.05 * widths[k],
                "axis {k}: mean {mean}"
            );
        }
    }

    #[test]
    fn degenerate_bound_pins_coordinate() {
        let m = planar();
        let mut rng = RngStreams::new(3).stream(Stream::Sampling);
        for _ in 0..100 {
            let s = m.sample_in(&[0.0, 2.5], &[1.0, 2.5], &mut rng);
            assert_eq!(s.values()[1], 2.5);
        }
    }

    fn spatial_config() -> impl Strategy<Value = Configuration> {
        (
            -5.0..5.0f64,
            -5.0..5.0f64,
            -5.0..5.0f64,
            -PI..PI,
            -PI / 2.0..PI / 2.0,
        )
            .prop_map(|(x, y, z, a, b)| q(&[x, y, z, a, b]))
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in spatial_config(), b in spatial_config(), c in spatial_config()) {
            let m = RobotModel::spatial(0.0);
            let ab = m.distance(&a, &b).unwrap();
            let bc = m.distance(&b, &c).unwrap();
            let ac = m.distance(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert!((ab - m.distance(&b, &a).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn steer_respects_step(a in spatial_config(), b in spatial_config(), step in 0.01..3.0f64) {
            let m = RobotModel::spatial(0.0);
            let s = m.steer(&a, &b, step).unwrap();
            prop_assert!(m.distance(&a, &s).unwrap() <= step + 1e-9);
        }
    }
}
