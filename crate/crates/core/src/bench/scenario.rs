//! Scenario files.
//!
//! A scenario is a UTF-8 text file of `key = value` lines grouped under
//! `[workspace]`, `[obstacles]`, `[pois]`, `[sensor]`, `[robot]` and
//! `[planner]` headers. `#` starts a comment. Vector values are
//! whitespace-separated numbers. Keys in `[obstacles]` and `[pois]` may
//! repeat; every other key may appear at most once. Unknown keys are errors.
//!
//! ```text
//! [workspace]
//! lower = 0 0
//! upper = 10 6
//!
//! [obstacles]
//! box = 2 2.6 8 3.4        # min corner, then max corner
//! sphere = 5 5 0.4         # center, then radius
//!
//! [pois]
//! box_surface = 2 2.5 8 3.5 12   # min, max, divisions per axis
//! ring = 5 1 0.6 8               # center, radius, count
//! point = 1 1
//!
//! [sensor]
//! range = 1.5
//! fov_half_angle = 3.141592653589793
//! occlusion = true
//!
//! [robot]
//! kind = planar2d
//! radius = 0.05
//! steer_step = 0.3
//! connect_radius = 1.2
//! start = 0.5 0.5
//!
//! [planner]
//! preset = bridge
//! n_max = 200
//! ```

use crate::cspace::{Configuration, RobotKind, RobotModel};
use crate::planner::{PlannerConfig, Variant};
use crate::roadmap::RoadmapParams;
use crate::scene::{Obstacle, Point, Scene, SceneError, SensorSpec, Workspace};
use crate::work::ClockMode;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{key}: {message}")]
    Semantic { key: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

fn semantic(key: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Semantic {
        key: key.into(),
        message: message.into(),
    }
}

/// A POI source, kept unexpanded so the file round-trips.
#[derive(Debug, Clone, PartialEq)]
pub enum PoiSpec {
    Point(Vec<f64>),
    /// `count` points evenly spaced on a circle in the xy plane.
    Ring {
        center: Vec<f64>,
        radius: f64,
        count: usize,
    },
    /// Lattice points with `divisions` cells per axis lying on the boundary of a box.
    BoxSurface {
        min: Vec<f64>,
        max: Vec<f64>,
        divisions: usize,
    },
}

impl PoiSpec {
    fn expand(&self, dim: usize, out: &mut Vec<Point>) {
        let point = |v: &[f64]| {
            let mut p = [0.0; 3];
            p[..v.len()].copy_from_slice(v);
            p
        };
        match self {
            PoiSpec::Point(v) => out.push(point(v)),
            PoiSpec::Ring {
                center,
                radius,
                count,
            } => {
                let c = point(center);
                for k in 0..*count {
                    let a = std::f64::consts::TAU * k as f64 / *count as f64;
                    out.push([c[0] + radius * a.cos(), c[1] + radius * a.sin(), c[2]]);
                }
            }
            PoiSpec::BoxSurface {
                min,
                max,
                divisions,
            } => {
                let n = *divisions;
                let at = |axis: usize, i: usize| {
                    min[axis] + (max[axis] - min[axis]) * i as f64 / n as f64
                };
                let zs = if dim == 3 { n } else { 0 };
                for k in 0..=zs {
                    for j in 0..=n {
                        for i in 0..=n {
                            let edge = |x: usize| x == 0 || x == n;
                            if !(edge(i) || edge(j) || (dim == 3 && edge(k))) {
                                continue;
                            }
                            let z = if dim == 3 { at(2, k) } else { 0.0 };
                            out.push([at(0, i), at(1, j), z]);
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotSpec {
    pub kind: RobotKind,
    pub radius: f64,
    pub steer_step: f64,
    pub connect_radius: f64,
    pub start: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerDefaults {
    pub p0: f64,
    pub eps0: f64,
    pub f: f64,
    pub p_accept: f64,
    pub omega: f64,
    pub n_max: u64,
    pub batch: usize,
    pub resolution: f64,
    pub budget_s: f64,
    pub seed: u64,
    pub variant: Variant,
    pub clock: ClockMode,
}

/// Hyperparameter sets for surface-like and cavity-like scenes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Bridge,
    Cavity,
}

impl Preset {
    /// `(p_accept, p0, eps0)`.
    pub fn values(self) -> (f64, f64, f64) {
        match self {
            Preset::Bridge => (0.05, 0.85, 10.0),
            Preset::Cavity => (0.1, 0.9, 15.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub obstacles: Vec<Obstacle>,
    pub pois: Vec<PoiSpec>,
    pub sensor: SensorSpec,
    pub robot: RobotSpec,
    pub planner: PlannerDefaults,
}

/// Validated objects built from a [`Scenario`].
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scene: Scene,
    pub model: RobotModel,
    pub start: Configuration,
    pub config: PlannerConfig,
}

const SECTIONS: [&str; 6] = [
    "workspace",
    "obstacles",
    "pois",
    "sensor",
    "robot",
    "planner",
];

fn keys_of(section: &str) -> &'static [&'static str] {
    match section {
        "workspace" => &["lower", "upper"],
        "obstacles" => &["sphere", "box"],
        "pois" => &["point", "ring", "box_surface"],
        "sensor" => &["range", "fov_half_angle", "occlusion"],
        "robot" => &["kind", "radius", "steer_step", "connect_radius", "start"],
        "planner" => &[
            "preset",
            "p0",
            "eps0",
            "f",
            "p_accept",
            "omega",
            "n_max",
            "batch",
            "resolution",
            "budget_s",
            "seed",
            "variant",
            "clock",
        ],
        _ => &[],
    }
}

fn repeatable(section: &str) -> bool {
    section == "obstacles" || section == "pois"
}

struct Entry {
    line: usize,
    section: &'static str,
    key: String,
    value: String,
}

impl Entry {
    fn err(&self, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Parse {
            line: self.line,
            message: format!("{}.{}: {}", self.section, self.key, message.into()),
        }
    }

    fn numbers(&self) -> Result<Vec<f64>, ScenarioError> {
        self.value
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| self.err(format!("{t:?} is not a finite number")))
            })
            .collect()
    }

    fn number(&self) -> Result<f64, ScenarioError> {
        match self.numbers()?.as_slice() {
            [x] => Ok(*x),
            _ => Err(self.err("expected one number")),
        }
    }

    fn integer(&self) -> Result<u64, ScenarioError> {
        self.value
            .trim()
            .parse()
            .map_err(|_| self.err(format!("{:?} is not a non-negative integer", self.value)))
    }

    fn boolean(&self) -> Result<bool, ScenarioError> {
        match self.value.trim() {
            "true" => Ok(true),
            "false" => Ok(false),
            v => Err(self.err(format!("{v:?} is not true or false"))),
        }
    }

    fn count(&self, x: f64) -> Result<usize, ScenarioError> {
        if x >= 1.0 && x.fract() == 0.0 && x < 1e7 {
            Ok(x as usize)
        } else {
            Err(self.err(format!("{x} is not a positive integer count")))
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Entry>, ScenarioError> {
    let mut section: Option<&'static str> = None;
    let mut seen: Vec<(&'static str, String)> = Vec::new();
    let mut entries = Vec::new();
    for (ix, raw) in text.lines().enumerate() {
        let line = ix + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let perr = |message: String| ScenarioError::Parse { line, message };
        if let Some(name) = body.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| perr(format!("malformed section header {body:?}")))?
                .trim();
            let s = SECTIONS
                .iter()
                .find(|s| **s == name)
                .ok_or_else(|| perr(format!("unknown section [{name}]")))?;
            section = Some(s);
            continue;
        }
        let sec = section.ok_or_else(|| perr("key outside of any section".into()))?;
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| perr(format!("expected key = value, got {body:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !keys_of(sec).contains(&key) {
            return Err(perr(format!("unknown key {key:?} in [{sec}]")));
        }
        if value.is_empty() {
            return Err(perr(format!("{sec}.{key} has no value")));
        }
        if !repeatable(sec) {
            if seen.iter().any(|(s, k)| *s == sec && k == key) {
                return Err(perr(format!("duplicate key {sec}.{key}")));
            }
            seen.push((sec, key.to_string()));
        }
        entries.push(Entry {
            line,
            section: sec,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(entries)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let entries = tokenize(text)?;
        let find = |sec: &str, key: &str| entries.iter().find(|e| e.section == sec && e.key == key);
        let require = |sec: &str, key: &str| {
            find(sec, key).ok_or_else(|| semantic(format!("{sec}.{key}"), "missing"))
        };

        let lower = require("workspace", "lower")?.numbers()?;
        let upper = require("workspace", "upper")?.numbers()?;
        let ws =
            Workspace::new(&lower, &upper).map_err(|e| semantic("workspace", e.to_string()))?;
        let dim = ws.dim();
        let extent = ws.shortest_extent();

        let mut obstacles = Vec::new();
        let mut pois = Vec::new();
        for e in &entries {
            let v = || e.numbers();
            match (e.section, e.key.as_str()) {
                ("obstacles", "sphere") => {
                    let v = v()?;
                    if v.len() != dim + 1 {
                        return Err(e.err(format!("expected {} numbers (center, radius)", dim + 1)));
                    }
                    obstacles.push(Obstacle::Sphere {
                        center: to_point(&v[..dim]),
                        radius: v[dim],
                    });
                }
                ("obstacles", "box") => {
                    let v = v()?;
                    if v.len() != 2 * dim {
                        return Err(e.err(format!("expected {} numbers (min, max)", 2 * dim)));
                    }
                    obstacles.push(Obstacle::Box {
                        min: to_point(&v[..dim]),
                        max: to_point(&v[dim..]),
                    });
                }
                ("pois", "point") => {
                    let v = v()?;
                    if v.len() != dim {
                        return Err(e.err(format!("expected {dim} numbers")));
                    }
                    pois.push(PoiSpec::Point(v));
                }
                ("pois", "ring") => {
                    let v = v()?;
                    if v.len() != dim + 2 {
                        return Err(e.err(format!(
                            "expected {} numbers (center, radius, count)",
                            dim + 2
                        )));
                    }
                    if !(v[dim] > 0.0) {
                        return Err(e.err("ring radius must be positive"));
                    }
                    pois.push(PoiSpec::Ring {
                        center: v[..dim].to_vec(),
                        radius: v[dim],
                        count: e.count(v[dim + 1])?,
                    });
                }
                ("pois", "box_surface") => {
                    let v = v()?;
                    if v.len() != 2 * dim + 1 {
                        return Err(e.err(format!(
                            "expected {} numbers (min, max, divisions)",
                            2 * dim + 1
                        )));
                    }
                    if (0..dim).any(|k| v[k] >= v[dim + k]) {
                        return Err(e.err("box min must be below max on every axis"));
                    }
                    pois.push(PoiSpec::BoxSurface {
                        min: v[..dim].to_vec(),
                        max: v[dim..2 * dim].to_vec(),
                        divisions: e.count(v[2 * dim])?,
                    });
                }
                _ => {}
            }
        }

        let mut sensor = SensorSpec::omnidirectional(require("sensor", "range")?.number()?, true);
        if let Some(e) = find("sensor", "fov_half_angle") {
            sensor.fov_half_angle = e.number()?;
        }
        if let Some(e) = find("sensor", "occlusion") {
            sensor.occlusion_enabled = e.boolean()?;
        }

        let kind = match find("robot", "kind").map(|e| (e, e.value.as_str())) {
            None | Some((_, "planar2d")) => RobotKind::Planar2D,
            Some((_, "spatial3d_yaw_pitch")) => RobotKind::Spatial3DYawPitch,
            Some((e, other)) => return Err(e.err(format!("unknown robot kind {other:?}"))),
        };
        let steer_step = match find("robot", "steer_step") {
            Some(e) => e.number()?,
            None => 0.1 * extent,
        };
        let robot = RobotSpec {
            kind,
            radius: find("robot", "radius")
                .map(Entry::number)
                .transpose()?
                .unwrap_or(0.0),
            steer_step,
            connect_radius: find("robot", "connect_radius")
                .map(Entry::number)
                .transpose()?
                .unwrap_or(4.0 * steer_step),
            start: require("robot", "start")?.numbers()?,
        };

        let preset = match find("planner", "preset").map(|e| (e, e.value.as_str())) {
            None | Some((_, "bridge")) => Preset::Bridge,
            Some((_, "cavity")) => Preset::Cavity,
            Some((e, other)) => return Err(e.err(format!("unknown preset {other:?}"))),
        };
        let (pa, p0, eps0) = preset.values();
        let num = |key: &str, default: f64| {
            find("planner", key)
                .map(Entry::number)
                .transpose()
                .map(|v| v.unwrap_or(default))
        };
        let int = |key: &str, default: u64| {
            find("planner", key)
                .map(Entry::integer)
                .transpose()
                .map(|v| v.unwrap_or(default))
        };
        let defaults = PlannerConfig::default();
        let variant = match find("planner", "variant") {
            Some(e) => Variant::parse(&e.value).map_err(|err| e.err(err.to_string()))?,
            None => defaults.variant,
        };
        let clock = match find("planner", "clock") {
            Some(e) => ClockMode::parse(&e.value).ok_or_else(|| e.err("expected wall or work"))?,
            None => defaults.clock,
        };
        let planner = PlannerDefaults {
            p0: num("p0", p0)?,
            eps0: num("eps0", eps0)?,
            f: num("f", defaults.f)?,
            p_accept: num("p_accept", pa)?,
            omega: num("omega", defaults.omega)?,
            n_max: int("n_max", defaults.n_max)?,
            batch: int("batch", 1)? as usize,
            resolution: num("resolution", 0.01 * extent)?,
            budget_s: num("budget_s", defaults.budget.as_secs_f64())?,
            seed: int("seed", 0)?,
            variant,
            clock,
        };

        let scenario = Scenario {
            lower,
            upper,
            obstacles,
            pois,
            sensor,
            robot,
            planner,
        };
        scenario.build()?;
        Ok(scenario)
    }

    /// Validates the scenario and builds the domain objects.
    pub fn build(&self) -> Result<Loaded, ScenarioError> {
        let ws = Workspace::new(&self.lower, &self.upper)
            .map_err(|e| semantic("workspace", e.to_string()))?;
        let dim = ws.dim();
        let mut points = Vec::new();
        for spec in &self.pois {
            spec.expand(dim, &mut points);
        }
        let scene = Scene::new(ws, self.obstacles.clone(), points, self.sensor.clone()).map_err(
            |e| match e {
                SceneError::PoiOutOfBounds { index, point } => semantic(
                    "pois",
                    format!(
                        "POI {index} at {:?} lies outside the workspace",
                        &point[..dim]
                    ),
                ),
                SceneError::BadObstacle { .. } => semantic("obstacles", e.to_string()),
                SceneError::BadSensor(_) => semantic("sensor", e.to_string()),
                other => semantic("scene", other.to_string()),
            },
        )?;
        let mut model = match self.robot.kind {
            RobotKind::Planar2D => RobotModel::planar(self.robot.radius),
            RobotKind::Spatial3DYawPitch => RobotModel::spatial(self.robot.radius),
        };
        model.radius = self.robot.radius;
        model
            .validate(scene.workspace())
            .map_err(|e| semantic("robot.kind", e.to_string()))?;
        let start = model
            .configuration(&self.robot.start)
            .map_err(|e| semantic("robot.start", e.to_string()))?;

        let pl = &self.planner;
        let mut roadmap = RoadmapParams::new(self.robot.steer_step, pl.resolution);
        roadmap.connect_radius = self.robot.connect_radius;
        roadmap.batch = pl.batch;
        for (key, value) in [
            ("robot.steer_step", roadmap.steer_step),
            ("robot.connect_radius", roadmap.connect_radius),
            ("planner.resolution", roadmap.resolution),
        ] {
            if !(value > 0.0) {
                return Err(semantic(key, format!("must be positive, got {value}")));
            }
        }
        if pl.batch == 0 {
            return Err(semantic("planner.batch", "must be at least 1"));
        }
        if !(pl.budget_s >= 0.0 && pl.budget_s < 1e9) {
            return Err(semantic(
                "planner.budget_s",
                format!("out of range: {}", pl.budget_s),
            ));
        }
        let config = PlannerConfig {
            p0: pl.p0,
            eps0: pl.eps0,
            f: pl.f,
            p_accept: pl.p_accept,
            omega: pl.omega,
            n_max: pl.n_max,
            budget: Duration::from_secs_f64(pl.budget_s),
            seed: pl.seed,
            variant: pl.variant,
            clock: pl.clock,
            roadmap,
            ..PlannerConfig::default()
        };
        config
            .validate()
            .map_err(|e| semantic("planner", e.to_string()))?;
        Ok(Loaded {
            scene,
            model,
            start,
            config,
        })
    }

    /// Canonical text form: every key written explicitly, in a fixed order.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        let nums = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let dim = self.lower.len();
        let _ = writeln!(
            s,
            "[workspace]\nlower = {}\nupper = {}\n",
            nums(&self.lower),
            nums(&self.upper)
        );
        s.push_str("[obstacles]\n");
        for o in &self.obstacles {
            let _ = match o {
                Obstacle::Sphere { center, radius } => {
                    writeln!(s, "sphere = {} {radius:?}", nums(&center[..dim]))
                }
                Obstacle::Box { min, max } => {
                    writeln!(s, "box = {} {}", nums(&min[..dim]), nums(&max[..dim]))
                }
            };
        }
        s.push_str("\n[pois]\n");
        for p in &self.pois {
            let _ = match p {
                PoiSpec::Point(v) => writeln!(s, "point = {}", nums(v)),
                PoiSpec::Ring {
                    center,
                    radius,
                    count,
                } => {
                    writeln!(s, "ring = {} {radius:?} {count}", nums(center))
                }
                PoiSpec::BoxSurface {
                    min,
                    max,
                    divisions,
                } => {
                    writeln!(s, "box_surface = {} {} {divisions}", nums(min), nums(max))
                }
            };
        }
        let se = &self.sensor;
        let _ = writeln!(
            s,
            "\n[sensor]\nrange = {:?}\nfov_half_angle = {:?}\nocclusion = {}\n",
            se.range, se.fov_half_angle, se.occlusion_enabled
        );
        let r = &self.robot;
        let kind = match r.kind {
            RobotKind::Planar2D => "planar2d",
            RobotKind::Spatial3DYawPitch => "spatial3d_yaw_pitch",
        };
        let _ = writeln!(
            s,
            "[robot]\nkind = {kind}\nradius = {:?}\nsteer_step = {:?}\nconnect_radius = {:?}\nstart = {}\n",
            r.radius,
            r.steer_step,
            r.connect_radius,
            nums(&r.start)
        );
        let p = &self.planner;
        let _ = write!(
            s,
            "[planner]\np0 = {:?}\neps0 = {:?}\nf = {:?}\np_accept = {:?}\nomega = {:?}\nn_max = {}\nbatch = {}\n\
             resolution = {:?}\nbudget_s = {:?}\nseed = {}\nvariant = {}\nclock = {}\n",
            p.p0,
            p.eps0,
            p.f,
            p.p_accept,
            p.omega,
            p.n_max,
            p.batch,
            p.resolution,
            p.budget_s,
            p.seed,
            p.variant,
            p.clock.as_str()
        );
        s
    }

    /// Logs every resolved setting.
    pub fn log_settings(&self) {
        for line in self.to_canonical().lines().filter(|l| l.contains('=')) {
            log::info!(target: "iris::scenario", "{line}");
        }
    }
}

fn to_point(v: &[f64]) -> Point {
    let mut p = [0.0; 3];
    p[..v.len()].copy_from_slice(v);
    p
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<(Scenario, Loaded), ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let scenario = Scenario::parse(&text)?;
    scenario.log_settings();
    let loaded = scenario.build()?;
    Ok((scenario, loaded))
}
