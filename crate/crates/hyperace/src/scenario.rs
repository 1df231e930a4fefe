//! TOML scenario files.
//!
//! ```toml
//! format_version = 1
//! seed = 3
//! duration = 60.0
//!
//! [track]
//! builtin = "porto-like"
//!
//! [[agents]]
//! station = 0.0
//! offset = 0.0
//! v = 0.0
//! controller = "mpc_hype"
//! planner = "pp"
//! ```
//!
//! A track is either `builtin` or given by `inner_boundary`,
//! `outer_boundary`, `centerline`, `closed` and `spacing`. Agents are placed
//! by `x`, `y`, `heading` or by centerline `station` and lateral `offset`.
//! Unknown keys are reported as warnings, not errors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use hyperace_core::control::VehicleState;
use hyperace_core::convexify::{Method, ObjectiveKind};
use hyperace_core::sim::SimConfig;
use hyperace_core::world::{AgentSpec, Scenario, StaticObstacle, Track, CENTERLINE_SPACING};
use hyperace_core::Point2;

use crate::{read_file, write_file, Error, Result, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default = "format_version")]
    pub format_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub duration: f64,
    pub track: TrackFile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ObstacleFile>,
    pub agents: Vec<AgentFile>,
    #[serde(default, skip_serializing_if = "ConfigFile::is_empty")]
    pub config: ConfigFile,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_boundary: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_boundary: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centerline: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleFile {
    pub polygon: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub station: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default)]
    pub v: f64,
    pub controller: String,
    #[serde(default = "default_planner")]
    pub planner: String,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_planner() -> String {
    "pp".into()
}

fn default_length() -> f64 {
    0.5
}

fn default_width() -> f64 {
    0.3
}

/// Optional overrides of the simulation settings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_planes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mpc_horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mpc_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable_radius: Option<f64>,
}

impl ConfigFile {
    pub fn is_empty(&self) -> bool {
        *self == ConfigFile::default()
    }

    /// Writes the overrides into `cfg`.
    pub fn apply(&self, cfg: &mut SimConfig) -> Result<()> {
        if let Some(m) = &self.method {
            cfg.method = parse_method(m)?;
        }
        if let Some(o) = &self.objective {
            cfg.objective = parse_objective(o)?;
        }
        if let Some(n) = self.n_planes {
            cfg.n_planes = n;
        }
        if let Some(m) = self.margin {
            cfg.margin = m;
        }
        if let Some(h) = self.mpc_horizon {
            cfg.mpc.horizon = h;
        }
        if let Some(dt) = self.mpc_dt {
            cfg.mpc.dt = dt;
        }
        if let Some(d) = self.observable_radius {
            cfg.observable_radius = d;
        }
        cfg.validate()?;
        Ok(())
    }
}

pub fn parse_method(id: &str) -> Result<Method> {
    Method::from_id(id).ok_or_else(|| Error::Parse(format!("unknown method `{id}` (constrained, bilevel, mpcc)")))
}

pub fn parse_objective(id: &str) -> Result<ObjectiveKind> {
    ObjectiveKind::from_id(id).ok_or_else(|| Error::Parse(format!("unknown objective `{id}` (sat, euclid, hausdorff)")))
}

/// A parsed scenario with the settings overrides and ignored keys.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub config: ConfigFile,
    pub warnings: Vec<String>,
}

fn points(v: &[[f64; 2]]) -> Vec<Point2> {
    v.iter().map(|&[x, y]| Point2::new(x, y)).collect()
}

fn coords(v: &[Point2]) -> Vec<[f64; 2]> {
    v.iter().map(|p| [p.x, p.y]).collect()
}

impl TrackFile {
    pub fn build(&self) -> Result<Track> {
        if let Some(name) = &self.builtin {
            return Track::builtin(name).ok_or_else(|| Error::Parse(format!("unknown builtin track `{name}`")));
        }
        let field = |v: &Option<Vec<[f64; 2]>>, name: &str| {
            v.as_deref()
                .map(points)
                .ok_or_else(|| Error::Parse(format!("track: missing field `{name}`")))
        };
        let inner = field(&self.inner_boundary, "inner_boundary")?;
        let outer = field(&self.outer_boundary, "outer_boundary")?;
        let centerline = field(&self.centerline, "centerline")?;
        Ok(Track::new(
            inner,
            outer,
            centerline,
            self.closed.unwrap_or(true),
            self.spacing.unwrap_or(CENTERLINE_SPACING),
        )?)
    }

    pub fn from_track(track: &Track) -> Self {
        Self {
            builtin: None,
            inner_boundary: Some(coords(track.inner())),
            outer_boundary: Some(coords(track.outer())),
            centerline: Some(coords(track.centerline_input())),
            closed: Some(track.is_closed()),
            spacing: Some(track.spacing()),
        }
    }
}

impl AgentFile {
    fn state(&self, track: &Track, k: usize) -> Result<VehicleState> {
        match (self.x, self.y, self.station) {
            (Some(x), Some(y), None) => Ok(VehicleState::new(x, y, self.heading.unwrap_or(0.0), self.v)),
            (None, None, Some(s)) => {
                let sample = track.samples()[track.index_at(s)];
                let p = track.point_at(s) + sample.tangent.perp() * self.offset.unwrap_or(0.0);
                let heading = self.heading.unwrap_or_else(|| sample.tangent.y.atan2(sample.tangent.x));
                Ok(VehicleState::new(p.x, p.y, heading, self.v))
            }
            _ => Err(Error::Parse(format!("agent {k}: give either x and y or station"))),
        }
    }
}

impl ScenarioFile {
    /// Builds and validates the scenario.
    pub fn build(&self) -> Result<Scenario> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported format_version {}", self.format_version)));
        }
        let track = self.track.build()?;
        let agents = self
            .agents
            .iter()
            .enumerate()
            .map(|(k, a)| {
                Ok(AgentSpec {
                    initial: a.state(&track, k)?,
                    controller: a.controller.clone(),
                    planner: a.planner.clone(),
                    length: a.length,
                    width: a.width,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scenario = Scenario {
            track,
            static_obstacles: self
                .obstacles
                .iter()
                .map(|o| StaticObstacle { polygon: points(&o.polygon) })
                .collect(),
            agents,
            seed: self.seed,
            duration: self.duration,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Explicit description of `scenario`: geometry is written out in full
    /// and agents by position.
    pub fn from_scenario(scenario: &Scenario, config: &ConfigFile) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            seed: scenario.seed,
            duration: scenario.duration,
            track: TrackFile::from_track(&scenario.track),
            obstacles: scenario
                .static_obstacles
                .iter()
                .map(|o| ObstacleFile { polygon: coords(&o.polygon) })
                .collect(),
            agents: scenario
                .agents
                .iter()
                .map(|a| AgentFile {
                    x: Some(a.initial.x),
                    y: Some(a.initial.y),
                    heading: Some(a.initial.heading),
                    station: None,
                    offset: None,
                    v: a.initial.v,
                    controller: a.controller.clone(),
                    planner: a.planner.clone(),
                    length: a.length,
                    width: a.width,
                })
                .collect(),
            config: config.clone(),
        }
    }
}

/// Parses scenario text; unknown keys end up in `warnings`.
pub fn parse(text: &str) -> Result<Loaded> {
    let mut warnings = Vec::new();
    let de = toml::Deserializer::new(text);
    let file: ScenarioFile = serde_ignored::deserialize(de, |path| warnings.push(format!("unknown key `{path}`")))
        .map_err(|e| Error::Parse(e.to_string()))?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Loaded {
        scenario: file.build()?,
        config: file.config,
        warnings,
    })
}

pub fn load(path: &Path) -> Result<Loaded> {
    parse(&read_file(path)?)
}

pub fn to_toml(scenario: &Scenario, config: &ConfigFile) -> String {
    toml::to_string(&ScenarioFile::from_scenario(scenario, config)).expect("scenario serializes")
}

pub fn save(path: &Path, scenario: &Scenario, config: &ConfigFile) -> Result<()> {
    write_file(path, to_toml(scenario, config).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
format_version = 1
seed = 4
duration = 10.0

[track]
builtin = "porto-like"

[[agents]]
station = 0.0
controller = "pp"

[[agents]]
station = 3.0
offset = 0.4
v = 1.0
controller = "de"
"#;

    #[test]
    fn parses_builtin() {
        let l = parse(BASIC).unwrap();
        assert!(l.warnings.is_empty());
        assert_eq!(l.scenario.agents.len(), 2);
        assert_eq!(l.scenario.seed, 4);
        let a = &l.scenario.agents[1];
        let c = l.scenario.track.point_at(3.0);
        assert!((a.initial.position().dist(c) - 0.4).abs() < 1e-9);
        assert_eq!(a.initial.v, 1.0);
    }

    #[test]
    fn unknown_keys_warn() {
        let text = BASIC.replace("duration = 10.0", "duration = 10.0\ncolour = \"red\"");
        let l = parse(&text).unwrap();
        assert_eq!(l.warnings, vec!["unknown key `colour`".to_string()]);
    }

    #[test]
    fn missing_outer_boundary_is_parse_error() {
        let text = r#"
duration = 1.0
[track]
inner_boundary = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
centerline = [[0.0, 0.0], [1.0, 0.0]]
[[agents]]
x = 0.0
y = 0.0
controller = "pp"
"#;
        match parse(text) {
            Err(Error::Parse(m)) => assert!(m.contains("outer_boundary"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn agent_off_track_is_validation_error() {
        let text = BASIC.replace("offset = 0.4", "offset = 5.0");
        let e = parse(&text).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("agents start inside the track"), "{e}");
    }

    #[test]
    fn unknown_track_and_method() {
        assert!(matches!(parse(&BASIC.replace("porto-like", "monza")), Err(Error::Parse(_))));
        let mut cfg = SimConfig::default();
        let c = ConfigFile {
            method: Some("iris".into()),
            ..Default::default()
        };
        assert_eq!(c.apply(&mut cfg).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn config_overrides() {
        let text = format!("{BASIC}\n[config]\nmethod = \"bilevel\"\nn_planes = 3\nmpc_horizon = 8\n");
        let l = parse(&text).unwrap();
        let mut cfg = SimConfig::default();
        l.config.apply(&mut cfg).unwrap();
        assert_eq!(cfg.method, Method::Bilevel);
        assert_eq!(cfg.n_planes, 3);
        assert_eq!(cfg.mpc.horizon, 8);
    }

    #[test]
    fn save_load_round_trip() {
        let text = format!("{BASIC}\n[[obstacles]]\npolygon = [[11.0, -13.2], [11.4, -13.2], [11.4, -12.8]]\n");
        let l = parse(&text).unwrap();
        let saved = to_toml(&l.scenario, &l.config);
        let again = parse(&saved).unwrap();
        assert_eq!(again.scenario, l.scenario);
        assert_eq!(to_toml(&again.scenario, &again.config), saved);
    }
}
