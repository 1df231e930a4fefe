//! Deterministic fixed-step closed-loop simulation.
//!
//! Every control period each alive agent, in index order, senses the world,
//! picks a target, builds its safe region and solves for an input; the
//! plant then advances every agent with the held inputs and collisions are
//! checked. Nothing here reads a clock or global state, so a scenario and a
//! seed fully determine the outcome.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clock::MonotonicClock;
use crate::control::{
    disparity_extender, pure_pursuit, solve_mpc_warm, steer_toward, ControlInput, DisparityConfig, MpcParams,
    PursuitConfig, VehicleLimits, VehicleState,
};
use crate::convexify::{
    border_planes, mpcc_corridor, separate, Method, ObjectiveKind, SafeRegion, SeparationProblem,
};
use crate::geom::{rect_overlap, Box2, Hyperplane, OrientedRect, Point2};
use crate::reach::{compute_reachtube, Footprint, KinematicObstacle, ReachTube};
use crate::sensing::{
    augment_with_reach, observable_static, rdp_simplify, scan_scene, scan_to_points, LidarConfig, ObservableSet, Pose,
};
use crate::world::{AgentSpec, Scenario, Scene};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown controller id `{0}`")]
    UnknownController(String),
    #[error("unknown local planner id `{0}`")]
    UnknownPlanner(String),
    #[error("invalid simulation setting: {0}")]
    Invalid(&'static str),
}

/// Controller ids accepted in scenario files.
pub const CONTROLLER_IDS: [&str; 4] = ["pp", "de", "mpcc", "mpc_hype"];
/// Local planner ids feeding the MPC controllers.
pub const PLANNER_IDS: [&str; 2] = ["pp", "de"];

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Plant step (s).
    pub dt: f64,
    /// Controllers run every `control_period` plant steps.
    pub control_period: usize,
    pub lidar: LidarConfig,
    pub rdp_epsilon: f64,
    /// Observable radius `d` (m).
    pub observable_radius: f64,
    pub reach_horizon: f64,
    pub reach_steps: usize,
    /// Velocity uncertainty of opponents on each axis (m/s).
    pub reach_slack: f64,
    pub method: Method,
    pub objective: ObjectiveKind,
    pub n_planes: usize,
    pub margin: f64,
    pub mpc: MpcParams,
    pub pursuit: PursuitConfig,
    /// Pure pursuit settings when it only supplies targets to an MPC.
    pub planner_pursuit: PursuitConfig,
    pub disparity: DisparityConfig,
    pub limits: VehicleLimits,
    /// Seeded perturbation of the initial positions (m) and headings (rad).
    pub jitter_position: f64,
    pub jitter_heading: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            control_period: 5,
            lidar: LidarConfig::default(),
            rdp_epsilon: 0.05,
            observable_radius: 5.0,
            reach_horizon: 0.5,
            reach_steps: 5,
            reach_slack: 0.5,
            method: Method::Constrained,
            objective: ObjectiveKind::EuclideanSum,
            n_planes: 2,
            margin: crate::convexify::DEFAULT_MARGIN,
            mpc: MpcParams::default(),
            pursuit: PursuitConfig::default(),
            planner_pursuit: PursuitConfig {
                lookahead: 2.0,
                ..PursuitConfig::default()
            },
            disparity: DisparityConfig::default(),
            limits: VehicleLimits::default(),
            jitter_position: 0.05,
            jitter_heading: 0.02,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0) {
            return Err(ConfigError::Invalid("dt must be positive"));
        }
        if self.control_period == 0 {
            return Err(ConfigError::Invalid("control period must be at least one step"));
        }
        if !self.lidar.is_valid() {
            return Err(ConfigError::Invalid("lidar needs two beams and 0 < fov <= 2 pi"));
        }
        if self.n_planes == 0 {
            return Err(ConfigError::Invalid("n_planes must be at least 1"));
        }
        if self.mpc.horizon < 2 || !(self.mpc.dt > 0.0) {
            return Err(ConfigError::Invalid("MPC needs horizon >= 2 and dt > 0"));
        }
        Ok(())
    }
}

/// What a controller sees when it is asked for an input.
pub struct Observation<'a> {
    pub t: f64,
    pub index: usize,
    pub state: VehicleState,
    pub spec: &'a AgentSpec,
    pub scenario: &'a Scenario,
    pub scene: &'a Scene,
    /// Alive opponents with their footprints.
    pub others: &'a [(VehicleState, Footprint)],
}

impl Observation<'_> {
    pub fn footprint(&self) -> Footprint {
        Footprint {
            length: self.spec.length,
            width: self.spec.width,
        }
    }

    fn opponent_rects(&self) -> Vec<OrientedRect> {
        self.others.iter().map(|(s, f)| s.footprint(f)).collect()
    }
}

/// Intermediate products of the last control cycle, for traces and plots.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanSnapshot {
    pub target: Option<Point2>,
    pub planes: Vec<Hyperplane>,
    pub reach_boxes: Vec<Box2>,
    pub predicted: Vec<Point2>,
    pub feasible: bool,
}

pub trait Controller {
    fn control(&mut self, obs: &Observation<'_>) -> ControlInput;

    fn snapshot(&self) -> Option<&PlanSnapshot> {
        None
    }
}

/// Holds a fixed input.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantController(pub ControlInput);

impl Controller for ConstantController {
    fn control(&mut self, _: &Observation<'_>) -> ControlInput {
        self.0
    }
}

pub struct PursuitController {
    pub config: PursuitConfig,
    pub limits: VehicleLimits,
}

impl Controller for PursuitController {
    fn control(&mut self, obs: &Observation<'_>) -> ControlInput {
        match pure_pursuit(&obs.state, &obs.scenario.track, &self.config, &self.limits) {
            Ok((_, u)) => u,
            Err(_) => self.limits.brake(),
        }
    }
}

pub struct DisparityController {
    pub config: DisparityConfig,
    pub lidar: LidarConfig,
    pub speed: PursuitConfig,
    pub limits: VehicleLimits,
}

impl Controller for DisparityController {
    fn control(&mut self, obs: &Observation<'_>) -> ControlInput {
        let pose = Pose {
            position: obs.state.position(),
            heading: obs.state.heading,
        };
        let scan = scan_scene(pose, obs.scene, &obs.opponent_rects(), &self.lidar);
        match disparity_extender(&scan, &self.config) {
            Ok(gap) => speed_command(&obs.state, steer_toward(&obs.state, gap.point, &self.limits), &self.speed, &self.limits),
            Err(_) => self.limits.brake(),
        }
    }
}

fn speed_command(s: &VehicleState, steer: f64, cfg: &PursuitConfig, limits: &VehicleLimits) -> ControlInput {
    let v_cmd = cfg.speed * (1.0 - 0.5 * steer.abs() / limits.steer_max);
    ControlInput::new((cfg.speed_gain * (v_cmd - s.v)).clamp(-limits.a_max, limits.a_max), steer)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Planner {
    PurePursuit,
    Disparity,
}

impl Planner {
    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "pp" => Some(Self::PurePursuit),
            "de" => Some(Self::Disparity),
            _ => None,
        }
    }
}

/// Region source of an MPC controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    /// Border corridor only.
    Mpcc,
    /// Obstacle-aware convexification with the configured method.
    Hype,
}

pub struct MpcController {
    pub region: RegionKind,
    pub planner: Planner,
    pub config: SimConfig,
    warm: Option<Vec<ControlInput>>,
    last: ControlInput,
    snapshot: PlanSnapshot,
}

impl MpcController {
    pub fn new(region: RegionKind, planner: Planner, config: SimConfig) -> Self {
        Self {
            region,
            planner,
            config,
            warm: None,
            last: ControlInput::ZERO,
            snapshot: PlanSnapshot::default(),
        }
    }

    fn target(&self, obs: &Observation<'_>) -> Option<Point2> {
        match self.planner {
            Planner::PurePursuit => pure_pursuit(&obs.state, &obs.scenario.track, &self.config.planner_pursuit, &self.config.limits)
                .ok()
                .map(|(t, _)| t),
            Planner::Disparity => {
                let pose = Pose {
                    position: obs.state.position(),
                    heading: obs.state.heading,
                };
                let scan = scan_scene(pose, obs.scene, &obs.opponent_rects(), &self.config.lidar);
                disparity_extender(&scan, &self.config.disparity).ok().map(|g| g.point)
            }
        }
    }
}

impl Controller for MpcController {
    fn control(&mut self, obs: &Observation<'_>) -> ControlInput {
        let cfg = &self.config;
        let brake = cfg.limits.brake();
        self.snapshot = PlanSnapshot::default();
        let Some(target) = self.target(obs) else {
            self.warm = None;
            self.last = brake;
            return brake;
        };
        self.snapshot.target = Some(target);
        let ego = obs.state.position();
        let (region, boxes) = match self.region {
            RegionKind::Mpcc => (Some((mpcc_corridor(&obs.scenario.track, ego), target)), Vec::new()),
            RegionKind::Hype => {
                let (observable, tubes) = perceive(obs, cfg);
                let boxes = tubes.iter().flat_map(|t| t.steps.iter().map(|s| s.bounds)).collect();
                (hype_region(obs, &observable, target, cfg), boxes)
            }
        };
        self.snapshot.reach_boxes = boxes;
        let Some((region, target)) = region else {
            self.warm = None;
            self.last = brake;
            return brake;
        };
        self.snapshot.target = Some(target);
        self.snapshot.planes = region.polyhedron.rows().collect();
        let mut params = cfg.mpc;
        params.limits = cfg.limits;
        params.footprint = obs.footprint();
        let sol = solve_mpc_warm(&obs.state, &region.polyhedron, target, &params, self.warm.as_deref(), self.last);
        self.snapshot.feasible = sol.is_feasible();
        self.snapshot.predicted = sol.predicted_states.iter().map(|s| s.position()).collect();
        if !sol.is_feasible() {
            self.warm = None;
            self.last = brake;
            return brake;
        }
        let u = sol.first_input();
        let mut shifted = sol.inputs[1..].to_vec();
        shifted.push(*sol.inputs.last().expect("horizon >= 2"));
        self.warm = Some(shifted);
        self.last = u;
        u
    }

    fn snapshot(&self) -> Option<&PlanSnapshot> {
        Some(&self.snapshot)
    }
}

/// Sensing half of the pipeline: scan, point cloud, simplification, the
/// observable set and the opponents' reach tubes merged into it.
pub fn perceive(obs: &Observation<'_>, cfg: &SimConfig) -> (ObservableSet, Vec<ReachTube>) {
    let ego = obs.state.position();
    let pose = Pose {
        position: ego,
        heading: obs.state.heading,
    };
    let scan = scan_scene(pose, obs.scene, &obs.opponent_rects(), &cfg.lidar);
    let points = rdp_simplify(&scan_to_points(&scan), cfg.rdp_epsilon);
    let observable = observable_static(&points, ego, cfg.observable_radius);
    let tubes: Vec<ReachTube> = obs
        .others
        .iter()
        .filter_map(|(s, f)| {
            let k = KinematicObstacle::from_state(s, cfg.reach_slack, *f);
            compute_reachtube(&k, cfg.reach_horizon, cfg.reach_steps).ok()
        })
        .collect();
    let augmented = augment_with_reach(&observable, &tubes, ego, cfg.observable_radius);
    (augmented, tubes)
}

/// The separation problem the ego solves: observable points, its footprint,
/// the target and the track borders at its station.
pub fn separation_problem(
    observable: ObservableSet,
    ego: &OrientedRect,
    target: Point2,
    track: &crate::world::Track,
    cfg: &SimConfig,
) -> SeparationProblem {
    let mut p = SeparationProblem::new(observable, ego, target);
    p.n_planes = cfg.n_planes;
    p.margin = cfg.margin;
    p.fixed_planes = border_planes(track, ego.center, cfg.margin);
    p
}

// Convexifies toward the target, pulling the target back toward the ego
// when no region reaches it.
fn hype_region(
    obs: &Observation<'_>,
    observable: &ObservableSet,
    target: Point2,
    cfg: &SimConfig,
) -> Option<(SafeRegion, Point2)> {
    let rect = obs.state.footprint(&obs.footprint());
    let ego = rect.center;
    let mut goal = target;
    for _ in 0..3 {
        if !observable.points.points.contains(&goal) {
            let p = separation_problem(observable.clone(), &rect, goal, &obs.scenario.track, cfg);
            if let Ok(r) = separate(cfg.method, &p, cfg.objective, &obs.scenario.track) {
                return Some((r, goal));
            }
        }
        goal = ego.lerp(goal, 0.5);
    }
    None
}

/// Builds the controller named by an agent's ids.
pub fn build_controller(spec: &AgentSpec, cfg: &SimConfig) -> Result<Box<dyn Controller>, ConfigError> {
    let planner = || Planner::from_id(&spec.planner).ok_or_else(|| ConfigError::UnknownPlanner(spec.planner.clone()));
    Ok(match spec.controller.as_str() {
        "pp" => Box::new(PursuitController {
            config: cfg.pursuit,
            limits: cfg.limits,
        }),
        "de" => Box::new(DisparityController {
            config: cfg.disparity,
            lidar: cfg.lidar,
            speed: cfg.pursuit,
            limits: cfg.limits,
        }),
        "mpcc" => Box::new(MpcController::new(RegionKind::Mpcc, planner()?, cfg.clone())),
        "mpc_hype" => Box::new(MpcController::new(RegionKind::Hype, planner()?, cfg.clone())),
        other => return Err(ConfigError::UnknownController(other.into())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub state: VehicleState,
    pub alive: bool,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub t: f64,
    pub agents: Vec<AgentState>,
    pub rng: ChaCha8Rng,
}

impl WorldState {
    /// Initial states perturbed by the seed; a perturbation that would
    /// leave the track is dropped.
    pub fn new(scenario: &Scenario, cfg: &SimConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut agents = Vec::with_capacity(scenario.agents.len());
        for a in &scenario.agents {
            let mut s = a.initial;
            let (dx, dy, dh) = (
                rng.gen_range(-1.0..=1.0) * cfg.jitter_position,
                rng.gen_range(-1.0..=1.0) * cfg.jitter_position,
                rng.gen_range(-1.0..=1.0) * cfg.jitter_heading,
            );
            let moved = VehicleState::new(s.x + dx, s.y + dy, s.heading + dh, s.v);
            if scenario.track.contains_rect(&a.footprint(&moved)) {
                s = moved;
            }
            agents.push(AgentState { state: s, alive: true });
        }
        Self { t: 0.0, agents, rng }
    }
}

/// What an agent hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contact {
    /// Two agents, lower index first.
    Agents(usize, usize),
    /// Track boundary or static obstacle.
    Wall(usize),
}

impl Contact {
    pub fn involves(&self, i: usize) -> bool {
        match *self {
            Contact::Agents(a, b) => a == i || b == i,
            Contact::Wall(a) => a == i,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    pub t: f64,
    pub contact: Contact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub seed: u64,
    /// Path length per agent (m).
    pub distance: Vec<f64>,
    /// Simulated time (s).
    pub elapsed: f64,
    /// Every collision, in order.
    pub collisions: Vec<CollisionEvent>,
    /// Time until the first collision of any kind, or the elapsed time.
    pub race_duration: f64,
}

impl EpisodeResult {
    pub fn efficiency(&self, agent: usize) -> f64 {
        if self.elapsed > 0.0 {
            self.distance[agent] / self.elapsed
        } else {
            0.0
        }
    }

    /// First collision involving the ego (agent 0).
    pub fn collision(&self) -> Option<CollisionEvent> {
        self.collisions.iter().copied().find(|c| c.contact.involves(0))
    }
}

/// Percentage of episodes without an ego collision.
pub fn aggregate_safety(results: &[EpisodeResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    let safe = results.iter().filter(|r| r.collision().is_none()).count();
    100.0 * safe as f64 / results.len() as f64
}

/// One plant step of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub agents: Vec<AgentState>,
    /// Controller wall time per agent (us); zero without a clock or between
    /// control cycles.
    pub control_micros: Vec<u64>,
    /// Plan of each agent that ran a planning controller this step.
    pub plans: Vec<Option<PlanSnapshot>>,
}

pub struct Simulation<'a> {
    pub scenario: &'a Scenario,
    pub config: SimConfig,
    pub world: WorldState,
    scene: Scene,
    controllers: Vec<Box<dyn Controller>>,
    held: Vec<ControlInput>,
    distance: Vec<f64>,
    steps: u64,
    clock: Option<&'a dyn MonotonicClock>,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario, config: SimConfig, seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let controllers = scenario
            .agents
            .iter()
            .map(|a| build_controller(a, &config))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::with_controllers(scenario, config, controllers, seed))
    }

    pub fn with_controllers(
        scenario: &'a Scenario,
        config: SimConfig,
        controllers: Vec<Box<dyn Controller>>,
        seed: u64,
    ) -> Self {
        let n = scenario.agents.len();
        assert_eq!(controllers.len(), n, "one controller per agent");
        Self {
            scenario,
            world: WorldState::new(scenario, &config, seed),
            config,
            scene: Scene::new(scenario),
            controllers,
            held: vec![ControlInput::ZERO; n],
            distance: vec![0.0; n],
            steps: 0,
            clock: None,
        }
    }

    /// Times controllers with `clock` in trace records.
    pub fn set_clock(&mut self, clock: &'a dyn MonotonicClock) {
        self.clock = Some(clock);
    }

    /// Collisions among alive agents at the current state; colliding agents
    /// die.
    pub fn detect_collisions(&mut self) -> Vec<CollisionEvent> {
        let sc = self.scenario;
        let rects: Vec<OrientedRect> = sc
            .agents
            .iter()
            .zip(&self.world.agents)
            .map(|(spec, a)| spec.footprint(&a.state))
            .collect();
        let alive: Vec<usize> = (0..rects.len()).filter(|&i| self.world.agents[i].alive).collect();
        let mut events = Vec::new();
        for &i in &alive {
            let r = &rects[i];
            let wall = !sc.track.contains_rect(r)
                || sc.static_obstacles.iter().any(|o| {
                    o.polygon.iter().any(|&p| r.contains(p))
                        || o.edges().any(|(a, b)| r.intersects_segment(a, b))
                });
            if wall {
                events.push(CollisionEvent {
                    t: self.world.t,
                    contact: Contact::Wall(i),
                });
            }
        }
        for (k, &i) in alive.iter().enumerate() {
            for &j in &alive[k + 1..] {
                if rect_overlap(&rects[i], &rects[j]) {
                    events.push(CollisionEvent {
                        t: self.world.t,
                        contact: Contact::Agents(i, j),
                    });
                }
            }
        }
        for e in &events {
            for i in 0..rects.len() {
                if e.contact.involves(i) {
                    self.world.agents[i].alive = false;
                }
            }
        }
        events
    }

    /// Runs controllers when due, advances the plant by one step and checks
    /// collisions.
    pub fn step(&mut self) -> (Vec<CollisionEvent>, StepRecord) {
        let n = self.controllers.len();
        let mut micros = vec![0u64; n];
        let mut plans = vec![None; n];
        if self.steps % self.config.control_period as u64 == 0 {
            for i in 0..n {
                if !self.world.agents[i].alive {
                    continue;
                }
                let others: Vec<(VehicleState, Footprint)> = (0..n)
                    .filter(|&j| j != i && self.world.agents[j].alive)
                    .map(|j| {
                        let spec = &self.scenario.agents[j];
                        (
                            self.world.agents[j].state,
                            Footprint {
                                length: spec.length,
                                width: spec.width,
                            },
                        )
                    })
                    .collect();
                let obs = Observation {
                    t: self.world.t,
                    index: i,
                    state: self.world.agents[i].state,
                    spec: &self.scenario.agents[i],
                    scenario: self.scenario,
                    scene: &self.scene,
                    others: &others,
                };
                let start = self.clock.map(|c| c.now_micros());
                let u = self.controllers[i].control(&obs);
                if let (Some(c), Some(s)) = (self.clock, start) {
                    micros[i] = c.now_micros().saturating_sub(s);
                }
                self.held[i] = self.config.limits.clamp(u);
                plans[i] = self.controllers[i].snapshot().cloned();
            }
        }
        let dt = self.config.dt;
        for i in 0..n {
            let a = &mut self.world.agents[i];
            if !a.alive {
                continue;
            }
            let next = crate::control::step_dynamics(&a.state, &self.held[i], dt, &self.config.limits)
                .expect("held inputs are clamped");
            self.distance[i] += next.position().dist(a.state.position());
            a.state = next;
        }
        self.steps += 1;
        self.world.t = self.steps as f64 * dt;
        let events = self.detect_collisions();
        let record = StepRecord {
            t: self.world.t,
            agents: self.world.agents.clone(),
            control_micros: micros,
            plans,
        };
        (events, record)
    }

    /// Steps until the duration is reached, the ego collides or no agent is
    /// left; `trace` sees every step.
    pub fn run(mut self, seed: u64, trace: &mut dyn FnMut(&StepRecord)) -> EpisodeResult {
        let total = libm::round(self.scenario.duration / self.config.dt).max(0.0) as u64;
        let mut collisions = self.detect_collisions();
        let ego_hit = |c: &[CollisionEvent]| c.iter().any(|e| e.contact.involves(0));
        let mut done = ego_hit(&collisions) || total == 0;
        while !done && self.steps < total {
            let (events, record) = self.step();
            trace(&record);
            collisions.extend(events);
            done = ego_hit(&collisions) || self.world.agents.iter().all(|a| !a.alive);
        }
        let elapsed = self.world.t;
        EpisodeResult {
            seed,
            distance: self.distance,
            elapsed,
            race_duration: collisions.first().map_or(elapsed, |c| c.t),
            collisions,
        }
    }
}

/// Runs one episode with the controllers named in the scenario.
pub fn run_episode(scenario: &Scenario, cfg: &SimConfig, seed: u64) -> Result<EpisodeResult, ConfigError> {
    Ok(Simulation::new(scenario, cfg.clone(), seed)?.run(seed, &mut |_| {}))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::tests::straight_track;
    use crate::world::Track;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn agent(x: f64, y: f64, v: f64, controller: &str) -> AgentSpec {
        AgentSpec {
            initial: VehicleState::new(x, y, 0.0, v),
            controller: controller.to_string(),
            planner: "pp".to_string(),
            length: 0.5,
            width: 0.3,
        }
    }

    fn straight(agents: Vec<AgentSpec>, duration: f64) -> Scenario {
        Scenario {
            track: straight_track(1.0, 30.0, 0.1),
            static_obstacles: Vec::new(),
            agents,
            seed: 0,
            duration,
        }
    }

    fn quiet() -> SimConfig {
        SimConfig {
            jitter_position: 0.0,
            jitter_heading: 0.0,
            ..SimConfig::default()
        }
    }

    fn constant(sc: &Scenario, u: ControlInput, duration_cfg: SimConfig) -> EpisodeResult {
        let ctrls: Vec<Box<dyn Controller>> = sc.agents.iter().map(|_| Box::new(ConstantController(u)) as Box<dyn Controller>).collect();
        Simulation::with_controllers(sc, duration_cfg, ctrls, 1).run(1, &mut |_| {})
    }

    #[test]
    fn overlapping_spawn_collides_immediately() {
        let sc = straight(vec![agent(5.0, 0.0, 0.0, "pp"), agent(5.2, 0.0, 0.0, "pp")], 10.0);
        let r = run_episode(&sc, &quiet(), 3).unwrap();
        assert_eq!(r.race_duration, 0.0);
        assert_eq!(r.collision().unwrap().contact, Contact::Agents(0, 1));
        assert_eq!(aggregate_safety(&[r]), 0.0);
    }

    #[test]
    fn stationary_agent() {
        let sc = straight(vec![agent(5.0, 0.0, 0.0, "pp")], 3.0);
        let r = constant(&sc, ControlInput::ZERO, quiet());
        assert_eq!(r.distance[0], 0.0);
        assert!(r.collision().is_none());
        assert_eq!(r.efficiency(0), 0.0);
        assert!((r.elapsed - 3.0).abs() < 1e-9);
    }

    #[test]
    fn constant_speed_distance() {
        let sc = straight(vec![agent(2.0, 0.0, 1.0, "pp")], 10.0);
        let r = constant(&sc, ControlInput::ZERO, quiet());
        assert!((r.distance[0] - 10.0).abs() <= 0.01 + 1e-9);
        assert!((r.efficiency(0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_duration_is_empty() {
        let sc = straight(vec![agent(2.0, 0.0, 1.0, "pp")], 0.0);
        let r = run_episode(&sc, &quiet(), 0).unwrap();
        assert_eq!(r.elapsed, 0.0);
        assert_eq!(r.efficiency(0), 0.0);
    }

    #[test]
    fn driving_into_wall_ends_episode() {
        let mut a = agent(2.0, 0.0, 2.0, "pp");
        a.initial.heading = 0.5;
        let sc = straight(vec![a], 10.0);
        let r = constant(&sc, ControlInput::ZERO, quiet());
        let c = r.collision().unwrap();
        assert_eq!(c.contact, Contact::Wall(0));
        assert!(r.elapsed < 2.0 && r.race_duration == c.t);
    }

    #[test]
    fn unknown_ids_are_config_errors() {
        let sc = straight(vec![agent(2.0, 0.0, 0.0, "teleport")], 1.0);
        assert_eq!(
            run_episode(&sc, &quiet(), 0).unwrap_err(),
            ConfigError::UnknownController("teleport".into())
        );
        let mut a = agent(2.0, 0.0, 0.0, "mpc_hype");
        a.planner = "oracle".into();
        let sc = straight(vec![a], 1.0);
        assert_eq!(run_episode(&sc, &quiet(), 0).unwrap_err(), ConfigError::UnknownPlanner("oracle".into()));
    }

    #[test]
    fn safety_examples() {
        let mk = |hit: bool| EpisodeResult {
            seed: 0,
            distance: vec![0.0],
            elapsed: 1.0,
            collisions: if hit {
                vec![CollisionEvent {
                    t: 0.5,
                    contact: Contact::Wall(0),
                }]
            } else {
                Vec::new()
            },
            race_duration: 1.0,
        };
        let mut runs: Vec<EpisodeResult> = (0..20).map(|k| mk(k % 2 == 0)).collect();
        assert_eq!(aggregate_safety(&runs), 50.0);
        runs.truncate(5);
        runs.iter_mut().for_each(|r| r.collisions.clear());
        assert_eq!(aggregate_safety(&runs), 100.0);
        let all: Vec<EpisodeResult> = (0..3).map(|_| mk(true)).collect();
        assert_eq!(aggregate_safety(&all), 0.0);
    }

    #[test]
    fn pursuit_follows_straight_track() {
        let sc = straight(vec![agent(1.0, 0.3, 0.0, "pp")], 5.0);
        let r = run_episode(&sc, &SimConfig::default(), 4).unwrap();
        assert!(r.collision().is_none());
        assert!(r.distance[0] > 5.0);
    }

    #[test]
    fn hype_and_mpcc_drive_a_straight() {
        for id in ["mpc_hype", "mpcc"] {
            let sc = straight(vec![agent(1.0, 0.0, 0.0, id)], 4.0);
            let r = run_episode(&sc, &SimConfig::default(), 2).unwrap();
            assert!(r.collision().is_none(), "{id}");
            assert!(r.efficiency(0) > 1.0, "{id}: {}", r.efficiency(0));
        }
    }

    #[test]
    fn disparity_avoids_box() {
        let mut sc = straight(vec![agent(1.0, 0.0, 0.0, "de")], 6.0);
        sc.static_obstacles.push(crate::world::StaticObstacle {
            polygon: vec![Point2::new(6.0, -1.0), Point2::new(6.5, -1.0), Point2::new(6.5, 0.1), Point2::new(6.0, 0.1)],
        });
        let r = run_episode(&sc, &SimConfig::default(), 0).unwrap();
        assert!(r.collision().is_none(), "{:?}", r.collisions);
        assert!(r.distance[0] > 6.0);
    }

    #[test]
    fn deterministic_reruns() {
        let sc = Scenario {
            track: Track::porto_like(),
            static_obstacles: Vec::new(),
            agents: vec![],
            seed: 0,
            duration: 3.0,
        };
        let s0 = sc.track.samples()[0];
        let s1 = sc.track.samples()[30];
        let heading = |t: Point2| t.y.atan2(t.x);
        let mut sc = sc;
        sc.agents.push(AgentSpec {
            initial: VehicleState::new(s1.point.x, s1.point.y, heading(s1.tangent), 0.0),
            ..agent(0.0, 0.0, 0.0, "mpc_hype")
        });
        sc.agents.push(AgentSpec {
            initial: VehicleState::new(s0.point.x, s0.point.y, heading(s0.tangent), 0.0),
            ..agent(0.0, 0.0, 0.0, "pp")
        });
        let a = run_episode(&sc, &SimConfig::default(), 11).unwrap();
        let b = run_episode(&sc, &SimConfig::default(), 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.distance.len(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn alive_flags_and_efficiency_bounds(
            ys in proptest::collection::vec(-0.6..0.6f64, 1..4),
            accel in -4.0..4.0f64,
            steer in -0.4..0.4f64,
        ) {
            let agents: Vec<AgentSpec> = ys.iter().enumerate().map(|(k, &y)| agent(2.0 + 1.5 * k as f64, y, 1.0, "pp")).collect();
            let sc = straight(agents, 2.0);
            let ctrls: Vec<Box<dyn Controller>> = sc.agents.iter().map(|_| Box::new(ConstantController(ControlInput::new(accel, steer))) as Box<dyn Controller>).collect();
            let mut sim = Simulation::with_controllers(&sc, quiet(), ctrls, 0);
            let mut prev: Vec<bool> = sim.world.agents.iter().map(|a| a.alive).collect();
            for _ in 0..200 {
                let (events, rec) = sim.step();
                prop_assert_eq!(rec.agents.len(), sc.agents.len());
                for (p, a) in prev.iter().zip(&rec.agents) {
                    prop_assert!(*p || !a.alive);
                }
                for e in events {
                    if let Contact::Agents(i, j) = e.contact {
                        prop_assert!(i < j);
                    }
                }
                prev = rec.agents.iter().map(|a| a.alive).collect();
            }
            let sc2 = sc.clone();
            let r = constant(&sc2, ControlInput::new(accel, steer), quiet());
            for i in 0..sc.agents.len() {
                prop_assert!(r.efficiency(i) <= VehicleLimits::default().v_max + 1e-9);
            }
        }
    }
}
