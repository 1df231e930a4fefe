use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use hyperace::bench::{bench_offline, bench_scaling, write_csv, OfflineConfig, ScalingConfig};
use hyperace::experiment::{load_experiment, run_matrix, run_scenario, EpisodeRow, SummaryRow};
use hyperace::plot::{plot_csv, PlotKind};
use hyperace::scenario::{load, parse_method, parse_objective};
use hyperace::trace::TraceWriter;
use hyperace::{Error, Result};
use hyperace_core::convexify::Method;
use hyperace_core::sim::{SimConfig, Simulation};
use hyperace_core::world::Track;

#[derive(Parser)]
#[command(name = "hyperace", version, about = "Convexification benchmarks and racing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time and score the convexification methods along a track.
    BenchOffline(OfflineArgs),
    /// Time the optimisation methods on random point sets of growing size.
    BenchScaling(ScalingArgs),
    /// Race a scenario file or an experiment matrix.
    Race(RaceArgs),
    /// Render a scaling CSV or an episode trace as SVG.
    Plot(PlotArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Convexification method: constrained, bilevel or mpcc.
    #[arg(long)]
    method: Option<String>,
    /// Objective of the constrained method: sat, euclid or hausdorff.
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    n_planes: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    mpc_horizon: Option<usize>,
    #[arg(long)]
    mpc_dt: Option<f64>,
}

impl SolverArgs {
    fn apply(&self, cfg: &mut SimConfig) -> Result<()> {
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
        cfg.validate()?;
        Ok(())
    }
}

#[derive(Args)]
struct OfflineArgs {
    #[arg(long, default_value = "porto-like")]
    track: String,
    /// Opponents placed ahead of the ego (0, 1 or 2).
    #[arg(long, default_value_t = 0)]
    opponents: usize,
    /// Poses per lap.
    #[arg(long, default_value_t = 40)]
    poses: usize,
    /// Number of seeds, starting at `--seed`.
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "mpcc,constrained,bilevel")]
    methods: Vec<String>,
    /// Leave out the track border planes at the ego station.
    #[arg(long)]
    no_border_planes: bool,
    /// Time on a single thread.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    bench_serial: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,50,100,500,1000,2000")]
    counts: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "constrained,bilevel")]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "sat,euclid,hausdorff")]
    objectives: Vec<String>,
    #[arg(long, default_value_t = 11)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plane count of the constrained method.
    #[arg(long, default_value_t = 4)]
    n_planes: usize,
    #[arg(long)]
    margin: Option<f64>,
    /// Per-solve time cap in seconds.
    #[arg(long, default_value_t = 10.0)]
    cap: f64,
    /// Accepted for symmetry with `bench-offline`; scaling always runs on
    /// one thread.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    bench_serial: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RaceArgs {
    #[arg(long, conflicts_with = "experiment", required_unless_present = "experiment")]
    scenario: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<PathBuf>,
    /// Episodes of a scenario race; seeds start at the scenario seed.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Trace of the first episode of a scenario race.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    /// scaling or trace.
    #[arg(long)]
    kind: String,
    /// Time of the plan drawn on a trace.
    #[arg(long, default_value_t = 0.0)]
    at: f64,
    /// Builtin track drawn under a trace.
    #[arg(long)]
    track: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn emit<T: serde::Serialize>(rows: &[T], out: Option<&Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    match out {
        Some(p) => std::fs::write(p, &buf).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let _ = std::io::stdout().write_all(&buf);
            Ok(())
        }
    }
}

fn builtin(name: &str) -> Result<Track> {
    Track::builtin(name).ok_or_else(|| Error::Parse(format!("unknown builtin track `{name}`")))
}

fn methods(ids: &[String]) -> Result<Vec<Method>> {
    ids.iter().map(|m| parse_method(m)).collect()
}

fn bench_offline_cmd(a: OfflineArgs) -> Result<()> {
    let track = builtin(&a.track)?;
    let mut sim = SimConfig::default();
    a.solver.apply(&mut sim)?;
    let cfg = OfflineConfig {
        poses: a.poses,
        opponents: a.opponents.min(2),
        seeds: (a.seed..a.seed + a.seeds).collect(),
        methods: methods(&a.methods)?,
        objective: sim.objective,
        sim,
        border_planes: !a.no_border_planes,
        serial: a.bench_serial,
        ..Default::default()
    };
    let label = format!("{} ({} opponents)", a.track, cfg.opponents);
    let rows = bench_offline(&label, &track, &cfg);
    for r in &rows {
        log::info!("{} {}: H {:.2} R {:.3} time {:.2e} s", r.scenario, r.method, r.mean_h, r.mean_r, r.mean_time_s);
    }
    emit(&rows, a.out.as_deref())
}

fn bench_scaling_cmd(a: ScalingArgs) -> Result<()> {
    let objectives = a.objectives.iter().map(|o| parse_objective(o)).collect::<Result<Vec<_>>>()?;
    let methods: Vec<Method> = methods(&a.methods)?.into_iter().filter(|m| *m != Method::Mpcc).collect();
    let mut counts = a.counts.clone();
    counts.sort_unstable();
    let cfg = ScalingConfig {
        counts,
        methods,
        objectives,
        seeds: (a.seed..a.seed + a.seeds).collect(),
        n_planes: a.n_planes,
        margin: a.margin.unwrap_or(hyperace_core::convexify::DEFAULT_MARGIN),
        cap_seconds: a.cap,
        ..Default::default()
    };
    emit(&bench_scaling(&cfg), a.out.as_deref())
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:<12} {:<9} {:<8} {:<9} {:>5} {:>8} {:>8} {:>9} {:>8}",
        "track", "approach", "planner", "opponent", "runs", "ego m/s", "opp m/s", "duration", "safety %"
    );
    for r in rows {
        println!(
            "{:<12} {:<9} {:<8} {:<9} {:>5} {:>8.2} {:>8.2} {:>9.2} {:>8.2}",
            r.track, r.approach, r.local_planner, r.opponent, r.runs, r.ego_efficiency, r.opponent_efficiency, r.race_duration, r.safety
        );
    }
}

fn race_cmd(a: RaceArgs) -> Result<()> {
    let mut cfg = SimConfig::default();
    if let Some(path) = &a.experiment {
        let mut exp = load_experiment(path)?;
        if let Some(s) = a.seed {
            exp.seed = s;
        }
        exp.config.apply(&mut cfg)?;
        a.solver.apply(&mut cfg)?;
        let rows = run_matrix(&exp, &cfg, a.serial)?;
        print_summary(&rows);
        return match &a.out {
            Some(p) => emit(&rows, Some(p)),
            None => Ok(()),
        };
    }
    let path = a.scenario.as_deref().expect("clap requires one input");
    let loaded = load(path)?;
    loaded.config.apply(&mut cfg)?;
    a.solver.apply(&mut cfg)?;
    let scenario = loaded.scenario;
    let first = a.seed.unwrap_or(scenario.seed);
    let seeds: Vec<u64> = (first..first + a.runs).collect();
    if let Some(tp) = &a.trace {
        let file = std::fs::File::create(tp).map_err(|source| Error::Io {
            path: tp.clone(),
            source,
        })?;
        let clock = hyperace::clock::StdClock::new();
        let mut sim = Simulation::new(&scenario, cfg.clone(), first)?;
        sim.set_clock(&clock);
        let mut w = TraceWriter::new(std::io::BufWriter::new(file), first);
        let mut failed = None;
        sim.run(first, &mut |r| {
            if failed.is_none() {
                failed = w.record(r).err();
            }
        });
        if let Some(e) = failed {
            return Err(e);
        }
        w.finish()?;
    }
    let results = run_scenario(&scenario, &cfg, &seeds, a.serial)?;
    let rows: Vec<EpisodeRow> = results.iter().map(EpisodeRow::from_result).collect();
    for r in &rows {
        log::info!(
            "seed {}: ego {:.2} m/s, race {:.2} s, collided {}",
            r.seed, r.ego_efficiency, r.race_duration, r.collided
        );
    }
    emit(&rows, a.out.as_deref())
}

fn plot_cmd(a: PlotArgs) -> Result<()> {
    let kind = PlotKind::from_id(&a.kind).ok_or_else(|| Error::Parse(format!("unknown plot kind `{}`", a.kind)))?;
    let track = a.track.as_deref().map(builtin).transpose()?;
    let text = std::fs::read_to_string(&a.input).map_err(|source| Error::Io {
        path: a.input.clone(),
        source,
    })?;
    let svg = plot_csv(&text, kind, track.as_ref(), a.at)?;
    std::fs::write(&a.out, svg).map_err(|source| Error::Io { path: a.out, source })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = match cli.command {
        Command::BenchOffline(a) => bench_offline_cmd(a),
        Command::BenchScaling(a) => bench_scaling_cmd(a),
        Command::Race(a) => race_cmd(a),
        Command::Plot(a) => plot_cmd(a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
