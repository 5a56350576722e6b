use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cbf::flow_core::{EventFlow, Interval};
use cbf::flow_metrics::{default_family, dist_c_n, dist_d_n_upper};
use cbf::harness::{run_experiment, Experiment, ExperimentConfig};
use cbf::web_bridge::{extract_web, lattice_starts, path_grid};
use cbf::{Error, Result};

#[derive(Parser)]
#[command(name = "cbf", version, about = "Disturbance flows, flow metrics and coalescing Brownian motion experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One-point marginals of disturbance flows against the normal law.
    FlowConvergence(RunArgs),
    /// Pair martingale identity along an r ladder.
    PairCovariance(RunArgs),
    /// Complete coalescence time of the coalescing sampler.
    CoalescenceTime(RunArgs),
    /// Time reversal of flows and of the coalescing sampler.
    TimeReversal(RunArgs),
    /// Exact map, flow and flow-metric property suites.
    MetricSelftest(RunArgs),
    /// Path metrics and the continuity bound for extracted paths.
    WebDistance(RunArgs),
    /// d_C and the d_D upper bound between two flows given as JSON files.
    FlowDistance(DistanceArgs),
    /// Paths of a flow from a lattice of starting points, as CSV.
    WebExtract(ExtractArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Replaces the configured seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, replacing the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces `n_runs`.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Args)]
struct DistanceArgs {
    phi: PathBuf,
    psi: PathBuf,
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Largest event-index offset in the warp family.
    #[arg(long, default_value_t = 2)]
    max_offset: usize,
}

#[derive(Args)]
struct ExtractArgs {
    flow: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    n: f64,
    #[arg(long, default_value_t = 4)]
    times: usize,
    #[arg(long, default_value_t = 16)]
    positions: usize,
    /// Regular grid points on `[−n, n]`, besides event times.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_flow(path: &PathBuf) -> Result<EventFlow> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn run(experiment: Experiment, a: RunArgs) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_json(&fs::read_to_string(&a.config)?)?;
    if cfg.experiment != experiment {
        return Err(Error::Config(format!("{} holds a {} config", a.config.display(), cfg.experiment)));
    }
    if let Some(s) = a.seed {
        cfg.seeds = vec![s];
    }
    if let Some(dir) = a.out {
        cfg.output.dir = Some(dir);
    }
    if let Some(n) = a.runs {
        cfg.n_runs = n;
    }
    let report = run_experiment(&cfg)?;
    print!("{}", report.summary());
    Ok(report.passed)
}

fn flow_distance(a: DistanceArgs) -> Result<bool> {
    let (phi, psi) = (read_flow(&a.phi)?, read_flow(&a.psi)?);
    let dc = dist_c_n(&phi, &psi, a.n)?;
    let warps = default_family(&phi, &psi, a.n, a.max_offset);
    let d = dist_d_n_upper(&phi, &psi, a.n, &warps)?;
    let out = json!({
        "n": a.n,
        "d_c": dc,
        "d_d_upper": d.value,
        "gamma": d.gamma,
        "inner": d.inner,
        "warp_anchors": d.warp.anchors(),
        "warps_tried": d.candidates,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(true)
}

fn web_extract(a: ExtractArgs) -> Result<bool> {
    let flow = read_flow(&a.flow)?;
    let h = flow.horizon();
    if !h.contains(-a.n) || !h.contains(a.n) {
        return Err(Error::OutsideHorizon(format!("window [-{}, {}]", a.n, a.n), h.to_string()));
    }
    let p = flow.period();
    let span = if p.is_finite() { Interval::closed_open(0.0, p) } else { Interval::closed_open(-1.0, 1.0) };
    let starts = lattice_starts(a.n, a.times, a.positions, span);
    let grid = path_grid(a.n, a.grid, &[&flow]);
    let paths = extract_web(&flow, &starts, &grid)?;
    let sink: Box<dyn Write> = match &a.out {
        Some(f) => Box::new(fs::File::create(f)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["path", "start_s", "start_x", "t", "x", "compact", "extended"])?;
    for (k, path) in paths.iter().enumerate() {
        for ((t, x), c) in path.times.iter().zip(&path.values).zip(path.compact()) {
            w.write_record([
                k.to_string(),
                path.start.s.to_string(),
                path.start.x.to_string(),
                t.to_string(),
                x.to_string(),
                c.to_string(),
                path.extended.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::FlowConvergence(a) => run(Experiment::FlowConvergence, a),
        Cmd::PairCovariance(a) => run(Experiment::PairCovariance, a),
        Cmd::CoalescenceTime(a) => run(Experiment::CoalescenceTime, a),
        Cmd::TimeReversal(a) => run(Experiment::TimeReversal, a),
        Cmd::MetricSelftest(a) => run(Experiment::MetricSelftest, a),
        Cmd::WebDistance(a) => run(Experiment::WebDistance, a),
        Cmd::FlowDistance(a) => flow_distance(a),
        Cmd::WebExtract(a) => web_extract(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
