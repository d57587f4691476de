//! Command-line front end: scenario runner plus one-shot access to the
//! metric, the clock, entropy estimates, subshift construction, and the
//! expansiveness falsifiers.  Structured inputs are JSON, inline or
//! `@path` to read from a file.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use singsusp_core::entropy::{entropy_estimate_flow, entropy_estimate_map};
use singsusp_core::expansive::{flow_expansiveness_falsifier, map_expansiveness_falsifier};
use singsusp_core::measure::expected_gamma;
use singsusp_core::symbolic::{
    from_envelope_json, minimal_subshift_with_entropy, minimality_certificate, to_envelope_json,
};
use singsusp_core::*;

#[derive(Parser)]
#[command(name = "singsusp", about = "suspension flows, brakes, entropy, expansiveness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file, a bundled scenario by name, or `all`.
    Run {
        /// path to a scenario JSON, a bundled scenario name, or `all`
        target: String,
        /// override the scenario seed (and the sampler seed with it)
        #[arg(long)]
        seed: Option<u64>,
        /// worker budget; falls back to SINGSUSP_WORKERS, then all cores
        #[arg(long)]
        workers: Option<usize>,
        /// write the report (array of reports for `all`) to this file
        #[arg(long)]
        out: Option<PathBuf>,
        /// write per-scenario entropy tables into this directory
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Evaluate the mapping-torus metric between two fiber points.
    Metric {
        #[command(flatten)]
        sys: SystemArg,
        /// fiber point JSON
        p: String,
        /// fiber point JSON
        q: String,
    },
    /// Fiber traversal time gamma(x) for a base point.
    Gamma {
        #[command(flatten)]
        sys: SystemArg,
        #[command(flatten)]
        brake: BrakeArg,
        /// base point JSON
        point: String,
    },
    /// Expected traversal time over a sampled measure.
    Egamma {
        #[command(flatten)]
        sys: SystemArg,
        #[command(flatten)]
        brake: BrakeArg,
        #[command(flatten)]
        measure: MeasureArg,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1e6)]
        cap: f64,
    },
    /// Points of the singular suspension orbit at given times.
    Flow {
        #[command(flatten)]
        sys: SystemArg,
        #[command(flatten)]
        brake: BrakeArg,
        /// fiber point JSON
        point: String,
        /// comma-separated ascending times
        #[arg(long)]
        times: String,
    },
    /// Separated-set entropy estimate for the base map or the flow.
    Entropy {
        #[command(flatten)]
        sys: SystemArg,
        /// estimate the flow instead of the base map (requires --brake)
        #[arg(long)]
        flow: bool,
        #[command(flatten)]
        brake: BrakeArg,
        #[command(flatten)]
        measure: MeasureArg,
        /// comma-separated iterate counts (map) or flow times (flow)
        #[arg(long, default_value = "2,3,4,5,6,7,8")]
        grid: String,
        /// comma-separated separation scales
        #[arg(long, default_value = "0.25,0.125")]
        eps: String,
        #[arg(long, default_value_t = 2048)]
        samples: usize,
        /// emit the count table as TSV instead of the JSON estimate
        #[arg(long)]
        tsv: bool,
    },
    /// Build or certify minimal subshifts.
    Subshift {
        #[command(subcommand)]
        cmd: SubshiftCmd,
    },
    /// Run an expansiveness falsifier.
    Expansive {
        #[command(subcommand)]
        cmd: ExpansiveCmd,
    },
}

#[derive(Args)]
struct SystemArg {
    /// discrete system JSON
    #[arg(long)]
    system: String,
}

#[derive(Args)]
struct BrakeArg {
    /// brake JSON; omitted means the regular (alpha = 1) suspension
    #[arg(long)]
    brake: Option<String>,
}

#[derive(Args)]
struct MeasureArg {
    /// measure sampler JSON; omitted means Lebesgue with seed 0
    #[arg(long)]
    measure: Option<String>,
}

impl MeasureArg {
    fn parse(&self) -> Result<MeasureSampler> {
        match &self.measure {
            Some(s) => arg_json("measure", s),
            None => Ok(MeasureSampler::lebesgue(0)),
        }
    }
}

#[derive(Subcommand)]
enum SubshiftCmd {
    /// Construct a minimal subshift with prescribed entropy.
    Build {
        #[arg(long)]
        entropy: f64,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check syndetic recurrence of short words in the canonical point.
    Certify {
        /// subshift envelope JSON
        envelope: String,
        #[arg(long, default_value_t = 4)]
        word_len: usize,
        /// syndeticity window; defaults to 3x the top block length
        #[arg(long)]
        window: Option<usize>,
    },
}

#[derive(Subcommand)]
enum ExpansiveCmd {
    Map {
        #[command(flatten)]
        sys: SystemArg,
        #[command(flatten)]
        measure: MeasureArg,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, default_value_t = 256)]
        pairs: usize,
        #[arg(long, default_value_t = 10)]
        horizon: i64,
    },
    Flow {
        #[command(flatten)]
        sys: SystemArg,
        #[command(flatten)]
        brake: BrakeArg,
        #[command(flatten)]
        measure: MeasureArg,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 256)]
        pairs: usize,
    },
}

/// Inline JSON, or `@path` to load it from a file.
fn arg_json<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> Result<T> {
    let text = match s.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
        None => s.to_string(),
    };
    serde_json::from_str(&text).with_context(|| format!("parsing {what}"))
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|e| anyhow::anyhow!("{what}: {e}")))
        .collect()
}

fn brake_of(arg: &BrakeArg) -> Result<Brake> {
    match &arg.brake {
        Some(s) => arg_json("brake", s),
        None => Ok(Brake::regular()),
    }
}

fn suspension(sys: &SystemArg, brake: &BrakeArg) -> Result<SingularSuspension> {
    let system: DiscreteSystem = arg_json("system", &sys.system)?;
    Ok(SingularSuspension::new(MappingTorus::new(system), brake_of(brake)?)?)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run_cmd(
    target: &str,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    tsv: Option<PathBuf>,
) -> Result<i32> {
    let workers = workers.or_else(|| {
        std::env::var("SINGSUSP_WORKERS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(k) = workers {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().ok();
    }
    let mut scenarios: Vec<Scenario> = if target == "all" {
        bundled_suite()
    } else if let Some(sc) = bundled_suite().into_iter().find(|s| s.name == target) {
        vec![sc]
    } else {
        vec![arg_json("scenario", &format!("@{target}"))?]
    };
    if let Some(seed) = seed {
        for sc in &mut scenarios {
            sc.seed = seed;
            sc.measure.seed = seed;
        }
    }
    let reports: Vec<Report> = scenarios.iter().map(run_scenario).collect();
    for rep in &reports {
        let verdicts: Vec<String> = rep.observed.iter().map(|v| format!("{v:?}")).collect();
        println!(
            "{:<28} {} expected {:?}, observed [{}]",
            rep.scenario,
            if rep.pass { "pass" } else { "FAIL" },
            rep.expected,
            verdicts.join(", ")
        );
        for e in &rep.errors {
            eprintln!("  {}: {e}", rep.scenario);
        }
    }
    if let Some(dir) = tsv {
        std::fs::create_dir_all(&dir)?;
        for rep in &reports {
            for (tag, est) in [
                ("map", rep.results.entropy_map.as_ref()),
                ("flow", rep.results.entropy_flow.as_ref()),
            ] {
                if let Some(est) = est {
                    let path = dir.join(format!("{}-{tag}.tsv", rep.scenario));
                    std::fs::write(&path, est.to_tsv())?;
                }
            }
        }
    }
    if let Some(path) = out {
        let body = if reports.len() == 1 {
            serde_json::to_string_pretty(&reports[0])?
        } else {
            serde_json::to_string_pretty(&reports)?
        };
        std::fs::write(&path, body)?;
    }
    Ok(if reports.iter().all(|r| r.pass) { 0 } else { 1 })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Run { target, seed, workers, out, tsv } => run_cmd(&target, seed, workers, out, tsv)?,
        Cmd::Metric { sys, p, q } => {
            let system: DiscreteSystem = arg_json("system", &sys.system)?;
            let mt = MappingTorus::new(system);
            let p: FiberPoint = arg_json("p", &p)?;
            let q: FiberPoint = arg_json("q", &q)?;
            println!("{}", mt.bar_metric(&p, &q)?);
            0
        }
        Cmd::Gamma { sys, brake, point } => {
            let ss = suspension(&sys, &brake)?;
            let x: BasePoint = arg_json("point", &point)?;
            print_json(&ss.gamma(&x)?)?;
            0
        }
        Cmd::Egamma { sys, brake, measure, samples, cap } => {
            let ss = suspension(&sys, &brake)?;
            let mu = measure.parse()?;
            print_json(&expected_gamma(&ss, &mu, samples, cap)?)?;
            0
        }
        Cmd::Flow { sys, brake, point, times } => {
            let ss = suspension(&sys, &brake)?;
            let p: FiberPoint = arg_json("point", &point)?;
            let ts: Vec<f64> = parse_list("times", &times)?;
            print_json(&ss.psi_orbit(&p, &ts)?)?;
            0
        }
        Cmd::Entropy { sys, flow, brake, measure, grid, eps, samples, tsv } => {
            let mu = measure.parse()?;
            let eps_grid: Vec<f64> = parse_list("eps", &eps)?;
            let est = if flow {
                let ss = suspension(&sys, &brake)?;
                let t_grid: Vec<f64> = parse_list("grid", &grid)?;
                entropy_estimate_flow(&ss, &mu, &t_grid, &eps_grid, samples)?
            } else {
                if brake.brake.is_some() {
                    bail!("--brake only applies with --flow");
                }
                let system: DiscreteSystem = arg_json("system", &sys.system)?;
                let n_grid: Vec<usize> = parse_list("grid", &grid)?;
                entropy_estimate_map(&system, &mu, &n_grid, &eps_grid, samples)?
            };
            if tsv {
                print!("{}", est.to_tsv());
            } else {
                print_json(&est)?;
            }
            0
        }
        Cmd::Subshift { cmd } => match cmd {
            SubshiftCmd::Build { entropy, levels, tol, out } => {
                let sh = minimal_subshift_with_entropy(entropy, levels, tol)?;
                let json = to_envelope_json(&sh)?;
                match out {
                    Some(path) => std::fs::write(path, json)?,
                    None => println!("{json}"),
                }
                0
            }
            SubshiftCmd::Certify { envelope, word_len, window } => {
                let text = match envelope.strip_prefix('@') {
                    Some(path) => std::fs::read_to_string(path)?,
                    None => envelope,
                };
                let sh = from_envelope_json(&text)?;
                let window = window.unwrap_or(3 * sh.top_block_len());
                print_json(&minimality_certificate(&sh, word_len, window)?)?;
                0
            }
        },
        Cmd::Expansive { cmd } => match cmd {
            ExpansiveCmd::Map { sys, measure, eps, pairs, horizon } => {
                let system: DiscreteSystem = arg_json("system", &sys.system)?;
                let mu = measure.parse()?;
                let out = map_expansiveness_falsifier(&system, eps, &mu, pairs, horizon)?;
                print_json(&out)?;
                i32::from(matches!(out, MapFalsifierOutcome::Counterexample { .. }))
            }
            ExpansiveCmd::Flow { sys, brake, measure, eps, delta, pairs } => {
                let ss = suspension(&sys, &brake)?;
                let mu = measure.parse()?;
                let grid = ReparamGrid::default();
                let out = flow_expansiveness_falsifier(&ss, eps, delta, &mu, pairs, &grid)?;
                print_json(&out)?;
                i32::from(matches!(out, FlowFalsifierOutcome::Counterexample(_)))
            }
        },
    };
    std::process::exit(code);
}
