//! Command-line front end. Exit codes: 0 success, 1 invalid input or
//! configuration, 2 internal failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bargain::{nbs_allocate, PayoffTriple};
use crate::config::{NetworkSource, ScenarioConfig};
use crate::error::{Error, Result};
use crate::net_model::{build_sioux_falls, sioux_falls_file, MobilityGraph};
use crate::netfile::NetworkSpec;
use crate::params::Weights;
use crate::report;
use crate::scenario::{self, highlights, Scenario};
use crate::ue_oracle;

#[derive(Parser, Debug)]
#[command(name = "netcoop", version, about = "Two-region rail network design with co-investment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug, Clone, Default)]
struct Global {
    /// Scenario config file (defaults apply when omitted)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (or file, for export-sioux-falls)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the logit scale
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Overrides objective weights: emissions,travel_cost,profit
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    weights: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a network file and/or a scenario config
    Validate {
        /// Network file; the bundled network when omitted
        network: Option<PathBuf>,
    },
    /// Baseline plus the configured co-investment schedule
    Run,
    /// Every shared co-investment schedule over the grid
    Sweep,
    /// Sweeps of all heterogeneous budget/demand scenarios
    Hetero,
    /// Nash-bargained split of one year's pool
    Nbs {
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        no_mech: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        stage1: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        pool: f64,
    },
    /// Solves the bundled user-equilibrium toy instances
    UeCheck,
    /// Writes the bundled Sioux Falls network file
    ExportSiouxFalls,
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.global.jobs {
        Some(0) => Err(Error::Config("--jobs must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                return 2;
            }
        },
        None => dispatch(&cli),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::InvalidNetwork(_)
        | Error::InvalidBounds { .. }
        | Error::UnknownNode(_)
        | Error::Io { .. } => 1,
        _ => 2,
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    match &cli.command {
        Command::Validate { network } => validate(g, network.as_deref()),
        Command::Run => run_one(g),
        Command::Sweep => run_sweep(g),
        Command::Hetero => run_hetero(g),
        Command::Nbs { no_mech, stage1, pool } => {
            if no_mech.len() != 2 || stage1.len() != 2 {
                return Err(Error::Config("--no-mech and --stage1 take two values: a,b".into()));
            }
            let triple = PayoffTriple { no_mech: [no_mech[0], no_mech[1]], stage1: [stage1[0], stage1[1]], pool: *pool };
            match nbs_allocate(&triple) {
                Ok(a) => {
                    println!("q1 = {}\nq2 = {}", report::sig6(a.shares[0]), report::sig6(a.shares[1]));
                    println!("v1 = {}\nv2 = {}", report::sig6(a.payoffs[0]), report::sig6(a.payoffs[1]));
                }
                Err(Error::NoAgreement) => {
                    println!("no agreement: surplus {} is not positive", report::sig6(triple.surplus()))
                }
                Err(e) => return Err(e),
            }
            Ok(0)
        }
        Command::UeCheck => ue_check(),
        Command::ExportSiouxFalls => {
            match &g.out {
                Some(p) => report::write_file(p, sioux_falls_file().as_bytes())?,
                None => print!("{}", sioux_falls_file()),
            }
            Ok(0)
        }
    }
}

fn load_config(g: &Global) -> Result<ScenarioConfig> {
    let mut cfg = match &g.config {
        Some(p) => ScenarioConfig::read(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(mu) = g.mu {
        cfg.logit_scale = mu;
    }
    if let Some(w) = &g.weights {
        if w.len() != 3 {
            return Err(Error::Config("--weights takes three values: emissions,travel_cost,profit".into()));
        }
        cfg.weights = Weights::new(w[0], w[1], w[2]).ok_or_else(|| Error::Config("weights must be positive".into()))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_graph(cfg: &ScenarioConfig) -> Result<MobilityGraph> {
    let graph = match &cfg.network {
        NetworkSource::SiouxFalls => build_sioux_falls(),
        NetworkSource::File(p) => MobilityGraph::from_spec(&NetworkSpec::read(p)?)?,
    };
    let broken = graph.check_invariants();
    if broken.is_empty() {
        Ok(graph)
    } else {
        Err(Error::InvalidNetwork(broken))
    }
}

fn out_dir(g: &Global) -> Result<PathBuf> {
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn validate(g: &Global, network: Option<&Path>) -> Result<i32> {
    let mut problems = Vec::new();
    let spec = match network {
        Some(p) => Some(NetworkSpec::read(p)?),
        None => None,
    };
    let graph = match &spec {
        Some(s) => match MobilityGraph::from_spec(s) {
            Ok(graph) => Some(graph),
            Err(Error::InvalidNetwork(v)) => {
                problems.extend(v);
                None
            }
            Err(e) => return Err(e),
        },
        None => Some(build_sioux_falls()),
    };
    if let Some(graph) = &graph {
        problems.extend(graph.check_invariants());
    }
    if g.config.is_some() {
        if let Err(e) = load_config(g) {
            problems.push(e.to_string());
        }
    }
    if problems.is_empty() {
        println!("OK");
        Ok(0)
    } else {
        for p in &problems {
            println!("{p}");
        }
        Ok(1)
    }
}

fn run_one(g: &Global) -> Result<i32> {
    let cfg = load_config(g)?;
    let graph = load_graph(&cfg)?;
    let s = Scenario::with_graph(&cfg, graph)?;
    let baseline = s.baseline()?;
    let record = s.run(&cfg.betas, &baseline)?;
    let dir = out_dir(g)?;
    let records = [record];
    report::write_file(&dir.join("results.csv"), &report::results_csv(&records, cfg.logit_scale)?)?;
    report::write_file(&dir.join("schedule.csv"), &report::schedule_csv(&records, &s.graph)?)?;
    let r = &records[0];
    println!(
        "{}: years cooperated {}/{}, delta F {}, CIR {}, ROC {}",
        r.name,
        r.years_cooperated(),
        r.years.len(),
        report::sig6(r.delta_f),
        report::sig6(r.cir),
        r.roc.map_or("NA".into(), report::sig6)
    );
    Ok(0)
}

fn run_sweep(g: &Global) -> Result<i32> {
    let cfg = load_config(g)?;
    let graph = load_graph(&cfg)?;
    let s = Scenario::with_graph(&cfg, graph)?;
    let records = s.sweep(&cfg.grid)?;
    let dir = out_dir(g)?;
    report::write_file(&dir.join("results.csv"), &report::results_csv(&records, cfg.logit_scale)?)?;
    report::write_file(&dir.join("schedules.csv"), &report::schedule_csv(&records, &s.graph)?)?;
    report::write_file(&dir.join("scatter.svg"), report::scatter_svg(&records).as_bytes())?;
    let h = highlights(&records);
    println!("{} schedules, {} accepted", records.len(), scenario::accepted_points(&records).len());
    for (label, idx) in [("highest return", h.highest_return), ("most efficient", h.most_efficient)] {
        if let Some(i) = idx {
            let r = &records[i];
            let betas: Vec<String> = r.years.iter().map(|y| report::sig6(y.betas[0])).collect();
            println!(
                "{label}: betas [{}], delta F {}, CIR {}, ROC {}",
                betas.join(", "),
                report::sig6(r.delta_f),
                report::sig6(r.cir),
                r.roc.map_or("NA".into(), report::sig6)
            );
        }
    }
    Ok(0)
}

fn run_hetero(g: &Global) -> Result<i32> {
    let cfg = load_config(g)?;
    if cfg.network != NetworkSource::SiouxFalls {
        load_graph(&cfg)?;
    }
    let rows = scenario::heterogeneous_suite(&cfg)?;
    let dir = out_dir(g)?;
    report::write_file(&dir.join("hetero_roc.csv"), &report::hetero_csv(&rows)?)?;
    let all: Vec<_> = rows.iter().flat_map(|r| r.records.iter().cloned()).collect();
    report::write_file(&dir.join("results.csv"), &report::results_csv(&all, cfg.logit_scale)?)?;
    for row in &rows {
        let median = row.roc.map_or("NA".into(), |d| report::sig6(d.median));
        println!("{}: median ROC {median}", row.name);
    }
    Ok(0)
}

fn ue_check() -> Result<i32> {
    let mut worst: f64 = 0.0;
    for inst in ue_oracle::toy_instances() {
        match inst.solve() {
            Ok(r) => {
                worst = worst.max(r.gap);
                let flows: Vec<String> = r.path_flows.iter().flatten().map(|f| report::sig6(*f)).collect();
                println!("{}: gap {}, path flows [{}]", inst.name, report::sig6(r.gap), flows.join(", "));
            }
            Err(Error::Infeasible(why)) => println!("{}: infeasible ({why})", inst.name),
            Err(e) => return Err(e),
        }
    }
    let pigou = ue_oracle::pigou();
    let solved = pigou.solve()?;
    let road = pigou.graph.alt_edges()[0];
    let expected = ue_oracle::pigou_closed_form(&pigou);
    let got = solved.edge_flows[road.0];
    println!("pigou road flow {} vs closed form {}", report::sig6(got), report::sig6(expected));
    if worst > 1e-3 || (got - expected).abs() > 1e-3 * expected.max(1.0) {
        eprintln!("error: equilibrium check out of tolerance");
        return Ok(2);
    }
    Ok(0)
}
