use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lsasim::crrm::InterfaceMode;
use lsasim::metrics::{compare, load_summary, write_outputs, Relation, Report, Status};
use lsasim::scenario::{bundled, corpus_names, parse_scenario, Scenario, ScenarioErrors, BUNDLED};
use lsasim::sim::Simulation;

/// Environment variable naming the default output root for `run`.
const OUT_ENV: &str = "LSASIM_OUT";

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "lsasim",
    version,
    about = "Edge-cloud cRRM on LSA spectrum: scenario runner and verdicts"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a scenario, reporting every error found.
    Validate {
        /// Scenario file, or the name of a bundled scenario.
        scenario: String,
    },
    /// Run a scenario to its horizon and write reports.
    Run {
        scenario: String,
        /// Override the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory. Defaults to `$LSASIM_OUT/<name>-seed<seed>`,
        /// or `runs/<name>-seed<seed>` when the variable is unset.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the processed-event trace to `trace.log`.
        #[arg(long)]
        trace: bool,
        /// Override the sensing report interface.
        #[arg(long, value_enum)]
        interface: Option<Interface>,
    },
    /// Check `A <relation> B` on one summary metric of two finished runs.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        #[arg(long)]
        metric: String,
        /// `>=` or `<=`.
        #[arg(long, default_value = ">=")]
        relation: Relation,
        /// Relative to |B|.
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
    },
    /// List bundled scenarios, or print one.
    Corpus {
        /// Print this scenario's document instead of the list.
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Interface {
    Realtime,
    Batch,
}

fn load(arg: &str) -> Result<(Scenario, Option<String>), String> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {arg}: {e}"))?;
        return parse_scenario(&text)
            .map(|s| (s, Some(arg.to_string())))
            .map_err(|e| render(arg, &e));
    }
    match bundled(arg) {
        Some(r) => r.map(|s| (s, None)).map_err(|e| render(arg, &e)),
        None => Err(format!(
            "{arg}: no such file or bundled scenario (bundled: {})",
            corpus_names().collect::<Vec<_>>().join(", ")
        )),
    }
}

fn render(src: &str, e: &ScenarioErrors) -> String {
    format!("{src}: {} error(s)\n{e}", e.0.len())
}

fn run(
    scenario: &str,
    seed: Option<u64>,
    out: Option<PathBuf>,
    trace: bool,
    interface: Option<Interface>,
) -> Result<u8, String> {
    let (mut s, path) = load(scenario)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(i) = interface {
        s.crrm.interface = match i {
            Interface::Realtime => InterfaceMode::Realtime,
            Interface::Batch => InterfaceMode::Batch,
        };
    }
    let dir = out.unwrap_or_else(|| {
        let root = std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| "runs".into());
        root.join(format!("{}-seed{}", s.name, s.seed))
    });
    std::fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;

    let mut sim = Simulation::new(s).map_err(|e| e.to_string())?;
    if trace {
        let f = File::create(dir.join("trace.log")).map_err(|e| format!("cannot create trace: {e}"))?;
        sim = sim.with_trace(Box::new(BufWriter::new(f)));
    }
    let output = sim.run().map_err(|e| e.to_string())?;
    let report = Report::build(&output);
    write_outputs(&output, &report, &dir, path.as_deref(), seed.is_some())
        .map_err(|e| format!("cannot write reports to {}: {e}", dir.display()))?;

    for v in &report.verdicts {
        println!("{:<22} {:<14} {}", v.name, v.status, v.detail);
    }
    println!("reports in {}", dir.display());
    let failed = report.failed();
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("FAIL: {}", failed.join(", "));
        Ok(EXIT_FAIL)
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, String> {
    match cmd {
        Cmd::Validate { scenario } => {
            let (s, _) = load(&scenario)?;
            println!(
                "{}: ok ({} cells, {} channels, sha256 {})",
                s.name,
                s.cells.len(),
                s.channels.len(),
                s.content_hash()
            );
            Ok(0)
        }
        Cmd::Run {
            scenario,
            seed,
            out,
            trace,
            interface,
        } => run(&scenario, seed, out, trace, interface),
        Cmd::Compare {
            run_a,
            run_b,
            metric,
            relation,
            tolerance,
        } => {
            let a = load_summary(&run_a).map_err(|e| e.to_string())?;
            let b = load_summary(&run_b).map_err(|e| e.to_string())?;
            let st = compare(&a, &b, &metric, relation, tolerance).map_err(|e| e.to_string())?;
            println!(
                "{metric}: {} {relation} {} (tolerance {tolerance}) -> {st}",
                a.metrics[&metric], b.metrics[&metric]
            );
            Ok(if st == Status::Pass { 0 } else { EXIT_FAIL })
        }
        Cmd::Corpus { show: None } => {
            for name in corpus_names() {
                println!("{name}");
            }
            Ok(0)
        }
        Cmd::Corpus { show: Some(name) } => match BUNDLED.iter().find(|(n, _)| *n == name) {
            Some((_, text)) => {
                print!("{text}");
                Ok(0)
            }
            None => Err(format!("no bundled scenario named {name}")),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
