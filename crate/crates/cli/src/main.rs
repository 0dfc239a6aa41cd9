//! `setmffu`: map gate-level SET fault sites to multiple flip-flop upset sets.

mod artifacts;
mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use setmffu::generate::{random_circuit, GeneratorParams};
use setmffu::netlist::write_bench;

use config::RunConfig;
use pipeline::CliError;

#[derive(Debug, Parser)]
#[command(name = "setmffu", version, about = "Map gate-level SET faults to multiple flip-flop upset sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a netlist; writes circuit.json and prints statistics.
    Parse(RunArgs),
    /// Extract fan-in cones and fault sites; writes cones.json and sites.json.
    Cones(RunArgs),
    /// Build static flip-flop sets; writes sets.json.
    Sets(RunArgs),
    /// SAT-based propagation analysis; writes patterns.json and optimized_sets.json.
    Propagate(RunArgs),
    /// Fault-space totals and SFI sample sizes; writes report.json and report.csv.
    Report(ReportArgs),
    /// Every stage in sequence.
    Run(RunArgs),
    /// Write a seeded random sequential circuit in .bench format.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Netlist (.bench, or .json for the native format). Without it, stages
    /// read earlier artifacts from --out.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Fault-site enumeration: collapsed or all_nets.
    #[arg(long)]
    mode: Option<String>,
    /// Clock/reset nets that are never fault sites (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    /// Maximum patterns per site before falling back to the static set.
    #[arg(long)]
    pattern_cap: Option<String>,
    /// Solver conflict budget per call.
    #[arg(long)]
    conflict_cap: Option<String>,
    /// SFI error margins, e.g. `0.05,0.01,0.001` or `5%,1%`.
    #[arg(long)]
    margins: Option<String>,
    /// SFI confidence level: 90, 95 or 99.8.
    #[arg(long)]
    confidence: Option<String>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for propagation analysis.
    #[arg(long)]
    jobs: Option<String>,
    /// Seed for solver heuristics.
    #[arg(long)]
    seed: Option<String>,
    /// Also export one DIMACS CNF per site under <out>/cnf.
    #[arg(long)]
    dimacs: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Only compute sample sizes for --population; no circuit needed.
    #[arg(long, requires = "population")]
    sfi_only: bool,
    /// Fault population N for --sfi-only.
    #[arg(long)]
    population: Option<String>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 4)]
    inputs: usize,
    #[arg(long, default_value_t = 2)]
    outputs: usize,
    #[arg(long, default_value_t = 4)]
    ffs: usize,
    #[arg(long, default_value_t = 20)]
    gates: usize,
    #[arg(long, default_value_t = 3)]
    max_fanin: usize,
    #[arg(long, default_value_t = 12)]
    window: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("mode", self.mode.as_deref()),
            ("pattern-cap", self.pattern_cap.as_deref()),
            ("conflict-cap", self.conflict_cap.as_deref()),
            ("margins", self.margins.as_deref()),
            ("confidence", self.confidence.as_deref()),
            ("jobs", self.jobs.as_deref()),
            ("seed", self.seed.as_deref()),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(p) = &self.input {
            cfg.input = Some(p.clone());
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if !self.exclude.is_empty() {
            cfg.exclude = self.exclude.clone();
        }
        cfg.dimacs |= self.dimacs;
        Ok(cfg)
    }
}

fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let params = GeneratorParams {
        inputs: args.inputs,
        outputs: args.outputs,
        ffs: args.ffs,
        gates: args.gates,
        max_fanin: args.max_fanin,
        window: args.window,
    };
    let text = format!(
        "# random circuit: seed {}, {:?}\n{}",
        args.seed,
        params,
        write_bench(&random_circuit(&params, args.seed))
    );
    match &args.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Parse(a) => pipeline::stage_parse(&a.resolve()?).map(|_| ()),
        Command::Cones(a) => pipeline::stage_cones(&a.resolve()?),
        Command::Sets(a) => pipeline::stage_sets(&a.resolve()?),
        Command::Propagate(a) => pipeline::stage_propagate(&a.resolve()?),
        Command::Report(r) => {
            let cfg = r.run.resolve()?;
            match (&r.population, r.sfi_only) {
                (Some(n), true) => {
                    print!("{}", pipeline::sfi_only(&cfg, n)?);
                    Ok(())
                }
                (Some(_), false) => Err(CliError::Usage("--population only applies with --sfi-only".into())),
                (None, _) => pipeline::stage_report(&cfg),
            }
        }
        Command::Run(a) => pipeline::run_pipeline(&a.resolve()?).map(|_| ()),
        Command::Generate(g) => generate(g),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
