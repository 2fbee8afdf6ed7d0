//! `rough-reduct` command-line interface.
//!
//! Exit codes: 0 on success, 1 when a verification or bench invariant
//! fails, 2 on usage or input errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rough_reduct::harness::{init_threads_from_env, run_bench, BenchSpec};
use rough_reduct::oracle::{verify_slr, verify_sr, OracleBudget, VerifyReport};
use rough_reduct::{
    load_csv, reduce, synth, write_csv, write_schema, Mode, NeighborhoodConfig, Relation, Schema,
    SynthSpec, Variant,
};

#[derive(Parser)]
#[command(name = "rough-reduct", version, about = "Rough-set attribute reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce one dataset and print the report as JSON.
    Reduce {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, default_value = "classic")]
        mode: Mode,
        #[arg(long, default_value = "lra")]
        variant: Variant,
        /// Neighborhood radius; required with `--mode neighborhood`.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run a TOML bench spec.
    Bench {
        spec: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Also write the wide CSV table.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check the redundancy-elimination and restricted-refinement rules on random systems.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value = "classic")]
        mode: Mode,
        #[arg(long)]
        delta: Option<f64>,
        /// Print the full reports as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic dataset as CSV plus schema.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Schema path; defaults to the CSV path with a `.schema` extension.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        numeric: usize,
        #[arg(long, default_value_t = 0)]
        categorical: usize,
        /// Make the last `k` attributes copies of the first `k`.
        #[arg(long, default_value_t = 0)]
        duplicates: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Sr,
    Slr,
    All,
}

enum Outcome {
    Ok,
    Failed,
}

fn relation(mode: Mode, delta: Option<f64>) -> anyhow::Result<Relation> {
    let cfg = delta.map(NeighborhoodConfig::new).transpose()?;
    Ok(Relation::from_mode(mode, cfg)?)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    init_threads_from_env()?;
    match cli.command {
        Command::Reduce { data, schema, mode, variant, delta } => {
            let schema = Schema::load(&schema)?;
            let sys = load_csv(&data, &schema)?;
            let cfg = delta.map(NeighborhoodConfig::new).transpose()?;
            let mut report = reduce(&sys, mode, variant, cfg)?;
            report.config.dataset = Some(data.display().to_string());
            println!("{}", report.to_json());
            Ok(Outcome::Ok)
        }
        Command::Bench { spec, json, csv } => {
            let spec = BenchSpec::load(&spec)?;
            let report = run_bench(&spec);
            match json {
                Some(path) => std::fs::write(&path, report.to_json())
                    .with_context(|| format!("writing {}", path.display()))?,
                None => println!("{}", report.to_json()),
            }
            if let Some(path) = csv {
                std::fs::write(&path, report.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
            }
            for e in &report.errors {
                eprintln!("dataset {}: {}", e.dataset, e.message);
            }
            for v in &report.violations {
                eprintln!("violation: {v}");
            }
            Ok(if report.passed() { Outcome::Ok } else { Outcome::Failed })
        }
        Command::Verify { suite, seed, trials, mode, delta, json } => {
            let rel = relation(mode, delta)?;
            let budget = OracleBudget::default();
            let mut reports: Vec<VerifyReport> = Vec::new();
            if suite != Suite::Slr {
                reports.push(verify_sr(seed, trials, &budget, &rel));
            }
            if suite != Suite::Sr {
                reports.push(verify_slr(seed, trials, &budget, &rel));
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            }
            let mut total = 0;
            for r in &reports {
                total += r.counterexamples.len();
                eprintln!(
                    "{}: {} trials, premise held in {}, {} counterexamples",
                    r.suite,
                    r.trials,
                    r.premise_held,
                    r.counterexamples.len()
                );
            }
            if !json {
                println!("{total} counterexamples");
            }
            Ok(if total == 0 { Outcome::Ok } else { Outcome::Failed })
        }
        Command::Synth { out, schema, seed, n, numeric, categorical, duplicates, classes } => {
            if duplicates > numeric + categorical {
                bail!("--duplicates exceeds the attribute count");
            }
            let spec = SynthSpec::new(seed, n, numeric, categorical, classes).with_trailing_duplicates(duplicates);
            let sys = synth(&spec)?;
            let schema = schema.unwrap_or_else(|| out.with_extension("schema"));
            write_csv(&sys, &out)?;
            write_schema(&sys, &schema)?;
            eprintln!("wrote {} and {}", out.display(), schema.display());
            Ok(Outcome::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
