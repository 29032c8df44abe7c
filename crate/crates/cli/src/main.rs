use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use indexlab::checks::{run_scenarios, ScenarioRun};
use indexlab::par::Exec;
use indexlab::report::{emit_report, summary_rows, summary_table, write_csv, Format};
use indexlab::scenario::{preset, presets, suite, Overrides, Scenario, Suite};

#[derive(Parser)]
#[command(name = "indexlab", version, about = "Executable checks of index identities for one-dimensional Dirac operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of one scenario file (TOML).
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a preset suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
    /// List the built-in scenarios, or print one as a scenario file.
    ListPresets {
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Override the truncation K (also used for the eta problems).
    #[arg(long)]
    truncation: Option<usize>,
    /// Override the number of points on parameter paths.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "indexlab-out")]
    out_dir: PathBuf,
    #[arg(long, default_value = "both")]
    format: Format,
    /// Run without the thread pool.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { truncation: self.truncation, grid: self.grid, seed: self.seed }
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

fn execute(scenarios: Vec<Scenario>, common: &Common) -> anyhow::Result<bool> {
    let scenarios = scenarios
        .into_iter()
        .map(|s| s.with_overrides(&common.overrides()))
        .collect::<Result<Vec<_>, _>>()?;
    eprintln!("running {} scenario(s)", scenarios.len());
    let runs: Vec<ScenarioRun> = run_scenarios(&scenarios, common.exec());
    for run in &runs {
        emit_report(&run.report, &run.artifacts, &common.out_dir, common.format)?;
    }
    let reports: Vec<_> = runs.into_iter().map(|r| r.report).collect();
    let rows = summary_rows(&reports);
    let summary = common.out_dir.join("summary.csv");
    write_csv(&summary, &rows)?;
    print!("{}", summary_table(&rows));
    for r in &reports {
        for c in r.records().filter(|c| c.error.is_some()) {
            let e = c.error.as_ref().unwrap();
            eprintln!("{} / {}: {} ({})", r.scenario, c.check, e.message, e.term.as_deref().unwrap_or("-"));
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    eprintln!(
        "{} of {} scenario(s) passed; records in {}",
        reports.len() - failed,
        reports.len(),
        common.out_dir.display()
    );
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, common } => std::fs::read_to_string(&scenario)
            .with_context(|| format!("reading {}", scenario.display()))
            .and_then(|text| Ok(Scenario::from_toml(&text)?))
            .and_then(|s| execute(vec![s], &common)),
        Command::Verify { suite: name, common } => execute(suite(name), &common),
        Command::ListPresets { show: Some(name) } => match preset(&name) {
            Some(s) => s.to_toml().map(|t| {
                print!("{t}");
                true
            }).map_err(Into::into),
            None => Err(anyhow::anyhow!("no preset named '{name}'")),
        },
        Command::ListPresets { show: None } => {
            for s in presets() {
                let checks: Vec<&str> = s.checks.iter().map(|c| c.name()).collect();
                println!("{:34} {:10} {}", s.name, s.model.kind(), checks.join(","));
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
