use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wkbsplit::exec::{configure_threads_from_env, Execution};
use wkbsplit::harness::{fit_orders, presets, read_csv, run_scenario, ScenarioConfig};
use wkbsplit::Error;

#[derive(Parser)]
#[command(name = "wkbsplit", version, about = "Time-splitting convergence sweeps for semiclassical NLS")]
struct Cli {
    /// Run cells one after another.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in scenario.
    Run {
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Fit convergence orders from a results table.
    Orders { csv: PathBuf },
    /// List built-in scenarios or print one as JSON.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Format { .. } => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Run { config, out, scenario } => {
            let cfg = match (config, scenario) {
                (Some(path), None) => ScenarioConfig::load(path)?,
                (None, Some(name)) => presets::preset(&name)?,
                (None, None) => return Err(Error::Config("give a config file or --scenario NAME".into())),
                (Some(_), Some(_)) => {
                    return Err(Error::Config("a config file and --scenario are mutually exclusive".into()))
                }
            };
            cfg.validate()?;
            let summary = run_scenario(&cfg, out.as_deref(), exec)?;
            println!("T = {:.6}", summary.result.t_final);
            println!("results: {}", summary.csv.display());
            for p in &summary.plots {
                println!("plot: {}", p.display());
            }
            if let Some((eps, d)) = summary.result.cross_check {
                println!("reference cross-check at eps = {eps}: {d:.3e}");
            }
            let failed = summary.result.cells.iter().filter(|c| c.failure.is_some()).count();
            if failed > 0 {
                println!("{failed} of {} cells stopped by a guard", summary.result.cells.len());
            }
            Ok(if summary.result.all_failed() { 3 } else { 0 })
        }
        Command::Orders { csv } => {
            let rows = read_csv(&csv)?;
            println!("eps,metric,order,constant,r2");
            for (eps, name, fit) in fit_orders(&rows) {
                match fit {
                    Ok(f) => println!("{eps},{name},{:.4},{:.4e},{:.4}", f.slope, f.constant(), f.r2),
                    Err(e) => log::warn!("eps = {eps}, {name}: {e}"),
                }
            }
            Ok(0)
        }
        Command::Presets { show: None } => {
            for name in presets::NAMES {
                println!("{name}");
            }
            Ok(0)
        }
        Command::Presets { show: Some(name) } => {
            println!("{}", presets::preset(&name)?.to_json());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = configure_threads_from_env().and_then(|()| run(cli));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
