use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use boltzprice_cli::{config, load_config, preset, resolve, run_experiment, Scale};
use boltzprice_core::Example;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "boltzprice",
    version,
    about = "Run price formation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every run and comparison in a config file.
    Run { config: PathBuf },
    /// Write a built-in experiment's config and run it.
    Preset {
        #[arg(value_parser = parse_example)]
        name: Example,
        /// Output directory; defaults to out/<name>.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Scale::Desk)]
        scale: Scale,
    },
    /// Check a config file and list the runs it expands to.
    Validate { config: PathBuf },
}

fn parse_example(s: &str) -> Result<Example, String> {
    s.parse().map_err(|e: boltzprice_core::Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Run { config } => {
            let cfg = load_config(&config)?;
            let exp = resolve(&cfg)?;
            let dir = exp.output.dir.clone();
            finish(run_experiment(&exp, &dir)?)
        }
        Command::Preset { name, out, scale } => {
            let mut cfg = preset(name, scale);
            let dir = out.unwrap_or_else(|| PathBuf::from("out").join(name.name()));
            cfg.output.dir = dir.clone();
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join("config.json");
            std::fs::write(&path, serde_json::to_string_pretty(&cfg)? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            let exp = resolve(&cfg)?;
            finish(run_experiment(&exp, &dir)?)
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            let exp = resolve(&cfg)?;
            print!("{}", summary(&exp));
            Ok(true)
        }
    }
}

fn finish(report: boltzprice_cli::Report) -> anyhow::Result<bool> {
    for line in &report.errors {
        eprintln!("{line}");
    }
    println!(
        "{} runs, {} comparison rows written to {}",
        report.outcomes.len(),
        report.comparisons.len(),
        report.dir.display()
    );
    Ok(report.succeeded())
}

fn summary(exp: &boltzprice_cli::Experiment) -> String {
    let mut out = format!("{}: {} runs\n", exp.name, exp.runs.len());
    for run in &exp.runs {
        let p = run.params;
        let steps = boltzprice_core::boltzmann::step_count(p.t_end, p.dt);
        out += &format!(
            "  {:<16} {:<12} nodes={} h={} a={} ({} cells) dt={} steps={}",
            run.label,
            run.model.to_string(),
            run.grid.n_nodes(),
            run.grid.h(),
            p.a,
            run.shift.steps(),
            p.dt,
            steps
        );
        match run.model {
            config::ModelKind::Boltzmann | config::ModelKind::Layer => {
                out += &format!(" k={}", p.k)
            }
            config::ModelKind::Limit => out += &format!(" c={}", p.c),
            _ => {}
        }
        out.push('\n');
    }
    for c in &exp.comparisons {
        out += &format!("  compare {} vs {} ({:?})\n", c.a, c.b, c.quantity);
    }
    out
}
