use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hetnet_core::cellular::InterferenceMode;
use hetnet_core::eval::{emit_outputs, run_experiment, ExperimentConfig, MethodKind};
use hetnet_core::Error;

/// Runs user-association experiments on randomized two-tier network drops.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Experiment configuration (.toml or .json).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed of the first drop.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    drops: Option<usize>,
    /// UEs per macro cell.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["10", "25"]))]
    ues: Option<String>,
    /// Comma-separated methods: re, optimizer, optimizer_pr, macro_only, pico_only, multiflow.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Comma-separated pico biases in dB for range expansion.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    re_bias: Option<Vec<f64>>,
    /// Backhaul cap as `fraction,cap_mbps`.
    #[arg(long)]
    backhaul: Option<String>,
    /// Interference mode of the multiflow method.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for drops (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Fail on solver divergence instead of dropping the affected drop.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Fixed,
    Pr,
}

fn configure(args: &Args) -> Result<ExperimentConfig, Error> {
    let mut c = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        c.seed_base = s;
    }
    if let Some(d) = args.drops {
        c.drops = d;
    }
    if let Some(u) = &args.ues {
        c.scenario.ues_per_macro = u.parse().expect("validated by clap");
    }
    if let Some(m) = &args.methods {
        c.methods = m.iter().map(|s| s.parse::<MethodKind>()).collect::<Result<_, _>>()?;
    }
    if let Some(b) = &args.re_bias {
        c.re_biases_db = b.clone();
    }
    if let Some(spec) = &args.backhaul {
        let parts: Vec<&str> = spec.split(',').collect();
        let parsed: Option<(f64, f64)> = match parts.as_slice() {
            [f, cap] => f.trim().parse().ok().zip(cap.trim().parse().ok()),
            _ => None,
        };
        let (frac, cap) = parsed.ok_or_else(|| Error::Config(format!("--backhaul expects fraction,cap_mbps, got '{spec}'")))?;
        c.scenario.backhaul_fraction = frac;
        c.scenario.backhaul_cap_bps = cap * 1e6;
    }
    if let Some(m) = args.mode {
        c.mode = match m {
            Mode::Fixed => InterferenceMode::FixedPower,
            Mode::Pr => InterferenceMode::PowerReduction,
        };
    }
    if let Some(o) = &args.out {
        c.output_dir = Some(o.clone());
    }
    if let Some(w) = args.workers {
        c.workers = w;
    }
    c.strict |= args.strict;
    c.validate()?;
    Ok(c)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let config = match configure(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::Solver(_) => ExitCode::from(3),
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            };
        }
    };
    for m in &result.methods {
        println!(
            "{:<14} mean SE {:.4} bps/Hz  5% edge {:.4} Mbps  ({} UEs)",
            m.slug,
            m.metrics.mean_spectral_efficiency,
            m.metrics.edge_rate_bps / 1e6,
            m.metrics.num_ues
        );
    }
    let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    match emit_outputs(&result, &dir) {
        Ok(files) => {
            println!("wrote {} files to {}", files.len(), dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
