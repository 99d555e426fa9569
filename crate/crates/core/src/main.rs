use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use streampca::harness::experiment::{generate_replicate, replicate_from_records, run_experiment_on};
use streampca::harness::{load_stream, merge_report, save_stream, write_report, ExperimentConfig};
use streampca::learners::{derive_theorem1_params, derive_theorem2_params, theorem_epsilon};
use streampca::stream_model::validate_model;
use streampca::Error;

#[derive(Parser)]
#[command(name = "streampca", version, about = "Online PCA on perturbed spiked-covariance streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model's eigengap condition and derive hyperparameters.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the first replicate's stream (warm-start prefix first).
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run all learners and write curve and summary CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Use this stream instead of generating one; forces one replicate.
        #[arg(long)]
        stream: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge a run's curve CSVs into one long-format CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Parse { .. } => 3,
        Error::Config(_) | Error::ModelViolation(_) | Error::InsufficientData(_) | Error::InvalidInput(_) => 2,
        Error::DegenerateUpdate(_) | Error::Diagnostics { .. } => 1,
    }
}

fn validate(config: &PathBuf) -> streampca::Result<bool> {
    let cfg = ExperimentConfig::from_file(config)?;
    let model = cfg.model.build(cfg.replicate_seeds(0).basis)?;
    let adversary = cfg.adversary.spec(0);
    let report = validate_model(&model, &adversary);
    println!("gap_condition_ok = {}", report.gap_condition_ok);
    println!("slack = {}", report.slack);
    println!("R = {}", report.radius);
    println!("V = {}", report.perturbation);
    if let Some(eps) = report.theorem1_epsilon {
        println!("epsilon = {eps}");
    }
    for m in &report.messages {
        println!("note: {m}");
    }
    let stats = model.stats(adversary.bound());
    if theorem_epsilon(&stats).is_ok() {
        for (name, derived) in [
            ("theorem1", derive_theorem1_params(&stats, cfg.n, cfg.model.d, cfg.p)),
            ("theorem2", derive_theorem2_params(&stats, cfg.n, cfg.model.d, cfg.p)),
        ] {
            match derived {
                Ok(hp) => println!(
                    "{name}: block_length = {}, eta_1 = {}, alpha = {}, init_threshold = {}",
                    hp.block_length,
                    hp.eta(1),
                    hp.alpha,
                    hp.init_threshold.unwrap_or(f64::NAN)
                ),
                Err(e) => println!("{name}: {e}"),
            }
        }
    }
    Ok(report.gap_condition_ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate { config } => validate(&config).map(|ok| if ok { 0 } else { 2 }),
        Command::Generate { config, out } => ExperimentConfig::from_file(&config)
            .and_then(|cfg| generate_replicate(&cfg, 0).map(|s| (cfg, s)))
            .and_then(|(cfg, s)| save_stream(&out, cfg.model.d, &s.all_records()))
            .map(|_| 0),
        Command::Run { config, stream, out } => (|| {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            let loaded = match stream {
                Some(path) => {
                    if cfg.replicates != 1 {
                        eprintln!("note: --stream given, running 1 replicate instead of {}", cfg.replicates);
                        cfg.replicates = 1;
                    }
                    let (d, records) = load_stream(&path)?;
                    Some(replicate_from_records(&cfg, d, records)?)
                }
                None => None,
            };
            let result = run_experiment_on(&cfg, loaded)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            write_report(&result, &out)?;
            for l in &result.learners {
                println!(
                    "{:<16} final_avg_regret = {:.6}{}",
                    l.name,
                    l.final_avg_regret,
                    l.rank_one_error_rate
                        .map(|r| format!("  rank_one_error_rate = {:.4}", r))
                        .unwrap_or_default()
                );
            }
            Ok(0)
        })(),
        Command::Report { input, out } => merge_report(&input, &out).map(|_| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
