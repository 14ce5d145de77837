//! Command-line front end for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dgqa::distortion::DomainId;
use dgqa::harness::config::ExperimentConfig;
use dgqa::harness::{gds, pipeline, report, synth};
use dgqa::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dgqa",
    version,
    about = "Distortion-guided source-domain selection for blind image quality assessment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config JSON (or a run.json from an earlier run).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize source-domain datasets and the target set.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Single-family form: reference directory.
        #[arg(long, requires = "family")]
        refs: Option<PathBuf>,
        /// Single-family form: distortion family id.
        #[arg(long, requires = "refs")]
        family: Option<u8>,
        /// Single-family form: severity levels, e.g. `1..5` or `1,3,5`.
        #[arg(long, default_value = "1..5")]
        levels: String,
    },
    /// Train the multi-source domain classifier.
    TrainDomain {
        #[command(flatten)]
        common: Common,
    },
    /// Score target similarity and select source domains.
    Select {
        #[command(flatten)]
        common: Common,
        /// Classifier checkpoint (default: <out>/classifier.json).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train the quality regressor on a domain subset.
    TrainIqa {
        #[command(flatten)]
        common: Common,
        /// Comma-separated domain ids (default: the recorded selection).
        #[arg(long)]
        domains: Option<String>,
    },
    /// Full run: classifier, selection, paired regressors, evaluation.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
    /// Supervised greedy selection diagnostic (needs target labels).
    Gds {
        #[command(flatten)]
        common: Common,
    },
    /// Regenerate report.md / report.json from run artifacts.
    Report {
        /// Completed run directory.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a procedural reference corpus.
    GenRefs {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 96)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_levels(text: &str) -> Result<Vec<u8>> {
    let parse_one = |s: &str| -> Result<u8> {
        s.trim()
            .parse::<u8>()
            .map_err(|_| Error::validation(format!("bad level `{s}`")))
    };
    if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (parse_one(lo)?, parse_one(hi)?);
        if lo > hi {
            return Err(Error::validation(format!("empty level range `{text}`")));
        }
        Ok((lo..=hi).collect())
    } else {
        text.split(',').map(parse_one).collect()
    }
}

fn parse_domains(text: &str) -> Result<Vec<DomainId>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u8>()
                .map(DomainId)
                .map_err(|_| Error::validation(format!("bad domain id `{s}`")))
        })
        .collect()
}

fn load_config(path: &PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(out) = out {
        config.out_dir = out;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            config,
            seed,
            out,
            refs,
            family,
            levels,
        } => match (config, refs) {
            (Some(config), None) => {
                let config = load_config(&config, seed, out)?;
                synth::cmd_synth(&config)?;
                Ok(())
            }
            (None, Some(refs)) => {
                let family = DomainId(family.expect("clap enforces --family with --refs"));
                let out = out.ok_or_else(|| {
                    Error::validation("single-family synth needs --out")
                })?;
                synth::cmd_synth_single(
                    &refs,
                    family,
                    &parse_levels(&levels)?,
                    seed.unwrap_or(0),
                    &out,
                )
            }
            _ => Err(Error::validation(
                "synth takes either --config or the --refs/--family form",
            )),
        },
        Command::TrainDomain { common } => {
            let config = load_config(&common.config, common.seed, common.out)?;
            pipeline::cmd_train_domain(&config)?;
            Ok(())
        }
        Command::Select { common, model } => {
            let config = load_config(&common.config, common.seed, common.out)?;
            pipeline::cmd_select(&config, model.as_deref())?;
            Ok(())
        }
        Command::TrainIqa { common, domains } => {
            let config = load_config(&common.config, common.seed, common.out)?;
            let domains = domains.as_deref().map(parse_domains).transpose()?;
            pipeline::cmd_train_iqa(&config, domains)?;
            Ok(())
        }
        Command::Pipeline { common } => {
            let config = load_config(&common.config, common.seed, common.out)?;
            let summary = pipeline::cmd_pipeline(&config)?;
            if let (Some(dgqa), Some(baseline)) =
                (&summary.dgqa_median, &summary.baseline_median)
            {
                println!(
                    "dgqa median srcc {:.4} plcc {:.4} | baseline srcc {:.4} plcc {:.4}",
                    dgqa.srcc, dgqa.plcc, baseline.srcc, baseline.plcc
                );
            } else {
                println!("pipeline complete (unlabeled target; metrics skipped)");
            }
            Ok(())
        }
        Command::Gds { common } => {
            let config = load_config(&common.config, common.seed, common.out)?;
            let report = gds::cmd_gds(&config)?;
            println!(
                "gds selected {} domain(s); jaccard vs dgds {:.3}",
                report.selected.len(),
                report.jaccard
            );
            Ok(())
        }
        Command::Report { run, out } => {
            report::cmd_report(&run, out.as_deref())?;
            Ok(())
        }
        Command::GenRefs {
            out,
            count,
            size,
            seed,
        } => synth::cmd_gen_refs(&out, count, size, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
