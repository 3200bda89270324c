use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swnet::data::{self, SynthConfig};
use swnet::metrics::{self, markdown_table, DatasetEvaluation};
use swnet::pipeline::experiment::{ablate, results_table, write_reports};
use swnet::pipeline::predict::predict_dir;
use swnet::pipeline::train::{configure_threads, prepare_data};
use swnet::pipeline::{Checkpoint, DataSource, InputModality, RunConfig, Trainer};
use swnet::{Ablation, Error, Result};

#[derive(Parser)]
#[command(name = "swnet", version, about = "Bimodal RGB+NIR camouflaged object segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Run configuration as JSON; missing fields take desk-scale defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Dataset root in the rgb/ nir/ mask/ layout (replaces synthetic data).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(Ablation))]
    ablation: Option<Ablation>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Square input side in pixels (multiple of 32).
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(InputModality))]
    modality: Option<InputModality>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
            if let DataSource::Synthetic(sc) = &mut cfg.data {
                sc.seed = s;
            }
        }
        if let Some(d) = &self.data {
            cfg.data = DataSource::Disk { path: d.clone() };
        }
        if let Some(a) = self.ablation {
            cfg.model.ablation = a;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if let Some(s) = self.size {
            cfg.input_side = s;
            if let DataSource::Synthetic(sc) = &mut cfg.data {
                sc.size = s;
            }
        }
        if let Some(b) = self.batch {
            cfg.batch_size = b;
        }
        if let Some(m) = self.modality {
            cfg.modality = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic spectral-camouflage dataset.
    Synth {
        #[command(flatten)]
        o: Overrides,
        #[arg(long)]
        out: PathBuf,
        /// Number of samples (default from the config).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Train, checkpoint every epoch and evaluate on the test split.
    Train {
        #[command(flatten)]
        o: Overrides,
        #[arg(long)]
        out: PathBuf,
        /// Continue from a checkpoint (its embedded config wins).
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Export refined maps (and overlays where masks exist) for a directory.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Input root with rgb/ and nir/ (mask/ optional).
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a directory of predicted PNGs against ground-truth masks.
    Eval {
        /// Directory of predicted maps.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth mask directory, or a dataset root containing mask/.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the edge-only, CBAM-only and full variants and tabulate them.
    Ablate {
        #[command(flatten)]
        o: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge report.json files into one Markdown table.
    Report {
        /// Report files; each row is labelled by its parent directory.
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { o, out, samples } => {
            let cfg = o.resolve()?;
            let mut sc = match cfg.data {
                DataSource::Synthetic(s) => s,
                DataSource::Disk { .. } => SynthConfig::default(),
            };
            if let Some(n) = samples {
                sc.n_samples = n;
            }
            let (manifest, _) = data::generate_synthetic(&sc, &out)?;
            println!("wrote {} samples to {}", manifest.len(), out.display());
        }
        Command::Train { o, out, resume } => {
            let (mut trainer, test) = match resume {
                Some(ck) => {
                    let ck = Checkpoint::load(&ck)?;
                    let (train, test) = prepare_data(&ck.config)?;
                    (Trainer::from_checkpoint(ck, train)?, test)
                }
                None => {
                    let cfg = o.resolve()?;
                    write(&out.join("config.json"), &serde_json::to_string_pretty(&cfg)?)?;
                    let (train, test) = prepare_data(&cfg)?;
                    (Trainer::new(cfg, train)?, test)
                }
            };
            println!("{} parameters", trainer.params.num_scalars());
            let logs = trainer.fit(Some(&out))?;
            if let Some(l) = logs.last() {
                println!("final loss {:.5} after {} steps", l.loss.total, trainer.global_step);
            }
            if !test.is_empty() {
                let eval = trainer.evaluate(&test)?;
                write_reports(&out, &eval)?;
                print!("{}", markdown_table("Method", &[("SWNet".into(), eval.report)]));
            }
        }
        Command::Predict { checkpoint, data, out } => {
            let written = predict_dir(&checkpoint, &data, &out)?;
            println!("wrote {} maps to {}", written.len(), out.display());
        }
        Command::Eval { pred, data, out } => {
            let gt = if data.join("mask").is_dir() { data.join("mask") } else { data };
            let eval = metrics::evaluate_dataset(&pred, &gt)?;
            write_reports(&out, &eval)?;
            print!("{}", markdown_table("Method", &[("SWNet".into(), eval.report)]));
        }
        Command::Ablate { o, out } => {
            let cfg = o.resolve()?;
            let results = ablate(&cfg, Some(&out))?;
            let table = results_table("Configuration", &results);
            write(&out.join("ablation.md"), &table)?;
            write(&out.join("ablation.json"), &serde_json::to_string_pretty(&results)?)?;
            print!("{table}");
        }
        Command::Report { reports, out } => {
            let mut rows = Vec::new();
            for p in &reports {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                    path: p.clone(),
                    source: e,
                })?;
                let eval: DatasetEvaluation = serde_json::from_str(&text)?;
                let label = p
                    .parent()
                    .and_then(|d| d.file_name())
                    .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
                rows.push((label, eval.report));
            }
            let table = markdown_table("Run", &rows);
            match out {
                Some(path) => write(&path, &table)?,
                None => print!("{table}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    configure_threads();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
