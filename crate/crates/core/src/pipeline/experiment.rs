use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decoder::Ablation;
use crate::error::{Error, Result};
use crate::metrics::{markdown_table, DatasetEvaluation};
use crate::pipeline::config::{InputModality, RunConfig};
use crate::pipeline::train::{prepare_data, Trainer};

/// Outcome of one train-then-evaluate run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunResult {
    pub label: String,
    pub config: RunConfig,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub steps: u64,
    pub test: DatasetEvaluation,
}

/// Trains on the config's train split and evaluates on its test split.
pub fn run_experiment(label: &str, cfg: &RunConfig, out: Option<&Path>) -> Result<RunResult> {
    let (train, test) = prepare_data(cfg)?;
    if test.is_empty() {
        return Err(Error::Data("the test split is empty".into()));
    }
    let mut trainer = Trainer::new(cfg.clone(), train)?;
    let logs = trainer.fit(out)?;
    let test = trainer.evaluate(&test)?;
    if let Some(dir) = out {
        write_reports(dir, &test)?;
    }
    Ok(RunResult {
        label: label.to_string(),
        config: cfg.clone(),
        initial_loss: logs.first().map_or(f64::NAN, |l| l.loss.total),
        final_loss: logs.last().map_or(f64::NAN, |l| l.loss.total),
        steps: trainer.global_step,
        test,
    })
}

/// `report.json`, `report.md` and `curves.csv` for one evaluation.
pub fn write_reports(dir: &Path, eval: &DatasetEvaluation) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };
    write("report.json", serde_json::to_string_pretty(eval)?)?;
    write("report.md", markdown_table("Method", &[("SWNet".to_string(), eval.report)]))?;
    write("curves.csv", eval.curves_csv())
}

/// Row order of the ablation table.
pub const ABLATION_ORDER: [Ablation; 3] = [Ablation::EdgeOnly, Ablation::CbamOnly, Ablation::Full];

/// Three runs that differ only in the ablation flag.
pub fn ablate(cfg: &RunConfig, out: Option<&Path>) -> Result<Vec<RunResult>> {
    ABLATION_ORDER
        .iter()
        .map(|&a| {
            let mut c = cfg.clone();
            c.model.ablation = a;
            let dir = out.map(|d| d.join(format!("{a:?}").to_lowercase()));
            run_experiment(a.label(), &c, dir.as_deref())
        })
        .collect()
}

pub fn results_table(header: &str, results: &[RunResult]) -> String {
    let rows: Vec<_> = results.iter().map(|r| (r.label.clone(), r.test.report)).collect();
    markdown_table(header, &rows)
}

pub const MODALITY_ORDER: [(InputModality, &str); 3] = [
    (InputModality::RgbOnly, "Vis"),
    (InputModality::NirOnly, "NIR"),
    (InputModality::Both, "Vis+NIR"),
];

/// Three runs that differ only in which images feed the two branches.
pub fn modality_sweep(cfg: &RunConfig, out: Option<&Path>) -> Result<Vec<RunResult>> {
    MODALITY_ORDER
        .iter()
        .map(|&(m, label)| {
            let mut c = cfg.clone();
            c.modality = m;
            let dir = out.map(|d| d.join(label.to_lowercase().replace('+', "_")));
            run_experiment(label, &c, dir.as_deref())
        })
        .collect()
}
