//! Evaluation harness: ranking metrics, cross-validated DBSCAN tuning,
//! reports and 2-D projections.

mod metrics;
mod pca;
mod report;
mod tune;

pub use metrics::{
    average_precision, average_ranks, detection_rates, precision_at_k, spearman_rho, tpr, DetectionRates, MetricValue,
};
pub use pca::{pca_2d, ProjectedPoint, Projection};
pub use report::{cell_metrics, evaluate, CellInput, CellMetrics, EvalReport, SpearmanPair, SpearmanSummary};
pub use tune::{
    assign_folds, cell_fold_metrics, tune_dbscan, FoldMetrics, GridCell, TuningGrid, TuningReport, TuningSet,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{0}")]
    Input(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, EvalError> {
    let bytes = w
        .into_inner()
        .map_err(|e| EvalError::Input(format!("csv flush failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| EvalError::Input(e.to_string()))
}

/// `id,x,y,label` rows for a projection.
pub fn projection_csv(projection: &Projection, label_of: impl Fn(&str) -> String) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "x", "y", "label"])?;
    for p in &projection.points {
        w.write_record([p.id.clone(), p.x.to_string(), p.y.to_string(), label_of(&p.id)])?;
    }
    finish_csv(w)
}
