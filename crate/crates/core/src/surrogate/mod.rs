//! The three surrogate families (MLP, CNN, RBF network), training and scoring.

mod arch;
mod eval;
mod train;

pub use arch::{build_cnn, build_mlp, build_rbfnet, ArchitectureSpec, CnnSpec, ConvStage, KMEANS_TOL, MLP_HIDDEN, RBF_K};
pub use eval::{score, slot_group, EvalReport, GroupError};
pub use train::{smooth, train_network, TrainConfig};

use serde::{Deserialize, Serialize};

use crate::nn::{Network, NnError, Tensor};
use crate::scenario::{Dataset, Normalizer};

#[derive(Debug, thiserror::Error)]
pub enum SurrogateError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("non-finite gradient at epoch {epoch}, batch {batch}")]
    NonFiniteGradient { epoch: usize, batch: usize },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Mlp,
    Cnn,
    Rbf,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Cnn, Family::Mlp, Family::Rbf];

    pub fn name(self) -> &'static str {
        match self {
            Family::Mlp => "mlp",
            Family::Cnn => "cnn",
            Family::Rbf => "rbf",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(Family::Mlp),
            "cnn" => Ok(Family::Cnn),
            "rbf" | "rbfnet" | "rbfn" => Ok(Family::Rbf),
            other => Err(format!("unknown architecture '{other}' (expected mlp, cnn or rbf)")),
        }
    }
}

/// A network together with everything needed to apply it to raw slot values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Model {
    pub arch: ArchitectureSpec,
    pub train: TrainConfig,
    pub x_names: Vec<String>,
    pub y_names: Vec<String>,
    pub x_norm: Normalizer,
    pub y_norm: Normalizer,
    pub loss_history: Vec<f64>,
    pub network: Network,
}

fn normalizers(ds: &Dataset) -> Result<(Normalizer, Normalizer), SurrogateError> {
    match (&ds.x_norm, &ds.y_norm) {
        (Some(x), Some(y)) => Ok((x.clone(), y.clone())),
        _ => Err(SurrogateError::InvalidConfig("dataset has no training split to normalize with".into())),
    }
}

impl Model {
    /// Untrained model for `ds`; the RBF family clusters the normalized training rows.
    pub fn new(arch: ArchitectureSpec, ds: &Dataset, train: TrainConfig) -> Result<Self, SurrogateError> {
        if arch.inputs != ds.nx() || arch.outputs != ds.ny() {
            return Err(SurrogateError::SchemaMismatch(format!(
                "architecture is {}→{}, dataset is {}→{}",
                arch.inputs,
                arch.outputs,
                ds.nx(),
                ds.ny()
            )));
        }
        train.validate()?;
        let (x_norm, y_norm) = normalizers(ds)?;
        let train_x = if arch.family == Family::Rbf { ds.normalized(&ds.train).0 } else { Vec::new() };
        let network = arch.build(&train_x, train.seed)?;
        Ok(Model {
            arch,
            train,
            x_names: ds.x_names.clone(),
            y_names: ds.y_names.clone(),
            x_norm,
            y_norm,
            loss_history: Vec::new(),
            network,
        })
    }

    pub fn family(&self) -> Family {
        self.arch.family
    }

    pub fn check_schema(&self, ds: &Dataset) -> Result<(), SurrogateError> {
        if self.x_names != ds.x_names || self.y_names != ds.y_names {
            return Err(SurrogateError::SchemaMismatch(format!(
                "model expects {}→{} slots, dataset has {}→{} with different names",
                self.x_names.len(),
                self.y_names.len(),
                ds.nx(),
                ds.ny()
            )));
        }
        Ok(())
    }

    /// Rows of `ds` normalized with this model's scalers.
    fn rows(&self, ds: &Dataset, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(rows.len() * ds.nx());
        let mut y = Vec::with_capacity(rows.len() * ds.ny());
        for &r in rows {
            x.extend_from_slice(ds.x_row(r));
            y.extend_from_slice(ds.y_row(r));
        }
        self.x_norm.apply_all(&mut x);
        self.y_norm.apply_all(&mut y);
        (x, y)
    }

    /// Normalized predictions for normalized inputs, in chunks of `chunk` rows.
    pub fn predict_normalized(&mut self, x: &[f64], chunk: usize) -> Result<Vec<f64>, SurrogateError> {
        let nx = self.x_names.len();
        let mut out = Vec::with_capacity(x.len() / nx.max(1) * self.y_names.len());
        for part in x.chunks(chunk.max(1) * nx) {
            let t = Tensor { shape: vec![part.len() / nx, nx], data: part.to_vec() };
            out.extend(self.network.predict(&t)?.data);
        }
        Ok(out)
    }

    /// Physical predictions for raw feature rows.
    pub fn predict(&mut self, raw_x: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        let mut x = raw_x.to_vec();
        self.x_norm.apply_all(&mut x);
        let mut y = self.predict_normalized(&x, 1024)?;
        self.y_norm.invert_all(&mut y);
        Ok(y)
    }
}

/// Trains on the training split with the model's own config and keeps the loss history.
pub fn train(model: &mut Model, ds: &Dataset, on_epoch: impl FnMut(usize, f64)) -> Result<Vec<f64>, SurrogateError> {
    model.check_schema(ds)?;
    let (x, y) = model.rows(ds, &ds.train);
    let cfg = model.train.clone();
    let history = train_network(&mut model.network, &x, &y, &cfg, on_epoch)?;
    model.loss_history.extend_from_slice(&history);
    Ok(history)
}

pub fn evaluate(model: &mut Model, ds: &Dataset, rows: &[usize]) -> Result<EvalReport, SurrogateError> {
    evaluate_chunked(model, ds, rows, 1024)
}

/// [`evaluate`] with an explicit prediction chunk size (results do not depend on it).
pub fn evaluate_chunked(model: &mut Model, ds: &Dataset, rows: &[usize], chunk: usize) -> Result<EvalReport, SurrogateError> {
    model.check_schema(ds)?;
    let (x, y) = model.rows(ds, rows);
    let pred = model.predict_normalized(&x, chunk)?;
    let mut report = score(&pred, &y, &model.y_names, &model.y_norm)?;
    report.loss_history = model.loss_history.clone();
    Ok(report)
}

/// Error of always predicting the training-set mean of each normalized slot.
pub fn mean_baseline(ds: &Dataset, rows: &[usize]) -> Result<EvalReport, SurrogateError> {
    let (_, ytr) = ds.normalized(&ds.train);
    let ny = ds.ny();
    let ntr = (ytr.len() / ny.max(1)).max(1);
    let mut mean = vec![0.0; ny];
    for r in ytr.chunks_exact(ny) {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / ntr as f64);
    }
    let (_, y) = ds.normalized(rows);
    let pred: Vec<f64> = (0..rows.len()).flat_map(|_| mean.iter().copied()).collect();
    let (_, yn) = normalizers(ds)?;
    score(&pred, &y, &ds.y_names, &yn)
}
