use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::synthetic_loadshape;
use super::ScenarioError;
use crate::grid::{LoadModel, PhaseSet};
use crate::io::{parse_loadshape, LoadShape};

/// Rooftop PV: negative constant-power load following a daylight bell.
#[derive(Clone, Debug, PartialEq)]
pub struct PvSpec {
    pub bus: String,
    pub phases: PhaseSet,
    pub peak_kw: f64,
    /// Day-to-day variability: each day's output is scaled by `1 − var·U[0,1)`.
    pub variability: f64,
}

/// EV charger: constant-power load during seeded evening plug-in windows.
#[derive(Clone, Debug, PartialEq)]
pub struct EvSpec {
    pub bus: String,
    pub phases: PhaseSet,
    pub charger_kw: f64,
    /// Probability that the vehicle charges on a given evening.
    pub probability: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverChoice {
    Auto,
    Fbs,
    CurrentInjection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub horizon: usize,
    pub seed: u64,
    /// Uniform multiplicative noise amplitude `a` in `1 + U[−a, a]`, drawn per load and hour.
    pub noise: f64,
    /// Replaces the model of every circuit load when set.
    pub load_model: Option<LoadModel>,
    pub shape: LoadShape,
    /// Per-load shapes overriding `shape`.
    pub shapes: BTreeMap<String, LoadShape>,
    pub pv: Vec<PvSpec>,
    pub ev: Vec<EvSpec>,
    pub open: Vec<String>,
    pub close: Vec<String>,
    pub solver: SolverChoice,
    pub train_fraction: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            horizon: 24,
            seed: 42,
            noise: 0.0,
            load_model: None,
            shape: LoadShape { name: "flat".into(), values: vec![1.0] },
            shapes: BTreeMap::new(),
            pv: Vec::new(),
            ev: Vec::new(),
            open: Vec::new(),
            close: Vec::new(),
            solver: SolverChoice::Auto,
            train_fraction: 0.8,
        }
    }
}

enum ShapeRef {
    Synthetic,
    Flat,
    File(PathBuf),
}

fn parse_model(s: &str) -> Option<LoadModel> {
    match s {
        "pq" => Some(LoadModel::ConstantPq),
        "z" => Some(LoadModel::ConstantZ),
        "i" => Some(LoadModel::ConstantI),
        _ => {
            let w: Vec<f64> = s.strip_prefix("zip:")?.split(',').map(|t| t.trim().parse().ok()).collect::<Option<_>>()?;
            (w.len() == 3).then(|| LoadModel::Zip { z: w[0], i: w[1], p: w[2] })
        }
    }
}

fn parse_fraction(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}

impl ScenarioConfig {
    /// Parses `key=value` lines (`#` comments). Relative loadshape paths are
    /// resolved against `base_dir`, falling back to bundled assets.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, ScenarioError> {
        let mut cfg = ScenarioConfig::default();
        let mut shape = ShapeRef::Flat;
        let mut shapes: Vec<(String, ShapeRef)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |reason: String| ScenarioError::Config { line, reason };
            let (key, value) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected key=value, got `{body}`")))?;
            let num = |v: &str| v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| err(format!("`{key}`: not a number: {v}")));
            let shape_ref = |v: &str| match v {
                "synthetic" => ShapeRef::Synthetic,
                "flat" => ShapeRef::Flat,
                path => ShapeRef::File(base_dir.map(|d| d.join(path)).unwrap_or_else(|| PathBuf::from(path))),
            };
            match key {
                "horizon" => {
                    cfg.horizon = value.parse().ok().filter(|&h: &usize| h >= 1).ok_or_else(|| err("horizon must be a positive integer".into()))?
                }
                "seed" => cfg.seed = value.parse().map_err(|_| err(format!("bad seed `{value}`")))?,
                "noise" => {
                    cfg.noise = num(value)?;
                    if !(0.0..1.0).contains(&cfg.noise) {
                        return Err(err("noise must lie in [0, 1)".into()));
                    }
                }
                "load_model" => cfg.load_model = Some(parse_model(value).ok_or_else(|| err(format!("unknown load model `{value}`")))?),
                "shape" => shape = shape_ref(value),
                k if k.starts_with("shape.") => shapes.push((k["shape.".len()..].to_string(), shape_ref(value))),
                "pv" | "ev" => {
                    let parts: Vec<&str> = value.split(':').collect();
                    if !(3..=4).contains(&parts.len()) {
                        return Err(err(format!("`{key}` expects bus:phases:kw[:extra]")));
                    }
                    let phases = PhaseSet::parse(parts[1]).ok_or_else(|| err(format!("bad phases `{}`", parts[1])))?;
                    let kw = num(parts[2])?;
                    if kw < 0.0 {
                        return Err(err("power must be non-negative".into()));
                    }
                    let extra = parts.get(3).map(|s| num(s)).transpose()?;
                    if key == "pv" {
                        cfg.pv.push(PvSpec {
                            bus: parts[0].into(),
                            phases,
                            peak_kw: kw,
                            variability: extra.unwrap_or(0.3).clamp(0.0, 1.0),
                        });
                    } else {
                        cfg.ev.push(EvSpec {
                            bus: parts[0].into(),
                            phases,
                            charger_kw: kw,
                            probability: extra.unwrap_or(0.8).clamp(0.0, 1.0),
                        });
                    }
                }
                "open" => cfg.open.extend(value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty())),
                "close" => cfg.close.extend(value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty())),
                "solver" => {
                    cfg.solver = match value {
                        "auto" => SolverChoice::Auto,
                        "fbs" => SolverChoice::Fbs,
                        "ci" => SolverChoice::CurrentInjection,
                        other => return Err(err(format!("unknown solver `{other}`"))),
                    }
                }
                "train_fraction" => {
                    cfg.train_fraction = parse_fraction(value)
                        .filter(|f| *f > 0.0 && *f < 1.0)
                        .ok_or_else(|| err("train_fraction must lie strictly between 0 and 1".into()))?
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let resolve = |r: &ShapeRef, horizon: usize| -> Result<LoadShape, ScenarioError> {
            Ok(match r {
                ShapeRef::Synthetic => synthetic_loadshape(horizon),
                ShapeRef::Flat => LoadShape { name: "flat".into(), values: vec![1.0] },
                ShapeRef::File(p) => parse_loadshape(&crate::assets::read_text(p)?)?,
            })
        };
        cfg.shape = resolve(&shape, cfg.horizon)?;
        for (id, r) in &shapes {
            cfg.shapes.insert(id.clone(), resolve(r, cfg.horizon)?);
        }
        Ok(cfg)
    }
}
