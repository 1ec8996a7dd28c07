use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::SurrogateError;
use crate::grid::wrap_deg;
use crate::scenario::Normalizer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupError {
    pub name: String,
    pub slots: usize,
    pub mse_pct: f64,
    pub mae_pct: f64,
}

/// Errors on normalized targets, in percent. Overall figures are the mean of
/// the per-slot figures, so group means weighted by slot count recombine to them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub mse_pct: f64,
    pub mae_pct: f64,
    pub groups: Vec<GroupError>,
    pub slot_names: Vec<String>,
    pub slot_mse: Vec<f64>,
    pub slot_mae: Vec<f64>,
    /// Largest physical error over `|V|` slots, per-unit.
    pub worst_v_pu: f64,
    /// Largest physical error over angle slots, degrees.
    pub worst_theta_deg: f64,
    pub loss_history: Vec<f64>,
}

/// Slot group used in reports: `V`, `I`, `thV`, `thI` or `loss`.
pub fn slot_group(name: &str) -> &str {
    match name.split(':').next().unwrap_or("") {
        "Ploss" | "Qloss" => "loss",
        g => g,
    }
}

/// Scores normalized predictions against normalized truth (`rows × ny`).
pub fn score(pred: &[f64], truth: &[f64], y_names: &[String], y_norm: &Normalizer) -> Result<EvalReport, SurrogateError> {
    let ny = y_names.len();
    if ny == 0 || pred.len() != truth.len() || truth.len() % ny != 0 || y_norm.len() != ny {
        return Err(SurrogateError::SchemaMismatch(format!("{} predictions, {} targets, {ny} slots", pred.len(), truth.len())));
    }
    let n = truth.len() / ny;
    if n == 0 {
        return Err(SurrogateError::InvalidConfig("no rows to evaluate".into()));
    }
    let mut slot_mse = vec![0.0; ny];
    let mut slot_mae = vec![0.0; ny];
    let mut worst_v: f64 = 0.0;
    let mut worst_th: f64 = 0.0;
    for (p, t) in pred.chunks_exact(ny).zip(truth.chunks_exact(ny)) {
        let (mut pp, mut tp) = (p.to_vec(), t.to_vec());
        y_norm.invert(&mut pp);
        y_norm.invert(&mut tp);
        for j in 0..ny {
            let d = p[j] - t[j];
            slot_mse[j] += d * d;
            slot_mae[j] += d.abs();
            match slot_group(&y_names[j]) {
                "V" => worst_v = worst_v.max((pp[j] - tp[j]).abs()),
                "thV" | "thI" => worst_th = worst_th.max(wrap_deg(pp[j] - tp[j]).abs()),
                _ => {}
            }
        }
    }
    slot_mse.iter_mut().chain(slot_mae.iter_mut()).for_each(|v| *v /= n as f64);

    let mut groups: Vec<GroupError> = Vec::new();
    for (j, name) in y_names.iter().enumerate() {
        let g = slot_group(name);
        let at = match groups.iter().position(|e| e.name == g) {
            Some(i) => i,
            None => {
                groups.push(GroupError { name: g.to_string(), slots: 0, mse_pct: 0.0, mae_pct: 0.0 });
                groups.len() - 1
            }
        };
        let e = &mut groups[at];
        e.slots += 1;
        e.mse_pct += slot_mse[j];
        e.mae_pct += slot_mae[j];
    }
    for g in &mut groups {
        g.mse_pct *= 100.0 / g.slots as f64;
        g.mae_pct *= 100.0 / g.slots as f64;
    }
    Ok(EvalReport {
        samples: n,
        mse_pct: 100.0 * slot_mse.iter().sum::<f64>() / ny as f64,
        mae_pct: 100.0 * slot_mae.iter().sum::<f64>() / ny as f64,
        groups,
        slot_names: y_names.to_vec(),
        slot_mse,
        slot_mae,
        worst_v_pu: worst_v,
        worst_theta_deg: worst_th,
        loss_history: Vec::new(),
    })
}

impl EvalReport {
    /// `group,slots,mse_pct,mae_pct` rows, overall last.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("group,slots,mse_pct,mae_pct\n");
        for g in &self.groups {
            let _ = writeln!(s, "{},{},{},{}", g.name, g.slots, g.mse_pct, g.mae_pct);
        }
        let _ = writeln!(s, "all,{},{},{}", self.slot_names.len(), self.mse_pct, self.mae_pct);
        s
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<8} {:>6} {:>10} {:>10}\n", "group", "slots", "MSE %", "MAE %");
        for g in &self.groups {
            let _ = writeln!(s, "{:<8} {:>6} {:>10.4} {:>10.4}", g.name, g.slots, g.mse_pct, g.mae_pct);
        }
        let _ = writeln!(s, "{:<8} {:>6} {:>10.4} {:>10.4}", "all", self.slot_names.len(), self.mse_pct, self.mae_pct);
        let _ = writeln!(s, "samples {}, worst |V| error {:.3e} pu, worst angle error {:.3} deg", self.samples, self.worst_v_pu, self.worst_theta_deg);
        s
    }
}
