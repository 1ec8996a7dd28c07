use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Family, SurrogateError};
use crate::nn::{Adam, Mode, Network, NnError, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Reference 4-node hyperparameters.
    pub fn standard(family: Family, seed: u64) -> Self {
        let (batch, epochs) = match family {
            Family::Cnn => (256, 1000),
            Family::Mlp => (256, 100),
            Family::Rbf => (1, 150),
        };
        TrainConfig { lr: 1e-4, batch, epochs, beta1: Adam::BETA1, seed }
    }

    /// Published hyperparameters with the shortened desk epoch counts.
    pub fn desk(family: Family, seed: u64) -> Self {
        let epochs = match family {
            Family::Cnn => 200,
            Family::Mlp => 100,
            Family::Rbf => 30,
        };
        TrainConfig { epochs, ..TrainConfig::standard(family, seed) }
    }

    pub fn validate(&self) -> Result<(), SurrogateError> {
        let bad = |m: &str| Err(SurrogateError::InvalidConfig(m.into()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch == 0 {
            return bad("batch size must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return bad("beta1 must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Mini-batch Adam on MSE over normalized `x` (`n × nx`) and `y` (`n × ny`).
/// Rows are reshuffled every epoch from a generator seeded with `cfg.seed`,
/// which also drives dropout masks. Returns the mean training loss per epoch.
pub fn train_network(
    net: &mut Network,
    x: &[f64],
    y: &[f64],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<Vec<f64>, SurrogateError> {
    cfg.validate()?;
    let (nx, ny) = (net.input.len(), net.outputs());
    if nx == 0 || x.len() % nx != 0 || y.len() != x.len() / nx * ny {
        return Err(SurrogateError::SchemaMismatch(format!("data does not fit a {nx}→{ny} network")));
    }
    let n = x.len() / nx;
    if n == 0 {
        return Err(SurrogateError::InvalidConfig("no training rows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.lr);
    adam.beta1 = cfg.beta1;
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut xb = Vec::with_capacity(cfg.batch * nx);
    let mut yb = Vec::with_capacity(cfg.batch * ny);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (bi, rows) in order.chunks(cfg.batch).enumerate() {
            xb.clear();
            yb.clear();
            for &r in rows {
                xb.extend_from_slice(&x[r * nx..(r + 1) * nx]);
                yb.extend_from_slice(&y[r * ny..(r + 1) * ny]);
            }
            let xt = Tensor { shape: vec![rows.len(), nx], data: std::mem::take(&mut xb) };
            let yt = Tensor { shape: vec![rows.len(), ny], data: std::mem::take(&mut yb) };
            let loss = net.mse_step(&xt, &yt, &mut Mode::Train(&mut rng)).map_err(|e| match e {
                NnError::NonFiniteGradient(_) | NnError::NonFinite(_) => SurrogateError::NonFiniteGradient { epoch, batch: bi },
                e => SurrogateError::Nn(e),
            })?;
            adam.step(net.params());
            total += loss * rows.len() as f64;
            xb = xt.data;
            yb = yt.data;
        }
        let mean = total / n as f64;
        history.push(mean);
        on_epoch(epoch, mean);
    }
    Ok(history)
}

/// Centered moving average, used to judge whether a noisy loss curve trends down.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    if values.len() < window || window == 0 {
        return values.to_vec();
    }
    values.windows(window).map(|w| w.iter().sum::<f64>() / window as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::build_mlp;

    #[test]
    fn config_checks() {
        assert!(TrainConfig::desk(Family::Cnn, 1).validate().is_ok());
        assert_eq!(TrainConfig::standard(Family::Rbf, 1).batch, 1);
        assert_eq!(TrainConfig::desk(Family::Rbf, 1).epochs, 30);
        let zero = TrainConfig { epochs: 0, ..TrainConfig::desk(Family::Mlp, 1) };
        assert!(matches!(zero.validate(), Err(SurrogateError::InvalidConfig(_))));
        let neg = TrainConfig { lr: -1.0, ..TrainConfig::desk(Family::Mlp, 1) };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn zero_targets_from_zero_model_stay_at_zero_loss() {
        let mut net = Network::new(3).dense_zeroed(2).unwrap();
        let x = vec![0.5; 30];
        let y = vec![0.0; 20];
        let cfg = TrainConfig { epochs: 1, batch: 4, ..TrainConfig::desk(Family::Mlp, 3) };
        let h = train_network(&mut net, &x, &y, &cfg, |_, _| {}).unwrap();
        assert_eq!(h, vec![0.0]);
    }

    #[test]
    fn seeded_runs_repeat_exactly() {
        let x: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let cfg = TrainConfig { epochs: 5, batch: 16, lr: 1e-3, ..TrainConfig::desk(Family::Mlp, 5) };
        let run = || {
            let mut net = build_mlp(2, 2, &[8, 8], 0.2, 1).unwrap();
            train_network(&mut net, &x, &y, &cfg, |_, _| {}).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert!(a.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn smoothing() {
        assert_eq!(smooth(&[1.0, 3.0, 5.0, 7.0], 2), vec![2.0, 4.0, 6.0]);
        assert_eq!(smooth(&[1.0], 10), vec![1.0]);
    }
}
