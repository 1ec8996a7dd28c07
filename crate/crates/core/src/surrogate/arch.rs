use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Family, SurrogateError};
use crate::nn::{kmeans, Clusters, Network, PoolMode};

pub const MLP_HIDDEN: [usize; 4] = [512, 256, 128, 64];
pub const RBF_K: usize = 50;
pub const KMEANS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvStage {
    pub filters: usize,
    pub k1: usize,
    pub k2: usize,
    /// Max-pool window applied after the ReLU, if any.
    pub pool: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnSpec {
    pub h: usize,
    pub w: usize,
    pub convs: Vec<ConvStage>,
    pub fcs: Vec<usize>,
}

impl CnnSpec {
    /// The published 4-node layout: 42 inputs as 7×6, 2×2 pooling after the
    /// first convolution. The 6×5 maps do not divide by 2, so this does not build.
    pub fn four_node() -> Self {
        CnnSpec {
            h: 7,
            w: 6,
            convs: vec![
                ConvStage { filters: 32, k1: 2, k2: 2, pool: Some((2, 2)) },
                ConvStage { filters: 64, k1: 2, k2: 2, pool: None },
            ],
            fcs: MLP_HIDDEN.to_vec(),
        }
    }

    /// Reference filter counts and dense widths on the smallest square input (at
    /// least 5×5) that holds `inputs` values and keeps every 2×2 pooling exact. The first
    /// convolution is always pooled; the second only when its maps are at
    /// least 4 wide.
    pub fn auto(inputs: usize) -> Self {
        let mut s = 5usize;
        while s * s < inputs {
            s += 1;
        }
        let pools_second = |s: usize| (s - 1) / 2 >= 5;
        while (s - 1) % 2 != 0 || (pools_second(s) && ((s - 1) / 2 - 1) % 2 != 0) {
            s += 1;
        }
        CnnSpec {
            h: s,
            w: s,
            convs: vec![
                ConvStage { filters: 32, k1: 2, k2: 2, pool: Some((2, 2)) },
                ConvStage { filters: 64, k1: 2, k2: 2, pool: pools_second(s).then_some((2, 2)) },
            ],
            fcs: MLP_HIDDEN.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub family: Family,
    pub inputs: usize,
    pub outputs: usize,
    /// Dense hidden widths (MLP only; the CNN keeps its own in `cnn.fcs`).
    pub hidden: Vec<usize>,
    pub cnn: Option<CnnSpec>,
    pub rbf_k: usize,
    /// Dropout after every hidden dense layer, 0 disables.
    pub dropout: f64,
}

impl ArchitectureSpec {
    /// Reference layer sizes, with the CNN reshape from [`CnnSpec::auto`].
    pub fn standard(family: Family, inputs: usize, outputs: usize) -> Self {
        ArchitectureSpec {
            family,
            inputs,
            outputs,
            hidden: if family == Family::Mlp { MLP_HIDDEN.to_vec() } else { Vec::new() },
            cnn: (family == Family::Cnn).then(|| CnnSpec::auto(inputs)),
            rbf_k: if family == Family::Rbf { RBF_K } else { 0 },
            dropout: 0.0,
        }
    }

    /// Builds an untrained network. The RBF family needs the normalized
    /// training features (`rows × inputs`) for its centers.
    pub fn build(&self, train_x: &[f64], seed: u64) -> Result<Network, SurrogateError> {
        match self.family {
            Family::Mlp => build_mlp(self.inputs, self.outputs, &self.hidden, self.dropout, seed),
            Family::Cnn => {
                let spec = self.cnn.clone().unwrap_or_else(|| CnnSpec::auto(self.inputs));
                build_cnn(self.inputs, &spec, self.outputs, self.dropout, seed)
            }
            Family::Rbf => Ok(build_rbfnet(train_x, self.inputs, self.rbf_k, self.outputs, seed)?.0),
        }
    }
}

fn dense_stack(mut net: Network, widths: &[usize], dropout: f64, outputs: usize, rng: &mut ChaCha8Rng) -> Result<Network, SurrogateError> {
    for &h in widths {
        net = net.dense(h, rng)?.relu()?;
        if dropout > 0.0 {
            net = net.dropout(dropout)?;
        }
    }
    // linear output layer
    Ok(net.dense(outputs, rng)?)
}

pub fn build_mlp(inputs: usize, outputs: usize, hidden: &[usize], dropout: f64, seed: u64) -> Result<Network, SurrogateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dense_stack(Network::new(inputs), hidden, dropout, outputs, &mut rng)
}

pub fn build_cnn(inputs: usize, spec: &CnnSpec, outputs: usize, dropout: f64, seed: u64) -> Result<Network, SurrogateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(inputs).reshape(spec.h, spec.w)?;
    for c in &spec.convs {
        net = net.conv(c.filters, c.k1, c.k2, &mut rng)?.relu()?;
        if let Some((m1, m2)) = c.pool {
            net = net.pool(m1, m2, PoolMode::Max)?;
        }
    }
    dense_stack(net, &spec.fcs, dropout, outputs, &mut rng)
}

/// Gaussian layer on k-means centers of the training features, then a
/// zero-initialised linear output layer.
pub fn build_rbfnet(train_x: &[f64], inputs: usize, k: usize, outputs: usize, seed: u64) -> Result<(Network, Clusters), SurrogateError> {
    let clusters = kmeans(train_x, inputs, k, KMEANS_TOL, seed)?;
    let net = Network::new(inputs).rbf(clusters.centers.clone(), clusters.sigmas.clone())?.dense_zeroed(outputs)?;
    Ok((net, clusters))
}
