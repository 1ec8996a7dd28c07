use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::PfError;
use crate::grid::{BranchKind, Mat3, NetworkModel, PhaseSet, SwitchState};

/// Sparse nodal admittance matrix over present node-phases. Buses joined by
/// closed switches share one electrical node.
#[derive(Clone, Debug, PartialEq)]
pub struct YBus {
    /// Electrical node of each bus.
    pub node_of_bus: Vec<usize>,
    /// Buses merged into each node, in bus order.
    pub node_buses: Vec<Vec<usize>>,
    pub node_phases: Vec<PhaseSet>,
    /// Matrix row of each (node, phase).
    pub row: Vec<[Option<usize>; 3]>,
    pub dim: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl YBus {
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries.get(&(r, c)).copied().unwrap_or_default()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Non-zero entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (&(r, c), &v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// Row of a bus phase, if present.
    pub fn bus_row(&self, bus: usize, phase: usize) -> Option<usize> {
        self.row[self.node_of_bus[bus]][phase]
    }

    fn add(&mut self, r: usize, c: usize, v: Complex64) {
        *self.entries.entry((r, c)).or_default() += v;
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Inverse of the present-phase submatrix, scattered back into a 3×3 block.
pub(crate) fn series_admittance(z: &Mat3, phases: PhaseSet, id: &str) -> Result<Mat3, PfError> {
    let ps: Vec<usize> = phases.iter().collect();
    let m = ps.len();
    let sub = DMatrix::from_fn(m, m, |r, c| z[ps[r]][ps[c]]);
    let inv = sub
        .try_inverse()
        .filter(|y| y.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
        .ok_or_else(|| PfError::SingularBranch { branch: id.to_string() })?;
    let mut y = [[Complex64::default(); 3]; 3];
    for r in 0..m {
        for c in 0..m {
            y[ps[r]][ps[c]] = inv[(r, c)];
        }
    }
    Ok(y)
}

/// Builds the nodal admittance matrix. Lines use the pi model with half the
/// shunt susceptance at each end; transformers stamp `y/n²`, `-y/n`, `y`.
pub fn assemble_ybus(net: &NetworkModel) -> Result<YBus, PfError> {
    let index = net.bus_index();
    let nb = net.buses.len();
    let endpoints = |id: &str, bus: &str| index.get(bus).copied().ok_or_else(|| PfError::UnknownAttachment(id.to_string()));

    let mut parent: Vec<usize> = (0..nb).collect();
    for br in &net.branches {
        if br.kind == BranchKind::Switch(SwitchState::Closed) {
            let f = endpoints(&br.id, &br.from_bus)?;
            let t = endpoints(&br.id, &br.to_bus)?;
            let (rf, rt) = (find(&mut parent, f), find(&mut parent, t));
            if rf != rt {
                parent[rf.max(rt)] = rf.min(rt);
            }
        }
    }
    let mut node_of_root = vec![usize::MAX; nb];
    let mut node_of_bus = vec![0; nb];
    let mut node_buses: Vec<Vec<usize>> = Vec::new();
    let mut node_phases = Vec::new();
    for b in 0..nb {
        let r = find(&mut parent, b);
        if node_of_root[r] == usize::MAX {
            node_of_root[r] = node_buses.len();
            node_buses.push(Vec::new());
            node_phases.push(PhaseSet::EMPTY);
        }
        let n = node_of_root[r];
        node_of_bus[b] = n;
        node_buses[n].push(b);
        node_phases[n] = node_phases[n].union(net.buses[b].phases);
    }
    let mut row = vec![[None; 3]; node_buses.len()];
    let mut dim = 0;
    for (n, ph) in node_phases.iter().enumerate() {
        for p in ph.iter() {
            row[n][p] = Some(dim);
            dim += 1;
        }
    }
    let mut y = YBus {
        node_of_bus,
        node_buses,
        node_phases,
        row,
        dim,
        entries: BTreeMap::new(),
    };

    for br in &net.branches {
        if br.is_switch() {
            continue;
        }
        let f = y.node_of_bus[endpoints(&br.id, &br.from_bus)?];
        let t = y.node_of_bus[endpoints(&br.id, &br.to_bus)?];
        let ys = series_admittance(&br.series_z(), br.phases, &br.id)?;
        let b = br.total_shunt_b();
        let n = br.ratio();
        let is_tx = matches!(br.kind, BranchKind::Transformer(_));
        for pa in br.phases.iter() {
            for pb in br.phases.iter() {
                let (fa, fb) = (y.row[f][pa].unwrap(), y.row[f][pb].unwrap());
                let (ta, tb) = (y.row[t][pa].unwrap(), y.row[t][pb].unwrap());
                let v = ys[pa][pb];
                if is_tx {
                    y.add(fa, fb, v / (n * n));
                    y.add(ta, tb, v);
                    y.add(fa, tb, -v / n);
                    y.add(ta, fb, -v / n);
                } else {
                    let sh = Complex64::new(0.0, b[pa][pb] * 0.5);
                    y.add(fa, fb, v + sh);
                    y.add(ta, tb, v + sh);
                    y.add(fa, tb, -v);
                    y.add(ta, fb, -v);
                }
            }
        }
    }
    Ok(y)
}
