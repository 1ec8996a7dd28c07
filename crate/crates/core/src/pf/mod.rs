//! Steady-state power flow: forward-backward sweep for radial feeders and a
//! current-injection fixed point over the admittance matrix for any topology,
//! plus solver-independent mismatch and loss accounting.

mod ci;
mod export;
mod fbs;
mod losses;
mod mismatch;
mod order;
mod solution;
mod ybus;


pub use ci::{solve_current_injection, CurrentInjectionSolver};
pub use export::{losses_csv, solution_csv};
pub use fbs::{fbs_solve, FbsSolver};
pub use losses::{compute_losses, energy_balance};
pub use mismatch::power_mismatch;
pub use order::{order_branches, SweepOrder};
pub use solution::{PfSolution, SolveOptions};
pub use ybus::{assemble_ybus, YBus};

use crate::grid::{GridError, Violation};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PfError {
    #[error("invalid network: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidNetwork(Vec<Violation>),
    #[error("network is not radial; cycle through branches {}", .cycle.join(", "))]
    NotRadial { cycle: Vec<String> },
    #[error("iteration diverged at step {iteration}")]
    Diverged { iteration: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("branch {branch} has a singular impedance matrix")]
    SingularBranch { branch: String },
    #[error("reduced admittance matrix is singular")]
    SingularSystem,
    #[error("network topology differs from the one the solver was built for")]
    TopologyMismatch,
    #[error("load or capacitor {0} references a missing bus or phase")]
    UnknownAttachment(String),
}

pub(crate) mod util {
    use std::collections::HashMap;

    use num_complex::Complex64;

    use super::PfError;
    use crate::grid::{capacitor_current, load_current, Mat3, NetworkModel, Phasor, RealMat3};

    pub const CZERO: Complex64 = Complex64::new(0.0, 0.0);

    pub fn mat_vec(m: &Mat3, x: &[Phasor; 3]) -> [Phasor; 3] {
        let mut out = [CZERO; 3];
        for r in 0..3 {
            out[r] = m[r][0] * x[0] + m[r][1] * x[1] + m[r][2] * x[2];
        }
        out
    }

    /// Half-shunt current `j·(B/2)·V`.
    pub fn half_shunt(b: &RealMat3, v: &[Phasor; 3]) -> [Phasor; 3] {
        let mut out = [CZERO; 3];
        for r in 0..3 {
            let s = b[r][0] * 0.5 * v[0] + b[r][1] * 0.5 * v[1] + b[r][2] * 0.5 * v[2];
            out[r] = Complex64::new(-s.im, s.re);
        }
        out
    }

    pub fn add(a: &[Phasor; 3], b: &[Phasor; 3]) -> [Phasor; 3] {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    pub fn sub(a: &[Phasor; 3], b: &[Phasor; 3]) -> [Phasor; 3] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    pub fn scale(a: &[Phasor; 3], s: f64) -> [Phasor; 3] {
        [a[0] * s, a[1] * s, a[2] * s]
    }

    pub fn is_finite(v: &[Phasor; 3]) -> bool {
        v.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Bus index of every load and capacitor, checking phases.
    pub fn attachments(net: &NetworkModel, index: &HashMap<&str, usize>) -> Result<(Vec<usize>, Vec<usize>), PfError> {
        let mut loads = Vec::with_capacity(net.loads.len());
        for l in &net.loads {
            match index.get(l.bus.as_str()) {
                Some(&b) if l.phases.is_subset_of(net.buses[b].phases) => loads.push(b),
                _ => return Err(PfError::UnknownAttachment(l.id.clone())),
            }
        }
        let mut caps = Vec::with_capacity(net.capacitors.len());
        for c in &net.capacitors {
            match index.get(c.bus.as_str()) {
                Some(&b) if c.phases.is_subset_of(net.buses[b].phases) => caps.push(b),
                _ => return Err(PfError::UnknownAttachment(c.id.clone())),
            }
        }
        Ok((loads, caps))
    }

    /// Current drawn at each bus by its loads and capacitors.
    pub fn bus_demand(
        net: &NetworkModel,
        load_bus: &[usize],
        cap_bus: &[usize],
        v: &[[Phasor; 3]],
    ) -> Result<Vec<[Phasor; 3]>, PfError> {
        let mut d = vec![[CZERO; 3]; v.len()];
        for (load, &b) in net.loads.iter().zip(load_bus) {
            let i = load_current(load, &v[b])?;
            d[b] = add(&d[b], &i);
        }
        for (cap, &b) in net.capacitors.iter().zip(cap_bus) {
            let i = capacitor_current(cap, &v[b]);
            d[b] = add(&d[b], &i);
        }
        Ok(d)
    }
}
