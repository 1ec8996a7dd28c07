use num_complex::Complex64;

use super::util::{add, attachments, bus_demand, sub, CZERO};
use super::PfError;
use crate::grid::{NetworkModel, Phasor};

/// Convergence settings shared by both solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Maximum per-phase voltage change between iterations, per-unit.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// Steady-state solution. Vectors are indexed like `net.buses` / `net.branches`;
/// absent phases hold zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PfSolution {
    pub voltages: Vec<[Phasor; 3]>,
    /// Current injected into the network at each bus: the source supply at the
    /// source bus, minus the load and capacitor draw elsewhere.
    pub injections: Vec<[Phasor; 3]>,
    /// Current entering each branch at its from terminal.
    pub branch_from: Vec<[Phasor; 3]>,
    /// Current leaving each branch at its to terminal.
    pub branch_to: Vec<[Phasor; 3]>,
    /// Complex loss per branch (power in at from minus power out at to), per-unit.
    pub losses: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
}

impl PfSolution {
    /// Every bus at its nominal source voltage with no current anywhere.
    pub fn flat(net: &NetworkModel) -> Self {
        let voltages = net
            .buses
            .iter()
            .map(|b| {
                let mut v = [CZERO; 3];
                for p in b.phases.iter() {
                    v[p] = net.source_voltage[p];
                }
                v
            })
            .collect();
        PfSolution {
            voltages,
            injections: vec![[CZERO; 3]; net.buses.len()],
            branch_from: vec![[CZERO; 3]; net.branches.len()],
            branch_to: vec![[CZERO; 3]; net.branches.len()],
            losses: vec![CZERO; net.branches.len()],
            iterations: 0,
            converged: false,
        }
    }

    /// Largest per-phase voltage difference to another solution.
    pub fn max_voltage_diff(&self, other: &PfSolution) -> f64 {
        max_diff(&self.voltages, &other.voltages)
    }

    /// Largest per-phase branch current difference (both terminals).
    pub fn max_current_diff(&self, other: &PfSolution) -> f64 {
        max_diff(&self.branch_from, &other.branch_from).max(max_diff(&self.branch_to, &other.branch_to))
    }

    pub fn min_voltage_magnitude(&self, net: &NetworkModel) -> f64 {
        net.buses
            .iter()
            .zip(&self.voltages)
            .flat_map(|(b, v)| b.phases.iter().map(move |p| v[p].norm()))
            .fold(f64::INFINITY, f64::min)
    }
}

fn max_diff(a: &[[Phasor; 3]], b: &[[Phasor; 3]]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| (0..3).map(move |p| (x[p] - y[p]).norm()))
        .fold(0.0, f64::max)
}

/// Fills injections and losses from voltages and branch currents.
pub(crate) fn assemble(
    net: &NetworkModel,
    voltages: Vec<[Phasor; 3]>,
    branch_from: Vec<[Phasor; 3]>,
    branch_to: Vec<[Phasor; 3]>,
    iterations: usize,
    converged: bool,
) -> Result<PfSolution, PfError> {
    let index = net.bus_index();
    let (load_bus, cap_bus) = attachments(net, &index)?;
    let demand = bus_demand(net, &load_bus, &cap_bus, &voltages)?;
    let src = net.source_index().ok_or_else(|| PfError::UnknownAttachment(net.source_bus.clone()))?;
    let mut injections: Vec<[Phasor; 3]> = demand.iter().map(|d| [-d[0], -d[1], -d[2]]).collect();
    let mut supply = demand[src];
    for (bi, br) in net.branches.iter().enumerate() {
        if br.from_bus == net.source_bus {
            supply = add(&supply, &branch_from[bi]);
        }
        if br.to_bus == net.source_bus {
            supply = sub(&supply, &branch_to[bi]);
        }
    }
    injections[src] = supply;
    let mut sol = PfSolution {
        voltages,
        injections,
        branch_from,
        branch_to,
        losses: Vec::new(),
        iterations,
        converged,
    };
    sol.losses = super::compute_losses(net, &sol);
    Ok(sol)
}
