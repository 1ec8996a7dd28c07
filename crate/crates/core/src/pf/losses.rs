use num_complex::Complex64;

use super::solution::PfSolution;
use super::util::{attachments, bus_demand};
use crate::grid::NetworkModel;

/// Per-branch complex loss, per-unit: power entering at the from terminal
/// minus power leaving at the to terminal. For a line without shunts this is
/// `Σ (V_from − V_to)·conj(I)`.
pub fn compute_losses(net: &NetworkModel, sol: &PfSolution) -> Vec<Complex64> {
    let index = net.bus_index();
    net.branches
        .iter()
        .enumerate()
        .map(|(bi, br)| {
            let (Some(&f), Some(&t)) = (index.get(br.from_bus.as_str()), index.get(br.to_bus.as_str())) else {
                return Complex64::default();
            };
            (0..3)
                .map(|p| {
                    sol.voltages[f][p] * sol.branch_from[bi][p].conj() - sol.voltages[t][p] * sol.branch_to[bi][p].conj()
                })
                .sum()
        })
        .collect()
}

/// Source power minus load, capacitor and branch-loss power. Zero for an
/// exact solution.
pub fn energy_balance(net: &NetworkModel, sol: &PfSolution) -> Complex64 {
    let Some(src) = net.source_index() else {
        return Complex64::new(f64::NAN, f64::NAN);
    };
    let index = net.bus_index();
    let Ok((lb, cb)) = attachments(net, &index) else {
        return Complex64::new(f64::NAN, f64::NAN);
    };
    let demand = match bus_demand(net, &lb, &cb, &sol.voltages) {
        Ok(d) => d,
        Err(_) => return Complex64::new(f64::NAN, f64::NAN),
    };
    let supplied: Complex64 = (0..3).map(|p| sol.voltages[src][p] * sol.injections[src][p].conj()).sum();
    let consumed: Complex64 = demand
        .iter()
        .zip(&sol.voltages)
        .flat_map(|(i, v)| (0..3).map(move |p| v[p] * i[p].conj()))
        .sum();
    let lost: Complex64 = compute_losses(net, sol).iter().sum();
    supplied - consumed - lost
}
