use std::fmt::Write;

use super::solution::PfSolution;
use crate::grid::{NetworkModel, PHASE_NAMES};

/// One row per present bus phase: `bus,phase,v_pu,theta_v_deg,i_pu,theta_i_deg`.
pub fn solution_csv(net: &NetworkModel, sol: &PfSolution) -> String {
    let mut out = String::from("bus,phase,v_pu,theta_v_deg,i_pu,theta_i_deg\n");
    for (b, bus) in net.buses.iter().enumerate() {
        for p in bus.phases.iter() {
            let (vm, va) = sol.voltages[b][p].to_polar();
            let (im, ia) = sol.injections[b][p].to_polar();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                bus.id,
                PHASE_NAMES[p],
                vm,
                va.to_degrees(),
                im,
                if im == 0.0 { 0.0 } else { ia.to_degrees() }
            );
        }
    }
    out
}

/// One row per branch with losses in kW and kvar.
pub fn losses_csv(net: &NetworkModel, sol: &PfSolution) -> String {
    let base = net.s_base_phase_kva();
    let mut out = String::from("branch,from,to,p_loss_kw,q_loss_kvar\n");
    for (br, loss) in net.branches.iter().zip(&sol.losses) {
        let _ = writeln!(out, "{},{},{},{},{}", br.id, br.from_bus, br.to_bus, loss.re * base, loss.im * base);
    }
    out
}
