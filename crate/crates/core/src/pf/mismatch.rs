use num_complex::Complex64;

use super::solution::PfSolution;
use super::ybus::assemble_ybus;
use super::PfError;
use crate::grid::{capacitor_current, load_current, NetworkModel, Phasor};

/// Nodal power residual `S_spec − (P + jQ)` per bus and phase, with `P`, `Q`
/// from the polar conductance/susceptance sums over the admittance matrix.
/// Buses merged by closed switches report the node residual on the first bus
/// of the group; the source node is the slack and reports zero.
pub fn power_mismatch(net: &NetworkModel, sol: &PfSolution) -> Result<Vec<[Complex64; 3]>, PfError> {
    let y = assemble_ybus(net)?;
    let index = net.bus_index();
    let zero = Complex64::default();

    // node-phase voltages in polar form
    let mut vm = vec![0.0; y.dim];
    let mut va = vec![0.0; y.dim];
    for (n, buses) in y.node_buses.iter().enumerate() {
        for p in y.node_phases[n].iter() {
            let b = *buses.iter().find(|&&b| net.buses[b].phases.contains(p)).unwrap();
            let r = y.row[n][p].unwrap();
            let (m, a) = sol.voltages[b][p].to_polar();
            vm[r] = m;
            va[r] = a;
        }
    }

    // specified injections: minus the power drawn by loads and capacitors
    let mut spec = vec![zero; y.dim];
    let mut draw = |bus: usize, v: &[Phasor; 3], i: &[Phasor; 3]| {
        for p in 0..3 {
            if let Some(r) = y.bus_row(bus, p) {
                spec[r] -= v[p] * i[p].conj();
            }
        }
    };
    for load in &net.loads {
        let b = *index.get(load.bus.as_str()).ok_or_else(|| PfError::UnknownAttachment(load.id.clone()))?;
        let i = load_current(load, &sol.voltages[b])?;
        draw(b, &sol.voltages[b], &i);
    }
    for cap in &net.capacitors {
        let b = *index.get(cap.bus.as_str()).ok_or_else(|| PfError::UnknownAttachment(cap.id.clone()))?;
        let i = capacitor_current(cap, &sol.voltages[b]);
        draw(b, &sol.voltages[b], &i);
    }

    let mut calc = vec![zero; y.dim];
    for (r, c, yrc) in y.iter() {
        let (g, bb) = (yrc.re, yrc.im);
        let d = va[r] - va[c];
        let (s, co) = d.sin_cos();
        calc[r].re += vm[r] * vm[c] * (g * co + bb * s);
        calc[r].im += vm[r] * vm[c] * (g * s - bb * co);
    }

    let src_node = net.source_index().map(|s| y.node_of_bus[s]);
    let mut out = vec![[zero; 3]; net.buses.len()];
    for (n, buses) in y.node_buses.iter().enumerate() {
        if Some(n) == src_node {
            continue;
        }
        for p in y.node_phases[n].iter() {
            let r = y.row[n][p].unwrap();
            out[buses[0]][p] = spec[r] - calc[r];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::*;

    #[test]
    fn polar_sums_match_brute_force_power() {
        let y = Complex64::new(1.0, -5.0);
        let mut net = NetworkModel::new("pair", 100.0);
        let ph = PhaseSet::single(0);
        for id in ["1", "2"] {
            net.buses.push(Bus { id: id.into(), phases: ph, base_kv: 1.0 });
        }
        let mut z = ZERO_MAT3;
        z[0][0] = Complex64::new(1.0, 0.0) / y;
        net.branches.push(Branch::line("L", "1", "2", ph, z, 1.0));
        // make bus 2 the slack so bus 1 reports its computed power
        net.source_bus = "2".into();
        let v1 = polar_deg(1.0, 0.0);
        let v2 = polar_deg(0.98, -1.0);
        let mut sol = PfSolution::flat(&net);
        sol.voltages[0][0] = v1;
        sol.voltages[1][0] = v2;
        let r = power_mismatch(&net, &sol).unwrap();
        let want = v1 * (y * (v1 - v2)).conj();
        // no loads, so residual = −(P + jQ)
        assert!((r[0][0] + want).norm() < 1e-12);
        assert_eq!(r[1][0], Complex64::default());
    }
}
