use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use super::model::{BranchKind, Connection, LoadModel, NetworkModel, PHASE_NAMES};

/// One broken network invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub component: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.component, self.message)
    }
}

const SYMMETRY_TOL: f64 = 1e-12;

fn check_id<'a>(ids: &mut HashSet<&'a str>, id: &'a str, push: &mut dyn FnMut(&str, String)) {
    if id.is_empty() {
        push(id, "empty identifier".into());
    } else if !ids.insert(id) {
        push(id, "duplicate identifier".into());
    }
}

/// Lists every invariant violation of `net`; an empty list means the network is
/// valid and every present bus-phase is energized from the source.
pub fn validate_network(net: &NetworkModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |component: &str, message: String| {
        out.push(Violation {
            component: component.to_string(),
            message,
        })
    };

    if !(net.s_base_kva > 0.0) {
        push(&net.name, format!("power base must be positive, got {}", net.s_base_kva));
    }

    let mut ids: HashSet<&str> = HashSet::new();

    let mut buses = HashMap::new();
    for bus in &net.buses {
        check_id(&mut ids, &bus.id, &mut push);
        buses.insert(bus.id.as_str(), bus);
        if !(bus.base_kv > 0.0) {
            push(&bus.id, format!("base kV must be positive, got {}", bus.base_kv));
        }
        if bus.phases.is_empty() {
            push(&bus.id, "bus has no phases".into());
        }
    }

    for br in &net.branches {
        check_id(&mut ids, &br.id, &mut push);
        if br.phases.is_empty() {
            push(&br.id, "branch has no phases".into());
        }
        let mut endpoints_ok = true;
        for end in [&br.from_bus, &br.to_bus] {
            match buses.get(end.as_str()) {
                None => {
                    endpoints_ok = false;
                    push(&br.id, format!("dangling branch endpoint: unknown bus '{end}'"));
                }
                Some(bus) if !br.phases.is_subset_of(bus.phases) => push(
                    &br.id,
                    format!("phases {} not present on bus '{}' ({})", br.phases, bus.id, bus.phases),
                ),
                _ => {}
            }
        }
        if endpoints_ok && br.from_bus == br.to_bus {
            push(&br.id, "branch connects a bus to itself".into());
        }
        if !(br.length >= 0.0) || !br.length.is_finite() {
            push(&br.id, format!("length must be finite and non-negative, got {}", br.length));
        }
        for r in 0..3 {
            for c in 0..3 {
                let z = br.z_matrix[r][c];
                if !z.re.is_finite() || !z.im.is_finite() || !br.shunt_b[r][c].is_finite() {
                    push(&br.id, "non-finite impedance entry".into());
                }
                if (z - br.z_matrix[c][r]).norm() > SYMMETRY_TOL * (1.0 + z.norm())
                    || (br.shunt_b[r][c] - br.shunt_b[c][r]).abs() > SYMMETRY_TOL * (1.0 + br.shunt_b[r][c].abs())
                {
                    push(&br.id, format!("impedance matrix not symmetric at ({r},{c})"));
                }
                let absent = !br.phases.contains(r) || !br.phases.contains(c);
                if absent && (z.norm() != 0.0 || br.shunt_b[r][c] != 0.0) {
                    push(&br.id, format!("nonzero entry ({r},{c}) on an absent phase"));
                }
            }
        }
        match br.kind {
            BranchKind::Line | BranchKind::Transformer(_) => {
                for p in br.phases.iter() {
                    if br.z_matrix[p][p].norm() == 0.0 {
                        push(&br.id, format!("zero self impedance on phase {}", PHASE_NAMES[p]));
                    }
                }
                if let BranchKind::Transformer(t) = br.kind {
                    if !(t.ratio > 0.0) || !t.ratio.is_finite() {
                        push(&br.id, format!("transformer ratio must be positive, got {}", t.ratio));
                    }
                }
            }
            BranchKind::Switch(_) => {
                if br.z_matrix.iter().flatten().any(|z| z.norm() != 0.0) {
                    push(&br.id, "switches are ideal and carry no impedance".into());
                }
            }
        }
        if let (Some(a), Some(b)) = (buses.get(br.from_bus.as_str()), buses.get(br.to_bus.as_str())) {
            if matches!(br.kind, BranchKind::Line | BranchKind::Switch(_)) && (a.base_kv - b.base_kv).abs() > 1e-9 * a.base_kv {
                push(&br.id, format!("connects buses with different base kV ({} vs {})", a.base_kv, b.base_kv));
            }
        }
    }

    for load in &net.loads {
        check_id(&mut ids, &load.id, &mut push);
        match buses.get(load.bus.as_str()) {
            None => push(&load.id, format!("unknown bus '{}'", load.bus)),
            Some(bus) if !load.phases.is_subset_of(bus.phases) => {
                push(&load.id, format!("phases {} not present on bus '{}'", load.phases, bus.id))
            }
            _ => {}
        }
        if load.phases.is_empty() {
            push(&load.id, "load has no phases".into());
        }
        if load.connection == Connection::Delta && load.phases.count() < 2 {
            push(&load.id, "delta loads require at least two phases".into());
        }
        if !(load.v_rated > 0.0) {
            push(&load.id, format!("rated voltage must be positive, got {}", load.v_rated));
        }
        if load.s_rated.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            push(&load.id, "non-finite rated power".into());
        }
        if let LoadModel::Zip { z, i, p } = load.model {
            if z < 0.0 || i < 0.0 || p < 0.0 {
                push(&load.id, "ZIP weights must be non-negative".into());
            }
            if ((z + i + p) - 1.0).abs() > 1e-9 {
                push(&load.id, format!("ZIP weights must sum to 1, got {}", z + i + p));
            }
        }
    }

    for cap in &net.capacitors {
        check_id(&mut ids, &cap.id, &mut push);
        match buses.get(cap.bus.as_str()) {
            None => push(&cap.id, format!("unknown bus '{}'", cap.bus)),
            Some(bus) if !cap.phases.is_subset_of(bus.phases) => {
                push(&cap.id, format!("phases {} not present on bus '{}'", cap.phases, bus.id))
            }
            _ => {}
        }
        if cap.connection == Connection::Delta && cap.phases.count() < 2 {
            push(&cap.id, "delta capacitors require at least two phases".into());
        }
        if cap.q_rated.iter().any(|q| !(*q >= 0.0)) {
            push(&cap.id, "capacitor kvar must be non-negative".into());
        }
        if !(cap.v_rated > 0.0) {
            push(&cap.id, format!("rated voltage must be positive, got {}", cap.v_rated));
        }
    }

    match buses.get(net.source_bus.as_str()) {
        None => push("source", format!("source bus '{}' does not exist", net.source_bus)),
        Some(_) => {
            if net.source_voltage.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                push("source", "non-finite source voltage".into());
            }
            for (bus, phase) in unenergized(net) {
                push(&bus, format!("phase {} is not connected to the source", PHASE_NAMES[phase]));
            }
        }
    }

    out
}

/// Bus-phases that cannot be reached from the source through in-service branches.
fn unenergized(net: &NetworkModel) -> Vec<(String, usize)> {
    let index = net.bus_index();
    let Some(src) = index.get(net.source_bus.as_str()).copied() else {
        return Vec::new();
    };
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); net.buses.len()];
    for (bi, br) in net.branches.iter().enumerate() {
        if !br.is_in_service() {
            continue;
        }
        if let (Some(&f), Some(&t)) = (index.get(br.from_bus.as_str()), index.get(br.to_bus.as_str())) {
            adj[f].push((t, bi));
            adj[t].push((f, bi));
        }
    }
    let mut out = Vec::new();
    for phase in 0..3 {
        let mut seen = vec![false; net.buses.len()];
        let mut queue = VecDeque::new();
        if net.buses[src].phases.contains(phase) {
            seen[src] = true;
            queue.push_back(src);
        }
        while let Some(u) = queue.pop_front() {
            for &(v, bi) in &adj[u] {
                if !seen[v] && net.branches[bi].phases.contains(phase) {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        for (i, bus) in net.buses.iter().enumerate() {
            if bus.phases.contains(phase) && !seen[i] {
                out.push((bus.id.clone(), phase));
            }
        }
    }
    out.sort_by(|a, b| (index[a.0.as_str()], a.1).cmp(&(index[b.0.as_str()], b.1)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::model::*;
    use num_complex::Complex64;

    pub(crate) fn two_bus() -> NetworkModel {
        let mut net = NetworkModel::new("t", 3000.0);
        net.buses.push(Bus { id: "1".into(), phases: PhaseSet::ABC, base_kv: 2.4 });
        net.buses.push(Bus { id: "2".into(), phases: PhaseSet::ABC, base_kv: 2.4 });
        let mut z = ZERO_MAT3;
        for p in 0..3 {
            z[p][p] = Complex64::new(0.01, 0.02);
        }
        net.branches.push(Branch::line("L1", "1", "2", PhaseSet::ABC, z, 1.0));
        net.loads.push(Load {
            id: "LD".into(),
            bus: "2".into(),
            phases: PhaseSet::ABC,
            connection: Connection::Wye,
            model: LoadModel::ConstantPq,
            s_rated: [Complex64::new(0.1, 0.05); 3],
            v_rated: 1.0,
        });
        net.source_bus = "1".into();
        net
    }

    #[test]
    fn minimal_network_is_valid() {
        assert_eq!(validate_network(&two_bus()), vec![]);
    }

    #[test]
    fn dangling_endpoint() {
        let mut net = two_bus();
        net.branches[0].to_bus = "9".into();
        let v = validate_network(&net);
        let dangling: Vec<_> = v.iter().filter(|v| v.message.contains("dangling branch endpoint")).collect();
        assert_eq!(dangling.len(), 1, "{v:?}");
    }

    #[test]
    fn zip_weights_sum() {
        let mut net = two_bus();
        net.loads[0].model = LoadModel::Zip { z: 0.5, i: 0.5, p: 0.5 };
        let v = validate_network(&net);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("ZIP weights must sum to 1"));
    }

    #[test]
    fn open_switch_islands_downstream_bus() {
        let mut net = two_bus();
        net.buses.push(Bus { id: "3".into(), phases: PhaseSet::ABC, base_kv: 2.4 });
        net.branches.push(Branch::switch("S", "2", "3", PhaseSet::ABC, SwitchState::Open));
        let v = validate_network(&net);
        assert_eq!(v.len(), 3, "{v:?}");
        net.branches[1].kind = BranchKind::Switch(SwitchState::Closed);
        assert!(validate_network(&net).is_empty());
    }

    #[test]
    fn delta_single_phase_rejected() {
        let mut net = two_bus();
        net.loads[0].connection = Connection::Delta;
        net.loads[0].phases = PhaseSet::single(1);
        let v = validate_network(&net);
        assert!(v.iter().any(|v| v.message.contains("delta loads require")), "{v:?}");
    }

    #[test]
    fn asymmetric_and_absent_phase_entries() {
        let mut net = two_bus();
        net.branches[0].z_matrix[0][1] = Complex64::new(0.001, 0.0);
        assert!(validate_network(&net).iter().any(|v| v.message.contains("not symmetric")));
        let mut net = two_bus();
        net.buses[1].phases = PhaseSet::parse("ab").unwrap();
        net.loads[0].phases = PhaseSet::parse("ab").unwrap();
        net.branches[0].phases = PhaseSet::parse("ab").unwrap();
        let v = validate_network(&net);
        assert!(v.iter().any(|v| v.message.contains("absent phase")), "{v:?}");
    }
}
