use crate::grid::{wrap_deg, BranchKind, Connection, NetworkModel, SwitchState, PHASE_NAMES};
use crate::pf::PfSolution;

use super::ScenarioError;

/// Fixed feature/target layout for one network.
///
/// Features: source `|V|` and angle per phase; per branch in id order, a line
/// contributes the real then imaginary parts of its upper-triangle series
/// impedance entries over present phases, a transformer its per-phase R and X
/// plus the ratio, a switch its state (1 closed, 0 open); then the active
/// power of every load element in load-id order, then the reactive power.
///
/// Targets: `|V|`, `|I|`, `θ_V`, `θ_I` (degrees) for every present bus-phase in
/// bus-id order, each block in turn, then active and reactive loss per branch.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotLayout {
    pub x_names: Vec<String>,
    pub y_names: Vec<String>,
    branches: Vec<usize>,
    loads: Vec<usize>,
    bus_phases: Vec<(usize, usize)>,
    source: usize,
}

fn element_name(conn: Connection, k: usize) -> String {
    match conn {
        Connection::Wye => PHASE_NAMES[k].to_string(),
        Connection::Delta => format!("{}{}", PHASE_NAMES[k], PHASE_NAMES[(k + 1) % 3]),
    }
}

fn upper(phases: crate::grid::PhaseSet) -> Vec<(usize, usize)> {
    let ps: Vec<usize> = phases.iter().collect();
    (0..ps.len()).flat_map(|r| (r..ps.len()).map(move |c| (r, c))).map(|(r, c)| (ps[r], ps[c])).collect()
}

impl SlotLayout {
    pub fn new(net: &NetworkModel) -> Self {
        let mut branches: Vec<usize> = (0..net.branches.len()).collect();
        branches.sort_by(|&a, &b| net.branches[a].id.cmp(&net.branches[b].id));
        let mut loads: Vec<usize> = (0..net.loads.len()).collect();
        loads.sort_by(|&a, &b| net.loads[a].id.cmp(&net.loads[b].id));
        let mut buses: Vec<usize> = (0..net.buses.len()).collect();
        buses.sort_by(|&a, &b| net.buses[a].id.cmp(&net.buses[b].id));
        let bus_phases: Vec<(usize, usize)> = buses.iter().flat_map(|&b| net.buses[b].phases.iter().map(move |p| (b, p))).collect();
        let source = net.source_index().expect("network has a source");

        let mut x = Vec::new();
        for p in net.buses[source].phases.iter() {
            x.push(format!("Vsrc:{}", PHASE_NAMES[p]));
        }
        for p in net.buses[source].phases.iter() {
            x.push(format!("thsrc:{}", PHASE_NAMES[p]));
        }
        for &bi in &branches {
            let br = &net.branches[bi];
            match br.kind {
                BranchKind::Line => {
                    for part in ["R", "X"] {
                        for (r, c) in upper(br.phases) {
                            x.push(format!("{part}:{}:{}{}", br.id, PHASE_NAMES[r], PHASE_NAMES[c]));
                        }
                    }
                }
                BranchKind::Transformer(_) => {
                    for part in ["R", "X"] {
                        for p in br.phases.iter() {
                            x.push(format!("{part}:{}:{}", br.id, PHASE_NAMES[p]));
                        }
                    }
                    x.push(format!("ratio:{}", br.id));
                }
                BranchKind::Switch(_) => x.push(format!("sw:{}", br.id)),
            }
        }
        for part in ["P", "Q"] {
            for &li in &loads {
                let l = &net.loads[li];
                for k in l.elements() {
                    x.push(format!("{part}:{}:{}", l.id, element_name(l.connection, k)));
                }
            }
        }

        let mut y = Vec::new();
        for part in ["V", "I", "thV", "thI"] {
            for &(b, p) in &bus_phases {
                y.push(format!("{part}:{}:{}", net.buses[b].id, PHASE_NAMES[p]));
            }
        }
        for part in ["Ploss", "Qloss"] {
            for &bi in &branches {
                y.push(format!("{part}:{}", net.branches[bi].id));
            }
        }
        SlotLayout {
            x_names: x,
            y_names: y,
            branches,
            loads,
            bus_phases,
            source,
        }
    }

    pub fn nx(&self) -> usize {
        self.x_names.len()
    }

    pub fn ny(&self) -> usize {
        self.y_names.len()
    }

    /// Feature vector of an instantiated network with this layout.
    pub fn features(&self, net: &NetworkModel) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.nx());
        let src = &net.buses[self.source];
        for p in src.phases.iter() {
            x.push(net.source_voltage[p].norm());
        }
        for p in src.phases.iter() {
            x.push(wrap_deg(net.source_voltage[p].arg().to_degrees()));
        }
        for &bi in &self.branches {
            let br = &net.branches[bi];
            match br.kind {
                BranchKind::Line => {
                    let z = br.series_z();
                    let cells = upper(br.phases);
                    x.extend(cells.iter().map(|&(r, c)| z[r][c].re));
                    x.extend(cells.iter().map(|&(r, c)| z[r][c].im));
                }
                BranchKind::Transformer(t) => {
                    let z = br.series_z();
                    x.extend(br.phases.iter().map(|p| z[p][p].re));
                    x.extend(br.phases.iter().map(|p| z[p][p].im));
                    x.push(t.ratio);
                }
                BranchKind::Switch(s) => x.push(if s == SwitchState::Closed { 1.0 } else { 0.0 }),
            }
        }
        for part in 0..2 {
            for &li in &self.loads {
                let l = &net.loads[li];
                for k in l.elements() {
                    x.push(if part == 0 { l.s_rated[k].re } else { l.s_rated[k].im });
                }
            }
        }
        x
    }

    /// Target vector of a solution.
    pub fn targets(&self, sol: &PfSolution) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.ny());
        y.extend(self.bus_phases.iter().map(|&(b, p)| sol.voltages[b][p].norm()));
        y.extend(self.bus_phases.iter().map(|&(b, p)| sol.injections[b][p].norm()));
        y.extend(self.bus_phases.iter().map(|&(b, p)| angle_deg(sol.voltages[b][p])));
        y.extend(self.bus_phases.iter().map(|&(b, p)| angle_deg(sol.injections[b][p])));
        y.extend(self.branches.iter().map(|&bi| sol.losses[bi].re));
        y.extend(self.branches.iter().map(|&bi| sol.losses[bi].im));
        y
    }

    /// Whether another network produces the same slot names.
    pub fn matches(&self, net: &NetworkModel) -> bool {
        *self == SlotLayout::new(net)
    }
}

/// Phase angle in degrees, zero for phasors too small to carry an angle.
fn angle_deg(z: num_complex::Complex64) -> f64 {
    if z.norm() < 1e-12 {
        0.0
    } else {
        wrap_deg(z.arg().to_degrees())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Rejects unconverged solutions.
pub fn build_sample(layout: &SlotLayout, net: &NetworkModel, sol: &PfSolution) -> Result<Sample, ScenarioError> {
    if !sol.converged {
        return Err(ScenarioError::Unconverged { iterations: sol.iterations });
    }
    Ok(Sample {
        x: layout.features(net),
        y: layout.targets(sol),
    })
}
