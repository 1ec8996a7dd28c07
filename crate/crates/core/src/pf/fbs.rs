use super::order::{order_branches, SweepOrder};
use super::solution::{assemble, PfSolution, SolveOptions};
use super::util::{add, attachments, bus_demand, half_shunt, is_finite, mat_vec, scale, sub, CZERO};
use super::PfError;
use crate::grid::{validate_network, BranchKind, Mat3, NetworkModel, Phasor, RealMat3};

#[derive(Clone, Debug)]
enum Element {
    Line { z: Mat3, shunt_b: RealMat3 },
    Transformer { z: Mat3, n: f64 },
    Switch,
}

/// Forward-backward sweep for radial feeders. Building the solver validates the
/// topology and fixes the sweep order; `solve` may then be called for any load
/// pattern on the same topology.
#[derive(Clone, Debug)]
pub struct FbsSolver {
    topology: NetworkModel,
    order: SweepOrder,
    /// (upstream, downstream) bus index per branch, in sweep direction.
    ends: Vec<(usize, usize)>,
    elements: Vec<Element>,
    source: usize,
}

impl FbsSolver {
    pub fn new(net: &NetworkModel) -> Result<Self, PfError> {
        let violations = validate_network(net);
        if !violations.is_empty() {
            return Err(PfError::InvalidNetwork(violations));
        }
        let order = order_branches(net)?;
        let index = net.bus_index();
        let ends = (0..net.branches.len())
            .map(|bi| {
                if net.branches[bi].is_in_service() {
                    order.ends(net, &index, bi)
                } else {
                    (usize::MAX, usize::MAX)
                }
            })
            .collect();
        let elements = net
            .branches
            .iter()
            .map(|br| match br.kind {
                BranchKind::Line => Element::Line {
                    z: br.series_z(),
                    shunt_b: br.total_shunt_b(),
                },
                BranchKind::Transformer(t) => Element::Transformer { z: br.series_z(), n: t.ratio },
                BranchKind::Switch(_) => Element::Switch,
            })
            .collect();
        let mut topology = net.clone();
        topology.loads.clear();
        Ok(FbsSolver {
            source: net.source_index().expect("validated"),
            topology,
            order,
            ends,
            elements,
        })
    }

    pub fn order(&self) -> &SweepOrder {
        &self.order
    }

    pub fn solve(&self, net: &NetworkModel, opts: &SolveOptions) -> Result<PfSolution, PfError> {
        if !net.same_topology(&self.topology) || net.source_voltage.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(PfError::TopologyMismatch);
        }
        let index = net.bus_index();
        let (load_bus, cap_bus) = attachments(net, &index)?;
        let nb = net.buses.len();

        let mut v = PfSolution::flat(net).voltages;
        let mut flows = vec![Flow::default(); net.branches.len()];

        let mut iterations = 0;
        let mut converged = false;
        while iterations < opts.max_iter {
            iterations += 1;
            let demand = bus_demand(net, &load_bus, &cap_bus, &v)?;
            self.backward(&v, &demand, &mut flows);
            let mut next = vec![[CZERO; 3]; nb];
            self.forward(net, &mut next, &flows);
            let mut dv = 0.0f64;
            for (a, b) in next.iter().zip(&v) {
                if !is_finite(a) {
                    return Err(PfError::Diverged { iteration: iterations });
                }
                for p in 0..3 {
                    dv = dv.max((a[p] - b[p]).norm());
                }
            }
            v = next;
            if dv < opts.tol {
                converged = true;
                break;
            }
        }
        // currents consistent with the final voltages
        let demand = bus_demand(net, &load_bus, &cap_bus, &v)?;
        self.backward(&v, &demand, &mut flows);

        let mut from = vec![[CZERO; 3]; net.branches.len()];
        let mut to = vec![[CZERO; 3]; net.branches.len()];
        for &bi in &self.order.forward {
            let f = &flows[bi];
            if self.order.reversed[bi] {
                from[bi] = scale(&f.down, -1.0);
                to[bi] = scale(&f.up, -1.0);
            } else {
                from[bi] = f.up;
                to[bi] = f.down;
            }
        }
        assemble(net, v, from, to, iterations, converged)
    }

    /// Leaves to source: accumulates the current each branch draws upstream.
    fn backward(&self, v: &[[Phasor; 3]], demand: &[[Phasor; 3]], flows: &mut [Flow]) {
        let mut drawn = demand.to_vec();
        for &bi in &self.order.backward {
            let (u, d) = self.ends[bi];
            let down = drawn[d];
            let rev = self.order.reversed[bi];
            let flow = match &self.elements[bi] {
                Element::Line { shunt_b, .. } => {
                    let series = add(&down, &half_shunt(shunt_b, &v[d]));
                    Flow {
                        up: add(&series, &half_shunt(shunt_b, &v[u])),
                        series,
                        down,
                    }
                }
                Element::Transformer { n, .. } => {
                    let up = if rev { scale(&down, *n) } else { scale(&down, 1.0 / n) };
                    Flow { up, series: if rev { up } else { down }, down }
                }
                Element::Switch => Flow { up: down, series: down, down },
            };
            drawn[u] = add(&drawn[u], &flow.up);
            flows[bi] = flow;
        }
    }

    /// Source to leaves: voltage drops using the latest branch currents.
    fn forward(&self, net: &NetworkModel, v: &mut [[Phasor; 3]], flows: &[Flow]) {
        let src_phases = net.buses[self.source].phases;
        for p in src_phases.iter() {
            v[self.source][p] = net.source_voltage[p];
        }
        for &bi in &self.order.forward {
            let (u, d) = self.ends[bi];
            let vu = v[u];
            let f = &flows[bi];
            let vd = match &self.elements[bi] {
                Element::Line { z, .. } => sub(&vu, &mat_vec(z, &f.series)),
                Element::Transformer { z, n } => {
                    if self.order.reversed[bi] {
                        scale(&sub(&vu, &mat_vec(z, &f.series)), *n)
                    } else {
                        sub(&scale(&vu, 1.0 / n), &mat_vec(z, &f.series))
                    }
                }
                Element::Switch => vu,
            };
            let phases = net.branches[bi].phases;
            let mut out = [CZERO; 3];
            for p in phases.iter() {
                out[p] = vd[p];
            }
            v[d] = out;
        }
    }
}

/// Sweep-direction currents of one branch: drawn at the downstream end,
/// through the series element, and drawn from the upstream end.
#[derive(Clone, Copy, Debug, Default)]
struct Flow {
    up: [Phasor; 3],
    series: [Phasor; 3],
    down: [Phasor; 3],
}

/// One-shot forward-backward sweep.
pub fn fbs_solve(net: &NetworkModel, tol: f64, max_iter: usize) -> Result<PfSolution, PfError> {
    FbsSolver::new(net)?.solve(net, &SolveOptions { tol, max_iter })
}
