use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use super::solution::{assemble, PfSolution, SolveOptions};
use super::util::{add, attachments, bus_demand, half_shunt, mat_vec, scale, sub, CZERO};
use super::ybus::{assemble_ybus, series_admittance, YBus};
use super::PfError;
use crate::grid::{validate_network, BranchKind, Mat3, NetworkModel, Phasor, SwitchState};

/// Current-injection fixed point `Y_LL·V_L = I_L(V) − Y_LS·V_S`, with the
/// reduced admittance matrix factorized once and reused for every iteration
/// and every load pattern on the same topology. Works for meshed networks.
pub struct CurrentInjectionSolver {
    topology: NetworkModel,
    ybus: YBus,
    /// Reduced position of each matrix row; `None` for source rows.
    reduced: Vec<Option<usize>>,
    /// (row, phase) of the source node.
    source_rows: Vec<(usize, usize)>,
    lu: LU<Complex64, Dyn, Dyn>,
    y_ls: DMatrix<Complex64>,
    branch_y: Vec<Option<Mat3>>,
    /// Closed-switch spanning trees: (child bus, parent bus, switch) in BFS order.
    switch_tree: Vec<(usize, usize, usize)>,
}

impl CurrentInjectionSolver {
    pub fn new(net: &NetworkModel) -> Result<Self, PfError> {
        let violations = validate_network(net);
        if !violations.is_empty() {
            return Err(PfError::InvalidNetwork(violations));
        }
        let ybus = assemble_ybus(net)?;
        let src = net.source_index().expect("validated");
        let src_node = ybus.node_of_bus[src];

        let mut reduced = vec![None; ybus.dim];
        let mut free = Vec::new();
        let mut source_rows = Vec::new();
        for (n, rows) in ybus.row.iter().enumerate() {
            for (p, r) in rows.iter().enumerate() {
                let Some(r) = *r else { continue };
                if n == src_node {
                    source_rows.push((r, p));
                } else {
                    reduced[r] = Some(free.len());
                    free.push(r);
                }
            }
        }
        let nl = free.len();
        let mut y_ll = DMatrix::zeros(nl, nl);
        let mut y_ls = DMatrix::zeros(nl, source_rows.len());
        for (r, c, v) in ybus.iter() {
            let Some(rl) = reduced[r] else { continue };
            match reduced[c] {
                Some(cl) => y_ll[(rl, cl)] = v,
                None => {
                    let k = source_rows.iter().position(|&(sr, _)| sr == c).unwrap();
                    y_ls[(rl, k)] = v;
                }
            }
        }
        let lu = y_ll.lu();
        if nl > 0 && !lu.is_invertible() {
            return Err(PfError::SingularSystem);
        }

        let branch_y = net
            .branches
            .iter()
            .map(|br| match br.kind {
                BranchKind::Switch(_) => Ok(None),
                _ => series_admittance(&br.series_z(), br.phases, &br.id).map(Some),
            })
            .collect::<Result<Vec<_>, _>>()?;

        let index = net.bus_index();
        let mut adj = vec![Vec::new(); net.buses.len()];
        for (bi, br) in net.branches.iter().enumerate() {
            if br.kind == BranchKind::Switch(SwitchState::Closed) {
                let (f, t) = (index[br.from_bus.as_str()], index[br.to_bus.as_str()]);
                adj[f].push((t, bi));
                adj[t].push((f, bi));
            }
        }
        let mut switch_tree = Vec::new();
        for (n, buses) in ybus.node_buses.iter().enumerate() {
            if buses.len() < 2 {
                continue;
            }
            let root = if n == src_node { src } else { buses[0] };
            let mut seen = vec![false; net.buses.len()];
            seen[root] = true;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &(v, bi) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        switch_tree.push((v, u, bi));
                        queue.push_back(v);
                    }
                }
            }
        }

        let mut topology = net.clone();
        topology.loads.clear();
        Ok(CurrentInjectionSolver {
            topology,
            ybus,
            reduced,
            source_rows,
            lu,
            y_ls,
            branch_y,
            switch_tree,
        })
    }

    pub fn ybus(&self) -> &YBus {
        &self.ybus
    }

    pub fn solve(&self, net: &NetworkModel, opts: &SolveOptions) -> Result<PfSolution, PfError> {
        if !net.same_topology(&self.topology) {
            return Err(PfError::TopologyMismatch);
        }
        let index = net.bus_index();
        let (load_bus, cap_bus) = attachments(net, &index)?;
        let y = &self.ybus;
        let nl = self.y_ls.nrows();

        let vs = DVector::from_iterator(self.source_rows.len(), self.source_rows.iter().map(|&(_, p)| net.source_voltage[p]));
        let fixed = -(&self.y_ls * &vs);

        let mut vnode = vec![CZERO; y.dim];
        for rows in &y.row {
            for (p, r) in rows.iter().enumerate() {
                if let Some(r) = r {
                    vnode[*r] = net.source_voltage[p];
                }
            }
        }
        let mut v = self.bus_voltages(net, &vnode);

        let mut iterations = 0;
        let mut converged = false;
        while iterations < opts.max_iter {
            iterations += 1;
            let demand = bus_demand(net, &load_bus, &cap_bus, &v)?;
            let mut rhs = fixed.clone();
            for (b, d) in demand.iter().enumerate() {
                for p in 0..3 {
                    if let Some(rl) = y.bus_row(b, p).and_then(|r| self.reduced[r]) {
                        rhs[rl] -= d[p];
                    }
                }
            }
            let sol = if nl == 0 { rhs } else { self.lu.solve(&rhs).ok_or(PfError::SingularSystem)? };
            let mut dv = 0.0f64;
            for (r, slot) in vnode.iter_mut().enumerate() {
                if let Some(rl) = self.reduced[r] {
                    let x = sol[rl];
                    if !x.re.is_finite() || !x.im.is_finite() {
                        return Err(PfError::Diverged { iteration: iterations });
                    }
                    dv = dv.max((x - *slot).norm());
                    *slot = x;
                }
            }
            v = self.bus_voltages(net, &vnode);
            if dv < opts.tol {
                converged = true;
                break;
            }
        }

        let demand = bus_demand(net, &load_bus, &cap_bus, &v)?;
        let (from, to) = self.branch_currents(net, &index, &v, &demand);
        assemble(net, v, from, to, iterations, converged)
    }

    fn bus_voltages(&self, net: &NetworkModel, vnode: &[Phasor]) -> Vec<[Phasor; 3]> {
        net.buses
            .iter()
            .enumerate()
            .map(|(b, bus)| {
                let mut out = [CZERO; 3];
                for p in bus.phases.iter() {
                    out[p] = vnode[self.ybus.bus_row(b, p).unwrap()];
                }
                out
            })
            .collect()
    }

    fn branch_currents(
        &self,
        net: &NetworkModel,
        index: &std::collections::HashMap<&str, usize>,
        v: &[[Phasor; 3]],
        demand: &[[Phasor; 3]],
    ) -> (Vec<[Phasor; 3]>, Vec<[Phasor; 3]>) {
        let nbr = net.branches.len();
        let mut from = vec![[CZERO; 3]; nbr];
        let mut to = vec![[CZERO; 3]; nbr];
        // current each bus must receive through closed switches
        let mut need = demand.to_vec();
        for (bi, br) in net.branches.iter().enumerate() {
            let Some(ys) = &self.branch_y[bi] else { continue };
            let (f, t) = (index[br.from_bus.as_str()], index[br.to_bus.as_str()]);
            let (vf, vt) = (v[f], v[t]);
            match br.kind {
                BranchKind::Transformer(tp) => {
                    let n = tp.ratio;
                    let series = mat_vec(ys, &sub(&scale(&vf, 1.0 / n), &vt));
                    from[bi] = scale(&series, 1.0 / n);
                    to[bi] = series;
                }
                _ => {
                    let series = mat_vec(ys, &sub(&vf, &vt));
                    let b = br.total_shunt_b();
                    from[bi] = add(&series, &half_shunt(&b, &vf));
                    to[bi] = sub(&series, &half_shunt(&b, &vt));
                }
            }
            need[f] = add(&need[f], &from[bi]);
            need[t] = sub(&need[t], &to[bi]);
        }
        for &(child, parent, bi) in self.switch_tree.iter().rev() {
            let flow = need[child];
            need[parent] = add(&need[parent], &flow);
            let toward_child = index[net.branches[bi].to_bus.as_str()] == child;
            let i = if toward_child { flow } else { scale(&flow, -1.0) };
            from[bi] = i;
            to[bi] = i;
        }
        (from, to)
    }
}

/// One-shot current-injection solve.
pub fn solve_current_injection(net: &NetworkModel, tol: f64, max_iter: usize) -> Result<PfSolution, PfError> {
    CurrentInjectionSolver::new(net)?.solve(net, &SolveOptions { tol, max_iter })
}
