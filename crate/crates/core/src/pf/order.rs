use std::collections::VecDeque;

use super::PfError;
use crate::grid::NetworkModel;

/// Branch visiting order for the two sweeps. Only in-service branches appear.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepOrder {
    /// Source towards leaves; a branch's parent always precedes it.
    pub forward: Vec<usize>,
    /// Leaves towards source (reverse of `forward`).
    pub backward: Vec<usize>,
    /// Per branch: the sweep enters it at `to_bus` rather than `from_bus`.
    pub reversed: Vec<bool>,
    /// Branch feeding each bus (`None` for the source).
    pub parent: Vec<Option<usize>>,
}

impl SweepOrder {
    /// Upstream and downstream bus indices of a branch in sweep direction.
    pub fn ends(&self, net: &NetworkModel, index: &std::collections::HashMap<&str, usize>, branch: usize) -> (usize, usize) {
        let br = &net.branches[branch];
        let (f, t) = (index[br.from_bus.as_str()], index[br.to_bus.as_str()]);
        if self.reversed[branch] {
            (t, f)
        } else {
            (f, t)
        }
    }
}

/// Breadth-first tree from the source over in-service branches.
pub fn order_branches(net: &NetworkModel) -> Result<SweepOrder, PfError> {
    let index = net.bus_index();
    let src = net
        .source_index()
        .ok_or_else(|| PfError::UnknownAttachment(net.source_bus.clone()))?;
    let n = net.buses.len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (bi, br) in net.branches.iter().enumerate() {
        if !br.is_in_service() {
            continue;
        }
        let (Some(&f), Some(&t)) = (index.get(br.from_bus.as_str()), index.get(br.to_bus.as_str())) else {
            return Err(PfError::UnknownAttachment(br.id.clone()));
        };
        adj[f].push((t, bi));
        adj[t].push((f, bi));
    }

    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut parent_bus: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut used = vec![false; net.branches.len()];
    let mut reversed = vec![false; net.branches.len()];
    let mut forward = Vec::new();
    let mut queue = VecDeque::from([src]);
    seen[src] = true;
    while let Some(u) = queue.pop_front() {
        for &(v, bi) in &adj[u] {
            if used[bi] {
                continue;
            }
            used[bi] = true;
            if seen[v] {
                return Err(PfError::NotRadial {
                    cycle: cycle_through(net, &parent, &parent_bus, u, v, bi),
                });
            }
            seen[v] = true;
            parent[v] = Some(bi);
            parent_bus[v] = Some(u);
            reversed[bi] = index[net.branches[bi].to_bus.as_str()] == u;
            forward.push(bi);
            queue.push_back(v);
        }
    }
    let backward = forward.iter().rev().copied().collect();
    Ok(SweepOrder {
        forward,
        backward,
        reversed,
        parent,
    })
}

fn cycle_through(
    net: &NetworkModel,
    parent: &[Option<usize>],
    parent_bus: &[Option<usize>],
    u: usize,
    v: usize,
    closing: usize,
) -> Vec<String> {
    let ancestors = |mut b: usize| {
        let mut path = vec![b];
        while let Some(p) = parent_bus[b] {
            path.push(p);
            b = p;
        }
        path
    };
    let pu = ancestors(u);
    let pv = ancestors(v);
    let lca = *pu.iter().find(|b| pv.contains(b)).expect("tree shares the source");
    let mut edges = Vec::new();
    for path in [&pu, &pv] {
        for &b in path.iter().take_while(|&&b| b != lca) {
            edges.push(parent[b].expect("non-root bus has a parent"));
        }
    }
    edges.push(closing);
    edges.sort_unstable();
    edges.into_iter().map(|bi| net.branches[bi].id.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::*;
    use num_complex::Complex64;

    fn z() -> Mat3 {
        let mut z = ZERO_MAT3;
        for p in 0..3 {
            z[p][p] = Complex64::new(0.01, 0.02);
        }
        z
    }

    fn chain(n: usize) -> NetworkModel {
        let mut net = NetworkModel::new("chain", 3000.0);
        for i in 1..=n {
            net.buses.push(Bus { id: i.to_string(), phases: PhaseSet::ABC, base_kv: 2.4 });
        }
        for i in 1..n {
            net.branches.push(Branch::line(format!("L{i}"), i.to_string(), (i + 1).to_string(), PhaseSet::ABC, z(), 1.0));
        }
        net.source_bus = "1".into();
        net
    }

    fn ids(net: &NetworkModel, order: &[usize]) -> Vec<String> {
        order.iter().map(|&b| net.branches[b].id.clone()).collect()
    }

    #[test]
    fn chain_order() {
        let net = chain(4);
        let o = order_branches(&net).unwrap();
        assert_eq!(ids(&net, &o.backward), ["L3", "L2", "L1"]);
        assert_eq!(ids(&net, &o.forward), ["L1", "L2", "L3"]);
    }

    #[test]
    fn loop_is_not_radial() {
        let mut net = chain(3);
        net.branches.push(Branch::line("L9", "3", "1", PhaseSet::ABC, z(), 1.0));
        match order_branches(&net) {
            Err(PfError::NotRadial { cycle }) => assert_eq!(cycle, ["L1", "L2", "L9"]),
            other => panic!("{other:?}"),
        }
        // parallel lines form a two-branch cycle
        let mut net = chain(2);
        net.branches.push(Branch::line("L1b", "1", "2", PhaseSet::ABC, z(), 1.0));
        assert!(matches!(order_branches(&net), Err(PfError::NotRadial { .. })));
    }

    #[test]
    fn open_switch_breaks_loop() {
        let mut net = chain(3);
        net.branches.push(Branch::switch("S", "3", "1", PhaseSet::ABC, SwitchState::Open));
        let o = order_branches(&net).unwrap();
        assert_eq!(o.forward.len(), 2);
    }

    #[test]
    fn star_parent_before_child() {
        let mut net = chain(2);
        for (i, b) in ["3", "4", "5"].iter().enumerate() {
            net.buses.push(Bus { id: b.to_string(), phases: PhaseSet::ABC, base_kv: 2.4 });
            // declared towards the hub to exercise reversal
            net.branches.push(Branch::line(format!("X{i}"), *b, "2", PhaseSet::ABC, z(), 1.0));
        }
        let o = order_branches(&net).unwrap();
        let index = net.bus_index();
        let pos: std::collections::HashMap<usize, usize> = o.forward.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        for &bi in &o.forward {
            let (up, _) = o.ends(&net, &index, bi);
            if let Some(pb) = o.parent[up] {
                assert!(pos[&pb] < pos[&bi]);
            }
        }
        assert!(o.reversed[1] && o.reversed[2] && o.reversed[3] && !o.reversed[0]);
        assert_eq!(o.backward.iter().rev().copied().collect::<Vec<_>>(), o.forward);
    }
}
