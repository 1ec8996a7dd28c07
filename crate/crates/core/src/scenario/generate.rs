use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ScenarioConfig;
use super::ScenarioError;
use crate::grid::{BranchKind, Connection, Load, LoadModel, NetworkModel, SwitchState};
use crate::io::LoadShape;

/// Deterministic residential-style hourly shape with morning and evening
/// peaks, lighter weekends and a summer peak, scaled so its maximum is 1.
pub fn synthetic_loadshape(hours: usize) -> LoadShape {
    let bump = |h: f64, centre: f64, width: f64| (-((h - centre) / width).powi(2)).exp();
    let raw: Vec<f64> = (0..hours)
        .map(|t| {
            let h = (t % 24) as f64;
            let day = t / 24;
            let daily = 0.45 + 0.2 * bump(h, 8.0, 2.5) + 0.4 * bump(h, 19.0, 3.0) + 0.1 * bump(h, 13.0, 4.0);
            let weekend = if day % 7 >= 5 { 0.92 } else { 1.0 };
            let season = 1.0 + 0.15 * (2.0 * std::f64::consts::PI * ((day % 365) as f64 - 200.0) / 365.0).cos();
            let growth = 1.0 + 0.02 * (day / 365) as f64;
            daily * weekend * season * growth
        })
        .collect();
    let peak = raw.iter().cloned().fold(0.0, f64::max);
    LoadShape {
        name: "synthetic".into(),
        values: raw.into_iter().map(|v| v / peak).collect(),
    }
}

/// Sets switch states. Unknown ids and non-switch branches are errors.
pub fn apply_topology(net: &NetworkModel, open: &[String], close: &[String]) -> Result<NetworkModel, ScenarioError> {
    let mut out = net.clone();
    for (ids, state) in [(open, SwitchState::Open), (close, SwitchState::Closed)] {
        for id in ids {
            let br = out.branch_mut(id).ok_or_else(|| ScenarioError::Topology(format!("unknown switch '{id}'")))?;
            if !br.is_switch() {
                return Err(ScenarioError::Topology(format!("'{id}' is not a switch")));
            }
            br.kind = BranchKind::Switch(state);
        }
    }
    Ok(out)
}

/// Hourly load instantiations over a fixed topology. `powers[t][k]` is the
/// per-element rated power of `base.loads[k]` at hour `t`.
#[derive(Clone, Debug)]
pub struct ScenarioSet {
    pub base: NetworkModel,
    pub powers: Vec<Vec<[Complex64; 3]>>,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    /// The network at hour `t`.
    pub fn instantiate(&self, t: usize) -> NetworkModel {
        let mut net = self.base.clone();
        for (load, s) in net.loads.iter_mut().zip(&self.powers[t]) {
            load.s_rated = *s;
        }
        net
    }
}

fn der_load(net: &NetworkModel, id: String, bus: &str, phases: crate::grid::PhaseSet) -> Result<Load, ScenarioError> {
    if net.loads.iter().any(|l| l.id == id) {
        return Err(ScenarioError::Topology(format!("load id '{id}' already exists")));
    }
    let b = net.bus(bus).ok_or_else(|| ScenarioError::Topology(format!("unknown bus '{bus}'")))?;
    if !phases.is_subset_of(b.phases) {
        return Err(ScenarioError::Topology(format!("bus '{bus}' lacks phases {phases}")));
    }
    Ok(Load {
        id,
        bus: bus.to_string(),
        phases,
        connection: Connection::Wye,
        model: LoadModel::ConstantPq,
        s_rated: [Complex64::default(); 3],
        v_rated: 1.0,
    })
}

/// Hour-by-hour load, PV and EV instantiations. Base loads use one RNG stream
/// and every PV or EV unit its own, so adding a unit never perturbs the others.
pub fn generate_scenarios(net: &NetworkModel, cfg: &ScenarioConfig) -> Result<ScenarioSet, ScenarioError> {
    let mut base = apply_topology(net, &cfg.open, &cfg.close)?;
    if let Some(model) = cfg.load_model {
        for l in &mut base.loads {
            l.model = model;
        }
    }
    let n_circuit = base.loads.len();
    let rated: Vec<[Complex64; 3]> = base.loads.iter().map(|l| l.s_rated).collect();
    let shapes: Vec<&LoadShape> = base.loads.iter().map(|l| cfg.shapes.get(&l.id).unwrap_or(&cfg.shape)).collect();
    for id in cfg.shapes.keys() {
        if !base.loads.iter().any(|l| &l.id == id) {
            return Err(ScenarioError::Topology(format!("shape given for unknown load '{id}'")));
        }
    }
    for (i, pv) in cfg.pv.iter().enumerate() {
        let load = der_load(&base, format!("PV{}", i + 1), &pv.bus, pv.phases)?;
        base.loads.push(load);
    }
    for (i, ev) in cfg.ev.iter().enumerate() {
        let load = der_load(&base, format!("EV{}", i + 1), &ev.bus, ev.phases)?;
        base.loads.push(load);
    }
    let s_phase = base.s_base_phase_kva();
    let horizon = cfg.horizon;
    let elements: Vec<Vec<usize>> = base.loads.iter().map(|l| l.elements()).collect();

    let mut powers = vec![vec![[Complex64::default(); 3]; base.loads.len()]; horizon];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (t, row) in powers.iter_mut().enumerate() {
        for k in 0..n_circuit {
            // one draw per load, so its phases keep their rated proportions
            let noise = if cfg.noise > 0.0 { rng.gen_range(-cfg.noise..=cfg.noise) } else { 0.0 };
            let m = shapes[k].at(t) * (1.0 + noise);
            for &e in &elements[k] {
                row[k][e] = rated[k][e] * m;
            }
        }
    }

    let days = horizon.div_ceil(24);
    for (i, pv) in cfg.pv.iter().enumerate() {
        let k = n_circuit + i;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1 + i as u64);
        let day_factor: Vec<f64> = (0..days).map(|_| 1.0 - pv.variability * rng.gen::<f64>()).collect();
        let per_phase = pv.peak_kw / pv.phases.count() as f64 / s_phase;
        for (t, row) in powers.iter_mut().enumerate() {
            let h = (t % 24) as f64;
            let bell = if (6.0..=18.0).contains(&h) { (std::f64::consts::PI * (h - 6.0) / 12.0).sin() } else { 0.0 };
            for &e in &elements[k] {
                row[k][e] = Complex64::new(-per_phase * bell * day_factor[t / 24], 0.0);
            }
        }
    }
    for (i, ev) in cfg.ev.iter().enumerate() {
        let k = n_circuit + cfg.pv.len() + i;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1001 + i as u64);
        let mut charging = vec![false; horizon];
        for day in 0..days {
            let plugs = rng.gen::<f64>() < ev.probability;
            let start = rng.gen_range(17..=22);
            let len = rng.gen_range(2..=5);
            if plugs {
                for t in (day * 24 + start..day * 24 + start + len).filter(|&t| t < horizon) {
                    charging[t] = true;
                }
            }
        }
        let per_phase = Complex64::new(1.0, 0.2) * (ev.charger_kw / ev.phases.count() as f64 / s_phase);
        for (t, row) in powers.iter_mut().enumerate() {
            if charging[t] {
                for &e in &elements[k] {
                    row[k][e] = per_phase;
                }
            }
        }
    }
    Ok(ScenarioSet { base, powers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::scenario::config::{EvSpec, PvSpec};

    #[test]
    fn flat_noiseless_hours_equal_base() {
        let net = assets::ieee4();
        let cfg = ScenarioConfig { horizon: 5, ..Default::default() };
        let set = generate_scenarios(&net, &cfg).unwrap();
        for t in 0..5 {
            assert_eq!(set.instantiate(t), net);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let net = assets::synth13();
        let cfg = ScenarioConfig {
            horizon: 72,
            noise: 0.1,
            shape: synthetic_loadshape(72),
            pv: vec![PvSpec { bus: "680".into(), phases: crate::grid::PhaseSet::ABC, peak_kw: 300.0, variability: 0.3 }],
            ev: vec![EvSpec { bus: "634".into(), phases: crate::grid::PhaseSet::ABC, charger_kw: 150.0, probability: 0.7 }],
            ..Default::default()
        };
        let a = generate_scenarios(&net, &cfg).unwrap();
        let b = generate_scenarios(&net, &cfg).unwrap();
        assert_eq!(a.powers, b.powers);
        let c = generate_scenarios(&net, &ScenarioConfig { seed: 43, ..cfg.clone() }).unwrap();
        assert_ne!(a.powers, c.powers);
        // PV produces only in daylight, EV only in the evening window
        let pv = net.loads.len();
        assert_eq!(a.powers[3][pv][0], Complex64::default());
        assert!(a.powers[12][pv][0].re < 0.0);
        for t in 0..72 {
            let h = t % 24;
            if (1..17).contains(&h) {
                assert_eq!(a.powers[t][pv + 1][0], Complex64::default());
            }
        }
    }

    #[test]
    fn noise_keeps_phase_proportions() {
        let net = assets::synth13();
        let cfg = ScenarioConfig { horizon: 24, noise: 0.1, ..Default::default() };
        let set = generate_scenarios(&net, &cfg).unwrap();
        let k = net.loads.iter().position(|l| l.id == "LD634").unwrap();
        let rated = net.loads[k].s_rated;
        let scales: Vec<f64> = set.powers.iter().map(|row| row[k][0].re / rated[0].re).collect();
        for (row, m) in set.powers.iter().zip(&scales) {
            assert!((0.9..=1.1).contains(m));
            for e in 0..3 {
                assert!((row[k][e] - rated[e] * *m).norm() < 1e-15);
            }
        }
        assert!(scales.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn zero_peak_pv_leaves_loads_untouched() {
        let net = assets::synth13();
        let cfg = ScenarioConfig { horizon: 48, noise: 0.05, ..Default::default() };
        let with_pv = ScenarioConfig {
            pv: vec![PvSpec { bus: "652".into(), phases: crate::grid::PhaseSet::single(0), peak_kw: 0.0, variability: 0.3 }],
            ..cfg.clone()
        };
        let a = generate_scenarios(&net, &cfg).unwrap();
        let b = generate_scenarios(&net, &with_pv).unwrap();
        for t in 0..48 {
            assert_eq!(a.powers[t][..], b.powers[t][..net.loads.len()]);
            assert!(b.powers[t][net.loads.len()].iter().all(|s| s.norm() == 0.0));
        }
    }

    #[test]
    fn topology_changes_switch_states() {
        let net = assets::synth13();
        let alt = apply_topology(&net, &["SW1".into()], &["SW2".into()]).unwrap();
        assert_eq!(alt.branch("SW1").unwrap().kind, BranchKind::Switch(SwitchState::Open));
        assert_eq!(alt.branch("SW2").unwrap().kind, BranchKind::Switch(SwitchState::Closed));
        assert!(apply_topology(&net, &["L650_632".into()], &[]).is_err());
        assert!(apply_topology(&net, &["nope".into()], &[]).is_err());
    }

    #[test]
    fn synthetic_shape_peaks_at_one() {
        let s = synthetic_loadshape(26280);
        let max = s.values.iter().cloned().fold(0.0, f64::max);
        let min = s.values.iter().cloned().fold(1.0, f64::min);
        assert_eq!(max, 1.0);
        assert!(min > 0.3);
    }
}
