use super::model::{Branch, BranchKind, Bus, Load};

/// Result of replacing a uniformly distributed load by two lumped loads.
#[derive(Clone, Debug, PartialEq)]
pub struct LumpedFragment {
    /// Synthetic bus one quarter of the way down the line.
    pub bus: Bus,
    /// Sending end to the synthetic bus (a quarter of the length).
    pub near_segment: Branch,
    /// Synthetic bus to the receiving end (three quarters of the length).
    pub far_segment: Branch,
    /// Two thirds of the load at the synthetic bus.
    pub near_load: Load,
    /// The remaining third at the receiving bus.
    pub far_load: Load,
}

/// Lumps a load spread uniformly along `branch`: two thirds at one quarter of
/// the length from the sending end and one third at the receiving end. The
/// branch is split into two series segments with the same per-length
/// impedance, so segment impedances are in the ratio 1:3.
pub fn lump_distributed_load(branch: &Branch, load: &Load, base_kv: f64) -> LumpedFragment {
    assert!(matches!(branch.kind, BranchKind::Line), "distributed loads sit on lines");
    let mid_id = format!("{}_q", branch.id);
    let bus = Bus {
        id: mid_id.clone(),
        phases: branch.phases,
        base_kv,
    };

    let mut near_segment = branch.clone();
    near_segment.id = format!("{}_1", branch.id);
    near_segment.to_bus = mid_id.clone();
    near_segment.length = branch.length * 0.25;

    let mut far_segment = branch.clone();
    far_segment.id = format!("{}_2", branch.id);
    far_segment.from_bus = mid_id.clone();
    far_segment.length = branch.length - near_segment.length;

    let mut near_load = load.clone();
    near_load.id = format!("{}_near", load.id);
    near_load.bus = mid_id;
    let mut far_load = load.clone();
    far_load.id = format!("{}_far", load.id);
    far_load.bus = branch.to_bus.clone();
    for k in 0..3 {
        let s = load.s_rated[k];
        let near = s * (2.0 / 3.0);
        near_load.s_rated[k] = near;
        // near lies within [s/2, 2s] so the subtraction is exact and near + far == s
        far_load.s_rated[k] = s - near;
    }

    LumpedFragment {
        bus,
        near_segment,
        far_segment,
        near_load,
        far_load,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::model::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn fixture(s: Complex64) -> (Branch, Load) {
        let mut z = ZERO_MAT3;
        for p in 0..3 {
            z[p][p] = Complex64::new(0.3, 0.6);
        }
        let br = Branch::line("L", "1", "2", PhaseSet::ABC, z, 1.0);
        let load = Load {
            id: "D".into(),
            bus: "2".into(),
            phases: PhaseSet::ABC,
            connection: Connection::Wye,
            model: LoadModel::ConstantPq,
            s_rated: [s; 3],
            v_rated: 1.0,
        };
        (br, load)
    }

    #[test]
    fn three_pu_over_one_km() {
        let (br, load) = fixture(Complex64::new(3.0, 0.0));
        let f = lump_distributed_load(&br, &load, 2.4);
        assert_eq!(f.near_load.s_rated[0], Complex64::new(2.0, 0.0));
        assert!((f.far_load.s_rated[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(f.near_segment.length, 0.25);
        assert_eq!(f.far_segment.length, 0.75);
        let zn = f.near_segment.series_z()[0][0];
        let zf = f.far_segment.series_z()[0][0];
        assert!((zf / zn - Complex64::new(3.0, 0.0)).norm() < 1e-12);
        assert_eq!(f.near_load.bus, f.bus.id);
        assert_eq!(f.far_load.bus, "2");
        assert_eq!(f.near_segment.to_bus, f.far_segment.from_bus);
    }

    #[test]
    fn zero_load_only_changes_topology() {
        let (br, load) = fixture(Complex64::new(0.0, 0.0));
        let f = lump_distributed_load(&br, &load, 2.4);
        assert!(f.near_load.s_rated.iter().chain(f.far_load.s_rated.iter()).all(|s| s.norm() == 0.0));
    }

    proptest! {
        #[test]
        fn total_power_is_preserved_exactly(p in -1e4..1e4f64, q in -1e4..1e4f64) {
            let (br, load) = fixture(Complex64::new(p, q));
            let f = lump_distributed_load(&br, &load, 2.4);
            for k in 0..3 {
                prop_assert_eq!(f.near_load.s_rated[k] + f.far_load.s_rated[k], load.s_rated[k]);
            }
        }
    }
}
