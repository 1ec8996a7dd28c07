use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex phasor in per-unit. Angles are radians internally and degrees at I/O.
pub type Phasor = Complex64;

/// 3×3 complex phase matrix (rows/cols a, b, c).
pub type Mat3 = [[Complex64; 3]; 3];

/// 3×3 real phase matrix.
pub type RealMat3 = [[f64; 3]; 3];

pub const PHASE_NAMES: [char; 3] = ['a', 'b', 'c'];

pub const ZERO_MAT3: Mat3 = [[Complex64::new(0.0, 0.0); 3]; 3];

/// Phasor from magnitude and angle in degrees.
pub fn polar_deg(mag: f64, deg: f64) -> Phasor {
    Complex64::from_polar(mag, deg.to_radians())
}

/// Angle in degrees wrapped to (-180, 180].
pub fn wrap_deg(deg: f64) -> f64 {
    let mut a = deg % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Set of phases present on a bus, branch, load or capacitor.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PhaseSet(u8);

impl PhaseSet {
    pub const ABC: PhaseSet = PhaseSet(0b111);
    pub const EMPTY: PhaseSet = PhaseSet(0);

    pub fn new(a: bool, b: bool, c: bool) -> Self {
        PhaseSet(a as u8 | (b as u8) << 1 | (c as u8) << 2)
    }

    pub fn single(phase: usize) -> Self {
        assert!(phase < 3);
        PhaseSet(1 << phase)
    }

    /// Parses strings such as `abc`, `ac` or `b`.
    pub fn parse(s: &str) -> Option<Self> {
        let mut bits = 0u8;
        for ch in s.chars() {
            let idx = match ch.to_ascii_lowercase() {
                'a' => 0,
                'b' => 1,
                'c' => 2,
                _ => return None,
            };
            if bits & (1 << idx) != 0 {
                return None;
            }
            bits |= 1 << idx;
        }
        if bits == 0 {
            None
        } else {
            Some(PhaseSet(bits))
        }
    }

    pub fn contains(self, phase: usize) -> bool {
        phase < 3 && self.0 & (1 << phase) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset_of(self, other: PhaseSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: PhaseSet) -> PhaseSet {
        PhaseSet(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..3).filter(move |&p| self.contains(p))
    }

    pub fn bits(self) -> u8 {
        self.0
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.iter() {
            write!(f, "{}", PHASE_NAMES[p])?;
        }
        Ok(())
    }
}

impl fmt::Debug for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhaseSet({self})")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    pub id: String,
    pub phases: PhaseSet,
    /// Line-to-neutral base voltage in kV.
    pub base_kv: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwitchState {
    Open,
    Closed,
}

/// Grounded-wye/grounded-wye transformer: ideal per-unit ratio followed by the
/// series impedance held in the branch `z_matrix` (secondary side).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformerParams {
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchKind {
    Line,
    Transformer(TransformerParams),
    Switch(SwitchState),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    pub phases: PhaseSet,
    /// Series impedance per unit length, per-unit on the system base.
    pub z_matrix: Mat3,
    /// Total shunt susceptance per unit length, per-unit.
    pub shunt_b: RealMat3,
    pub length: f64,
    pub kind: BranchKind,
}

impl Branch {
    pub fn line(
        id: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        phases: PhaseSet,
        z_matrix: Mat3,
        length: f64,
    ) -> Self {
        Branch {
            id: id.into(),
            from_bus: from.into(),
            to_bus: to.into(),
            phases,
            z_matrix,
            shunt_b: [[0.0; 3]; 3],
            length,
            kind: BranchKind::Line,
        }
    }

    pub fn switch(
        id: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        phases: PhaseSet,
        state: SwitchState,
    ) -> Self {
        Branch {
            id: id.into(),
            from_bus: from.into(),
            to_bus: to.into(),
            phases,
            z_matrix: ZERO_MAT3,
            shunt_b: [[0.0; 3]; 3],
            length: 0.0,
            kind: BranchKind::Switch(state),
        }
    }

    /// `z_series` is the per-phase series impedance on the system base.
    pub fn transformer(
        id: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        phases: PhaseSet,
        z_series: [Complex64; 3],
        ratio: f64,
    ) -> Self {
        let mut z = ZERO_MAT3;
        for p in phases.iter() {
            z[p][p] = z_series[p];
        }
        Branch {
            id: id.into(),
            from_bus: from.into(),
            to_bus: to.into(),
            phases,
            z_matrix: z,
            shunt_b: [[0.0; 3]; 3],
            length: 1.0,
            kind: BranchKind::Transformer(TransformerParams { ratio }),
        }
    }

    /// Total series impedance (`z_matrix · length`).
    pub fn series_z(&self) -> Mat3 {
        let mut z = self.z_matrix;
        for row in z.iter_mut() {
            for v in row.iter_mut() {
                *v *= self.length;
            }
        }
        z
    }

    /// Total shunt susceptance (`shunt_b · length`).
    pub fn total_shunt_b(&self) -> RealMat3 {
        let mut b = self.shunt_b;
        for row in b.iter_mut() {
            for v in row.iter_mut() {
                *v *= self.length;
            }
        }
        b
    }

    pub fn is_switch(&self) -> bool {
        matches!(self.kind, BranchKind::Switch(_))
    }

    /// Open switches carry nothing and are removed from the electrical graph.
    pub fn is_in_service(&self) -> bool {
        !matches!(self.kind, BranchKind::Switch(SwitchState::Open))
    }

    pub fn ratio(&self) -> f64 {
        match self.kind {
            BranchKind::Transformer(t) => t.ratio,
            _ => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connection {
    Wye,
    Delta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LoadModel {
    ConstantPq,
    ConstantZ,
    ConstantI,
    /// Weighted mix of constant impedance, constant current and constant power.
    Zip { z: f64, i: f64, p: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Load {
    pub id: String,
    pub bus: String,
    pub phases: PhaseSet,
    pub connection: Connection,
    pub model: LoadModel,
    /// Per-element complex power in per-unit at rated voltage. Wye: element k is
    /// phase k to neutral. Delta: element k spans phase k to phase (k+1) mod 3.
    pub s_rated: [Complex64; 3],
    /// Rated phase-to-neutral voltage in per-unit.
    pub v_rated: f64,
}

impl Load {
    /// Indices of the active elements (see [`Load::s_rated`]).
    pub fn elements(&self) -> Vec<usize> {
        element_indices(self.connection, self.phases)
    }

    pub fn total_power(&self) -> Complex64 {
        self.elements().iter().map(|&k| self.s_rated[k]).sum()
    }
}

pub(crate) fn element_indices(conn: Connection, phases: PhaseSet) -> Vec<usize> {
    match conn {
        Connection::Wye => phases.iter().collect(),
        Connection::Delta => (0..3)
            .filter(|&k| phases.contains(k) && phases.contains((k + 1) % 3))
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Capacitor {
    pub id: String,
    pub bus: String,
    pub phases: PhaseSet,
    pub connection: Connection,
    /// Per-element reactive power at rated voltage, per-unit.
    pub q_rated: [f64; 3],
    pub v_rated: f64,
}

impl Capacitor {
    pub fn elements(&self) -> Vec<usize> {
        element_indices(self.connection, self.phases)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel {
    pub name: String,
    /// Three-phase apparent power base in kVA; per-phase base is a third of it.
    pub s_base_kva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub loads: Vec<Load>,
    pub capacitors: Vec<Capacitor>,
    pub source_bus: String,
    pub source_voltage: [Phasor; 3],
}

impl NetworkModel {
    pub fn new(name: impl Into<String>, s_base_kva: f64) -> Self {
        NetworkModel {
            name: name.into(),
            s_base_kva,
            buses: Vec::new(),
            branches: Vec::new(),
            loads: Vec::new(),
            capacitors: Vec::new(),
            source_bus: String::new(),
            source_voltage: balanced_source(1.0, 0.0),
        }
    }

    pub fn bus_index(&self) -> HashMap<&str, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.as_str(), i))
            .collect()
    }

    pub fn bus(&self, id: &str) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn branch(&self, id: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    pub fn branch_mut(&mut self, id: &str) -> Option<&mut Branch> {
        self.branches.iter_mut().find(|b| b.id == id)
    }

    pub fn source_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.id == self.source_bus)
    }

    /// Per-phase power base in kVA.
    pub fn s_base_phase_kva(&self) -> f64 {
        self.s_base_kva / 3.0
    }

    /// Impedance base in ohms for a bus with the given line-to-neutral kV.
    pub fn z_base_ohm(&self, base_kv: f64) -> f64 {
        base_kv * base_kv * 1000.0 / self.s_base_phase_kva()
    }

    /// Two networks share a topology when buses, branches (including switch
    /// states) and capacitors are identical. Loads may differ.
    pub fn same_topology(&self, other: &NetworkModel) -> bool {
        self.buses == other.buses
            && self.branches == other.branches
            && self.capacitors == other.capacitors
            && self.source_bus == other.source_bus
    }
}

/// Balanced positive-sequence source voltages at `angle_deg` on phase a.
pub fn balanced_source(mag: f64, angle_deg: f64) -> [Phasor; 3] {
    [
        polar_deg(mag, angle_deg),
        polar_deg(mag, angle_deg - 120.0),
        polar_deg(mag, angle_deg + 120.0),
    ]
}

/// Expands positive/zero sequence impedances into a full phase matrix for the
/// given phases: `Zs = (2·Z1 + Z0)/3`, `Zm = (Z0 − Z1)/3`.
pub fn sequence_to_phase(z1: Complex64, z0: Complex64, phases: PhaseSet) -> Mat3 {
    let zs = (z1 * 2.0 + z0) / 3.0;
    let zm = (z0 - z1) / 3.0;
    let mut z = ZERO_MAT3;
    for r in phases.iter() {
        for c in phases.iter() {
            z[r][c] = if r == c { zs } else { zm };
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_set_parse_and_display() {
        let p = PhaseSet::parse("ca").unwrap();
        assert!(p.contains(0) && p.contains(2) && !p.contains(1));
        assert_eq!(p.to_string(), "ac");
        assert!(PhaseSet::parse("").is_none());
        assert!(PhaseSet::parse("aa").is_none());
        assert!(PhaseSet::parse("abd").is_none());
        assert!(p.is_subset_of(PhaseSet::ABC));
        assert!(!PhaseSet::ABC.is_subset_of(p));
    }

    #[test]
    fn wrap_deg_range() {
        assert_eq!(wrap_deg(180.0), 180.0);
        assert_eq!(wrap_deg(-180.0), 180.0);
        assert!((wrap_deg(190.0) + 170.0).abs() < 1e-12);
        assert!((wrap_deg(-540.0) - 180.0).abs() < 1e-12);
        assert!((wrap_deg(725.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sequence_expansion_recovers_sequence_impedances() {
        let z1 = Complex64::new(0.3, 0.6);
        let z0 = Complex64::new(0.7, 1.9);
        let z = sequence_to_phase(z1, z0, PhaseSet::ABC);
        // positive sequence = Zs - Zm, zero sequence = Zs + 2 Zm
        assert!((z[0][0] - z[0][1] - z1).norm() < 1e-12);
        assert!((z[0][0] + z[0][1] * 2.0 - z0).norm() < 1e-12);
        assert_eq!(z[1][2], z[2][1]);
    }

    #[test]
    fn delta_elements() {
        assert_eq!(element_indices(Connection::Delta, PhaseSet::ABC), vec![0, 1, 2]);
        assert_eq!(element_indices(Connection::Delta, PhaseSet::parse("ac").unwrap()), vec![2]);
        assert_eq!(element_indices(Connection::Delta, PhaseSet::parse("bc").unwrap()), vec![1]);
        assert!(element_indices(Connection::Delta, PhaseSet::parse("b").unwrap()).is_empty());
    }
}
