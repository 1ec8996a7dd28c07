//! Per-component current models: constant power, constant impedance, constant
//! current and ZIP loads, plus fixed shunt capacitors. Wye elements see
//! phase-to-neutral voltages; delta elements see phase-to-phase voltages and
//! their branch currents are mapped onto line currents.

use num_complex::Complex64;

use super::model::{Capacitor, Connection, Load, LoadModel, Phasor};
use super::GridError;

/// Voltages below this magnitude signal a collapsed solution.
pub const MIN_VOLTAGE_PU: f64 = 1e-6;

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn element_voltage(conn: Connection, v: &[Phasor; 3], k: usize) -> Phasor {
    match conn {
        Connection::Wye => v[k],
        Connection::Delta => v[k] - v[(k + 1) % 3],
    }
}

fn rated_element_voltage(conn: Connection, v_rated: f64) -> f64 {
    match conn {
        Connection::Wye => v_rated,
        Connection::Delta => v_rated * SQRT3,
    }
}

/// Adds an element current to the line currents.
fn scatter(conn: Connection, out: &mut [Phasor; 3], k: usize, i: Phasor) {
    match conn {
        Connection::Wye => out[k] += i,
        Connection::Delta => {
            out[k] += i;
            out[(k + 1) % 3] -= i;
        }
    }
}

fn constant_pq(s: Complex64, v: Phasor) -> Phasor {
    (s / v).conj()
}

// I = V / Z with Z = |V_rated|² / S*, written without forming Z so that S = 0 is safe.
fn constant_z(s: Complex64, v: Phasor, v_rated: f64) -> Phasor {
    v * s.conj() / (v_rated * v_rated)
}

// Rated current magnitude at the voltage angle minus the power-factor angle.
fn constant_i(s: Complex64, v: Phasor, v_rated: f64) -> Phasor {
    let mag = s.norm() / v_rated;
    Complex64::from_polar(mag, v.arg() - s.arg())
}

fn element_current(model: LoadModel, s: Complex64, v: Phasor, v_rated: f64) -> Phasor {
    match model {
        LoadModel::ConstantPq => constant_pq(s, v),
        LoadModel::ConstantZ => constant_z(s, v, v_rated),
        LoadModel::ConstantI => constant_i(s, v, v_rated),
        LoadModel::Zip { z, i, p } => {
            // Zero-weight components are skipped so that pure weightings reproduce
            // the single-model currents exactly.
            let parts = [
                (z, LoadModel::ConstantZ),
                (i, LoadModel::ConstantI),
                (p, LoadModel::ConstantPq),
            ];
            let mut acc: Option<Phasor> = None;
            for (w, m) in parts {
                if w != 0.0 {
                    let term = element_current(m, s, v, v_rated) * w;
                    acc = Some(match acc {
                        Some(a) => a + term,
                        None => term,
                    });
                }
            }
            acc.unwrap_or_default()
        }
    }
}

/// Line currents drawn by `load` at bus voltages `v` (per-unit).
pub fn load_current(load: &Load, v: &[Phasor; 3]) -> Result<[Phasor; 3], GridError> {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    let vr = rated_element_voltage(load.connection, load.v_rated);
    for k in load.elements() {
        let ve = element_voltage(load.connection, v, k);
        if !(ve.norm() >= MIN_VOLTAGE_PU) {
            return Err(GridError::ZeroVoltage {
                component: load.id.clone(),
                magnitude: ve.norm(),
            });
        }
        let i = element_current(load.model, load.s_rated[k], ve, vr);
        scatter(load.connection, &mut out, k, i);
    }
    Ok(out)
}

/// Line currents of a fixed capacitor bank, modelled as a constant impedance
/// with `S = −j·Q` at rated voltage.
pub fn capacitor_current(cap: &Capacitor, v: &[Phasor; 3]) -> [Phasor; 3] {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    let vr = rated_element_voltage(cap.connection, cap.v_rated);
    for k in cap.elements() {
        let ve = element_voltage(cap.connection, v, k);
        let s = Complex64::new(0.0, -cap.q_rated[k]);
        scatter(cap.connection, &mut out, k, constant_z(s, ve, vr));
    }
    out
}

/// Complex power drawn per phase, `V · conj(I)`.
pub fn phase_power(v: &[Phasor; 3], i: &[Phasor; 3]) -> [Complex64; 3] {
    [v[0] * i[0].conj(), v[1] * i[1].conj(), v[2] * i[2].conj()]
}
