//! `.ckt` circuit files.
//!
//! One declaration per line, `component key=value ...`, `#` starts a comment.
//!
//! ```text
//! circuit     name=<s> sbase_kva=<f>
//! bus         id=<s> phases=<abc> kv=<line-to-neutral kV>
//! source      bus=<id> pu=<f> angle=<deg>
//! line        id bus1 bus2 phases length units=km|mi|ft|m [length_units=..]
//!             r1 x1 r0 x0 | rmatrix xmatrix [bmatrix]  zunit=ohm|pu
//! transformer id bus1 bus2 phases kva kv1 kv2 r_pct x_pct [tap] [conn=wye]
//!             (or r_pu x_pu ratio, already on the system base)
//! switch      id bus1 bus2 phases state=open|closed
//! load        id bus phases conn=wye|delta model=pq|z|i|zip [zip=z,i,p]
//!             kw kvar [vpu] [line=<line id>]
//! capacitor   id bus phases conn kvar [vpu]
//! ```
//!
//! Matrices list the lower triangle over the present phases row by row
//! (`aa, ba, bb, ca, cb, cc` for three phases). Ohmic impedances are per
//! `units` of length and susceptances are microsiemens per `units`. Lists
//! such as `kw=1,2,3` give one value per load element; a single value is
//! broadcast. Loads carrying `line=` are spread uniformly along that line and
//! lumped on load.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use num_complex::Complex64;

use super::IoError;
use crate::grid::{
    balanced_source, element_indices, lump_distributed_load, sequence_to_phase, validate_network, Branch, BranchKind,
    Bus, Capacitor, Connection, Load, LoadModel, Mat3, NetworkModel, PhaseSet, RealMat3, SwitchState, ZERO_MAT3,
};

struct Decl {
    line: usize,
    kind: String,
    props: HashMap<String, String>,
}

impl Decl {
    fn id(&self) -> String {
        self.props
            .get("id")
            .or_else(|| self.props.get("name"))
            .or_else(|| self.props.get("bus"))
            .cloned()
            .unwrap_or_else(|| self.kind.clone())
    }

    fn semantic(&self, reason: impl Into<String>) -> IoError {
        IoError::Semantic {
            component: format!("{} {}", self.kind, self.id()),
            reason: reason.into(),
        }
    }

    fn syntax(&self, reason: impl Into<String>) -> IoError {
        IoError::Syntax {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn str(&self, key: &str) -> Result<&str, IoError> {
        self.props
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| self.semantic(format!("missing `{key}`")))
    }

    fn opt_str(&self, key: &str) -> Option<&str> {
        self.props.get(key).map(String::as_str)
    }

    fn num(&self, key: &str) -> Result<f64, IoError> {
        let s = self.str(key)?;
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.syntax(format!("`{key}`: not a number: {s}")))
    }

    fn opt_num(&self, key: &str, default: f64) -> Result<f64, IoError> {
        if self.props.contains_key(key) {
            self.num(key)
        } else {
            Ok(default)
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, IoError> {
        let s = self.str(key)?;
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.syntax(format!("`{key}`: not a number list: {s}")))
            })
            .collect()
    }

    fn phases(&self) -> Result<PhaseSet, IoError> {
        let s = self.str("phases")?;
        PhaseSet::parse(s).ok_or_else(|| self.syntax(format!("bad phase set `{s}`")))
    }

    /// One value per element, or a single value broadcast to all of them.
    fn per_element(&self, key: &str, elements: &[usize]) -> Result<[f64; 3], IoError> {
        let vals = self.list(key)?;
        let mut out = [0.0; 3];
        match vals.len() {
            1 => elements.iter().for_each(|&k| out[k] = vals[0]),
            n if n == elements.len() => elements.iter().zip(&vals).for_each(|(&k, &v)| out[k] = v),
            n => {
                return Err(self.semantic(format!(
                    "`{key}` has {n} values for {} elements",
                    elements.len()
                )))
            }
        }
        Ok(out)
    }
}

const KNOWN: &[(&str, &[&str])] = &[
    ("circuit", &["name", "sbase_kva"]),
    ("bus", &["id", "phases", "kv"]),
    ("source", &["bus", "pu", "angle"]),
    (
        "line",
        &[
            "id", "bus1", "bus2", "phases", "length", "units", "length_units", "zunit", "r1", "x1", "r0", "x0", "rmatrix",
            "xmatrix", "bmatrix",
        ],
    ),
    (
        "transformer",
        &["id", "bus1", "bus2", "phases", "kva", "kv1", "kv2", "r_pct", "x_pct", "tap", "conn", "r_pu", "x_pu", "ratio"],
    ),
    ("switch", &["id", "bus1", "bus2", "phases", "state"]),
    ("load", &["id", "bus", "phases", "conn", "model", "zip", "kw", "kvar", "vpu", "line"]),
    ("capacitor", &["id", "bus", "phases", "conn", "kvar", "vpu"]),
];

fn tokenize(text: &str) -> Result<Vec<Decl>, IoError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut parts = body.split_whitespace();
        let kind = parts.next().unwrap().to_ascii_lowercase();
        let Some((_, allowed)) = KNOWN.iter().find(|(k, _)| *k == kind) else {
            return Err(IoError::Syntax {
                line,
                reason: format!("unknown component `{kind}`"),
            });
        };
        let mut props = HashMap::new();
        for tok in parts {
            let Some((k, v)) = tok.split_once('=') else {
                return Err(IoError::Syntax {
                    line,
                    reason: format!("expected key=value, got `{tok}`"),
                });
            };
            let k = k.to_ascii_lowercase();
            if !allowed.contains(&k.as_str()) {
                return Err(IoError::Syntax {
                    line,
                    reason: format!("unknown property `{k}` for {kind}"),
                });
            }
            if v.is_empty() {
                return Err(IoError::Syntax {
                    line,
                    reason: format!("empty value for `{k}`"),
                });
            }
            if props.insert(k.clone(), v.to_string()).is_some() {
                return Err(IoError::Syntax {
                    line,
                    reason: format!("property `{k}` given twice"),
                });
            }
        }
        out.push(Decl { line, kind, props });
    }
    Ok(out)
}

fn metres(unit: &str) -> Option<f64> {
    match unit.to_ascii_lowercase().as_str() {
        "km" => Some(1000.0),
        "mi" => Some(1609.344),
        "ft" => Some(0.3048),
        "m" => Some(1.0),
        _ => None,
    }
}

/// Lower-triangle list over the present phases into a symmetric matrix.
fn lower_triangle(d: &Decl, key: &str, phases: PhaseSet) -> Result<RealMat3, IoError> {
    let vals = d.list(key)?;
    let ps: Vec<usize> = phases.iter().collect();
    let need = ps.len() * (ps.len() + 1) / 2;
    if vals.len() != need {
        return Err(d.semantic(format!("`{key}` needs {need} lower-triangle entries, got {}", vals.len())));
    }
    let mut m = [[0.0; 3]; 3];
    let mut it = vals.into_iter();
    for r in 0..ps.len() {
        for c in 0..=r {
            let v = it.next().unwrap();
            m[ps[r]][ps[c]] = v;
            m[ps[c]][ps[r]] = v;
        }
    }
    Ok(m)
}

fn connection(d: &Decl) -> Result<Connection, IoError> {
    match d.opt_str("conn").unwrap_or("wye").to_ascii_lowercase().as_str() {
        "wye" | "y" => Ok(Connection::Wye),
        "delta" | "d" => Ok(Connection::Delta),
        other => Err(d.syntax(format!("unknown connection `{other}`"))),
    }
}

/// Parses a circuit and returns a network that passes validation.
pub fn parse_circuit(text: &str) -> Result<NetworkModel, IoError> {
    let decls = tokenize(text)?;

    let mut seen: HashSet<String> = HashSet::new();
    for d in decls.iter().filter(|d| !matches!(d.kind.as_str(), "circuit" | "source")) {
        let id = d.str("id")?.to_string();
        if !seen.insert(id.clone()) {
            return Err(d.semantic(format!("id `{id}` already declared")));
        }
    }

    let circuits: Vec<&Decl> = decls.iter().filter(|d| d.kind == "circuit").collect();
    let [circ] = circuits.as_slice() else {
        return Err(IoError::Semantic {
            component: "circuit".into(),
            reason: format!("expected exactly one circuit declaration, found {}", circuits.len()),
        });
    };
    let mut net = NetworkModel::new(circ.opt_str("name").unwrap_or("circuit"), circ.num("sbase_kva")?);
    if !(net.s_base_kva > 0.0) {
        return Err(circ.semantic("sbase_kva must be positive"));
    }
    let s_phase = net.s_base_phase_kva();

    let sources: Vec<&Decl> = decls.iter().filter(|d| d.kind == "source").collect();
    let [src] = sources.as_slice() else {
        return Err(IoError::Semantic {
            component: "source".into(),
            reason: format!("expected exactly one source, found {}", sources.len()),
        });
    };
    net.source_bus = src.str("bus")?.to_string();
    net.source_voltage = balanced_source(src.opt_num("pu", 1.0)?, src.opt_num("angle", 0.0)?);

    for d in decls.iter().filter(|d| d.kind == "bus") {
        net.buses.push(Bus {
            id: d.str("id")?.to_string(),
            phases: d.phases()?,
            base_kv: d.num("kv")?,
        });
    }
    let base_kv: HashMap<String, f64> = net.buses.iter().map(|b| (b.id.clone(), b.base_kv)).collect();
    let kv_of = |d: &Decl, key: &str| -> Result<f64, IoError> {
        let id = d.str(key)?;
        base_kv
            .get(id)
            .copied()
            .ok_or_else(|| d.semantic(format!("unknown bus '{id}'")))
    };

    let mut distributed = Vec::new();
    for d in &decls {
        match d.kind.as_str() {
            "line" => net.branches.push(parse_line(d, &net, kv_of(d, "bus1")?, kv_of(d, "bus2")?)?),
            "transformer" => net.branches.push(parse_transformer(d, &net, kv_of(d, "bus1")?, kv_of(d, "bus2")?)?),
            "switch" => {
                kv_of(d, "bus1")?;
                kv_of(d, "bus2")?;
                let state = match d.str("state")?.to_ascii_lowercase().as_str() {
                    "open" => SwitchState::Open,
                    "closed" | "close" => SwitchState::Closed,
                    other => return Err(d.syntax(format!("unknown switch state `{other}`"))),
                };
                net.branches
                    .push(Branch::switch(d.str("id")?, d.str("bus1")?, d.str("bus2")?, d.phases()?, state));
            }
            "load" => {
                let conn = connection(d)?;
                let phases = d.phases()?;
                let elements = element_indices(conn, phases);
                let kw = d.per_element("kw", &elements)?;
                let kvar = d.per_element("kvar", &elements)?;
                let model = match d.opt_str("model").unwrap_or("pq").to_ascii_lowercase().as_str() {
                    "pq" => LoadModel::ConstantPq,
                    "z" => LoadModel::ConstantZ,
                    "i" => LoadModel::ConstantI,
                    "zip" => {
                        let w = d.list("zip")?;
                        if w.len() != 3 {
                            return Err(d.semantic("`zip` needs three weights z,i,p"));
                        }
                        LoadModel::Zip { z: w[0], i: w[1], p: w[2] }
                    }
                    other => return Err(d.syntax(format!("unknown load model `{other}`"))),
                };
                let line = d.opt_str("line").map(str::to_string);
                let bus = match (&line, d.opt_str("bus")) {
                    (_, Some(b)) => b.to_string(),
                    (Some(l), None) => net
                        .branch(l)
                        .map(|b| b.to_bus.clone())
                        .ok_or_else(|| d.semantic(format!("unknown line '{l}'")))?,
                    (None, None) => return Err(d.semantic("missing `bus`")),
                };
                let load = Load {
                    id: d.str("id")?.to_string(),
                    bus,
                    phases,
                    connection: conn,
                    model,
                    s_rated: std::array::from_fn(|k| Complex64::new(kw[k], kvar[k]) / s_phase),
                    v_rated: d.opt_num("vpu", 1.0)?,
                };
                if let Some(l) = line {
                    distributed.push((d, l, net.loads.len()));
                }
                net.loads.push(load);
            }
            "capacitor" => {
                let conn = connection(d)?;
                let phases = d.phases()?;
                let kvar = d.per_element("kvar", &element_indices(conn, phases))?;
                net.capacitors.push(Capacitor {
                    id: d.str("id")?.to_string(),
                    bus: d.str("bus")?.to_string(),
                    phases,
                    connection: conn,
                    q_rated: kvar.map(|q| q / s_phase),
                    v_rated: d.opt_num("vpu", 1.0)?,
                });
            }
            _ => {}
        }
    }

    // lump distributed loads, last first so indices stay valid
    for (d, line, li) in distributed.into_iter().rev() {
        let Some(bi) = net.branches.iter().position(|b| b.id == line) else {
            return Err(d.semantic(format!("unknown line '{line}'")));
        };
        let br = &net.branches[bi];
        if br.kind != BranchKind::Line {
            return Err(d.semantic(format!("'{line}' is not a line")));
        }
        if net.loads[li].bus != br.to_bus {
            return Err(d.semantic(format!("distributed load must sit at the receiving bus of '{line}'")));
        }
        let frag = lump_distributed_load(br, &net.loads[li], base_kv[&br.to_bus]);
        net.branches.splice(bi..=bi, [frag.near_segment, frag.far_segment]);
        net.buses.push(frag.bus);
        net.loads.splice(li..=li, [frag.near_load, frag.far_load]);
    }

    let violations = validate_network(&net);
    if let Some(v) = violations.first() {
        return Err(IoError::Semantic {
            component: v.component.clone(),
            reason: v.message.clone(),
        });
    }
    Ok(net)
}

fn parse_line(d: &Decl, net: &NetworkModel, kv1: f64, kv2: f64) -> Result<Branch, IoError> {
    let phases = d.phases()?;
    if kv1 != kv2 {
        return Err(d.semantic("line endpoints have different base kV"));
    }
    let units = d.opt_str("units").unwrap_or("km");
    let per = metres(units).ok_or_else(|| d.syntax(format!("unknown unit `{units}`")))?;
    let len_units = d.opt_str("length_units").unwrap_or(units);
    let len_m = metres(len_units).ok_or_else(|| d.syntax(format!("unknown unit `{len_units}`")))?;
    let length = if len_units == units { d.num("length")? } else { d.num("length")? * len_m / per };

    let (zscale, bscale) = match d.opt_str("zunit").unwrap_or("ohm") {
        "ohm" => {
            let zb = net.z_base_ohm(kv1);
            (1.0 / zb, zb * 1e-6)
        }
        "pu" => (1.0, 1.0),
        other => return Err(d.syntax(format!("unknown zunit `{other}`"))),
    };

    let mut z: Mat3 = ZERO_MAT3;
    let mut b: RealMat3 = [[0.0; 3]; 3];
    if d.props.contains_key("rmatrix") || d.props.contains_key("xmatrix") {
        let r = lower_triangle(d, "rmatrix", phases)?;
        let x = lower_triangle(d, "xmatrix", phases)?;
        for i in 0..3 {
            for j in 0..3 {
                z[i][j] = Complex64::new(r[i][j], x[i][j]) * zscale;
            }
        }
        if d.props.contains_key("bmatrix") {
            let bm = lower_triangle(d, "bmatrix", phases)?;
            for i in 0..3 {
                for j in 0..3 {
                    b[i][j] = bm[i][j] * bscale;
                }
            }
        }
    } else {
        let z1 = Complex64::new(d.num("r1")?, d.num("x1")?);
        let z0 = Complex64::new(d.num("r0")?, d.num("x0")?);
        z = sequence_to_phase(z1 * zscale, z0 * zscale, phases);
    }
    let mut br = Branch::line(d.str("id")?, d.str("bus1")?, d.str("bus2")?, phases, z, length);
    br.shunt_b = b;
    Ok(br)
}

fn parse_transformer(d: &Decl, net: &NetworkModel, base1: f64, base2: f64) -> Result<Branch, IoError> {
    let phases = d.phases()?;
    if let Some(c) = d.opt_str("conn") {
        if !matches!(c.to_ascii_lowercase().as_str(), "wye" | "y" | "gy" | "wye-wye") {
            return Err(d.semantic(format!("only grounded-wye/grounded-wye transformers are supported, got `{c}`")));
        }
    }
    let ps: Vec<usize> = phases.iter().collect();
    let per_phase = |key: &str| -> Result<[f64; 3], IoError> { d.per_element(key, &ps) };
    let (z, ratio) = if d.props.contains_key("r_pu") {
        let (r, x) = (per_phase("r_pu")?, per_phase("x_pu")?);
        (std::array::from_fn(|p| Complex64::new(r[p], x[p])), d.opt_num("ratio", 1.0)?)
    } else {
        let kva = d.num("kva")?;
        let (kv1, kv2) = (d.num("kv1")?, d.num("kv2")?);
        if !(kva > 0.0 && kv1 > 0.0 && kv2 > 0.0) {
            return Err(d.semantic("kva, kv1 and kv2 must be positive"));
        }
        let (r, x) = (per_phase("r_pct")?, per_phase("x_pct")?);
        let scale = net.s_base_kva / kva * (kv2 / base2).powi(2) / 100.0;
        let ratio = d.opt_num("tap", 1.0)? * (kv1 / kv2) / (base1 / base2);
        (std::array::from_fn(|p| Complex64::new(r[p], x[p]) * scale), ratio)
    };
    Ok(Branch::transformer(d.str("id")?, d.str("bus1")?, d.str("bus2")?, phases, z, ratio))
}

fn list(vals: impl IntoIterator<Item = f64>) -> String {
    vals.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn lower(m: impl Fn(usize, usize) -> f64, phases: PhaseSet) -> String {
    let ps: Vec<usize> = phases.iter().collect();
    list((0..ps.len()).flat_map(|r| (0..=r).map(move |c| (r, c))).map(|(r, c)| m(ps[r], ps[c])))
}

/// Writes a circuit that parses back to the same network. Impedances are
/// written in per-unit, powers in kW/kvar, every float at full precision.
pub fn serialize_circuit(net: &NetworkModel) -> String {
    let s_phase = net.s_base_phase_kva();
    let mut out = String::new();
    let _ = writeln!(out, "circuit name={} sbase_kva={}", net.name, net.s_base_kva);
    let (mag, ang) = net.source_voltage[0].to_polar();
    let _ = writeln!(out, "source bus={} pu={} angle={}", net.source_bus, mag, ang.to_degrees());
    for b in &net.buses {
        let _ = writeln!(out, "bus id={} phases={} kv={}", b.id, b.phases, b.base_kv);
    }
    for br in &net.branches {
        let head = format!("id={} bus1={} bus2={} phases={}", br.id, br.from_bus, br.to_bus, br.phases);
        let _ = match br.kind {
            BranchKind::Line => writeln!(
                out,
                "line {head} length={} units=km zunit=pu rmatrix={} xmatrix={} bmatrix={}",
                br.length,
                lower(|r, c| br.z_matrix[r][c].re, br.phases),
                lower(|r, c| br.z_matrix[r][c].im, br.phases),
                lower(|r, c| br.shunt_b[r][c], br.phases),
            ),
            BranchKind::Transformer(t) => {
                let z = br.series_z();
                writeln!(
                    out,
                    "transformer {head} r_pu={} x_pu={} ratio={}",
                    list(br.phases.iter().map(|p| z[p][p].re)),
                    list(br.phases.iter().map(|p| z[p][p].im)),
                    t.ratio
                )
            }
            BranchKind::Switch(s) => writeln!(
                out,
                "switch {head} state={}",
                if s == SwitchState::Open { "open" } else { "closed" }
            ),
        };
    }
    let conn = |c: Connection| if c == Connection::Wye { "wye" } else { "delta" };
    for l in &net.loads {
        let model = match l.model {
            LoadModel::ConstantPq => "pq".to_string(),
            LoadModel::ConstantZ => "z".to_string(),
            LoadModel::ConstantI => "i".to_string(),
            LoadModel::Zip { z, i, p } => format!("zip zip={z},{i},{p}"),
        };
        let el = l.elements();
        let _ = writeln!(
            out,
            "load id={} bus={} phases={} conn={} model={} kw={} kvar={} vpu={}",
            l.id,
            l.bus,
            l.phases,
            conn(l.connection),
            model,
            list(el.iter().map(|&k| l.s_rated[k].re * s_phase)),
            list(el.iter().map(|&k| l.s_rated[k].im * s_phase)),
            l.v_rated
        );
    }
    for c in &net.capacitors {
        let _ = writeln!(
            out,
            "capacitor id={} bus={} phases={} conn={} kvar={} vpu={}",
            c.id,
            c.bus,
            c.phases,
            conn(c.connection),
            list(c.elements().iter().map(|&k| c.q_rated[k] * s_phase)),
            c.v_rated
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pf::fbs_solve;

    const MINIMAL: &str = "circuit name=m sbase_kva=3000
source bus=1 pu=1.0 angle=0
bus id=1 phases=abc kv=2.4
bus id=2 phases=abc kv=2.4
line id=L bus1=1 bus2=2 phases=abc length=1 units=km r1=0.1 x1=0.3 r0=0.3 x0=0.9
load id=D bus=2 phases=abc kw=300 kvar=100
";

    #[test]
    fn minimal_circuit() {
        let net = parse_circuit(MINIMAL).unwrap();
        assert_eq!(net.buses.len(), 2);
        assert_eq!(net.branches.len(), 1);
        let zb = 2.4 * 2.4 * 1000.0 / 1000.0;
        let z = net.branches[0].z_matrix;
        assert!((z[0][0] - Complex64::new(0.5 / 3.0, 1.5 / 3.0) / zb).norm() < 1e-15);
        assert!((net.loads[0].s_rated[1] - Complex64::new(0.3, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn unknown_bus_names_it() {
        let text = MINIMAL.replace("bus2=2", "bus2=missing");
        match parse_circuit(&text) {
            Err(IoError::Semantic { component, reason }) => {
                assert!(component.contains('L'));
                assert!(reason.contains("missing"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = MINIMAL.replace("kv=2.4\nbus id=2", "kv=2.4\nbus id=2 oops");
        assert!(matches!(parse_circuit(&text), Err(IoError::Syntax { line: 4, .. })));
        let text = MINIMAL.replace("kw=300", "kw=abc");
        assert!(matches!(parse_circuit(&text), Err(IoError::Syntax { line: 6, .. })));
        let text = format!("{MINIMAL}widget id=w\n");
        assert!(matches!(parse_circuit(&text), Err(IoError::Syntax { line: 7, .. })));
    }

    #[test]
    fn redeclared_id_rejected() {
        let text = format!("{MINIMAL}bus id=2 phases=abc kv=2.4\n");
        assert!(matches!(parse_circuit(&text), Err(IoError::Semantic { .. })));
    }

    #[test]
    fn delta_transformer_rejected() {
        let text = MINIMAL.replace(
            "line id=L bus1=1 bus2=2 phases=abc length=1 units=km r1=0.1 x1=0.3 r0=0.3 x0=0.9",
            "transformer id=T bus1=1 bus2=2 phases=abc kva=500 kv1=2.4 kv2=2.4 r_pct=1 x_pct=5 conn=delta",
        );
        assert!(matches!(parse_circuit(&text), Err(IoError::Semantic { .. })));
        let ok = text.replace(" conn=delta", "");
        let net = parse_circuit(&ok).unwrap();
        // 1+j5 % on 500 kVA → system base 3000 kVA
        let z = net.branches[0].series_z()[0][0];
        assert!((z - Complex64::new(0.06, 0.3)).norm() < 1e-14);
        assert_eq!(net.branches[0].ratio(), 1.0);
    }

    #[test]
    fn distributed_load_is_lumped() {
        let text = MINIMAL.replace("load id=D bus=2", "load id=D line=L");
        let net = parse_circuit(&text).unwrap();
        assert_eq!(net.buses.len(), 3);
        assert_eq!(net.branches.len(), 2);
        let ids: Vec<_> = net.loads.iter().map(|l| l.id.as_str()).collect();
        assert_eq!(ids, ["D_near", "D_far"]);
        assert!((net.branches[0].length - 0.25).abs() < 1e-15);
    }

    #[test]
    fn matrix_entry_and_units() {
        let text = MINIMAL.replace(
            "length=1 units=km r1=0.1 x1=0.3 r0=0.3 x0=0.9",
            "length=5280 units=mi length_units=ft rmatrix=1,0.1,1,0.1,0.1,1 xmatrix=2,0.5,2,0.5,0.5,2 bmatrix=6,-2,6,-2,-2,6",
        );
        let net = parse_circuit(&text).unwrap();
        let br = &net.branches[0];
        assert!((br.length - 1.0).abs() < 1e-12);
        let zb = 2.4 * 2.4;
        assert!((br.z_matrix[2][1] - Complex64::new(0.1, 0.5) / zb).norm() < 1e-15);
        assert!((br.shunt_b[0][0] - 6e-6 * zb).abs() < 1e-18);
    }

    #[test]
    fn serialize_round_trip_solves_identically() {
        let text = MINIMAL.replace("load id=D bus=2 phases=abc kw=300", "load id=D line=L phases=abc model=zip zip=0.2,0.3,0.5 kw=300")
            + "capacitor id=C bus=2 phases=abc kvar=50\n";
        let net = parse_circuit(&text).unwrap();
        let back = parse_circuit(&serialize_circuit(&net)).unwrap();
        let a = fbs_solve(&net, 1e-12, 100).unwrap();
        let b = fbs_solve(&back, 1e-12, 100).unwrap();
        assert!(a.max_voltage_diff(&b) < 1e-12);
        assert!(a.max_current_diff(&b) < 1e-12);
    }
}
