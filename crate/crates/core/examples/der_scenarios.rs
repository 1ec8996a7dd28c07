// PV, EV and topology variants of the 13-node feeder, and what each does to
// the solved voltages.
//
// ```bash
// cargo run --release --example der_scenarios
// ```

use gridflow::assets;
use gridflow::pf::SolveOptions;
use gridflow::scenario::{generate_dataset, mix_topology_datasets, Dataset};

fn voltage_spread(ds: &Dataset) -> (f64, f64) {
    let cols: Vec<usize> = (0..ds.ny()).filter(|&j| ds.y_names[j].starts_with("V:")).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in 0..ds.len() {
        for &j in &cols {
            lo = lo.min(ds.y_row(r)[j]);
            hi = hi.max(ds.y_row(r)[j]);
        }
    }
    (lo, hi)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let net = assets::synth13();
    let mut sets = Vec::new();
    for name in ["synth13", "synth13_pv", "synth13_ev", "synth13_topology"] {
        let mut cfg = assets::config(name)?;
        cfg.horizon = 24 * 14;
        let (ds, report) = generate_dataset(&net, &cfg, &SolveOptions::default())?;
        let (lo, hi) = voltage_spread(&ds);
        println!("{name:<17} {} hours, {} dropped, |V| in [{lo:.4}, {hi:.4}] pu, {} features", report.hours, report.dropped.len(), ds.nx());
        sets.push(ds);
    }
    // PV and EV units add their own feature slots; topology keeps the layout
    assert!(sets[1].nx() > sets[0].nx() && sets[2].nx() > sets[0].nx());
    let topo = sets.pop().unwrap();
    let mixed = mix_topology_datasets(&[sets.swap_remove(0), topo])?;
    println!("mixed topology dataset: {} rows, {} train / {} test", mixed.len(), mixed.train.len(), mixed.test.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
