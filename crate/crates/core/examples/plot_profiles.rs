// Daily profile panels of a day of 13-node solutions, plus a ground-truth
// vs prediction overlay, written as SVG with the plotted points as CSV.
//
// ```bash
// cargo run --release --example plot_profiles
// ```

use gridflow::assets;
use gridflow::pf::SolveOptions;
use gridflow::plot::{overlay_panel, panels_csv, profile_panels, render};
use gridflow::scenario::generate_dataset;
use gridflow::surrogate::{train, ArchitectureSpec, Family, Model, TrainConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = assets::config("synth13_pv")?;
    cfg.horizon = 24 * 30;
    let (ds, _) = generate_dataset(&assets::synth13(), &cfg, &SolveOptions::default())?;
    let mut panels = profile_panels(&ds, 24);

    let arch = ArchitectureSpec::standard(Family::Mlp, ds.nx(), ds.ny());
    let mut model = Model::new(arch, &ds, TrainConfig { epochs: 30, batch: 32, lr: 1e-3, ..TrainConfig::desk(Family::Mlp, 5) })?;
    train(&mut model, &ds, |_, _| {})?;
    let raw: Vec<f64> = (0..24).flat_map(|r| ds.x_row(r).to_vec()).collect();
    let pred = model.predict(&raw)?;
    let slots: Vec<_> = ["I:680:a", "I:680:b", "I:680:c"]
        .iter()
        .map(|name| {
            let j = ds.y_names.iter().position(|n| n == name).expect("slot exists");
            let gt = (0..24).map(|r| ds.y_row(r)[j]).collect();
            let nn = (0..24).map(|r| pred[r * ds.ny() + j]).collect();
            (name.to_string(), gt, nn)
        })
        .collect();
    panels.push(overlay_panel("PV bus currents, pu", &slots));

    let dir = std::env::temp_dir().join("gridflow-example");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("profiles.svg"), render(&panels))?;
    std::fs::write(dir.join("profiles.csv"), panels_csv(&panels))?;
    println!("{} panels written to {}", panels.len(), dir.display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
