// Turn a scenario config into a normalized, split dataset and save it.
//
// ```bash
// cargo run --release --example generate_dataset
// ```

use gridflow::assets;
use gridflow::io::{read_dataset, write_dataset};
use gridflow::pf::SolveOptions;
use gridflow::scenario::{generate_dataset, report_csv, ScenarioConfig};

const CONFIG: &str = "
horizon = 168          # one week
seed = 7
shape = synthetic
noise = 0.05
load_model = zip:0.3,0.3,0.4
train_fraction = 0.8
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig::parse(CONFIG, None)?;
    let (ds, report) = generate_dataset(&assets::ieee4(), &cfg, &SolveOptions::default())?;
    println!("{} samples, {} features, {} targets, {} dropped", ds.len(), ds.nx(), ds.ny(), report.dropped.len());
    println!("first features: {:?}", &ds.x_names[..6]);
    println!("first targets:  {:?}", &ds.y_names[..6]);

    let dir = std::env::temp_dir().join("gridflow-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("week.ds");
    write_dataset(&ds, &path)?;
    let back = read_dataset(&path)?;
    assert_eq!(back.x, ds.x);
    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());

    // slot statistics, as `gridflow gen` writes next to the dataset
    for line in report_csv(&ds, &report).lines().take(6) {
        println!("{line}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
