// Train the three surrogate families on a month of 4-node data and compare
// them with the mean predictor. Epochs are cut short to keep this quick;
// `gridflow repro --case 4node` runs the full desk settings.
//
// ```bash
// cargo run --release --example train_surrogates
// ```

use gridflow::assets;
use gridflow::io::{read_model, write_model};
use gridflow::pf::SolveOptions;
use gridflow::scenario::{generate_dataset, ScenarioConfig};
use gridflow::surrogate::{evaluate, mean_baseline, train, ArchitectureSpec, Family, Model, TrainConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig { horizon: 720, noise: 0.05, shape: gridflow::scenario::synthetic_loadshape(720), ..Default::default() };
    let (ds, _) = generate_dataset(&assets::ieee4(), &cfg, &SolveOptions::default())?;
    let base = mean_baseline(&ds, &ds.test)?;
    println!("mean predictor: MSE {:.4}% MAE {:.4}%", base.mse_pct, base.mae_pct);

    for family in Family::ALL {
        let arch = ArchitectureSpec::standard(family, ds.nx(), ds.ny());
        let tc = match family {
            Family::Rbf => TrainConfig { epochs: 5, ..TrainConfig::desk(family, 1) },
            _ => TrainConfig { epochs: 40, batch: 32, lr: 1e-3, ..TrainConfig::desk(family, 1) },
        };
        let mut model = Model::new(arch, &ds, tc)?;
        let losses = train(&mut model, &ds, |_, _| {})?;
        let report = evaluate(&mut model, &ds, &ds.test)?;
        println!(
            "{family}: {} parameters, final loss {:.2e}, test MSE {:.4}% MAE {:.4}%",
            model.network.param_count(),
            losses.last().unwrap(),
            report.mse_pct,
            report.mae_pct
        );
        if report.mse_pct >= base.mse_pct {
            return Err(format!("{family} did not beat the mean predictor").into());
        }
        if family == Family::Mlp {
            print!("{}", report.table());
            let path = std::env::temp_dir().join("gridflow-example-mlp.model.json");
            write_model(&model, &path)?;
            let mut back = read_model(&path)?;
            assert_eq!(evaluate(&mut back, &ds, &ds.test)?, report);
        }
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
