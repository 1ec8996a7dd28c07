// Solve the bundled 4-node feeder with both solvers and compare them.
//
// ```bash
// cargo run --release --example solve_feeder
// ```

use gridflow::assets;
use gridflow::pf::{energy_balance, power_mismatch, solution_csv, CurrentInjectionSolver, FbsSolver, SolveOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let net = assets::ieee4();
    let opts = SolveOptions::default();

    let fbs = FbsSolver::new(&net)?.solve(&net, &opts)?;
    let ci = CurrentInjectionSolver::new(&net)?.solve(&net, &opts)?;
    println!("fbs: {} iterations, ci: {} iterations", fbs.iterations, ci.iterations);
    println!("max |dV| {:.2e} pu, max |dI| {:.2e} pu", fbs.max_voltage_diff(&ci), fbs.max_current_diff(&ci));

    let mismatch = power_mismatch(&net, &fbs)?.iter().flatten().map(|s| s.norm()).fold(0.0, f64::max);
    println!("max nodal power mismatch {mismatch:.2e} pu");
    println!("source - loads - losses = {:.2e} pu", energy_balance(&net, &fbs).norm());
    println!("lowest voltage {:.4} pu", fbs.min_voltage_magnitude(&net));
    print!("{}", solution_csv(&net, &fbs));

    if fbs.max_voltage_diff(&ci) > 1e-6 {
        return Err("solvers disagree".into());
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
