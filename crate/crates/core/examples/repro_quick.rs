// A one-tenth-scale run of a case study: same pipeline and thresholds as
// `gridflow repro`, with fewer hours and epochs, so the thresholds are
// reported but not expected to hold.
//
// ```bash
// cargo run --release --example repro_quick -- ev
// ```

use gridflow::repro::{run_case, Case, ReproOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    run(Case::FourNode)
}

fn run(case: Case) -> Result<(), Box<dyn std::error::Error>> {
    let opts = ReproOptions { seed: 42, quick: true };
    let report = run_case(case, &opts, None)?;
    print!("{}", report.table());
    // same seed, same numbers
    let again = run_case(case, &opts, None)?;
    if again.fingerprint() != report.fingerprint() {
        return Err("rerun differs".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    let case = std::env::args().nth(1).map_or(Ok(Case::FourNode), |s| s.parse());
    if let Err(e) = case.map_err(Into::into).and_then(run) {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
