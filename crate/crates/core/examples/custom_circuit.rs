// Describe a small feeder in the circuit format, then close a tie switch to
// make it meshed. The sweep refuses loops; current injection does not care.
//
// ```bash
// cargo run --release --example custom_circuit
// ```

use gridflow::io::{parse_circuit, serialize_circuit};
use gridflow::pf::{CurrentInjectionSolver, FbsSolver, PfError, SolveOptions};
use gridflow::scenario::apply_topology;

const FEEDER: &str = "
circuit name=loop3 sbase_kva=1000
source bus=s pu=1.0 angle=0
bus id=s phases=abc kv=2.4
bus id=a phases=abc kv=2.4
bus id=b phases=abc kv=2.4
line id=Lsa bus1=s bus2=a phases=abc length=1 units=mi rmatrix=0.30,0.10,0.30,0.10,0.10,0.30 xmatrix=0.60,0.20,0.60,0.20,0.20,0.60
line id=Lab bus1=a bus2=b phases=abc length=1 units=mi rmatrix=0.30,0.10,0.30,0.10,0.10,0.30 xmatrix=0.60,0.20,0.60,0.20,0.20,0.60
switch id=TIE bus1=s bus2=b phases=abc state=open
load id=LA bus=a phases=abc conn=wye model=pq kw=300,250,200 kvar=100,90,80
load id=LB bus=b phases=ab conn=delta model=zip zip=0.2,0.3,0.5 kw=150 kvar=60
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_circuit(FEEDER)?;
    let opts = SolveOptions::default();
    let radial = FbsSolver::new(&net)?.solve(&net, &opts)?;
    println!("radial: converged {} after {} sweeps", radial.converged, radial.iterations);

    let meshed = apply_topology(&net, &[], &["TIE".to_string()])?;
    match FbsSolver::new(&meshed) {
        Err(PfError::NotRadial { cycle }) => println!("sweep rejects the loop through {}", cycle.join(", ")),
        other => return Err(format!("expected a loop error, got {other:?}").into()),
    }
    let looped = CurrentInjectionSolver::new(&meshed)?.solve(&meshed, &opts)?;
    let b = meshed.bus_index()["b"];
    println!(
        "|V_b| phase a: {:.4} pu radial, {:.4} pu with the tie closed",
        radial.voltages[b][0].norm(),
        looped.voltages[b][0].norm()
    );

    // the text form round-trips
    let again = parse_circuit(&serialize_circuit(&meshed))?;
    assert_eq!(again.branches.len(), meshed.branches.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
