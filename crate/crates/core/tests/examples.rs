// Every example must keep running; each one exits with an error if its own
// sanity check fails.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }
    };
}

example!(solve_feeder);
example!(custom_circuit);
example!(generate_dataset);
example!(train_surrogates);
example!(rbf_kmeans);
example!(der_scenarios);
example!(plot_profiles);
example!(repro_quick);

#[test]
fn solve_feeder_runs() {
    solve_feeder::run_example().expect("solve_feeder");
}

#[test]
fn custom_circuit_runs() {
    custom_circuit::run_example().expect("custom_circuit");
}

#[test]
fn generate_dataset_runs() {
    generate_dataset::run_example().expect("generate_dataset");
}

#[test]
fn train_surrogates_runs() {
    train_surrogates::run_example().expect("train_surrogates");
}

#[test]
fn rbf_kmeans_runs() {
    rbf_kmeans::run_example().expect("rbf_kmeans");
}

#[test]
fn der_scenarios_runs() {
    der_scenarios::run_example().expect("der_scenarios");
}

#[test]
fn plot_profiles_runs() {
    plot_profiles::run_example().expect("plot_profiles");
}

#[test]
fn repro_quick_runs() {
    repro_quick::run_example().expect("repro_quick");
}
