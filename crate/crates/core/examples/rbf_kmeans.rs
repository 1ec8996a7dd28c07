// K-means prototypes and the RBF layer built on them, on two-dimensional
// blobs where the answer is known.
//
// ```bash
// cargo run --release --example rbf_kmeans
// ```

use gridflow::nn::{kmeans, rbf_activations};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let means = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (4.0, 4.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut data = Vec::new();
    for _ in 0..200 {
        for (mx, my) in means {
            data.push(mx + rng.gen_range(-0.5..0.5));
            data.push(my + rng.gen_range(-0.5..0.5));
        }
    }
    let c = kmeans(&data, 2, 4, 1e-6, 11)?;
    println!("converged {} after {} iterations (last shift {:.1e})", c.converged, c.iterations, c.last_shift);
    // sigma pools every member coordinate, so the off-diagonal blobs at
    // (4, 0) and (0, 4) read about 2 wide while the diagonal ones stay tight
    for j in 0..4 {
        let p = c.center(j);
        println!("center ({:.3}, {:.3})  members {}  sigma {:.3}", p[0], p[1], c.counts[j], c.sigmas[j]);
    }
    println!("inertia per iteration: {:?}", c.inertia.iter().map(|v| (v * 10.0).round() / 10.0).collect::<Vec<_>>());

    let phi = rbf_activations(&[4.0, 4.0], &c.centers, &c.sigmas);
    println!("activations at (4, 4): {:?}", phi.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    if phi.iter().cloned().fold(0.0, f64::max) < 0.9 {
        return Err("no prototype sits on (4, 4)".into());
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
