//! Stress driver: a larger productivity fuzz campaign than the test
//! suite runs. `cargo run --release --example fuzzsweep`.

use asyncratt::verify::fuzz_productivity;

fn main() {
    let mut total_failures = 0;
    for seed in 0..8u64 {
        let report = fuzz_productivity(seed, 6, 25, 60);
        for f in &report.failures {
            eprintln!("seed {seed} failure:\n{}\nevents {:?}\n{}", f.source, f.events, f.error);
        }
        total_failures += report.failures.len();
    }
    println!("fuzz sweep: 200 programs x 60 steps, {total_failures} failures");
}
