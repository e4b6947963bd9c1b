//! Classical bound and quantum value across the coupling range, as CSV.
//!
//! cargo run --release --example sweep_curves -- 3 torus > curves.csv

use dimerbell::cli::write_sweep_csv;
use dimerbell::critical::{sweep, SolverConfig};
use dimerbell::dimers::{classify, enumerate_maximal};
use dimerbell::lattice::{build_lattice, BoundaryCondition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let boundary: BoundaryCondition = args.next().map(|s| s.parse()).transpose()?.unwrap_or(BoundaryCondition::Torus);

    let lattice = build_lattice(n, boundary)?;
    let coverings = enumerate_maximal(&lattice)?;
    let classes = classify(&lattice, &coverings)?;
    let cov = classes[0].representative_covering(&coverings);
    let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
    let points = sweep(&lattice, cov, &grid, &SolverConfig::default(), None)?;

    for p in &points {
        let marker = if p.beta_q < p.beta_c { "violated" } else { "" };
        eprintln!("{:5.2} {:10.4} {:10.4} {marker}", p.epsilon, p.beta_c, p.beta_q);
    }
    write_sweep_csv(&points, std::io::stdout().lock())?;
    Ok(())
}
