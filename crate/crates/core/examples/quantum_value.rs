//! Ground energy of the Bell operator by dense diagonalisation and by Lanczos.
//!
//! cargo run --release --example quantum_value -- 3 klein 0.8

use std::time::Instant;

use dimerbell::dimers::enumerate_maximal;
use dimerbell::lattice::{build_lattice, BoundaryCondition};
use dimerbell::quantum::{quantum_value, LanczosConfig, SolverMethod, DENSE_MAX_SITES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let boundary: BoundaryCondition = args.next().map(|s| s.parse()).transpose()?.unwrap_or(BoundaryCondition::Torus);
    let eps: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.8);

    let lattice = build_lattice(n, boundary)?;
    let cov = &enumerate_maximal(&lattice)?[0];
    let cfg = LanczosConfig::default();

    let mut methods = vec![SolverMethod::Lanczos];
    if lattice.num_sites() <= DENSE_MAX_SITES {
        methods.insert(0, SolverMethod::Dense);
    }
    for m in methods {
        let t = Instant::now();
        let r = quantum_value(&lattice, cov, eps, Some(m), &cfg)?;
        println!(
            "{m:?}: beta_Q = {:.12}  residual {:.1e}  iterations {}  ({:.1?})",
            r.beta_q,
            r.residual,
            r.iterations,
            t.elapsed()
        );
    }
    let k = cov.num_dimers() as f64;
    let at_one = quantum_value(&lattice, cov, 1.0, None, &cfg)?.beta_q;
    println!("eps = 1: {at_one:.12} vs -4 sqrt(2) k = {:.12}", -4.0 * 2f64.sqrt() * k);
    Ok(())
}
