//! Classical bound of one covering, with an optimal strategy assignment,
//! checked against exhaustive search when the lattice is small enough.
//!
//! cargo run --release --example classical_bound -- 4 torus 0.4

use dimerbell::bellcore::bell_value;
use dimerbell::dimers::enumerate_maximal;
use dimerbell::lattice::{build_lattice, BoundaryCondition};
use dimerbell::tropical::{classical_bound_bruteforce, classical_bound_transfer_with, TransferOptions, BRUTEFORCE_MAX_SITES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let boundary: BoundaryCondition = args.next().map(|s| s.parse()).transpose()?.unwrap_or(BoundaryCondition::Torus);
    let eps: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);

    let lattice = build_lattice(n, boundary)?;
    let coverings = enumerate_maximal(&lattice)?;
    let cov = &coverings[0];
    let opts = TransferOptions {
        recover_assignment: true,
        ..Default::default()
    };
    let r = classical_bound_transfer_with(&lattice, cov, eps, &opts)?;
    let s = r.optimal_assignment.expect("requested");
    println!("{n}x{n} {boundary}, covering {}, eps = {eps}", cov.id());
    println!("beta_C = {}", r.beta_c);
    println!("optimal strategies (row-major):");
    for row in s.0.chunks(n) {
        println!("  {}", row.iter().map(|s| s.index().to_string()).collect::<Vec<_>>().join(" "));
    }
    println!("Bell value of that assignment: {}", bell_value(&lattice, cov, eps, &s)?);

    if lattice.num_sites() <= BRUTEFORCE_MAX_SITES {
        let b = classical_bound_bruteforce(&lattice, cov, eps)?;
        println!("exhaustive search over 4^{} assignments: {}", lattice.num_sites(), b.beta_c);
    }
    println!("at eps = 1: {} (= -4 x {} dimers)", classical_bound_transfer_with(&lattice, cov, 1.0, &TransferOptions::default())?.beta_c, cov.num_dimers());
    Ok(())
}
