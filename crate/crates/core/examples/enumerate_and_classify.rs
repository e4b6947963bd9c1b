//! Counts maximum dimer coverings and their symmetry classes for small lattices.
//!
//! cargo run --release --example enumerate_and_classify -- 5

use std::time::Instant;

use dimerbell::dimers::{class_statistics, classify, enumerate_maximal};
use dimerbell::lattice::{build_lattice, BoundaryCondition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let max_n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4);

    println!("{:>8} {:>10} {:>8} {:>6} {:>6} {:>10}", "lattice", "coverings", "classes", "min", "max", "time");
    for n in 3..=max_n {
        for boundary in [BoundaryCondition::Torus, BoundaryCondition::KleinBottle] {
            let start = Instant::now();
            let lattice = build_lattice(n, boundary)?;
            let coverings = enumerate_maximal(&lattice)?;
            let stats = class_statistics(&classify(&lattice, &coverings)?);
            println!(
                "{:>8} {:>10} {:>8} {:>6} {:>6} {:>10.1?}",
                format!("{n}x{n} {boundary}"),
                coverings.len(),
                stats.classes,
                stats.min_size,
                stats.max_size,
                start.elapsed()
            );
        }
    }
    Ok(())
}
