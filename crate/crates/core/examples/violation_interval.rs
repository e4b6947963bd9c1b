//! Violation interval of each covering class.
//!
//! cargo run --release --example violation_interval -- 4 klein

use std::time::Instant;

use dimerbell::critical::{critical_batch, BoundCache, CriticalConfig};
use dimerbell::dimers::{classify, enumerate_maximal};
use dimerbell::lattice::{build_lattice, BoundaryCondition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let boundary: BoundaryCondition = args.next().map(|s| s.parse()).transpose()?.unwrap_or(BoundaryCondition::Torus);

    let lattice = build_lattice(n, boundary)?;
    let coverings = enumerate_maximal(&lattice)?;
    let classes = classify(&lattice, &coverings)?;
    let cache = BoundCache::new();
    let start = Instant::now();
    let results = critical_batch(&lattice, &coverings, &classes, &CriticalConfig::default(), Some(&cache));

    println!("{n}x{n} {boundary}: {} classes", classes.len());
    println!("{:>5} {:>5} {:>10} {:>10} {:>6}", "class", "size", "eps_low", "eps_high", "evals");
    for (cls, r) in classes.iter().zip(results) {
        let r = r?;
        let fmt = |e: Option<f64>| e.map_or("none".to_string(), |v| format!("{v:.5}"));
        println!(
            "{:>5} {:>5} {:>10} {:>10} {:>6}",
            cls.class_id,
            cls.size(),
            fmt(r.eps_low),
            fmt(r.eps_high),
            r.trace.len()
        );
    }
    println!("{} bound evaluations in {:.1?}", cache.len(), start.elapsed());
    Ok(())
}
