//! Coefficients of the Bell expression that reproduces the chained two-site
//! Hamiltonian, for a few input counts.

use dimerbell::bellmap::{bell_operator, build_system, chained_hamiltonian, classical_minimum, solve_alpha, MeasurementAngles, Terms};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chsh = build_system(2, &MeasurementAngles::equally_spaced(2, Terms::Correlators))?;
    let sol = solve_alpha(&chsh)?;
    println!("m = 2: alpha = {:?}", sol.alpha);
    println!("       classical minimum {}", classical_minimum(&chsh, &sol.alpha));

    for m in 2..=5 {
        for terms in [Terms::Correlators, Terms::Full] {
            let sys = build_system(m, &MeasurementAngles::equally_spaced(m, terms))?;
            let sol = solve_alpha(&sys)?;
            let err = (bell_operator(&sys, &sol.alpha) - chained_hamiltonian(m) * 4.0).abs().max();
            println!(
                "m = {m} {terms:?}: {} columns, rank {}, unique {}, |alpha| = {:.4}, classical min {:.4}, operator error {err:.1e}",
                sys.columns.len(),
                sol.rank,
                sol.unique,
                sol.alpha.iter().map(|a| a * a).sum::<f64>().sqrt(),
                classical_minimum(&sys, &sol.alpha),
            );
        }
    }
    Ok(())
}
