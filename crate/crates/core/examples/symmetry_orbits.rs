//! Draws one covering and walks its orbit under the lattice symmetry generators.
//!
//! cargo run --example symmetry_orbits -- 4 klein

use std::collections::BTreeSet;

use dimerbell::dimers::{apply_symmetry, enumerate_maximal, generators, DimerCovering};
use dimerbell::lattice::{build_lattice, BoundaryCondition, Lattice, Orientation};

/// ASCII picture: `o` sites, `-`/`|` dimers inside the grid, `>`/`v` wrapped dimers.
fn draw(lattice: &Lattice, cov: &DimerCovering) -> String {
    let n = lattice.n();
    let mask = cov.dimer_mask(lattice);
    let on = |a: usize, b: usize| lattice.edge_index(a, b).is_some_and(|e| mask[e]);
    let mut out = String::new();
    for i in 0..n {
        for j in 0..n {
            let s = lattice.site(i, j);
            out.push('o');
            if j + 1 < n {
                out.push(if on(s, lattice.site(i, j + 1)) { '-' } else { ' ' });
            } else {
                let wrapped = lattice.edges().iter().zip(&mask).any(|(e, &d)| {
                    d && e.wrap && (e.a == s || e.b == s) && e.orientation == Orientation::Horizontal
                });
                out.push(if wrapped { '>' } else { ' ' });
            }
        }
        out.push('\n');
        for j in 0..n {
            let s = lattice.site(i, j);
            let below = lattice.site((i + 1) % n, j);
            out.push(match (on(s, below), i + 1 == n) {
                (true, false) => '|',
                (true, true) => 'v',
                _ => ' ',
            });
            out.push(' ');
        }
        out.push('\n');
    }
    out
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let boundary: BoundaryCondition = args.next().map(|s| s.parse()).transpose()?.unwrap_or(BoundaryCondition::Torus);

    let lattice = build_lattice(n, boundary)?;
    let coverings = enumerate_maximal(&lattice)?;
    let seed = &coverings[coverings.len() / 3];
    println!("covering {} on {n}x{n} {boundary}:\n{}", seed.id(), draw(&lattice, seed));

    for &op in generators(boundary) {
        let image = apply_symmetry(&lattice, seed, op)?;
        println!("after {op}:\n{}", draw(&lattice, &image));
    }

    // breadth-first closure under the generators
    let mut orbit = BTreeSet::from([seed.clone()]);
    let mut frontier = vec![seed.clone()];
    while let Some(c) = frontier.pop() {
        for &op in generators(boundary) {
            let image = apply_symmetry(&lattice, &c, op)?;
            if orbit.insert(image.clone()) {
                frontier.push(image);
            }
        }
    }
    println!("orbit size {} of {} coverings", orbit.len(), coverings.len());
    Ok(())
}
