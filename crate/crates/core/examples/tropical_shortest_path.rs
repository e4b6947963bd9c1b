//! Min-plus matrix powers as shortest paths on a small weighted digraph.

use dimerbell::tropical::{trop_matmul, trop_trace, TropicalMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inf = f64::INFINITY;
    // arc weights; inf means no arc
    let w = TropicalMatrix::from_rows(&[vec![1.0, 2.0, inf], vec![inf, 3.0, 4.0], vec![5.0, 6.0, 1.0]])?;
    let w2 = trop_matmul(&w, &w)?;

    println!("cheapest two-step walks:");
    for row in w2.to_rows() {
        println!("  {row:?}");
    }
    println!("vertex 1 -> 2 in two steps: {}", w2.get(0, 1));
    println!("cheapest closed two-step walk (trace): {}", trop_trace(&w2));

    for k in 1..=6 {
        println!("shortest closed walk of length {k}: {}", w.power(k).trace());
    }
    Ok(())
}
