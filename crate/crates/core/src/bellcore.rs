//! Local deterministic strategies and the dimer-weighted CHSH expression.
//!
//! A strategy `s` fixes the outcome of each of the two inputs:
//!
//! | s | outcome(0) | outcome(1) |
//! |---|------------|------------|
//! | 0 | 0          | 0          |
//! | 1 | 0          | 1          |
//! | 2 | 1          | 0          |
//! | 3 | 1          | 1          |
//!
//! Outcomes map to observable values `(-1)^a`. The per-link CHSH value
//! `A0 B0 + A0 B1 + A1 B0 - A1 B1` for strategies `(row, col)` is
//!
//! ```text
//!        0   1   2   3
//!   0   +2  +2  -2  -2
//!   1   +2  -2  +2  -2
//!   2   -2  +2  -2  +2
//!   3   -2  -2  +2  +2
//! ```

use serde::{Deserialize, Serialize};

use crate::dimers::DimerCovering;
use crate::error::{Error, Result};
use crate::lattice::Lattice;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Strategy(u8);

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy(0), Strategy(1), Strategy(2), Strategy(3)];

    pub fn new(s: u8) -> Result<Self> {
        if s < 4 {
            Ok(Strategy(s))
        } else {
            Err(Error::InvalidInput(format!("strategy {s} outside 0..4")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Deterministic outcome for input `x`.
    pub fn outcome(self, x: u8) -> u8 {
        match (self.0, x) {
            (0, _) => 0,
            (1, x) => x,
            (2, x) => 1 - x,
            _ => 1,
        }
    }

    pub fn observable(self, x: u8) -> i32 {
        1 - 2 * self.outcome(x) as i32
    }
}

impl TryFrom<u8> for Strategy {
    type Error = Error;
    fn try_from(value: u8) -> Result<Self> {
        Strategy::new(value)
    }
}

impl From<Strategy> for u8 {
    fn from(s: Strategy) -> u8 {
        s.0
    }
}

/// CHSH value of one link under the fixed equal measurements; always +-2.
pub fn chsh_link_value(si: Strategy, sj: Strategy) -> f64 {
    let (a0, a1) = (si.observable(0), si.observable(1));
    let (b0, b1) = (sj.observable(0), sj.observable(1));
    (a0 * b0 + a0 * b1 + a1 * b0 - a1 * b1) as f64
}

/// The 4x4 link-value table, indexed `[s_i][s_j]`.
pub fn chsh_table() -> [[f64; 4]; 4] {
    let mut t = [[0.0; 4]; 4];
    for a in Strategy::ALL {
        for b in Strategy::ALL {
            t[a.index()][b.index()] = chsh_link_value(a, b);
        }
    }
    t
}

/// Link weight: `1 + eps` on a dimer, `1 - eps` elsewhere.
pub fn dimer_weight(on_dimer: bool, epsilon: f64) -> f64 {
    if on_dimer {
        1.0 + epsilon
    } else {
        1.0 - epsilon
    }
}

/// The weights `f_ij(eps)` of one covering at one coupling.
#[derive(Clone, Debug)]
pub struct WeightFunction<'a> {
    pub epsilon: f64,
    pub covering: &'a DimerCovering,
}

impl WeightFunction<'_> {
    /// Weights in lattice edge order.
    pub fn weights(&self, lattice: &Lattice) -> Vec<f64> {
        link_weights(lattice, self.covering, self.epsilon)
    }
}

pub fn link_weights(lattice: &Lattice, covering: &DimerCovering, epsilon: f64) -> Vec<f64> {
    covering
        .dimer_mask(lattice)
        .into_iter()
        .map(|d| dimer_weight(d, epsilon))
        .collect()
}

/// One strategy per site, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyAssignment(pub Vec<Strategy>);

impl StrategyAssignment {
    pub fn uniform(sites: usize, s: Strategy) -> Self {
        StrategyAssignment(vec![s; sites])
    }

    /// Decodes a base-4 index, site 0 in the least significant digit.
    pub fn from_index(mut index: u64, sites: usize) -> Self {
        let mut v = Vec::with_capacity(sites);
        for _ in 0..sites {
            v.push(Strategy((index % 4) as u8));
            index /= 4;
        }
        StrategyAssignment(v)
    }

    pub fn index(&self) -> u64 {
        self.0.iter().rev().fold(0, |acc, s| acc * 4 + s.0 as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, site: usize) -> Strategy {
        self.0[site]
    }
}

/// Evaluates `sum_<ij> f_ij(eps) * I_ij(s_i, s_j)` over all lattice links.
pub fn bell_value(
    lattice: &Lattice,
    covering: &DimerCovering,
    epsilon: f64,
    assignment: &StrategyAssignment,
) -> Result<f64> {
    covering.check_lattice(lattice)?;
    if assignment.len() != lattice.num_sites() {
        return Err(Error::DimensionMismatch {
            left: assignment.len(),
            right: lattice.num_sites(),
        });
    }
    let weights = link_weights(lattice, covering, epsilon);
    Ok(lattice
        .edges()
        .iter()
        .zip(&weights)
        .map(|(e, w)| w * chsh_link_value(assignment.get(e.a), assignment.get(e.b)))
        .sum())
}
