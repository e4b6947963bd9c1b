//! Bell-expression coefficients for a given two-site Hamiltonian.
//!
//! With every measurement of the form `cos(theta) X + sin(theta) Z`, a two-party
//! Bell operator `sum_c alpha_c A_c ⊗ B_c` is fixed by its projections onto
//! `{XX, XZ, ZX, ZZ}`. Matching those projections to the chained-Bell
//! Hamiltonian
//!
//! ```text
//! H_2 = m ( cos²(π/2m) XX + cos(π/2m) sin(π/2m) (XZ + ZX) - cos²(π/2m) ZZ )
//! ```
//!
//! gives the linear system `T α = b` with one column of `T` per measurement pair.
//! Because `Tr((P ⊗ Q)(A ⊗ B)) = Tr(P A) Tr(Q B)`, any solution reconstructs
//! the operator `4 H_2`.
//!
//! Two column layouts are supported. [`Terms::Correlators`] keeps only the
//! correlators `A_x ⊗ B_y` (`m²` columns; for `m = 2` this is the usual CHSH
//! form). [`Terms::Full`] adds the Fourier index `k ∈ {0, 1}` per party, giving
//! `4m²` columns. For binary outcomes the `k = 0` component of a POVM is the
//! identity, so in a deterministic assignment it evaluates to `+1`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_RTOL: f64 = 1e-10;
/// Largest accepted `||T α - b||`.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terms {
    Correlators,
    Full,
}

/// Measurement angles, shared by both parties.
///
/// `Correlators` takes `m` angles `theta_x`; `Full` takes `2m` angles laid out
/// as `theta[2 * x + k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementAngles {
    pub m: usize,
    pub terms: Terms,
    pub theta: Vec<f64>,
}

impl MeasurementAngles {
    /// Equally spaced `theta_x = x π / m`; `(0, π/2)` for `m = 2`.
    pub fn equally_spaced(m: usize, terms: Terms) -> Self {
        let per_input = match terms {
            Terms::Correlators => 1,
            Terms::Full => 2,
        };
        let theta = (0..m)
            .flat_map(|x| std::iter::repeat_n(x as f64 * PI / m as f64, per_input))
            .collect();
        MeasurementAngles { m, terms, theta }
    }

    fn angle(&self, x: usize, k: usize) -> f64 {
        match self.terms {
            Terms::Correlators => self.theta[x],
            Terms::Full => self.theta[2 * x + k],
        }
    }
}

/// Column label `(x1, x2, k1, k2)`; `k` is always 1 for correlator columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub x1: usize,
    pub x2: usize,
    pub k1: usize,
    pub k2: usize,
}

#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub m: usize,
    pub angles: MeasurementAngles,
    pub columns: Vec<Column>,
    pub t: DMatrix<f64>,
    pub b: DVector<f64>,
}

/// `b = 2m (2cos²(π/2m), sin(π/m), sin(π/m), -2cos²(π/2m))`.
pub fn chained_b(m: usize) -> [f64; 4] {
    let mf = m as f64;
    let c2 = 2.0 * (PI / (2.0 * mf)).cos().powi(2);
    let s = (PI / mf).sin();
    [2.0 * mf * c2, 2.0 * mf * s, 2.0 * mf * s, -2.0 * mf * c2]
}

fn pauli_x() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, 1.0, 0.0)
}

fn pauli_z() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

fn observable(theta: f64) -> Matrix2<f64> {
    pauli_x() * theta.cos() + pauli_z() * theta.sin()
}

/// The chained-Bell two-site Hamiltonian as a 4x4 matrix (party 1 on the left).
pub fn chained_hamiltonian(m: usize) -> Matrix4<f64> {
    let a = PI / (2.0 * m as f64);
    let (c, s) = (a.cos(), a.sin());
    let (x, z) = (pauli_x(), pauli_z());
    (x.kronecker(&x) * (c * c) + x.kronecker(&z) * (c * s) + z.kronecker(&x) * (s * c)
        - z.kronecker(&z) * (c * c))
        * m as f64
}

pub fn build_system(m: usize, angles: &MeasurementAngles) -> Result<LinearSystem> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("need m >= 2 inputs, got {m}")));
    }
    let want = match angles.terms {
        Terms::Correlators => m,
        Terms::Full => 2 * m,
    };
    if angles.m != m || angles.theta.len() != want {
        return Err(Error::InvalidInput(format!(
            "expected {want} angles for m = {m}, got {}",
            angles.theta.len()
        )));
    }
    let ks: &[usize] = match angles.terms {
        Terms::Correlators => &[1],
        Terms::Full => &[0, 1],
    };
    let mut columns = Vec::new();
    for x1 in 0..m {
        for x2 in 0..m {
            for &k1 in ks {
                for &k2 in ks {
                    columns.push(Column { x1, x2, k1, k2 });
                }
            }
        }
    }
    let t = DMatrix::from_fn(4, columns.len(), |row, c| {
        let col = columns[c];
        let th = angles.angle(col.x1, col.k1);
        let ph = angles.angle(col.x2, col.k2);
        let left = if row < 2 { th.cos() } else { th.sin() };
        let right = if row % 2 == 0 { ph.cos() } else { ph.sin() };
        left * right
    });
    Ok(LinearSystem {
        m,
        angles: angles.clone(),
        columns,
        t,
        b: DVector::from_row_slice(&chained_b(m)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSolution {
    pub m: usize,
    pub alpha: Vec<f64>,
    pub rank: usize,
    /// False when `T` has a null space and `alpha` is the minimum-norm member
    /// of a family of solutions.
    pub unique: bool,
    pub residual: f64,
}

pub fn numerical_rank(t: &DMatrix<f64>) -> usize {
    let sv = t.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > RANK_RTOL * max).count()
}

/// Minimum-norm solution of `T α = b` (the unique one when `T` is invertible).
pub fn solve_alpha(sys: &LinearSystem) -> Result<AlphaSolution> {
    let svd = sys.t.clone().svd(true, true);
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_RTOL * max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let alpha = svd
        .solve(&sys.b, cutoff)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let residual = (&sys.t * &alpha - &sys.b).norm();
    if residual > RESIDUAL_TOL {
        return Err(Error::InconsistentSystem { residual });
    }
    Ok(AlphaSolution {
        m: sys.m,
        alpha: alpha.iter().copied().collect(),
        rank,
        unique: rank == sys.columns.len(),
        residual,
    })
}

/// `sum_c alpha_c A_c ⊗ B_c` with `A_c = cos θ X + sin θ Z`.
pub fn bell_operator(sys: &LinearSystem, alpha: &[f64]) -> Matrix4<f64> {
    sys.columns
        .iter()
        .zip(alpha)
        .fold(Matrix4::zeros(), |acc, (col, &a)| {
            let th = sys.angles.angle(col.x1, col.k1);
            let ph = sys.angles.angle(col.x2, col.k2);
            acc + observable(th).kronecker(&observable(ph)) * a
        })
}

/// Minimum of the Bell expression over deterministic `±1` outcome assignments.
/// The `k = 0` component of each party always contributes `+1`.
pub fn classical_minimum(sys: &LinearSystem, alpha: &[f64]) -> f64 {
    let m = sys.m;
    let mut best = f64::INFINITY;
    for a_bits in 0..(1u32 << m) {
        for b_bits in 0..(1u32 << m) {
            let value = |bits: u32, x: usize, k: usize| -> f64 {
                if k == 0 || bits >> x & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            };
            let v: f64 = sys
                .columns
                .iter()
                .zip(alpha)
                .map(|(c, &w)| w * value(a_bits, c.x1, c.k1) * value(b_bits, c.x2, c.k2))
                .sum();
            best = best.min(v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace_projection(h: &Matrix4<f64>) -> [f64; 4] {
        let (x, z) = (pauli_x(), pauli_z());
        let basis = [x.kronecker(&x), x.kronecker(&z), z.kronecker(&x), z.kronecker(&z)];
        basis.map(|p| (p * h).trace())
    }

    #[test]
    fn chsh_case() {
        let angles = MeasurementAngles::equally_spaced(2, Terms::Correlators);
        assert_eq!(angles.theta, vec![0.0, PI / 2.0]);
        let sys = build_system(2, &angles).unwrap();
        assert!((&sys.t - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-12);
        let b: Vec<f64> = sys.b.iter().copied().collect();
        for (got, want) in b.iter().zip([4.0, 4.0, 4.0, -4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let sol = solve_alpha(&sys).unwrap();
        assert!(sol.unique);
        assert_eq!(sol.rank, 4);
        for (got, want) in sol.alpha.iter().zip([4.0, 4.0, 4.0, -4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((classical_minimum(&sys, &sol.alpha) + 8.0).abs() < 1e-12);

        let (x, z) = (pauli_x(), pauli_z());
        let chsh = (x.kronecker(&x) + x.kronecker(&z) + z.kronecker(&x) - z.kronecker(&z)) * 4.0;
        assert!((bell_operator(&sys, &sol.alpha) - chsh).abs().max() < 1e-12);
    }

    #[test]
    fn b_vector_m3() {
        let b = chained_b(3);
        let r3 = 3.0f64.sqrt();
        for (got, want) in b.iter().zip([9.0, 3.0 * r3, 3.0 * r3, -9.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn b_matches_trace_projection() {
        for m in 2..8 {
            let proj = trace_projection(&chained_hamiltonian(m));
            for (p, b) in proj.iter().zip(chained_b(m)) {
                assert!((p - b).abs() < 1e-12, "m={m}");
            }
        }
    }

    #[test]
    fn full_layout_is_a_family() {
        let angles = MeasurementAngles::equally_spaced(2, Terms::Full);
        let sys = build_system(2, &angles).unwrap();
        assert_eq!(sys.t.shape(), (4, 16));
        let sol = solve_alpha(&sys).unwrap();
        assert_eq!(sol.rank, 4);
        assert!(!sol.unique);
    }

    #[test]
    fn inconsistent_system_reported() {
        // all measurements along X: only the XX row is reachable
        let angles = MeasurementAngles {
            m: 2,
            terms: Terms::Correlators,
            theta: vec![0.0, 0.0],
        };
        let sys = build_system(2, &angles).unwrap();
        assert_eq!(numerical_rank(&sys.t), 1);
        assert!(matches!(solve_alpha(&sys), Err(Error::InconsistentSystem { .. })));
    }

    #[test]
    fn bad_inputs() {
        assert!(build_system(1, &MeasurementAngles::equally_spaced(1, Terms::Correlators)).is_err());
        let mut angles = MeasurementAngles::equally_spaced(3, Terms::Correlators);
        angles.theta.pop();
        assert!(build_system(3, &angles).is_err());
    }

    proptest! {
        #[test]
        fn solution_reconstructs_operator(m in 2usize..7, full in any::<bool>()) {
            let terms = if full { Terms::Full } else { Terms::Correlators };
            let sys = build_system(m, &MeasurementAngles::equally_spaced(m, terms)).unwrap();
            let sol = solve_alpha(&sys).unwrap();
            let t_alpha = &sys.t * DVector::from_vec(sol.alpha.clone());
            prop_assert!((t_alpha - &sys.b).norm() <= RESIDUAL_TOL);
            prop_assert!(sol.rank <= 4.min(sys.columns.len()));
            prop_assert_eq!(sol.rank, numerical_rank(&sys.t));
            let diff = bell_operator(&sys, &sol.alpha) - chained_hamiltonian(m) * 4.0;
            prop_assert!(diff.abs().max() < 1e-10);
        }
    }
}
