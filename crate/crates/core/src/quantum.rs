//! Bell-operator Hamiltonian and its ground-state energy (the quantum value).
//!
//! Each link contributes `f_ij(eps) * (XX + XZ + ZX - ZZ)`. Site `k` is bit `k`
//! of the computational-basis index. All terms are real in this basis, so the
//! Hamiltonian is a real symmetric matrix and is applied without building it.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellcore::link_weights;
use crate::dimers::DimerCovering;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, SiteId};

pub const DENSE_MAX_SITES: usize = 12;
pub const LANCZOS_MAX_SITES: usize = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTermSpec {
    pub site_a: SiteId,
    pub site_b: SiteId,
    pub ops: (Pauli, Pauli),
    pub coefficient: f64,
}

const LINK_TERMS: [((Pauli, Pauli), f64); 4] = [
    ((Pauli::X, Pauli::X), 1.0),
    ((Pauli::X, Pauli::Z), 1.0),
    ((Pauli::Z, Pauli::X), 1.0),
    ((Pauli::Z, Pauli::Z), -1.0),
];

/// Four Pauli terms per lattice link, in edge order.
pub fn build_hamiltonian(lattice: &Lattice, covering: &DimerCovering, epsilon: f64) -> Result<Vec<PauliTermSpec>> {
    covering.check_lattice(lattice)?;
    let weights = link_weights(lattice, covering, epsilon);
    Ok(lattice
        .edges()
        .iter()
        .zip(weights)
        .flat_map(|(e, w)| {
            LINK_TERMS.iter().map(move |&(ops, sign)| PauliTermSpec {
                site_a: e.a,
                site_b: e.b,
                ops,
                coefficient: sign * w,
            })
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumValueResult {
    pub beta_q: f64,
    pub method: SolverMethod,
    /// `||H v - beta_q v|| / ||v||` at the returned eigenvector.
    pub residual: f64,
    pub iterations: usize,
}

/// A Pauli sum compiled to bit masks: each term maps `|y>` to
/// `coef * (-1)^{popcount(y & z_mask)} |y ^ x_mask>`.
#[derive(Clone, Debug)]
pub struct PauliOperator {
    num_sites: usize,
    terms: Vec<(usize, usize, f64)>,
    /// Diagonal from the terms with no X factor.
    diag: Vec<f64>,
    /// Remaining terms grouped by X mask, so each group costs one gather.
    groups: Vec<MaskGroup>,
}

#[derive(Clone, Debug)]
struct MaskGroup {
    xmask: usize,
    /// `(z_bit_a, z_bit_b, coef)`; an absent Z bit points at bit 63, which is
    /// always clear. Two-site terms never carry more than two Z bits.
    signed: Vec<(u32, u32, f64)>,
    /// `sum_t c_t (-1)^{z parity}` per basis state, when it fits the budget.
    table: Option<Vec<f64>>,
}

/// Largest number of precomputed coefficients (512 MiB of f64).
const TABLE_BUDGET: usize = 1 << 26;

/// Rows handled per parallel task; one chunk of output stays in L1.
const CHUNK: usize = 4096;

/// A single term without Z factors: a constant coefficient.
fn is_plain(signed: &[(u32, u32, f64)]) -> bool {
    matches!(signed, [(63, 63, _)])
}

fn z_parity(x: usize, za: u32, zb: u32) -> f64 {
    let p = ((x as u64 >> za) ^ (x as u64 >> zb)) & 1;
    1.0 - 2.0 * p as f64
}

impl PauliOperator {
    pub fn new(terms: &[PauliTermSpec], num_sites: usize) -> Result<Self> {
        if num_sites > LANCZOS_MAX_SITES {
            return Err(Error::SizeCap {
                what: "qubit count",
                got: num_sites,
                limit: LANCZOS_MAX_SITES,
            });
        }
        let mut compiled = Vec::with_capacity(terms.len());
        for t in terms {
            if t.site_a >= num_sites || t.site_b >= num_sites || t.site_a == t.site_b {
                return Err(Error::InvalidInput(format!(
                    "Pauli term on sites ({}, {}) invalid for {num_sites} sites",
                    t.site_a, t.site_b
                )));
            }
            let (mut x, mut z) = (0usize, 0usize);
            for (site, op) in [(t.site_a, t.ops.0), (t.site_b, t.ops.1)] {
                match op {
                    Pauli::X => x |= 1 << site,
                    Pauli::Z => z |= 1 << site,
                }
            }
            compiled.push((x, z, t.coefficient));
        }

        let mut by_mask: BTreeMap<usize, Vec<(u32, u32, f64)>> = BTreeMap::new();
        for &(x, z, coef) in &compiled {
            let lo = if z == 0 { 63 } else { z.trailing_zeros() };
            let rest = z & z.wrapping_sub(1);
            let hi = if rest == 0 { 63 } else { rest.trailing_zeros() };
            by_mask.entry(x).or_default().push((lo, hi, coef));
        }
        let diagonal = by_mask.remove(&0).unwrap_or_default();
        let mut diag = vec![0.0; 1 << num_sites];
        diag.par_iter_mut().enumerate().for_each(|(x, d)| {
            *d = diagonal.iter().map(|&(za, zb, c)| c * z_parity(x, za, zb)).sum();
        });
        let signed_groups = by_mask.values().filter(|g| !is_plain(g)).count();
        let tabulate = signed_groups << num_sites <= TABLE_BUDGET;
        let groups = by_mask
            .into_iter()
            .map(|(xmask, signed)| {
                let table = (tabulate && !is_plain(&signed)).then(|| {
                    let mut t = vec![0.0; 1 << num_sites];
                    t.par_iter_mut().enumerate().for_each(|(x, c)| {
                        *c = signed.iter().map(|&(za, zb, k)| k * z_parity(x, za, zb)).sum();
                    });
                    t
                });
                MaskGroup { xmask, signed, table }
            })
            .collect();
        Ok(PauliOperator {
            num_sites,
            terms: compiled,
            diag,
            groups,
        })
    }

    pub fn dim(&self) -> usize {
        1 << self.num_sites
    }

    /// `out = H v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        // Z acts on the ket before X flips it; the Z and X sites never overlap
        // within a term, so the sign can be read from the output index.
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (k, o) in chunk.iter_mut().enumerate() {
                *o = self.diag[base + k] * v[base + k];
            }
            for g in &self.groups {
                match (&g.signed[..], &g.table) {
                    (&[(63, 63, coef)], _) => {
                        for (k, o) in chunk.iter_mut().enumerate() {
                            *o += coef * v[(base + k) ^ g.xmask];
                        }
                    }
                    (_, Some(t)) => {
                        let t = &t[base..base + chunk.len()];
                        for (k, (o, c)) in chunk.iter_mut().zip(t).enumerate() {
                            *o += c * v[(base + k) ^ g.xmask];
                        }
                    }
                    _ => {
                        for (k, o) in chunk.iter_mut().enumerate() {
                            let x = base + k;
                            let coef: f64 = g.signed.iter().map(|&(za, zb, c)| c * z_parity(x, za, zb)).sum();
                            *o += coef * v[x ^ g.xmask];
                        }
                    }
                }
            }
        });
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for y in 0..dim {
            for &(xm, zm, coef) in &self.terms {
                let sign = if (y & zm).count_ones() & 1 == 0 { coef } else { -coef };
                m[(y ^ xm, y)] += sign;
            }
        }
        m
    }

    pub fn rayleigh_quotient(&self, v: &[f64]) -> f64 {
        let mut hv = vec![0.0; v.len()];
        self.apply(v, &mut hv);
        dot(v, &hv) / dot(v, v)
    }

    pub fn residual(&self, v: &[f64], lambda: f64) -> f64 {
        let mut hv = vec![0.0; v.len()];
        self.apply(v, &mut hv);
        let r: f64 = hv.iter().zip(v).map(|(h, x)| (h - lambda * x).powi(2)).sum();
        r.sqrt() / norm(v)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // independent lanes so the compiler can vectorise the reduction
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Smallest eigenvalue of the assembled matrix.
pub fn ground_energy_dense(terms: &[PauliTermSpec], num_sites: usize) -> Result<QuantumValueResult> {
    if num_sites > DENSE_MAX_SITES {
        return Err(Error::SizeCap {
            what: "dense diagonalisation qubit count",
            got: num_sites,
            limit: DENSE_MAX_SITES,
        });
    }
    let op = PauliOperator::new(terms, num_sites)?;
    let h = op.to_dense();
    let beta_q = h.clone().symmetric_eigenvalues().min();
    // eigenvector by inverse iteration with a shift just below the eigenvalue
    let dim = h.nrows();
    let scale = h.abs().max().max(1.0);
    let shifted = &h - DMatrix::identity(dim, dim) * (beta_q - 1e-10 * scale);
    let lu = shifted.lu();
    let mut v = DVector::from_fn(dim, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    for _ in 0..2 {
        v = lu.solve(&v).unwrap_or(v);
        v /= v.norm();
    }
    let v: Vec<f64> = v.iter().copied().collect();
    Ok(QuantumValueResult {
        beta_q,
        method: SolverMethod::Dense,
        residual: op.residual(&v, beta_q),
        iterations: 1,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosConfig {
    /// Residual tolerance on the returned eigenpair.
    pub tol: f64,
    /// Krylov basis size before a restart.
    pub max_krylov: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig {
            tol: 1e-8,
            max_krylov: 200,
            max_restarts: 30,
            seed: 0x5eed,
        }
    }
}

pub fn ground_energy_lanczos(terms: &[PauliTermSpec], num_sites: usize, tol: f64) -> Result<QuantumValueResult> {
    ground_energy_lanczos_with(
        terms,
        num_sites,
        &LanczosConfig {
            tol,
            ..Default::default()
        },
    )
}

/// Restarted Lanczos with full reorthogonalisation. Each restart begins from
/// the previous Ritz vector.
pub fn ground_energy_lanczos_with(
    terms: &[PauliTermSpec],
    num_sites: usize,
    cfg: &LanczosConfig,
) -> Result<QuantumValueResult> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    let op = PauliOperator::new(terms, num_sites)?;
    let dim = op.dim();
    let krylov = cfg.max_krylov.clamp(2, dim);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut start);

    let mut iterations = 0;
    let mut best = (f64::INFINITY, f64::INFINITY);
    for _ in 0..=cfg.max_restarts {
        let (theta, ritz, steps) = lanczos_pass(&op, &start, krylov, cfg.tol);
        iterations += steps;
        let residual = op.residual(&ritz, theta);
        if residual < best.1 {
            best = (theta, residual);
        }
        if residual <= cfg.tol {
            return Ok(QuantumValueResult {
                beta_q: theta,
                method: SolverMethod::Lanczos,
                residual,
                iterations,
            });
        }
        start = ritz;
    }
    Err(Error::NotConverged {
        estimate: best.0,
        residual: best.1,
        iterations,
    })
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    v.iter_mut().for_each(|x| *x /= n);
}

/// One Lanczos pass from `start`; returns the lowest Ritz pair and the step count.
fn lanczos_pass(op: &PauliOperator, start: &[f64], krylov: usize, tol: f64) -> (f64, Vec<f64>, usize) {
    let dim = start.len();
    let mut basis: Vec<Vec<f64>> = vec![start.to_vec()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];

    let ritz = loop {
        let k = basis.len() - 1;
        op.apply(&basis[k], &mut w);
        if k > 0 {
            let b = beta[k - 1];
            w.iter_mut().zip(&basis[k - 1]).for_each(|(x, y)| *x -= b * y);
        }
        let a = dot(&w, &basis[k]);
        w.iter_mut().zip(&basis[k]).for_each(|(x, y)| *x -= a * y);
        alpha.push(a);
        // full reorthogonalisation; a second pass only when the first one
        // removed most of the norm
        let mut before = norm(&w);
        for _ in 0..2 {
            let coefs: Vec<f64> = basis.iter().map(|q| dot(&w, q)).collect();
            for (q, &c) in basis.iter().zip(&coefs) {
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
            let after = norm(&w);
            if after > 0.7 * before {
                break;
            }
            before = after;
        }
        let b = norm(&w);

        let m = alpha.len();
        let check = m < 20 || m.is_multiple_of(4) || m == krylov || b < 1e-12;
        if check {
            let ritz = lowest_ritz(&alpha, &beta);
            let estimate = b * ritz.1[m - 1].abs();
            if estimate <= 0.1 * tol || b < 1e-12 || m == krylov {
                break ritz;
            }
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    };

    let mut x = vec![0.0; dim];
    for (q, &c) in basis.iter().zip(&ritz.1) {
        x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += c * qi);
    }
    normalize(&mut x);
    (ritz.0, x, alpha.len())
}

fn lowest_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (k, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    (theta, eig.eigenvectors.column(k).iter().copied().collect())
}

/// Quantum value with the solver picked by site count when `method` is `None`:
/// dense up to [`DENSE_MAX_SITES`], Lanczos above.
pub fn quantum_value(
    lattice: &Lattice,
    covering: &DimerCovering,
    epsilon: f64,
    method: Option<SolverMethod>,
    lanczos: &LanczosConfig,
) -> Result<QuantumValueResult> {
    let terms = build_hamiltonian(lattice, covering, epsilon)?;
    let sites = lattice.num_sites();
    let method = method.unwrap_or(if sites <= DENSE_MAX_SITES {
        SolverMethod::Dense
    } else {
        SolverMethod::Lanczos
    });
    match method {
        SolverMethod::Dense => ground_energy_dense(&terms, sites),
        SolverMethod::Lanczos => ground_energy_lanczos_with(&terms, sites, lanczos),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimers::enumerate_maximal;
    use crate::lattice::{build_lattice, BoundaryCondition};
    use std::f64::consts::SQRT_2;

    fn one_link(w: f64) -> Vec<PauliTermSpec> {
        LINK_TERMS
            .iter()
            .map(|&(ops, s)| PauliTermSpec {
                site_a: 0,
                site_b: 1,
                ops,
                coefficient: s * w,
            })
            .collect()
    }

    // Explicit Kronecker products as an independent check on the bit-mask form.
    fn kron_link(w: f64) -> DMatrix<f64> {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        // site 0 is the low bit, so it is the right-hand Kronecker factor
        let k = |a: &DMatrix<f64>, b: &DMatrix<f64>| b.kronecker(a);
        (k(&x, &x) + k(&x, &z) + k(&z, &x) - k(&z, &z)) * w
    }

    #[test]
    fn term_counts() {
        let l = build_lattice(3, BoundaryCondition::Torus).unwrap();
        let c = &enumerate_maximal(&l).unwrap()[0];
        let terms = build_hamiltonian(&l, c, 0.3).unwrap();
        assert_eq!(terms.len(), 72);
        assert_eq!(PauliOperator::new(&terms, 9).unwrap().dim(), 512);

        let at_one = build_hamiltonian(&l, c, 1.0).unwrap();
        for (k, t) in at_one.iter().enumerate() {
            let edge = k / 4;
            if !c.contains(edge) {
                assert_eq!(t.coefficient, 0.0);
            }
        }
    }

    #[test]
    fn compiled_matches_kronecker() {
        let m = PauliOperator::new(&one_link(1.5), 2).unwrap().to_dense();
        assert!((m - kron_link(1.5)).abs().max() < 1e-15);
    }

    #[test]
    fn single_link_square_and_spectrum() {
        let w = 0.75;
        let b = PauliOperator::new(&one_link(w), 2).unwrap().to_dense();
        // B^2 = w^2 (4 + 4 YY); YY is real: -(XZ)(XZ)
        let yy = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 0.0, -1.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            -1.0, 0.0, 0.0, 0.0,
        ]);
        let expected = (DMatrix::identity(4, 4) * 4.0 + yy * 4.0) * (w * w);
        assert!((&b * &b - expected).abs().max() < 1e-12);
        let mut ev: Vec<f64> = SymmetricEigen::new(b).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let r = 2.0 * SQRT_2 * w;
        for (got, want) in ev.iter().zip([-r, 0.0, 0.0, r]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn single_link_dense() {
        let r = ground_energy_dense(&one_link(1.0), 2).unwrap();
        assert!((r.beta_q + 2.0 * SQRT_2).abs() < 1e-12);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn hermitian() {
        let l = build_lattice(3, BoundaryCondition::KleinBottle).unwrap();
        let c = &enumerate_maximal(&l).unwrap()[4];
        let m = PauliOperator::new(&build_hamiltonian(&l, c, 0.37).unwrap(), 9).unwrap().to_dense();
        assert_eq!(m.transpose(), m);
    }

    #[test]
    fn matvec_matches_dense() {
        let l = build_lattice(3, BoundaryCondition::Torus).unwrap();
        let c = &enumerate_maximal(&l).unwrap()[9];
        let op = PauliOperator::new(&build_hamiltonian(&l, c, 0.61).unwrap(), 9).unwrap();
        let m = op.to_dense();
        let v: Vec<f64> = (0..512).map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0).collect();
        let mut out = vec![0.0; 512];
        op.apply(&v, &mut out);
        let want = &m * nalgebra::DVector::from_vec(v);
        for (a, b) in out.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eps_one_closed_form_3x3() {
        let l = build_lattice(3, BoundaryCondition::Torus).unwrap();
        let c = &enumerate_maximal(&l).unwrap()[0];
        let terms = build_hamiltonian(&l, c, 1.0).unwrap();
        let d = ground_energy_dense(&terms, 9).unwrap();
        assert!((d.beta_q + 16.0 * SQRT_2).abs() < 1e-10);
        let z = ground_energy_lanczos(&terms, 9, 1e-8).unwrap();
        assert!((z.beta_q + 16.0 * SQRT_2).abs() < 1e-8);
        assert!(z.residual <= 1e-8);
    }

    #[test]
    fn lanczos_matches_dense() {
        let l = build_lattice(3, BoundaryCondition::KleinBottle).unwrap();
        let covs = enumerate_maximal(&l).unwrap();
        for c in covs.iter().step_by(20) {
            for eps in [0.0, 0.4, 1.3] {
                let terms = build_hamiltonian(&l, c, eps).unwrap();
                let d = ground_energy_dense(&terms, 9).unwrap().beta_q;
                let z = ground_energy_lanczos(&terms, 9, 1e-8).unwrap().beta_q;
                assert!((d - z).abs() < 1e-8, "{d} vs {z}");
            }
        }
    }

    #[test]
    fn lanczos_below_product_state() {
        let l = build_lattice(3, BoundaryCondition::Torus).unwrap();
        let c = &enumerate_maximal(&l).unwrap()[30];
        let terms = build_hamiltonian(&l, c, 0.8).unwrap();
        let op = PauliOperator::new(&terms, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let angles: Vec<f64> = (0..9).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
        let product: Vec<f64> = (0..512usize)
            .map(|x| {
                (0..9)
                    .map(|s| if x >> s & 1 == 0 { angles[s].cos() } else { angles[s].sin() })
                    .product()
            })
            .collect();
        let z = ground_energy_lanczos(&terms, 9, 1e-8).unwrap();
        assert!(z.beta_q <= op.rayleigh_quotient(&product));
    }

    #[test]
    fn size_caps_and_bad_tolerance() {
        assert!(matches!(
            ground_energy_dense(&one_link(1.0), 13),
            Err(Error::SizeCap { .. })
        ));
        assert!(ground_energy_lanczos(&one_link(1.0), 2, 0.0).is_err());
        assert!(PauliOperator::new(&one_link(1.0), 27).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let l = build_lattice(3, BoundaryCondition::Torus).unwrap();
        let c = &enumerate_maximal(&l).unwrap()[11];
        let terms = build_hamiltonian(&l, c, 0.55).unwrap();
        let a = ground_energy_lanczos(&terms, 9, 1e-8).unwrap();
        let b = ground_energy_lanczos(&terms, 9, 1e-8).unwrap();
        assert_eq!(a, b);
    }
}
