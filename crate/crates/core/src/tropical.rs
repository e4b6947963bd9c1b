//! Min-plus linear algebra and the classical bound of the lattice inequality.
//!
//! The classical bound is the minimum of the weighted CHSH sum over all local
//! deterministic strategies. [`classical_bound_transfer`] groups the sites of
//! each column into one variable with `4^n` states and closes the resulting
//! periodic chain with a tropical trace:
//!
//! ```text
//! beta_C = tropTrace(T_0 ⊙ T_1 ⊙ ... ⊙ T_{n-1}),
//! T_j[u, v] = C_j(u) + H_j(u, v)
//! ```
//!
//! `C_j` holds the vertical links of column `j` (wrap included) and `H_j` the
//! horizontal links from column `j` to `j + 1`. On the Klein bottle the closing
//! factor pairs row `i` of the last column with row `n - 1 - i` of column 0.
//! The horizontal part is a sum of independent per-row terms, so `x ⊙ T_j` is
//! applied one row digit at a time instead of materialising `T_j`.

use rayon::prelude::*;

use crate::bellcore::{chsh_table, link_weights, Strategy, StrategyAssignment};
use crate::dimers::DimerCovering;
use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, Direction, Lattice};

/// Largest site count accepted by [`classical_bound_bruteforce`].
pub const BRUTEFORCE_MAX_SITES: usize = 10;
/// Largest side length accepted by [`classical_bound_transfer`] by default.
pub const DEFAULT_MAX_TRANSFER_SIDE: usize = 7;
/// Largest side length for which dense column matrices are built.
pub const DENSE_MAX_SIDE: usize = 5;

/// Square matrix over `(R ∪ {+inf}, min, +)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TropicalMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl TropicalMatrix {
    /// All entries `+inf` (the tropical zero).
    pub fn zeros(dim: usize) -> Self {
        TropicalMatrix {
            dim,
            data: vec![f64::INFINITY; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidInput("tropical matrix must be non-empty".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(TropicalMatrix { dim, data })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        TropicalMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// Entrywise minimum (tropical sum).
    pub fn oplus(&self, other: &TropicalMatrix) -> Result<TropicalMatrix> {
        self.check_dim(other)?;
        Ok(TropicalMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.min(*b)).collect(),
        })
    }

    /// `(A ⊙ B)_ij = min_l A_il + B_lj`.
    pub fn odot(&self, other: &TropicalMatrix) -> Result<TropicalMatrix> {
        self.check_dim(other)?;
        let dim = self.dim;
        let mut data = vec![f64::INFINITY; dim * dim];
        data.par_chunks_mut(dim).enumerate().for_each(|(i, out)| {
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == f64::INFINITY {
                    continue;
                }
                for (o, &b) in out.iter_mut().zip(other.row(l)) {
                    let v = a + b;
                    if v < *o {
                        *o = v;
                    }
                }
            }
        });
        Ok(TropicalMatrix { dim, data })
    }

    /// `A^{⊙k}`; `k = 0` gives the tropical identity.
    pub fn power(&self, k: usize) -> TropicalMatrix {
        (0..k).fold(Self::identity(self.dim), |acc, _| {
            acc.odot(self).expect("square powers share a dimension")
        })
    }

    /// Minimal diagonal entry.
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).fold(f64::INFINITY, f64::min)
    }

    fn check_dim(&self, other: &TropicalMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }
}

pub fn trop_matmul(a: &TropicalMatrix, b: &TropicalMatrix) -> Result<TropicalMatrix> {
    a.odot(b)
}

pub fn trop_trace(a: &TropicalMatrix) -> f64 {
    a.trace()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalBoundResult {
    pub beta_c: f64,
    pub optimal_assignment: Option<StrategyAssignment>,
    pub epsilon: f64,
}

/// Minimum of `sum w * chsh(s_a, s_b)` over all `4^sites` assignments.
/// Ties go to the lowest base-4 index (site 0 least significant).
pub fn bruteforce_min(sites: usize, links: &[(usize, usize, f64)]) -> Result<(f64, u64)> {
    if sites > BRUTEFORCE_MAX_SITES {
        return Err(Error::SizeCap {
            what: "brute-force site count",
            got: sites,
            limit: BRUTEFORCE_MAX_SITES,
        });
    }
    let table = chsh_table();
    let total = 1u64 << (2 * sites);
    let chunks = (total / 4096).clamp(1, 256);
    let per = total.div_ceil(chunks);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * per;
            let end = (start + per).min(total);
            let mut digits: Vec<usize> = (0..sites).map(|k| ((start >> (2 * k)) & 3) as usize).collect();
            let mut best = (f64::INFINITY, start);
            for idx in start..end {
                let v: f64 = links.iter().map(|&(a, b, w)| w * table[digits[a]][digits[b]]).sum();
                if v < best.0 {
                    best = (v, idx);
                }
                for d in digits.iter_mut() {
                    *d += 1;
                    if *d < 4 {
                        break;
                    }
                    *d = 0;
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |x, y| if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x },
        );
    Ok(best)
}

/// Exhaustive classical bound; only for lattices with at most
/// [`BRUTEFORCE_MAX_SITES`] sites.
pub fn classical_bound_bruteforce(
    lattice: &Lattice,
    covering: &DimerCovering,
    epsilon: f64,
) -> Result<ClassicalBoundResult> {
    covering.check_lattice(lattice)?;
    let weights = link_weights(lattice, covering, epsilon);
    let links: Vec<_> = lattice
        .edges()
        .iter()
        .zip(&weights)
        .map(|(e, &w)| (e.a, e.b, w))
        .collect();
    let (beta_c, idx) = bruteforce_min(lattice.num_sites(), &links)?;
    Ok(ClassicalBoundResult {
        beta_c,
        optimal_assignment: Some(StrategyAssignment::from_index(idx, lattice.num_sites())),
        epsilon,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct TransferOptions {
    pub max_side: usize,
    /// Backtrack through argmin tables to report one optimal assignment.
    pub recover_assignment: bool,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions {
            max_side: DEFAULT_MAX_TRANSFER_SIDE,
            recover_assignment: false,
        }
    }
}

/// Per-column link weights in transfer order.
struct ColumnLinks {
    n: usize,
    klein: bool,
    /// `vertical[j][i]`: link from `(i, j)` to the site below it.
    vertical: Vec<Vec<f64>>,
    /// `horizontal[j][i]`: link from `(i, j)` to its right neighbour.
    horizontal: Vec<Vec<f64>>,
}

impl ColumnLinks {
    fn new(lattice: &Lattice, covering: &DimerCovering, epsilon: f64) -> Self {
        let n = lattice.n();
        let weights = link_weights(lattice, covering, epsilon);
        let w = |s, d| {
            let t = lattice.neighbor(s, d);
            weights[lattice.edge_index(s, t).expect("neighbor is linked")]
        };
        let vertical = (0..n)
            .map(|j| (0..n).map(|i| w(lattice.site(i, j), Direction::Down)).collect())
            .collect();
        let horizontal = (0..n)
            .map(|j| (0..n).map(|i| w(lattice.site(i, j), Direction::Right)).collect())
            .collect();
        ColumnLinks {
            n,
            klein: lattice.boundary() == BoundaryCondition::KleinBottle,
            vertical,
            horizontal,
        }
    }

    fn states(&self) -> usize {
        1 << (2 * self.n)
    }

    /// `C_j(u)` for every column state `u`.
    fn column_energy(&self, j: usize) -> Vec<f64> {
        let table = chsh_table();
        let n = self.n;
        (0..self.states())
            .map(|u| {
                (0..n)
                    .map(|i| {
                        let a = digit(u, i);
                        let b = digit(u, (i + 1) % n);
                        self.vertical[j][i] * table[a][b]
                    })
                    .sum()
            })
            .collect()
    }

    /// Column-0 state as seen through the closing seam: identity on the
    /// torus, row-reversed on the Klein bottle.
    fn closure_index(&self, u0: usize) -> usize {
        if self.klein {
            reverse_digits(u0, self.n)
        } else {
            u0
        }
    }
}

fn digit(state: usize, i: usize) -> usize {
    (state >> (2 * i)) & 3
}

fn reverse_digits(state: usize, n: usize) -> usize {
    (0..n).fold(0, |acc, i| acc | (digit(state, i) << (2 * (n - 1 - i))))
}

/// Replaces digit `i` of the state index: `out[s'] = min_a x[s'|i=a] + w * chsh(a, s'_i)`.
fn relax_digit(x: &[f64], out: &mut [f64], i: usize, w: f64, mut argmin: Option<&mut [u8]>) {
    let table = chsh_table();
    let shift = 2 * i;
    let mask = !(3usize << shift);
    for (s, o) in out.iter_mut().enumerate() {
        let b = digit(s, i);
        let base = s & mask;
        let mut best = f64::INFINITY;
        let mut arg = 0u8;
        for a in 0..4 {
            let v = x[base | (a << shift)] + w * table[a][b];
            if v < best {
                best = v;
                arg = a as u8;
            }
        }
        *o = best;
        if let Some(am) = argmin.as_deref_mut() {
            am[s] = arg;
        }
    }
}

/// Runs the column chain from a fixed column-0 state. Returns the closed-loop
/// value and, when requested, the argmin tables indexed `[j * n + i]`.
fn chain_from(links: &ColumnLinks, energies: &[Vec<f64>], u0: usize, record: bool) -> (f64, Vec<Vec<u8>>) {
    let n = links.n;
    let states = links.states();
    let mut x = vec![f64::INFINITY; states];
    x[u0] = 0.0;
    let mut y = vec![0.0; states];
    let mut tables = Vec::new();
    for j in 0..n {
        for (xv, c) in x.iter_mut().zip(&energies[j]) {
            *xv += c;
        }
        for i in 0..n {
            let mut am = if record { vec![0u8; states] } else { Vec::new() };
            relax_digit(&x, &mut y, i, links.horizontal[j][i], record.then_some(am.as_mut_slice()));
            std::mem::swap(&mut x, &mut y);
            if record {
                tables.push(am);
            }
        }
    }
    (x[links.closure_index(u0)], tables)
}

pub fn classical_bound_transfer(
    lattice: &Lattice,
    covering: &DimerCovering,
    epsilon: f64,
) -> Result<ClassicalBoundResult> {
    classical_bound_transfer_with(lattice, covering, epsilon, &TransferOptions::default())
}

pub fn classical_bound_transfer_with(
    lattice: &Lattice,
    covering: &DimerCovering,
    epsilon: f64,
    opts: &TransferOptions,
) -> Result<ClassicalBoundResult> {
    covering.check_lattice(lattice)?;
    let n = lattice.n();
    if n > opts.max_side {
        return Err(Error::SizeCap {
            what: "transfer-matrix side length",
            got: n,
            limit: opts.max_side,
        });
    }
    let links = ColumnLinks::new(lattice, covering, epsilon);
    let energies: Vec<Vec<f64>> = (0..n).map(|j| links.column_energy(j)).collect();

    let (beta_c, u0) = (0..links.states())
        .into_par_iter()
        .map(|u0| (chain_from(&links, &energies, u0, false).0, u0))
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );

    let optimal_assignment = opts
        .recover_assignment
        .then(|| recover_assignment(&links, &energies, u0));
    Ok(ClassicalBoundResult {
        beta_c,
        optimal_assignment,
        epsilon,
    })
}

fn recover_assignment(links: &ColumnLinks, energies: &[Vec<f64>], u0: usize) -> StrategyAssignment {
    let n = links.n;
    let (_, tables) = chain_from(links, energies, u0, true);
    let mut columns = vec![0usize; n];
    let mut state = links.closure_index(u0);
    for j in (0..n).rev() {
        for i in (0..n).rev() {
            let a = tables[j * n + i][state] as usize;
            state = (state & !(3 << (2 * i))) | (a << (2 * i));
        }
        columns[j] = state;
    }
    debug_assert_eq!(columns[0], u0);
    let mut sites = vec![Strategy::ALL[0]; n * n];
    for (j, &u) in columns.iter().enumerate() {
        for i in 0..n {
            sites[i * n + j] = Strategy::ALL[digit(u, i)];
        }
    }
    StrategyAssignment(sites)
}

/// Dense column matrices `T_j[u, v] = C_j(u) + H_j(u, v)`; the last one carries
/// the closing seam.
pub fn column_transfer_matrices(
    lattice: &Lattice,
    covering: &DimerCovering,
    epsilon: f64,
) -> Result<Vec<TropicalMatrix>> {
    covering.check_lattice(lattice)?;
    let n = lattice.n();
    if n > DENSE_MAX_SIDE {
        return Err(Error::SizeCap {
            what: "dense transfer-matrix side length",
            got: n,
            limit: DENSE_MAX_SIDE,
        });
    }
    let table = chsh_table();
    let links = ColumnLinks::new(lattice, covering, epsilon);
    Ok((0..n)
        .map(|j| {
            let energy = links.column_energy(j);
            let seam = j == n - 1 && links.klein;
            TropicalMatrix::from_fn(links.states(), |u, v| {
                let h: f64 = (0..n)
                    .map(|i| {
                        let partner = if seam { digit(v, n - 1 - i) } else { digit(v, i) };
                        links.horizontal[j][i] * table[digit(u, i)][partner]
                    })
                    .sum();
                energy[u] + h
            })
        })
        .collect())
}

/// `tropTrace` of the product of the dense column matrices.
pub fn classical_bound_dense(lattice: &Lattice, covering: &DimerCovering, epsilon: f64) -> Result<f64> {
    let mats = column_transfer_matrices(lattice, covering, epsilon)?;
    let mut iter = mats.into_iter();
    let first = iter.next().expect("n >= 3 columns");
    let product = iter.try_fold(first, |acc, m| acc.odot(&m))?;
    Ok(product.trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellcore::bell_value;
    use crate::dimers::enumerate_maximal;
    use crate::lattice::build_lattice;
    use proptest::prelude::{prop_assert_eq, prop_oneof, proptest, Just};
    use proptest::strategy::Strategy as PropStrategy;

    const INF: f64 = f64::INFINITY;

    fn w() -> TropicalMatrix {
        TropicalMatrix::from_rows(&[vec![1.0, 2.0, INF], vec![INF, 3.0, 4.0], vec![5.0, 6.0, 1.0]]).unwrap()
    }

    #[test]
    fn worked_example() {
        let w2 = trop_matmul(&w(), &w()).unwrap();
        let expected = vec![vec![2.0, 3.0, 6.0], vec![9.0, 6.0, 5.0], vec![6.0, 7.0, 2.0]];
        assert_eq!(w2.to_rows(), expected);
        assert_eq!(trop_trace(&w2), 2.0);
        // vertex 1 -> 2, one-based
        assert_eq!(w2.get(0, 1), 3.0);
        assert_eq!(w().power(2), w2);
    }

    #[test]
    fn identity_and_absorbing_row() {
        let id = TropicalMatrix::identity(3);
        assert_eq!(w().odot(&id).unwrap(), w());
        assert_eq!(id.odot(&w()).unwrap(), w());
        assert_eq!(trop_trace(&id), 0.0);
        let mut a = w();
        for j in 0..3 {
            a.set(1, j, INF);
        }
        let p = a.odot(&w()).unwrap();
        assert!(p.row(1).iter().all(|v| *v == INF));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            w().odot(&TropicalMatrix::identity(2)),
            Err(Error::DimensionMismatch { left: 3, right: 2 })
        ));
        assert!(TropicalMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn single_link() {
        for w in [0.5, 1.0, 3.25] {
            let (v, _) = bruteforce_min(2, &[(0, 1, w)]).unwrap();
            assert_eq!(v, -2.0 * w);
        }
    }

    #[test]
    fn bruteforce_cap() {
        let l = build_lattice(4, BoundaryCondition::Torus).unwrap();
        let c = &enumerate_maximal(&l).unwrap()[0];
        assert!(matches!(
            classical_bound_bruteforce(&l, c, 0.0),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn transfer_cap() {
        let l = build_lattice(4, BoundaryCondition::Torus).unwrap();
        let c = &enumerate_maximal(&l).unwrap()[0];
        let opts = TransferOptions {
            max_side: 3,
            ..Default::default()
        };
        assert!(classical_bound_transfer_with(&l, c, 0.5, &opts).is_err());
    }

    #[test]
    fn eps_one_decouples() {
        for b in [BoundaryCondition::Torus, BoundaryCondition::KleinBottle] {
            let l = build_lattice(3, b).unwrap();
            for c in enumerate_maximal(&l).unwrap().iter().step_by(7) {
                assert_eq!(classical_bound_bruteforce(&l, c, 1.0).unwrap().beta_c, -16.0);
                assert_eq!(classical_bound_transfer(&l, c, 1.0).unwrap().beta_c, -16.0);
            }
        }
    }

    #[test]
    fn dense_and_factored_agree() {
        for b in [BoundaryCondition::Torus, BoundaryCondition::KleinBottle] {
            for n in [3, 4] {
                let l = build_lattice(n, b).unwrap();
                let covs = enumerate_maximal(&l).unwrap();
                for c in covs.iter().step_by(covs.len() / 3) {
                    for eps in [0.0, 0.5, 1.25] {
                        let dense = classical_bound_dense(&l, c, eps).unwrap();
                        let fact = classical_bound_transfer(&l, c, eps).unwrap().beta_c;
                        assert_eq!(dense, fact, "n={n} {b} eps={eps}");
                    }
                }
            }
        }
    }

    #[test]
    fn recovered_assignment_attains_bound() {
        let opts = TransferOptions {
            recover_assignment: true,
            ..Default::default()
        };
        for b in [BoundaryCondition::Torus, BoundaryCondition::KleinBottle] {
            for n in [3, 4] {
                let l = build_lattice(n, b).unwrap();
                let covs = enumerate_maximal(&l).unwrap();
                for c in covs.iter().step_by(5) {
                    for eps in [0.0, 0.5, 1.25, 0.3] {
                        let r = classical_bound_transfer_with(&l, c, eps, &opts).unwrap();
                        let s = r.optimal_assignment.unwrap();
                        let v = bell_value(&l, c, eps, &s).unwrap();
                        assert!((v - r.beta_c).abs() < 1e-12, "{v} vs {}", r.beta_c);
                    }
                }
            }
        }
    }

    fn small_matrix() -> impl PropStrategy<Value = TropicalMatrix> {
        let entry = prop_oneof![4 => (-8i32..8).prop_map(|v| v as f64 * 0.5), 1 => Just(INF)];
        proptest::collection::vec(entry, 9).prop_map(|data| TropicalMatrix { dim: 3, data })
    }

    proptest! {
        #[test]
        fn semiring_laws(a in small_matrix(), b in small_matrix(), c in small_matrix()) {
            prop_assert_eq!(a.oplus(&b).unwrap(), b.oplus(&a).unwrap());
            prop_assert_eq!(a.oplus(&a).unwrap(), a.clone());
            prop_assert_eq!(a.oplus(&b).unwrap().oplus(&c).unwrap(), a.oplus(&b.oplus(&c).unwrap()).unwrap());
            let ab_c = a.odot(&b).unwrap().odot(&c).unwrap();
            let a_bc = a.odot(&b.odot(&c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            let left = a.odot(&b.oplus(&c).unwrap()).unwrap();
            let right = a.odot(&b).unwrap().oplus(&a.odot(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }
    }
}
