//! Violation-interval endpoints and bound sweeps.
//!
//! A covering violates its Bell inequality where `beta_q < beta_c`. Both are
//! negative, so the sign of `beta_q / beta_c - 1` tells the two regimes apart.
//! At `eps = 1` the lattice splits into independent dimers and the ratio equals
//! `sqrt(2) - 1`; the endpoints either side of it are found by Brent-Dekker.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dimers::{CoveringClass, DimerCovering};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::quantum::{quantum_value, LanczosConfig, SolverMethod};
use crate::tropical::classical_bound_transfer;

/// Classical bounds with smaller magnitude make the ratio meaningless.
const DEGENERATE_BETA_C: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default)]
pub struct SolverConfig {
    /// `None` picks by site count.
    pub method: Option<SolverMethod>,
    pub lanczos: LanczosConfig,
}

/// Memoised `(beta_c, beta_q)` per covering and coupling.
#[derive(Debug, Default)]
pub struct BoundCache {
    map: Mutex<HashMap<(DimerCovering, u64), (f64, f64)>>,
}

impl BoundCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &(DimerCovering, u64)) -> Option<(f64, f64)> {
        self.map.lock().expect("cache lock").get(key).copied()
    }

    fn insert(&self, key: (DimerCovering, u64), value: (f64, f64)) {
        self.map.lock().expect("cache lock").entry(key).or_insert(value);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub beta_c: f64,
    pub beta_q: f64,
}

impl SweepPoint {
    pub fn ratio(&self) -> Result<f64> {
        if self.beta_c.abs() < DEGENERATE_BETA_C {
            return Err(Error::DegenerateClassicalBound { epsilon: self.epsilon });
        }
        Ok(self.beta_q / self.beta_c - 1.0)
    }
}

/// Both bounds at one coupling, through the cache when one is given.
pub fn evaluate(
    lattice: &Lattice,
    covering: &DimerCovering,
    epsilon: f64,
    solver: &SolverConfig,
    cache: Option<&BoundCache>,
) -> Result<SweepPoint> {
    let key = (covering.clone(), epsilon.to_bits());
    if let Some((beta_c, beta_q)) = cache.and_then(|c| c.get(&key)) {
        return Ok(SweepPoint { epsilon, beta_c, beta_q });
    }
    let beta_c = classical_bound_transfer(lattice, covering, epsilon)?.beta_c;
    let beta_q = quantum_value(lattice, covering, epsilon, solver.method, &solver.lanczos)?.beta_q;
    if let Some(c) = cache {
        c.insert(key, (beta_c, beta_q));
    }
    Ok(SweepPoint { epsilon, beta_c, beta_q })
}

/// `beta_q(eps) / beta_c(eps) - 1`; positive inside the violation interval.
pub fn ratio(lattice: &Lattice, covering: &DimerCovering, epsilon: f64, solver: &SolverConfig) -> Result<f64> {
    evaluate(lattice, covering, epsilon, solver, None)?.ratio()
}

/// Both bounds on every grid point, ordered by epsilon.
pub fn sweep(
    lattice: &Lattice,
    covering: &DimerCovering,
    epsilons: &[f64],
    solver: &SolverConfig,
    cache: Option<&BoundCache>,
) -> Result<Vec<SweepPoint>> {
    if epsilons.is_empty() {
        return Err(Error::InvalidInput("empty epsilon list".into()));
    }
    if let Some(bad) = epsilons.iter().find(|e| !e.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite epsilon {bad}")));
    }
    let mut grid = epsilons.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.par_iter()
        .map(|&e| evaluate(lattice, covering, e, solver, cache))
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct BrentOptions {
    /// Stop once the bracket half-width is below this...
    pub xtol: f64,
    /// ...and `|f|` at the best point is below this.
    pub ftol: f64,
    pub max_iter: usize,
}

impl Default for BrentOptions {
    fn default() -> Self {
        BrentOptions {
            xtol: 1e-3,
            ftol: 1e-3,
            max_iter: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrentOutcome {
    pub root: f64,
    pub f_root: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final bracket; always contains a sign change.
    pub bracket: (f64, f64),
}

/// Brent-Dekker root finding on `[a, b]` with `f(a) f(b) <= 0`.
pub fn brent<F>(mut f: F, a: f64, b: f64, opts: &BrentOptions) -> Result<BrentOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa * fb > 0.0 {
        return Err(Error::InvalidInput(format!(
            "no sign change on [{a}, {b}]: f = {fa}, {fb}"
        )));
    }
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let mut xtol = opts.xtol;
    for iter in 0..opts.max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if fb == 0.0 || (xm.abs() <= tol1 && fb.abs() <= opts.ftol) {
            return Ok(BrentOutcome {
                root: b,
                f_root: fb,
                iterations: iter,
                converged: true,
                bracket: (b.min(c), b.max(c)),
            });
        }
        if xm.abs() <= tol1 {
            // bracket is tight but f is not small yet
            xtol *= 0.1;
            continue;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Ok(BrentOutcome {
        root: b,
        f_root: fb,
        iterations: opts.max_iter,
        converged: false,
        bracket: (b.min(c), b.max(c)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Low,
    High,
}

#[derive(Clone, Copy, Debug)]
pub struct CriticalConfig {
    pub solver: SolverConfig,
    pub brent: BrentOptions,
    pub low_bracket: (f64, f64),
    pub high_bracket: (f64, f64),
    /// Admissible couplings; brackets never leave `[domain.0, domain.1]`.
    pub domain: (f64, f64),
    pub expansion: f64,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        CriticalConfig {
            solver: SolverConfig {
                method: None,
                lanczos: LanczosConfig {
                    tol: 1e-8,
                    ..Default::default()
                },
            },
            brent: BrentOptions::default(),
            low_bracket: (0.05, 1.0),
            high_bracket: (1.0, 1.95),
            domain: (0.0, 2.0),
            expansion: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    /// `None` when the ratio keeps one sign across the admissible domain.
    pub epsilon: Option<f64>,
    pub ratio: Option<f64>,
    pub converged: bool,
    /// Sign-changing bracket handed to the root finder (or the last one tried).
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Records every evaluation made during one search.
struct Tracer<'a> {
    lattice: &'a Lattice,
    covering: &'a DimerCovering,
    solver: &'a SolverConfig,
    cache: Option<&'a BoundCache>,
    trace: Vec<SweepPoint>,
}

impl Tracer<'_> {
    fn ratio(&mut self, epsilon: f64) -> Result<f64> {
        let p = evaluate(self.lattice, self.covering, epsilon, self.solver, self.cache)?;
        self.trace.push(p);
        p.ratio()
    }
}

fn search(t: &mut Tracer<'_>, side: Side, cfg: &CriticalConfig) -> Result<CriticalPoint> {
    // `inner` sits on the violating side, `outer` moves toward the domain edge
    let (inner, mut outer, edge) = match side {
        Side::Low => (cfg.low_bracket.1, cfg.low_bracket.0, cfg.domain.0),
        Side::High => (cfg.high_bracket.0, cfg.high_bracket.1, cfg.domain.1),
    };
    if !(cfg.expansion > 1.0) {
        return Err(Error::InvalidInput(format!("expansion factor must exceed 1, got {}", cfg.expansion)));
    }
    let f_inner = t.ratio(inner)?;
    let mut near = (inner, f_inner);
    let mut f_outer = t.ratio(outer)?;
    while f_outer * f_inner > 0.0 {
        if outer == edge {
            return Ok(CriticalPoint {
                epsilon: None,
                ratio: None,
                converged: false,
                bracket: (inner.min(outer), inner.max(outer)),
                iterations: 0,
            });
        }
        near = (outer, f_outer);
        let width = (outer - inner) * cfg.expansion;
        let next = inner + width;
        outer = if (next - edge) * (outer - edge) <= 0.0 { edge } else { next };
        f_outer = t.ratio(outer)?;
    }
    let (lo, hi) = (near.0.min(outer), near.0.max(outer));
    let out = brent(|e| t.ratio(e), lo, hi, &cfg.brent)?;
    Ok(CriticalPoint {
        epsilon: Some(out.root),
        ratio: Some(out.f_root),
        converged: out.converged,
        bracket: (lo, hi),
        iterations: out.iterations,
    })
}

/// One endpoint of the violation interval.
pub fn find_critical(
    lattice: &Lattice,
    covering: &DimerCovering,
    side: Side,
    config: &CriticalConfig,
    cache: Option<&BoundCache>,
) -> Result<CriticalPoint> {
    let mut t = Tracer {
        lattice,
        covering,
        solver: &config.solver,
        cache,
        trace: Vec::new(),
    };
    search(&mut t, side, config)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationResult {
    pub class_id: usize,
    pub covering_id: String,
    pub eps_low: Option<f64>,
    pub eps_high: Option<f64>,
    pub bracket_low: (f64, f64),
    pub bracket_high: (f64, f64),
    pub converged: bool,
    /// Every `(epsilon, beta_c, beta_q)` evaluated, ordered by epsilon.
    #[serde(with = "trace_rows")]
    pub trace: Vec<SweepPoint>,
}

mod trace_rows {
    use super::SweepPoint;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[SweepPoint], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|p| [p.epsilon, p.beta_c, p.beta_q])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<SweepPoint>, D::Error> {
        let rows = Vec::<[f64; 3]>::deserialize(d)?;
        Ok(rows
            .into_iter()
            .map(|[epsilon, beta_c, beta_q]| SweepPoint { epsilon, beta_c, beta_q })
            .collect())
    }
}

/// Both endpoints for one covering.
pub fn violation_interval(
    lattice: &Lattice,
    covering: &DimerCovering,
    class_id: usize,
    config: &CriticalConfig,
    cache: Option<&BoundCache>,
) -> Result<ViolationResult> {
    let mut t = Tracer {
        lattice,
        covering,
        solver: &config.solver,
        cache,
        trace: Vec::new(),
    };
    let low = search(&mut t, Side::Low, config)?;
    let high = search(&mut t, Side::High, config)?;
    let mut trace = t.trace;
    trace.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    trace.dedup_by(|a, b| a.epsilon == b.epsilon);
    Ok(ViolationResult {
        class_id,
        covering_id: covering.id(),
        eps_low: low.epsilon,
        eps_high: high.epsilon,
        bracket_low: low.bracket,
        bracket_high: high.bracket,
        converged: low.converged && high.converged,
        trace,
    })
}

/// Violation intervals of each class representative, in parallel. Failures
/// stay per class.
pub fn critical_batch(
    lattice: &Lattice,
    coverings: &[DimerCovering],
    classes: &[CoveringClass],
    config: &CriticalConfig,
    cache: Option<&BoundCache>,
) -> Vec<Result<ViolationResult>> {
    classes
        .par_iter()
        .map(|cls| {
            violation_interval(lattice, cls.representative_covering(coverings), cls.class_id, config, cache)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimers::{classify, enumerate_maximal};
    use crate::lattice::{build_lattice, BoundaryCondition};
    use std::f64::consts::SQRT_2;

    #[test]
    fn brent_sqrt2() {
        let out = brent(|x| Ok(x * x - 2.0), 1.0, 2.0, &BrentOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.root - SQRT_2).abs() <= 1e-3);
        assert!(out.iterations <= 100);
    }

    #[test]
    fn brent_keeps_bracket() {
        let f = |x: f64| Ok((x - 0.3).powi(3) + 1e-4 * (x - 0.3));
        let out = brent(f, -1.0, 2.0, &BrentOptions::default()).unwrap();
        let (lo, hi) = out.bracket;
        assert!(lo <= 0.3 + 1e-3 && hi >= 0.3 - 1e-3);
        assert!(out.f_root.abs() <= 1e-3);
        assert!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0, &BrentOptions::default()).is_err());
    }

    #[test]
    fn brent_flat_function_tightens() {
        // steep near the root: the bracket gets small before |f| does
        let f = |x: f64| Ok(1e4 * (x - 0.5));
        let out = brent(f, 0.0, 1.0, &BrentOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.f_root.abs() <= 1e-3);
    }

    #[test]
    fn ratio_at_one_and_zero() {
        let l = build_lattice(3, BoundaryCondition::Torus).unwrap();
        let covs = enumerate_maximal(&l).unwrap();
        let s = SolverConfig::default();
        for c in covs.iter().step_by(17) {
            assert!((ratio(&l, c, 1.0, &s).unwrap() - (SQRT_2 - 1.0)).abs() < 1e-10);
            assert!(ratio(&l, c, 0.0, &s).unwrap() < 0.0);
        }
    }

    #[test]
    fn sweep_orders_and_caches() {
        let l = build_lattice(3, BoundaryCondition::KleinBottle).unwrap();
        let c = &enumerate_maximal(&l).unwrap()[5];
        let cache = BoundCache::new();
        let s = SolverConfig::default();
        let pts = sweep(&l, c, &[1.0, 0.5, 1.5], &s, Some(&cache)).unwrap();
        assert_eq!(pts.iter().map(|p| p.epsilon).collect::<Vec<_>>(), vec![0.5, 1.0, 1.5]);
        assert_eq!(cache.len(), 3);
        assert!((pts[1].beta_c + 16.0).abs() < 1e-12);
        assert!((pts[1].beta_q + 16.0 * SQRT_2).abs() < 1e-10);
        let again = sweep(&l, c, &[0.5], &s, Some(&cache)).unwrap();
        assert_eq!(again[0], pts[0]);
        assert!(sweep(&l, c, &[], &s, None).is_err());
    }

    #[test]
    fn torus_3x3_intervals() {
        let l = build_lattice(3, BoundaryCondition::Torus).unwrap();
        let covs = enumerate_maximal(&l).unwrap();
        let classes = classify(&l, &covs).unwrap();
        let cfg = CriticalConfig::default();
        let cache = BoundCache::new();
        for r in critical_batch(&l, &covs, &classes, &cfg, Some(&cache)) {
            let r = r.unwrap();
            assert!(r.converged);
            let (lo, hi) = (r.eps_low.unwrap(), r.eps_high.unwrap());
            assert!(lo < 1.0 && 1.0 < hi, "{lo} {hi}");
            let c = classes[r.class_id].representative_covering(&covs);
            for e in [lo, hi] {
                assert!(ratio(&l, c, e, &cfg.solver).unwrap().abs() <= 1e-3);
            }
            assert!(r.trace.windows(2).all(|w| w[0].epsilon < w[1].epsilon));
        }
    }

    #[test]
    fn no_crossing_reported() {
        // a domain that stops short of the low endpoint
        let l = build_lattice(3, BoundaryCondition::Torus).unwrap();
        let c = &enumerate_maximal(&l).unwrap()[0];
        let cfg = CriticalConfig {
            low_bracket: (0.97, 1.0),
            domain: (0.95, 2.0),
            ..Default::default()
        };
        let p = find_critical(&l, c, Side::Low, &cfg, None).unwrap();
        assert_eq!(p.epsilon, None);
        assert!(!p.converged);
    }
}
