//! Maximum dimer coverings, lattice symmetry operations, and orbit classification.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, Lattice, SiteId};

/// Default ceiling on the number of coverings `enumerate_maximal` will return.
pub const DEFAULT_COVERING_CAP: usize = 2_000_000;

/// A maximum-cardinality matching, stored as sorted edge indices of its lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DimerCovering {
    n: usize,
    boundary: BoundaryCondition,
    edges: Vec<usize>,
}

impl DimerCovering {
    /// Validates that `edges` is a maximum matching of `lattice`.
    pub fn new(lattice: &Lattice, mut edges: Vec<usize>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        let num_edges = lattice.edges().len();
        let mut covered = vec![false; lattice.num_sites()];
        for &e in &edges {
            if e >= num_edges {
                return Err(Error::InvalidInput(format!("edge index {e} out of range")));
            }
            let edge = lattice.edges()[e];
            for s in [edge.a, edge.b] {
                if covered[s] {
                    return Err(Error::InvalidInput(format!(
                        "site {s} is covered by two dimers"
                    )));
                }
                covered[s] = true;
            }
        }
        let want = lattice.num_sites() / 2;
        if edges.len() != want {
            return Err(Error::InvalidInput(format!(
                "covering has {} dimers, a maximum covering has {want}",
                edges.len()
            )));
        }
        Ok(Self::from_sorted(lattice, edges))
    }

    fn from_sorted(lattice: &Lattice, edges: Vec<usize>) -> Self {
        DimerCovering {
            n: lattice.n(),
            boundary: lattice.boundary(),
            edges,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.boundary
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn num_dimers(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.edges.binary_search(&edge).is_ok()
    }

    /// Per-edge membership flags, indexed like `lattice.edges()`.
    pub fn dimer_mask(&self, lattice: &Lattice) -> Vec<bool> {
        let mut mask = vec![false; lattice.edges().len()];
        for &e in &self.edges {
            mask[e] = true;
        }
        mask
    }

    /// Sites left uncovered (one for odd `n`, none otherwise).
    pub fn monomers(&self, lattice: &Lattice) -> Vec<SiteId> {
        let mut covered = vec![false; lattice.num_sites()];
        for &e in &self.edges {
            let edge = lattice.edges()[e];
            covered[edge.a] = true;
            covered[edge.b] = true;
        }
        (0..covered.len()).filter(|&s| !covered[s]).collect()
    }

    /// Content hash of the sorted edge list (first 16 hex digits of SHA-256).
    pub fn id(&self) -> String {
        let mut hasher = Sha256::new();
        for &e in &self.edges {
            hasher.update((e as u32).to_le_bytes());
        }
        hex::encode(hasher.finalize())[..16].to_string()
    }

    pub fn check_lattice(&self, lattice: &Lattice) -> Result<()> {
        if self.n != lattice.n() || self.boundary != lattice.boundary() {
            return Err(Error::LatticeMismatch {
                expected: lattice.boundary(),
                expected_n: lattice.n(),
                found: self.boundary,
                found_n: self.n,
            });
        }
        Ok(())
    }
}

/// Enumerates every maximum dimer covering, sorted by edge set.
pub fn enumerate_maximal(lattice: &Lattice) -> Result<Vec<DimerCovering>> {
    enumerate_maximal_with_cap(lattice, DEFAULT_COVERING_CAP)
}

pub fn enumerate_maximal_with_cap(lattice: &Lattice, cap: usize) -> Result<Vec<DimerCovering>> {
    let sites = lattice.num_sites();
    let incident: Vec<Vec<(usize, SiteId)>> = (0..sites)
        .map(|s| {
            let mut v: Vec<_> = lattice
                .incident_edges(s)
                .map(|e| {
                    let edge = lattice.edges()[e];
                    (e, if edge.a == s { edge.b } else { edge.a })
                })
                .collect();
            v.sort_unstable();
            v
        })
        .collect();

    let mut search = Backtrack {
        incident: &incident,
        covered: vec![false; sites],
        chosen: Vec::with_capacity(sites / 2),
        monomers_left: sites % 2,
        found: Vec::new(),
        cap,
    };
    search.run(0)?;

    let mut out: Vec<DimerCovering> = search
        .found
        .into_iter()
        .map(|mut edges| {
            edges.sort_unstable();
            DimerCovering::from_sorted(lattice, edges)
        })
        .collect();
    out.sort();
    Ok(out)
}

struct Backtrack<'a> {
    incident: &'a [Vec<(usize, SiteId)>],
    covered: Vec<bool>,
    chosen: Vec<usize>,
    monomers_left: usize,
    found: Vec<Vec<usize>>,
    cap: usize,
}

impl Backtrack<'_> {
    // The lowest uncovered site is either paired with a free neighbour or,
    // while the monomer budget lasts, left empty. Each matching is reached once.
    fn run(&mut self, from: SiteId) -> Result<()> {
        let sites = self.covered.len();
        let Some(s) = (from..sites).find(|&s| !self.covered[s]) else {
            if self.found.len() == self.cap {
                return Err(Error::SizeCap {
                    what: "dimer covering count",
                    got: self.cap + 1,
                    limit: self.cap,
                });
            }
            self.found.push(self.chosen.clone());
            return Ok(());
        };
        self.covered[s] = true;
        for &(e, t) in &self.incident[s] {
            if self.covered[t] {
                continue;
            }
            self.covered[t] = true;
            self.chosen.push(e);
            self.run(s + 1)?;
            self.chosen.pop();
            self.covered[t] = false;
        }
        if self.monomers_left > 0 {
            self.monomers_left -= 1;
            self.run(s + 1)?;
            self.monomers_left += 1;
        }
        self.covered[s] = false;
        Ok(())
    }
}

/// Generators of the lattice symmetry groups acting on coverings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryOp {
    /// Columns `(a0, .., a_{n-1})` become `(a1, .., a_{n-1}, a0)`.
    RightShift,
    /// Rows `(b0, .., b_{n-1})` become `(b_{n-1}, b0, .., b_{n-2})`.
    UpShift,
    /// Column order reversed.
    VerticalMirror,
    /// Row order reversed.
    HorizontalMirror,
    /// Row `i` of the image is column `i` read bottom to top.
    Rotation90,
    /// Klein-bottle shift: `(a0, .., a_{n-1})` becomes `(a1, .., a_{n-1}, rev a0)`.
    KBRightShift,
    /// Klein-bottle mirror: `(a0, .., a_{n-1})` becomes `(rev a0, a_{n-1}, .., a1)`.
    KBVerticalMirror,
}

const TORUS_GENERATORS: [SymmetryOp; 5] = [
    SymmetryOp::RightShift,
    SymmetryOp::UpShift,
    SymmetryOp::VerticalMirror,
    SymmetryOp::HorizontalMirror,
    SymmetryOp::Rotation90,
];

const KLEIN_GENERATORS: [SymmetryOp; 2] = [SymmetryOp::KBRightShift, SymmetryOp::KBVerticalMirror];

pub fn generators(boundary: BoundaryCondition) -> &'static [SymmetryOp] {
    match boundary {
        BoundaryCondition::Torus => &TORUS_GENERATORS,
        BoundaryCondition::KleinBottle => &KLEIN_GENERATORS,
    }
}

impl SymmetryOp {
    pub fn applies_to(self, boundary: BoundaryCondition) -> bool {
        generators(boundary).contains(&self)
    }

    /// Where the site at `site` lands under this operation on an `n x n` grid.
    pub fn map_site(self, n: usize, site: SiteId) -> SiteId {
        let (i, j) = (site / n, site % n);
        let (ni, nj) = match self {
            SymmetryOp::RightShift => (i, (j + n - 1) % n),
            SymmetryOp::UpShift => ((i + 1) % n, j),
            SymmetryOp::VerticalMirror => (i, n - 1 - j),
            SymmetryOp::HorizontalMirror => (n - 1 - i, j),
            SymmetryOp::Rotation90 => (j, n - 1 - i),
            SymmetryOp::KBRightShift if j == 0 => (n - 1 - i, n - 1),
            SymmetryOp::KBRightShift => (i, j - 1),
            SymmetryOp::KBVerticalMirror if j == 0 => (n - 1 - i, 0),
            SymmetryOp::KBVerticalMirror => (i, n - j),
        };
        ni * n + nj
    }

    pub fn short_name(self) -> &'static str {
        match self {
            SymmetryOp::RightShift => "rs",
            SymmetryOp::UpShift => "us",
            SymmetryOp::VerticalMirror => "vm",
            SymmetryOp::HorizontalMirror => "hm",
            SymmetryOp::Rotation90 => "r",
            SymmetryOp::KBRightShift => "rs'",
            SymmetryOp::KBVerticalMirror => "vm'",
        }
    }
}

impl fmt::Display for SymmetryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Permutes a site-indexed slice: `out[op(s)] = values[s]`.
pub fn permute_sites<T: Clone>(n: usize, op: SymmetryOp, values: &[T]) -> Vec<T> {
    let mut out = values.to_vec();
    for (s, v) in values.iter().enumerate() {
        out[op.map_site(n, s)] = v.clone();
    }
    out
}

pub fn apply_symmetry(lattice: &Lattice, cov: &DimerCovering, op: SymmetryOp) -> Result<DimerCovering> {
    cov.check_lattice(lattice)?;
    if !op.applies_to(lattice.boundary()) {
        return Err(Error::SymmetryMismatch {
            op,
            boundary: lattice.boundary(),
        });
    }
    let n = lattice.n();
    let mut edges: Vec<usize> = cov
        .edges
        .iter()
        .map(|&e| {
            let edge = lattice.edges()[e];
            let (a, b) = (op.map_site(n, edge.a), op.map_site(n, edge.b));
            lattice
                .edge_index(a, b)
                .expect("symmetry maps lattice edges onto lattice edges")
        })
        .collect();
    edges.sort_unstable();
    Ok(DimerCovering::from_sorted(lattice, edges))
}

/// One orbit of the symmetry group. Indices refer to the covering list passed to [`classify`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringClass {
    #[serde(rename = "id")]
    pub class_id: usize,
    pub representative: usize,
    pub members: Vec<usize>,
}

impl CoveringClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn representative_covering<'a>(&self, coverings: &'a [DimerCovering]) -> &'a DimerCovering {
        &coverings[self.representative]
    }
}

/// Partitions `coverings` into orbits by depth-first search over the group
/// generators. Fails if some symmetry image is not in the list.
pub fn classify(lattice: &Lattice, coverings: &[DimerCovering]) -> Result<Vec<CoveringClass>> {
    let index: HashMap<&[usize], usize> = coverings
        .iter()
        .enumerate()
        .map(|(i, c)| (c.edges(), i))
        .collect();
    let gens = generators(lattice.boundary());
    let mut class_of = vec![usize::MAX; coverings.len()];
    let mut classes = Vec::new();
    let mut stack = Vec::new();

    for start in 0..coverings.len() {
        if class_of[start] != usize::MAX {
            continue;
        }
        let class_id = classes.len();
        let mut members = vec![start];
        class_of[start] = class_id;
        stack.push(start);
        while let Some(cur) = stack.pop() {
            for &op in gens {
                let image = apply_symmetry(lattice, &coverings[cur], op)?;
                let &next = index
                    .get(image.edges())
                    .ok_or(Error::OrbitEscape { covering: cur, op })?;
                if class_of[next] == usize::MAX {
                    class_of[next] = class_id;
                    members.push(next);
                    stack.push(next);
                }
            }
        }
        members.sort_unstable();
        classes.push(CoveringClass {
            class_id,
            representative: start,
            members,
        });
    }
    Ok(classes)
}

/// Labelled edges `(from, op, to)` of the orbit graph over `coverings`.
pub fn orbit_graph(lattice: &Lattice, coverings: &[DimerCovering]) -> Result<Vec<(usize, SymmetryOp, usize)>> {
    let index: HashMap<&[usize], usize> = coverings
        .iter()
        .enumerate()
        .map(|(i, c)| (c.edges(), i))
        .collect();
    let mut out = Vec::new();
    for (i, cov) in coverings.iter().enumerate() {
        for &op in generators(lattice.boundary()) {
            let image = apply_symmetry(lattice, cov, op)?;
            let &j = index
                .get(image.edges())
                .ok_or(Error::OrbitEscape { covering: i, op })?;
            out.push((i, op, j));
        }
    }
    Ok(out)
}

/// Number of classes with the smallest and largest class size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassStatistics {
    pub classes: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub total: usize,
}

pub fn class_statistics(classes: &[CoveringClass]) -> ClassStatistics {
    ClassStatistics {
        classes: classes.len(),
        min_size: classes.iter().map(CoveringClass::size).min().unwrap_or(0),
        max_size: classes.iter().map(CoveringClass::size).max().unwrap_or(0),
        total: classes.iter().map(CoveringClass::size).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use std::collections::HashSet;

    const T: BoundaryCondition = BoundaryCondition::Torus;
    const K: BoundaryCondition = BoundaryCondition::KleinBottle;

    fn power(l: &Lattice, c: &DimerCovering, op: SymmetryOp, k: usize) -> DimerCovering {
        (0..k).fold(c.clone(), |acc, _| apply_symmetry(l, &acc, op).unwrap())
    }

    #[test]
    fn count_3x3_torus() {
        let l = build_lattice(3, T).unwrap();
        let covs = enumerate_maximal(&l).unwrap();
        assert_eq!(covs.len(), 72);
        assert!(covs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn every_covering_is_a_maximum_matching() {
        for (n, b) in [(3, T), (3, K), (4, T), (4, K)] {
            let l = build_lattice(n, b).unwrap();
            for c in enumerate_maximal(&l).unwrap() {
                assert_eq!(c.num_dimers(), n * n / 2);
                DimerCovering::new(&l, c.edges().to_vec()).unwrap();
                assert_eq!(c.monomers(&l).len(), (n * n) % 2);
            }
        }
    }

    #[test]
    fn distinct_4x4() {
        let l = build_lattice(4, T).unwrap();
        let covs = enumerate_maximal(&l).unwrap();
        let set: HashSet<_> = covs.iter().map(|c| c.edges().to_vec()).collect();
        assert_eq!(set.len(), covs.len());
        assert!(covs.iter().all(|c| c.num_dimers() == 8));
    }

    #[test]
    fn cap_is_enforced() {
        let l = build_lattice(3, T).unwrap();
        assert!(matches!(
            enumerate_maximal_with_cap(&l, 10),
            Err(Error::SizeCap { limit: 10, .. })
        ));
        assert_eq!(enumerate_maximal_with_cap(&l, 72).unwrap().len(), 72);
    }

    #[test]
    fn torus_relations() {
        for n in [3, 4] {
            let l = build_lattice(n, T).unwrap();
            for c in enumerate_maximal(&l).unwrap() {
                assert_eq!(power(&l, &c, SymmetryOp::RightShift, n), c);
                assert_eq!(power(&l, &c, SymmetryOp::UpShift, n), c);
                assert_eq!(power(&l, &c, SymmetryOp::VerticalMirror, 2), c);
                assert_eq!(power(&l, &c, SymmetryOp::HorizontalMirror, 2), c);
                assert_eq!(power(&l, &c, SymmetryOp::Rotation90, 4), c);
                // vm rs = rs^-1 vm
                let lhs = power(&l, &power(&l, &c, SymmetryOp::RightShift, 1), SymmetryOp::VerticalMirror, 1);
                let rhs = power(&l, &power(&l, &c, SymmetryOp::VerticalMirror, 1), SymmetryOp::RightShift, n - 1);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn klein_relations() {
        for n in [3, 4] {
            let l = build_lattice(n, K).unwrap();
            for c in enumerate_maximal(&l).unwrap() {
                let shifted = power(&l, &c, SymmetryOp::KBRightShift, 2 * n);
                assert_eq!(power(&l, &shifted, SymmetryOp::KBVerticalMirror, 2), c);
                assert_eq!(shifted, c);
                let lhs = power(&l, &power(&l, &c, SymmetryOp::KBRightShift, 1), SymmetryOp::KBVerticalMirror, 1);
                let rhs = power(
                    &l,
                    &power(&l, &c, SymmetryOp::KBVerticalMirror, 1),
                    SymmetryOp::KBRightShift,
                    2 * n - 1,
                );
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn mismatched_op_rejected() {
        let l = build_lattice(3, K).unwrap();
        let c = enumerate_maximal(&l).unwrap().remove(0);
        assert!(matches!(
            apply_symmetry(&l, &c, SymmetryOp::Rotation90),
            Err(Error::SymmetryMismatch { .. })
        ));
        let t = build_lattice(3, T).unwrap();
        assert!(matches!(
            apply_symmetry(&t, &c, SymmetryOp::RightShift),
            Err(Error::LatticeMismatch { .. })
        ));
    }

    #[test]
    fn enumeration_is_symmetry_complete() {
        for (n, b) in [(3, T), (3, K), (4, T), (4, K)] {
            let l = build_lattice(n, b).unwrap();
            let covs = enumerate_maximal(&l).unwrap();
            let all: HashSet<_> = covs.iter().cloned().collect();
            for &op in generators(b) {
                let image: HashSet<_> = covs.iter().map(|c| apply_symmetry(&l, c, op).unwrap()).collect();
                assert_eq!(image, all);
            }
        }
    }

    #[test]
    fn classes_partition_and_close() {
        for (n, b) in [(3, T), (3, K), (4, K)] {
            let l = build_lattice(n, b).unwrap();
            let covs = enumerate_maximal(&l).unwrap();
            let classes = classify(&l, &covs).unwrap();
            let mut owner = vec![None; covs.len()];
            for c in &classes {
                for &m in &c.members {
                    assert!(owner[m].is_none());
                    owner[m] = Some(c.class_id);
                }
            }
            assert!(owner.iter().all(Option::is_some));
            for (from, _, to) in orbit_graph(&l, &covs).unwrap() {
                assert_eq!(owner[from], owner[to]);
            }
        }
    }

    #[test]
    fn missing_image_is_reported() {
        let l = build_lattice(3, T).unwrap();
        let mut covs = enumerate_maximal(&l).unwrap();
        covs.remove(5);
        assert!(matches!(classify(&l, &covs), Err(Error::OrbitEscape { .. })));
    }

    #[test]
    fn table_small() {
        let stats = |n, b| {
            let l = build_lattice(n, b).unwrap();
            let covs = enumerate_maximal(&l).unwrap();
            let s = class_statistics(&classify(&l, &covs).unwrap());
            (s.classes, s.min_size, s.max_size, s.total)
        };
        assert_eq!(stats(3, T), (3, 18, 36, 72));
        assert_eq!(stats(3, K), (11, 3, 12, 78));
        assert_eq!(stats(4, T), (13, 4, 64, 272));
        assert_eq!(stats(4, K), (36, 1, 16, 196));
    }

    #[test]
    fn klein_4x4_has_a_group_fixed_point() {
        let l = build_lattice(4, K).unwrap();
        let covs = enumerate_maximal(&l).unwrap();
        let classes = classify(&l, &covs).unwrap();
        let singletons: Vec<_> = classes.iter().filter(|c| c.size() == 1).collect();
        assert!(!singletons.is_empty());
        for c in singletons {
            let cov = c.representative_covering(&covs);
            for &op in generators(K) {
                assert_eq!(&apply_symmetry(&l, cov, op).unwrap(), cov);
            }
        }
    }

    #[test]
    fn covering_ids_are_stable() {
        let l = build_lattice(3, T).unwrap();
        let covs = enumerate_maximal(&l).unwrap();
        let ids: HashSet<_> = covs.iter().map(DimerCovering::id).collect();
        assert_eq!(ids.len(), covs.len());
        assert_eq!(covs[0].id(), covs[0].clone().id());
        assert_eq!(covs[0].id().len(), 16);
    }

    #[test]
    fn permute_matches_covering_action() {
        let l = build_lattice(4, K).unwrap();
        let c = &enumerate_maximal(&l).unwrap()[17];
        for &op in generators(K) {
            let image = apply_symmetry(&l, c, op).unwrap();
            let monos: Vec<usize> = (0..16).collect();
            let moved = permute_sites(4, op, &monos);
            for &e in c.edges() {
                let edge = l.edges()[e];
                let pos_a = moved.iter().position(|&s| s == edge.a).unwrap();
                let pos_b = moved.iter().position(|&s| s == edge.b).unwrap();
                assert!(image.contains(l.edge_index(pos_a, pos_b).unwrap()));
            }
        }
    }
}
