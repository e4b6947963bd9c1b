//! Square-lattice geometry under torus and Klein-bottle identifications.
//!
//! Sites are indexed row-major, `site = i * n + j` for row `i` and column `j`.
//! Rows grow downward and columns grow to the right. Both boundary conditions
//! wrap the vertical direction plainly. The horizontal wrap is plain on the
//! torus; on the Klein bottle, site `(i, n-1)` is glued to `(n-1-i, 0)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type SiteId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryCondition {
    #[serde(rename = "torus")]
    Torus,
    #[serde(rename = "klein")]
    KleinBottle,
}

impl BoundaryCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Torus => "torus",
            BoundaryCondition::KleinBottle => "klein",
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "torus" | "t" => Ok(BoundaryCondition::Torus),
            "klein" | "kb" | "klein-bottle" | "kleinbottle" => Ok(BoundaryCondition::KleinBottle),
            other => Err(Error::InvalidInput(format!(
                "unknown boundary condition {other:?} (expected torus or klein)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
    ];

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

/// Nearest-neighbour link. Endpoints are stored with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: SiteId,
    pub b: SiteId,
    pub orientation: Orientation,
    /// Set when the link crosses a boundary seam.
    pub wrap: bool,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    n: usize,
    boundary: BoundaryCondition,
    edges: Vec<Edge>,
    lookup: HashMap<(SiteId, SiteId), usize>,
}

/// Builds the `n x n` lattice. Edges are sorted lexicographically by `(a, b)`,
/// and an edge's position in that order is its index everywhere else in the crate.
pub fn build_lattice(n: usize, boundary: BoundaryCondition) -> Result<Lattice> {
    Lattice::new(n, boundary)
}

impl Lattice {
    pub fn new(n: usize, boundary: BoundaryCondition) -> Result<Self> {
        if n < 3 {
            return Err(Error::LatticeTooSmall(n));
        }
        let mut edges = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            for j in 0..n {
                let s = i * n + j;
                let r = step(n, boundary, s, Direction::Right);
                edges.push(make_edge(s, r, Orientation::Horizontal, j == n - 1));
                let d = step(n, boundary, s, Direction::Down);
                edges.push(make_edge(s, d, Orientation::Vertical, i == n - 1));
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        let mut lookup = HashMap::with_capacity(edges.len());
        for (idx, e) in edges.iter().enumerate() {
            let prev = lookup.insert((e.a, e.b), idx);
            assert!(prev.is_none(), "duplicate edge ({}, {})", e.a, e.b);
        }
        Ok(Lattice {
            n,
            boundary,
            edges,
            lookup,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.boundary
    }

    pub fn num_sites(&self) -> usize {
        self.n * self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn site(&self, row: usize, col: usize) -> SiteId {
        debug_assert!(row < self.n && col < self.n);
        row * self.n + col
    }

    pub fn coords(&self, site: SiteId) -> (usize, usize) {
        (site / self.n, site % self.n)
    }

    pub fn neighbor(&self, site: SiteId, direction: Direction) -> SiteId {
        step(self.n, self.boundary, site, direction)
    }

    /// Index of the edge joining `a` and `b`, in either order.
    pub fn edge_index(&self, a: SiteId, b: SiteId) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.lookup.get(&key).copied()
    }

    /// Edge indices incident to `site`.
    pub fn incident_edges(&self, site: SiteId) -> impl Iterator<Item = usize> + '_ {
        Direction::ALL.into_iter().map(move |d| {
            let other = self.neighbor(site, d);
            self.edge_index(site, other)
                .expect("neighbor relation is consistent with the edge list")
        })
    }

    /// Edges as `[a, b]` pairs, in index order.
    pub fn edge_pairs(&self) -> Vec<[SiteId; 2]> {
        self.edges.iter().map(|e| [e.a, e.b]).collect()
    }
}

fn make_edge(x: SiteId, y: SiteId, orientation: Orientation, wrap: bool) -> Edge {
    let (a, b) = if x < y { (x, y) } else { (y, x) };
    Edge {
        a,
        b,
        orientation,
        wrap,
    }
}

fn step(n: usize, boundary: BoundaryCondition, site: SiteId, direction: Direction) -> SiteId {
    let (i, j) = (site / n, site % n);
    let (ni, nj) = match direction {
        Direction::Up => ((i + n - 1) % n, j),
        Direction::Down => ((i + 1) % n, j),
        Direction::Right if j == n - 1 => match boundary {
            BoundaryCondition::Torus => (i, 0),
            BoundaryCondition::KleinBottle => (n - 1 - i, 0),
        },
        Direction::Right => (i, j + 1),
        Direction::Left if j == 0 => match boundary {
            BoundaryCondition::Torus => (i, n - 1),
            BoundaryCondition::KleinBottle => (n - 1 - i, n - 1),
        },
        Direction::Left => (i, j - 1),
    };
    ni * n + nj
}

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    n: usize,
    boundary: BoundaryCondition,
    edges: Vec<[SiteId; 2]>,
}

impl Serialize for Lattice {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        LatticeJson {
            n: self.n,
            boundary: self.boundary,
            edges: self.edge_pairs(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = LatticeJson::deserialize(deserializer)?;
        let lattice = Lattice::new(raw.n, raw.boundary).map_err(serde::de::Error::custom)?;
        if lattice.edge_pairs() != raw.edges {
            return Err(serde::de::Error::custom(
                "edge list does not match the lattice geometry",
            ));
        }
        Ok(lattice)
    }
}
