//! Small labeled pattern graphs with exhaustive canonical forms.
//!
//! A pattern on `n <= PATTERN_CAP` vertices stores its edges as a bit mask
//! over vertex pairs. The pair `{i, j}` with `i < j` owns bit `j(j-1)/2 + i`,
//! so the pairs of the first `n` vertices always occupy bits `0..C(n, 2)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::SimpleGraph;

/// Largest supported pattern order.
pub const PATTERN_CAP: usize = 6;

#[inline]
pub fn pair_bit(i: usize, j: usize) -> u32 {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    1 << (j * (j - 1) / 2 + i)
}

pub fn pair_count(order: usize) -> usize {
    order * order.saturating_sub(1) / 2
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// Image of an edge mask under the vertex relabeling `v -> perm[v]`.
pub fn permute_mask(order: usize, mask: u32, perm: &[usize]) -> u32 {
    let mut out = 0;
    for j in 1..order {
        for i in 0..j {
            if mask & pair_bit(i, j) != 0 {
                out |= pair_bit(perm[i], perm[j]);
            }
        }
    }
    out
}

/// Whether the labeled graph with the given mask is connected.
pub fn mask_connected(order: usize, mask: u32) -> bool {
    if order <= 1 {
        return true;
    }
    let mut seen = 1u32;
    let mut frontier = 1u32;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        for w in 0..order {
            if w != v && seen & (1 << w) == 0 && mask & pair_bit(v, w) != 0 {
                seen |= 1 << w;
                frontier |= 1 << w;
            }
        }
    }
    seen.count_ones() as usize == order
}

#[derive(Debug, Clone)]
pub struct PatternGraph {
    order: usize,
    mask: u32,
    canonical: u32,
    orbit: Vec<u32>,
    name: Option<String>,
}

impl PartialEq for PatternGraph {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.mask == other.mask
    }
}

impl Eq for PatternGraph {}

impl PatternGraph {
    /// Builds a pattern on `order` vertices; connectivity is not required here.
    pub fn new(order: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("pattern", "order must be positive"));
        }
        if order > PATTERN_CAP {
            return Err(Error::PatternTooLarge {
                order,
                cap: PATTERN_CAP,
            });
        }
        let mut mask = 0;
        for &(a, b) in edges {
            if a >= order || b >= order || a == b {
                return Err(Error::invalid("pattern", format!("bad edge ({a}, {b}) for order {order}")));
            }
            mask |= pair_bit(a, b);
        }
        Ok(Self::from_mask(order, mask))
    }

    pub(crate) fn from_mask(order: usize, mask: u32) -> Self {
        let mut orbit: Vec<u32> = permutations(order)
            .iter()
            .map(|p| permute_mask(order, mask, p))
            .collect();
        orbit.sort_unstable();
        orbit.dedup();
        Self {
            order,
            mask,
            canonical: orbit[0],
            orbit,
            name: None,
        }
    }

    fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn from_graph(g: &SimpleGraph) -> Result<Self> {
        Self::new(g.n(), &g.edges())
    }

    pub fn vertex() -> Self {
        Self::from_mask(1, 0).named("Vertex")
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
        Ok(Self::new(n, &edges)?.named(format!("K{n}")))
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Ok(Self::new(n, &edges)?.named(format!("P{n}")))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid("pattern", "a cycle needs at least three vertices"));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Ok(Self::new(n, &edges)?.named(format!("C{n}")))
    }

    /// `O_k`: the complete graph on `2k + 2` vertices minus the matching
    /// `{0,1}, {2,3}, ..., {2k, 2k+1}`. Its clique complex is the boundary of the
    /// `(k+1)`-dimensional cross-polytope.
    pub fn cross_polytope(k: usize) -> Result<Self> {
        let n = 2 * k + 2;
        let edges: Vec<_> = (0..n)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .filter(|&(i, j)| !(i % 2 == 0 && j == i + 1))
            .collect();
        Ok(Self::new(n, &edges)?.named(format!("O{k}")))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn edge_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.mask & pair_bit(a, b) != 0
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (1..self.order)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .filter(|&(i, j)| self.has_edge(i, j))
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        mask_connected(self.order, self.mask)
    }

    /// Canonical form: the minimum mask over all relabelings, as bytes
    /// `[order, mask_le...]`.
    pub fn canonical_form(&self) -> Vec<u8> {
        let mut out = vec![self.order as u8];
        out.extend_from_slice(&self.canonical.to_le_bytes()[..pair_count(self.order).div_ceil(8).max(1)]);
        out
    }

    pub fn is_isomorphic(&self, other: &PatternGraph) -> bool {
        self.order == other.order && self.canonical == other.canonical
    }

    /// Every labeled mask isomorphic to this pattern, sorted.
    pub fn orbit(&self) -> &[u32] {
        &self.orbit
    }

    /// Whether the labeled graph `mask` on `order` vertices is isomorphic to this pattern.
    #[inline]
    pub fn matches_mask(&self, mask: u32) -> bool {
        self.orbit.binary_search(&mask).is_ok()
    }

    pub fn to_graph(&self) -> SimpleGraph {
        SimpleGraph::from_edges(self.order, &self.edges())
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(Error::DisconnectedPattern)
        }
    }
}

/// Builds the `O_k` graph.
pub fn cross_polytope_graph(k: usize) -> Result<PatternGraph> {
    PatternGraph::cross_polytope(k)
}

impl fmt::Display for PatternGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = &self.name {
            return f.write_str(name);
        }
        let edges = self.edges();
        if edges.is_empty() {
            return write!(f, "E{}", self.order);
        }
        let parts: Vec<String> = edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        f.write_str(&parts.join(";"))
    }
}

impl FromStr for PatternGraph {
    type Err = Error;

    /// Accepts `Vertex`, `K<n>`, `P<n>`, `C<n>`, `O<k>` (or `O_<k>`), `E<n>`
    /// (edgeless) or an explicit edge list such as `0-1;1-2;2-0`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid("pattern", format!("cannot parse `{s}`"));
        if s.eq_ignore_ascii_case("vertex") {
            return Ok(Self::vertex());
        }
        if s.contains('-') {
            let mut edges = Vec::new();
            for part in s.split([';', ',']).filter(|p| !p.trim().is_empty()) {
                let (a, b) = part.split_once('-').ok_or_else(bad)?;
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                edges.push((a, b));
            }
            let order = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(1);
            return Self::new(order, &edges);
        }
        let mut chars = s.chars();
        let head = chars.next().ok_or_else(bad)?;
        let rest = chars.as_str().trim_start_matches('_');
        let n: usize = rest.parse().map_err(|_| bad())?;
        match head.to_ascii_uppercase() {
            'K' => Self::complete(n),
            'P' => Self::path(n),
            'C' => Self::cycle(n),
            'O' => Self::cross_polytope(n),
            'E' => Ok(Self::new(n, &[])?),
            _ => Err(bad()),
        }
    }
}
