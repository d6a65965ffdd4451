//! Clique complexes and GF(2) Betti numbers.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SimpleGraph;

/// Cliques of a graph up to dimension `dim_cap`, grouped by dimension.
///
/// Simplices are sorted vertex tuples; each dimension's list is in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    simplices: Vec<Vec<Vec<usize>>>,
    dim_cap: usize,
    truncated: bool,
}

/// Sparse GF(2) matrix of the facet relation between `(k-1)`- and `k`-simplices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMatrix {
    pub k: usize,
    pub rows: usize,
    /// For every `k`-simplex, the sorted row indices of its facets.
    pub columns: Vec<Vec<usize>>,
}

fn expand(
    g: &SimpleGraph,
    clique: &mut Vec<usize>,
    candidates: &[usize],
    dim_cap: usize,
    out: &mut Vec<Vec<Vec<usize>>>,
    truncated: &mut bool,
) {
    out[clique.len() - 1].push(clique.clone());
    if clique.len() == dim_cap + 1 {
        if !candidates.is_empty() {
            *truncated = true;
        }
        return;
    }
    for (i, &c) in candidates.iter().enumerate() {
        let next: Vec<usize> = candidates[i + 1..]
            .iter()
            .copied()
            .filter(|&w| g.has_edge(c, w))
            .collect();
        clique.push(c);
        expand(g, clique, &next, dim_cap, out, truncated);
        clique.pop();
    }
}

/// All cliques of at most `dim_cap + 1` vertices.
pub fn clique_complex(g: &SimpleGraph, dim_cap: usize) -> SimplicialComplex {
    let per_root: Vec<(Vec<Vec<Vec<usize>>>, bool)> = (0..g.n())
        .into_par_iter()
        .map(|v| {
            let mut out = vec![Vec::new(); dim_cap + 1];
            let mut truncated = false;
            let candidates: Vec<usize> = g.neighbors(v).iter().copied().filter(|&w| w > v).collect();
            expand(g, &mut vec![v], &candidates, dim_cap, &mut out, &mut truncated);
            (out, truncated)
        })
        .collect();
    let mut simplices = vec![Vec::new(); dim_cap + 1];
    let mut truncated = false;
    for (lists, t) in per_root {
        truncated |= t;
        for (dim, list) in lists.into_iter().enumerate() {
            simplices[dim].extend(list);
        }
    }
    SimplicialComplex {
        simplices,
        dim_cap,
        truncated,
    }
}

impl SimplicialComplex {
    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    /// Whether cliques larger than `dim_cap + 1` were cut off.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn simplices(&self, dim: usize) -> &[Vec<usize>] {
        self.simplices.get(dim).map_or(&[], Vec::as_slice)
    }

    /// `S_0, ..., S_{dim_cap}`.
    pub fn simplex_counts(&self) -> Vec<usize> {
        self.simplices.iter().map(Vec::len).collect()
    }

    /// `∂_k`, with rows indexing `simplices(k - 1)` and columns `simplices(k)`.
    pub fn boundary_matrix(&self, k: usize) -> BoundaryMatrix {
        if k == 0 {
            return BoundaryMatrix {
                k,
                rows: 0,
                columns: vec![Vec::new(); self.simplices(0).len()],
            };
        }
        let rows = self.simplices(k - 1);
        let index: HashMap<&[usize], usize> = rows.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        let columns = self
            .simplices(k)
            .iter()
            .map(|s| {
                let mut col: Vec<usize> = (0..s.len())
                    .map(|skip| {
                        let facet: Vec<usize> = s
                            .iter()
                            .enumerate()
                            .filter_map(|(i, &v)| (i != skip).then_some(v))
                            .collect();
                        index[facet.as_slice()]
                    })
                    .collect();
                col.sort_unstable();
                col
            })
            .collect();
        BoundaryMatrix {
            k,
            rows: rows.len(),
            columns,
        }
    }

    /// `β_0, ..., β_{k_max}` over GF(2).
    ///
    /// Needs `∂_{k_max + 1}`, so a truncated complex must have
    /// `dim_cap >= k_max + 1`.
    pub fn betti_numbers(&self, k_max: usize) -> Result<Vec<i64>> {
        if self.truncated && self.dim_cap < k_max + 1 {
            return Err(Error::InsufficientDimCap {
                dim_cap: self.dim_cap,
                needed: k_max + 1,
            });
        }
        let ranks: Vec<usize> = (0..=k_max + 1).map(|k| self.boundary_matrix(k).rank()).collect();
        Ok((0..=k_max)
            .map(|k| self.simplices(k).len() as i64 - ranks[k] as i64 - ranks[k + 1] as i64)
            .collect())
    }

    /// Checks `Σ (-1)^j S_j = Σ (-1)^j β_j`; only meaningful on a complete complex.
    pub fn euler_characteristic_check(&self) -> Result<bool> {
        if self.truncated {
            return Err(Error::IncompleteComplex);
        }
        let sign = |j: usize| if j.is_multiple_of(2) { 1 } else { -1 };
        let chi_s: i64 = self.simplex_counts().iter().enumerate().map(|(j, &s)| sign(j) * s as i64).sum();
        let chi_b: i64 = self
            .betti_numbers(self.dim_cap)?
            .iter()
            .enumerate()
            .map(|(j, &b)| sign(j) * b)
            .sum();
        Ok(chi_s == chi_b)
    }
}

/// Sorted symmetric difference.
fn xor_into(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl BoundaryMatrix {
    /// Rank over GF(2) by left-to-right column reduction on lowest nonzero rows.
    pub fn rank(&self) -> usize {
        let mut pivot_of_low: HashMap<usize, usize> = HashMap::new();
        let mut reduced: Vec<Vec<usize>> = Vec::with_capacity(self.columns.len());
        for col in &self.columns {
            let mut col = col.clone();
            while let Some(&low) = col.last() {
                match pivot_of_low.get(&low) {
                    Some(&p) => col = xor_into(&col, &reduced[p]),
                    None => {
                        pivot_of_low.insert(low, reduced.len());
                        break;
                    }
                }
            }
            if !col.is_empty() {
                reduced.push(col);
            }
        }
        reduced.len()
    }

    /// Product `self · other` over GF(2) as sorted column supports.
    pub fn compose(&self, other: &BoundaryMatrix) -> Vec<Vec<usize>> {
        other
            .columns
            .iter()
            .map(|col| col.iter().fold(Vec::new(), |acc, &r| xor_into(&acc, &self.columns[r])))
            .collect()
    }
}

/// Betti numbers `β_0..β_{k_max}` of the clique complex of `g`.
pub fn betti_of_graph(g: &SimpleGraph, k_max: usize) -> Result<Vec<i64>> {
    clique_complex(g, k_max + 1).betti_numbers(k_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{cross_polytope_graph, PatternGraph};

    fn complete(n: usize) -> SimpleGraph {
        PatternGraph::complete(n).unwrap().to_graph()
    }

    #[test]
    fn triangle_and_k4_counts() {
        assert_eq!(clique_complex(&complete(3), 2).simplex_counts(), vec![3, 3, 1]);
        assert_eq!(clique_complex(&complete(4), 3).simplex_counts(), vec![4, 6, 4, 1]);
        assert_eq!(clique_complex(&SimpleGraph::new(4), 2).simplex_counts(), vec![4, 0, 0]);
    }

    #[test]
    fn simplices_match_brute_force() {
        let g = SimpleGraph::erdos_renyi(15, 0.45, 3);
        let cx = clique_complex(&g, 3);
        for size in 1..=4usize {
            let mut brute = Vec::new();
            for mask in 0u32..1 << 15 {
                if mask.count_ones() as usize != size {
                    continue;
                }
                let vs: Vec<usize> = (0..15).filter(|&i| mask & (1 << i) != 0).collect();
                if vs.iter().enumerate().all(|(i, &a)| vs[i + 1..].iter().all(|&b| g.has_edge(a, b))) {
                    brute.push(vs);
                }
            }
            brute.sort();
            assert_eq!(cx.simplices(size - 1), brute.as_slice());
            assert_eq!(cx.boundary_matrix(size - 1).columns.len(), brute.len());
        }
    }

    #[test]
    fn betti_fixtures() {
        assert_eq!(betti_of_graph(&complete(5), 3).unwrap(), vec![1, 0, 0, 0]);
        let c4 = PatternGraph::cycle(4).unwrap().to_graph();
        assert_eq!(betti_of_graph(&c4, 1).unwrap(), vec![1, 1]);
        for k in 1..=2 {
            let o = cross_polytope_graph(k).unwrap().to_graph();
            let b = betti_of_graph(&o, k).unwrap();
            assert_eq!(b[k], 1, "O_{k}: {b:?}");
        }
        assert_eq!(betti_of_graph(&cross_polytope_graph(0).unwrap().to_graph(), 0).unwrap(), vec![2]);
    }

    #[test]
    fn boundary_of_boundary_vanishes() {
        let g = SimpleGraph::erdos_renyi(12, 0.6, 8);
        let cx = clique_complex(&g, 4);
        for k in 1..4 {
            let dk = cx.boundary_matrix(k);
            let dk1 = cx.boundary_matrix(k + 1);
            assert!(dk1.columns.iter().all(|c| c.len() == k + 2));
            assert!(dk.compose(&dk1).iter().all(Vec::is_empty));
        }
    }

    #[test]
    fn euler_identity_and_truncation() {
        let g = SimpleGraph::erdos_renyi(12, 0.5, 21);
        let full = clique_complex(&g, 12);
        assert!(!full.is_truncated());
        assert!(full.euler_characteristic_check().unwrap());
        let cut = clique_complex(&complete(5), 1);
        assert!(cut.is_truncated());
        assert_eq!(cut.euler_characteristic_check(), Err(Error::IncompleteComplex));
        assert!(matches!(cut.betti_numbers(1), Err(Error::InsufficientDimCap { .. })));
    }

    #[test]
    fn disjoint_union_adds() {
        let a = SimpleGraph::erdos_renyi(9, 0.5, 1);
        let b = SimpleGraph::erdos_renyi(8, 0.4, 2);
        let ba = betti_of_graph(&a, 2).unwrap();
        let bb = betti_of_graph(&b, 2).unwrap();
        let bu = betti_of_graph(&a.disjoint_union(&b), 2).unwrap();
        for k in 0..=2 {
            assert_eq!(bu[k], ba[k] + bb[k]);
        }
    }
}
