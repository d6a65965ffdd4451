//! RCM graph construction with pair-keyed edge marks.

use std::ops::Deref;

use rand::Rng;
use rayon::prelude::*;

use crate::connection::ConnectionFunction;
use crate::error::{Error, Result};
use crate::point_process::{add_origin, Configuration};
use crate::rng::{self, pair_uniform_unchecked};

/// Undirected simple graph on vertices `0..n` with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimpleGraph {
    adj: Vec<Vec<usize>>,
}

impl SimpleGraph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an edge list; duplicates are merged, loops ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} vertices");
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        Self::from_adjacency(adj)
    }

    fn from_adjacency(mut adj: Vec<Vec<usize>>) -> Self {
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Self { adj }
    }

    /// `G(n, p)` with the given seed.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Self {
        let mut rng = rng::stream(seed);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((a, b));
                }
            }
        }
        Self::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(a, b)` with `a < b` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect()
    }

    /// Induced subgraph on `vertices`, relabeled to `0..vertices.len()` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> SimpleGraph {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i;
        }
        let adj = vertices
            .iter()
            .map(|&v| {
                self.adj[v]
                    .iter()
                    .filter_map(|&w| (index[w] != usize::MAX).then_some(index[w]))
                    .collect()
            })
            .collect();
        Self::from_adjacency(adj)
    }

    /// Disjoint union, with `other`'s vertices shifted past `self`'s.
    pub fn disjoint_union(&self, other: &SimpleGraph) -> SimpleGraph {
        let shift = self.n();
        let mut adj = self.adj.clone();
        adj.extend(
            other
                .adj
                .iter()
                .map(|list| list.iter().map(|&w| w + shift).collect()),
        );
        Self { adj }
    }

    /// Copy without the edge `{a, b}`.
    pub fn without_edge(&self, a: usize, b: usize) -> SimpleGraph {
        let mut adj = self.adj.clone();
        adj[a].retain(|&w| w != b);
        adj[b].retain(|&w| w != a);
        Self { adj }
    }
}

/// How pair distances are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Plain Euclidean distance inside the window.
    #[default]
    Free,
    /// Minimum-image distance on the torus obtained by identifying opposite faces.
    Periodic,
}

/// An RCM realization: a configuration, its connection function, the edge seed
/// and the resulting adjacency. Vertex `i` is `config.points()[i]`.
#[derive(Debug, Clone)]
pub struct Graph {
    config: Configuration,
    phi: ConnectionFunction,
    seed: u64,
    boundary: Boundary,
    structure: SimpleGraph,
}

impl Deref for Graph {
    type Target = SimpleGraph;

    fn deref(&self) -> &SimpleGraph {
        &self.structure
    }
}

impl Graph {
    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn phi(&self) -> &ConnectionFunction {
        &self.phi
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn structure(&self) -> &SimpleGraph {
        &self.structure
    }

    /// Neighbour ids of vertex `v`, ascending.
    pub fn neighbor_ids(&self, v: usize) -> Vec<u64> {
        self.structure
            .neighbors(v)
            .iter()
            .map(|&w| self.config.id(w))
            .collect()
    }

    /// Vertex index of the point with the given id.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.config.points().binary_search_by_key(&id, |p| p.id).ok()
    }

    /// Edge list as id pairs `(lo, hi)`.
    pub fn edge_ids(&self) -> Vec<(u64, u64)> {
        self.structure
            .edges()
            .into_iter()
            .map(|(a, b)| (self.config.id(a), self.config.id(b)))
            .collect()
    }

    pub(crate) fn with_structure(&self, config: Configuration, structure: SimpleGraph) -> Graph {
        Graph {
            config,
            phi: self.phi.clone(),
            seed: self.seed,
            boundary: self.boundary,
            structure,
        }
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64], period: Option<f64>) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let mut dx = x - y;
        if let Some(l) = period {
            dx -= l * (dx / l).round();
        }
        s += dx * dx;
    }
    s
}

/// Spatial hash over cubes of a fixed side covering the window.
struct CellGrid {
    cells_per_axis: usize,
    cell_side: f64,
    corner: Vec<f64>,
    buckets: Vec<Vec<usize>>,
}

impl CellGrid {
    fn new(config: &Configuration, range: f64) -> Self {
        let w = config.window();
        let cells_per_axis = ((w.side() / range).floor() as usize).max(1);
        let cell_side = w.side() / cells_per_axis as f64;
        let d = config.dim();
        let mut grid = CellGrid {
            cells_per_axis,
            cell_side,
            corner: w.corner().to_vec(),
            buckets: vec![Vec::new(); cells_per_axis.pow(d as u32)],
        };
        for i in 0..config.len() {
            let c = grid.cell_of(config.position(i));
            let key = grid.key(&c);
            grid.buckets[key].push(i);
        }
        grid
    }

    fn cell_of(&self, x: &[f64]) -> Vec<usize> {
        x.iter()
            .zip(&self.corner)
            .map(|(v, c)| (((v - c) / self.cell_side).floor().max(0.0) as usize).min(self.cells_per_axis - 1))
            .collect()
    }

    fn key(&self, c: &[usize]) -> usize {
        c.iter().fold(0, |acc, &v| acc * self.cells_per_axis + v)
    }

    /// Buckets of the cells within sup-distance one of `c`, each visited once.
    fn neighbor_keys(&self, c: &[usize], periodic: bool) -> Vec<usize> {
        let d = c.len();
        let m = self.cells_per_axis as isize;
        let mut keys = Vec::with_capacity(3usize.pow(d as u32));
        let mut offset = vec![-1isize; d];
        'outer: loop {
            let mut cell = Vec::with_capacity(d);
            let mut valid = true;
            for (&ci, &o) in c.iter().zip(&offset) {
                let mut v = ci as isize + o;
                if periodic {
                    v = v.rem_euclid(m);
                } else if v < 0 || v >= m {
                    valid = false;
                }
                cell.push(v as usize);
            }
            if valid {
                keys.push(self.key(&cell));
            }
            for o in offset.iter_mut() {
                if *o < 1 {
                    *o += 1;
                    continue 'outer;
                }
                *o = -1;
            }
            break;
        }
        keys.sort_unstable();
        keys.dedup();
        keys
    }
}

/// Builds `G(P)` with free boundary: `{x, y}` is an edge iff
/// `pair_uniform(edge_seed, id_x, id_y) < phi(x - y)`.
pub fn build_graph(config: &Configuration, phi: &ConnectionFunction, edge_seed: u64) -> Result<Graph> {
    build_graph_with(config, phi, edge_seed, Boundary::Free)
}

/// [`build_graph`] with an explicit boundary mode.
///
/// Pairs are pruned through a cell grid only when `phi` has bounded support;
/// otherwise every pair is tested.
pub fn build_graph_with(
    config: &Configuration,
    phi: &ConnectionFunction,
    edge_seed: u64,
    boundary: Boundary,
) -> Result<Graph> {
    if phi.dim() != config.dim() {
        return Err(Error::DimensionMismatch {
            expected: config.dim(),
            got: phi.dim(),
        });
    }
    let n = config.len();
    let period = match boundary {
        Boundary::Free => None,
        Boundary::Periodic => Some(config.window().side()),
    };
    let test = |i: usize, j: usize| {
        let r2 = squared_distance(config.position(i), config.position(j), period);
        let p = phi.radial_sq(r2);
        p > 0.0 && pair_uniform_unchecked(edge_seed, config.id(i), config.id(j)) < p
    };

    let grid = phi
        .support_radius()
        .map(|r| CellGrid::new(config, r))
        // with fewer than three cells per axis the torus wraps a cell onto itself
        .filter(|g| g.cells_per_axis >= 3 || boundary == Boundary::Free);

    let upper: Vec<Vec<usize>> = match &grid {
        Some(grid) => (0..n)
            .into_par_iter()
            .map(|i| {
                let c = grid.cell_of(config.position(i));
                let mut out = Vec::new();
                for key in grid.neighbor_keys(&c, boundary == Boundary::Periodic) {
                    out.extend(grid.buckets[key].iter().copied().filter(|&j| j > i && test(i, j)));
                }
                out
            })
            .collect(),
        None => (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).filter(|&j| test(i, j)).collect())
            .collect(),
    };

    let mut adj = vec![Vec::new(); n];
    for (i, list) in upper.into_iter().enumerate() {
        for j in list {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    Ok(Graph {
        config: config.clone(),
        phi: phi.clone(),
        seed: edge_seed,
        boundary,
        structure: SimpleGraph::from_adjacency(adj),
    })
}

/// The coupled pair `(G(P)|_W, G(P ∪ {0})|_W)`.
///
/// The second graph is the first plus the origin (last vertex) and its edges;
/// shared edges use identical marks.
pub fn build_with_origin(
    config: &Configuration,
    phi: &ConnectionFunction,
    edge_seed: u64,
    boundary: Boundary,
) -> Result<(Graph, Graph)> {
    if config.has_origin() {
        return Err(Error::OriginPresent);
    }
    let base = build_graph_with(config, phi, edge_seed, boundary)?;
    let with = add_origin(config)?;
    let o = with.len() - 1;
    let period = match boundary {
        Boundary::Free => None,
        Boundary::Periodic => Some(config.window().side()),
    };
    let mut adj = base.structure.adj.clone();
    adj.push(Vec::new());
    for i in 0..o {
        let r2 = squared_distance(with.position(i), with.position(o), period);
        let p = phi.radial_sq(r2);
        if p > 0.0 && pair_uniform_unchecked(edge_seed, with.id(i), with.id(o)) < p {
            adj[i].push(o);
            adj[o].push(i);
        }
    }
    let extended = Graph {
        config: with,
        phi: phi.clone(),
        seed: edge_seed,
        boundary,
        structure: SimpleGraph { adj },
    };
    Ok((base, extended))
}

/// Subgraph of `graph` induced by the vertices lying in `sub`, with the
/// restricted configuration.
pub fn restrict_graph(graph: &Graph, sub: &crate::point_process::Window) -> Result<Graph> {
    let config = crate::point_process::restrict(graph.config(), sub)?;
    let keep: Vec<usize> = (0..graph.n())
        .filter(|&i| sub.contains(graph.config().position(i)))
        .collect();
    let structure = graph.structure.induced(&keep);
    Ok(graph.with_structure(config, structure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{restrict, sample_poisson, Window};

    fn two_points(dist: f64) -> Configuration {
        Configuration::from_positions(Window::centered(2, 10.0).unwrap(), vec![vec![0.0, 0.0], vec![dist, 0.0]]).unwrap()
    }

    #[test]
    fn indicator_edge_rule() {
        let phi = ConnectionFunction::indicator(2, 1.0).unwrap();
        assert_eq!(build_graph(&two_points(0.5), &phi, 3).unwrap().edge_count(), 1);
        assert_eq!(build_graph(&two_points(2.0), &phi, 3).unwrap().edge_count(), 0);
    }

    #[test]
    fn grid_matches_all_pairs() {
        let w = Window::centered(2, 12.0).unwrap();
        let config = sample_poisson(&w, 3.0, 9).unwrap();
        let phi = ConnectionFunction::indicator(2, 1.3).unwrap();
        for boundary in [Boundary::Free, Boundary::Periodic] {
            let g = build_graph_with(&config, &phi, 17, boundary).unwrap();
            let period = (boundary == Boundary::Periodic).then_some(12.0);
            let mut brute = Vec::new();
            for i in 0..config.len() {
                for j in i + 1..config.len() {
                    let r2 = squared_distance(config.position(i), config.position(j), period);
                    if pair_uniform_unchecked(17, config.id(i), config.id(j)) < phi.radial_sq(r2) {
                        brute.push((i, j));
                    }
                }
            }
            assert_eq!(g.edges(), brute);
        }
    }

    #[test]
    fn adjacency_is_symmetric_without_loops() {
        let w = Window::centered(2, 8.0).unwrap();
        let config = sample_poisson(&w, 2.0, 1).unwrap();
        let g = build_graph(&config, &ConnectionFunction::gaussian(2, 1.0).unwrap(), 4).unwrap();
        for v in 0..g.n() {
            assert!(!g.has_edge(v, v));
            for &w in g.neighbors(v) {
                assert!(g.has_edge(w, v));
            }
        }
    }

    #[test]
    fn restriction_commutes_with_construction() {
        let w = Window::centered(2, 10.0).unwrap();
        let sub = Window::centered(2, 5.0).unwrap();
        let config = sample_poisson(&w, 2.0, 5).unwrap();
        let phi = ConnectionFunction::gaussian(2, 0.7).unwrap();
        let full = build_graph(&config, &phi, 8).unwrap();
        let small = build_graph(&restrict(&config, &sub).unwrap(), &phi, 8).unwrap();
        let induced = restrict_graph(&full, &sub).unwrap();
        assert_eq!(small.structure(), induced.structure());
        assert_eq!(small.edge_ids(), induced.edge_ids());
    }

    #[test]
    fn shrinking_radius_never_adds_edges() {
        let w = Window::centered(2, 10.0).unwrap();
        let config = sample_poisson(&w, 2.0, 2).unwrap();
        let big = build_graph(&config, &ConnectionFunction::indicator(2, 1.2).unwrap(), 6).unwrap();
        let small = build_graph(&config, &ConnectionFunction::indicator(2, 0.8).unwrap(), 6).unwrap();
        for (a, b) in small.edges() {
            assert!(big.has_edge(a, b));
        }
    }

    #[test]
    fn origin_coupling() {
        let w = Window::centered(2, 6.0).unwrap();
        let phi = ConnectionFunction::indicator(2, 1.0).unwrap();
        let empty = Configuration::from_points(w.clone(), 1.0, 0, Vec::new()).unwrap();
        let (g0, g1) = build_with_origin(&empty, &phi, 1, Boundary::Free).unwrap();
        assert_eq!((g0.n(), g1.n(), g1.edge_count()), (0, 1, 0));

        let config = sample_poisson(&w, 3.0, 12).unwrap();
        let (g, go) = build_with_origin(&config, &phi, 99, Boundary::Free).unwrap();
        let o = go.n() - 1;
        assert_eq!(go.structure().induced(&(0..o).collect::<Vec<_>>()), *g.structure());
        let expected: Vec<usize> = (0..o)
            .filter(|&i| config.position(i).iter().map(|v| v * v).sum::<f64>() <= 1.0)
            .collect();
        assert_eq!(go.neighbors(o), expected.as_slice());
        assert!(build_with_origin(go.config(), &phi, 1, Boundary::Free).is_err());
    }

    #[test]
    fn mean_degree_matches_mecke_on_torus() {
        // E deg = lambda m_phi exactly on the torus
        let w = Window::centered(2, 10.0).unwrap();
        let phi = ConnectionFunction::gaussian(2, 1.0).unwrap();
        let reps = 200;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for r in 0..reps {
            let config = sample_poisson(&w, 1.0, rng::derive_seed(3, 0, r)).unwrap();
            let g = build_graph_with(&config, &phi, rng::derive_seed(3, 1, r), Boundary::Periodic).unwrap();
            let x = 2.0 * g.edge_count() as f64 / w.volume();
            s += x;
            s2 += x * x;
        }
        let mean = s / reps as f64;
        let se = ((s2 / reps as f64 - mean * mean) / reps as f64).sqrt();
        assert!((mean - std::f64::consts::PI).abs() < 4.0 * se, "{mean} ± {se}");
    }
}
