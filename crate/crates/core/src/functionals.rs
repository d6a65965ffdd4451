//! Graph functionals, add-one costs and stabilization traces.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::connection::ConnectionFunction;
use crate::error::{Error, Result};
use crate::graph::{build_with_origin, Boundary, Graph, SimpleGraph};
use crate::pattern::{pair_bit, PatternGraph};
use crate::point_process::{nested_windows, restrict, Configuration};
use crate::topology::betti_of_graph;

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // keep the smaller index as root so representatives are minimal
        if ra < rb {
            self.parent[rb] = ra;
        } else if rb < ra {
            self.parent[ra] = rb;
        }
    }
}

/// A partition of the vertex set into connected components.
///
/// Components are numbered in order of their smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub component_of: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

impl ComponentLabeling {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }
}

pub fn connected_components(g: &SimpleGraph) -> ComponentLabeling {
    let n = g.n();
    let mut dsu = Dsu::new(n);
    for (a, b) in g.edges() {
        dsu.union(a, b);
    }
    let mut label = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut component_of = vec![0; n];
    for (v, slot) in component_of.iter_mut().enumerate() {
        let r = dsu.find(v);
        if label[r] == usize::MAX {
            label[r] = members.len();
            members.push(Vec::new());
        }
        *slot = label[r];
        members[label[r]].push(v);
    }
    ComponentLabeling {
        component_of,
        members,
    }
}

fn lex_min<'a>(vertices: &[usize], position: &impl Fn(usize) -> &'a [f64]) -> &'a [f64] {
    vertices
        .iter()
        .map(|&v| position(v))
        .min_by(|a, b| lex_cmp(a, b))
        .unwrap_or(&[])
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Largest component; ties go to the component holding the lexicographically
/// smallest position. Returns the sorted vertex list (empty for an empty graph).
pub fn biggest_component_with<'a>(g: &SimpleGraph, position: impl Fn(usize) -> &'a [f64]) -> Vec<usize> {
    let labels = connected_components(g);
    let mut best: Option<(usize, &'a [f64], usize)> = None;
    for (c, members) in labels.members.iter().enumerate() {
        let key = lex_min(members, &position);
        let better = match best {
            None => true,
            Some((size, min, _)) => members.len() > size || (members.len() == size && lex_cmp(key, min).is_lt()),
        };
        if better {
            best = Some((members.len(), key, c));
        }
    }
    best.map(|(_, _, c)| labels.members[c].clone()).unwrap_or_default()
}

/// [`biggest_component_with`] on a positioned graph; returns `(vertices, size)`.
pub fn biggest_component(graph: &Graph) -> (Vec<usize>, usize) {
    let config = graph.config();
    let vs = biggest_component_with(graph, |v| config.position(v));
    let n = vs.len();
    (vs, n)
}

/// Edge mask of the subgraph induced on `vertices`, labeled by their order.
pub fn induced_mask(g: &SimpleGraph, vertices: &[usize]) -> u32 {
    let mut mask = 0;
    for j in 1..vertices.len() {
        for i in 0..j {
            if g.has_edge(vertices[i], vertices[j]) {
                mask |= pair_bit(i, j);
            }
        }
    }
    mask
}

/// Enumerates every connected vertex subset of size `k` exactly once
/// (ESU expansion rooted at the subset's smallest vertex).
pub fn for_each_connected_subset(g: &SimpleGraph, root: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
    fn extend(
        g: &SimpleGraph,
        root: usize,
        k: usize,
        sub: &mut Vec<usize>,
        mut ext: Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if sub.len() == k {
            visit(sub);
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in g.neighbors(w) {
                if u > root && !sub.contains(&u) && !sub.iter().any(|&s| g.has_edge(s, u)) {
                    next.push(u);
                }
            }
            sub.push(w);
            extend(g, root, k, sub, next, visit);
            sub.pop();
        }
    }
    if k == 0 {
        return;
    }
    let ext: Vec<usize> = g.neighbors(root).iter().copied().filter(|&u| u > root).collect();
    extend(g, root, k, &mut vec![root], ext, visit);
}

/// Number of vertex subsets whose induced subgraph is isomorphic to `a`.
pub fn count_induced_subgraphs(g: &SimpleGraph, a: &PatternGraph) -> Result<u64> {
    a.require_connected()?;
    match a.order() {
        1 => return Ok(g.n() as u64),
        2 => return Ok(g.edge_count() as u64),
        _ => {}
    }
    let k = a.order();
    Ok((0..g.n())
        .into_par_iter()
        .map(|root| {
            let mut count = 0u64;
            for_each_connected_subset(g, root, k, &mut |sub| {
                if a.matches_mask(induced_mask(g, sub)) {
                    count += 1;
                }
            });
            count
        })
        .sum())
}

/// Number of connected components isomorphic to `a`.
pub fn count_components_isomorphic(g: &SimpleGraph, a: &PatternGraph) -> u64 {
    connected_components(g)
        .members
        .iter()
        .filter(|m| m.len() == a.order() && a.matches_mask(induced_mask(g, m)))
        .count() as u64
}

/// Named functionals that can be evaluated on a positioned graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Functional {
    VertexCount,
    EdgeCount,
    SubgraphCount(PatternGraph),
    ComponentCount,
    ComponentIsoCount(PatternGraph),
    Betti(usize),
    BiggestComponentSize,
}

impl Functional {
    pub fn evaluate(&self, graph: &Graph) -> Result<i64> {
        Ok(match self {
            Functional::VertexCount => graph.n() as i64,
            Functional::EdgeCount => graph.edge_count() as i64,
            Functional::SubgraphCount(a) => count_induced_subgraphs(graph, a)? as i64,
            Functional::ComponentCount => connected_components(graph).count() as i64,
            Functional::ComponentIsoCount(a) => count_components_isomorphic(graph, a) as i64,
            Functional::Betti(k) => betti_of_graph(graph, *k)?[*k],
            Functional::BiggestComponentSize => biggest_component(graph).1 as i64,
        })
    }

    /// Whether the value depends on edge randomness at all.
    pub fn uses_edges(&self) -> bool {
        !matches!(self, Functional::VertexCount)
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::VertexCount => f.write_str("vertex_count"),
            Functional::EdgeCount => f.write_str("edge_count"),
            Functional::SubgraphCount(a) => write!(f, "subgraph_count({a})"),
            Functional::ComponentCount => f.write_str("component_count"),
            Functional::ComponentIsoCount(a) => write!(f, "component_iso_count({a})"),
            Functional::Betti(k) => write!(f, "betti({k})"),
            Functional::BiggestComponentSize => f.write_str("biggest_component_size"),
        }
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || Error::UnknownFunctional(s.to_string());
        if let Some((name, rest)) = s.split_once('(') {
            let arg = rest.strip_suffix(')').ok_or_else(unknown)?;
            return match name.trim() {
                "subgraph_count" => Ok(Functional::SubgraphCount(arg.parse()?)),
                "component_iso_count" => Ok(Functional::ComponentIsoCount(arg.parse()?)),
                "betti" => Ok(Functional::Betti(arg.trim().parse().map_err(|_| unknown())?)),
                _ => Err(unknown()),
            };
        }
        match s {
            "vertex_count" => Ok(Functional::VertexCount),
            "edge_count" => Ok(Functional::EdgeCount),
            "component_count" => Ok(Functional::ComponentCount),
            "biggest_component_size" => Ok(Functional::BiggestComponentSize),
            _ => Err(unknown()),
        }
    }
}

/// One evaluation of `D_0 f(W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AddOneCostRecord {
    pub functional: String,
    pub volume: f64,
    pub value: i64,
    /// Biggest-component case: 1 the origin joins `C(W)`, 2 the origin's
    /// component becomes the biggest, 3 neither.
    pub case_tag: Option<u8>,
}

/// Classification of the biggest-component add-one cost on a coupled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiggestCase {
    pub case_tag: u8,
    pub value: i64,
    /// `#{x in P|_W : x <-> 0}` in the with-origin graph.
    pub connected_to_origin: usize,
    pub old_size: usize,
}

/// Evaluates the three-case decomposition for the biggest component.
pub fn biggest_component_case(base: &Graph, with: &Graph) -> BiggestCase {
    let (old, old_size) = biggest_component(base);
    let (new, new_size) = biggest_component(with);
    let o = with.n() - 1;
    let labels = connected_components(with);
    let origin_comp = &labels.members[labels.component_of[o]];
    let connected_to_origin = origin_comp.len() - 1;
    let case_tag = if new.binary_search(&o).is_ok() {
        if old.iter().any(|v| origin_comp.binary_search(v).is_ok()) {
            1
        } else {
            2
        }
    } else {
        3
    };
    BiggestCase {
        case_tag,
        value: new_size as i64 - old_size as i64,
        connected_to_origin,
        old_size,
    }
}

/// `D_0 f(W) = f(G(P ∪ {0})|_W) - f(G(P)|_W)` under the edge coupling.
pub fn add_one_cost(
    functional: &Functional,
    config: &Configuration,
    phi: &ConnectionFunction,
    edge_seed: u64,
    boundary: Boundary,
) -> Result<AddOneCostRecord> {
    let (base, with) = build_with_origin(config, phi, edge_seed, boundary)?;
    let (value, case_tag) = if *functional == Functional::BiggestComponentSize {
        let case = biggest_component_case(&base, &with);
        debug_assert!(case.value >= 0);
        (case.value, Some(case.case_tag))
    } else {
        (functional.evaluate(&with)? - functional.evaluate(&base)?, None)
    };
    Ok(AddOneCostRecord {
        functional: functional.to_string(),
        volume: config.window().volume(),
        value,
        case_tag,
    })
}

/// `D_0 f(W_i)` along centred windows of the given volumes, all restricted
/// from the single realization `config`.
pub fn stabilization_trace(
    functional: &Functional,
    config: &Configuration,
    volumes: &[f64],
    phi: &ConnectionFunction,
    edge_seed: u64,
) -> Result<Vec<AddOneCostRecord>> {
    let windows = nested_windows(config.dim(), volumes)?;
    windows
        .iter()
        .map(|w| {
            let sub = restrict(config, w)?;
            add_one_cost(functional, &sub, phi, edge_seed, Boundary::Free)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::point_process::{sample_poisson, Window};

    fn bfs_count(g: &SimpleGraph) -> usize {
        let mut seen = vec![false; g.n()];
        let mut count = 0;
        for s in 0..g.n() {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &w in g.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    fn brute_induced(g: &SimpleGraph, a: &PatternGraph) -> u64 {
        let n = g.n();
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == a.order())
            .filter(|m| {
                let vs: Vec<usize> = (0..n).filter(|&i| m & (1 << i) != 0).collect();
                a.matches_mask(induced_mask(g, &vs))
            })
            .count() as u64
    }

    #[test]
    fn components_basic() {
        assert_eq!(connected_components(&SimpleGraph::new(0)).count(), 0);
        assert_eq!(connected_components(&SimpleGraph::new(5)).count(), 5);
        for seed in 0..20 {
            let g = SimpleGraph::erdos_renyi(50, 0.04, seed);
            let c = connected_components(&g);
            assert_eq!(c.count(), bfs_count(&g));
            assert_eq!(c.sizes().iter().sum::<usize>(), 50);
        }
    }

    #[test]
    fn biggest_component_tie_rule() {
        let g = SimpleGraph::from_edges(6, &[(0, 1), (1, 2), (3, 4), (4, 5)]);
        let pos = [[5.0, 0.0], [6.0, 0.0], [7.0, 0.0], [1.0, 9.0], [2.0, 0.0], [3.0, 0.0]];
        assert_eq!(biggest_component_with(&g, |v| &pos[v][..]), vec![3, 4, 5]);
        let g = SimpleGraph::from_edges(8, &[(0, 1), (1, 2), (3, 4), (4, 5), (5, 6), (6, 7)]);
        let pos = [[0.0]; 8];
        assert_eq!(biggest_component_with(&g, |v| &pos[v][..]).len(), 5);
        assert!(biggest_component_with(&SimpleGraph::new(0), |_| &[][..]).is_empty());
    }

    #[test]
    fn induced_counts_match_brute_force() {
        let patterns = ["K2", "K3", "P3", "C4", "P4", "0-1;0-2;0-3"].map(|s| s.parse::<PatternGraph>().unwrap());
        for seed in 0..30 {
            let g = SimpleGraph::erdos_renyi(11, 0.35, seed);
            for a in &patterns {
                assert_eq!(count_induced_subgraphs(&g, a).unwrap(), brute_induced(&g, a), "{a} seed {seed}");
            }
        }
        let k3 = PatternGraph::complete(3).unwrap().to_graph();
        assert_eq!(count_induced_subgraphs(&k3, &PatternGraph::path(3).unwrap()).unwrap(), 0);
    }

    #[test]
    fn connected_subsets_partition_by_class() {
        // the classes of connected graphs on 4 vertices cover every connected 4-subset once
        let classes: Vec<PatternGraph> = {
            let mut seen: Vec<PatternGraph> = Vec::new();
            for m in 0..1u32 << 6 {
                let p = PatternGraph::from_mask(4, m);
                if p.is_connected() && !seen.iter().any(|q| q.is_isomorphic(&p)) {
                    seen.push(p);
                }
            }
            seen
        };
        let g = SimpleGraph::erdos_renyi(12, 0.3, 4);
        let total: u64 = classes.iter().map(|a| count_induced_subgraphs(&g, a).unwrap()).sum();
        let brute = (0u32..1 << 12)
            .filter(|m| m.count_ones() == 4)
            .filter(|m| {
                let vs: Vec<usize> = (0..12).filter(|&i| m & (1 << i) != 0).collect();
                crate::pattern::mask_connected(4, induced_mask(&g, &vs))
            })
            .count() as u64;
        assert_eq!(total, brute);
    }

    #[test]
    fn component_iso_counts() {
        let g = SimpleGraph::from_edges(7, &[(0, 1), (1, 2), (3, 4)]);
        assert_eq!(count_components_isomorphic(&g, &PatternGraph::vertex()), 2);
        assert_eq!(count_components_isomorphic(&g, &PatternGraph::path(3).unwrap()), 1);
        let p = PatternGraph::cycle(5).unwrap();
        assert_eq!(count_components_isomorphic(&p.to_graph(), &p), 1);
    }

    #[test]
    fn functional_names_round_trip() {
        for s in [
            "edge_count",
            "vertex_count",
            "subgraph_count(K3)",
            "component_count",
            "component_iso_count(P3)",
            "betti(1)",
            "biggest_component_size",
        ] {
            let f: Functional = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert_eq!("nope".parse::<Functional>(), Err(Error::UnknownFunctional("nope".into())));
    }

    #[test]
    fn add_one_cost_examples() {
        let w = Window::centered(2, 10.0).unwrap();
        let phi = ConnectionFunction::indicator(2, 1.0).unwrap();
        let empty = Configuration::from_points(w.clone(), 1.0, 0, Vec::new()).unwrap();
        let r = add_one_cost(&Functional::ComponentCount, &empty, &phi, 0, Boundary::Free).unwrap();
        assert_eq!(r.value, 1);
        let r = add_one_cost(&Functional::EdgeCount, &empty, &phi, 0, Boundary::Free).unwrap();
        assert_eq!(r.value, 0);

        let config = sample_poisson(&w, 2.0, 6).unwrap();
        let (_, with) = build_with_origin(&config, &phi, 3, Boundary::Free).unwrap();
        let r = add_one_cost(&Functional::SubgraphCount(PatternGraph::complete(2).unwrap()), &config, &phi, 3, Boundary::Free)
            .unwrap();
        assert_eq!(r.value, with.degree(with.n() - 1) as i64);
        let r = add_one_cost(&Functional::BiggestComponentSize, &config, &phi, 3, Boundary::Free).unwrap();
        assert!(r.value >= 0 && r.case_tag.is_some());
    }

    #[test]
    fn component_count_is_beta0() {
        let w = Window::centered(2, 8.0).unwrap();
        let config = sample_poisson(&w, 1.5, 1).unwrap();
        let g = build_graph(&config, &ConnectionFunction::gaussian(2, 1.0).unwrap(), 2).unwrap();
        assert_eq!(
            Functional::ComponentCount.evaluate(&g).unwrap(),
            Functional::Betti(0).evaluate(&g).unwrap()
        );
    }

    #[test]
    fn subgraph_trace_is_monotone_and_hits_the_limit() {
        let w = Window::centered(2, 20.0).unwrap();
        let phi = ConnectionFunction::indicator(2, 1.0).unwrap();
        let f = Functional::SubgraphCount(PatternGraph::complete(3).unwrap());
        let volumes = [4.0, 16.0, 64.0, 144.0, 400.0];
        for seed in 0..10 {
            let config = sample_poisson(&w, 1.5, seed).unwrap();
            let trace = stabilization_trace(&f, &config, &volumes, &phi, seed + 100).unwrap();
            assert!(trace.windows(2).all(|p| p[0].value <= p[1].value));
            // terminal value: triangles through 0 in the full with-origin graph
            let (_, with) = build_with_origin(&config, &phi, seed + 100, Boundary::Free).unwrap();
            let o = with.n() - 1;
            let nb = with.neighbors(o);
            let mut tri = 0;
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    tri += with.has_edge(a, b) as i64;
                }
            }
            assert_eq!(trace.last().unwrap().value, tri);
        }
    }
}
