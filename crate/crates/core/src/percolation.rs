//! Tessellation devices for the biggest component and Monte Carlo estimates
//! of the crossing and long-edge probabilities.
//!
//! Two cubes are adjacent when their lattice coordinates differ by at most one
//! in every axis (a cube is adjacent to itself).

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::connection::ConnectionFunction;
use crate::error::{Error, Result};
use crate::functionals::{biggest_component_with, connected_components};
use crate::graph::{build_graph, Graph, SimpleGraph};
use crate::limits::LimitEstimate;
use crate::point_process::{sample_poisson, Window};
use crate::rng::{derive_seed, pair_uniform_unchecked};

const POINT_STREAM: u64 = 0x5045_5243;
const EDGE_STREAM: u64 = 0x4544_4745;

/// Tail mass (relative to `m_phi`) ignored when padding windows for unbounded `phi`.
pub const PADDING_TAIL: f64 = 1e-6;

/// A set of positions that can be asked for membership.
pub trait Region {
    fn contains(&self, x: &[f64]) -> bool;
}

impl Region for Window {
    fn contains(&self, x: &[f64]) -> bool {
        Window::contains(self, x)
    }
}

/// `B^J_x(r) = x + Π_{j∈J} [-r, r] × Π_{j∉J} [0, 2r]`, closed.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusBox {
    pub center: Vec<f64>,
    pub active: Vec<bool>,
    pub radius: f64,
}

impl AnnulusBox {
    /// `active[j]` marks `j ∈ J`.
    pub fn new(center: Vec<f64>, active: Vec<bool>, radius: f64) -> Result<Self> {
        if center.len() != active.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: active.len(),
            });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius", format!("must be positive, got {radius}")));
        }
        Ok(Self { center, active, radius })
    }

    /// The centred cube `B_x(r) = x + [-r, r]^d`.
    pub fn cube(center: Vec<f64>, radius: f64) -> Result<Self> {
        let d = center.len();
        Self::new(center, vec![true; d], radius)
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.center.clone(), self.active.clone(), radius)
    }

    pub fn lower(&self) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.active)
            .map(|(&c, &a)| if a { c - self.radius } else { c })
            .collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.lower().iter().map(|l| l + 2.0 * self.radius).collect()
    }
}

impl Region for AnnulusBox {
    fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.center.len()
            && x.iter().zip(self.center.iter().zip(&self.active)).all(|(&xi, (&c, &a))| {
                let y = xi - c;
                if a {
                    (-self.radius..=self.radius).contains(&y)
                } else {
                    (0.0..=2.0 * self.radius).contains(&y)
                }
            })
    }
}

/// Partition of a vertex subset into cubes of side `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tessellation {
    delta: f64,
    cube_of: BTreeMap<usize, Vec<i64>>,
    cubes: BTreeMap<Vec<i64>, Vec<usize>>,
}

impl Tessellation {
    /// Tessellates the listed vertices of `graph`; every cube's members are
    /// kept in id order, so the first member is the representative.
    pub fn new(graph: &Graph, vertices: &[usize], delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
        }
        let mut cube_of = BTreeMap::new();
        let mut cubes: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for &v in vertices {
            let c: Vec<i64> = graph.config().position(v).iter().map(|x| (x / delta).floor() as i64).collect();
            cubes.entry(c.clone()).or_default().push(v);
            cube_of.insert(v, c);
        }
        for members in cubes.values_mut() {
            members.sort_by_key(|&v| graph.config().id(v));
        }
        Ok(Self { delta, cube_of, cubes })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cube(&self, v: usize) -> Option<&[i64]> {
        self.cube_of.get(&v).map(Vec::as_slice)
    }

    /// Cubes holding at least one point, with their members.
    pub fn open_cubes(&self) -> &BTreeMap<Vec<i64>, Vec<usize>> {
        &self.cubes
    }

    /// One representative per open cube, the member with the lowest id.
    pub fn representatives(&self) -> Vec<usize> {
        let mut reps: Vec<usize> = self.cubes.values().map(|m| m[0]).collect();
        reps.sort_unstable();
        reps
    }
}

pub fn cubes_adjacent(a: &[i64], b: &[i64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1)
}

fn cube_index(x: &[f64], delta: f64) -> Vec<i64> {
    x.iter().map(|v| (v / delta).floor() as i64).collect()
}

/// `G_δ`: the graph with every edge between non-adjacent cubes removed.
pub fn g_delta(graph: &Graph, delta: f64) -> SimpleGraph {
    let config = graph.config();
    let edges: Vec<(usize, usize)> = graph
        .edges()
        .into_iter()
        .filter(|&(a, b)| cubes_adjacent(&cube_index(config.position(a), delta), &cube_index(config.position(b), delta)))
        .collect();
    SimpleGraph::from_edges(graph.n(), &edges)
}

/// `Per(δ)`: `G_δ` induced on the cube representatives. `vertices[i]` is
/// the original index of vertex `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerGraph {
    pub graph: SimpleGraph,
    pub vertices: Vec<usize>,
}

pub fn per_graph(graph: &Graph, delta: f64) -> Result<PerGraph> {
    let all: Vec<usize> = (0..graph.n()).collect();
    let tess = Tessellation::new(graph, &all, delta)?;
    let gd = g_delta(graph, delta);
    let vertices = tess.representatives();
    Ok(PerGraph {
        graph: gd.induced(&vertices),
        vertices,
    })
}

/// `C_δ(Λ)`: the component of `G_δ|_Λ` holding the biggest cluster of
/// `Per(δ)|_Λ`. Representatives are chosen among the points of `Λ`.
/// Returns sorted vertex indices of `graph`; empty when `Λ` holds no point.
pub fn c_delta(graph: &Graph, region: &impl Region, delta: f64) -> Result<Vec<usize>> {
    let gd = g_delta(graph, delta);
    c_delta_with(graph, &gd, region, delta)
}

fn c_delta_with(graph: &Graph, gd: &SimpleGraph, region: &impl Region, delta: f64) -> Result<Vec<usize>> {
    let config = graph.config();
    let inside: Vec<usize> = (0..graph.n()).filter(|&v| region.contains(config.position(v))).collect();
    if inside.is_empty() {
        return Ok(Vec::new());
    }
    let local = gd.induced(&inside);
    let tess = Tessellation::new(graph, &inside, delta)?;
    let reps = tess.representatives();
    let rep_local: Vec<usize> = reps.iter().map(|r| inside.binary_search(r).unwrap()).collect();
    let per = local.induced(&rep_local);
    let cluster = biggest_component_with(&per, |i| config.position(reps[i]));
    let seed = rep_local[cluster[0]];
    let labels = connected_components(&local);
    Ok(labels.members[labels.component_of[seed]].iter().map(|&i| inside[i]).collect())
}

fn per_rep<T: Send>(reps: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..reps).into_par_iter().map(f).collect()
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive, got {v}")))
    }
}

fn padding(phi: &ConnectionFunction) -> Result<f64> {
    Ok(phi.tail_radius(PADDING_TAIL * phi.m_phi()?))
}

fn realize(window: &Window, phi: &ConnectionFunction, lambda: f64, seed: u64, rep: usize) -> Result<Graph> {
    let config = sample_poisson(window, lambda, derive_seed(seed, POINT_STREAM, rep as u64))?;
    build_graph(&config, phi, derive_seed(seed, EDGE_STREAM, rep as u64))
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Whether some edge `x ~ y` has `|x|_∞ <= 2t` and `|x - y|_∞ >= αt`.
pub fn long_edge_event(graph: &Graph, alpha: f64, t: f64) -> bool {
    let config = graph.config();
    let origin = vec![0.0; config.dim()];
    (0..graph.n()).any(|v| {
        sup_dist(config.position(v), &origin) <= 2.0 * t
            && graph
                .neighbors(v)
                .iter()
                .any(|&w| sup_dist(config.position(v), config.position(w)) >= alpha * t)
    })
}

/// `κ(α, t)`, the probability of a long edge near the origin.
pub fn estimate_kappa(
    phi: &ConnectionFunction,
    lambda: f64,
    alpha: f64,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<LimitEstimate> {
    check_positive("lambda", lambda)?;
    check_positive("alpha", alpha)?;
    check_positive("t", t)?;
    let half = 2.0 * t + padding(phi)?;
    let window = Window::centered(phi.dim(), 2.0 * half)?;
    let hits = per_rep(reps, |rep| {
        let config = sample_poisson(&window, lambda, derive_seed(seed, POINT_STREAM, rep as u64))?;
        let edge_seed = derive_seed(seed, EDGE_STREAM, rep as u64);
        let origin = vec![0.0; phi.dim()];
        let n = config.len();
        // only edges leaving the inner box matter, so test those pairs directly
        Ok((0..n).any(|v| {
            let x = config.position(v);
            sup_dist(x, &origin) <= 2.0 * t
                && (0..n).any(|w| {
                    w != v && {
                        let y = config.position(w);
                        sup_dist(x, y) >= alpha * t && {
                            let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                            pair_uniform_unchecked(edge_seed, config.id(v), config.id(w)) < phi.radial_sq(r2)
                        }
                    }
                })
        }))
    })?;
    Ok(LimitEstimate::frequency(hits.iter().filter(|&&h| h).count(), reps))
}

/// The crossing event `A_{θ_J}` on one realization: a path that starts in
/// `B^J(s)`, runs through `B^J(t) \ C_δ(B^J(t))` and ends in `B^J(2t) \ B^J(t)`.
pub fn crossing_event(graph: &Graph, inner: &AnnulusBox, s: f64, t: f64, delta: f64) -> Result<bool> {
    let config = graph.config();
    let bs = inner.with_radius(s)?;
    let bt = inner.with_radius(t)?;
    let b2t = inner.with_radius(2.0 * t)?;
    let excluded = c_delta(graph, &bt, delta)?;
    let allowed = |v: usize| bt.contains(config.position(v)) && excluded.binary_search(&v).is_err();
    let target = |v: usize| {
        let x = config.position(v);
        b2t.contains(x) && !bt.contains(x)
    };
    let mut seen = vec![false; graph.n()];
    let mut stack: Vec<usize> = (0..graph.n())
        .filter(|&v| bs.contains(config.position(v)) && allowed(v))
        .collect();
    for &v in &stack {
        seen[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &w in graph.neighbors(v) {
            if target(w) {
                return Ok(true);
            }
            if !seen[w] && allowed(w) {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    Ok(false)
}

/// `θ_J(s, t)` for the box anchored at the origin; `active[j]` marks `j ∈ J`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_crossing_theta(
    phi: &ConnectionFunction,
    lambda: f64,
    active: &[bool],
    delta: f64,
    s: f64,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<LimitEstimate> {
    check_positive("lambda", lambda)?;
    check_positive("s", s)?;
    if t < 2.0 * s {
        return Err(Error::invalid("t", format!("need t >= 2s, got s = {s}, t = {t}")));
    }
    let inner = AnnulusBox::new(vec![0.0; phi.dim()], active.to_vec(), t)?;
    let outer = inner.with_radius(2.0 * t)?;
    // a tiny margin keeps the closed far faces inside the half-open window
    let side = 4.0 * t * (1.0 + 1e-9);
    let window = Window::new(outer.lower(), side)?;
    let hits = per_rep(reps, |rep| {
        let g = realize(&window, phi, lambda, seed, rep)?;
        crossing_event(&g, &inner, s, t, delta)
    })?;
    Ok(LimitEstimate::frequency(hits.iter().filter(|&&h| h).count(), reps))
}

/// Result of [`estimate_beta_nu`]. `nu_center` is the grid centre attaining
/// the supremum.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaNu {
    pub beta: LimitEstimate,
    pub nu: LimitEstimate,
    pub nu_center: Vec<f64>,
}

/// Centres `y` with `|y|_∞ <= t - s`, `per_axis` values per coordinate.
pub fn nu_grid(d: usize, s: f64, t: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let reach = t - s;
    let values: Vec<f64> = if per_axis <= 1 {
        vec![0.0]
    } else {
        (0..per_axis)
            .map(|i| -reach + 2.0 * reach * i as f64 / (per_axis - 1) as f64)
            .collect()
    };
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

pub const DEFAULT_GUARD_FACTOR: f64 = 3.0;
pub const DEFAULT_NU_GRID: usize = 3;

fn subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|v| b.binary_search(v).is_ok())
}

/// `β_δ(t)` with `C_δ(R^d)` replaced by `C_δ` of a guard cube of side
/// `guard_factor · 2t`, and `ν_δ(s, t)` maximised over [`nu_grid`].
#[allow(clippy::too_many_arguments)]
pub fn estimate_beta_nu(
    phi: &ConnectionFunction,
    lambda: f64,
    delta: f64,
    s: f64,
    t: f64,
    reps: usize,
    seed: u64,
    guard_factor: f64,
    grid_per_axis: usize,
) -> Result<BetaNu> {
    check_positive("lambda", lambda)?;
    check_positive("s", s)?;
    if t < 2.0 * s {
        return Err(Error::invalid("t", format!("need t >= 2s, got s = {s}, t = {t}")));
    }
    if guard_factor < 1.0 {
        return Err(Error::invalid("guard_factor", "must be at least 1"));
    }
    let d = phi.dim();
    let guard_side = guard_factor * 2.0 * t;
    let window = Window::centered(d, guard_side * (1.0 + 1e-9))?;
    let guard = AnnulusBox::cube(vec![0.0; d], guard_side / 2.0)?;
    let bt = AnnulusBox::cube(vec![0.0; d], t)?;
    let centers = nu_grid(d, s, t, grid_per_axis);
    let outcomes = per_rep(reps, |rep| {
        let g = realize(&window, phi, lambda, seed, rep)?;
        let gd = g_delta(&g, delta);
        let c_guard = c_delta_with(&g, &gd, &guard, delta)?;
        let c_t = c_delta_with(&g, &gd, &bt, delta)?;
        let beta = !subset(&c_t, &c_guard);
        let nu = centers
            .iter()
            .map(|y| {
                let by = AnnulusBox::cube(y.clone(), s)?;
                Ok(!subset(&c_delta_with(&g, &gd, &by, delta)?, &c_t))
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok((beta, nu))
    })?;
    let beta_hits = outcomes.iter().filter(|o| o.0).count();
    let mut best = 0;
    let mut best_hits = 0;
    for (i, _) in centers.iter().enumerate() {
        let hits = outcomes.iter().filter(|o| o.1[i]).count();
        if hits > best_hits {
            best = i;
            best_hits = hits;
        }
    }
    Ok(BetaNu {
        beta: LimitEstimate::frequency(beta_hits, reps),
        nu: LimitEstimate::frequency(best_hits, reps),
        nu_center: centers[best].clone(),
    })
}

/// Frequency of `|G(P|_Λ)| = |C_δ(Λ)|` on a centred cube of the given volume.
pub fn estimate_full_capture(
    phi: &ConnectionFunction,
    lambda: f64,
    delta: f64,
    volume: f64,
    reps: usize,
    seed: u64,
) -> Result<LimitEstimate> {
    check_positive("lambda", lambda)?;
    check_positive("volume", volume)?;
    let window = Window::centered(phi.dim(), volume.powf(1.0 / phi.dim() as f64))?;
    let hits = per_rep(reps, |rep| {
        let g = realize(&window, phi, lambda, seed, rep)?;
        Ok(c_delta(&g, &window, delta)?.len() == g.n())
    })?;
    Ok(LimitEstimate::frequency(hits.iter().filter(|&&h| h).count(), reps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::point_process::{sample_poisson, Configuration};

    fn ind(r: f64) -> ConnectionFunction {
        ConnectionFunction::indicator(2, r).unwrap()
    }

    fn random_graph(side: f64, lambda: f64, phi: &ConnectionFunction, seed: u64) -> Graph {
        let w = Window::centered(2, side).unwrap();
        let c = sample_poisson(&w, lambda, seed).unwrap();
        build_graph(&c, phi, seed ^ 77).unwrap()
    }

    #[test]
    fn annulus_box_membership() {
        let b = AnnulusBox::new(vec![1.0, 1.0], vec![true, false], 0.5).unwrap();
        assert!(b.contains(&[0.5, 1.0]));
        assert!(b.contains(&[1.5, 2.0]));
        assert!(!b.contains(&[1.0, 0.99]));
        assert!(!b.contains(&[1.51, 1.5]));
        assert_eq!(b.lower(), vec![0.5, 1.0]);
        assert_eq!(b.upper(), vec![1.5, 2.0]);
    }

    #[test]
    fn complete_per_graph_on_adjacent_cubes() {
        let w = Window::new(vec![0.0, 0.0], 2.0).unwrap();
        let pos = vec![vec![0.5, 0.5], vec![1.5, 0.5], vec![0.5, 1.5], vec![1.5, 1.5], vec![0.6, 0.6]];
        let c = Configuration::from_positions(w, pos).unwrap();
        let g = build_graph(&c, &ind(10.0), 1).unwrap();
        let per = per_graph(&g, 1.0).unwrap();
        assert_eq!(per.vertices.len(), 4);
        assert_eq!(per.graph.edge_count(), 6);
    }

    #[test]
    fn non_adjacent_edge_is_dropped() {
        let w = Window::new(vec![0.0, 0.0], 4.0).unwrap();
        let c = Configuration::from_positions(w, vec![vec![0.1, 0.1], vec![2.9, 0.1]]).unwrap();
        let g = build_graph(&c, &ind(10.0), 1).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g_delta(&g, 1.0).edge_count(), 0);
        assert_eq!(g_delta(&g, 1.5).edge_count(), 1);
    }

    #[test]
    fn per_graph_matches_filter_oracle_and_nests() {
        for seed in 0..20 {
            let g = random_graph(6.0, 3.0, &ind(1.0), seed);
            let delta = 0.4;
            let per = per_graph(&g, delta).unwrap();
            let gd = g_delta(&g, delta);
            let cube = |v: usize| cube_index(g.config().position(v), delta);
            let mut expected = Vec::new();
            for (a, b) in g.edges() {
                let rep = |v: usize| {
                    (0..g.n())
                        .filter(|&u| cube(u) == cube(v))
                        .min_by_key(|&u| g.config().id(u))
                        .unwrap()
                        == v
                };
                if cubes_adjacent(&cube(a), &cube(b)) && rep(a) && rep(b) {
                    expected.push((a, b));
                }
            }
            let mut got: Vec<(usize, usize)> = per
                .graph
                .edges()
                .into_iter()
                .map(|(i, j)| (per.vertices[i], per.vertices[j]))
                .collect();
            got.sort_unstable();
            assert_eq!(got, expected);
            assert!(gd.edges().iter().all(|&(a, b)| g.has_edge(a, b)));
            assert!(got.iter().all(|&(a, b)| gd.has_edge(a, b)));
        }
    }

    #[test]
    fn c_delta_edge_cases() {
        let g = random_graph(3.0, 4.0, &ind(10.0), 5);
        let all = c_delta(&g, g.config().window(), 100.0).unwrap();
        assert_eq!(all, (0..g.n()).collect::<Vec<_>>());
        let w = Window::centered(2, 3.0).unwrap();
        let empty = Configuration::from_positions(w.clone(), vec![]).unwrap();
        let ge = build_graph(&empty, &ind(1.0), 0).unwrap();
        assert!(c_delta(&ge, &w, 0.5).unwrap().is_empty());
    }

    #[test]
    fn c_delta_contains_per_cluster() {
        for seed in 0..10 {
            let g = random_graph(8.0, 1.5, &ind(1.0), seed);
            let window = g.config().window().clone();
            let c = c_delta(&g, &window, 0.5).unwrap();
            let per = per_graph(&g, 0.5).unwrap();
            let cluster = biggest_component_with(&per.graph, |i| g.config().position(per.vertices[i]));
            assert!(cluster.iter().all(|&i| c.binary_search(&per.vertices[i]).is_ok()));
        }
    }

    #[test]
    fn kappa_zero_beyond_support() {
        let k = estimate_kappa(&ind(1.0), 2.0, 1.0, 1.5, 20, 3).unwrap();
        assert_eq!(k.value, 0.0);
    }

    #[test]
    fn kappa_matches_pair_oracle() {
        let phi = ConnectionFunction::tabulated(2, vec![0.0, 1.0], vec![0.3, 0.3]).unwrap();
        let (alpha, t, lambda) = (0.5, 0.5, 2.0);
        let est = estimate_kappa(&phi, lambda, alpha, t, 200, 4).unwrap();
        let half = 2.0 * t + phi.tail_radius(PADDING_TAIL * phi.m_phi().unwrap());
        let window = Window::centered(2, 2.0 * half).unwrap();
        let mut hits = 0;
        for rep in 0..200 {
            let g = realize(&window, &phi, lambda, 4, rep).unwrap();
            hits += usize::from(long_edge_event(&g, alpha, t));
        }
        assert_eq!(est.value, hits as f64 / 200.0);
    }

    #[test]
    fn kappa_decays_for_heavy_tails() {
        let phi = ConnectionFunction::poly_tail(1, 1.0, 0.5, 1.0).unwrap();
        let a = estimate_kappa(&phi, 1.0, 1.0, 1.0, 400, 1).unwrap();
        let b = estimate_kappa(&phi, 1.0, 1.0, 4.0, 400, 1).unwrap();
        assert!(a.value > b.value, "{a:?} {b:?}");
    }

    /// Reachability by exhaustive simple-path search.
    fn crossing_oracle(g: &Graph, inner: &AnnulusBox, s: f64, t: f64, delta: f64) -> bool {
        let cfg = g.config();
        let bs = inner.with_radius(s).unwrap();
        let bt = inner.with_radius(t).unwrap();
        let b2t = inner.with_radius(2.0 * t).unwrap();
        let excl = c_delta(g, &bt, delta).unwrap();
        let ok = |v: usize| bt.contains(cfg.position(v)) && !excl.contains(&v);
        fn dfs(g: &Graph, path: &mut Vec<usize>, ok: &dyn Fn(usize) -> bool, end: &dyn Fn(usize) -> bool) -> bool {
            let v = *path.last().unwrap();
            for &w in g.neighbors(v) {
                if path.contains(&w) {
                    continue;
                }
                if end(w) {
                    return true;
                }
                if ok(w) {
                    path.push(w);
                    if dfs(g, path, ok, end) {
                        return true;
                    }
                    path.pop();
                }
            }
            false
        }
        let end = |v: usize| b2t.contains(cfg.position(v)) && !bt.contains(cfg.position(v));
        (0..g.n())
            .filter(|&v| bs.contains(cfg.position(v)) && ok(v))
            .any(|v| dfs(g, &mut vec![v], &ok, &end))
    }

    #[test]
    fn crossing_matches_path_oracle() {
        let phi = ind(0.9);
        let inner = AnnulusBox::new(vec![0.0, 0.0], vec![true, false], 1.0).unwrap();
        let outer = inner.with_radius(2.0).unwrap();
        let window = Window::new(outer.lower(), 4.0 + 1e-9).unwrap();
        let mut seen_true = false;
        for rep in 0..60 {
            let g = realize(&window, &phi, 1.2, 11, rep).unwrap();
            let fast = crossing_event(&g, &inner, 0.5, 1.0, 0.3).unwrap();
            assert_eq!(fast, crossing_oracle(&g, &inner, 0.5, 1.0, 0.3), "rep {rep}");
            seen_true |= fast;
        }
        assert!(seen_true);
    }

    #[test]
    fn crossing_trivial_cases() {
        let j = [true, true];
        let none = estimate_crossing_theta(&ind(1.0), 1e-9, &j, 0.5, 1.0, 2.0, 10, 0).unwrap();
        assert_eq!(none.value, 0.0);
        let huge = estimate_crossing_theta(&ind(50.0), 2.0, &j, 1e6, 1.0, 2.0, 10, 0).unwrap();
        assert_eq!(huge.value, 0.0);
        assert!(estimate_crossing_theta(&ind(1.0), 1.0, &j, 0.5, 1.0, 1.5, 10, 0).is_err());
    }

    #[test]
    fn nu_grid_shape() {
        let g = nu_grid(2, 1.0, 3.0, 3);
        assert_eq!(g.len(), 9);
        assert!(g.contains(&vec![-2.0, 2.0]));
        assert!(g.contains(&vec![0.0, 0.0]));
    }

    #[test]
    fn beta_nu_dense_regime_is_small() {
        let r = estimate_beta_nu(&ind(1.0), 8.0, 0.5, 1.0, 2.0, 20, 3, DEFAULT_GUARD_FACTOR, DEFAULT_NU_GRID).unwrap();
        assert!(r.beta.value <= 0.1, "{r:?}");
        assert!(r.nu.value <= 0.1, "{r:?}");
        let sparse = estimate_beta_nu(&ind(1.0), 1e-9, 0.5, 1.0, 2.0, 5, 3, DEFAULT_GUARD_FACTOR, DEFAULT_NU_GRID).unwrap();
        assert_eq!(sparse.beta.value, 0.0);
    }

    #[test]
    fn estimators_are_deterministic() {
        let a = estimate_full_capture(&ind(1.0), 3.0, 0.5, 25.0, 12, 9).unwrap();
        let b = estimate_full_capture(&ind(1.0), 3.0, 0.5, 25.0, 12, 9).unwrap();
        assert_eq!(a, b);
    }
}
