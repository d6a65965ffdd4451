//! Limiting constants of subgraph and component counts.
//!
//! Edge randomness is always summed out exactly: `ψ_A` enumerates the labeled
//! copies of `A` on the given positions. Positions are integrated by importance
//! sampling. The default proposal picks a uniform spanning tree of a structure
//! graph (the complete graph on the pattern, or the union of the two pattern
//! cliques for covariances) and lays its edges down with displacements drawn
//! from `phi / m_phi`. The proposal density is then
//! `τ(x) / (N_S m_phi^{n-1})`, where `τ(x) = Σ_T Π_{e∈T} phi(e)` is the weighted
//! spanning-tree count and `N_S` the unweighted one, and every weight is bounded
//! by `N_S m_phi^{n-1}` because `ψ <= P(connected) <= τ`.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use crate::connection::ConnectionFunction;
use crate::error::{Error, Result};
use crate::graph::{squared_distance, SimpleGraph};
use crate::pattern::{pair_bit, pair_count, PatternGraph};
use crate::quadrature;
use crate::rng::{derive_seed, stream};

const CHUNKS: u64 = 64;

/// Truncation level for the isolation integral's tail.
pub const ISOLATION_TAIL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    ImportanceMc,
    Quadrature,
    MonteCarlo,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::ImportanceMc => "importance-mc",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub method: Method,
    /// Largest importance weight seen (0 for non-sampled estimates).
    pub max_weight: f64,
}

impl LimitEstimate {
    /// Binomial frequency estimate from `hits` successes in `reps` trials.
    pub fn frequency(hits: usize, reps: usize) -> Self {
        let p = if reps == 0 { 0.0 } else { hits as f64 / reps as f64 };
        Self {
            value: p,
            stderr: if reps == 0 { 0.0 } else { (p * (1.0 - p) / reps as f64).sqrt() },
            n_samples: reps,
            method: Method::MonteCarlo,
            max_weight: 0.0,
        }
    }

    fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            n_samples: 0,
            method: Method::Exact,
            max_weight: 0.0,
        }
    }

    fn scaled(&self, c: f64) -> Self {
        Self {
            value: self.value * c,
            stderr: self.stderr * c.abs(),
            max_weight: self.max_weight,
            ..self.clone()
        }
    }
}

/// How positions are proposed for the importance sampler.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Proposal {
    /// Uniform spanning tree of the structure graph, re-drawn per sample.
    #[default]
    SpanningTreeMixture,
    /// One fixed spanning tree, given as edges over the pattern's vertices.
    FixedTree(Vec<(usize, usize)>),
}

fn pair_probabilities(positions: &[Vec<f64>], phi: &ConnectionFunction) -> Vec<f64> {
    let n = positions.len();
    let mut p = vec![0.0; pair_count(n)];
    for j in 1..n {
        for i in 0..j {
            let bit = pair_bit(i, j).trailing_zeros() as usize;
            p[bit] = phi.radial_sq(squared_distance(&positions[i], &positions[j], None));
        }
    }
    p
}

/// Probability of the labeled edge set `mask` over the pairs selected by `scope`.
#[inline]
fn mask_probability(p: &[f64], mask: u32, scope: u32) -> f64 {
    let mut prob = 1.0;
    let mut s = scope;
    while s != 0 {
        let b = s.trailing_zeros() as usize;
        s &= s - 1;
        prob *= if mask & (1 << b) != 0 { p[b] } else { 1.0 - p[b] };
        if prob == 0.0 {
            break;
        }
    }
    prob
}

fn full_scope(n: usize) -> u32 {
    ((1u64 << pair_count(n)) - 1) as u32
}

/// `ψ_A(x_1, ..., x_{k+1}) = P(Γ(x_1, ..., x_{k+1}) ≃ A)`, or 0 when two
/// positions coincide.
pub fn psi_a_exact(positions: &[Vec<f64>], phi: &ConnectionFunction, a: &PatternGraph) -> Result<f64> {
    if positions.len() != a.order() {
        return Err(Error::invalid(
            "positions",
            format!("expected {} points, got {}", a.order(), positions.len()),
        ));
    }
    for x in positions {
        if x.len() != phi.dim() {
            return Err(Error::DimensionMismatch {
                expected: phi.dim(),
                got: x.len(),
            });
        }
    }
    for j in 1..positions.len() {
        if positions[..j].iter().any(|x| *x == positions[j]) {
            return Ok(0.0);
        }
    }
    Ok(psi_from_pairs(&pair_probabilities(positions, phi), a))
}

fn psi_from_pairs(p: &[f64], a: &PatternGraph) -> f64 {
    let scope = full_scope(a.order());
    a.orbit().iter().map(|&m| mask_probability(p, m, scope)).sum()
}

/// Determinant by Gaussian elimination with partial pivoting.
fn determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            if f != 0.0 {
                let (top, bottom) = m.split_at_mut(r);
                for (x, p) in bottom[0][c..].iter_mut().zip(&top[c][c..]) {
                    *x -= f * p;
                }
            }
        }
    }
    det
}

/// Weighted spanning-tree count of `g` with edge weights `w(a, b)`.
fn matrix_tree(g: &SimpleGraph, w: impl Fn(usize, usize) -> f64) -> f64 {
    let n = g.n();
    if n <= 1 {
        return 1.0;
    }
    let mut lap = vec![vec![0.0; n - 1]; n - 1];
    for (a, b) in g.edges() {
        let x = w(a, b);
        for (u, v) in [(a, b), (b, a)] {
            if u > 0 {
                lap[u - 1][u - 1] += x;
                if v > 0 {
                    lap[u - 1][v - 1] -= x;
                }
            }
        }
    }
    determinant(lap)
}

/// Uniform spanning tree of a connected graph by Wilson's algorithm, as
/// parent pointers towards vertex 0.
fn wilson<R: Rng + ?Sized>(g: &SimpleGraph, rng: &mut R) -> Vec<usize> {
    let n = g.n();
    let mut in_tree = vec![false; n];
    let mut next = vec![usize::MAX; n];
    in_tree[0] = true;
    for start in 1..n {
        let mut u = start;
        while !in_tree[u] {
            let nb = g.neighbors(u);
            next[u] = nb[rng.random_range(0..nb.len())];
            u = next[u];
        }
        u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            u = next[u];
        }
    }
    next
}

fn parents_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>> {
    let tree = SimpleGraph::from_edges(n, edges);
    if edges.len() + 1 != n {
        return Err(Error::invalid("proposal", "a spanning tree needs exactly n - 1 edges"));
    }
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = vec![0];
    while let Some(v) = queue.pop() {
        for &w in tree.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                queue.push(w);
            }
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(parent)
    } else {
        Err(Error::invalid("proposal", "tree edges do not span the pattern"))
    }
}

/// Places vertex 0 at the origin and every other vertex at its parent plus a
/// `phi / m_phi` displacement.
fn lay_tree<R: Rng + ?Sized>(parent: &[usize], phi: &ConnectionFunction, rng: &mut R) -> Vec<Vec<f64>> {
    let n = parent.len();
    let mut pos: Vec<Option<Vec<f64>>> = vec![None; n];
    pos[0] = Some(vec![0.0; phi.dim()]);
    let mut placed = 1;
    // every vertex is placed after its parent; n is tiny so repeated sweeps are fine
    while placed < n {
        for v in 1..n {
            if pos[v].is_none() {
                if let Some(p) = pos[parent[v]].clone() {
                    let d = phi.sample_displacement(rng);
                    pos[v] = Some(p.iter().zip(d).map(|(a, b)| a + b).collect());
                    placed += 1;
                }
            }
        }
    }
    pos.into_iter().map(Option::unwrap).collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
    max: f64,
}

impl Moments {
    fn push(&mut self, w: f64) {
        self.n += 1;
        self.sum += w;
        self.sum_sq += w * w;
        self.max = self.max.max(w);
    }

    fn merge(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
            max: self.max.max(o.max),
        }
    }
}

/// `∫ f(0, x_1, ..., x_{n-1}) dx` by importance sampling over `structure`.
fn importance_integral<F>(
    phi: &ConnectionFunction,
    structure: &SimpleGraph,
    proposal: &Proposal,
    n_samples: usize,
    seed: u64,
    integrand: F,
) -> Result<LimitEstimate>
where
    F: Fn(&[Vec<f64>]) -> Result<f64> + Sync,
{
    let [e] = importance_integrals(phi, structure, proposal, n_samples, seed, |pos| Ok([integrand(pos)?]))?;
    Ok(e)
}

/// Several integrands sharing the same proposal draws.
fn importance_integrals<F, const K: usize>(
    phi: &ConnectionFunction,
    structure: &SimpleGraph,
    proposal: &Proposal,
    n_samples: usize,
    seed: u64,
    integrand: F,
) -> Result<[LimitEstimate; K]>
where
    F: Fn(&[Vec<f64>]) -> Result<[f64; K]> + Sync,
{
    let n = structure.n();
    if n == 1 {
        return Ok(integrand(&[vec![0.0; phi.dim()]])?.map(LimitEstimate::exact));
    }
    if n_samples < 2 {
        return Err(Error::invalid("n_samples", "need at least two samples"));
    }
    let m_phi = phi.m_phi()?;
    let scale = m_phi.powi(n as i32 - 1);
    let n_trees = matrix_tree(structure, |_, _| 1.0).round();
    let fixed = match proposal {
        Proposal::SpanningTreeMixture => None,
        Proposal::FixedTree(edges) => Some(parents_from_edges(n, edges)?),
    };

    let chunks: Vec<Result<[Moments; K]>> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let count = n_samples / CHUNKS as usize + usize::from((c as usize) < n_samples % CHUNKS as usize);
            let mut rng = stream(derive_seed(seed, 0x4C49_4D49, c));
            let mut m = [Moments::default(); K];
            for _ in 0..count {
                let (positions, density) = match &fixed {
                    Some(parent) => {
                        let pos = lay_tree(parent, phi, &mut rng);
                        let q: f64 = (1..n)
                            .map(|v| phi.radial_sq(squared_distance(&pos[v], &pos[parent[v]], None)))
                            .product();
                        (pos, q)
                    }
                    None => {
                        let parent = wilson(structure, &mut rng);
                        let pos = lay_tree(&parent, phi, &mut rng);
                        let tau = matrix_tree(structure, |a, b| phi.radial_sq(squared_distance(&pos[a], &pos[b], None)));
                        (pos, tau / n_trees)
                    }
                };
                let f = integrand(&positions)?;
                for (m, f) in m.iter_mut().zip(f) {
                    m.push(if f == 0.0 { 0.0 } else { f * scale / density });
                }
            }
            Ok(m)
        })
        .collect();
    let mut total = [Moments::default(); K];
    for c in chunks {
        for (t, m) in total.iter_mut().zip(c?) {
            *t = t.merge(m);
        }
    }
    Ok(total.map(|t| {
        let nf = t.n as f64;
        let mean = t.sum / nf;
        let var = ((t.sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        LimitEstimate {
            value: mean,
            stderr: (var / nf).sqrt(),
            n_samples: t.n,
            method: Method::ImportanceMc,
            max_weight: t.max,
        }
    }))
}

/// Upper bound on mixture-proposal weights: `N_S m_phi^{n-1}`.
pub fn weight_bound(phi: &ConnectionFunction, structure: &SimpleGraph) -> Result<f64> {
    Ok(matrix_tree(structure, |_, _| 1.0).round() * phi.m_phi()?.powi(structure.n() as i32 - 1))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("lambda", format!("must be positive, got {lambda}")))
    }
}

/// `h_A = λ^k / k! ∫ ψ_A(0, x_1, ..., x_k) dx`, the expected number of induced
/// copies of `A` through the origin.
pub fn estimate_h_a(
    phi: &ConnectionFunction,
    lambda: f64,
    a: &PatternGraph,
    n_samples: usize,
    seed: u64,
) -> Result<LimitEstimate> {
    estimate_h_a_with(phi, lambda, a, n_samples, seed, &Proposal::default())
}

pub fn estimate_h_a_with(
    phi: &ConnectionFunction,
    lambda: f64,
    a: &PatternGraph,
    n_samples: usize,
    seed: u64,
    proposal: &Proposal,
) -> Result<LimitEstimate> {
    check_lambda(lambda)?;
    a.require_connected()?;
    let k = a.order() - 1;
    let structure = PatternGraph::complete(a.order())?.to_graph();
    let integral = importance_integral(phi, &structure, proposal, n_samples, seed, |pos| {
        Ok(psi_from_pairs(&pair_probabilities(pos, phi), a))
    })?;
    Ok(integral.scaled(lambda.powi(k as i32) / factorial(k)))
}

/// `lim E[ξ^{(A)}] / |W| = λ / (k+1) h_A`.
pub fn estimate_mean_density(
    a: &PatternGraph,
    phi: &ConnectionFunction,
    lambda: f64,
    n_samples: usize,
    seed: u64,
) -> Result<LimitEstimate> {
    let h = estimate_h_a(phi, lambda, a, n_samples, seed)?;
    Ok(h.scaled(lambda / a.order() as f64))
}

/// Overlap term `m` of the covariance limit, `1 <= m <= min(|A|, |B|)`.
///
/// The union graph has vertices `0..k` for `A`; `B` uses `0..m-1` plus
/// `k+1..n-1`.
pub fn sigma_ab_term(
    a: &PatternGraph,
    b: &PatternGraph,
    m: usize,
    phi: &ConnectionFunction,
    lambda: f64,
    n_samples: usize,
    seed: u64,
) -> Result<LimitEstimate> {
    check_lambda(lambda)?;
    a.require_connected()?;
    b.require_connected()?;
    let (ka, lb) = (a.order(), b.order());
    if m == 0 || m > ka.min(lb) {
        return Err(Error::invalid("m", format!("overlap must lie in 1..={}", ka.min(lb))));
    }
    let n = ka + lb - m;
    let b_global = |j: usize| if j < m { j } else { ka + (j - m) };

    // B's labeled copies mapped into union pair bits
    let mut b_scope = 0u32;
    for j in 1..lb {
        for i in 0..j {
            b_scope |= pair_bit(b_global(i), b_global(j));
        }
    }
    let overlap = full_scope(m);
    let b_only = b_scope & !overlap;
    let b_masks: Vec<u32> = b
        .orbit()
        .iter()
        .map(|&mask| {
            let mut out = 0;
            for j in 1..lb {
                for i in 0..j {
                    if mask & pair_bit(i, j) != 0 {
                        out |= pair_bit(b_global(i), b_global(j));
                    }
                }
            }
            out
        })
        .collect();
    let a_scope = full_scope(ka);

    let mut edges = Vec::new();
    for j in 1..n {
        for i in 0..j {
            if b_scope & pair_bit(i, j) != 0 || a_scope & pair_bit(i, j) != 0 {
                edges.push((i, j));
            }
        }
    }
    let structure = SimpleGraph::from_edges(n, &edges);
    let integral = importance_integral(phi, &structure, &Proposal::SpanningTreeMixture, n_samples, seed, |pos| {
        let p = pair_probabilities(pos, phi);
        let mut sa: HashMap<u32, f64> = HashMap::new();
        for &mask in a.orbit() {
            let pr = mask_probability(&p, mask, a_scope);
            if pr > 0.0 {
                *sa.entry(mask & overlap).or_default() += pr;
            }
        }
        let mut joint = 0.0;
        for &mask in &b_masks {
            if let Some(&pa) = sa.get(&(mask & overlap)) {
                joint += pa * mask_probability(&p, mask, b_only);
            }
        }
        Ok(joint)
    })?;
    let (k, l) = (ka - 1, lb - 1);
    let coef = lambda.powi((k + l + 2 - m) as i32) / (factorial(m) * factorial(k + 1 - m) * factorial(l + 1 - m));
    Ok(integral.scaled(coef))
}

/// `σ_{A,B} = lim Cov[ξ^{(A)}, ξ^{(B)}] / |W|` as the sum of its overlap terms.
pub fn estimate_sigma_ab(
    a: &PatternGraph,
    b: &PatternGraph,
    phi: &ConnectionFunction,
    lambda: f64,
    n_samples: usize,
    seed: u64,
) -> Result<LimitEstimate> {
    let (a, b) = if a.order() <= b.order() { (a, b) } else { (b, a) };
    let mut value = 0.0;
    let mut var = 0.0;
    let mut samples = 0;
    let mut max_weight: f64 = 0.0;
    let mut exact = true;
    for m in 1..=a.order() {
        let t = sigma_ab_term(a, b, m, phi, lambda, n_samples, derive_seed(seed, 0x5349, m as u64))?;
        value += t.value;
        var += t.stderr * t.stderr;
        samples += t.n_samples;
        max_weight = max_weight.max(t.max_weight);
        exact &= t.method == Method::Exact;
    }
    Ok(LimitEstimate {
        value,
        stderr: var.sqrt(),
        n_samples: samples,
        method: if exact { Method::Exact } else { Method::ImportanceMc },
        max_weight,
    })
}

/// The component-count limit of `A`, with the isolation exponent taken as
/// printed (`printed`) and multiplied by the intensity (`lambda_scaled`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLimit {
    pub printed: LimitEstimate,
    pub lambda_scaled: LimitEstimate,
}

/// `∫ [Π_i (1 - phi(y - x_i)) - 1] dy`, truncated where the tail of the
/// integrand is below [`ISOLATION_TAIL`].
pub fn isolation_integral(positions: &[Vec<f64>], phi: &ConnectionFunction) -> Result<f64> {
    if positions.len() == 1 {
        return Ok(-phi.m_phi()?);
    }
    let d = phi.dim();
    let r = phi.tail_radius(ISOLATION_TAIL / positions.len() as f64);
    let lo: Vec<f64> = (0..d)
        .map(|i| positions.iter().map(|x| x[i]).fold(f64::INFINITY, f64::min) - r)
        .collect();
    let hi: Vec<f64> = (0..d)
        .map(|i| positions.iter().map(|x| x[i]).fold(f64::NEG_INFINITY, f64::max) + r)
        .collect();
    let tol = 1e-5 * phi.m_phi()?;
    quadrature::integrate_box(
        |y| {
            let mut keep = 1.0;
            for x in positions {
                keep *= 1.0 - phi.radial_sq(squared_distance(y, x, None));
                if keep == 0.0 {
                    break;
                }
            }
            keep - 1.0
        },
        &lo,
        &hi,
        tol,
    )
}

/// Limit of `ζ^{(A)} / |W|`, the density of components isomorphic to `A`.
pub fn estimate_component_limit(
    a: &PatternGraph,
    phi: &ConnectionFunction,
    lambda: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ComponentLimit> {
    check_lambda(lambda)?;
    a.require_connected()?;
    let k = a.order() - 1;
    let coef = lambda.powi(k as i32 + 1) / factorial(k + 1);
    if k == 0 {
        let m = phi.m_phi()?;
        let mut printed = LimitEstimate::exact(coef * (-m).exp());
        let mut lambda_scaled = LimitEstimate::exact(coef * (-lambda * m).exp());
        printed.method = Method::Quadrature;
        lambda_scaled.method = Method::Quadrature;
        return Ok(ComponentLimit { printed, lambda_scaled });
    }
    let structure = PatternGraph::complete(a.order())?.to_graph();
    let [printed, lambda_scaled] =
        importance_integrals(phi, &structure, &Proposal::SpanningTreeMixture, n_samples, seed, |pos| {
            let psi = psi_from_pairs(&pair_probabilities(pos, phi), a);
            if psi == 0.0 {
                return Ok([0.0; 2]);
            }
            let iso = isolation_integral(pos, phi)?;
            Ok([psi * iso.exp(), psi * (lambda * iso).exp()])
        })?;
    Ok(ComponentLimit {
        printed: printed.scaled(coef),
        lambda_scaled: lambda_scaled.scaled(coef),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gauss() -> ConnectionFunction {
        ConnectionFunction::gaussian(2, 1.0).unwrap()
    }

    fn within(est: &LimitEstimate, target: f64, z: f64) -> bool {
        (est.value - target).abs() <= z * est.stderr.max(1e-12)
    }

    #[test]
    fn psi_examples() {
        let phi = gauss();
        let k2 = PatternGraph::complete(2).unwrap();
        let x = vec![0.3, 0.4];
        assert_eq!(
            psi_a_exact(&[vec![0.0, 0.0], x.clone()], &phi, &k2).unwrap(),
            phi.evaluate(&x).unwrap()
        );
        let ind = ConnectionFunction::indicator(2, 1.0).unwrap();
        let tri = [vec![0.0, 0.0], vec![0.5, 0.0], vec![0.2, 0.3]];
        assert_eq!(psi_a_exact(&tri, &ind, &PatternGraph::complete(3).unwrap()).unwrap(), 1.0);
        assert_eq!(psi_a_exact(&[vec![0.0, 0.0], vec![0.0, 0.0]], &phi, &k2).unwrap(), 0.0);
    }

    #[test]
    fn psi_over_all_classes_sums_to_one() {
        let phi = gauss();
        let pos = vec![vec![0.0, 0.0], vec![0.7, 0.1], vec![-0.2, 0.9], vec![0.5, -0.6]];
        let mut classes: Vec<PatternGraph> = Vec::new();
        for m in 0..1u32 << 6 {
            let p = PatternGraph::from_mask(4, m);
            if !classes.iter().any(|q| q.is_isomorphic(&p)) {
                classes.push(p);
            }
        }
        let total: f64 = classes.iter().map(|a| psi_a_exact(&pos, &phi, a).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn psi_matches_bernoulli_sampling() {
        let phi = gauss();
        let p3 = PatternGraph::path(3).unwrap();
        let pos = vec![vec![0.0, 0.0], vec![0.8, 0.2], vec![0.3, -0.9]];
        let psi = psi_a_exact(&pos, &phi, &p3).unwrap();
        let p = pair_probabilities(&pos, &phi);
        let mut rng = stream(3);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| {
                let mut mask = 0;
                for (b, &pb) in p.iter().enumerate() {
                    if rng.random::<f64>() < pb {
                        mask |= 1 << b;
                    }
                }
                p3.matches_mask(mask)
            })
            .count();
        let freq = hits as f64 / n as f64;
        let se = (psi * (1.0 - psi) / n as f64).sqrt();
        assert!((freq - psi).abs() < 3.0 * se, "{freq} vs {psi}");
    }

    #[test]
    fn h_k2_is_lambda_m_phi() {
        let h = estimate_h_a(&gauss(), 1.0, &PatternGraph::complete(2).unwrap(), 4000, 1).unwrap();
        assert!((h.value - PI).abs() < 1e-9, "{h:?}");
        let ind = ConnectionFunction::indicator(2, 1.0).unwrap();
        let h = estimate_h_a(&ind, 2.0, &PatternGraph::complete(2).unwrap(), 4000, 1).unwrap();
        assert!((h.value - 2.0 * PI).abs() < 1e-9, "{h:?}");
        let d = estimate_mean_density(&PatternGraph::complete(2).unwrap(), &gauss(), 1.0, 100, 2).unwrap();
        assert!((d.value - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn h_k3_indicator_matches_lens_area() {
        // ∫ 1{|x| <= 1} |B(0,1) ∩ B(x,1)| dx / 2 with the lens area in closed form
        let lens = |r: f64| 2.0 * (r / 2.0).acos() - r / 2.0 * (4.0 - r * r).sqrt();
        let oracle = 0.5 * quadrature::integrate(|r| 2.0 * PI * r * lens(r), 0.0, 1.0, 1e-12).unwrap();
        let ind = ConnectionFunction::indicator(2, 1.0).unwrap();
        let h = estimate_h_a(&ind, 1.0, &PatternGraph::complete(3).unwrap(), 200_000, 9).unwrap();
        assert!(within(&h, oracle, 4.0), "{h:?} vs {oracle}");
        let bound = weight_bound(&ind, &PatternGraph::complete(3).unwrap().to_graph()).unwrap();
        assert!(h.max_weight <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn fixed_tree_choice_does_not_matter_for_positive_phi() {
        let phi = gauss();
        let p3 = PatternGraph::path(3).unwrap();
        let a = estimate_h_a_with(&phi, 1.0, &p3, 100_000, 4, &Proposal::FixedTree(vec![(0, 1), (1, 2)])).unwrap();
        let b = estimate_h_a_with(&phi, 1.0, &p3, 100_000, 5, &Proposal::FixedTree(vec![(0, 1), (0, 2)])).unwrap();
        let c = estimate_h_a(&phi, 1.0, &p3, 100_000, 6).unwrap();
        for (x, y) in [(&a, &b), (&a, &c), (&b, &c)] {
            let se = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
            assert!((x.value - y.value).abs() < 4.0 * se, "{x:?} {y:?}");
        }
    }

    #[test]
    fn sigma_k2_k2_closed_form() {
        // λ^3 m^2 + λ^2 m / 2
        let k2 = PatternGraph::complete(2).unwrap();
        let t2 = sigma_ab_term(&k2, &k2, 2, &gauss(), 1.0, 1000, 0).unwrap();
        assert!((t2.value - PI / 2.0).abs() < 1e-9);
        let s = estimate_sigma_ab(&k2, &k2, &gauss(), 1.0, 2000, 0).unwrap();
        assert!((s.value - (PI * PI + PI / 2.0)).abs() < 1e-8, "{s:?}");
    }

    #[test]
    fn sigma_vertex_is_lambda() {
        let v = PatternGraph::vertex();
        let s = estimate_sigma_ab(&v, &v, &gauss(), 0.7, 10, 0).unwrap();
        assert!((s.value - 0.7).abs() < 1e-12);
        assert_eq!(s.method, Method::Exact);
    }

    #[test]
    fn isolated_vertex_component_limit() {
        let ind = ConnectionFunction::indicator(2, 1.0).unwrap();
        let c = estimate_component_limit(&PatternGraph::vertex(), &ind, 0.3, 10, 0).unwrap();
        assert!((c.lambda_scaled.value - 0.3 * (-0.3 * PI).exp()).abs() < 1e-12);
        assert!((c.printed.value - 0.3 * (-PI).exp()).abs() < 1e-12);
    }

    #[test]
    fn isolation_integral_of_two_disks_is_union_area() {
        let ind = ConnectionFunction::indicator(2, 1.0).unwrap();
        let r: f64 = 0.8;
        let lens = 2.0 * (r / 2.0).acos() - r / 2.0 * (4.0 - r * r).sqrt();
        let v = isolation_integral(&[vec![0.0, 0.0], vec![r, 0.0]], &ind).unwrap();
        assert!((v + 2.0 * PI - lens).abs() < 1e-4, "{v}");
    }

    #[test]
    fn k2_component_limit_is_dominated_by_mean_density() {
        let ind = ConnectionFunction::indicator(2, 1.0).unwrap();
        let k2 = PatternGraph::complete(2).unwrap();
        let c = estimate_component_limit(&k2, &ind, 0.5, 400, 3).unwrap();
        let mean = estimate_mean_density(&k2, &ind, 0.5, 400, 3).unwrap();
        assert!(c.lambda_scaled.value <= mean.value && c.printed.value <= mean.value);
        assert!(c.printed.value < c.lambda_scaled.value);
    }
}
