//! The edge-marking map `T` over unit lattice cubes.
//!
//! Points are grouped by the unit cube `floor(x)` that contains them and ranked
//! by birth time inside the cube. For a pair where `x` is older than `y`, the
//! mark is entry `(m, n)` of `y`'s mark sequence, `m` being the rank of `x` in
//! its cube `B_n`. Mark sequences are never stored: entry `(m, n)` of the
//! sequence owned by id `y` is a keyed uniform of `(y, m, n)`.

use std::collections::{HashMap, HashSet};

use crate::connection::ConnectionFunction;
use crate::error::{Error, Result};
use crate::graph::{squared_distance, Boundary, SimpleGraph};
use crate::point_process::Configuration;
use crate::rng::keyed_uniform;

#[derive(Debug, Clone, PartialEq)]
pub struct MarkedEdge {
    pub ids: (u64, u64),
    pub mark: f64,
}

/// One mark per unordered pair of points, in `(lo, hi)` vertex-index order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarkedEdgeSet {
    pub entries: Vec<MarkedEdge>,
}

fn unit_cube(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| v.floor() as i64).collect()
}

/// Builds the marked edge set of `config` under `T`.
pub fn edge_marking_t(config: &Configuration, mark_seed: u64) -> Result<MarkedEdgeSet> {
    let n = config.len();
    let mut seen = HashSet::with_capacity(n);
    if !config.points().iter().all(|p| seen.insert(p.birth_time.to_bits())) {
        return Err(Error::DuplicateBirthTimes);
    }

    let cubes: Vec<Vec<i64>> = (0..n).map(|i| unit_cube(config.position(i))).collect();
    let mut members: HashMap<&[i64], Vec<usize>> = HashMap::new();
    for (i, c) in cubes.iter().enumerate() {
        members.entry(c.as_slice()).or_default().push(i);
    }
    let mut rank = vec![0u64; n];
    for list in members.values_mut() {
        list.sort_by(|&a, &b| config.points()[a].birth_time.total_cmp(&config.points()[b].birth_time));
        for (m, &i) in list.iter().enumerate() {
            rank[i] = m as u64 + 1;
        }
    }

    let mut entries = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut key = Vec::with_capacity(2 + config.dim());
    for i in 0..n {
        for j in i + 1..n {
            let (ti, tj) = (config.points()[i].birth_time, config.points()[j].birth_time);
            let (older, younger) = if ti < tj { (i, j) } else { (j, i) };
            key.clear();
            key.push(config.id(younger));
            key.push(rank[older]);
            key.extend(cubes[older].iter().map(|&c| c as u64));
            entries.push(MarkedEdge {
                ids: (config.id(i), config.id(j)),
                mark: keyed_uniform(mark_seed, &key),
            });
        }
    }
    Ok(MarkedEdgeSet { entries })
}

/// Keeps the pairs whose mark falls below `phi(x - y)`.
pub fn threshold(
    marks: &MarkedEdgeSet,
    config: &Configuration,
    phi: &ConnectionFunction,
    boundary: Boundary,
) -> Result<SimpleGraph> {
    let index: HashMap<u64, usize> = (0..config.len()).map(|i| (config.id(i), i)).collect();
    let period = (boundary == Boundary::Periodic).then(|| config.window().side());
    let mut edges = Vec::new();
    for e in &marks.entries {
        let (Some(&a), Some(&b)) = (index.get(&e.ids.0), index.get(&e.ids.1)) else {
            return Err(Error::invalid("marks", "edge refers to a point outside the configuration"));
        };
        let r2 = squared_distance(config.position(a), config.position(b), period);
        if e.mark < phi.radial_sq(r2) {
            edges.push((a, b));
        }
    }
    Ok(SimpleGraph::from_edges(config.len(), &edges))
}
