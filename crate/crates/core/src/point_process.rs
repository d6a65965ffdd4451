//! Homogeneous Poisson point processes on cubes.
//!
//! A [`Configuration`] is sampled once on the largest window of an experiment;
//! every smaller window is obtained with [`restrict`], which keeps ids and birth
//! times. That single coupled realization is what makes nested-window traces and
//! the restrict-then-build / build-then-restrict comparison meaningful.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng;

/// Id reserved for the inserted origin.
pub const ORIGIN_ID: u64 = u64::MAX;

/// Axis-aligned half-open cube `prod_i [corner_i, corner_i + side)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    corner: Vec<f64>,
    side: f64,
}

impl Window {
    pub fn new(corner: Vec<f64>, side: f64) -> Result<Self> {
        if corner.is_empty() {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::invalid("side", format!("must be positive, got {side}")));
        }
        if corner.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("corner", "must be finite"));
        }
        Ok(Self { corner, side })
    }

    /// The cube of the given side centred at the origin.
    pub fn centered(dim: usize, side: f64) -> Result<Self> {
        Self::new(vec![-side / 2.0; dim], side)
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn corner(&self) -> &[f64] {
        &self.corner
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.corner)
                .all(|(&xi, &ci)| ci <= xi && xi < ci + self.side)
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        other.dim() == self.dim()
            && other.corner.iter().zip(&self.corner).all(|(&o, &c)| {
                c <= o && o + other.side <= c + self.side
            })
    }
}

/// Side length `v^(1/d)`, snapped to an integer when `v` is a perfect power.
fn side_for_volume(d: usize, volume: f64) -> f64 {
    let s = match d {
        1 => volume,
        2 => volume.sqrt(),
        3 => volume.cbrt(),
        _ => volume.powf(1.0 / d as f64),
    };
    let r = s.round();
    if r > 0.0 && r.powi(d as i32) == volume {
        r
    } else {
        s
    }
}

/// Centred cubes `[-v^(1/d)/2, v^(1/d)/2)^d` for each volume, each inside the next.
pub fn nested_windows(d: usize, volumes: &[f64]) -> Result<Vec<Window>> {
    if d == 0 {
        return Err(Error::invalid("dim", "must be positive"));
    }
    if volumes.is_empty() {
        return Err(Error::invalid("volumes", "must not be empty"));
    }
    if volumes.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("volumes", "must be positive and finite"));
    }
    if volumes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonIncreasingVolumes);
    }
    volumes
        .iter()
        .map(|&v| Window::centered(d, side_for_volume(d, v)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub id: u64,
    pub position: Vec<f64>,
    pub birth_time: f64,
    pub is_origin: bool,
}

/// A finite point set with stable identities.
///
/// Points are kept in increasing id order; the origin, when present, carries
/// [`ORIGIN_ID`] and therefore sits last.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    points: Vec<PointRecord>,
    window: Window,
    intensity: f64,
    seed: u64,
}

impl Configuration {
    /// Builds a configuration from explicit records, validating the invariants.
    pub fn from_points(
        window: Window,
        intensity: f64,
        seed: u64,
        mut points: Vec<PointRecord>,
    ) -> Result<Self> {
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(Error::invalid("intensity", format!("must be positive, got {intensity}")));
        }
        points.sort_by_key(|p| p.id);
        if points.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::invalid("points", "ids must be unique"));
        }
        let mut origins = 0;
        for p in &points {
            if p.position.len() != window.dim() {
                return Err(Error::DimensionMismatch {
                    expected: window.dim(),
                    got: p.position.len(),
                });
            }
            if !window.contains(&p.position) {
                return Err(Error::invalid("points", format!("point {} lies outside the window", p.id)));
            }
            if p.is_origin {
                origins += 1;
                if p.id != ORIGIN_ID {
                    return Err(Error::invalid("points", "origin must carry the reserved id"));
                }
            } else if p.id == ORIGIN_ID {
                return Err(Error::invalid("points", "reserved id used by a non-origin point"));
            }
        }
        if origins > 1 {
            return Err(Error::OriginPresent);
        }
        Ok(Self {
            points,
            window,
            intensity,
            seed,
        })
    }

    /// Convenience constructor: ids `0..n` in the given order and distinct
    /// evenly spaced birth times.
    pub fn from_positions(window: Window, positions: Vec<Vec<f64>>) -> Result<Self> {
        let n = positions.len();
        let points = positions
            .into_iter()
            .enumerate()
            .map(|(i, position)| PointRecord {
                id: i as u64,
                position,
                birth_time: (i + 1) as f64 / (n + 1) as f64,
                is_origin: false,
            })
            .collect();
        Self::from_points(window, 1.0, 0, points)
    }

    pub fn points(&self) -> &[PointRecord] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn has_origin(&self) -> bool {
        self.points.last().is_some_and(|p| p.is_origin)
    }

    /// Index of the origin record, if present.
    pub fn origin_index(&self) -> Option<usize> {
        self.has_origin().then(|| self.points.len() - 1)
    }

    pub fn position(&self, index: usize) -> &[f64] {
        &self.points[index].position
    }

    pub fn id(&self, index: usize) -> u64 {
        self.points[index].id
    }
}

/// Samples a homogeneous Poisson process of the given intensity on `window`.
///
/// Positions are i.i.d. uniform on the window, birth times i.i.d. uniform on
/// `[0, 1)` and re-drawn on exact collision. Ids follow generation order.
pub fn sample_poisson(window: &Window, intensity: f64, seed: u64) -> Result<Configuration> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::invalid("intensity", format!("must be positive, got {intensity}")));
    }
    let mut rng = rng::stream(seed);
    let mean = intensity * window.volume();
    let count = Poisson::new(mean)
        .map_err(|e| Error::invalid("intensity", e.to_string()))?
        .sample(&mut rng) as usize;

    let d = window.dim();
    let mut seen = HashSet::with_capacity(count);
    let mut points = Vec::with_capacity(count);
    for id in 0..count as u64 {
        let position: Vec<f64> = (0..d)
            .map(|i| {
                let lo = window.corner[i];
                let hi = lo + window.side;
                let x = lo + window.side * rng.random::<f64>();
                // rounding can land exactly on the open upper face
                if x < hi {
                    x
                } else {
                    hi.next_down()
                }
            })
            .collect();
        let birth_time = loop {
            let t: f64 = rng.random();
            if seen.insert(t.to_bits()) {
                break t;
            }
        };
        points.push(PointRecord {
            id,
            position,
            birth_time,
            is_origin: false,
        });
    }
    Ok(Configuration {
        points,
        window: window.clone(),
        intensity,
        seed,
    })
}

/// The points of `config` lying in `sub`, with ids and birth times preserved.
pub fn restrict(config: &Configuration, sub: &Window) -> Result<Configuration> {
    if !config.window.contains_window(sub) {
        return Err(Error::WindowNotContained);
    }
    Ok(Configuration {
        points: config
            .points
            .iter()
            .filter(|p| sub.contains(&p.position))
            .cloned()
            .collect(),
        window: sub.clone(),
        intensity: config.intensity,
        seed: config.seed,
    })
}

/// Appends the origin with birth time 1 and the reserved id.
///
/// The origin must lie in the window, which is automatic for centred windows.
pub fn add_origin(config: &Configuration) -> Result<Configuration> {
    if config.has_origin() {
        return Err(Error::OriginPresent);
    }
    let origin = vec![0.0; config.dim()];
    if !config.window.contains(&origin) {
        return Err(Error::invalid("window", "does not contain the origin"));
    }
    let mut out = config.clone();
    out.points.push(PointRecord {
        id: ORIGIN_ID,
        position: origin,
        birth_time: 1.0,
        is_origin: true,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(d: usize, side: f64) -> Window {
        Window::centered(d, side).unwrap()
    }

    #[test]
    fn window_is_half_open() {
        let w = Window::new(vec![0.0, 0.0], 1.0).unwrap();
        assert!(w.contains(&[0.0, 0.0]));
        assert!(w.contains(&[0.999, 0.5]));
        assert!(!w.contains(&[1.0, 0.5]));
        assert!(!w.contains(&[0.5, -1e-12]));
        assert_eq!(w.volume(), 1.0);
    }

    #[test]
    fn window_rejects_bad_side() {
        assert!(Window::new(vec![0.0], 0.0).is_err());
        assert!(Window::new(vec![0.0], -1.0).is_err());
        assert!(Window::new(vec![], 1.0).is_err());
    }

    #[test]
    fn sample_rejects_bad_intensity() {
        assert!(sample_poisson(&window(2, 1.0), 0.0, 1).is_err());
        assert!(sample_poisson(&window(2, 1.0), -2.0, 1).is_err());
    }

    #[test]
    fn sample_is_deterministic() {
        let w = window(2, 10.0);
        let a = sample_poisson(&w, 2.0, 99).unwrap();
        let b = sample_poisson(&w, 2.0, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.points().iter().all(|p| w.contains(&p.position)));
        let c = sample_poisson(&w, 2.0, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unit_cube_mean_count_is_intensity() {
        let w = window(2, 1.0);
        let reps = 20_000;
        let total: usize = (0..reps)
            .map(|s| sample_poisson(&w, 1.0, s).unwrap().len())
            .sum();
        let mean = total as f64 / reps as f64;
        // Poisson(1): stderr 1/sqrt(reps)
        assert!((mean - 1.0).abs() < 4.0 / (reps as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn mean_count_matches_poisson_oracle() {
        let w = window(2, 10.0);
        let reps = 10_000u64;
        let counts: Vec<f64> = (0..reps)
            .map(|s| sample_poisson(&w, 2.0, s).unwrap().len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / reps as f64;
        let tol = 3.0 * (200.0 / reps as f64).sqrt();
        assert!((mean - 200.0).abs() < tol, "mean {mean} tol {tol}");
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!((var / 200.0 - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn birth_times_are_distinct_and_in_unit_interval() {
        let c = sample_poisson(&window(2, 20.0), 3.0, 5).unwrap();
        let mut seen = HashSet::new();
        for p in c.points() {
            assert!((0.0..1.0).contains(&p.birth_time));
            assert!(seen.insert(p.birth_time.to_bits()));
        }
    }

    #[test]
    fn restrict_identity_and_composition() {
        let w = window(2, 10.0);
        let c = sample_poisson(&w, 2.0, 3).unwrap();
        assert_eq!(restrict(&c, &w).unwrap(), c);
        let v = window(2, 6.0);
        let u = window(2, 3.0);
        let via_v = restrict(&restrict(&c, &v).unwrap(), &u).unwrap();
        assert_eq!(via_v, restrict(&c, &u).unwrap());
    }

    #[test]
    fn restrict_filters_and_keeps_ids() {
        let w = Window::new(vec![0.0, 0.0], 4.0).unwrap();
        let c = Configuration::from_positions(
            w,
            vec![vec![0.5, 0.5], vec![3.5, 3.5], vec![1.5, 0.2]],
        )
        .unwrap();
        let sub = Window::new(vec![0.0, 0.0], 2.0).unwrap();
        let r = restrict(&c, &sub).unwrap();
        let ids: Vec<u64> = r.points().iter().map(|p| p.id).collect();
        assert_eq!(ids, vec![0, 2]);
        assert_eq!(r.points()[1].birth_time, c.points()[2].birth_time);
    }

    #[test]
    fn restrict_rejects_outside_window() {
        let c = sample_poisson(&window(2, 4.0), 1.0, 1).unwrap();
        assert_eq!(
            restrict(&c, &window(2, 5.0)),
            Err(Error::WindowNotContained)
        );
    }

    #[test]
    fn nested_windows_examples() {
        let w = nested_windows(2, &[4.0]).unwrap();
        assert_eq!(w[0].corner(), &[-1.0, -1.0]);
        assert_eq!(w[0].side(), 2.0);

        let w = nested_windows(1, &[2.0, 4.0]).unwrap();
        assert_eq!(w[0].corner(), &[-1.0]);
        assert_eq!(w[1].corner(), &[-2.0]);
        assert!(w[1].contains_window(&w[0]));

        let w = nested_windows(3, &[8.0, 27.0]).unwrap();
        assert_eq!(w[0].side(), 2.0);
        assert_eq!(w[1].side(), 3.0);
    }

    #[test]
    fn nested_windows_rejects_non_increasing() {
        assert_eq!(
            nested_windows(2, &[4.0, 4.0]),
            Err(Error::NonIncreasingVolumes)
        );
        assert_eq!(
            nested_windows(2, &[9.0, 4.0]),
            Err(Error::NonIncreasingVolumes)
        );
    }

    #[test]
    fn add_origin_examples() {
        let w = window(2, 4.0);
        let empty = Configuration::from_positions(w.clone(), vec![]).unwrap();
        let o = add_origin(&empty).unwrap();
        assert_eq!(o.len(), 1);
        assert!(o.points()[0].is_origin);
        assert_eq!(o.points()[0].birth_time, 1.0);
        assert_eq!(o.points()[0].position, vec![0.0, 0.0]);

        let five = Configuration::from_positions(
            w.clone(),
            (0..5).map(|i| vec![i as f64 * 0.3, -0.5]).collect(),
        )
        .unwrap();
        let six = add_origin(&five).unwrap();
        assert_eq!(six.len(), 6);
        assert_eq!(&six.points()[..5], five.points());

        let r = restrict(&six, &window(2, 1.0)).unwrap();
        assert!(r.has_origin());

        assert_eq!(add_origin(&six), Err(Error::OriginPresent));
    }

    #[test]
    fn disjoint_subwindow_counts_are_uncorrelated() {
        // Chi-square test of independence on a 2x2 table of (count above median)
        // for two disjoint halves of one sample.
        let w = Window::new(vec![0.0, 0.0], 4.0).unwrap();
        let left = Window::new(vec![0.0, 0.0], 2.0).unwrap();
        let right = Window::new(vec![2.0, 2.0], 2.0).unwrap();
        let mut table = [[0.0f64; 2]; 2];
        for s in 0..4000 {
            let c = sample_poisson(&w, 1.0, s).unwrap();
            let a = restrict(&c, &left).unwrap().len() > 4;
            let b = restrict(&c, &right).unwrap().len() > 4;
            table[a as usize][b as usize] += 1.0;
        }
        let n: f64 = table.iter().flatten().sum();
        let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
        let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
        let mut chi2 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let e = rows[i] * cols[j] / n;
                chi2 += (table[i][j] - e).powi(2) / e;
            }
        }
        // chi-square with 1 dof, 0.1% critical value
        assert!(chi2 < 10.83, "chi2 {chi2}");
    }
}
