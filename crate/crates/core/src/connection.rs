//! Radial connection functions `phi: R^d -> [0, 1]`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::quadrature;

/// Relative tolerance used for every quadrature of `m_phi`.
pub const M_PHI_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `phi(x) = 1{|x| <= radius}`.
    Indicator { radius: f64 },
    /// `phi(x) = exp(-scale |x|^2)`.
    Gaussian { scale: f64 },
    /// `phi(x) = 1` for `|x| < cutoff`, `min(1, c0 |x|^-(5d + epsilon0))` beyond.
    PolyTail { c0: f64, epsilon0: f64, cutoff: f64 },
    /// Linear interpolation of `values` over the increasing grid `radii`,
    /// zero past the last grid point.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionFunction {
    profile: Profile,
    dim: usize,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Surface area of the unit sphere `S^{d-1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

impl ConnectionFunction {
    pub fn new(profile: Profile, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        match &profile {
            Profile::Indicator { radius } => positive("radius", *radius)?,
            Profile::Gaussian { scale } => positive("scale", *scale)?,
            Profile::PolyTail {
                c0,
                epsilon0,
                cutoff,
            } => {
                positive("c0", *c0)?;
                positive("epsilon0", *epsilon0)?;
                if !(*cutoff >= 0.0 && cutoff.is_finite()) {
                    return Err(Error::invalid("cutoff", format!("must be non-negative, got {cutoff}")));
                }
            }
            Profile::Tabulated { radii, values } => {
                if radii.len() < 2 || radii.len() != values.len() {
                    return Err(Error::invalid(
                        "radii",
                        "need at least two grid points and one value per radius",
                    ));
                }
                if radii[0] != 0.0 {
                    return Err(Error::invalid("radii", "grid must start at 0"));
                }
                if radii.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) || !w[1].is_finite()) {
                    return Err(Error::invalid("radii", "grid must be strictly increasing"));
                }
                if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::invalid("values", "must lie in [0, 1]"));
                }
                if values.iter().all(|&v| v == 0.0) {
                    return Err(Error::invalid("values", "table is identically zero"));
                }
            }
        }
        Ok(Self { profile, dim })
    }

    pub fn indicator(dim: usize, radius: f64) -> Result<Self> {
        Self::new(Profile::Indicator { radius }, dim)
    }

    pub fn gaussian(dim: usize, scale: f64) -> Result<Self> {
        Self::new(Profile::Gaussian { scale }, dim)
    }

    pub fn poly_tail(dim: usize, c0: f64, epsilon0: f64, cutoff: f64) -> Result<Self> {
        Self::new(
            Profile::PolyTail {
                c0,
                epsilon0,
                cutoff,
            },
            dim,
        )
    }

    pub fn tabulated(dim: usize, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(Profile::Tabulated { radii, values }, dim)
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn poly_exponent(&self, epsilon0: f64) -> f64 {
        5.0 * self.dim as f64 + epsilon0
    }

    /// For PolyTail, the radius below which `phi = 1`.
    fn poly_plateau(&self, c0: f64, epsilon0: f64, cutoff: f64) -> f64 {
        cutoff.max(c0.powf(1.0 / self.poly_exponent(epsilon0)))
    }

    /// `phi` as a function of the Euclidean norm.
    pub fn radial(&self, r: f64) -> f64 {
        match &self.profile {
            Profile::Indicator { radius } => {
                if r <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Gaussian { scale } => (-scale * r * r).exp(),
            Profile::PolyTail {
                c0,
                epsilon0,
                cutoff,
            } => {
                if r < *cutoff {
                    1.0
                } else {
                    (c0 * r.powf(-self.poly_exponent(*epsilon0))).min(1.0)
                }
            }
            Profile::Tabulated { radii, values } => {
                let last = radii.len() - 1;
                if r > radii[last] {
                    return 0.0;
                }
                let k = radii.partition_point(|&g| g <= r);
                if k == 0 {
                    return values[0];
                }
                if k > last {
                    return values[last];
                }
                let (r0, r1) = (radii[k - 1], radii[k]);
                let t = (r - r0) / (r1 - r0);
                values[k - 1] + t * (values[k] - values[k - 1])
            }
        }
    }

    /// `phi` from the squared norm; avoids a square root for the common variants.
    #[inline]
    pub fn radial_sq(&self, r2: f64) -> f64 {
        match &self.profile {
            Profile::Indicator { radius } => {
                if r2 <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Gaussian { scale } => (-scale * r2).exp(),
            _ => self.radial(r2.sqrt()),
        }
    }

    /// `phi(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.radial_sq(x.iter().map(|v| v * v).sum()))
    }

    /// Radius beyond which `phi` vanishes identically, if any.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.profile {
            Profile::Indicator { radius } => Some(*radius),
            Profile::Tabulated { radii, .. } => Some(radii[radii.len() - 1]),
            _ => None,
        }
    }

    /// `m_phi = int phi(x) dx`.
    ///
    /// Closed form for Indicator and Gaussian; radial adaptive quadrature for
    /// PolyTail and Tabulated.
    pub fn m_phi(&self) -> Result<f64> {
        let d = self.dim;
        let sphere = unit_sphere_area(d);
        let value = match &self.profile {
            Profile::Indicator { radius } => unit_ball_volume(d) * radius.powi(d as i32),
            Profile::Gaussian { scale } => (PI / scale).powf(d as f64 / 2.0),
            Profile::PolyTail {
                c0,
                epsilon0,
                cutoff,
            } => {
                let r1 = self.poly_plateau(*c0, *epsilon0, *cutoff);
                let inner = r1.powi(d as i32) / d as f64;
                let scale = inner.max(1e-300);
                let tail = quadrature::integrate_to_infinity(
                    |r| self.radial(r) * r.powi(d as i32 - 1),
                    r1,
                    M_PHI_RTOL * 1e-2 * scale,
                )?;
                sphere * (inner + tail)
            }
            Profile::Tabulated { radii, .. } => {
                let mut total = 0.0;
                for w in radii.windows(2) {
                    total += quadrature::integrate(
                        |r| self.radial(r) * r.powi(d as i32 - 1),
                        w[0],
                        w[1],
                        M_PHI_RTOL * 1e-2 * w[1].powi(d as i32),
                    )?;
                }
                sphere * total
            }
        };
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(Error::Quadrature(format!("m_phi is not finite and positive: {value}")))
        }
    }

    /// `int_{|x| > r} phi(x) dx`, exact or bounded above.
    pub fn tail_mass(&self, r: f64) -> f64 {
        let d = self.dim;
        let r = r.max(0.0);
        match &self.profile {
            Profile::Indicator { radius } => {
                if r >= *radius {
                    0.0
                } else {
                    unit_ball_volume(d) * (radius.powi(d as i32) - r.powi(d as i32))
                }
            }
            Profile::Gaussian { scale } => {
                (PI / scale).powf(d as f64 / 2.0) * gamma_ur(d as f64 / 2.0, scale * r * r)
            }
            Profile::PolyTail {
                c0,
                epsilon0,
                cutoff,
            } => {
                let p = self.poly_exponent(*epsilon0);
                let r1 = self.poly_plateau(*c0, *epsilon0, *cutoff);
                let sphere = unit_sphere_area(d);
                let df = d as f64;
                let tail_from = |s: f64| sphere * c0 * s.powf(df - p) / (p - df);
                if r >= r1 {
                    tail_from(r)
                } else {
                    sphere * (r1.powf(df) - r.powf(df)) / df + tail_from(r1)
                }
            }
            Profile::Tabulated { radii, .. } => {
                let last = radii[radii.len() - 1];
                if r >= last {
                    0.0
                } else {
                    // phi <= 1 on the shell
                    unit_ball_volume(d) * (last.powi(d as i32) - r.powi(d as i32))
                }
            }
        }
    }

    /// Smallest radius (up to bisection precision) whose tail mass is below `eps`.
    pub fn tail_radius(&self, eps: f64) -> f64 {
        if let Some(r) = self.support_radius() {
            return r;
        }
        let mut hi = 1.0;
        while self.tail_mass(hi) > eps {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.tail_mass(mid) > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Whether `phi` is continuous at 0 with `phi(0) = 1` and bounded by
    /// `C_0 r^{-(5d + eps_0)}` for some constants.
    ///
    /// Indicator, Gaussian and PolyTail always qualify; a table qualifies when
    /// it starts at 1.
    pub fn satisfies_c1_c2(&self) -> bool {
        match &self.profile {
            Profile::Tabulated { values, .. } => values[0] == 1.0,
            _ => true,
        }
    }

    /// Draws a displacement from the density `phi / m_phi`.
    pub fn sample_displacement<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim;
        match &self.profile {
            Profile::Gaussian { scale } => {
                let sd = (0.5 / scale).sqrt();
                (0..d)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        sd * z
                    })
                    .collect::<Vec<f64>>()
            }
            Profile::Indicator { radius } => {
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                scaled_direction(rng, d, r)
            }
            Profile::PolyTail {
                c0,
                epsilon0,
                cutoff,
            } => {
                let p = self.poly_exponent(*epsilon0);
                let df = d as f64;
                let r1 = self.poly_plateau(*c0, *epsilon0, *cutoff);
                let inner = r1.powf(df) / df;
                let tail = c0 * r1.powf(df - p) / (p - df);
                let r = if rng.random::<f64>() * (inner + tail) < inner {
                    r1 * rng.random::<f64>().powf(1.0 / df)
                } else {
                    let u = 1.0 - rng.random::<f64>();
                    r1 * u.powf(-1.0 / (p - df))
                };
                scaled_direction(rng, d, r)
            }
            Profile::Tabulated { radii, .. } => {
                let rmax = radii[radii.len() - 1];
                loop {
                    let r = rmax * rng.random::<f64>().powf(1.0 / d as f64);
                    if rng.random::<f64>() < self.radial(r) {
                        break scaled_direction(rng, d, r);
                    }
                }
            }
        }
    }
}

fn scaled_direction<R: Rng + ?Sized>(rng: &mut R, d: usize, r: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| -> f64 { StandardNormal.sample(rng) }).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x * r / norm).collect();
        }
    }
}
