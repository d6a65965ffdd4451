//! Adaptive Simpson quadrature in one dimension and iterated over boxes.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;
const MAX_EVALS: usize = 20_000_000;

struct Budget {
    evals: usize,
}

impl Budget {
    fn spend(&mut self, n: usize) -> Result<()> {
        self.evals += n;
        if self.evals > MAX_EVALS {
            Err(Error::Quadrature(format!(
                "evaluation budget of {MAX_EVALS} exceeded"
            )))
        } else {
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    budget: &mut Budget,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    budget.spend(2)?;
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * flm + fm);
    let right = h / 12.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, budget)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, budget)?;
    Ok(l + r)
}

/// Integrates `f` over `[a, b]` to the absolute tolerance `tol`.
///
/// The interval is pre-split into eight panels so that narrow features are
/// not missed by the first Simpson estimate.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut budget = Budget { evals: 0 };
    const PANELS: usize = 8;
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    let mut fa = f(a);
    for i in 0..PANELS {
        let lo = a + h * i as f64;
        let hi = if i + 1 == PANELS { b } else { lo + h };
        let fm = f(0.5 * (lo + hi));
        let fb = f(hi);
        budget.spend(3)?;
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_step(&mut f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, 0, &mut budget)?;
        fa = fb;
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Quadrature("non-finite integral".into()))
    }
}

/// Integrates `f` over `[a, inf)` through the substitution `x = a + s / (1 - s)`.
///
/// The integrand must decay fast enough that `f(x) x^2 -> 0`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: f64) -> Result<f64> {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let t = 1.0 - s;
            let x = a + s / t;
            let v = f(x) / (t * t);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Iterated integration of `f` over the box `prod_i [lo_i, hi_i]`.
pub fn integrate_box<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    tol: f64,
) -> Result<f64> {
    assert_eq!(lo.len(), hi.len());
    let mut point = lo.to_vec();
    nested(&mut f, lo, hi, tol, 0, &mut point)
}

fn nested<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    axis: usize,
    point: &mut [f64],
) -> Result<f64> {
    let d = lo.len();
    if axis + 1 == d {
        return integrate(
            |x| {
                point[axis] = x;
                f(point)
            },
            lo[axis],
            hi[axis],
            tol,
        );
    }
    // the inner integrals need to be tighter than the outer tolerance
    let inner_tol = tol / (hi[axis] - lo[axis]).max(1.0) * 0.1;
    let mut failure = None;
    let value = integrate(
        |x| {
            point[axis] = x;
            let mut p = point.to_vec();
            match nested(f, lo, hi, inner_tol, axis + 1, &mut p) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        lo[axis],
        hi[axis],
        tol,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}
