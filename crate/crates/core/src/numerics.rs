//! Scalar special functions and bracketing root finders.

use std::f64::consts::E;

use crate::error::{Error, Result};

// 1/e split into a head and a tail so that `x + 1/e` keeps its low bits near
// the branch point.
const INV_E_HI: f64 = 0.367_879_441_171_442_33;
const INV_E_LO: f64 = -1.242_875_367_278_836_3e-17;

/// Principal branch `W0` of the Lambert W function, the solution `w >= -1`
/// of `w e^w = x`.
///
/// Accepts `x` down to `-1/e - 1e-15` (values in that sliver map to `-1`).
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E_HI - 1e-15 {
        return Err(Error::LambertDomain(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let offset = (x + INV_E_HI) + INV_E_LO;
    if offset <= 0.0 {
        return Ok(-1.0);
    }

    if x > 1e20 {
        // w + ln w = ln x, Newton in log form avoids overflowing e^w
        let lx = x.ln();
        let mut w = lx - lx.ln();
        for _ in 0..32 {
            let step = (w + w.ln() - lx) / (1.0 + 1.0 / w);
            w -= step;
            if step.abs() <= 4.0 * f64::EPSILON * w {
                break;
            }
        }
        return Ok(w);
    }

    let mut w = if x < -0.25 {
        let p = (2.0 * E * offset).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))))
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    // Halley
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let dw = f / denom;
        if !dw.is_finite() {
            break;
        }
        let next = (w - dw).max(-1.0);
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs());
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

/// Search interval and stopping rule for [`bisect_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionSpec {
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance on the final bracket width.
    pub tol: f64,
    pub max_iters: usize,
}

impl BisectionSpec {
    pub fn new(lo: f64, hi: f64, tol: f64) -> Self {
        BisectionSpec {
            lo,
            hi,
            tol,
            max_iters: 500,
        }
    }
}

/// Final bracket of a bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

impl Bracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

const MAX_EXPANSIONS: usize = 60;

/// Bisection on a monotone function of either direction. When `f(lo)` and
/// `f(hi)` share a sign, the upper end is pushed out by doubling the interval
/// width, at most 60 times.
pub fn bisect_bracket<F: FnMut(f64) -> f64>(mut f: F, spec: &BisectionSpec) -> Result<Bracket> {
    if !(spec.lo < spec.hi) || !(spec.tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "bisection needs lo < hi and tol > 0, got [{}, {}] tol {}",
            spec.lo, spec.hi, spec.tol
        )));
    }
    let mut lo = spec.lo;
    let mut hi = spec.hi;
    let f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(Bracket { lo, hi: lo, iterations: 0 });
    }
    let mut f_hi = f(hi);
    let mut expansions = 0;
    while f_hi.signum() == f_lo.signum() && f_hi != 0.0 {
        if expansions == MAX_EXPANSIONS {
            return Err(Error::Bracketing { lo: spec.lo, hi });
        }
        hi = lo + 2.0 * (hi - lo);
        f_hi = f(hi);
        expansions += 1;
    }
    if f_hi == 0.0 {
        return Ok(Bracket { lo: hi, hi, iterations: 0 });
    }
    let lo_negative = f_lo < 0.0;
    let mut iterations = 0;
    while hi - lo > spec.tol && iterations < spec.max_iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        iterations += 1;
        if fm == 0.0 {
            return Ok(Bracket { lo: mid, hi: mid, iterations });
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bracket { lo, hi, iterations })
}

/// Root of a monotone function, see [`bisect_bracket`].
pub fn bisect_root<F: FnMut(f64) -> f64>(f: F, spec: &BisectionSpec) -> Result<f64> {
    bisect_bracket(f, spec).map(|b| b.mid())
}
