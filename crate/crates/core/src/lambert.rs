//! Real branches of the Lambert W function.
//!
//! `W₀` maps `[-1/e, ∞)` onto `[-1, ∞)` and `W₋₁` maps `[-1/e, 0)` onto
//! `(-∞, -1]`; both solve `w e^w = x`. Values come from Halley iteration
//! started at branch-specific approximations: the branch-point series near
//! `-1/e`, the log-log asymptotic for `W₋₁` near `0⁻`, and the log form
//! `w + ln w = ln x` for large positive arguments.

use std::f64::consts::E;

use crate::error::{Error, Result};

const INV_E: f64 = 1.0 / E;
const TOL: f64 = 1e-13;
const MAX_ITER: usize = 64;
/// Slack for arguments that round just below `-1/e`.
const BRANCH_SLACK: f64 = 4.0 * f64::EPSILON;

fn branch_point_series(x: f64, sign: f64) -> f64 {
    // p = ±sqrt(2(ex + 1)); W = -1 + p - p²/3 + 11p³/72 - ...
    let p = sign * (2.0 * (E * x + 1.0)).max(0.0).sqrt();
    -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
}

fn halley(x: f64, mut w: f64) -> f64 {
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= TOL * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

fn check_lower(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E - BRANCH_SLACK {
        return Err(Error::LambertDomain(x));
    }
    Ok(x.max(-INV_E))
}

/// Principal branch `W₀(x)` for `x ≥ -1/e`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let x = check_lower(x)?;
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == -INV_E {
        return Ok(-1.0);
    }
    if x > E {
        // Newton on g(w) = w + ln w - ln x, well scaled for huge x.
        let lx = x.ln();
        let mut w = lx - lx.ln();
        for _ in 0..MAX_ITER {
            let step = (w + w.ln() - lx) / (1.0 + 1.0 / w);
            w -= step;
            if step.abs() <= TOL * w.abs() {
                break;
            }
        }
        return Ok(halley(x, w));
    }
    let start = if x < -0.25 {
        branch_point_series(x, 1.0)
    } else if x.abs() < 1e-3 {
        x * (1.0 - x)
    } else {
        (1.0 + x).ln() * 0.8
    };
    Ok(halley(x, start).max(-1.0))
}

/// Lower branch `W₋₁(x)` for `-1/e ≤ x < 0`.
pub fn lambert_wm1(x: f64) -> Result<f64> {
    let x = check_lower(x)?;
    if x >= 0.0 {
        return Err(Error::LambertDomain(x));
    }
    if x == -INV_E {
        return Ok(-1.0);
    }
    let start = if x < -0.25 {
        branch_point_series(x, -1.0)
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    Ok(halley(x, start).min(-1.0))
}
