//! Both real branches of the Lambert W function (the inverse of
//! `w * exp(w)`), evaluated by Halley iteration, together with the
//! closed-form bounds and branch inequalities this crate certifies.
//!
//! `W0` is the principal branch (`w >= -1`); `Wm1` the lower branch
//! (`w <= -1`). They meet at the branch point `x = -1/e`.

use crate::error::{Error, Result};

/// -1/e, the left end of the real domain.
pub const BRANCH_POINT: f64 = -0.36787944117144233;

/// Relative slack accepted below the branch point before rejecting the
/// argument; callers that compute `-exp(-1 - u)` land a few ulps low.
const DOMAIN_SLACK: f64 = 1e-14;

/// Halley iteration controls.
const MAX_ITERS: usize = 50;
const STEP_TOL: f64 = 1e-15;

/// Below this value of `e*x + 1` the branch-point series is returned
/// directly; Halley's denominator degenerates with the square-root
/// singularity at -1/e.
const SERIES_CUTOFF: f64 = 1e-12;

/// Which real branch a Lambert evaluation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Principal,
    MinusOne,
}

/// One Lambert W evaluation: argument, value and the defining-equation
/// residual `|w * exp(w) - x|`.
#[derive(Debug, Clone, Copy)]
pub struct LambertEval {
    pub branch: Branch,
    pub x: f64,
    pub w: f64,
    pub residual: f64,
}

impl LambertEval {
    fn new(branch: Branch, x: f64, w: f64) -> Self {
        let residual = (w * w.exp() - x).abs();
        Self {
            branch,
            x,
            w,
            residual,
        }
    }
}

/// Offset from the branch point, `e*x + 1`, clamped against negative
/// roundoff; `None` when x is genuinely below the domain.
fn branch_offset(x: f64) -> Option<f64> {
    if x < BRANCH_POINT * (1.0 + DOMAIN_SLACK) {
        return None;
    }
    Some((std::f64::consts::E * x + 1.0).max(0.0))
}

/// Branch-point series `w = -1 + p - p^2/3 + 11 p^3/72` with
/// `p = sqrt(2(e*x + 1))`; the lower branch takes `p -> -p`.
fn branch_series(p: f64) -> f64 {
    -1.0 + p * (1.0 - p * (1.0 / 3.0 - p * (11.0 / 72.0)))
}

fn halley(x: f64, mut w: f64, keep_below_minus_one: bool) -> Result<f64> {
    for _ in 0..MAX_ITERS {
        let ew = w.exp();
        let f = w * ew - x;
        // Near the branch point the step size bottoms out at roundoff
        // noise before the step criterion fires; a residual already an
        // order below the contract is converged.
        if f.abs() <= 1e-14 * (x.abs() + 1e-300) {
            return Ok(w);
        }
        let wp1 = w + 1.0;
        // Halley step for f(w) = w e^w - x.
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let mut step = f / denom;
        let mut next = w - step;
        if keep_below_minus_one && next > -1.0 {
            // Overshoot across the branch point; damp back inside.
            step *= 0.5;
            next = w - step;
            if next > -1.0 {
                next = -1.0 - 0.5 * (w + 1.0).abs();
            }
        }
        let done = step.abs() <= STEP_TOL * (1.0 + next.abs());
        w = next;
        if done {
            return Ok(w);
        }
    }
    Err(Error::NoConvergence(format!(
        "Lambert Halley iteration stalled at x = {x:.17e}"
    )))
}

/// Principal branch `W0(x)` for `x >= -1/e`.
pub fn w0(x: f64) -> Result<LambertEval> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite argument {x}")));
    }
    let offset = branch_offset(x).ok_or(Error::OutOfDomain {
        value: x,
        domain: "[-1/e, inf)",
    })?;
    if x == 0.0 {
        return Ok(LambertEval::new(Branch::Principal, x, 0.0));
    }
    if offset < SERIES_CUTOFF {
        let w = branch_series((2.0 * offset).sqrt());
        return Ok(LambertEval::new(Branch::Principal, x, w));
    }
    let seed = if offset < 0.5 {
        branch_series((2.0 * offset).sqrt())
    } else if x < std::f64::consts::E {
        x.ln_1p()
    } else {
        // Asymptotic seed for large arguments.
        let l = x.ln();
        l - l.ln()
    };
    let w = halley(x, seed, false)?;
    Ok(LambertEval::new(Branch::Principal, x, w))
}

/// Lower branch `W_{-1}(x)` for `-1/e <= x < 0`.
pub fn wm1(x: f64) -> Result<LambertEval> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite argument {x}")));
    }
    if x >= 0.0 {
        return Err(Error::OutOfDomain {
            value: x,
            domain: "[-1/e, 0)",
        });
    }
    let offset = branch_offset(x).ok_or(Error::OutOfDomain {
        value: x,
        domain: "[-1/e, 0)",
    })?;
    if offset < SERIES_CUTOFF {
        let w = branch_series(-(2.0 * offset).sqrt());
        return Ok(LambertEval::new(Branch::MinusOne, x, w));
    }
    let seed = if offset < 0.5 {
        branch_series(-(2.0 * offset).sqrt())
    } else {
        // w ~ log(-x) - log(-log(-x)) with a first-order correction.
        let l = (-x).ln();
        let ll = (-l).ln();
        l - ll + ll / l
    };
    let w = halley(x, seed, true)?;
    Ok(LambertEval::new(Branch::MinusOne, x, w))
}

/// Shared form of the closed bounds: given `s = e*x + 1` in [0, 1],
/// returns `(sqrt(s) - 1, cbrt(s) - 1)`.
fn bounds_from_offset(s: f64) -> (f64, f64) {
    (s.sqrt() - 1.0, s.cbrt() - 1.0)
}

/// Closed-form sandwich for the principal branch on the negative domain:
/// `sqrt(e*x+1) - 1 <= W0(x) <= cbrt(e*x+1) - 1` for `-1/e <= x < 0`.
pub fn w0_bounds(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() || x >= 0.0 {
        return Err(Error::OutOfDomain {
            value: x,
            domain: "[-1/e, 0)",
        });
    }
    let offset = branch_offset(x).ok_or(Error::OutOfDomain {
        value: x,
        domain: "[-1/e, 0)",
    })?;
    Ok(bounds_from_offset(offset))
}

/// The same sandwich in log form: for `u >= 0`,
/// `sqrt(1-e^-u) - 1 <= W0(-e^{-1-u}) <= cbrt(1-e^-u) - 1`.
pub fn w0_log_form_bounds(u: f64) -> Result<(f64, f64)> {
    if u.is_nan() || u < 0.0 {
        return Err(Error::OutOfDomain {
            value: u,
            domain: "[0, inf)",
        });
    }
    // 1 - e^-u via expm1 keeps small u accurate.
    let s = -(-u).exp_m1();
    Ok(bounds_from_offset(s))
}

/// Bounds on the gap `x - log(1+x)` for `-1 < x <= 0`:
/// `-log(1+x^3) <= x - log(1+x) <= -log(1-x^2)`.
pub fn log_gap_bounds(x: f64) -> Result<(f64, f64)> {
    if x.is_nan() || x <= -1.0 || x > 0.0 {
        return Err(Error::OutOfDomain {
            value: x,
            domain: "(-1, 0]",
        });
    }
    let lower = -(x * x * x).ln_1p();
    let upper = -(-x * x).ln_1p();
    Ok((lower, upper))
}

/// Both sides of the branch inequality
/// `(W0(x)+1)/(-W0(x)) >= (W_{-1}(x)+1)/W_{-1}(x)` on `[-1/e, 0)`.
pub fn branch_ratio_inequality(x: f64) -> Result<(f64, f64)> {
    let w0x = w0(x)?.w;
    let wm1x = wm1(x)?.w;
    let lhs = if w0x == -1.0 {
        0.0
    } else {
        (w0x + 1.0) / (-w0x)
    };
    let rhs = (wm1x + 1.0) / wm1x;
    Ok((lhs, rhs))
}
