//! Euclidean error certificates for maximum-determinant problems.
//!
//! Given a feasible suboptimal solution `X_f` and a log-determinant
//! optimality gap `eps >= logdet(X*) - logdet(X_f)`, the squared
//! Frobenius distance to the unknown optimizer is bounded by
//! `||X_f||_2^2 * g(eps)`. The gain `g` comes in two forms:
//!
//! * exact: `g_exact(eps) = (l*/(1+l*))^2` with
//!   `l* = -W0(-e^{-(1+eps)}) - 1`, the worst single eigenvalue of the
//!   normalized difference matrix `Q` that the gap budget allows;
//! * closed: `g_closed(eps) = (cbrt(1-e^-eps) / (1-cbrt(1-e^-eps)))^2`,
//!   obtained from the cube-root bound on the principal Lambert branch.
//!
//! `brute_force_g` is an independent oracle for the same quantity: it
//! maximizes the squared norm over explicit eigenvalue vectors under the
//! gap and trace constraints, by grid refinement plus polished random
//! multistart, with no use of the closed-form optimizer structure.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lambert::w0;
use crate::linalg::{self, SymMatrix};
use crate::rng::Xoshiro256PlusPlus;

/// Error-gain bundle for one suboptimal solution.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub epsilon: f64,
    pub lambda_star: f64,
    pub g_exact: f64,
    pub g_closed: f64,
    pub spectral_norm_xf: f64,
    /// `spectral_norm_xf^2 * g_closed`, the headline squared-norm bound.
    pub frobenius_bound: f64,
    /// True when the gap is so large the closed-form bound diverges.
    pub vacuous: bool,
}

/// Diagnostics of `Q = X*^{-1/2} (X_f - X*) X*^{-1/2}`.
#[derive(Debug, Clone)]
pub struct QDiagnostics {
    pub q: SymMatrix,
    /// Eigenvalues of Q, ascending; all above -1 for SPD inputs.
    pub eigenvalues: Vec<f64>,
    pub trace: f64,
    /// `sum_i lambda_i - log(1 + lambda_i)`, the lower end of the gap
    /// chain; at most `eps` whenever `trace <= 0`.
    pub gap_lower: f64,
}

/// `l - log(1 + l)`, the per-eigenvalue contribution to the gap budget.
#[inline]
pub fn log_gap(l: f64) -> f64 {
    l - l.ln_1p()
}

/// Inverse of `log_gap` on (-1, 0], by branch-point series with Newton
/// polish. Returns the eigenvalue and a reduced-accuracy flag set when
/// the true value is within one ulp of -1.
pub fn lambda_star_ext(eps: f64) -> Result<(f64, bool)> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidGap(eps));
    }
    if eps == 0.0 {
        return Ok((0.0, false));
    }
    let eta = (-1.0 - eps).exp(); // e^{-(1+eps)}
    if -1.0 + eta == -1.0 {
        // lambda* = -1 + eta is not representable above -1.
        return Ok((-1.0, true));
    }

    // Series in p = sqrt(2(1 - e^-eps)):
    // lambda* = -p + p^2/3 - 11 p^3/72 + 43 p^4/540 + O(p^5).
    let p = (2.0 * -(-eps).exp_m1()).sqrt();
    let series = -p + p * p / 3.0 - 11.0 / 72.0 * p.powi(3) + 43.0 / 540.0 * p.powi(4);
    if eps < 1e-8 {
        // Newton cannot resolve the gap at this scale; the series is
        // already accurate to ~1e-13 relative here.
        return Ok((series, false));
    }

    let mut l = if eps < 0.05 {
        series
    } else {
        -w0(-eta)?.w - 1.0
    };
    l = l.clamp(-1.0 + 1e-300, -1e-300);
    for _ in 0..30 {
        // h(l) = log_gap(l) - eps, h'(l) = l / (1 + l).
        let step = (log_gap(l) - eps) * (1.0 + l) / l;
        let mut next = l - step;
        if next >= 0.0 {
            next = l / 2.0;
        } else if next <= -1.0 {
            next = (l - 1.0) / 2.0;
        }
        let done = step.abs() <= 1e-15 * l.abs();
        l = next;
        if done {
            break;
        }
    }
    Ok((l, false))
}

/// The worst single eigenvalue compatible with gap `eps`:
/// `lambda* = -W0(-e^{-(1+eps)}) - 1`, in (-1, 0].
pub fn lambda_star(eps: f64) -> Result<f64> {
    lambda_star_ext(eps).map(|(l, _)| l)
}

/// Exact error gain `(lambda*/(1+lambda*))^2`; nondecreasing in `eps`,
/// `~2 eps` as `eps -> 0`, infinite once `lambda*` rounds to -1.
pub fn g_exact(eps: f64) -> Result<f64> {
    let (l, _) = lambda_star_ext(eps)?;
    let r = l / (1.0 + l);
    Ok(r * r)
}

/// Closed-form error gain; `~eps^(2/3)` as `eps -> 0` and divergent for
/// large gaps: returns infinity once the denominator falls below 1e-15.
pub fn g_closed(eps: f64) -> Result<f64> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidGap(eps));
    }
    let t = (-(-eps).exp_m1()).cbrt(); // cbrt(1 - e^-eps)
    let denom = 1.0 - t;
    if denom <= 1e-15 {
        return Ok(f64::INFINITY);
    }
    let r = t / denom;
    Ok(r * r)
}

/// Full certificate for a feasible `x_f` at gap `eps`. Uses only `x_f`;
/// the optimizer is never consulted.
pub fn frobenius_certificate(x_f: &SymMatrix, eps: f64) -> Result<Certificate> {
    // SPD gate before any spectral work.
    linalg::logdet_posdef(x_f)?;
    let spectral = linalg::spectral_norm(x_f)?;
    let (lambda, _) = lambda_star_ext(eps)?;
    let ge = {
        let r = lambda / (1.0 + lambda);
        r * r
    };
    let gc = g_closed(eps)?;
    Ok(Certificate {
        epsilon: eps,
        lambda_star: lambda,
        g_exact: ge,
        g_closed: gc,
        spectral_norm_xf: spectral,
        frobenius_bound: spectral * spectral * gc,
        vacuous: !gc.is_finite(),
    })
}

/// Forms `Q = X*^{-1/2} (X_f - X*) X*^{-1/2}` through the symmetric
/// square root and two SPD solves, and reports its spectrum, trace and
/// the gap-chain lower term.
pub fn q_diagnostics(x_star: &SymMatrix, x_f: &SymMatrix) -> Result<QDiagnostics> {
    if x_star.dim() != x_f.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            x_star.dim(),
            x_f.dim()
        )));
    }
    linalg::logdet_posdef(x_star)?;
    linalg::logdet_posdef(x_f)?;
    let root = linalg::sym_sqrt(x_star)?;
    let diff = x_f.sub(x_star)?;
    let half = linalg::solve_posdef(&root, &diff.to_matrix())?;
    let q = linalg::solve_posdef(&root, &half.transpose())?.to_sym()?;
    let decomp = linalg::eigh(&q)?;
    let gap_lower = decomp
        .eigenvalues
        .iter()
        .map(|&l| if l > -1.0 { log_gap(l) } else { f64::INFINITY })
        .sum();
    Ok(QDiagnostics {
        trace: q.trace(),
        eigenvalues: decomp.eigenvalues,
        gap_lower,
        q,
    })
}

/// Candidate gains `f_n = n (l_n/(1+l_n))^2` with `log_gap(l_n) = eps/n`
/// for n = 1..n_max; the first candidate dominates.
pub fn g_candidates(eps: f64, n_max: usize) -> Result<Vec<f64>> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidGap(eps));
    }
    (1..=n_max.max(1))
        .map(|n| {
            let (l, _) = lambda_star_ext(eps / n as f64)?;
            let r = l / (1.0 + l);
            Ok(n as f64 * r * r)
        })
        .collect()
}

/// Outcome of the brute-force search for `g(eps)`.
#[derive(Debug, Clone)]
pub struct OracleReport {
    /// Best objective over all feasible candidates.
    pub best: f64,
    /// The eigenvalue vector achieving it.
    pub best_point: Vec<f64>,
    /// Best objective among feasible candidates with at least one
    /// strictly positive eigenvalue; None when none was feasible.
    pub best_with_positive: Option<f64>,
    /// Feasible candidates examined.
    pub candidates: usize,
}

/// Default sample count and seed for the oracle's random phase.
pub const ORACLE_SAMPLES: usize = 100_000;
pub const ORACLE_SEED: u64 = 0x6d61786465745f67; // "maxdet_g"

const FEAS_SLACK: f64 = 1e-11;
const LAMBDA_FLOOR: f64 = -1.0 + 1e-9;

struct Feasibility {
    eps: f64,
}

impl Feasibility {
    fn gap(&self, l: &[f64]) -> f64 {
        l.iter().map(|&v| log_gap(v)).sum()
    }

    fn ok(&self, l: &[f64]) -> bool {
        l.iter().all(|&v| v > -1.0)
            && l.iter().sum::<f64>() <= FEAS_SLACK
            && self.gap(l) <= self.eps + FEAS_SLACK
    }
}

fn objective(l: &[f64]) -> f64 {
    l.iter()
        .map(|&v| {
            let r = v / (1.0 + v);
            r * r
        })
        .sum()
}

/// Negative-side root of `log_gap(l) = budget` by bisection on
/// `[-1 + 1e-14, 0]`; monotone decreasing there, so plain and safe.
/// Returns the inner endpoint (gap at or below budget).
fn neg_root(budget: f64) -> f64 {
    if budget <= 0.0 {
        return 0.0;
    }
    let mut lo = -1.0 + 1e-14;
    let mut hi = 0.0;
    if log_gap(lo) <= budget {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // adjacent doubles
        }
        if log_gap(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Positive-side root of `log_gap(l) = budget` by doubling + bisection.
/// Returns the inner endpoint (gap at or below budget).
fn pos_root(budget: f64) -> f64 {
    if budget <= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while log_gap(hi) < budget && hi < 1e6 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_gap(mid) > budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Exact coordinate ascent: each coordinate's objective is maximized at
/// an endpoint of its feasible interval, so scan endpoints per sweep.
fn coordinate_polish(feas: &Feasibility, l: &mut [f64], sweeps: usize) {
    let n = l.len();
    for _ in 0..sweeps {
        for i in 0..n {
            let others_gap: f64 = l
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| log_gap(v))
                .sum();
            let others_sum: f64 = l
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .sum();
            let budget = (feas.eps - others_gap).max(0.0);
            let lo = neg_root(budget).max(LAMBDA_FLOOR);
            let hi = pos_root(budget).min(-others_sum);
            let current = l[i];
            let score = |v: f64| {
                let r = v / (1.0 + v);
                r * r
            };
            let mut best_v = current;
            let mut best_s = score(current);
            for cand in [lo, hi] {
                if cand >= lo - 1e-18 && cand <= -others_sum + 1e-18 && score(cand) > best_s {
                    best_s = score(cand);
                    best_v = cand;
                }
            }
            l[i] = best_v;
        }
    }
}

/// Brute-force maximization of the gain objective with explicit
/// constraint checks; grid refinement plus random multistart.
pub fn brute_force_report(eps: f64, n: usize, samples: usize, seed: u64) -> Result<OracleReport> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidGap(eps));
    }
    if n == 0 {
        return Err(Error::InvalidShape("oracle dimension must be >= 1".into()));
    }
    let feas = Feasibility { eps };
    let mut best = 0.0;
    let mut best_point = vec![0.0; n];
    let mut best_pos: Option<f64> = None;
    let mut candidates = 0usize;

    let mut consider = |l: &[f64], best: &mut f64, best_point: &mut Vec<f64>| {
        if !feas.ok(l) {
            return false;
        }
        candidates += 1;
        let obj = objective(l);
        if obj > *best {
            *best = obj;
            best_point.copy_from_slice(l);
        }
        if l.iter().any(|&v| v > 1e-15) {
            best_pos = Some(best_pos.map_or(obj, |b: f64| b.max(obj)));
        }
        true
    };

    // Phase (a): zoomed grid search over [-1 + 1e-6, 3]^n.
    let pts_per_dim = match n {
        1 => 2001,
        2 => 81,
        3 => 25,
        _ => 13,
    };
    let mut center = vec![1.0; n];
    let mut halfwidth = 2.0; // first box is [-1, 3] per coordinate
    for _round in 0..6 {
        let mut idx = vec![0usize; n];
        let mut point = vec![0.0; n];
        loop {
            for d in 0..n {
                let frac = idx[d] as f64 / (pts_per_dim - 1) as f64;
                point[d] = (center[d] - halfwidth + 2.0 * halfwidth * frac).clamp(-1.0 + 1e-6, 3.0);
            }
            consider(&point, &mut best, &mut best_point);
            // odometer
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] < pts_per_dim {
                    break;
                }
                idx[d] = 0;
                d += 1;
                if d == n {
                    break;
                }
            }
            if d == n {
                break;
            }
        }
        center.copy_from_slice(&best_point);
        halfwidth *= 0.35;
    }

    // Refine the grid winner with exact coordinate ascent.
    let mut polished = best_point.clone();
    coordinate_polish(&feas, &mut polished, 4);
    consider(&polished, &mut best, &mut best_point);

    // Phase (b): random multistart with coordinate polish. Half the
    // starts split the gap budget across coordinates with random branch
    // signs (exercising positive eigenvalues); half sample a box scaled
    // to the per-coordinate feasible range.
    let mut rng = Xoshiro256PlusPlus::new(seed ^ (n as u64) ^ eps.to_bits());
    let box_lo = neg_root(eps).max(LAMBDA_FLOOR);
    let box_hi = pos_root(eps).min(3.0);
    let mut accepted = 0usize;
    let mut raw = 0usize;
    let max_raw = samples.saturating_mul(50);
    let mut l = vec![0.0; n];
    while accepted < samples && raw < max_raw {
        raw += 1;
        if raw.is_multiple_of(2) {
            // Gap-budget split: tau_i = eps * scale * w_i / sum w.
            let mut weights = vec![0.0; n];
            let mut total = 0.0;
            for w in &mut weights {
                *w = -(1.0 - rng.next_f64()).ln();
                total += *w;
            }
            let scale = rng.next_f64();
            for i in 0..n {
                let tau = eps * scale * weights[i] / total;
                l[i] = if rng.next_f64() < 0.3 {
                    pos_root(tau)
                } else {
                    neg_root(tau)
                };
            }
            // Restore the trace constraint by flipping the largest
            // positive coordinates to their negative-branch partners,
            // which preserves each per-coordinate gap.
            while l.iter().sum::<f64>() > 0.0 {
                let (j, _) = l
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap();
                if l[j] <= 0.0 {
                    break;
                }
                l[j] = neg_root(log_gap(l[j]));
            }
        } else {
            for v in &mut l {
                *v = box_lo + (box_hi - box_lo) * rng.next_f64();
            }
        }
        if !consider(&l, &mut best, &mut best_point) {
            continue;
        }
        accepted += 1;
        coordinate_polish(&feas, &mut l, 2);
        consider(&l, &mut best, &mut best_point);
    }

    Ok(OracleReport {
        best,
        best_point,
        best_with_positive: best_pos,
        candidates,
    })
}

/// `brute_force_report` at the default sample count and seed.
pub fn brute_force_g(eps: f64, n: usize) -> Result<f64> {
    brute_force_report(eps, n, ORACLE_SAMPLES, ORACLE_SEED).map(|r| r.best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_star_zero_gap() {
        assert_eq!(lambda_star(0.0).unwrap(), 0.0);
    }

    #[test]
    fn lambda_star_unit_gap() {
        // -W0(-e^-2) - 1, frozen from a high-precision evaluation.
        let l = lambda_star(1.0).unwrap();
        assert!((l + 0.8414056604369606).abs() < 1e-13);
        assert!((log_gap(l) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lambda_star_small_gap_scale() {
        let l = lambda_star(1e-6).unwrap();
        assert!(l.abs() > 1.2e-3 && l.abs() < 1.6e-3);
        assert!((l + 0.0014135469742886646).abs() < 1e-15);
    }

    #[test]
    fn lambda_star_rejects_negative() {
        assert!(matches!(lambda_star(-0.1), Err(Error::InvalidGap(_))));
    }

    #[test]
    fn lambda_star_huge_gap_flags_reduced_accuracy() {
        let (l, reduced) = lambda_star_ext(800.0).unwrap();
        assert_eq!(l, -1.0);
        assert!(reduced);
    }

    #[test]
    fn g_exact_values() {
        assert_eq!(g_exact(0.0).unwrap(), 0.0);
        let g = g_exact(1.0).unwrap();
        assert!((g - 28.147219069318346).abs() < 1e-9 * 28.0);
        let ratio = g_exact(1e-6).unwrap() / 2e-6;
        assert!(ratio > 0.99 && ratio < 1.01, "ratio {ratio}");
    }

    #[test]
    fn g_closed_values() {
        assert_eq!(g_closed(0.0).unwrap(), 0.0);
        let g = g_closed(std::f64::consts::LN_2).unwrap();
        assert!((g - 14.80188735548409).abs() < 1e-12 * 14.8);
        assert!(g_closed(40.0).unwrap().is_infinite());
        assert!(matches!(g_closed(-1.0), Err(Error::InvalidGap(_))));
    }

    #[test]
    fn certificate_examples() {
        let c = frobenius_certificate(&SymMatrix::identity(3), 0.0).unwrap();
        assert_eq!(c.frobenius_bound, 0.0);
        assert!(!c.vacuous);

        let two_i = SymMatrix::from_diag(&[2.0, 2.0]);
        let c = frobenius_certificate(&two_i, std::f64::consts::LN_2).unwrap();
        assert!((c.frobenius_bound - 4.0 * 14.80188735548409).abs() < 1e-10);
        assert!((c.spectral_norm_xf - 2.0).abs() < 1e-12);

        let c = frobenius_certificate(&SymMatrix::from_diag(&[1.0, 3.0]), 1e-6).unwrap();
        assert!((c.frobenius_bound - 9.0 * 1.0203037070704503e-4).abs() < 1e-12);
    }

    #[test]
    fn certificate_rejects_indefinite() {
        let m = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(
            frobenius_certificate(&m, 0.5),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn q_diagnostics_identity_pair() {
        let d = q_diagnostics(&SymMatrix::identity(2), &SymMatrix::identity(2)).unwrap();
        assert!(d.trace.abs() < 1e-14);
        assert!(d.gap_lower.abs() < 1e-14);
    }

    #[test]
    fn q_diagnostics_diagonal_pair() {
        // Q = diag(-0.5, 1) by hand; trace +0.5 (x_star here is not a
        // maxdet optimizer, so no sign claim applies).
        let d = q_diagnostics(&SymMatrix::identity(2), &SymMatrix::from_diag(&[0.5, 2.0])).unwrap();
        assert!((d.eigenvalues[0] + 0.5).abs() < 1e-12);
        assert!((d.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert!((d.trace - 0.5).abs() < 1e-12);
    }

    #[test]
    fn q_diagnostics_scaled_identity() {
        let d = q_diagnostics(
            &SymMatrix::from_diag(&[4.0, 4.0]),
            &SymMatrix::from_diag(&[2.0, 2.0]),
        )
        .unwrap();
        assert!((d.trace + 1.0).abs() < 1e-12);
        assert!((d.gap_lower - 0.38629436111989063).abs() < 1e-12);
    }

    #[test]
    fn q_diagnostics_dimension_mismatch() {
        let a = SymMatrix::identity(2);
        let b = SymMatrix::identity(3);
        assert!(matches!(
            q_diagnostics(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn candidates_decrease_from_first() {
        let f = g_candidates(1.0, 4).unwrap();
        assert_eq!(f.len(), 4);
        for k in 1..f.len() {
            assert!(f[0] >= f[k] - 1e-12, "f1 {} vs f{} {}", f[0], k + 1, f[k]);
        }
        let single = g_candidates(1.0, 1).unwrap();
        assert!((single[0] - g_exact(1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn candidates_near_zero_gap() {
        let f = g_candidates(1e-4, 3).unwrap();
        for (k, v) in f.iter().enumerate() {
            let ratio = v / 2e-4;
            assert!(ratio > 0.97 && ratio < 1.03, "f{} ratio {}", k + 1, ratio);
        }
        assert!(f[0] >= f[1] && f[0] >= f[2]);
    }

    #[test]
    fn oracle_zero_gap() {
        let r = brute_force_report(0.0, 2, 1000, ORACLE_SEED).unwrap();
        assert_eq!(r.best, 0.0);
    }

    #[test]
    fn oracle_four_dimensional() {
        let r = brute_force_report(0.5, 4, 4000, ORACLE_SEED).unwrap();
        let g = g_exact(0.5).unwrap();
        assert!(
            (r.best - g).abs() <= 1e-3 * (1.0 + g),
            "oracle {} vs exact {}",
            r.best,
            g
        );
    }

    #[test]
    fn oracle_matches_exact_small_run() {
        let r = brute_force_report(0.5, 2, 4000, ORACLE_SEED).unwrap();
        let g = g_exact(0.5).unwrap();
        assert!(
            (r.best - g).abs() <= 1e-3 * (1.0 + g),
            "oracle {} vs exact {}",
            r.best,
            g
        );
        if let Some(p) = r.best_with_positive {
            assert!(p <= g + 1e-6);
        }
    }
}
