//! Minimum-volume enclosing ellipsoid solver.
//!
//! Works on the lifted dual: with `z_i = (y_i, 1)`, maximize
//! `log det M(u)` for `M(u) = sum_i u_i z_i z_i^T` over the simplex.
//! Each iteration takes either a Frank-Wolfe step toward the point of
//! largest leverage `kappa_i = z_i^T M(u)^{-1} z_i` or a Wolfe-Atwood
//! away/drop step on the support point of smallest leverage; the plain
//! increase-only scheme stalls at a 1/k rate and cannot reach the tight
//! tolerances the ladder needs. Termination is the Khachiyan criterion
//! `max_i kappa_i <= (1 + delta)(N + 1)`, verified against a fresh
//! factorization before a solve is declared converged.
//!
//! De-lifting follows the standard recovery: center `c = sum u_i y_i`,
//! shape `A = ((sum u_i y_i y_i^T - c c^T) N)^{-1}`, `X = sqrt(A)`,
//! `b = X c`, then an inflation step rescales so every point satisfies
//! `||X y_i - b|| <= 1` exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, MatrixJson, SymMatrix};
use crate::rng::Xoshiro256PlusPlus;

/// Rank-one inverse updates are replaced by a full factorization this
/// often, to bound drift.
const REFRESH_PERIOD: usize = 10_000;

/// Finite set of points in N dimensions, affinely spanning the space.
#[derive(Debug, Clone)]
pub struct PointSet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl PointSet {
    /// Validates shape (M >= N+1, equal lengths, finite entries) and the
    /// affine-span requirement (lifted rank N+1).
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let count = points.len();
        if count == 0 {
            return Err(Error::InvalidShape("empty point set".into()));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidShape("zero-dimensional points".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidShape("ragged point rows".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite point coordinate".into()));
        }
        if count < dim + 1 {
            return Err(Error::InvalidShape(format!(
                "need at least {} points in dimension {}, got {}",
                dim + 1,
                dim,
                count
            )));
        }
        let set = Self { dim, points };
        let rank = set.lifted_rank()?;
        if rank < dim + 1 {
            return Err(Error::DegeneratePoints {
                rank,
                required: dim + 1,
            });
        }
        Ok(set)
    }

    /// Standard-normal point cloud, reproducible from the seed.
    pub fn gaussian(dim: usize, count: usize, seed: u64) -> Result<Self> {
        if dim == 0 || count < dim + 1 {
            return Err(Error::InvalidShape(format!(
                "gaussian point set needs count >= dim + 1, got dim {dim} count {count}"
            )));
        }
        let mut rng = Xoshiro256PlusPlus::new(seed);
        let points = (0..count)
            .map(|_| (0..dim).map(|_| rng.next_normal()).collect())
            .collect();
        Self::new(points)
    }

    fn lifted_rank(&self) -> Result<usize> {
        let n1 = self.dim + 1;
        let mut gram = SymMatrix::zeros(n1);
        for p in &self.points {
            for a in 0..n1 {
                let za = if a < self.dim { p[a] } else { 1.0 };
                for b in a..n1 {
                    let zb = if b < self.dim { p[b] } else { 1.0 };
                    gram.set(a, b, gram.get(a, b) + za * zb);
                }
            }
        }
        let eig = linalg::eigh(&gram)?;
        let max = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
        let tol = max * (n1 as f64) * 1e-13;
        Ok(eig.eigenvalues.iter().filter(|&&l| l > tol).count())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Parses the points file format: one point per row, comma-separated
    /// coordinates, no header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<f64>> = line
                .split(',')
                .map(|field| {
                    field.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidInput(format!(
                            "line {}: cannot parse {:?} as a number",
                            lineno + 1,
                            field
                        ))
                    })
                })
                .collect();
            points.push(row?);
        }
        Self::new(points)
    }

    /// Renders the points file format with 17-significant-digit floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let fields: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Ellipsoid `{ y : ||X y - b|| <= 1 }` with SPD shape matrix `X`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub x: SymMatrix,
    pub b: Vec<f64>,
}

impl Ellipsoid {
    /// `||X y - b||_2`; at most 1 for covered points.
    pub fn radius(&self, y: &[f64]) -> f64 {
        let xy = self.x.matvec(y);
        xy.iter()
            .zip(&self.b)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_radius(&self, pts: &PointSet) -> f64 {
        (0..pts.count())
            .map(|i| self.radius(pts.point(i)))
            .fold(0.0, f64::max)
    }
}

/// One converged (or capped) solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub ellipsoid: Ellipsoid,
    pub iterations: usize,
    /// Requested tolerance delta.
    pub tolerance: f64,
    /// Achieved relative dual gap `max_i kappa_i / (N+1) - 1`, from a
    /// fresh factorization.
    pub khachiyan_gap: f64,
    pub logdet_x: f64,
    /// False when the iteration cap was hit first.
    pub converged: bool,
}

/// Iteration cap matched to instance size.
pub fn default_max_iters(pts: &PointSet) -> usize {
    500 * pts.count() * pts.dim()
}

/// JSON wire form of a solved ellipsoid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipsoidJson {
    pub x: MatrixJson,
    pub b: Vec<f64>,
    pub logdet_x: f64,
}

impl EllipsoidJson {
    pub fn from_report(report: &SolveReport) -> Self {
        Self {
            x: MatrixJson::from_sym(&report.ellipsoid.x),
            b: report.ellipsoid.b.clone(),
            logdet_x: report.logdet_x,
        }
    }
}

struct DualState<'a> {
    z: Vec<f64>, // lifted points, row-major m x n1
    n1: usize,
    m: usize,
    u: Vec<f64>,
    minv: Matrix,
    kappa: Vec<f64>,
    pts: &'a PointSet,
}

impl<'a> DualState<'a> {
    fn new(pts: &'a PointSet) -> Result<Self> {
        let n1 = pts.dim() + 1;
        let m = pts.count();
        let mut z = vec![0.0; m * n1];
        for i in 0..m {
            z[i * n1..i * n1 + pts.dim()].copy_from_slice(pts.point(i));
            z[i * n1 + pts.dim()] = 1.0;
        }
        let mut state = Self {
            z,
            n1,
            m,
            u: vec![1.0 / m as f64; m],
            minv: Matrix::identity(n1),
            kappa: vec![0.0; m],
            pts,
        };
        state.refresh()?;
        Ok(state)
    }

    #[inline]
    fn zrow(&self, i: usize) -> &[f64] {
        &self.z[i * self.n1..(i + 1) * self.n1]
    }

    /// Rebuilds `M(u)^{-1}` and all leverages from scratch.
    fn refresh(&mut self) -> Result<()> {
        let n1 = self.n1;
        let mut mat = SymMatrix::zeros(n1);
        for i in 0..self.m {
            let ui = self.u[i];
            if ui == 0.0 {
                continue;
            }
            let zi = &self.z[i * n1..(i + 1) * n1];
            for a in 0..n1 {
                let za = ui * zi[a];
                for b in a..n1 {
                    mat.set(a, b, mat.get(a, b) + za * zi[b]);
                }
            }
        }
        self.minv = linalg::solve_posdef(&mat, &Matrix::identity(n1))?;
        for i in 0..self.m {
            self.kappa[i] = self.leverage(i);
        }
        Ok(())
    }

    fn leverage(&self, i: usize) -> f64 {
        let zi = self.zrow(i);
        let mut total = 0.0;
        for a in 0..self.n1 {
            let mut row = 0.0;
            for b in 0..self.n1 {
                row += self.minv.get(a, b) * zi[b];
            }
            total += zi[a] * row;
        }
        total
    }

    /// Applies `M <- a M + b z_j z_j^T` to the inverse and leverages by
    /// Sherman-Morrison. Falls back to a refresh if the update is
    /// numerically unsafe.
    fn rank_one_update(&mut self, j: usize, a: f64, b: f64) -> Result<()> {
        let n1 = self.n1;
        let c = b / a;
        let zj: Vec<f64> = self.zrow(j).to_vec();
        let mut v = vec![0.0; n1];
        for r in 0..n1 {
            let mut s = 0.0;
            for col in 0..n1 {
                s += self.minv.get(r, col) * zj[col];
            }
            v[r] = s;
        }
        let kj: f64 = zj.iter().zip(&v).map(|(z, v)| z * v).sum();
        let denom = 1.0 + c * kj;
        if denom.is_nan() || denom <= 1e-12 {
            return self.refresh();
        }
        let scale = 1.0 / a;
        for i in 0..self.m {
            let zi = &self.z[i * n1..(i + 1) * n1];
            let w: f64 = zi.iter().zip(&v).map(|(z, v)| z * v).sum();
            self.kappa[i] = (self.kappa[i] - c * w * w / denom) * scale;
        }
        for r in 0..n1 {
            for col in 0..n1 {
                let val = (self.minv.get(r, col) - c * v[r] * v[col] / denom) * scale;
                self.minv.set(r, col, val);
            }
        }
        Ok(())
    }

    fn argmax_kappa(&self) -> usize {
        let mut best = 0;
        for i in 1..self.m {
            if self.kappa[i] > self.kappa[best] {
                best = i;
            }
        }
        best
    }

    fn argmin_support_kappa(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in 0..self.m {
            if self.u[i] > 0.0 && best.is_none_or(|b| self.kappa[i] < self.kappa[b]) {
                best = Some(i);
            }
        }
        best
    }

    /// De-lifts the current weights into a feasible ellipsoid.
    fn recover(&self) -> Result<(Ellipsoid, f64)> {
        let n = self.pts.dim();
        let mut center = vec![0.0; n];
        for i in 0..self.m {
            let ui = self.u[i];
            if ui == 0.0 {
                continue;
            }
            for (c, &y) in center.iter_mut().zip(self.pts.point(i)) {
                *c += ui * y;
            }
        }
        let mut cov = SymMatrix::zeros(n);
        for i in 0..self.m {
            let ui = self.u[i];
            if ui == 0.0 {
                continue;
            }
            let y = self.pts.point(i);
            for a in 0..n {
                for b in a..n {
                    cov.set(a, b, cov.get(a, b) + ui * y[a] * y[b]);
                }
            }
        }
        for a in 0..n {
            for b in a..n {
                cov.set(a, b, cov.get(a, b) - center[a] * center[b]);
            }
        }
        let cov_inv = linalg::solve_posdef(&cov, &Matrix::identity(n))?.to_sym()?;
        let shape = cov_inv.scale(1.0 / n as f64);
        let x = linalg::sym_sqrt(&shape)?;
        let b = x.matvec(&center);
        let mut ell = Ellipsoid { x, b };

        // Feasibility inflation: scale down so all points fit exactly.
        let rho = ell.max_radius(self.pts);
        if rho > 1.0 {
            ell.x = ell.x.scale(1.0 / rho);
            for v in &mut ell.b {
                *v /= rho;
            }
        }
        let logdet_x = linalg::logdet_posdef(&ell.x)?;
        Ok((ell, logdet_x))
    }
}

/// Solves the covering problem to relative dual gap `delta`.
///
/// Hitting `max_iters` is not an error: the best-so-far ellipsoid is
/// returned with `converged = false`.
pub fn solve_mvee(pts: &PointSet, delta: f64, max_iters: usize) -> Result<SolveReport> {
    if delta.is_nan() || delta <= 0.0 || delta > 1.0 {
        return Err(Error::InvalidInput(format!(
            "tolerance must lie in (0, 1], got {delta}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidInput("max_iters must be >= 1".into()));
    }
    let n1f = (pts.dim() + 1) as f64;
    let mut state = DualState::new(pts)?;
    let mut iterations = 0usize;
    let mut converged = false;
    let mut gap = f64::INFINITY;

    while iterations < max_iters {
        let j_plus = state.argmax_kappa();
        gap = state.kappa[j_plus] / n1f - 1.0;
        if gap <= delta {
            // Verify against a fresh factorization before accepting.
            state.refresh()?;
            let fresh = state.argmax_kappa();
            gap = state.kappa[fresh] / n1f - 1.0;
            if gap <= delta {
                converged = true;
                break;
            }
            continue;
        }

        let eps_plus = gap;
        let away = state.argmin_support_kappa().and_then(|j| {
            let k = state.kappa[j];
            let eps_minus = 1.0 - k / n1f;
            if eps_minus <= eps_plus || state.u[j] >= 1.0 - 1e-15 {
                return None;
            }
            let gamma_max = state.u[j] / (1.0 - state.u[j]);
            let gamma = if k > 1.0 {
                ((n1f - k) / (n1f * (k - 1.0))).min(gamma_max)
            } else {
                gamma_max
            };
            (gamma > 0.0).then_some((j, gamma))
        });

        if let Some((j, gamma)) = away {
            state.u.iter_mut().for_each(|v| *v *= 1.0 + gamma);
            state.u[j] = (state.u[j] - gamma).max(0.0);
            state.rank_one_update(j, 1.0 + gamma, -gamma)?;
        } else {
            let k = state.kappa[j_plus];
            let alpha = (k - n1f) / (n1f * (k - 1.0));
            state.u.iter_mut().for_each(|v| *v *= 1.0 - alpha);
            state.u[j_plus] += alpha;
            state.rank_one_update(j_plus, 1.0 - alpha, alpha)?;
        }
        iterations += 1;
        if iterations.is_multiple_of(REFRESH_PERIOD) {
            state.refresh()?;
        }
    }

    if !converged {
        // Report the capped iterate against fresh numbers.
        state.refresh()?;
        let j = state.argmax_kappa();
        gap = state.kappa[j] / n1f - 1.0;
        converged = gap <= delta;
    }

    let (ellipsoid, logdet_x) = state.recover()?;
    Ok(SolveReport {
        ellipsoid,
        iterations,
        tolerance: delta,
        khachiyan_gap: gap,
        logdet_x,
        converged,
    })
}

/// Log-determinant optimality gap between a suboptimal solve and the
/// reference solve, clamped at zero.
#[derive(Debug, Clone, Copy)]
pub struct OptimalityGap {
    pub epsilon: f64,
    /// True when the raw difference was negative (roundoff-level tie).
    pub clamped: bool,
}

pub fn optimality_gap(report_f: &SolveReport, report_star: &SolveReport) -> Result<OptimalityGap> {
    if report_f.ellipsoid.x.dim() != report_star.ellipsoid.x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            report_f.ellipsoid.x.dim(),
            report_star.ellipsoid.x.dim()
        )));
    }
    let raw = report_star.logdet_x - report_f.logdet_x;
    Ok(OptimalityGap {
        epsilon: raw.max(0.0),
        clamped: raw < 0.0,
    })
}

/// `||x_star - x_f||_F / ||x_f||_2`, the normalized Euclidean distance
/// the certificate bounds.
pub fn normalized_error(x_f: &SymMatrix, x_star: &SymMatrix) -> Result<f64> {
    let diff = x_star.sub(x_f)?;
    let denom = linalg::spectral_norm(x_f)?;
    if denom == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(linalg::frobenius_norm(&diff) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross_2d() -> PointSet {
        PointSet::new(vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ])
        .unwrap()
    }

    #[test]
    fn unit_cross_gives_unit_circle() {
        let report = solve_mvee(&cross_2d(), 1e-8, 10_000).unwrap();
        assert!(report.converged);
        let x = &report.ellipsoid.x;
        assert!((x.get(0, 0) - 1.0).abs() < 1e-9);
        assert!((x.get(1, 1) - 1.0).abs() < 1e-9);
        assert!(x.get(0, 1).abs() < 1e-9);
        assert!(report.ellipsoid.b[0].abs() < 1e-9);
        assert!(report.ellipsoid.b[1].abs() < 1e-9);
    }

    #[test]
    fn scaled_cross_recovers_diagonal() {
        let pts = PointSet::new(vec![
            vec![2.0, 0.0],
            vec![-2.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ])
        .unwrap();
        let report = solve_mvee(&pts, 1e-8, 10_000).unwrap();
        let x = &report.ellipsoid.x;
        assert!((x.get(0, 0) - 0.5).abs() < 1e-6);
        assert!((x.get(1, 1) - 1.0).abs() < 1e-6);
        assert!(x.get(0, 1).abs() < 1e-6);
        // All four points are tight.
        for i in 0..4 {
            assert!((report.ellipsoid.radius(pts.point(i)) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_instance_feasible_and_supported() {
        let pts = PointSet::gaussian(3, 12, 9).unwrap();
        let report = solve_mvee(&pts, 1e-7, default_max_iters(&pts)).unwrap();
        assert!(report.converged);
        assert!(report.khachiyan_gap <= 1e-7);
        assert!(report.ellipsoid.max_radius(&pts) <= 1.0 + 1e-12);
        let tight = (0..pts.count())
            .filter(|&i| report.ellipsoid.radius(pts.point(i)) >= 1.0 - 1e-6)
            .count();
        assert!(tight >= 4, "only {tight} support points");
    }

    #[test]
    fn ladder_logdet_is_monotone() {
        let pts = PointSet::gaussian(4, 20, 3);
        let pts = pts.unwrap();
        let mut last = f64::NEG_INFINITY;
        for delta in [1e-1, 1e-3, 1e-5, 1e-7] {
            let report = solve_mvee(&pts, delta, default_max_iters(&pts)).unwrap();
            assert!(
                report.logdet_x >= last - 1e-10,
                "logdet dropped: {} after {}",
                report.logdet_x,
                last
            );
            last = report.logdet_x;
        }
    }

    #[test]
    fn degenerate_points_rejected() {
        let line = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
        ];
        assert!(matches!(
            PointSet::new(line),
            Err(Error::DegeneratePoints { .. })
        ));
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(matches!(
            PointSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]]),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn gap_is_clamped() {
        let pts = cross_2d();
        let coarse = solve_mvee(&pts, 1e-1, 10_000).unwrap();
        let fine = solve_mvee(&pts, 1e-8, 10_000).unwrap();
        let gap = optimality_gap(&coarse, &fine).unwrap();
        assert!(gap.epsilon >= 0.0);
        let swapped = optimality_gap(&fine, &coarse).unwrap();
        assert!(swapped.epsilon >= 0.0);
        assert!(swapped.epsilon <= gap.epsilon + 1e-15);
    }

    #[test]
    fn normalized_error_examples() {
        let i2 = SymMatrix::identity(2);
        assert_eq!(normalized_error(&i2, &i2).unwrap(), 0.0);
        let two = SymMatrix::from_diag(&[2.0, 2.0]);
        let ne = normalized_error(&i2, &two).unwrap();
        assert!((ne - 2.0_f64.sqrt()).abs() < 1e-12);
        let zero = SymMatrix::zeros(2);
        assert!(matches!(
            normalized_error(&zero, &i2),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn max_iters_reports_unconverged() {
        let pts = PointSet::gaussian(4, 30, 11).unwrap();
        let report = solve_mvee(&pts, 1e-9, 3).unwrap();
        assert!(!report.converged);
        assert!(report.khachiyan_gap > 1e-9);
        // Still feasible after inflation.
        assert!(report.ellipsoid.max_radius(&pts) <= 1.0 + 1e-12);
    }
}
