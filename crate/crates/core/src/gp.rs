//! Locally stationary Gaussian-process model of ocean variability.
//!
//! Within a spatial window the mean-adjusted non-TC values are modeled as
//! independent yearly replicates of a zero-mean GP with covariance
//! `phi * exp(-d)` under the anisotropic distance
//! `d = sqrt((dlat/theta_lat)^2 + (dlon/theta_lon)^2 + (dt/theta_t)^2)`,
//! plus a Gaussian nugget. Parameters come from maximum likelihood on log
//! scale. Because paired profiles share a location, lineage covariances
//! reduce to the temporal kernel, and the covariance of all paired
//! differences is block diagonal with one dense block per lineage.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::blockdiag::BlockDiag;
use crate::float::FloatExt as _;
use crate::geodesy::GeoPoint;
use crate::optim;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GpError {
    #[error("insufficient data: {n} observations, {needed} required")]
    InsufficientData { n: usize, needed: usize },
    #[error("covariance matrix is not positive definite")]
    NonPositiveDefinite,
    #[error("all optimizer starts failed")]
    OptimizerFailed,
    #[error("no valid parameters available near the query point")]
    NoValidParams,
}

/// Fitted covariance parameters at one grid cell and level. `sigma` is the
/// nugget standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpParams {
    pub phi: f64,
    pub theta_lat: f64,
    pub theta_lon: f64,
    pub theta_t: f64,
    pub sigma: f64,
}

impl GpParams {
    pub fn is_valid(&self) -> bool {
        self.phi > 0.0
            && self.theta_lat > 0.0
            && self.theta_lon > 0.0
            && self.theta_t > 0.0
            && self.sigma >= 0.0
            && [self.phi, self.theta_lat, self.theta_lon, self.theta_t, self.sigma]
                .iter()
                .all(|v| v.is_finite())
    }
}

/// One observation in a fitting window; coordinates relative to the window
/// center, time in fractional days.
#[derive(Debug, Clone, Copy)]
pub struct GpObs {
    pub dlat: f64,
    pub dlon: f64,
    pub t: f64,
    pub value: f64,
}

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct GpFit {
    pub params: GpParams,
    pub nll: f64,
    /// Infinity norm of the gradient on log-scale parameters at the optimum.
    pub grad_norm: f64,
    pub n_obs: usize,
    /// NLL after each accepted optimizer step of the winning start.
    pub trajectory: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub n_min: usize,
    pub n_starts: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub sigma2_floor: f64,
    /// Starting length scales (lat, lon, days); data-derived when absent.
    pub init_lengthscales: Option<(f64, f64, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_min: 30,
            n_starts: 5,
            max_iter: 120,
            seed: 0,
            sigma2_floor: 1e-6,
            init_lengthscales: None,
        }
    }
}

/// Squared coordinate differences for one year of window data, reused across
/// likelihood evaluations.
struct YearData {
    y: DVector<f64>,
    qlat: DMatrix<f64>,
    qlon: DMatrix<f64>,
    qt: DMatrix<f64>,
}

impl YearData {
    fn new(obs: &[GpObs]) -> Self {
        let m = obs.len();
        let mut qlat = DMatrix::zeros(m, m);
        let mut qlon = DMatrix::zeros(m, m);
        let mut qt = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                let dl = obs[a].dlat - obs[b].dlat;
                let dn = obs[a].dlon - obs[b].dlon;
                let dt = obs[a].t - obs[b].t;
                qlat[(a, b)] = dl * dl;
                qlon[(a, b)] = dn * dn;
                qt[(a, b)] = dt * dt;
            }
        }
        Self {
            y: DVector::from_iterator(m, obs.iter().map(|o| o.value)),
            qlat,
            qlon,
            qt,
        }
    }

    fn kernel(&self, phi: f64, tl2: f64, tn2: f64, tt2: f64, sigma2: f64) -> DMatrix<f64> {
        let m = self.y.len();
        let mut k = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let d = (self.qlat[(a, b)] / tl2 + self.qlon[(a, b)] / tn2
                    + self.qt[(a, b)] / tt2)
                    .sqrt();
                let v = phi * (-d).exp();
                k[(a, b)] = v;
                k[(b, a)] = v;
            }
            k[(a, a)] += sigma2;
        }
        k
    }
}

const LN_2PI: f64 = 1.8378770664093453;

/// Negative log likelihood of window data under the GP model, summing the
/// independent yearly replicates.
pub fn gp_negative_log_likelihood(
    params: &GpParams,
    years: &[Vec<GpObs>],
) -> Result<f64, GpError> {
    let data: Vec<YearData> = years
        .iter()
        .filter(|y| !y.is_empty())
        .map(|y| YearData::new(y))
        .collect();
    nll_impl(
        &data,
        params.phi,
        params.theta_lat,
        params.theta_lon,
        params.theta_t,
        params.sigma * params.sigma,
        None,
    )
    .ok_or(GpError::NonPositiveDefinite)
}

/// Core NLL; accumulates the gradient with respect to
/// (ln phi, ln theta_lat, ln theta_lon, ln theta_t, x) with sigma^2 =
/// floor + e^x when `grad` is provided. `grad_sigma_scale` is d(sigma^2)/dx.
#[allow(clippy::too_many_arguments)]
fn nll_impl(
    data: &[YearData],
    phi: f64,
    tl: f64,
    tn: f64,
    tt: f64,
    sigma2: f64,
    grad: Option<(&mut [f64], f64)>,
) -> Option<f64> {
    let (tl2, tn2, tt2) = (tl * tl, tn * tn, tt * tt);
    let mut nll = 0.0;
    let mut g = [0.0f64; 5];
    let want_grad = grad.is_some();
    for yd in data {
        let m = yd.y.len();
        let k = yd.kernel(phi, tl2, tn2, tt2, sigma2);
        let chol = k.clone().cholesky()?;
        let mut ldet = 0.0;
        for i in 0..m {
            ldet += chol.l_dirty()[(i, i)].ln();
        }
        let alpha = chol.solve(&yd.y);
        nll += 0.5 * (m as f64 * LN_2PI + 2.0 * ldet + yd.y.dot(&alpha));
        if !want_grad {
            continue;
        }
        let kinv = chol.inverse();
        // grad_j = 0.5 * sum_ab (Kinv_ab - alpha_a alpha_b) dK_ab.
        for a in 0..m {
            let wda = kinv[(a, a)] - alpha[a] * alpha[a];
            g[0] += 0.5 * wda * (k[(a, a)] - sigma2);
            g[4] += 0.5 * wda;
            for b in a + 1..m {
                let w = kinv[(a, b)] - alpha[a] * alpha[b];
                let kab = k[(a, b)];
                g[0] += w * kab;
                let d = (yd.qlat[(a, b)] / tl2 + yd.qlon[(a, b)] / tn2
                    + yd.qt[(a, b)] / tt2)
                    .sqrt();
                if d > 0.0 {
                    let scale = w * kab / d;
                    g[1] += scale * yd.qlat[(a, b)] / tl2;
                    g[2] += scale * yd.qlon[(a, b)] / tn2;
                    g[3] += scale * yd.qt[(a, b)] / tt2;
                }
            }
        }
    }
    if let Some((out, dsig)) = grad {
        g[4] *= dsig;
        out.copy_from_slice(&g);
    }
    Some(nll)
}

/// Fits GP parameters by maximum likelihood over log-scale parameters with
/// multi-start BFGS; the best converged start wins.
pub fn fit_mle(years: &[Vec<GpObs>], opts: &FitOptions) -> Result<GpFit, GpError> {
    let data: Vec<YearData> = years
        .iter()
        .filter(|y| !y.is_empty())
        .map(|y| YearData::new(y))
        .collect();
    let n_obs: usize = data.iter().map(|d| d.y.len()).sum();
    if n_obs < opts.n_min {
        return Err(GpError::InsufficientData {
            n: n_obs,
            needed: opts.n_min,
        });
    }

    // Method-of-moments initialization: split the pooled variance 80/20
    // between process and nugget; length scales from the window extent.
    let mean: f64 = data.iter().map(|d| d.y.sum()).sum::<f64>() / n_obs as f64;
    let var: f64 = data
        .iter()
        .map(|d| d.y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>())
        .sum::<f64>()
        / (n_obs as f64 - 1.0).max(1.0);
    let var = var.max(1e-8);
    let (mut l_lat, mut l_lon, mut l_t) = opts.init_lengthscales.unwrap_or((0.0, 0.0, 0.0));
    if l_lat <= 0.0 || l_lon <= 0.0 || l_t <= 0.0 {
        let mut ranges = [0.0f64; 3];
        for yd in &data {
            ranges[2] = ranges[2].max(yd.qt.max().sqrt());
            ranges[0] = ranges[0].max(yd.qlat.max().sqrt());
            ranges[1] = ranges[1].max(yd.qlon.max().sqrt());
        }
        if l_lat <= 0.0 {
            l_lat = (ranges[0] / 2.0).max(0.5);
        }
        if l_lon <= 0.0 {
            l_lon = (ranges[1] / 2.0).max(0.5);
        }
        if l_t <= 0.0 {
            l_t = (ranges[2] / 2.0).max(0.5);
        }
    }
    let floor = opts.sigma2_floor;
    let base = [
        (0.8 * var).ln(),
        l_lat.ln(),
        l_lon.ln(),
        l_t.ln(),
        (0.2 * var).max(floor * 2.0).ln(),
    ];

    let opt_opts = optim::Options {
        max_iter: opts.max_iter,
        grad_tol: 1e-5,
    };
    let mut best: Option<optim::Minimum> = None;
    for start in 0..opts.n_starts.max(1) {
        let mut x0 = base;
        if start > 0 {
            let mut rng = SplitMix64::new(opts.seed.wrapping_add(start as u64).wrapping_mul(0x9E3779B97F4A7C15));
            for v in &mut x0 {
                *v += rng.uniform(-1.2, 1.2);
            }
        }
        // x4 parameterizes sigma^2 = floor + e^{x4}.
        let objective = |x: &[f64], g: &mut [f64]| -> Option<f64> {
            if x.iter().any(|v| v.abs() > 20.0) {
                return None;
            }
            let sigma2 = floor + x[4].exp();
            nll_impl(
                &data,
                x[0].exp(),
                x[1].exp(),
                x[2].exp(),
                x[3].exp(),
                sigma2,
                Some((g, x[4].exp())),
            )
        };
        if let Some(m) = optim::bfgs(objective, &x0, &opt_opts) {
            let better = best.as_ref().map(|b| m.value < b.value).unwrap_or(true);
            if better {
                best = Some(m);
            }
        }
    }
    let best = best.ok_or(GpError::OptimizerFailed)?;
    let x = &best.x;
    Ok(GpFit {
        params: GpParams {
            phi: x[0].exp(),
            theta_lat: x[1].exp(),
            theta_lon: x[2].exp(),
            theta_t: x[3].exp(),
            sigma: (floor + x[4].exp()).sqrt(),
        },
        nll: best.value,
        grad_norm: best.grad_norm,
        n_obs,
        trajectory: best.trajectory,
    })
}

/// Covariance among the mean-adjusted values of one lineage's members
/// (baseline first, then signals), which share a location: diagonal
/// `phi + sigma^2`, off-diagonal `phi * exp(-|dt| / theta_t)`.
pub fn lineage_covariance(params: &GpParams, times: &[f64]) -> DMatrix<f64> {
    let n = times.len();
    let sigma2 = params.sigma * params.sigma;
    let mut k = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = if a == b {
                params.phi + sigma2
            } else {
                params.phi * (-(times[a] - times[b]).abs() / params.theta_t).exp()
            };
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    k
}

/// Covariance of the temperature differences of a lineage: `D S Dt` with
/// `D = [-1 | I]`, evaluated entrywise from the member covariance.
pub fn difference_covariance(lineage_cov: &DMatrix<f64>) -> DMatrix<f64> {
    let n = lineage_cov.nrows();
    assert!(n >= 1, "lineage covariance must include the baseline");
    let s = n - 1;
    let mut out = DMatrix::zeros(s, s);
    for j in 0..s {
        for k in 0..s {
            out[(j, k)] = lineage_cov[(0, 0)] - lineage_cov[(0, k + 1)]
                - lineage_cov[(j + 1, 0)]
                + lineage_cov[(j + 1, k + 1)];
        }
    }
    out
}

/// Lineage geometry handed to the covariance assembly: the shared location
/// and member times, baseline first.
#[derive(Debug, Clone)]
pub struct LineagePoints {
    pub loc: GeoPoint,
    /// Baseline time followed by the time-ordered signal times.
    pub times: Vec<f64>,
}

/// The block-diagonal covariance of all paired differences, blocks ordered
/// by lineage, rows within a block following the lineage's signal order.
#[derive(Debug, Clone)]
pub struct BlockCovariance {
    sigma: BlockDiag,
    index: Vec<(usize, usize)>,
}

impl BlockCovariance {
    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    /// Block and row of each pair, in global pair order.
    pub fn pair_index(&self) -> &[(usize, usize)] {
        &self.index
    }

    pub fn as_block_diag(&self) -> &BlockDiag {
        &self.sigma
    }

    pub fn into_block_diag(self) -> BlockDiag {
        self.sigma
    }

    /// Per-pair difference variances (the diagonal).
    pub fn variances(&self) -> Vec<f64> {
        self.sigma.diagonal()
    }

    /// Block-wise inverse, the GLS weight matrix.
    pub fn inverse(&self) -> Result<BlockDiag, GpError> {
        self.sigma.inverse().map_err(|_| GpError::NonPositiveDefinite)
    }

    /// Block-wise lower Cholesky factors.
    pub fn cholesky(&self) -> Result<BlockDiag, GpError> {
        self.sigma.cholesky().map_err(|_| GpError::NonPositiveDefinite)
    }
}

/// Assembles the block-diagonal covariance over lineages, resolving the GP
/// parameters of each lineage's location through `lookup` (nearest valid
/// grid cell).
pub fn assemble_block_covariance<F>(
    lineages: &[LineagePoints],
    mut lookup: F,
) -> Result<BlockCovariance, GpError>
where
    F: FnMut(&GeoPoint) -> Result<GpParams, GpError>,
{
    let mut blocks = Vec::with_capacity(lineages.len());
    let mut index = Vec::new();
    for (b, lin) in lineages.iter().enumerate() {
        let params = lookup(&lin.loc)?;
        let cov = lineage_covariance(&params, &lin.times);
        let diff = difference_covariance(&cov);
        for r in 0..diff.nrows() {
            index.push((b, r));
        }
        blocks.push(diff);
    }
    let sigma = BlockDiag::new(blocks).expect("difference covariance blocks are square");
    Ok(BlockCovariance { sigma, index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn params(phi: f64, tl: f64, tn: f64, tt: f64, sigma: f64) -> GpParams {
        GpParams {
            phi,
            theta_lat: tl,
            theta_lon: tn,
            theta_t: tt,
            sigma,
        }
    }

    fn std_normal(rng: &mut ChaCha12Rng) -> f64 {
        // Box-Muller.
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos()
    }

    /// Draws one year of observations from the exact model.
    fn simulate_year(
        rng: &mut ChaCha12Rng,
        truth: &GpParams,
        m: usize,
        half_width: f64,
        t_span: f64,
    ) -> Vec<GpObs> {
        let mut obs: Vec<GpObs> = (0..m)
            .map(|_| GpObs {
                dlat: rng.gen_range(-half_width..half_width),
                dlon: rng.gen_range(-half_width..half_width),
                t: rng.gen_range(0.0..t_span),
                value: 0.0,
            })
            .collect();
        let mut k = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                let d = (((obs[a].dlat - obs[b].dlat) / truth.theta_lat).powi(2)
                    + ((obs[a].dlon - obs[b].dlon) / truth.theta_lon).powi(2)
                    + ((obs[a].t - obs[b].t) / truth.theta_t).powi(2))
                .sqrt();
                k[(a, b)] = truth.phi * (-d).exp();
            }
        }
        let l = k
            .cholesky()
            .or_else(|| {
                (DMatrix::identity(m, m) * 1e-10
                    + lineage_covariance(truth, &[0.0]) * 0.0
                    + k_fallback(&obs, truth))
                .cholesky()
            })
            .expect("simulated kernel is PD");
        let z = DVector::from_fn(m, |_, _| std_normal(rng));
        let f = l.l() * z;
        for (o, fv) in obs.iter_mut().zip(f.iter()) {
            o.value = fv + truth.sigma * std_normal(rng);
        }
        obs
    }

    fn k_fallback(obs: &[GpObs], truth: &GpParams) -> DMatrix<f64> {
        let m = obs.len();
        DMatrix::from_fn(m, m, |a, b| {
            let d = (((obs[a].dlat - obs[b].dlat) / truth.theta_lat).powi(2)
                + ((obs[a].dlon - obs[b].dlon) / truth.theta_lon).powi(2)
                + ((obs[a].t - obs[b].t) / truth.theta_t).powi(2))
            .sqrt();
            truth.phi * (-d).exp()
        })
    }

    #[test]
    fn nll_closed_form_1x1() {
        let p = params(1.0, 1.0, 1.0, 1.0, 1.0);
        let y = 0.7;
        let years = vec![vec![GpObs {
            dlat: 0.0,
            dlon: 0.0,
            t: 0.0,
            value: y,
        }]];
        let nll = gp_negative_log_likelihood(&p, &years).unwrap();
        let want = 0.5 * (2.0 * core::f64::consts::PI * 2.0).ln() + y * y / 4.0;
        assert_abs_diff_eq!(nll, want, epsilon = 1e-12);
    }

    #[test]
    fn nll_closed_form_2x2_colocated() {
        // Two colocated simultaneous observations, phi = 1, sigma^2 = 0.5:
        // covariance [[1.5, 1], [1, 1.5]].
        let p = params(1.0, 1.0, 1.0, 1.0, 0.5f64.sqrt());
        let (y1, y2) = (0.4, -0.9);
        let years = vec![vec![
            GpObs { dlat: 0.0, dlon: 0.0, t: 0.0, value: y1 },
            GpObs { dlat: 0.0, dlon: 0.0, t: 0.0, value: y2 },
        ]];
        let nll = gp_negative_log_likelihood(&p, &years).unwrap();
        let det: f64 = 1.5 * 1.5 - 1.0;
        let quad = (1.5 * y1 * y1 - 2.0 * y1 * y2 + 1.5 * y2 * y2) / det;
        let want = 0.5 * (2.0 * (2.0 * core::f64::consts::PI).ln() + det.ln() + quad);
        assert_abs_diff_eq!(nll, want, epsilon = 1e-12);
    }

    #[test]
    fn nll_prefers_truth_over_perturbation() {
        let truth = params(1.0, 2.0, 2.0, 5.0, 0.3);
        let perturbed = params(2.0, 4.0, 4.0, 10.0, 0.6);
        let mut wins = 0;
        let reps = 40;
        for rep in 0..reps {
            let mut rng = ChaCha12Rng::seed_from_u64(500 + rep);
            let years: Vec<Vec<GpObs>> = (0..4)
                .map(|_| simulate_year(&mut rng, &truth, 50, 5.0, 90.0))
                .collect();
            let a = gp_negative_log_likelihood(&truth, &years).unwrap();
            let b = gp_negative_log_likelihood(&perturbed, &years).unwrap();
            if a <= b {
                wins += 1;
            }
        }
        assert!(wins * 100 >= reps * 95, "truth won only {wins}/{reps}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let truth = params(0.8, 1.5, 2.5, 6.0, 0.4);
        let years: Vec<Vec<GpObs>> = (0..2)
            .map(|_| simulate_year(&mut rng, &truth, 25, 4.0, 60.0))
            .collect();
        let data: Vec<YearData> = years.iter().map(|y| YearData::new(y)).collect();
        let floor = 1e-6;
        let x = [0.1f64, 0.3, 0.8, 1.5, -2.0];
        let eval = |x: &[f64], g: Option<&mut [f64]>| -> f64 {
            let s2 = floor + x[4].exp();
            nll_impl(
                &data,
                x[0].exp(),
                x[1].exp(),
                x[2].exp(),
                x[3].exp(),
                s2,
                g.map(|g| (g, x[4].exp())),
            )
            .unwrap()
        };
        let mut grad = [0.0; 5];
        eval(&x, Some(&mut grad));
        for j in 0..5 {
            let h = 1e-6;
            let mut xp = x;
            xp[j] += h;
            let mut xm = x;
            xm[j] -= h;
            let fd = (eval(&xp, None) - eval(&xm, None)) / (2.0 * h);
            assert!(
                (fd - grad[j]).abs() <= 1e-4 * (1.0 + fd.abs()),
                "grad[{j}] = {} vs fd {}",
                grad[j],
                fd
            );
        }
    }

    #[test]
    fn mle_smoke_recovery() {
        let truth = params(1.0, 2.0, 2.0, 5.0, 0.3);
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let years: Vec<Vec<GpObs>> = (0..10)
            .map(|_| simulate_year(&mut rng, &truth, 60, 5.0, 90.0))
            .collect();
        let fit = fit_mle(
            &years,
            &FitOptions {
                n_starts: 3,
                seed: 9,
                init_lengthscales: Some((5.0, 5.0, 45.0)),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(fit.params.is_valid());
        // Loose smoke bounds; the acceptance suite runs the calibrated check.
        assert!((fit.params.phi - 1.0).abs() < 0.5, "phi = {}", fit.params.phi);
        assert!(
            (fit.params.theta_t - 5.0).abs() < 3.0,
            "theta_t = {}",
            fit.params.theta_t
        );
        assert!(fit.trajectory.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.grad_norm <= 1e-5 * (1.0 + fit.nll.abs()));
    }

    #[test]
    fn white_noise_attributes_variance_to_nugget() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let years: Vec<Vec<GpObs>> = (0..5)
            .map(|_| {
                (0..80)
                    .map(|_| GpObs {
                        dlat: rng.gen_range(-5.0..5.0),
                        dlon: rng.gen_range(-5.0..5.0),
                        t: rng.gen_range(0.0..90.0),
                        value: 0.5 * std_normal(&mut rng),
                    })
                    .collect()
            })
            .collect();
        let fit = fit_mle(
            &years,
            &FitOptions {
                n_starts: 4,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let sigma2 = fit.params.sigma * fit.params.sigma;
        assert!(
            fit.params.phi < sigma2 / 4.0,
            "phi = {}, sigma^2 = {}",
            fit.params.phi,
            sigma2
        );
    }

    #[test]
    fn too_few_observations() {
        let years = vec![vec![
            GpObs { dlat: 0.0, dlon: 0.0, t: 0.0, value: 1.0 },
            GpObs { dlat: 1.0, dlon: 0.0, t: 1.0, value: 2.0 },
            GpObs { dlat: 0.0, dlon: 1.0, t: 2.0, value: 0.0 },
        ]];
        assert!(matches!(
            fit_mle(&years, &FitOptions::default()),
            Err(GpError::InsufficientData { n: 3, needed: 30 })
        ));
    }

    #[test]
    fn lineage_covariance_examples() {
        let p = params(1.0, 1.0, 1.0, 10.0, 0.5f64.sqrt());
        let k = lineage_covariance(&p, &[0.0, 5.0, 12.0]);
        for i in 0..3 {
            assert_abs_diff_eq!(k[(i, i)], 1.5, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(k[(0, 1)], (-0.5f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(k[(0, 2)], (-1.2f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(k[(1, 2)], (-0.7f64).exp(), epsilon = 1e-12);

        // Zero lag: off-diagonal is exactly phi.
        let k0 = lineage_covariance(&p, &[3.0, 3.0]);
        assert_abs_diff_eq!(k0[(0, 1)], 1.0, epsilon = 1e-12);

        // Decorrelation limit theta_t -> 0+.
        let p0 = params(1.0, 1.0, 1.0, 1e-12, 0.5f64.sqrt());
        let kd = lineage_covariance(&p0, &[0.0, 5.0, 12.0]);
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 1.5 } else { 0.0 };
                assert_abs_diff_eq!(kd[(a, b)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn difference_covariance_examples() {
        let p = params(1.0, 1.0, 1.0, 10.0, 0.5f64.sqrt());
        // Single pair, dt = 5: var(y) = 2*1.5 - 2*e^{-0.5}.
        let k = lineage_covariance(&p, &[0.0, 5.0]);
        let dc = difference_covariance(&k);
        assert_abs_diff_eq!(dc[(0, 0)], 3.0 - 2.0 * (-0.5f64).exp(), epsilon = 1e-14);

        // Three-member lineage against an explicit D S Dt product.
        let k = lineage_covariance(&p, &[0.0, 5.0, 12.0]);
        let dc = difference_covariance(&k);
        let d = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, -1.0, 0.0, 1.0]);
        let oracle = &d * &k * d.transpose();
        assert!((dc - oracle).abs().max() <= 1e-14);

        // Perfectly correlated limit: sigma = 0, theta_t -> infinity.
        let p_inf = params(1.0, 1.0, 1.0, 1e300, 0.0);
        let k = lineage_covariance(&p_inf, &[0.0, 5.0, 12.0]);
        let dc = difference_covariance(&k);
        assert!(dc.abs().max() <= 1e-12);
    }

    #[test]
    fn difference_covariance_time_shift_invariance() {
        let p = params(0.7, 1.0, 1.0, 8.0, 0.2);
        let times = [10.0, 14.0, 21.0, 30.0];
        let shifted: Vec<f64> = times.iter().map(|t| t + 123.0).collect();
        let a = difference_covariance(&lineage_covariance(&p, &times));
        let b = difference_covariance(&lineage_covariance(&p, &shifted));
        assert!((a - b).abs().max() <= 1e-12);
    }

    #[test]
    fn assemble_blocks_and_inverse() {
        let loc = GeoPoint::new(-45.0, 20.0).unwrap();
        let p = params(0.9, 1.0, 1.0, 6.0, 0.3);
        let lineages = vec![
            LineagePoints { loc, times: vec![0.0, 4.0] },
            LineagePoints { loc, times: vec![1.0, 5.0, 9.0] },
            LineagePoints { loc, times: vec![2.0, 6.0] },
        ];
        let cov = assemble_block_covariance(&lineages, |_| Ok(p)).unwrap();
        assert_eq!(cov.dim(), 4);
        assert_eq!(cov.pair_index(), &[(0, 0), (1, 0), (1, 1), (2, 0)]);

        // Block-wise inverse equals the dense inverse.
        let dense = cov.as_block_diag().to_dense();
        let dense_inv = dense.try_inverse().unwrap();
        let block_inv = cov.inverse().unwrap().to_dense();
        assert!((dense_inv - block_inv).abs().max() <= 1e-10);

        // Singleton lineages produce a diagonal covariance.
        let singles = vec![
            LineagePoints { loc, times: vec![0.0, 4.0] },
            LineagePoints { loc, times: vec![0.0, 9.0] },
        ];
        let cov = assemble_block_covariance(&singles, |_| Ok(p)).unwrap();
        let dense = cov.as_block_diag().to_dense();
        assert_eq!(dense.nrows(), 2);
        assert_abs_diff_eq!(dense[(0, 1)], 0.0, epsilon = 1e-15);

        // Empty lineage list: empty covariance.
        let cov = assemble_block_covariance(&[], |_| Ok(p)).unwrap();
        assert_eq!(cov.dim(), 0);

        // Permuting lineage order permutes blocks identically.
        let rev: Vec<LineagePoints> = lineages.iter().rev().cloned().collect();
        let cov_rev = assemble_block_covariance(&rev, |_| Ok(p)).unwrap();
        assert_eq!(
            cov.as_block_diag().block(1),
            cov_rev.as_block_diag().block(1)
        );
        assert_eq!(
            cov.as_block_diag().block(0),
            cov_rev.as_block_diag().block(2)
        );
    }

    #[test]
    fn blocks_are_positive_definite() {
        let loc = GeoPoint::new(0.0, 0.0).unwrap();
        let p = params(1.3, 1.0, 1.0, 4.0, 0.25);
        let lineages = vec![LineagePoints {
            loc,
            times: vec![0.0, 3.0, 6.5, 10.0, 13.5, 17.0, 20.0],
        }];
        let cov = assemble_block_covariance(&lineages, |_| Ok(p)).unwrap();
        assert!(cov.cholesky().is_ok());
    }
}
