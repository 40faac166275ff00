//! Weibull density, sampling and fitting.
//!
//! Two fitters are provided: least squares of the density against a
//! normalized histogram (grid search, then Nelder-Mead in log-parameter
//! space) and maximum likelihood through the one-dimensional profile
//! equation for the shape.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::FitError;
use crate::histogram::Histogram;
use crate::optimize::nelder_mead;
use crate::par::{self, Execution};
use crate::rng::stream_rng;

/// Shape `k` and scale `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub k: f64,
    pub lambda: f64,
}

impl WeibullParams {
    pub fn new(k: f64, lambda: f64) -> Result<Self, FitError> {
        if !(k.is_finite() && k > 0.0 && lambda.is_finite() && lambda > 0.0) {
            return Err(FitError::InvalidParams(format!(
                "need k > 0 and lambda > 0, got k={k}, lambda={lambda}"
            )));
        }
        Ok(Self { k, lambda })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let z = x / self.lambda;
        (self.k / self.lambda) * z.powf(self.k - 1.0) * (-z.powf(self.k)).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(-(x / self.lambda).powf(self.k)).exp_m1()
    }

    /// Inverse-CDF transform of `u` in `(0, 1)`: `lambda * (-ln u)^(1/k)`.
    /// Uses `u` directly as the survival probability.
    pub fn from_uniform(&self, u: f64) -> f64 {
        self.lambda * (-u.ln()).powf(1.0 / self.k)
    }

    pub fn median(&self) -> f64 {
        self.lambda * std::f64::consts::LN_2.powf(1.0 / self.k)
    }
}

pub fn sample_weibull(params: &WeibullParams, seed: u64, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| params.from_uniform(rng.sample(Open01))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    #[serde(rename = "ls")]
    LeastSquares,
    #[serde(rename = "mle")]
    MaximumLikelihood,
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMethod::LeastSquares => "ls",
            FitMethod::MaximumLikelihood => "mle",
        })
    }
}

impl FromStr for FitMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ls" => Ok(FitMethod::LeastSquares),
            "mle" => Ok(FitMethod::MaximumLikelihood),
            other => Err(format!("unknown fit method `{other}` (expected ls or mle)")),
        }
    }
}

/// Serialized as `{k, lambda, method, objective, ks, n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub params: WeibullParams,
    pub method: FitMethod,
    /// Residual sum of squares (`ls`) or negative log-likelihood (`mle`).
    pub objective: f64,
    pub ks: f64,
    pub n: u64,
}

pub const GRID_K_RANGE: (f64, f64) = (0.2, 10.0);
pub const GRID_POINTS: usize = 60;
/// Relative parameter tolerance of the local refinement.
pub const REFINE_TOL: f64 = 1e-6;

/// Sum of squared differences between histogram densities and the Weibull
/// density at bin centers.
pub fn ls_objective(hist: &Histogram, params: &WeibullParams) -> f64 {
    hist.densities()
        .iter()
        .enumerate()
        .map(|(i, d)| (d - params.pdf(hist.center(i))).powi(2))
        .sum()
}

pub fn fit_least_squares(hist: &Histogram) -> Result<FitReport, FitError> {
    fit_least_squares_with(hist, Execution::default())
}

/// Least-squares fit with an explicit execution mode for the grid search.
pub fn fit_least_squares_with(hist: &Histogram, exec: Execution) -> Result<FitReport, FitError> {
    let total = hist.total();
    if !(total > 0.0) {
        return Err(FitError::Degenerate("histogram is empty".into()));
    }
    let nonzero = hist.nonzero_bins();
    if nonzero < 3 {
        return Err(FitError::Degenerate(format!(
            "need at least 3 nonzero bins, found {nonzero}"
        )));
    }
    let last = hist.last_nonzero().expect("nonzero bins exist");
    let data_max = hist.upper_edge(last);
    if !(data_max > 0.0) {
        return Err(FitError::Degenerate("all mass lies at or below zero".into()));
    }

    let densities = hist.densities();
    let centers: Vec<f64> = (0..hist.len()).map(|i| hist.center(i)).collect();
    let objective = |k: f64, lambda: f64| -> f64 {
        if !(k > 0.0 && lambda > 0.0 && k.is_finite() && lambda.is_finite()) {
            return f64::INFINITY;
        }
        let w = WeibullParams { k, lambda };
        densities
            .iter()
            .zip(&centers)
            .map(|(d, x)| (d - w.pdf(*x)).powi(2))
            .sum()
    };

    let (k_lo, k_hi) = GRID_K_RANGE;
    let (l_lo, l_hi) = (0.1 * data_max, 2.0 * data_max);
    let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64;
    let values = par::map_indices(exec, GRID_POINTS * GRID_POINTS, |i| {
        let (k, l) = (lin(k_lo, k_hi, i / GRID_POINTS), lin(l_lo, l_hi, i % GRID_POINTS));
        (k, l, objective(k, l))
    });
    // first strict minimum in (k, lambda) order breaks ties toward smaller k, then smaller lambda
    let (k0, l0, _) = values
        .iter()
        .copied()
        .fold((f64::NAN, f64::NAN, f64::INFINITY), |best, cand| {
            if cand.2 < best.2 {
                cand
            } else {
                best
            }
        });
    if !k0.is_finite() {
        return Err(FitError::Degenerate(
            "objective is not finite anywhere on the grid".into(),
        ));
    }

    let log_obj = |x: [f64; 2]| objective(x[0].exp(), x[1].exp());
    let mut start = [k0.ln(), l0.ln()];
    let mut best = nelder_mead(log_obj, start, [0.1, 0.1], REFINE_TOL, 10_000);
    // one restart guards against a collapsed simplex
    start = best.x;
    let again = nelder_mead(log_obj, start, [0.02, 0.02], REFINE_TOL, 10_000);
    if again.value <= best.value {
        best = again;
    }

    let params = WeibullParams::new(best.x[0].exp(), best.x[1].exp())?;
    Ok(FitReport {
        params,
        method: FitMethod::LeastSquares,
        objective: best.value,
        ks: ks_histogram(hist, &params),
        n: total.round() as u64,
    })
}

pub fn neg_log_likelihood(samples: &[f64], params: &WeibullParams) -> f64 {
    let (k, l) = (params.k, params.lambda);
    -samples
        .iter()
        .map(|&x| k.ln() - l.ln() + (k - 1.0) * (x / l).ln() - (x / l).powf(k))
        .sum::<f64>()
}

pub const MLE_MIN_SAMPLES: usize = 2;
pub const MLE_K_BRACKET: (f64, f64) = (1e-3, 1e3);

/// Maximum-likelihood fit for positive samples.
///
/// The shape solves `sum(x^k ln x) / sum(x^k) - 1/k - mean(ln x) = 0`, found
/// by bisection on [`MLE_K_BRACKET`]; the scale is then
/// `(mean(x^k))^(1/k)`. Samples are rescaled by their maximum before
/// exponentiation so large shapes do not overflow.
pub fn fit_mle(samples: &[f64]) -> Result<FitReport, FitError> {
    if samples.len() < MLE_MIN_SAMPLES {
        return Err(FitError::Degenerate(format!(
            "need at least {MLE_MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if let Some(x) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(FitError::Degenerate(format!(
            "samples must be finite and > 0, found {x}"
        )));
    }
    let max = samples.iter().copied().fold(f64::MIN, f64::max);
    let min = samples.iter().copied().fold(f64::MAX, f64::min);
    if min == max {
        return Err(FitError::Degenerate("all samples are identical".into()));
    }

    let ys: Vec<f64> = samples.iter().map(|x| x / max).collect();
    let ln_ys: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = ys.len() as f64;
    let mean_ln = ln_ys.iter().sum::<f64>() / n;
    let profile = |k: f64| {
        let (mut s0, mut s1) = (0.0, 0.0);
        for (y, ly) in ys.iter().zip(&ln_ys) {
            let w = y.powf(k);
            s0 += w;
            s1 += w * ly;
        }
        s1 / s0 - 1.0 / k - mean_ln
    };

    let (mut lo, mut hi) = MLE_K_BRACKET;
    if profile(lo) > 0.0 || profile(hi) < 0.0 {
        return Err(FitError::Degenerate(format!(
            "shape estimate lies outside [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if profile(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * mid {
            break;
        }
    }
    let k = 0.5 * (lo + hi);
    let mean_pow = ys.iter().map(|y| y.powf(k)).sum::<f64>() / n;
    let params = WeibullParams::new(k, max * mean_pow.powf(1.0 / k))?;
    Ok(FitReport {
        params,
        method: FitMethod::MaximumLikelihood,
        objective: neg_log_likelihood(samples, &params),
        ks: ks_samples(samples, &params),
        n: samples.len() as u64,
    })
}

/// Integer count data shifted to `n + 0.5` so zero counts stay inside the
/// support.
pub fn shift_counts(counts: &[u64]) -> Vec<f64> {
    counts.iter().map(|&c| c as f64 + 0.5).collect()
}

/// Maximum likelihood on a histogram, treating each unit of count as a
/// sample at its bin center. Counts must be whole numbers.
pub fn fit_mle_histogram(hist: &Histogram) -> Result<FitReport, FitError> {
    let mut samples = Vec::new();
    for (i, &c) in hist.counts().iter().enumerate() {
        if c.fract() != 0.0 {
            return Err(FitError::Degenerate(format!("bin {i} has a non-integer count {c}")));
        }
        samples.extend(std::iter::repeat_n(hist.center(i), c as usize));
    }
    fit_mle(&samples)
}

/// Kolmogorov-Smirnov distance between the sample ECDF and the Weibull CDF.
/// Empty input yields 0.
pub fn ks_samples(samples: &[f64], params: &WeibullParams) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = params.cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0)
}

/// KS distance for binned data, evaluated at every bin edge.
pub fn ks_histogram(hist: &Histogram, params: &WeibullParams) -> f64 {
    let total = hist.total();
    if !(total > 0.0) {
        return 0.0;
    }
    let mut d = params.cdf(hist.origin()).abs();
    let mut acc = 0.0;
    for (i, c) in hist.counts().iter().enumerate() {
        acc += c;
        d = d.max((acc / total - params.cdf(hist.upper_edge(i))).abs());
    }
    d.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub empirical: f64,
    pub fitted: f64,
}

/// Bin centers with the empirical density and the fitted density.
pub fn plot_points(hist: &Histogram, params: &WeibullParams) -> Vec<PlotPoint> {
    hist.densities()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            let x = hist.center(i);
            PlotPoint {
                x,
                empirical: d,
                fitted: params.pdf(x),
            }
        })
        .collect()
}

pub fn plot_csv(points: &[PlotPoint]) -> String {
    let mut out = String::from("x,empirical,fitted\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.x, p.empirical, p.fitted);
    }
    out
}
