//! Conjugate Gaussian inference in the sequence model
//! `Y_l = kappa_l v_l + n^{-1/2} Z_l` under the prior
//! `v_l ~ N(0, tau^2 l^{-1-2 alpha/d})`, with empirical and hierarchical
//! Bayes selection of `alpha` and Monte Carlo credible balls.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bases::SvdSystem;
use crate::error::{Error, Result};
use crate::io;
use crate::linalg::quantile_sorted;
use crate::seqspace::CoeffSeq;

/// Gaussian series prior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorSpec {
    pub tau: f64,
    pub alpha: f64,
    pub d: usize,
}

impl PriorSpec {
    pub fn new(tau: f64, alpha: f64, d: usize) -> Result<Self> {
        if !(tau > 0.0) || !(alpha >= 0.0) || d == 0 {
            return Err(Error::Domain(format!("invalid prior (tau = {tau}, alpha = {alpha}, d = {d})")));
        }
        Ok(Self { tau, alpha, d })
    }

    /// `lambda_l = tau^2 l^{-1-2 alpha/d}` for 1-based `l`.
    pub fn variance(&self, l: usize) -> f64 {
        self.tau * self.tau * (l as f64).powf(-1.0 - 2.0 * self.alpha / self.d as f64)
    }
}

/// Per-coordinate data `Y_l` with the absolute singular values they refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct SeqObservation {
    pub y: Vec<f64>,
    pub n: f64,
    pub kappa: Vec<f64>,
    pub d: usize,
    pub basis_id: String,
}

#[derive(Serialize, Deserialize)]
struct ObsSidecar {
    basis_id: String,
    d: usize,
    #[serde(rename = "N")]
    len: usize,
    n: f64,
}

impl SeqObservation {
    pub fn new(y: Vec<f64>, n: f64, system: &SvdSystem) -> Result<Self> {
        if y.len() > system.len() {
            return Err(Error::Dimension(format!("{} observations but only {} singular triples", y.len(), system.len())));
        }
        if !(n > 0.0) {
            return Err(Error::Domain("n must be positive".into()));
        }
        let kappa = system.triples[..y.len()].iter().map(|t| t.kappa.abs()).collect();
        Ok(Self { y, n, kappa, d: system.d, basis_id: system.id.clone() })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `ell,ytilde` plus a `{basis_id, d, N, n}` sidecar.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.y.iter().enumerate().map(|(l, y)| vec![(l + 1).to_string(), io::fmt_f64(*y)]);
        io::write_csv(path, &["ell", "ytilde"], rows)?;
        let side = ObsSidecar { basis_id: self.basis_id.clone(), d: self.d, len: self.len(), n: self.n };
        io::write_json(&io::sidecar_path(path), &side)
    }

    /// Reads data written by [`SeqObservation::write_csv`] against a system.
    pub fn read_csv(path: &Path, system: &SvdSystem) -> Result<Self> {
        let t = io::read_csv(path)?;
        t.expect_header(&["ell", "ytilde"])?;
        let side: ObsSidecar = io::read_json(&io::sidecar_path(path))?;
        if side.basis_id != system.id || side.d != system.d {
            return Err(Error::Dimension(format!("data were generated in basis {}, not {}", side.basis_id, system.id)));
        }
        let y = t.column("ytilde")?;
        if y.len() != side.len {
            return Err(Error::Parse(format!("sidecar declares N = {}, file has {} rows", side.len, y.len())));
        }
        Self::new(y, side.n, system)
    }
}

/// Independent Gaussian posterior per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorGaussian {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub prior: PriorSpec,
    pub n: f64,
}

impl PosteriorGaussian {
    pub fn mean_seq(&self, basis_id: &str) -> CoeffSeq {
        CoeffSeq::new(basis_id, self.prior.d, self.mean.clone())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self
            .mean
            .iter()
            .zip(&self.var)
            .enumerate()
            .map(|(l, (m, v))| vec![(l + 1).to_string(), io::fmt_f64(*m), io::fmt_f64(*v)]);
        io::write_csv(path, &["ell", "mean", "var"], rows)
    }
}

/// `mean_l = n lambda_l kappa_l y_l / (1 + n lambda_l kappa_l^2)`,
/// `var_l = lambda_l / (1 + n lambda_l kappa_l^2)`.
pub fn posterior(obs: &SeqObservation, prior: &PriorSpec) -> Result<PosteriorGaussian> {
    if prior.d != obs.d {
        return Err(Error::Dimension(format!("prior d = {} but data d = {}", prior.d, obs.d)));
    }
    if !(obs.n > 0.0) {
        return Err(Error::Domain("n must be positive".into()));
    }
    let n = obs.n;
    let mut mean = Vec::with_capacity(obs.len());
    let mut var = Vec::with_capacity(obs.len());
    for (l, (&y, &k)) in obs.y.iter().zip(&obs.kappa).enumerate() {
        let lam = prior.variance(l + 1);
        let denom = 1.0 + n * lam * k * k;
        mean.push(n * lam * k * y / denom);
        var.push(lam / denom);
    }
    Ok(PosteriorGaussian { mean, var, prior: *prior, n })
}

/// Draws `v_l ~ N(mean_l, var_l)` independently; rows are draws.
pub fn sample_posterior(post: &PosteriorGaussian, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::Domain("count must be at least 1".into()));
    }
    let mut rng = crate::rng(seed);
    let sd: Vec<f64> = post.var.iter().map(|v| v.max(0.0).sqrt()).collect();
    Ok((0..count)
        .map(|_| {
            post.mean
                .iter()
                .zip(&sd)
                .map(|(m, s)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + s * z
                })
                .collect()
        })
        .collect())
}

/// As [`sample_posterior`], wrapped as coefficient sequences.
pub fn sample_posterior_seqs(post: &PosteriorGaussian, count: usize, seed: u64, basis_id: &str) -> Result<Vec<CoeffSeq>> {
    Ok(sample_posterior(post, count, seed)?.into_iter().map(|c| CoeffSeq::new(basis_id, post.prior.d, c)).collect())
}

/// Minus twice the log marginal likelihood of the data given `alpha`
/// (tau = 1), up to an alpha-free constant:
/// `sum_l log(1 + n/(l^{1+2a/d} kappa_l^{-2})) - n^2 Y_l^2 / (l^{1+2a/d} kappa_l^{-2} + n)`.
pub fn eb_objective(alpha: f64, obs: &SeqObservation) -> f64 {
    let n = obs.n;
    let e = 1.0 + 2.0 * alpha / obs.d as f64;
    let mut acc = 0.0;
    for (l, (&y, &k)) in obs.y.iter().zip(&obs.kappa).enumerate() {
        let a = ((l + 1) as f64).powf(e) / (k * k);
        acc += (n / a).ln_1p() - n * n * y * y / (a + n);
    }
    acc
}

/// Empirical Bayes estimate with its evaluation trace.
#[derive(Clone, Debug, PartialEq)]
pub struct EbFit {
    pub alpha: f64,
    pub objective: f64,
    /// `(alpha, objective)` on the coarse grid, in increasing alpha.
    pub trace: Vec<(f64, f64)>,
}

impl EbFit {
    pub fn write_trace(&self, path: &Path) -> Result<()> {
        let rows = self.trace.iter().map(|(a, o)| vec![io::fmt_f64(*a), io::fmt_f64(*o)]);
        io::write_csv(path, &["alpha", "objective"], rows)
    }
}

/// Argmin of [`eb_objective`] over `[0, log n]`: uniform coarse scan, then
/// golden-section search in the bracket around the best grid point. Ties go
/// to the smaller alpha.
pub fn empirical_bayes_alpha(obs: &SeqObservation, grid_points: usize) -> Result<EbFit> {
    if grid_points < 8 {
        return Err(Error::Domain("grid_points must be at least 8".into()));
    }
    if !(obs.n > 1.0) {
        return Err(Error::Domain("empirical Bayes needs n > 1 so that [0, log n] is nondegenerate".into()));
    }
    let upper = obs.n.ln();
    let step = upper / (grid_points - 1) as f64;
    let trace: Vec<(f64, f64)> = (0..grid_points)
        .map(|j| {
            let a = if j + 1 == grid_points { upper } else { j as f64 * step };
            (a, eb_objective(a, obs))
        })
        .collect();
    let mut best = 0;
    for (j, t) in trace.iter().enumerate() {
        if t.1 < trace[best].1 {
            best = j;
        }
    }
    let lo = trace[best.saturating_sub(1)].0;
    let hi = trace[(best + 1).min(grid_points - 1)].0;
    let (ga, gv) = golden_section(|a| eb_objective(a, obs), lo, hi, 1e-10 * upper.max(1.0));
    let (alpha, objective) =
        if gv < trace[best].1 || (gv == trace[best].1 && ga < trace[best].0) { (ga, gv) } else { trace[best] };
    Ok(EbFit { alpha, objective, trace })
}

/// Golden-section minimization on `[a, b]`; returns the best evaluated point.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Default hyperprior density `exp(-alpha)`.
pub fn default_hyper(alpha: f64) -> f64 {
    (-alpha).exp()
}

/// Uniform grid of `points` values on `[0, log n]`.
pub fn default_hb_grid(n: f64, points: usize) -> Vec<f64> {
    let upper = n.ln();
    (0..points).map(|j| upper * j as f64 / (points - 1) as f64).collect()
}

/// Posterior weights of `alpha` on a grid:
/// `w_j ∝ hyper(alpha_j) exp(-eb_objective(alpha_j)/2)`, via log-sum-exp.
pub fn hb_alpha_posterior(obs: &SeqObservation, hyper: &dyn Fn(f64) -> f64, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(Error::Domain("alpha grid must be nonnegative and strictly increasing".into()));
    }
    let mut logw = Vec::with_capacity(grid.len());
    for &a in grid {
        let h = hyper(a);
        if !(h > 0.0) {
            return Err(Error::Domain(format!("hyperprior density is not positive at alpha = {a}")));
        }
        logw.push(h.ln() - 0.5 * eb_objective(a, obs));
    }
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical("all hierarchical weights underflow; log-weights are not finite".into()));
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / s).collect())
}

/// Draws from the hierarchical posterior: `alpha_j` by weight, then `v | alpha_j`.
pub fn sample_hb_posterior(obs: &SeqObservation, grid: &[f64], weights: &[f64], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    use rand::Rng;
    let mut rng = crate::rng(seed);
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let u: f64 = rng.random::<f64>() * acc;
        let j = cdf.partition_point(|c| *c < u).min(grid.len() - 1);
        let post = posterior(obs, &PriorSpec::new(1.0, grid[j], obs.d)?)?;
        let draw = post
            .mean
            .iter()
            .zip(&post.var)
            .map(|(m, v)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                m + v.sqrt() * z
            })
            .collect();
        out.push(draw);
    }
    Ok(out)
}

/// Centred `L_2` ball with a given posterior probability.
#[derive(Clone, Debug, PartialEq)]
pub struct CredibleBall {
    pub center: CoeffSeq,
    pub radius: f64,
    pub level: f64,
    pub inflation: f64,
}

impl CredibleBall {
    pub fn new(post: &PosteriorGaussian, basis_id: &str, level: f64, inflation: f64, mc_draws: usize, seed: u64) -> Result<Self> {
        if !(inflation >= 1.0) {
            return Err(Error::Domain("inflation must be at least 1".into()));
        }
        let radius = credible_radius(post, level, mc_draws, seed)?;
        Ok(Self { center: post.mean_seq(basis_id), radius, level, inflation })
    }

    /// Whether `||v - center|| <= inflation * radius`; coordinates past the
    /// centre's truncation count fully.
    pub fn contains(&self, v: &[f64]) -> bool {
        self.distance(v) <= self.inflation * self.radius
    }

    pub fn distance(&self, v: &[f64]) -> f64 {
        let c = &self.center.coeffs;
        let mut acc = 0.0;
        for (l, x) in v.iter().enumerate() {
            let m = c.get(l).copied().unwrap_or(0.0);
            acc += (x - m) * (x - m);
        }
        for m in c.iter().skip(v.len()) {
            acc += m * m;
        }
        acc.sqrt()
    }
}

/// Monte Carlo `level`-quantile of `||v - mean||_2` under the posterior,
/// i.e. of `sqrt(sum_l var_l chi2_l)`.
pub fn credible_radius(post: &PosteriorGaussian, level: f64, mc_draws: usize, seed: u64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level must lie in (0, 1), got {level}")));
    }
    let mut r = radius_samples(post, mc_draws.max(1), seed);
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(quantile_sorted(&r, level))
}

/// Realized deviations `||v - mean||` for `count` posterior draws.
pub fn radius_samples(post: &PosteriorGaussian, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = crate::rng(seed);
    (0..count)
        .map(|_| {
            post.var
                .iter()
                .map(|v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v * z * z
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Bracketing function for the EB estimate (`d = 1`, `kappa_i = i^{-p}`):
/// `(1+2a+2p)/(n^{1/(1+2a+2p)} log n) sum_i n^2 i^{1+2a} v_i^2 log i / (i^{1+2a+2p} + n)^2`.
pub fn hn_diagnostic(alpha: f64, v0: &CoeffSeq, n: f64, p: f64, d: usize) -> Result<f64> {
    if d != 1 {
        return Err(Error::Dimension("the h_n diagnostic is defined for d = 1 only".into()));
    }
    if !(alpha > 0.0) || !(n > 1.0) {
        return Err(Error::Domain("h_n needs alpha > 0 and n > 1".into()));
    }
    let c = 1.0 + 2.0 * alpha + 2.0 * p;
    let mut acc = 0.0;
    for (l, v) in v0.coeffs.iter().enumerate() {
        let i = (l + 1) as f64;
        let a = i.powf(1.0 + 2.0 * alpha);
        let den = a * i.powf(2.0 * p) + n;
        acc += n * n * a * v * v * i.ln() / (den * den);
    }
    Ok(c / (n.powf(1.0 / c) * n.ln()) * acc)
}

/// `(lower, upper)` brackets: the first grid alpha where `h_n > l` (capped at
/// `sqrt(log n)`), and the first where `h_n > L (log n)^2`. Infinite when never crossed.
pub fn hn_brackets(v0: &CoeffSeq, n: f64, p: f64, l: f64, big_l: f64, grid: &[f64]) -> Result<(f64, f64)> {
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for &a in grid.iter().filter(|a| **a > 0.0) {
        let h = hn_diagnostic(a, v0, n, p, 1)?;
        if lower.is_infinite() && h > l {
            lower = a;
        }
        if upper.is_infinite() && h > big_l * n.ln().powi(2) {
            upper = a;
        }
    }
    Ok((lower.min(n.ln().sqrt()), upper))
}
