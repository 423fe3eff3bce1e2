//! End-to-end studies: figure-style band experiments, contraction slopes,
//! credible-ball coverage and the Darcy refinement study.
//!
//! Replications run in parallel on the global rayon pool and are collected
//! in index order, so outputs depend only on the configuration.

mod instances;
mod render;
mod studies;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{
    default_hb_grid, default_hyper, empirical_bayes_alpha, hb_alpha_posterior, posterior, sample_hb_posterior,
    sample_posterior, EbFit, PriorSpec, SeqObservation,
};
use crate::io::{fmt_f64, write_csv};
use crate::linalg::quantile_sorted;
use crate::observe::simulate_whitenoise;
pub use instances::{series_truth, FigureCase, Instance, FINE_1D, SERIES_TERMS};
pub use studies::{
    contraction_study, coverage_study, darcy_refinement_study, noiseless_error, ContractionConfig, ContractionReport,
    CoverageConfig, CoverageReport, CoverageTruth, DarcyRefinementReport,
};

/// Splitmix-style derivation of independent seeds from a base seed.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PriorMode {
    Fixed(f64),
    Eb,
    Hb,
}

impl FromStr for PriorMode {
    type Err = Error;

    /// `eb`, `hb`, `fixed:<alpha>` or a bare number.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "eb" => Ok(PriorMode::Eb),
            "hb" => Ok(PriorMode::Hb),
            _ => {
                let num = t.strip_prefix("fixed:").unwrap_or(&t);
                num.parse::<f64>()
                    .ok()
                    .filter(|a| a.is_finite() && *a >= 0.0)
                    .map(PriorMode::Fixed)
                    .ok_or_else(|| Error::Config(format!("prior must be eb, hb or fixed:<alpha>, got `{s}`")))
            }
        }
    }
}

/// Settings of a figure-style experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub case: FigureCase,
    pub n_list: Vec<f64>,
    pub prior: PriorMode,
    pub tau: f64,
    pub draws: usize,
    pub level: f64,
    pub seed: u64,
    /// Draws written to `draws.csv` per `n`.
    pub keep_draws: usize,
    /// Denominator floor; `None` uses a quarter of the minimum under the posterior mean.
    pub delta0: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn figure(case: FigureCase) -> Self {
        Self {
            case,
            n_list: vec![1e4, 1e6, 1e8, 1e10],
            prior: PriorMode::Eb,
            tau: 1.0,
            draws: 500,
            level: 0.95,
            seed: 0,
            keep_draws: 20,
            delta0: None,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.iter().any(|n| !(*n > 1.0)) {
            return Err(Error::Config("every n must exceed 1".into()));
        }
        if self.draws < 2 {
            return Err(Error::Config("draws must be at least 2".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config("level must lie in (0, 1)".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config("tau must be positive".into()));
        }
        Ok(())
    }
}

/// Pointwise posterior band of `f` at one signal-to-noise level.
#[derive(Clone, Debug, Serialize)]
pub struct BandSummary {
    pub n: f64,
    /// Prior smoothness used (posterior mean of `alpha` for HB).
    pub alpha: f64,
    #[serde(skip)]
    pub points: Vec<Vec<f64>>,
    #[serde(skip)]
    pub interior: Vec<bool>,
    #[serde(skip)]
    pub mean: Vec<f64>,
    #[serde(skip)]
    pub lo: Vec<f64>,
    #[serde(skip)]
    pub hi: Vec<f64>,
    #[serde(skip)]
    pub truth: Vec<f64>,
    #[serde(skip)]
    pub kept_draws: Vec<Vec<f64>>,
    /// Fraction of interior points with `lo <= truth <= hi`.
    pub containment: f64,
    pub excluded_fraction: f64,
    /// Smallest denominator minimum among excluded draws.
    pub excluded_min: Option<f64>,
    pub floor: f64,
    /// Root mean square of `mean - truth` over interior points.
    pub l2_error: f64,
}

/// Output of [`run_figure_experiment`].
#[derive(Clone, Debug, Serialize)]
pub struct FigureReport {
    pub case: String,
    pub prior: PriorMode,
    pub draws: usize,
    pub level: f64,
    pub seed: u64,
    pub bands: Vec<BandSummary>,
}

/// Outcome of one configured acceptance assertion.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

impl FigureReport {
    /// Excluded-draw fraction at most 1% for `n >= 1e6`; for the smooth
    /// one-dimensional case also band containment of at least 95% at `n = 1e8`.
    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        for b in self.bands.iter().filter(|b| b.n >= 1e6) {
            out.push(Check::new(
                format!("excluded draws at n={:e}", b.n),
                b.excluded_fraction <= 0.01,
                format!("{:.4} <= 0.01", b.excluded_fraction),
            ));
        }
        if self.case == FigureCase::Schrodinger1dSmooth.name() {
            for b in self.bands.iter().filter(|b| b.n == 1e8) {
                out.push(Check::new(
                    "band containment at n=1e8",
                    b.containment >= 0.95,
                    format!("{:.4} >= 0.95", b.containment),
                ));
            }
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        render::write_figure(self, dir)
    }
}

/// Posterior of the coefficients under one prior mode, with draws.
#[derive(Clone, Debug)]
pub struct PosteriorFit {
    /// Smoothness used; the posterior mean of `alpha` for HB.
    pub alpha: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub draws: Vec<Vec<f64>>,
    pub eb: Option<EbFit>,
    /// HB grid and posterior weights.
    pub hb: Option<(Vec<f64>, Vec<f64>)>,
}

impl PosteriorFit {
    /// `ell,mean,var` of the coefficient posterior (mixture moments for HB).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self
            .mean
            .iter()
            .zip(&self.var)
            .enumerate()
            .map(|(l, (m, v))| vec![(l + 1).to_string(), fmt_f64(*m), fmt_f64(*v)]);
        write_csv(path, &["ell", "mean", "var"], rows)
    }
}

pub fn fit_posterior(obs: &SeqObservation, prior: PriorMode, tau: f64, draws: usize, seed: u64) -> Result<PosteriorFit> {
    let gaussian = |alpha: f64, eb: Option<EbFit>| -> Result<PosteriorFit> {
        let post = posterior(obs, &PriorSpec::new(tau, alpha, obs.d)?)?;
        Ok(PosteriorFit { alpha, draws: sample_posterior(&post, draws, seed)?, mean: post.mean, var: post.var, eb, hb: None })
    };
    match prior {
        PriorMode::Fixed(alpha) => gaussian(alpha, None),
        PriorMode::Eb => {
            let fit = empirical_bayes_alpha(obs, 64)?;
            gaussian(fit.alpha, Some(fit))
        }
        PriorMode::Hb => {
            let grid = default_hb_grid(obs.n, 128);
            let w = hb_alpha_posterior(obs, &default_hyper, &grid)?;
            let (mut mean, mut second) = (vec![0.0; obs.len()], vec![0.0; obs.len()]);
            for (a, wk) in grid.iter().zip(&w) {
                if *wk == 0.0 {
                    continue;
                }
                let post = posterior(obs, &PriorSpec::new(tau, *a, obs.d)?)?;
                for l in 0..obs.len() {
                    mean[l] += wk * post.mean[l];
                    second[l] += wk * (post.var[l] + post.mean[l] * post.mean[l]);
                }
            }
            let var = second.iter().zip(&mean).map(|(s, m)| (s - m * m).max(0.0)).collect();
            Ok(PosteriorFit {
                alpha: grid.iter().zip(&w).map(|(a, b)| a * b).sum(),
                draws: sample_hb_posterior(obs, &grid, &w, draws, seed)?,
                mean,
                var,
                eb: None,
                hb: Some((grid, w)),
            })
        }
    }
}

/// Default floor: a quarter of the smallest denominator under the posterior
/// mean, or the smallest positive float when that minimum is not positive.
pub fn default_floor(inst: &Instance, mean: &[f64]) -> f64 {
    let min = inst.denominator(mean).into_iter().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        min / 4.0
    } else {
        f64::MIN_POSITIVE
    }
}

/// Maps coefficient draws through `e`, dropping draws that violate the floor.
/// Returns kept draws of `f`, the excluded fraction and the smallest
/// denominator minimum among excluded draws.
fn invert_draws(inst: &Instance, draws: &[Vec<f64>], floor: f64) -> Result<(Vec<Vec<f64>>, f64, Option<f64>)> {
    let mut kept = Vec::with_capacity(draws.len());
    let mut worst: Option<f64> = None;
    for c in draws {
        match inst.invert(c, floor) {
            Ok(f) => kept.push(f),
            Err(Error::Inversion { min, .. }) => worst = Some(worst.map_or(min, |w| w.min(min))),
            Err(e) => return Err(e),
        }
    }
    if kept.is_empty() {
        return Err(Error::Inversion { min: worst.unwrap_or(f64::NAN), floor });
    }
    let excluded = 1.0 - kept.len() as f64 / draws.len() as f64;
    Ok((kept, excluded, worst))
}

/// Pointwise `level` band of `e(v)` over the draws of `fit`.
pub fn summarize_band(
    inst: &Instance,
    n: f64,
    fit: &PosteriorFit,
    level: f64,
    delta0: Option<f64>,
    keep_draws: usize,
) -> Result<BandSummary> {
    let floor = delta0.unwrap_or_else(|| default_floor(inst, &fit.mean));
    let (fs, excluded_fraction, excluded_min) = invert_draws(inst, &fit.draws, floor)?;
    let p = inst.points.len();
    let (lo_q, hi_q) = ((1.0 - level) / 2.0, (1.0 + level) / 2.0);
    let (mut mean, mut lo, mut hi) = (vec![0.0; p], vec![0.0; p], vec![0.0; p]);
    let mut col = vec![0.0; fs.len()];
    for q in 0..p {
        for (c, f) in col.iter_mut().zip(&fs) {
            *c = f[q];
        }
        mean[q] = col.iter().sum::<f64>() / col.len() as f64;
        col.sort_by(f64::total_cmp);
        lo[q] = quantile_sorted(&col, lo_q);
        hi[q] = quantile_sorted(&col, hi_q);
    }
    let inner: Vec<usize> = (0..p).filter(|&q| inst.interior[q]).collect();
    let contained = inner.iter().filter(|&&q| lo[q] <= inst.truth[q] && inst.truth[q] <= hi[q]).count();
    let l2 = (inner.iter().map(|&q| (mean[q] - inst.truth[q]).powi(2)).sum::<f64>() / inner.len() as f64).sqrt();
    Ok(BandSummary {
        n,
        alpha: fit.alpha,
        points: inst.points.clone(),
        interior: inst.interior.clone(),
        mean,
        lo,
        hi,
        truth: inst.truth.clone(),
        kept_draws: fs.into_iter().take(keep_draws).collect(),
        containment: contained as f64 / inner.len() as f64,
        excluded_fraction,
        excluded_min,
        floor,
        l2_error: l2,
    })
}

/// One simulated data set at level `n`, its posterior, and the pointwise band.
pub fn band_for(inst: &Instance, n: f64, cfg: &ExperimentConfig, seed: u64) -> Result<BandSummary> {
    let obs = simulate_whitenoise(&inst.v0, &inst.system, n, derive_seed(seed, 1, 0))?;
    let fit = fit_posterior(&obs, cfg.prior, cfg.tau, cfg.draws, derive_seed(seed, 2, 0))?;
    summarize_band(inst, n, &fit, cfg.level, cfg.delta0, cfg.keep_draws)
}

/// Simulates data for each `n`, draws from the posterior of `v`, maps the
/// draws through `e` and summarizes pointwise bands; writes `bands.csv`,
/// `draws.csv`, `summary.json` and `plot.svg` when an output directory is set.
pub fn run_figure_experiment(cfg: &ExperimentConfig) -> Result<FigureReport> {
    cfg.validate()?;
    let n_max = cfg.n_list.iter().cloned().fold(0.0, f64::max);
    let inst = cfg.case.build(n_max)?;
    let bands = cfg
        .n_list
        .par_iter()
        .enumerate()
        .map(|(i, &n)| band_for(&inst, n, cfg, derive_seed(cfg.seed, 0, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let report = FigureReport {
        case: cfg.case.name().to_owned(),
        prior: cfg.prior,
        draws: cfg.draws,
        level: cfg.level,
        seed: cfg.seed,
        bands,
    };
    if let Some(dir) = &cfg.out_dir {
        report.write(dir)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_mode_parsing() {
        assert_eq!("eb".parse::<PriorMode>().unwrap(), PriorMode::Eb);
        assert_eq!("HB".parse::<PriorMode>().unwrap(), PriorMode::Hb);
        assert_eq!("fixed:1.5".parse::<PriorMode>().unwrap(), PriorMode::Fixed(1.5));
        assert_eq!("2".parse::<PriorMode>().unwrap(), PriorMode::Fixed(2.0));
        assert!("abc".parse::<PriorMode>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::figure(FigureCase::Volterra);
        assert!(c.validate().is_ok());
        c.draws = 1;
        assert!(c.validate().is_err());
        c.draws = 10;
        c.level = 1.0;
        assert!(c.validate().is_err());
        c.level = 0.9;
        c.n_list = vec![1.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn seeds_are_distinct() {
        let s: std::collections::BTreeSet<u64> =
            (0..3).flat_map(|a| (0..50).map(move |b| derive_seed(7, a, b))).collect();
        assert_eq!(s.len(), 150);
    }

    #[test]
    fn band_is_ordered_and_deterministic() {
        let mut cfg = ExperimentConfig::figure(FigureCase::Volterra);
        cfg.n_list = vec![1e6];
        cfg.draws = 100;
        let a = run_figure_experiment(&cfg).unwrap();
        let b = run_figure_experiment(&cfg).unwrap();
        let (x, y) = (&a.bands[0], &b.bands[0]);
        assert_eq!(x.mean, y.mean);
        assert_eq!(x.lo, y.lo);
        for q in 0..x.mean.len() {
            assert!(x.lo[q] <= x.hi[q]);
        }
        assert!(x.excluded_fraction <= 0.01);
    }
}
