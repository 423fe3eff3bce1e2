//! Monte Carlo rate and coverage studies, and the Darcy refinement study.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, Check, Instance};
use crate::error::{Error, Result};
use crate::inference::{credible_radius, posterior, sample_posterior, PriorSpec, SeqObservation};
use crate::io::{fmt_f64, write_csv, write_json};
use crate::linalg::{ols_slope, quantile_sorted};
use crate::observe::simulate_whitenoise;
use crate::pdes::{darcy_characteristics, darcy_forward, DarcyGrid, Influx};
use crate::scalar_fn;

/// Root mean square over interior evaluation points.
fn interior_rms(inst: &Instance, f: &[f64]) -> f64 {
    let (mut s, mut k) = (0.0, 0usize);
    for ((a, b), i) in f.iter().zip(&inst.truth).zip(&inst.interior) {
        if *i {
            s += (a - b).powi(2);
            k += 1;
        }
    }
    (s / k as f64).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionConfig {
    pub beta: f64,
    pub alpha: f64,
    pub n_list: Vec<f64>,
    pub replications: usize,
    /// Posterior draws averaged into the posterior mean of `f`.
    pub draws: usize,
    /// Coefficients of the truncated truth.
    pub len: usize,
    pub g0: f64,
    pub eval: usize,
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            alpha: 1.0,
            n_list: vec![1e4, 1e5, 1e6, 1e7],
            replications: 50,
            draws: 50,
            len: 1024,
            g0: 1.0,
            eval: 256,
            bootstrap: 400,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionReport {
    pub alpha: f64,
    pub beta: f64,
    pub n_list: Vec<f64>,
    /// Mean over replications of the interior L2 error of the posterior mean of `f`.
    pub mean_error: Vec<f64>,
    /// Same with `f` evaluated at the posterior mean of `v`.
    pub plugin_error: Vec<f64>,
    #[serde(skip)]
    pub errors: Vec<Vec<f64>>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub theoretical: f64,
}

impl ContractionReport {
    pub fn check_window(&self, lo: f64, hi: f64) -> Check {
        Check::new(
            format!("contraction slope alpha={} beta={}", self.alpha, self.beta),
            self.slope >= lo && self.slope <= hi,
            format!("{:.4} in [{lo}, {hi}]", self.slope),
        )
    }

    /// `contraction.csv` (one row per replication) and `summary.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let rows = self.n_list.iter().zip(&self.errors).flat_map(|(n, es)| {
            es.iter().enumerate().map(move |(r, e)| vec![fmt_f64(*n), r.to_string(), fmt_f64(*e)])
        });
        write_csv(&dir.join("contraction.csv"), &["n", "replication", "l2_error"], rows)?;
        write_json(&dir.join("summary.json"), self)
    }
}

fn slope_of(n_list: &[f64], errs: &[f64]) -> f64 {
    let x: Vec<f64> = n_list.iter().map(|n| n.ln()).collect();
    let y: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    ols_slope(&x, &y).0
}

/// Volterra truth with coefficients `l^{-beta-1/2-0.01}`, fixed `alpha`,
/// replications at each `n`; slope of log mean error against log `n` with a
/// replication bootstrap interval.
pub fn contraction_study(cfg: &ContractionConfig) -> Result<ContractionReport> {
    if cfg.n_list.len() < 2 || cfg.replications == 0 || cfg.draws == 0 {
        return Err(Error::Config("contraction study needs two n values and positive counts".into()));
    }
    let inst = Instance::volterra_sequence(cfg.beta, cfg.len, cfg.g0, cfg.eval)?;
    let prior = PriorSpec::new(1.0, cfg.alpha, 1)?;
    let runs: Vec<(f64, f64)> = (0..cfg.n_list.len() * cfg.replications)
        .into_par_iter()
        .map(|job| {
            let (i, r) = (job / cfg.replications, job % cfg.replications);
            let s = derive_seed(cfg.seed, i as u64, r as u64);
            let obs = simulate_whitenoise(&inst.v0, &inst.system, cfg.n_list[i], derive_seed(s, 1, 0))?;
            let post = posterior(&obs, &prior)?;
            let plugin = interior_rms(&inst, &inst.invert(&post.mean, 0.0)?);
            let mut acc = vec![0.0; inst.points.len()];
            for c in sample_posterior(&post, cfg.draws, derive_seed(s, 2, 0))? {
                for (a, f) in acc.iter_mut().zip(inst.invert(&c, 0.0)?) {
                    *a += f;
                }
            }
            acc.iter_mut().for_each(|a| *a /= cfg.draws as f64);
            Ok((interior_rms(&inst, &acc), plugin))
        })
        .collect::<Result<_>>()?;
    let errors: Vec<Vec<f64>> =
        runs.chunks(cfg.replications).map(|c| c.iter().map(|r| r.0).collect()).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mean_error: Vec<f64> = errors.iter().map(|e| mean(e)).collect();
    let plugin_error =
        runs.chunks(cfg.replications).map(|c| c.iter().map(|r| r.1).sum::<f64>() / c.len() as f64).collect();
    let slope = slope_of(&cfg.n_list, &mean_error);

    let mut rng = crate::rng(derive_seed(cfg.seed, u64::MAX, 0));
    let mut boot: Vec<f64> = (0..cfg.bootstrap)
        .map(|_| {
            let m: Vec<f64> = errors
                .iter()
                .map(|e| (0..e.len()).map(|_| e[rng.random_range(0..e.len())]).sum::<f64>() / e.len() as f64)
                .collect();
            slope_of(&cfg.n_list, &m)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let slope_ci = if boot.is_empty() {
        (slope, slope)
    } else {
        (quantile_sorted(&boot, 0.025), quantile_sorted(&boot, 0.975))
    };
    let a = cfg.alpha.min(cfg.beta);
    Ok(ContractionReport {
        alpha: cfg.alpha,
        beta: cfg.beta,
        n_list: cfg.n_list.clone(),
        mean_error,
        plugin_error,
        errors,
        slope,
        slope_ci,
        theoretical: -a / (1.0 + 2.0 * cfg.alpha + 2.0),
    })
}

/// Interior L2 error of `e` at the posterior mean for noise-free data
/// `Y_l = |kappa_l| v0_l` at level `n`.
pub fn noiseless_error(inst: &Instance, alpha: f64, n: f64) -> Result<f64> {
    let y = inst.v0.coeffs.iter().zip(inst.system.kappas()).map(|(v, k)| k.abs() * v).collect();
    let obs = SeqObservation::new(y, n, &inst.system)?;
    let post = posterior(&obs, &PriorSpec::new(1.0, alpha, inst.system.d)?)?;
    Ok(interior_rms(inst, &inst.invert(&post.mean, 0.0)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CoverageTruth {
    /// Volterra coefficients `l^{-beta-1/2-0.01}`.
    Sequence { beta: f64 },
    Zero,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageConfig {
    pub alpha: f64,
    pub truth: CoverageTruth,
    pub n: f64,
    pub replications: usize,
    pub inflations: Vec<f64>,
    pub level: f64,
    pub mc_draws: usize,
    pub len: usize,
    pub seed: u64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            truth: CoverageTruth::Sequence { beta: 1.0 },
            n: 1e6,
            replications: 200,
            inflations: vec![1.0, 2.0],
            level: 0.95,
            mc_draws: 1000,
            len: 1024,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageReport {
    pub alpha: f64,
    pub truth: CoverageTruth,
    pub n: f64,
    pub replications: usize,
    /// `(c, fraction of runs with ||v0 - mean|| <= c r_n)`.
    pub coverage: Vec<(f64, f64)>,
    pub mean_radius: f64,
    pub mean_distance: f64,
}

impl CoverageReport {
    pub fn at(&self, c: f64) -> Option<f64> {
        self.coverage.iter().find(|(k, _)| *k == c).map(|p| p.1)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let rows = self.coverage.iter().map(|(c, f)| vec![fmt_f64(self.alpha), fmt_f64(*c), fmt_f64(*f)]);
        write_csv(&dir.join("coverage.csv"), &["alpha", "c", "coverage"], rows)?;
        write_json(&dir.join("summary.json"), self)
    }
}

/// Frequentist coverage of the `level` credible ball over replications.
pub fn coverage_study(cfg: &CoverageConfig) -> Result<CoverageReport> {
    if cfg.replications == 0 || cfg.inflations.is_empty() {
        return Err(Error::Config("coverage study needs replications and inflations".into()));
    }
    let system = crate::bases::volterra_system(cfg.len)?;
    let coeffs = match cfg.truth {
        CoverageTruth::Sequence { beta } => (1..=cfg.len).map(|l| (l as f64).powf(-beta - 0.51)).collect(),
        CoverageTruth::Zero => vec![0.0; cfg.len],
    };
    let v0 = crate::CoeffSeq::new(system.id.clone(), 1, coeffs);
    let prior = PriorSpec::new(1.0, cfg.alpha, 1)?;
    let runs: Vec<(f64, f64)> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(cfg.seed, 0, r as u64);
            let obs = simulate_whitenoise(&v0, &system, cfg.n, derive_seed(s, 1, 0))?;
            let post = posterior(&obs, &prior)?;
            let radius = credible_radius(&post, cfg.level, cfg.mc_draws, derive_seed(s, 2, 0))?;
            let dist = post.mean.iter().zip(&v0.coeffs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            Ok((radius, dist))
        })
        .collect::<Result<_>>()?;
    let k = runs.len() as f64;
    let coverage = cfg
        .inflations
        .iter()
        .map(|&c| (c, runs.iter().filter(|(r, d)| *d <= c * r).count() as f64 / k))
        .collect();
    Ok(CoverageReport {
        alpha: cfg.alpha,
        truth: cfg.truth,
        n: cfg.n,
        replications: cfg.replications,
        coverage,
        mean_radius: runs.iter().map(|r| r.0).sum::<f64>() / k,
        mean_distance: runs.iter().map(|r| r.1).sum::<f64>() / k,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DarcyRefinementReport {
    pub m: Vec<usize>,
    pub max_error: Vec<f64>,
    /// `log2(e_k / e_{k+1})` per halving of the mesh width.
    pub decrement: Vec<f64>,
    pub order_violations: Vec<usize>,
    pub c_u: Vec<f64>,
}

impl DarcyRefinementReport {
    pub fn checks(&self) -> Vec<Check> {
        let mono = self.max_error.windows(2).all(|w| w[1] < w[0]);
        let band = self.decrement.iter().all(|d| (0.25..=1.5).contains(d));
        vec![
            Check::new("darcy refinement monotone", mono, format!("{:?}", self.max_error)),
            Check::new("darcy refinement decrement in [0.25, 1.5]", band, format!("{:?}", self.decrement)),
        ]
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let rows = (0..self.m.len()).map(|k| {
            vec![
                self.m[k].to_string(),
                fmt_f64(self.max_error[k]),
                self.order_violations[k].to_string(),
                fmt_f64(self.c_u[k]),
            ]
        });
        write_csv(&dir.join("darcy_refinement.csv"), &["m", "max_error", "order_violations", "c_u"], rows)?;
        write_json(&dir.join("summary.json"), self)
    }
}

/// Characteristics recovery of `f = 1 + sin(2x+y)/2` from finite-difference
/// solutions with `u = (x+1/2)^2 + (y+1/4)^2` as boundary data; max error
/// over the node grid at each resolution.
pub fn darcy_refinement_study(m_list: &[usize]) -> Result<DarcyRefinementReport> {
    let f = |x: &[f64]| 1.0 + 0.5 * (2.0 * x[0] + x[1]).sin();
    let h = move |x: &[f64]| {
        let c = (2.0 * x[0] + x[1]).cos();
        c * 2.0 * (x[0] + 0.5) + 0.5 * c * 2.0 * (x[1] + 0.25) + 4.0 * f(x)
    };
    let g = |x: &[f64]| (x[0] + 0.5).powi(2) + (x[1] + 0.25).powi(2);
    let rows = m_list
        .par_iter()
        .map(|&m| {
            let u = darcy_forward(&f, &h, &g, m)?;
            let hg = u.like(u.points().iter().map(|x| h(x)).collect());
            let grid = DarcyGrid::from_samples(&u, &hg, Influx::Function(scalar_fn(f)))?;
            let inv = darcy_characteristics(&grid)?;
            let err = inv.alpha.points().iter().zip(&inv.alpha.values).map(|(x, a)| (a - f(x)).abs()).fold(0.0, f64::max);
            Ok((err, inv.order_violations, inv.c_u))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_error: Vec<f64> = rows.iter().map(|r| r.0).collect();
    Ok(DarcyRefinementReport {
        m: m_list.to_vec(),
        decrement: max_error.windows(2).map(|w| (w[0] / w[1]).log2()).collect(),
        max_error,
        order_violations: rows.iter().map(|r| r.1).collect(),
        c_u: rows.iter().map(|r| r.2).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_truth_is_always_covered() {
        let cfg = CoverageConfig {
            alpha: 1.0,
            truth: CoverageTruth::Zero,
            replications: 20,
            mc_draws: 200,
            len: 256,
            ..Default::default()
        };
        let r = coverage_study(&cfg).unwrap();
        assert!(r.mean_radius > 0.0);
        // center shrinks toward zero, so ||mean|| sits inside the ball
        assert_eq!(r.at(1.0), Some(1.0));
        assert_eq!(r.at(2.0), Some(1.0));
    }

    #[test]
    fn noiseless_error_follows_the_bias_rate() {
        // With alpha = beta = 1 the prior bias decays like n^{-1/5}, so the
        // error at n = 1e12 stays near 2e-3 and a 1e-3 floor needs n ~ 1e14.
        let inst = Instance::volterra_sequence(1.0, 1024, 1.0, 256).unwrap();
        let e: Vec<f64> = [1e8, 1e10, 1e12].iter().map(|&n| noiseless_error(&inst, 1.0, n).unwrap()).collect();
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
        assert!((1.5e-3..3e-3).contains(&e[2]), "{e:?}");
        let slope = (e[2] / e[1]).ln() / 100f64.ln();
        assert!((-0.25..-0.12).contains(&slope), "{slope}");
    }

    #[test]
    fn contraction_small_run_is_deterministic() {
        let cfg = ContractionConfig {
            n_list: vec![1e4, 1e6],
            replications: 3,
            draws: 5,
            len: 128,
            eval: 64,
            bootstrap: 20,
            ..Default::default()
        };
        let a = contraction_study(&cfg).unwrap();
        let b = contraction_study(&cfg).unwrap();
        assert_eq!(a.mean_error, b.mean_error);
        assert!(a.mean_error[1] < a.mean_error[0]);
        assert!(a.slope_ci.0 <= a.slope_ci.1);
    }
}
