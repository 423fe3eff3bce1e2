use std::f64::consts::PI;

use super::{from_sorted, BasisKind, SvdSystem};
use crate::error::{Error, Result};
use crate::seqspace::MultiIndex;

/// Eigenpair of `K^T K` for `L = d/dt - Delta/2` on `(0,1)^d x [0,1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatEigenPair {
    pub i: MultiIndex,
    pub k: u32,
    /// `pi^2 sum_j i_j^2`.
    pub mu: f64,
    /// Root of `nu / tan(nu) = -mu/2` in `((k - 1/2) pi, k pi)`.
    pub nu: f64,
    /// `1 / (nu^2 + mu^2/4)`.
    pub lambda: f64,
}

impl HeatEigenPair {
    pub fn residual(&self) -> f64 {
        self.nu / self.nu.tan() + self.mu / 2.0
    }

    /// Two-sided bound `(lower, upper)` on `lambda`.
    pub fn bracket(&self) -> (f64, f64) {
        let s = self.i.sum_sq();
        let k = self.k as f64;
        let tail = PI * PI * s * s / 4.0;
        (1.0 / (PI * PI * (k * k + tail)), 1.0 / (PI * PI * ((k - 0.5) * (k - 0.5) + tail)))
    }

    fn norm(&self) -> f64 {
        let nu = self.nu;
        ((-1.0 / nu.tan() + nu / nu.sin().powi(2)) / (2.0 * nu)).sqrt()
    }

    /// Normalized time factor; vanishes at `t = 1`.
    pub fn time_factor(&self, t: f64) -> f64 {
        let nu = self.nu;
        (-(nu * t).sin() / nu.tan() + (nu * t).cos()) / self.norm()
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        let space: f64 =
            self.i.entries().iter().zip(x).map(|(&ij, &xj)| std::f64::consts::SQRT_2 * (ij as f64 * PI * xj).sin()).product();
        self.time_factor(t) * space
    }
}

/// Solves `nu / tan(nu) = -mu/2` on `((k - 1/2) pi, k pi)` by bisection on
/// `nu cos(nu) + (mu/2) sin(nu)`, which changes sign across the bracket.
pub fn heat_root(mu: f64, k: u32) -> Result<f64> {
    if k == 0 || mu < 0.0 {
        return Err(Error::Domain(format!("heat root needs k >= 1 and mu >= 0 (k = {k}, mu = {mu})")));
    }
    let phi = |nu: f64| nu * nu.cos() + 0.5 * mu * nu.sin();
    let mut lo = (k as f64 - 0.5) * PI;
    let mut hi = k as f64 * PI;
    let (mut flo, fhi) = (phi(lo), phi(hi));
    if mu == 0.0 {
        return Ok(lo);
    }
    if flo * fhi > 0.0 {
        return Err(Error::Numerical(format!("no sign change for heat root (mu = {mu}, k = {k})")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = phi(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm * flo > 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let res = |nu: f64| (nu / nu.tan() + 0.5 * mu).abs();
    let nu = if res(lo) <= res(hi) { lo } else { hi };
    if hi - lo > 1e-12 {
        return Err(Error::Numerical(format!("heat root bisection did not converge (mu = {mu}, k = {k})")));
    }
    Ok(nu)
}

/// All pairs with `|i|_inf <= max_space`, `k <= max_time`, ordered by
/// decreasing `lambda` (ties lexicographic on `(i, k)`).
pub fn heat_eigensystem(d: usize, max_space: usize, max_time: usize) -> Result<Vec<HeatEigenPair>> {
    if d == 0 || max_space == 0 || max_time == 0 {
        return Err(Error::Domain("heat_eigensystem arguments must be >= 1".into()));
    }
    let mut entries = Vec::new();
    for i in MultiIndex::cube(d, max_space as u32) {
        let mu = PI * PI * i.sum_sq();
        for k in 1..=max_time as u32 {
            let nu = heat_root(mu, k)?;
            let lambda = 1.0 / (nu * nu + mu * mu / 4.0);
            let mut key = i.entries().to_vec();
            key.push(k);
            entries.push((MultiIndex::new(key)?, lambda, HeatEigenPair { i: i.clone(), k, mu, nu, lambda }));
        }
    }
    Ok(crate::seqspace::sort_multiindexed(entries)?.into_iter().map(|e| e.2).collect())
}

/// The heat pairs as an [`SvdSystem`] over `(x, t)` with `kappa = sqrt(lambda)`.
pub fn heat_system(d: usize, max_space: usize, max_time: usize) -> Result<SvdSystem> {
    let pairs = heat_eigensystem(d, max_space, max_time)?;
    let entries = pairs
        .iter()
        .map(|p| {
            let mut key = p.i.entries().to_vec();
            key.push(p.k);
            (MultiIndex::new(key).expect("positive"), p.lambda.sqrt(), 1.0)
        })
        .collect();
    // kappa_l ~ l^{-2/(d+2)} over the (d+1)-dimensional index set
    let p = 2.0 * (d as f64 + 1.0) / (d as f64 + 2.0);
    from_sorted(format!("heat-d{d}"), d + 1, p, BasisKind::Heat(pairs), entries)
}
