//! Singular systems `(kappa_l, h_l, g_l)` of the forward operators `K`.
//!
//! Every system is ordered by decreasing `kappa` with lexicographic ties
//! and carries the sign in `K h_l = sign_l * kappa_l * g_l` explicitly.

mod discrete;
mod heat;

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

pub use discrete::{discrete_svd, GridSpec};
pub use heat::{heat_eigensystem, heat_root, heat_system, HeatEigenPair};

use crate::error::{Error, Result};
use crate::io;
use crate::observe::Axis;
use crate::seqspace::{sort_multiindexed, MultiIndex};

/// One singular triple; the functions themselves live in [`BasisKind`].
#[derive(Clone, Debug, PartialEq)]
pub struct Triple {
    pub index: MultiIndex,
    pub kappa: f64,
    pub sign: f64,
}

/// Boundary convention for the one-dimensional Darcy operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DarcyBoundary {
    /// `u = g` at both ends.
    Dirichlet,
    /// Dirichlet at 0, Neumann at 1; `K` is the plain Volterra integral.
    Mixed,
}

/// Function families backing a system.
#[derive(Clone, Debug)]
pub enum BasisKind {
    /// `h_i = g_i = 2^{d/2} prod sin(i_j pi x_j)`.
    Sine,
    /// `h_i = sqrt2 cos((i - 1/2) pi x)`, `g_i = sqrt2 sin((i - 1/2) pi x)`.
    ShiftedCosine,
    /// `h_i = sqrt2 cos(i pi x)`, `g_i = sqrt2 sin(i pi x)`.
    Cosine,
    /// Eigenfunctions of `K^T K` for the heat operator on `(0,1)^d x [0,1]`;
    /// left functions are not available in closed form.
    Heat(Vec<HeatEigenPair>),
    /// Singular vectors of a discretized operator, one value per grid node.
    Discrete { grid: GridSpec, h: Vec<Vec<f64>>, g: Vec<Vec<f64>>, p_estimate: f64 },
}

/// Ordered singular system of an operator `K`.
#[derive(Clone, Debug)]
pub struct SvdSystem {
    pub id: String,
    /// Spatial dimension of the index set (includes time for heat).
    pub d: usize,
    /// Ill-posedness degree: `kappa_l ~ l^{-p/d}`.
    pub p: f64,
    pub kind: BasisKind,
    pub triples: Vec<Triple>,
}

impl SvdSystem {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn kappas(&self) -> Vec<f64> {
        self.triples.iter().map(|t| t.kappa).collect()
    }

    /// Number of coordinates of a point in the domain.
    pub fn point_dim(&self) -> usize {
        match &self.kind {
            BasisKind::Discrete { grid, .. } => grid.axes.len(),
            _ => self.d,
        }
    }

    /// Keeps the first `n` triples.
    pub fn truncate(&self, n: usize) -> Result<SvdSystem> {
        if n == 0 || n > self.len() {
            return Err(Error::Dimension(format!("cannot truncate a {}-term system to {n}", self.len())));
        }
        let mut out = self.clone();
        out.triples.truncate(n);
        match &mut out.kind {
            BasisKind::Heat(pairs) => pairs.truncate(n),
            BasisKind::Discrete { h, g, .. } => {
                h.truncate(n);
                g.truncate(n);
            }
            _ => {}
        }
        Ok(out)
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.point_dim() {
            return Err(Error::Dimension(format!("point has {} coordinates, domain has {}", x.len(), self.point_dim())));
        }
        let inside = match &self.kind {
            BasisKind::Discrete { grid, .. } => {
                grid.axes.iter().zip(x).all(|(a, &c)| c >= a.start - 1e-12 && c <= a.end() + 1e-12)
            }
            _ => x.iter().all(|&c| (-1e-12..=1.0 + 1e-12).contains(&c)),
        };
        if inside {
            Ok(())
        } else {
            Err(Error::Domain(format!("point {x:?} lies outside the domain of {}", self.id)))
        }
    }

    /// Right singular function `h_l` at `x` (0-based `l`).
    pub fn h(&self, l: usize, x: &[f64]) -> f64 {
        let idx = self.triples[l].index.entries();
        match &self.kind {
            BasisKind::Sine => sine_product(idx, x),
            BasisKind::ShiftedCosine => SQRT_2 * ((idx[0] as f64 - 0.5) * PI * x[0]).cos(),
            BasisKind::Cosine => SQRT_2 * (idx[0] as f64 * PI * x[0]).cos(),
            BasisKind::Heat(pairs) => {
                let d = pairs[l].i.dim();
                pairs[l].eval(&x[..d], x[d])
            }
            BasisKind::Discrete { grid, h, .. } => grid.interpolate(&h[l], x),
        }
    }

    /// Left singular function `g_l` at `x`, when known.
    pub fn g(&self, l: usize, x: &[f64]) -> Option<f64> {
        let idx = self.triples[l].index.entries();
        match &self.kind {
            BasisKind::Sine => Some(sine_product(idx, x)),
            BasisKind::ShiftedCosine => Some(SQRT_2 * ((idx[0] as f64 - 0.5) * PI * x[0]).sin()),
            BasisKind::Cosine => Some(SQRT_2 * (idx[0] as f64 * PI * x[0]).sin()),
            BasisKind::Heat(_) => None,
            BasisKind::Discrete { grid, g, .. } => Some(grid.interpolate(&g[l], x)),
        }
    }

    /// `h_l(x_p)` for every triple and point: `table[l][p]`.
    pub fn h_table(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.len()).map(|l| points.iter().map(|x| self.h(l, x)).collect()).collect()
    }

    /// `sign_l kappa_l g_l(x_p)`, the image `K h_l` sampled on points.
    pub fn kh_table(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        (0..self.len())
            .map(|l| {
                let t = &self.triples[l];
                points
                    .iter()
                    .map(|x| {
                        self.g(l, x)
                            .map(|g| t.sign * t.kappa * g)
                            .ok_or_else(|| Error::Domain(format!("{} has no closed-form left functions", self.id)))
                    })
                    .collect()
            })
            .collect()
    }

    /// Audit table `ell,kappa,sign,index_tuple`.
    pub fn write_audit(&self, path: &Path) -> Result<()> {
        let rows = self.triples.iter().enumerate().map(|(l, t)| {
            vec![(l + 1).to_string(), io::fmt_f64(t.kappa), format!("{}", t.sign as i32), t.index.label()]
        });
        io::write_csv(path, &["ell", "kappa", "sign", "index_tuple"], rows)
    }
}

fn sine_product(idx: &[u32], x: &[f64]) -> f64 {
    idx.iter().zip(x).map(|(&i, &xj)| SQRT_2 * (i as f64 * PI * xj).sin()).product()
}

fn one_dim_indices(max_index: usize) -> Result<Vec<MultiIndex>> {
    if max_index == 0 {
        return Err(Error::Domain("max_index must be at least 1".into()));
    }
    (1..=max_index as u32).map(|i| MultiIndex::new(vec![i])).collect()
}

fn from_sorted(id: String, d: usize, p: f64, kind: BasisKind, entries: Vec<(MultiIndex, f64, f64)>) -> Result<SvdSystem> {
    let sorted = sort_multiindexed(entries)?;
    let triples = sorted.into_iter().map(|(index, kappa, sign)| Triple { index, kappa, sign }).collect();
    Ok(SvdSystem { id, d, p, kind, triples })
}

/// Inverse Dirichlet Laplacian on `(0,1)^d`, all indices with `|i|_inf <= max_index`.
///
/// `K h_i = -kappa_i h_i` with `kappa_i = 1 / (pi^2 |i|^2)`.
pub fn laplacian_system(d: usize, max_index: usize) -> Result<SvdSystem> {
    if d == 0 || max_index == 0 {
        return Err(Error::Domain("laplacian_system needs d >= 1 and max_index >= 1".into()));
    }
    let entries = MultiIndex::cube(d, max_index as u32)
        .into_iter()
        .map(|i| {
            let k = 1.0 / (PI * PI * i.sum_sq());
            (i, k, -1.0)
        })
        .collect();
    from_sorted(format!("laplacian-d{d}"), d, 2.0, BasisKind::Sine, entries)
}

/// The `n` largest-`kappa` triples of the inverse Laplacian, in exact order.
///
/// The cube enumeration of [`laplacian_system`] is only a correct prefix
/// inside the inscribed ball, so the ball radius is grown until it holds `n`.
pub fn laplacian_leading(d: usize, n: usize) -> Result<SvdSystem> {
    if d == 0 || n == 0 {
        return Err(Error::Domain("laplacian_leading needs d >= 1 and n >= 1".into()));
    }
    let mut r = ((n as f64).powf(1.0 / d as f64)).ceil() as u32 + 1;
    loop {
        let r2 = (r as f64) * (r as f64);
        let inside: Vec<_> = MultiIndex::cube(d, r).into_iter().filter(|i| i.sum_sq() <= r2).collect();
        if inside.len() >= n {
            let entries = inside.into_iter().map(|i| {
                let k = 1.0 / (PI * PI * i.sum_sq());
                (i, k, -1.0)
            });
            let sys = from_sorted(format!("laplacian-d{d}"), d, 2.0, BasisKind::Sine, entries.collect())?;
            return sys.truncate(n);
        }
        r = r * 5 / 4 + 1;
    }
}

/// Volterra integration `K v(x) = int_0^x v`: `kappa_i = 1 / ((i - 1/2) pi)`.
pub fn volterra_system(max_index: usize) -> Result<SvdSystem> {
    let entries = one_dim_indices(max_index)?
        .into_iter()
        .map(|i| {
            let k = 1.0 / ((i.entries()[0] as f64 - 0.5) * PI);
            (i, k, 1.0)
        })
        .collect();
    from_sorted("volterra".into(), 1, 1.0, BasisKind::ShiftedCosine, entries)
}

/// One-dimensional Darcy operator.
///
/// Dirichlet: `K v = int_0^x v - x int_0^1 v`, cosine basis without the
/// constant, `kappa_i = 1/(pi i)`. Mixed: the Volterra system; its index `i`
/// corresponds to frequency `(i - 1/2) pi`.
pub fn darcy1d_system(max_index: usize, boundary: DarcyBoundary) -> Result<SvdSystem> {
    match boundary {
        DarcyBoundary::Dirichlet => {
            let entries = one_dim_indices(max_index)?
                .into_iter()
                .map(|i| {
                    let k = 1.0 / (PI * i.entries()[0] as f64);
                    (i, k, 1.0)
                })
                .collect();
            from_sorted("darcy1d-dirichlet".into(), 1, 1.0, BasisKind::Cosine, entries)
        }
        DarcyBoundary::Mixed => {
            let mut s = volterra_system(max_index)?;
            s.id = "darcy1d-mixed".into();
            Ok(s)
        }
    }
}

/// Default truncation `ceil(8 n^{d/(2 alpha_min + 2p + d)})` with
/// `alpha_min = 1/2`, capped at `2^17`.
pub fn default_truncation(n: f64, d: usize, p: f64) -> usize {
    let d = d as f64;
    let e = d / (1.0 + 2.0 * p + d);
    let raw = (8.0 * n.powf(e)).ceil();
    (raw as usize).clamp(1, 1 << 17)
}

/// Log-log least-squares estimate of `p` from `kappa_l ~ l^{-p/d}`.
pub fn estimate_p(kappas: &[f64], d: usize) -> f64 {
    let pts: Vec<(f64, f64)> = kappas
        .iter()
        .enumerate()
        .filter(|(_, k)| **k > 0.0)
        .map(|(l, k)| (((l + 1) as f64).ln(), k.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (slope, _) = crate::linalg::ols_slope(&x, &y);
    -slope * d as f64
}

/// Uniform trapezoid axis on `[0, 1]` with `m` intervals.
pub fn unit_axis(m: usize) -> Axis {
    Axis { start: 0.0, step: 1.0 / m as f64, len: m + 1 }
}
