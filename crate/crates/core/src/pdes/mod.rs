//! Forward solvers, harmonic extensions, the operators `L` and `K`, and the
//! pointwise solution maps `e(v)` for each PDE family.
//!
//! All solvers work on the node grid `{k/m}^d` (plus a time axis `{k/mt}`
//! for the heat family, stored last). The discrete `L` and `K` are exact
//! inverses of each other on interior nodes, so `K(L u) + g~ = u` holds to
//! solver precision.

pub mod darcy;
pub mod fd;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::bases::{discrete_svd, unit_axis, GridSpec, SvdSystem};
use crate::error::{Error, Result};
use crate::linalg::{cumtrapz, trapz};
use crate::observe::{Axis, GridFunction};
use crate::ScalarFn;
pub use darcy::{
    darcy_characteristics, darcy_forward, darcy_multimeasure, DarcyGrid, DarcyInversion, Influx, MultiMeasure,
};
use fd::Elliptic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Schrodinger,
    Heat,
    Darcy1d,
    DarcyNd,
    Volterra,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Schrodinger => "schrodinger",
            Family::Heat => "heat",
            Family::Darcy1d => "darcy1d",
            Family::DarcyNd => "darcyNd",
            Family::Volterra => "volterra",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "schrodinger" => Ok(Family::Schrodinger),
            "heat" => Ok(Family::Heat),
            "darcy1d" => Ok(Family::Darcy1d),
            "darcynd" | "darcy" => Ok(Family::DarcyNd),
            "volterra" => Ok(Family::Volterra),
            other => Err(Error::Config(format!("unknown PDE family `{other}`"))),
        }
    }
}

/// PDE family with its boundary, source and initial data.
///
/// `g` is evaluated on boundary points (heat: at `(x, t)`); for Volterra it
/// is the constant `g(0)`, for Darcy-1D only `g(0)` and `g(1)` are used.
#[derive(Clone)]
pub struct ProblemSpec {
    pub family: Family,
    pub d: usize,
    pub g: ScalarFn,
    pub source: Option<ScalarFn>,
    pub initial: Option<ScalarFn>,
    /// `f(0)` for the Darcy-1D inversion formula.
    pub f_left: Option<f64>,
    /// Prescribed `f` on the influx boundary (Darcy, `d = 2`).
    pub influx: Option<ScalarFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("family", &self.family)
            .field("d", &self.d)
            .field("source", &self.source.is_some())
            .field("initial", &self.initial.is_some())
            .field("f_left", &self.f_left)
            .field("influx", &self.influx.is_some())
            .finish()
    }
}

impl ProblemSpec {
    fn base(family: Family, d: usize, g: ScalarFn) -> Self {
        Self { family, d, g, source: None, initial: None, f_left: None, influx: None }
    }

    pub fn schrodinger(d: usize, g: ScalarFn) -> Self {
        Self::base(Family::Schrodinger, d, g)
    }

    pub fn heat(d: usize, g: ScalarFn, initial: ScalarFn) -> Self {
        Self { initial: Some(initial), ..Self::base(Family::Heat, d, g) }
    }

    pub fn darcy1d(g0: f64, g1: f64, source: ScalarFn, f_left: f64) -> Self {
        let g = crate::scalar_fn(move |x: &[f64]| g0 + (g1 - g0) * x[0]);
        Self { source: Some(source), f_left: Some(f_left), ..Self::base(Family::Darcy1d, 1, g) }
    }

    pub fn darcy_nd(d: usize, g: ScalarFn, source: ScalarFn, influx: Option<ScalarFn>) -> Self {
        Self { source: Some(source), influx, ..Self::base(Family::DarcyNd, d, g) }
    }

    pub fn volterra(g0: f64) -> Self {
        Self::base(Family::Volterra, 1, crate::scalar_fn(move |_| g0))
    }

    pub fn validate(&self) -> Result<()> {
        let fam = self.family.name();
        match self.family {
            Family::Darcy1d | Family::Volterra if self.d != 1 => {
                return Err(Error::Config(format!("{fam} is one-dimensional, got d = {}", self.d)))
            }
            _ if !(1..=2).contains(&self.d) => {
                return Err(Error::Config(format!("{fam}: finite differences support d in {{1, 2}}, got {}", self.d)))
            }
            _ => {}
        }
        match self.family {
            Family::Heat if self.initial.is_none() => Err(Error::Config("heat needs initial data u0".into())),
            Family::Darcy1d | Family::DarcyNd if self.source.is_none() => {
                Err(Error::Config(format!("{fam} needs a source h")))
            }
            Family::Volterra if !((self.g)(&[0.0]) > 0.0) => Err(Error::Config("volterra needs g(0) > 0".into())),
            _ => Ok(()),
        }
    }

    fn source(&self) -> Result<&ScalarFn> {
        self.source.as_ref().ok_or_else(|| Error::Config(format!("{} needs a source h", self.family)))
    }

    fn has_time(&self) -> bool {
        self.family == Family::Heat
    }
}

/// Finite-difference resolution: `m` intervals per space axis, `mt` time steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FdGrid {
    pub m: usize,
    pub mt: usize,
}

impl FdGrid {
    pub fn new(m: usize) -> Self {
        Self { m, mt: m }
    }

    pub fn with_time(m: usize, mt: usize) -> Self {
        Self { m, mt }
    }

    pub fn axes(&self, spec: &ProblemSpec) -> Vec<Axis> {
        let mut axes = vec![unit_axis(self.m); spec.d];
        if spec.has_time() {
            axes.push(unit_axis(self.mt));
        }
        axes
    }

    fn check(&self, spec: &ProblemSpec) -> Result<()> {
        spec.validate()?;
        if self.m < 3 || (spec.has_time() && self.mt < 1) {
            return Err(Error::Dimension(format!("grid too coarse: m = {}, mt = {}", self.m, self.mt)));
        }
        Ok(())
    }

    fn empty(&self, spec: &ProblemSpec, label: &str) -> GridFunction {
        let g = GridFunction::from_fn(self.axes(spec), |_| 0.0).with_label(label);
        if spec.has_time() {
            g.with_time_axis()
        } else {
            g
        }
    }
}

fn infer_grid(spec: &ProblemSpec, u: &GridFunction) -> Result<FdGrid> {
    let expect = spec.d + usize::from(spec.has_time());
    if u.axes.len() != expect {
        return Err(Error::Dimension(format!("{} expects {expect} axes, grid has {}", spec.family, u.axes.len())));
    }
    let m = u.axes[0].len - 1;
    let mt = if spec.has_time() { u.axes[spec.d].len - 1 } else { m };
    let grid = FdGrid::with_time(m, mt);
    grid.check(spec)?;
    if grid.axes(spec) != u.axes {
        return Err(Error::Dimension("grid function is not on the unit node grid".into()));
    }
    Ok(grid)
}

/// `g~` with `L g~ = 0` and `g~ = g` on the boundary (and `g~ = u0` at `t = 0`).
pub fn harmonic_extension(spec: &ProblemSpec, grid: FdGrid) -> Result<GridFunction> {
    grid.check(spec)?;
    let out = grid.empty(spec, "g_tilde");
    let m = grid.m;
    let values = match (spec.family, spec.d) {
        (Family::Volterra, _) => {
            let g0 = (spec.g)(&[0.0]);
            vec![g0; m + 1]
        }
        (Family::Schrodinger | Family::Darcy1d | Family::DarcyNd, 1) => {
            let (g0, g1) = ((spec.g)(&[0.0]), (spec.g)(&[1.0]));
            out.points().iter().map(|x| g0 + (g1 - g0) * x[0]).collect()
        }
        (Family::Heat, _) => heat_march(spec, grid, &|_: &[f64]| 0.0, None, true)?,
        _ => {
            let boundary = fd::boundary_values(m, spec.d, &*spec.g);
            let zeros = vec![0.0; boundary.len()];
            Elliptic { m, d: spec.d, conductance: &|_| 1.0, reaction: &zeros, source: &zeros, boundary: &boundary }
                .solve(spec.family.name())?
        }
    };
    Ok(out.like(values))
}

/// Implicit Euler for `u_t - Delta u / 2 = f u + extra` with boundary data `g`
/// (or zero) and initial data `u0` (or zero).
fn heat_march(
    spec: &ProblemSpec,
    grid: FdGrid,
    f: &dyn Fn(&[f64]) -> f64,
    extra: Option<&[f64]>,
    with_data: bool,
) -> Result<Vec<f64>> {
    let (m, mt, d) = (grid.m, grid.mt, spec.d);
    let space = fd::node_points(m, d);
    let ns = space.len();
    let dt = 1.0 / mt as f64;
    let mut out = vec![0.0; ns * (mt + 1)];
    let at = |s: usize, k: usize| s * (mt + 1) + k;
    if with_data {
        let u0 = spec.initial.as_ref().ok_or_else(|| Error::Config("heat needs initial data u0".into()))?;
        for (s, x) in space.iter().enumerate() {
            let on_boundary = x.iter().any(|&c| c == 0.0 || c == 1.0);
            out[at(s, 0)] = if on_boundary { (spec.g)(&[x.as_slice(), &[0.0]].concat()) } else { u0(x) };
        }
    }
    let mut reaction = vec![0.0; ns];
    let mut source = vec![0.0; ns];
    let mut boundary = vec![0.0; ns];
    for k in 1..=mt {
        let t = k as f64 * dt;
        for (s, x) in space.iter().enumerate() {
            let xt = [x.as_slice(), &[t]].concat();
            // both sides doubled so the conductance is 1
            reaction[s] = 2.0 * (1.0 / dt - f(&xt));
            source[s] = 2.0 * (out[at(s, k - 1)] / dt + extra.map_or(0.0, |e| e[at(s, k)]));
            boundary[s] = if with_data && x.iter().any(|&c| c == 0.0 || c == 1.0) { (spec.g)(&xt) } else { 0.0 };
        }
        let u = Elliptic { m, d, conductance: &|_| 1.0, reaction: &reaction, source: &source, boundary: &boundary }
            .solve("heat (needs 1/dt > sup f)")?;
        for s in 0..ns {
            out[at(s, k)] = u[s];
        }
    }
    Ok(out)
}

/// Grid solution `u_f` of the forward problem for coefficient `f`.
pub fn forward_solve(spec: &ProblemSpec, f: &dyn Fn(&[f64]) -> f64, grid: FdGrid) -> Result<GridFunction> {
    grid.check(spec)?;
    let out = grid.empty(spec, "u_f");
    let (m, d) = (grid.m, spec.d);
    let h = 1.0 / m as f64;
    let pts = out.points();
    let values = match spec.family {
        Family::Schrodinger => {
            let reaction: Vec<f64> = pts.iter().map(|x| 2.0 * f(x)).collect();
            let boundary = fd::boundary_values(m, d, &*spec.g);
            let zeros = vec![0.0; pts.len()];
            Elliptic { m, d, conductance: &|_| 1.0, reaction: &reaction, source: &zeros, boundary: &boundary }
                .solve("schrodinger (needs f >= 0)")?
        }
        Family::Heat => heat_march(spec, grid, f, None, true)?,
        Family::Volterra => {
            let fv: Vec<f64> = pts.iter().map(|x| f(x)).collect();
            let g0 = (spec.g)(&[0.0]);
            cumtrapz(&fv, h).iter().map(|i| g0 * i.exp()).collect()
        }
        Family::Darcy1d => {
            let fv: Vec<f64> = pts.iter().map(|x| f(x)).collect();
            if fv.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Solver { family: "darcy1d (needs f > 0)", detail: "non-positive coefficient".into() });
            }
            let src = spec.source()?;
            let hv: Vec<f64> = pts.iter().map(|x| src(x)).collect();
            let big_h = cumtrapz(&hv, h);
            let a = cumtrapz(&big_h.iter().zip(&fv).map(|(p, q)| p / q).collect::<Vec<_>>(), h);
            let b = cumtrapz(&fv.iter().map(|q| 1.0 / q).collect::<Vec<_>>(), h);
            let (g0, g1) = ((spec.g)(&[0.0]), (spec.g)(&[1.0]));
            let c = (g1 - g0 - a[m]) / b[m];
            a.iter().zip(&b).map(|(p, q)| g0 + p + c * q).collect()
        }
        Family::DarcyNd => {
            if d != 2 {
                return Err(Error::Config("darcyNd forward solver is two-dimensional".into()));
            }
            return darcy_forward(f, &**spec.source()?, &*spec.g, m).map(|u| u.with_label("u_f"));
        }
    };
    Ok(out.like(values))
}

/// `v = L u` by finite differences. Boundary nodes use one-sided stencils and
/// the result is flagged accordingly.
pub fn apply_l(spec: &ProblemSpec, u: &GridFunction) -> Result<GridFunction> {
    let grid = infer_grid(spec, u)?;
    let dims = u.dims();
    let h = 1.0 / grid.m as f64;
    let mut out = vec![0.0; u.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let idx = u.unflat(k);
        *o = match spec.family {
            Family::Schrodinger | Family::DarcyNd => fd::laplacian(&u.values, &dims, spec.d, h, &idx),
            Family::Volterra | Family::Darcy1d => fd::first_diff(&u.values, &dims, 0, h, &idx),
            Family::Heat => {
                let dt = 1.0 / grid.mt as f64;
                let it = idx[spec.d];
                let time = if it == 0 {
                    let mut next = idx.clone();
                    next[spec.d] = 1;
                    (u.at(&next) - u.values[k]) / dt
                } else {
                    let mut prev = idx.clone();
                    prev[spec.d] = it - 1;
                    (u.values[k] - u.at(&prev)) / dt
                };
                time - 0.5 * fd::laplacian(&u.values, &dims, spec.d, h, &idx)
            }
        };
    }
    let mut v = u.like(out).with_label("v");
    v.one_sided_boundary = true;
    Ok(v)
}

/// `K v`: the solution of `L w = v` with zero boundary (and initial) data.
pub fn apply_k(spec: &ProblemSpec, v: &GridFunction) -> Result<GridFunction> {
    let grid = infer_grid(spec, v)?;
    let (m, d) = (grid.m, spec.d);
    let h = 1.0 / m as f64;
    let values = match spec.family {
        Family::Schrodinger | Family::DarcyNd => {
            let src: Vec<f64> = v.values.iter().map(|x| -x).collect();
            let zeros = vec![0.0; src.len()];
            Elliptic { m, d, conductance: &|_| 1.0, reaction: &zeros, source: &src, boundary: &zeros }
                .solve(spec.family.name())?
        }
        Family::Heat => heat_march(spec, grid, &|_: &[f64]| 0.0, Some(&v.values), false)?,
        Family::Volterra => cumtrapz(&v.values, h),
        Family::Darcy1d => {
            let c = cumtrapz(&v.values, h);
            let total = c[m];
            c.iter().enumerate().map(|(k, ci)| ci - k as f64 * h * total).collect()
        }
    };
    Ok(v.like(values).with_label("Kv"))
}

/// Floor check shared by the pointwise inversions. `Ok(false)` selects the
/// zero branch of the case split (only when `floor <= 0`).
fn check_floor(min: f64, floor: f64) -> Result<bool> {
    if floor > 0.0 {
        if !(min >= floor) {
            return Err(Error::Inversion { min, floor });
        }
        Ok(true)
    } else {
        Ok(min > 0.0)
    }
}

/// `int_0^x h` by composite Simpson.
fn primitive(h: &dyn Fn(&[f64]) -> f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let n = 256;
    let step = x / n as f64;
    let mut acc = h(&[0.0]) + h(&[x]);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * h(&[k as f64 * step]);
    }
    acc * step / 3.0
}

/// Pointwise solution map `e(v)` at `points`, given `v` and `u = K v + g~`
/// there.
///
/// With `floor > 0` a denominator below the floor is an inversion error;
/// with `floor <= 0` a non-positive denominator returns zeros. Darcy-1D
/// divides by `v` itself and needs `x = 0` among the points for `v(0)`.
pub fn invert_pointwise(spec: &ProblemSpec, points: &[Vec<f64>], v: &[f64], u: &[f64], floor: f64) -> Result<Vec<f64>> {
    if v.len() != points.len() || u.len() != points.len() {
        return Err(Error::Dimension("points, v and u must have equal length".into()));
    }
    match spec.family {
        Family::Darcy1d => {
            let f0 = spec.f_left.ok_or_else(|| Error::Config("darcy1d inversion needs f(0)".into()))?;
            let pos = points
                .iter()
                .position(|x| x[0] == 0.0)
                .ok_or_else(|| Error::Config("darcy1d inversion needs x = 0 among the points".into()))?;
            let v0 = v[pos];
            let min = v.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
            if !check_floor(min, floor)? {
                return Ok(vec![0.0; v.len()]);
            }
            let src = spec.source()?;
            Ok(points.iter().zip(v).map(|(x, vi)| (primitive(&**src, x[0]) + f0 * v0) / vi).collect())
        }
        Family::DarcyNd => Err(Error::Config("darcyNd inversion goes through darcy_characteristics".into())),
        _ => {
            let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
            if !check_floor(min, floor)? {
                return Ok(vec![0.0; v.len()]);
            }
            let scale = if spec.family == Family::Schrodinger { 2.0 } else { 1.0 };
            Ok(v.iter().zip(u).map(|(a, b)| a / (scale * b)).collect())
        }
    }
}

/// `e(v)` for a grid function `v = L u`: builds `u = K v + g~` on the same
/// grid and inverts pointwise. Darcy in `d = 2` runs the characteristics
/// algorithm with gradients from finite differences of `u`.
pub fn solution_operator(spec: &ProblemSpec, v: &GridFunction, floor: f64) -> Result<GridFunction> {
    let grid = infer_grid(spec, v)?;
    let kv = apply_k(spec, v)?;
    let gt = harmonic_extension(spec, grid)?;
    let u: Vec<f64> = kv.values.iter().zip(&gt.values).map(|(a, b)| a + b).collect();
    if spec.family == Family::DarcyNd {
        if spec.d != 2 {
            return Err(Error::Config("darcyNd characteristics are two-dimensional; use darcy1d for d = 1".into()));
        }
        let src = spec.source()?;
        let influx = spec.influx.clone().map(Influx::Function).unwrap_or(Influx::Table(Vec::new()));
        let ug = v.like(u);
        let hg = GridFunction::from_fn(v.axes.clone(), |x| src(x));
        let mut dg = DarcyGrid::from_samples(&ug, &hg, influx)?;
        dg.lap_u = v.clone();
        return Ok(darcy_characteristics(&dg)?.alpha.with_label("f"));
    }
    let f = invert_pointwise(spec, &v.points(), &v.values, &u, floor)?;
    Ok(v.like(f).with_label("f"))
}

/// Darcy-1D inversion for `v = u''` when `u'` vanishes at one interior point.
///
/// With `u'(x) = int_0^x v + b`, `b = g(1) - g(0) - int_0^1 int_0^t v`, the
/// zero `x_v` is located by bisection and
/// `f(x) = (H(x) - H(x_v)) / int_{x_v}^x v`, filled with `h(x_v)/v(x_v)` at `x_v`.
pub fn darcy1d_zero_gradient(v: &GridFunction, spec: &ProblemSpec) -> Result<GridFunction> {
    if spec.family != Family::Darcy1d {
        return Err(Error::Config("zero-gradient inversion applies to darcy1d".into()));
    }
    let grid = infer_grid(spec, v)?;
    let m = grid.m;
    let h = 1.0 / m as f64;
    let src = spec.source()?;
    let inner = cumtrapz(&v.values, h);
    let b = (spec.g)(&[1.0]) - (spec.g)(&[0.0]) - trapz(&inner, h);
    let du: Vec<f64> = inner.iter().map(|c| c + b).collect();

    let signs: Vec<(usize, f64)> = du.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(k, x)| (k, x.signum())).collect();
    let changes: Vec<usize> = signs.windows(2).filter(|w| w[0].1 != w[1].1).map(|w| w[0].0).collect();
    if changes.len() != 1 {
        return Err(Error::Domain(format!("u' must change sign exactly once, found {} sign changes", changes.len())));
    }
    let k0 = changes[0];
    let k1 = signs.iter().find(|(k, _)| *k > k0).map(|p| p.0).unwrap();
    // u' on [x_k0, x_k1] with v linear between nodes
    let vlin = |x: f64| v.interpolate(&[x]);
    let du_at = |x: f64| {
        let k = ((x / h).floor() as usize).min(m - 1).max(k0);
        let xk = k as f64 * h;
        du[k] + 0.5 * (x - xk) * (v.values[k] + vlin(x))
    };
    let (mut lo, mut hi) = (k0 as f64 * h, k1 as f64 * h);
    let s_lo = du[k0].signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if du_at(mid).signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let xv = 0.5 * (lo + hi);
    let vxv = vlin(xv);
    if !(vxv > 0.0) {
        return Err(Error::Domain(format!("v(x_v) = {vxv} must be positive at the zero x_v = {xv} of u'")));
    }
    let hv: Vec<f64> = v.points().iter().map(|x| src(x)).collect();
    let big_h = cumtrapz(&hv, h);
    let kv = ((xv / h).floor() as usize).min(m - 1);
    let h_at_xv = src(&[xv]);
    let big_h_xv = big_h[kv] + 0.5 * (xv - kv as f64 * h) * (hv[kv] + h_at_xv);
    let f = (0..=m)
        .map(|k| {
            let x = k as f64 * h;
            if (x - xv).abs() < 1e-12 {
                h_at_xv / vxv
            } else {
                (big_h[k] - big_h_xv) / du[k]
            }
        })
        .collect();
    Ok(v.like(f).with_label("f"))
}

/// Interior axes of the heat grid: space nodes `1..m-1`, time levels `1..mt`.
pub fn heat_interior_axes(d: usize, m: usize, mt: usize) -> Vec<Axis> {
    let h = 1.0 / m as f64;
    let dt = 1.0 / mt as f64;
    let mut axes = vec![Axis { start: h, step: h, len: m - 1 }; d];
    axes.push(Axis { start: dt, step: dt, len: mt });
    axes
}

/// Dense matrix of the discrete heat `K` on interior space-time nodes, with
/// the matching uniform quadrature grid.
pub fn heat_operator_matrix(d: usize, m: usize, mt: usize) -> Result<(DMatrix<f64>, GridSpec)> {
    let zero = crate::scalar_fn(|_| 0.0);
    let spec = ProblemSpec::heat(d, zero.clone(), zero);
    let grid = FdGrid::with_time(m, mt);
    grid.check(&spec)?;
    let axes = heat_interior_axes(d, m, mt);
    let inner = GridSpec::uniform(axes.clone());
    let n = inner.len();
    let full = grid.axes(&spec);
    let full_dims: Vec<usize> = full.iter().map(|a| a.len).collect();
    let inner_dims: Vec<usize> = axes.iter().map(|a| a.len).collect();
    let to_full = |q: usize| {
        let idx = fd::unflat(q, &inner_dims);
        let shifted: Vec<usize> = idx.iter().map(|i| i + 1).collect();
        shifted.iter().zip(&full_dims).fold(0, |acc, (&i, &l)| acc * l + i)
    };
    let map: Vec<usize> = (0..n).map(to_full).collect();
    let total: usize = full_dims.iter().product();
    let mut mat = DMatrix::zeros(n, n);
    for q in 0..n {
        let mut e = vec![0.0; total];
        e[map[q]] = 1.0;
        let w = heat_march(&spec, grid, &|_: &[f64]| 0.0, Some(&e), false)?;
        for (r, &fr) in map.iter().enumerate() {
            mat[(r, q)] = w[fr];
        }
    }
    Ok((mat, inner))
}

/// Singular system of the discrete heat `K` on the interior space-time grid.
pub fn heat_discrete_system(d: usize, m: usize, mt: usize) -> Result<SvdSystem> {
    let (mat, grid) = heat_operator_matrix(d, m, mt)?;
    discrete_svd(&mat, &grid, &format!("heat-discrete-d{d}-m{m}-t{mt}"))
}
