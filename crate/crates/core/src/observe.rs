//! Synthetic data for the white-noise and fixed-design models, grid
//! functions, and the interpolation operator on the design grid.
//!
//! The design grid is `{2i/(2m+1) : i = 1..m}^d`. On it the sine basis is
//! exactly orthogonal in the empirical inner product, with
//! `<h_l, h_k>_n = (1 + 1/(2m))^d delta_lk` for `|l|_inf, |k|_inf <= m`.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bases::{BasisKind, SvdSystem};
use crate::error::{Error, Result};
use crate::inference::SeqObservation;
use crate::io;
use crate::seqspace::CoeffSeq;

/// Uniform axis `start + i * step`, `i = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn coord(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.coord(self.len.saturating_sub(1))
    }

    /// The `m` design abscissae `2i/(2m+1)`.
    pub fn design(m: usize) -> Self {
        let s = 2.0 / (2 * m + 1) as f64;
        Self { start: s, step: s, len: m }
    }
}

/// All nodes of a tensor grid, row-major (last axis fastest).
pub fn tensor_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let total: usize = axes.iter().map(|a| a.len).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        out.push(axes.iter().zip(&idx).map(|(a, &i)| a.coord(i)).collect());
        for j in (0..axes.len()).rev() {
            idx[j] += 1;
            if idx[j] < axes[j].len {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

/// Values of a function on a regular grid over `(0,1)^d`, optionally with a
/// trailing time axis.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
    pub time_axis: bool,
    pub design: bool,
    pub label: String,
    /// Set when boundary nodes were filled by one-sided stencils.
    pub one_sided_boundary: bool,
}

#[derive(Serialize, Deserialize)]
struct GridHeader {
    dims: Vec<usize>,
    start: Vec<f64>,
    step: Vec<f64>,
    time_axis: bool,
    design: bool,
    label: String,
}

impl GridFunction {
    pub fn new(axes: Vec<Axis>, values: Vec<f64>) -> Result<Self> {
        let n: usize = axes.iter().map(|a| a.len).product();
        if n != values.len() {
            return Err(Error::Dimension(format!("grid has {n} nodes but {} values", values.len())));
        }
        Ok(Self { axes, values, time_axis: false, design: false, label: String::new(), one_sided_boundary: false })
    }

    pub fn from_fn(axes: Vec<Axis>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = tensor_points(&axes).iter().map(|p| f(p)).collect();
        Self { axes, values, time_axis: false, design: false, label: String::new(), one_sided_boundary: false }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_time_axis(mut self) -> Self {
        self.time_axis = true;
        self
    }

    /// Same grid, new values.
    pub fn like(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self { values, ..self.clone() }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        tensor_points(&self.axes)
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        self.axes.iter().zip(idx).fold(0, |acc, (a, &i)| acc * a.len + i)
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.values[self.flat(idx)]
    }

    /// Multi-index of a flat position.
    pub fn unflat(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for j in (0..self.axes.len()).rev() {
            idx[j] = k % self.axes[j].len;
            k /= self.axes[j].len;
        }
        idx
    }

    /// True when no spatial index sits on the first or last node; the time
    /// axis counts as interior for `t > 0`.
    pub fn is_interior(&self, idx: &[usize]) -> bool {
        let ns = self.axes.len() - usize::from(self.time_axis);
        let space_ok = (0..ns).all(|j| idx[j] > 0 && idx[j] + 1 < self.axes[j].len);
        space_ok && (!self.time_axis || idx[ns] > 0)
    }

    /// Multilinear interpolation.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        crate::bases::GridSpec::uniform(self.axes.clone()).interpolate(&self.values, x)
    }

    /// Max of `|a - b|` over interior nodes.
    pub fn max_interior_diff(&self, other: &GridFunction) -> f64 {
        (0..self.len())
            .filter(|&k| self.is_interior(&self.unflat(k)))
            .map(|k| (self.values[k] - other.values[k]).abs())
            .fold(0.0, f64::max)
    }

    /// CSV matrix (rows over all but the last axis) under a `# {json}` header line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let header = GridHeader {
            dims: self.dims(),
            start: self.axes.iter().map(|a| a.start).collect(),
            step: self.axes.iter().map(|a| a.step).collect(),
            time_axis: self.time_axis,
            design: self.design,
            label: self.label.clone(),
        };
        let mut out = format!("# {}\n", serde_json::to_string(&header).map_err(|e| Error::Parse(e.to_string()))?);
        let cols = self.axes.last().map_or(1, |a| a.len);
        for row in self.values.chunks(cols) {
            out.push_str(&row.iter().map(|v| io::fmt_f64(*v)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        io::write_atomic(path, out.as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let first = lines.next().ok_or_else(|| Error::Parse("empty grid file".into()))?;
        let json = first.strip_prefix("# ").ok_or_else(|| Error::Parse("grid file lacks a `# {json}` header".into()))?;
        let h: GridHeader = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        let mut values = Vec::new();
        for (k, line) in lines.enumerate() {
            for c in line.split(',') {
                values.push(c.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {}: `{c}`", k + 2)))?);
            }
        }
        let axes = h.dims.iter().zip(&h.start).zip(&h.step).map(|((&len, &start), &step)| Axis { start, step, len }).collect();
        let mut g = GridFunction::new(axes, values)?;
        g.time_axis = h.time_axis;
        g.design = h.design;
        g.label = h.label;
        Ok(g)
    }
}

/// Noisy point evaluations on the design grid (noise variance 1 per point).
#[derive(Clone, Debug, PartialEq)]
pub struct DesignObservation {
    pub points: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub m: usize,
    pub d: usize,
}

impl DesignObservation {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut header: Vec<String> = (1..=self.d).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = self.points.iter().zip(&self.y).map(|(p, y)| {
            let mut r: Vec<String> = p.iter().map(|v| io::fmt_f64(*v)).collect();
            r.push(io::fmt_f64(*y));
            r
        });
        io::write_csv(path, &hdr, rows)
    }

    /// Reads `x1..xd,y` and checks that the points form a canonical design grid.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let t = io::read_csv(path)?;
        let d = t.header.len().checked_sub(1).filter(|&d| d >= 1).ok_or_else(|| Error::Parse("need x1..xd,y".into()))?;
        let mut expected: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
        expected.push("y".into());
        t.expect_header(&expected.iter().map(String::as_str).collect::<Vec<_>>())?;
        let n = t.rows.len();
        let m = (n as f64).powf(1.0 / d as f64).round() as usize;
        let points: Vec<Vec<f64>> = t.rows.iter().map(|r| r[..d].to_vec()).collect();
        let canonical = design_points(m, d);
        if canonical.len() != n || canonical.iter().zip(&points).any(|(a, b)| a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-9)) {
            return Err(Error::Dimension("points are not the canonical design grid".into()));
        }
        Ok(Self { points, y: t.rows.iter().map(|r| r[d]).collect(), m, d })
    }
}

/// The tensor design grid `{2i/(2m+1)}^d`, row-major.
pub fn design_points(m: usize, d: usize) -> Vec<Vec<f64>> {
    tensor_points(&vec![Axis::design(m); d])
}

/// `Y_l = |kappa_l| v0_l + Z_l / sqrt(n)`.
pub fn simulate_whitenoise(v0: &CoeffSeq, system: &SvdSystem, n: f64, seed: u64) -> Result<SeqObservation> {
    if v0.len() != system.len() {
        return Err(Error::Dimension(format!("truth has {} coefficients, system {}", v0.len(), system.len())));
    }
    if !(n > 0.0) {
        return Err(Error::Domain("n must be positive".into()));
    }
    let mut rng = crate::rng(seed);
    let s = n.sqrt().recip();
    let y = system
        .triples
        .iter()
        .zip(&v0.coeffs)
        .map(|(t, v)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            t.kappa.abs() * v + s * z
        })
        .collect();
    SeqObservation::new(y, n, system)
}

/// Noise-free values of `u` on the design grid.
pub fn design_values(u: &dyn Fn(&[f64]) -> f64, m: usize, d: usize) -> DesignObservation {
    let points = design_points(m, d);
    let y = points.iter().map(|p| u(p)).collect();
    DesignObservation { points, y, m, d }
}

/// `y_j = u(x_j) + Z_j` on the design grid.
pub fn simulate_design(u: &dyn Fn(&[f64]) -> f64, m: usize, d: usize, seed: u64) -> Result<DesignObservation> {
    if m == 0 || d == 0 {
        return Err(Error::Domain("m and d must be at least 1".into()));
    }
    let mut obs = design_values(u, m, d);
    let mut rng = crate::rng(seed);
    for y in obs.y.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *y += z;
    }
    Ok(obs)
}

/// Empirical inner product `(1/n) sum_j a_j b_j`.
pub fn empirical_inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

fn check_sine_system(system: &SvdSystem, m: usize, d: usize) -> Result<()> {
    if !matches!(system.kind, BasisKind::Sine) || system.d != d {
        return Err(Error::Dimension(format!("interpolation needs the d = {d} sine basis, got {}", system.id)));
    }
    if let Some(t) = system.triples.iter().find(|t| t.index.max_entry() as usize > m) {
        return Err(Error::Dimension(format!("index {:?} exceeds the grid resolution m = {m}", t.index)));
    }
    Ok(())
}

/// Sine tables `sqrt2 sin(i pi x_j)` for `i = 1..=m` on the design abscissae.
fn design_sine_table(m: usize) -> Vec<Vec<f64>> {
    let ax = Axis::design(m);
    (1..=m)
        .map(|i| (0..m).map(|j| std::f64::consts::SQRT_2 * (i as f64 * std::f64::consts::PI * ax.coord(j)).sin()).collect())
        .collect()
}

/// `<v, h_i>_n` for every triple of a sine system, from values on the design grid.
fn empirical_projections(values: &[f64], m: usize, d: usize, system: &SvdSystem) -> Vec<f64> {
    let table = design_sine_table(m);
    let n = values.len();
    let mut idx = vec![0usize; d];
    let mut out = Vec::with_capacity(system.len());
    for t in &system.triples {
        let i = t.index.entries();
        let mut acc = 0.0;
        idx.iter_mut().for_each(|v| *v = 0);
        for v in values {
            let mut w = *v;
            for j in 0..d {
                w *= table[i[j] as usize - 1][idx[j]];
            }
            acc += w;
            for j in (0..d).rev() {
                idx[j] += 1;
                if idx[j] < m {
                    break;
                }
                idx[j] = 0;
            }
        }
        out.push(acc / n as f64);
    }
    out
}

/// Coefficients of the interpolant `I_n v` in the sine basis of a system
/// with `|i|_inf <= m`: `c_i = <v, h_i>_n / (1 + 1/(2m))^d`.
pub fn interpolate(values: &[f64], m: usize, d: usize, system: &SvdSystem) -> Result<CoeffSeq> {
    check_sine_system(system, m, d)?;
    if values.len() != m.pow(d as u32) {
        return Err(Error::Dimension(format!("expected {} design values, got {}", m.pow(d as u32), values.len())));
    }
    let gram = (1.0 + 0.5 / m as f64).powi(d as i32);
    let c = empirical_projections(values, m, d, system).into_iter().map(|p| p / gram).collect();
    Ok(CoeffSeq::new(system.id.clone(), d, c))
}

/// Pseudo-observations `<y, e_i>_n` in the empirical-orthonormal basis
/// `e_i = (1 + 1/(2m))^{-d/2} h_i`. Each carries noise variance `1/n`, and
/// the signal coefficient of `K v` is `s kappa_i v_i` with
/// `s = (1 + 1/(2m))^{d/2}`, so the returned kappas are rescaled by `s`.
pub fn design_to_seq(obs: &DesignObservation, system: &SvdSystem) -> Result<SeqObservation> {
    check_sine_system(system, obs.m, obs.d)?;
    if obs.n() != obs.m.pow(obs.d as u32) {
        return Err(Error::Dimension("observation size does not match m^d".into()));
    }
    let s = (1.0 + 0.5 / obs.m as f64).powf(obs.d as f64 / 2.0);
    let y = empirical_projections(&obs.y, obs.m, obs.d, system).into_iter().map(|p| p / s).collect();
    let mut seq = SeqObservation::new(y, obs.n() as f64, system)?;
    seq.kappa.iter_mut().for_each(|k| *k *= s);
    seq.basis_id = format!("{}@design-m{}", system.id, obs.m);
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::laplacian_system;
    use std::f64::consts::PI;

    #[test]
    fn single_design_point() {
        assert_eq!(design_points(1, 1), vec![vec![2.0 / 3.0]]);
        let o = design_values(&|x: &[f64]| x[0] * 3.0, 1, 1);
        assert!((o.y[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn whitenoise_noise_free_limit_and_seed() {
        let sys = laplacian_system(1, 16).unwrap();
        let v0 = CoeffSeq::new(sys.id.clone(), 1, (1..=16).map(|l| 1.0 / l as f64).collect());
        let o = simulate_whitenoise(&v0, &sys, 1e30, 3).unwrap();
        for (l, y) in o.y.iter().enumerate() {
            assert!((y - sys.triples[l].kappa * v0.coeffs[l]).abs() < 1e-10);
        }
        let a = simulate_whitenoise(&v0, &sys, 100.0, 9).unwrap();
        let b = simulate_whitenoise(&v0, &sys, 100.0, 9).unwrap();
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn whitenoise_variance_and_independence() {
        let n = 100_000;
        let sys = crate::bases::volterra_system(n).unwrap();
        let v0 = CoeffSeq::zeros(sys.id.clone(), 1, n);
        let o = simulate_whitenoise(&v0, &sys, 50.0, 1).unwrap();
        let z: Vec<f64> = o.y.iter().map(|y| y * 50f64.sqrt()).collect();
        let var = z.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((0.98..=1.02).contains(&var), "variance {var}");
        let lag: f64 = z.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1) as f64 / var;
        assert!(lag.abs() < 0.02, "lag-1 correlation {lag}");
    }

    #[test]
    fn gram_identity_small() {
        for d in [1usize, 2] {
            let m = 4;
            let sys = laplacian_system(d, m).unwrap();
            let pts = design_points(m, d);
            let tab = sys.h_table(&pts);
            let want = (1.0 + 0.5 / m as f64).powi(d as i32);
            for a in 0..sys.len() {
                for b in 0..sys.len() {
                    let g = empirical_inner(&tab[a], &tab[b]);
                    let w = if a == b { want } else { 0.0 };
                    assert!((g - w).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn interpolate_basis_element() {
        let sys = laplacian_system(1, 5).unwrap();
        let o = design_values(&|x: &[f64]| 2f64.sqrt() * (3.0 * PI * x[0]).sin(), 5, 1);
        let c = interpolate(&o.y, 5, 1, &sys).unwrap();
        for (l, v) in c.coeffs.iter().enumerate() {
            let want = if l == 2 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolate_rejects_wrong_system() {
        let sys = crate::bases::volterra_system(4).unwrap();
        assert!(interpolate(&[0.0; 4], 4, 1, &sys).is_err());
        let big = laplacian_system(1, 6).unwrap();
        assert!(interpolate(&[0.0; 4], 4, 1, &big).is_err());
    }

    #[test]
    fn design_to_seq_noise_free_and_linear() {
        let m = 6;
        let d = 2;
        let sys = laplacian_system(d, m).unwrap();
        let coeffs: Vec<f64> = (0..sys.len()).map(|l| ((l * 7 % 5) as f64 - 2.0) / (l + 1) as f64).collect();
        let v = CoeffSeq::new(sys.id.clone(), d, coeffs.clone());
        let u = |x: &[f64]| crate::seqspace::evaluate(&v, &sys, x).unwrap();
        let obs = design_values(&u, m, d);
        let seq = design_to_seq(&obs, &sys).unwrap();
        let s = (1.0 + 0.5 / m as f64).powf(d as f64 / 2.0);
        for l in 0..sys.len() {
            assert!((seq.y[l] - s * coeffs[l]).abs() < 1e-12);
            assert!((seq.kappa[l] - s * sys.triples[l].kappa).abs() < 1e-15);
        }
        let o1 = simulate_design(&u, m, d, 1).unwrap();
        let o2 = simulate_design(&|x: &[f64]| x[0], m, d, 2).unwrap();
        let mix = DesignObservation { y: o1.y.iter().zip(&o2.y).map(|(a, b)| 2.0 * a - 0.5 * b).collect(), ..o1.clone() };
        let (s1, s2, sm) = (design_to_seq(&o1, &sys).unwrap(), design_to_seq(&o2, &sys).unwrap(), design_to_seq(&mix, &sys).unwrap());
        for l in 0..sys.len() {
            assert!((sm.y[l] - (2.0 * s1.y[l] - 0.5 * s2.y[l])).abs() < 1e-12);
        }
    }

    #[test]
    fn design_to_seq_noise_variance() {
        let m = 8;
        let sys = laplacian_system(1, m).unwrap();
        let reps = 10_000;
        let mut acc = vec![0.0; m];
        for r in 0..reps {
            let o = simulate_design(&|_: &[f64]| 0.0, m, 1, r as u64).unwrap();
            let s = design_to_seq(&o, &sys).unwrap();
            for l in 0..m {
                acc[l] += s.y[l] * s.y[l];
            }
        }
        for a in acc {
            let var = a / reps as f64 * m as f64;
            assert!((var - 1.0).abs() < 0.05, "scaled variance {var}");
        }
    }

    #[test]
    fn grid_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        let g = GridFunction::from_fn(vec![Axis { start: 0.0, step: 0.5, len: 3 }, Axis { start: 0.0, step: 0.25, len: 5 }], |x| {
            x[0] - 2.0 * x[1]
        })
        .with_label("test");
        g.write_csv(&p).unwrap();
        assert_eq!(GridFunction::read_csv(&p).unwrap(), g);
    }

    #[test]
    fn design_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let o = simulate_design(&|x: &[f64]| x[0] + x[1], 3, 2, 4).unwrap();
        o.write_csv(&p).unwrap();
        assert_eq!(DesignObservation::read_csv(&p).unwrap(), o);
    }
}
