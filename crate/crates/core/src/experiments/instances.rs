//! Truth construction for the end-to-end studies.

use std::f64::consts::{PI, SQRT_2};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::bases::{darcy1d_system, default_truncation, laplacian_system, volterra_system, DarcyBoundary, SvdSystem};
use crate::error::{Error, Result};
use crate::linalg::simpson_weights;
use crate::pdes::{self, FdGrid, ProblemSpec};
use crate::seqspace::CoeffSeq;
use crate::inference::SeqObservation;
use crate::observe::DesignObservation;
use crate::{scalar_fn, GridFunction};

/// Resolution of the reference forward solves in one dimension.
pub const FINE_1D: usize = 1 << 14;
/// Terms kept in the series truth `sum i^{-3/2} sin(i) h_i`.
pub const SERIES_TERMS: usize = 1 << 14;

/// Named figure-style cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureCase {
    Schrodinger1dSmooth,
    Schrodinger1dBump,
    Schrodinger1dBoundary,
    Schrodinger1dBspline,
    Schrodinger2d,
    Volterra,
    Darcy1d,
    Heat,
}

impl FigureCase {
    pub const ALL: [FigureCase; 8] = [
        FigureCase::Schrodinger1dSmooth,
        FigureCase::Schrodinger1dBump,
        FigureCase::Schrodinger1dBoundary,
        FigureCase::Schrodinger1dBspline,
        FigureCase::Schrodinger2d,
        FigureCase::Volterra,
        FigureCase::Darcy1d,
        FigureCase::Heat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureCase::Schrodinger1dSmooth => "schrodinger-1d-smooth",
            FigureCase::Schrodinger1dBump => "schrodinger-1d-bump",
            FigureCase::Schrodinger1dBoundary => "schrodinger-1d-boundary",
            FigureCase::Schrodinger1dBspline => "schrodinger-1d-bspline",
            FigureCase::Schrodinger2d => "schrodinger-2d",
            FigureCase::Volterra => "volterra",
            FigureCase::Darcy1d => "darcy1d",
            FigureCase::Heat => "heat",
        }
    }

    pub fn build(self, n_max: f64) -> Result<Instance> {
        match self {
            FigureCase::Schrodinger1dSmooth => Instance::schrodinger_1d(self.name(), scalar_fn(series_truth), n_max),
            FigureCase::Schrodinger1dBump => Instance::schrodinger_1d(
                self.name(),
                scalar_fn(|x: &[f64]| 1.0 - 4.0 * (x[0] - 0.5).powi(2) - 0.75 * (-500.0 * (x[0] - 0.5).powi(2)).exp()),
                n_max,
            ),
            FigureCase::Schrodinger1dBoundary => {
                Instance::schrodinger_1d(self.name(), scalar_fn(|x: &[f64]| 1.0 + (3.0 * PI * x[0]).sin()), n_max)
            }
            FigureCase::Schrodinger1dBspline => {
                Err(Error::Config("basis unavailable: the B-spline prior is not implemented".into()))
            }
            FigureCase::Schrodinger2d => Instance::schrodinger_2d(63),
            FigureCase::Volterra => Instance::volterra_figure(n_max),
            FigureCase::Darcy1d => Instance::darcy1d_figure(n_max),
            FigureCase::Heat => Instance::heat_figure(16, 16),
        }
    }
}

impl FromStr for FigureCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureCase::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure case `{s}`")))
    }
}

/// `sum_{i <= 2^14} i^{-3/2} sin(i) sqrt2 sin(i pi x)` by the sine recurrence.
pub fn series_truth(x: &[f64]) -> f64 {
    let theta = PI * x[0];
    let c2 = 2.0 * theta.cos();
    let (mut s_prev, mut s) = (0.0, theta.sin());
    let mut acc = 0.0;
    for i in 1..=SERIES_TERMS {
        let fi = i as f64;
        acc += fi.powf(-1.5) * fi.sin() * s;
        let next = c2 * s - s_prev;
        s_prev = s;
        s = next;
    }
    SQRT_2 * acc
}

/// How coefficient vectors become values at the evaluation points.
#[derive(Clone, Debug)]
enum Synth {
    /// `v = H c`, `Kv = KH c` with `H[p, l] = h_l(x_p)`.
    Tables { h: DMatrix<f64>, kh: DMatrix<f64> },
    /// Tensor sine basis on a product grid: `v = A^T C A`.
    Separable { a: DMatrix<f64>, index: Vec<(usize, usize)>, kscale: Vec<f64>, side: usize },
}

/// A truth `v0` in a singular basis together with everything needed to map
/// coefficient draws to `f` at evaluation points.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub spec: ProblemSpec,
    pub system: SvdSystem,
    pub v0: CoeffSeq,
    pub points: Vec<Vec<f64>>,
    pub interior: Vec<bool>,
    /// Known part of `v` not carried by the basis (Darcy-1D mean).
    pub v_offset: Vec<f64>,
    pub g_tilde: Vec<f64>,
    pub truth: Vec<f64>,
    synth: Synth,
}

fn unit_points(m: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let pts = (0..=m).map(|k| vec![k as f64 / m as f64]).collect();
    let interior = (0..=m).map(|k| k > 0 && k < m).collect();
    (pts, interior)
}

fn tables(system: &SvdSystem, points: &[Vec<f64>]) -> Result<Synth> {
    let (n, p) = (system.len(), points.len());
    let h = system.h_table(points);
    let kh = system.kh_table(points)?;
    Ok(Synth::Tables { h: DMatrix::from_fn(p, n, |i, l| h[l][i]), kh: DMatrix::from_fn(p, n, |i, l| kh[l][i]) })
}

/// Simpson coefficients `int_0^1 v h_l` of node samples on `FINE_1D` intervals.
fn fine_coefficients(values: &[f64], system: &SvdSystem) -> Vec<f64> {
    let m = values.len() - 1;
    let w = simpson_weights(m, 1.0 / m as f64);
    let mut out = vec![0.0; system.len()];
    for (k, (vk, wk)) in values.iter().zip(&w).enumerate() {
        let x = [k as f64 / m as f64];
        let c = vk * wk;
        if c == 0.0 {
            continue;
        }
        for (l, o) in out.iter_mut().enumerate() {
            *o += c * system.h(l, &x);
        }
    }
    out
}

impl Instance {
    pub fn len(&self) -> usize {
        self.system.len()
    }

    pub fn is_empty(&self) -> bool {
        self.system.is_empty()
    }

    /// `(v, Kv)` at the evaluation points for coefficients `c`.
    pub fn synthesize(&self, c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut v, kv) = match &self.synth {
            Synth::Tables { h, kh } => {
                let cv = DVector::from_column_slice(c);
                ((h * &cv).as_slice().to_vec(), (kh * &cv).as_slice().to_vec())
            }
            Synth::Separable { a, index, kscale, side } => {
                let mut cm = DMatrix::zeros(*side, *side);
                let mut km = DMatrix::zeros(*side, *side);
                for ((&(i, j), &s), &cl) in index.iter().zip(kscale).zip(c) {
                    cm[(i, j)] = cl;
                    km[(i, j)] = s * cl;
                }
                let v = a.transpose() * cm * a;
                let kv = a.transpose() * km * a;
                // row-major over (x, y)
                let p = a.ncols();
                let flat = |m: &DMatrix<f64>| (0..p * p).map(|q| m[(q / p, q % p)]).collect::<Vec<f64>>();
                (flat(&v), flat(&kv))
            }
        };
        for (vi, o) in v.iter_mut().zip(&self.v_offset) {
            *vi += o;
        }
        (v, kv)
    }

    /// Denominator of `e` whose minimum the floor guards.
    pub fn denominator(&self, c: &[f64]) -> Vec<f64> {
        let (v, kv) = self.synthesize(c);
        match self.spec.family {
            pdes::Family::Darcy1d => v.iter().map(|x| x.abs()).collect(),
            _ => kv.iter().zip(&self.g_tilde).map(|(a, b)| a + b).collect(),
        }
    }

    /// `e(v)` at the evaluation points.
    pub fn invert(&self, c: &[f64], floor: f64) -> Result<Vec<f64>> {
        let (v, kv) = self.synthesize(c);
        let u: Vec<f64> = kv.iter().zip(&self.g_tilde).map(|(a, b)| a + b).collect();
        pdes::invert_pointwise(&self.spec, &self.points, &v, &u, floor)
    }

    /// Keeps the sine triples with `|i|_inf <= m`, the span seen by the
    /// design grid with `m` points per axis.
    pub fn on_design_span(&self, m: usize) -> Result<Self> {
        if !matches!(self.system.kind, crate::BasisKind::Sine) {
            return Err(Error::Config(format!("fixed-design data need a sine basis, {} has {}", self.name, self.system.id)));
        }
        let keep: Vec<usize> =
            (0..self.len()).filter(|&l| self.system.triples[l].index.max_entry() as usize <= m).collect();
        if keep.is_empty() {
            return Err(Error::Dimension(format!("no basis function fits the design grid m = {m}")));
        }
        let mut out = self.clone();
        out.system.triples = keep.iter().map(|&l| self.system.triples[l].clone()).collect();
        out.system.id = format!("{}@design-m{m}", self.system.id);
        out.v0 = CoeffSeq::new(out.system.id.clone(), self.system.d, keep.iter().map(|&l| self.v0.coeffs[l]).collect());
        out.synth = match &self.synth {
            Synth::Tables { h, kh } => Synth::Tables { h: h.select_columns(&keep), kh: kh.select_columns(&keep) },
            Synth::Separable { a, index, kscale, side } => Synth::Separable {
                a: a.clone(),
                index: keep.iter().map(|&l| index[l]).collect(),
                kscale: keep.iter().map(|&l| kscale[l]).collect(),
                side: *side,
            },
        };
        Ok(out)
    }

    fn extension_at(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let gt = pdes::harmonic_extension(&self.spec, FdGrid::new(256))?;
        Ok(points.iter().map(|x| gt.interpolate(x)).collect())
    }

    /// `y_j = u0(x_j) + Z_j` with `u0 = K v0 + g~` on the design grid.
    pub fn simulate_design(&self, m: usize, seed: u64) -> Result<DesignObservation> {
        let d = self.system.d;
        let pts = crate::observe::design_points(m, d);
        let kh = self.system.kh_table(&pts)?;
        let g = self.extension_at(&pts)?;
        let u: Vec<f64> = (0..pts.len()).map(|q| g[q] + (0..self.len()).map(|l| self.v0.coeffs[l] * kh[l][q]).sum::<f64>()).collect();
        let mut obs = crate::observe::simulate_design(&|_: &[f64]| 0.0, m, d, seed)?;
        obs.y.iter_mut().zip(&u).for_each(|(y, ui)| *y += ui);
        Ok(obs)
    }

    /// Sequence data `|kappa_l| v_l + noise` from design data: subtracts `g~`,
    /// projects on the design span and removes the signs of `K`.
    pub fn design_sequence(&self, obs: &DesignObservation) -> Result<SeqObservation> {
        let span = self.on_design_span(obs.m)?;
        let g = self.extension_at(&obs.points)?;
        let centered = DesignObservation { y: obs.y.iter().zip(&g).map(|(y, gi)| y - gi).collect(), ..obs.clone() };
        let mut plain = span.system.clone();
        plain.id = self.system.id.clone();
        let mut seq = crate::observe::design_to_seq(&centered, &plain)?;
        for (y, t) in seq.y.iter_mut().zip(&span.system.triples) {
            *y *= t.sign;
        }
        seq.basis_id = span.system.id.clone();
        Ok(seq)
    }

    fn finish(
        name: &str,
        spec: ProblemSpec,
        system: SvdSystem,
        coeffs: Vec<f64>,
        (points, interior): (Vec<Vec<f64>>, Vec<bool>),
        g_tilde: Vec<f64>,
        truth: Vec<f64>,
    ) -> Result<Self> {
        let synth = tables(&system, &points)?;
        let v_offset = vec![0.0; points.len()];
        Ok(Self {
            name: name.to_owned(),
            v0: CoeffSeq::new(system.id.clone(), system.d, coeffs),
            spec,
            system,
            points,
            interior,
            v_offset,
            g_tilde,
            truth,
            synth,
        })
    }

    /// Schrodinger on `(0,1)` with `g(0) = 1`, `g(1) = 2`; `v0 = 2 f0 u_{f0}`
    /// from a reference solve on `2^14` intervals.
    pub fn schrodinger_1d(name: &str, f0: crate::ScalarFn, n_max: f64) -> Result<Self> {
        let spec = ProblemSpec::schrodinger(1, scalar_fn(|x: &[f64]| 1.0 + x[0]));
        let system = laplacian_system(1, default_truncation(n_max, 1, 2.0))?;
        let fine = FdGrid::new(FINE_1D);
        let fvals: Vec<f64> = (0..=FINE_1D).map(|k| f0(&[k as f64 / FINE_1D as f64])).collect();
        let u = pdes::forward_solve(&spec, &|x: &[f64]| fvals[(x[0] * FINE_1D as f64).round() as usize], fine)?;
        let v0: Vec<f64> = u.values.iter().zip(&fvals).map(|(ui, fi)| 2.0 * fi * ui).collect();
        let coeffs = fine_coefficients(&v0, &system);
        let (points, interior) = unit_points(256);
        let g_tilde = points.iter().map(|x| 1.0 + x[0]).collect();
        let truth = points.iter().map(|x| f0(x)).collect();
        Self::finish(name, spec, system, coeffs, (points, interior), g_tilde, truth)
    }

    /// Two-dimensional Schrodinger case with tensor sines `|i|_inf <= side`,
    /// evaluated on the interior of the grid `{k/64}^2`.
    pub fn schrodinger_2d(side: usize) -> Result<Self> {
        let g = scalar_fn(|x: &[f64]| {
            3.0 + x[0] * x[1] * x[1] + 2.0 * x[1] * (2.0 * PI * x[0]).sin() + x[0] * (3.0 * PI * x[1]).cos()
        });
        let f0 = |x: &[f64]| {
            2.0 * x[0] * (x[0] - 1.0) * x[1] * (x[1] - 1.0) * (2.0 + (3.0 * PI * x[0]).sin() * (PI * x[1]).sin())
        };
        let spec = ProblemSpec::schrodinger(2, g);
        let system = laplacian_system(2, side)?;
        let mf = 128;
        let u = pdes::forward_solve(&spec, &f0, FdGrid::new(mf))?;
        let v0 = u.like(u.points().iter().zip(&u.values).map(|(x, ui)| 2.0 * f0(x) * ui).collect());
        // trapezoid on the node grid: exact sine transform for indices < mf
        let s = DMatrix::from_fn(side, mf + 1, |i, k| SQRT_2 * ((i + 1) as f64 * PI * k as f64 / mf as f64).sin());
        let vm = DMatrix::from_fn(mf + 1, mf + 1, |a, b| v0.values[a * (mf + 1) + b]);
        let hstep = 1.0 / mf as f64;
        let cm = &s * vm * s.transpose() * (hstep * hstep);
        let index: Vec<(usize, usize)> = system
            .triples
            .iter()
            .map(|t| (t.index.entries()[0] as usize - 1, t.index.entries()[1] as usize - 1))
            .collect();
        let coeffs = index.iter().map(|&(i, j)| cm[(i, j)]).collect();
        let kscale = system.triples.iter().map(|t| t.sign * t.kappa).collect();

        let me = 64;
        let a = DMatrix::from_fn(side, me - 1, |i, k| SQRT_2 * ((i + 1) as f64 * PI * (k + 1) as f64 / me as f64).sin());
        let gt = pdes::harmonic_extension(&spec, FdGrid::new(me))?;
        let mut points = Vec::new();
        let mut g_tilde = Vec::new();
        for i in 1..me {
            for j in 1..me {
                points.push(vec![i as f64 / me as f64, j as f64 / me as f64]);
                g_tilde.push(gt.at(&[i, j]));
            }
        }
        let truth = points.iter().map(|x| f0(x)).collect();
        let interior = vec![true; points.len()];
        let v_offset = vec![0.0; points.len()];
        Ok(Self {
            name: "schrodinger-2d".into(),
            v0: CoeffSeq::new(system.id.clone(), 2, coeffs),
            spec,
            system,
            points,
            interior,
            v_offset,
            g_tilde,
            truth,
            synth: Synth::Separable { a, index, kscale, side },
        })
    }

    /// Volterra with `g = 1`, `f0 = 1 + sin(2 pi x)/2`, `u = exp(int f0)`.
    pub fn volterra_figure(n_max: f64) -> Result<Self> {
        let f0 = |x: f64| 1.0 + 0.5 * (2.0 * PI * x).sin();
        let u = |x: f64| (x + 0.5 * (1.0 - (2.0 * PI * x).cos()) / (2.0 * PI)).exp();
        let system = volterra_system(default_truncation(n_max, 1, 1.0))?;
        let v0: Vec<f64> = (0..=FINE_1D).map(|k| {
            let x = k as f64 / FINE_1D as f64;
            f0(x) * u(x)
        }).collect();
        let coeffs = fine_coefficients(&v0, &system);
        let pts = unit_points(256);
        let g_tilde = vec![1.0; pts.0.len()];
        let truth = pts.0.iter().map(|x| f0(x[0])).collect();
        Self::finish("volterra", ProblemSpec::volterra(1.0), system, coeffs, pts, g_tilde, truth)
    }

    /// Volterra truth given by coefficients `v0_l = l^{-beta - 1/2 - 0.01}`;
    /// `f0 = e(v0)` of the truncated series.
    pub fn volterra_sequence(beta: f64, len: usize, g0: f64, eval: usize) -> Result<Self> {
        let system = volterra_system(len)?;
        let coeffs: Vec<f64> = (1..=len).map(|l| (l as f64).powf(-beta - 0.51)).collect();
        let pts = unit_points(eval);
        let g_tilde = vec![g0; pts.0.len()];
        let mut inst = Self::finish("volterra-sequence", ProblemSpec::volterra(g0), system, coeffs, pts, g_tilde, Vec::new())?;
        inst.truth = inst.invert(&inst.v0.coeffs.clone(), 0.0)?;
        if inst.truth.iter().all(|t| *t == 0.0) {
            return Err(Error::Domain("K v0 + g is not positive; raise g0".into()));
        }
        Ok(inst)
    }

    /// Darcy-1D with `g(0) = 0`, `g(1) = 1`, `h = 1`, `f0 = 1 + 0.3 sin(2 pi x)`.
    /// The basis carries `v - (g(1) - g(0))`.
    pub fn darcy1d_figure(n_max: f64) -> Result<Self> {
        let f0 = |x: &[f64]| 1.0 + 0.3 * (2.0 * PI * x[0]).sin();
        let spec = ProblemSpec::darcy1d(0.0, 1.0, scalar_fn(|_| 1.0), f0(&[0.0]));
        let system = darcy1d_system(default_truncation(n_max, 1, 1.0), DarcyBoundary::Dirichlet)?;
        let u = pdes::forward_solve(&spec, &f0, FdGrid::new(FINE_1D))?;
        let v0 = pdes::apply_l(&spec, &u)?;
        let coeffs = fine_coefficients(&v0.values, &system);
        let pts = unit_points(256);
        let g_tilde = pts.0.iter().map(|x| x[0]).collect();
        let truth = pts.0.iter().map(|x| f0(x)).collect();
        let mut inst = Self::finish("darcy1d", spec, system, coeffs, pts, g_tilde, truth)?;
        inst.v_offset = vec![1.0; inst.points.len()];
        Ok(inst)
    }

    /// Heat on `(0,1) x (0,1]` through the discrete operator on `m x mt` interior nodes.
    pub fn heat_figure(m: usize, mt: usize) -> Result<Self> {
        let g = scalar_fn(|x: &[f64]| 1.0 + 0.5 * x[0]);
        let spec = ProblemSpec::heat(1, g.clone(), g);
        let f0 = |x: &[f64]| 0.5 + 0.5 * (PI * x[0]).sin() * x[1];
        let grid = FdGrid::with_time(m, mt);
        let u = pdes::forward_solve(&spec, &f0, grid)?;
        let v = pdes::apply_l(&spec, &u)?;
        let gt = pdes::harmonic_extension(&spec, grid)?;
        let system = pdes::heat_discrete_system(1, m, mt)?;
        let interior_of = |gf: &GridFunction| -> Vec<f64> {
            (0..gf.len()).filter(|&k| gf.is_interior(&gf.unflat(k))).map(|k| gf.values[k]).collect()
        };
        let v_in = interior_of(&v);
        let points: Vec<Vec<f64>> =
            u.points().into_iter().enumerate().filter(|(k, _)| u.is_interior(&u.unflat(*k))).map(|(_, p)| p).collect();
        let w = 1.0 / (m * mt) as f64;
        let coeffs = match &system.kind {
            crate::BasisKind::Discrete { h, .. } => {
                h.iter().map(|hl| hl.iter().zip(&v_in).map(|(a, b)| a * b * w).sum()).collect()
            }
            _ => unreachable!("heat_discrete_system returns a discrete basis"),
        };
        let truth = points.iter().map(|x| f0(x)).collect();
        let interior = vec![true; points.len()];
        let g_tilde = interior_of(&gt);
        Self::finish("heat", spec, system, coeffs, (points, interior), g_tilde, truth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_err(inst: &Instance) -> f64 {
        let f = inst.invert(&inst.v0.coeffs, 0.0).unwrap();
        f.iter()
            .zip(&inst.truth)
            .zip(&inst.interior)
            .filter(|(_, i)| **i)
            .map(|((a, b), _)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn design_data_match_the_sequence_model() {
        let inst = FigureCase::Schrodinger1dSmooth.build(1e6).unwrap();
        let m = 64;
        let span = inst.on_design_span(m).unwrap();
        assert_eq!(span.len(), m.min(inst.len()));
        let obs = inst.simulate_design(m, 3).unwrap();
        let seq = inst.design_sequence(&obs).unwrap();
        // pure noise part has variance 1/n per coordinate
        let resid: Vec<f64> = seq
            .y
            .iter()
            .zip(&seq.kappa)
            .zip(&span.v0.coeffs)
            .map(|((y, k), v)| (y - k * v) * (m as f64).sqrt())
            .collect();
        let var = resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64;
        assert!((0.5..1.6).contains(&var), "{var}");
        assert!(inst.on_design_span(2).unwrap().len() == 2);
        assert!(FigureCase::Volterra.build(1e6).unwrap().on_design_span(8).is_err());
    }

    #[test]
    fn truths_are_reproduced_by_their_coefficients() {
        // truncation error at the n = 1e10 level of each basis
        let cases = [
            (FigureCase::Schrodinger1dSmooth, 0.05),
            (FigureCase::Volterra, 0.05),
            (FigureCase::Darcy1d, 0.05),
            (FigureCase::Heat, 1e-9),
            (FigureCase::Schrodinger2d, 0.02),
        ];
        for (case, tol) in cases {
            let inst = case.build(1e10).unwrap();
            let e = max_err(&inst);
            assert!(e < tol, "{}: {e}", case.name());
        }
    }

    #[test]
    fn bspline_reports_unavailable() {
        let e = FigureCase::Schrodinger1dBspline.build(1e4).unwrap_err();
        assert!(e.to_string().contains("basis unavailable"));
    }
}
