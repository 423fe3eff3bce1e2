//! Two-dimensional Darcy problem `div(f grad u) = h` on `[0,1]^2`.

use std::path::Path;

use super::fd::{self, Elliptic};
use crate::bases::unit_axis;
use crate::error::{Error, Result};
use crate::io;
use crate::observe::{Axis, GridFunction};
use crate::ScalarFn;

/// FD solve with `f` sampled at cell-edge midpoints; `m` intervals per axis.
pub fn darcy_forward(
    f: &dyn Fn(&[f64]) -> f64,
    h: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
    m: usize,
) -> Result<GridFunction> {
    let axes = vec![unit_axis(m); 2];
    let pts = crate::observe::tensor_points(&axes);
    let source: Vec<f64> = pts.iter().map(|x| -h(x)).collect();
    let boundary = fd::boundary_values(m, 2, g);
    let zeros = vec![0.0; pts.len()];
    let cond = |x: &[f64]| f(x);
    for k in 0..=2 * m {
        let x = [k as f64 / (2 * m) as f64, 0.5];
        if !(f(&x) > 0.0) {
            return Err(Error::Solver { family: "darcy (needs f > 0)", detail: format!("f({x:?}) <= 0") });
        }
    }
    let u = Elliptic { m, d: 2, conductance: &cond, reaction: &zeros, source: &source, boundary: &boundary }
        .solve("darcy (needs f > 0)")?;
    GridFunction::new(axes, u)
}

/// Prescribed values of `f` on the influx boundary.
#[derive(Clone)]
pub enum Influx {
    Function(ScalarFn),
    /// Rows `(x, y, f)` on the boundary, interpolated linearly along each edge.
    Table(Vec<[f64; 3]>),
}

const EDGE_TOL: f64 = 1e-12;

impl Influx {
    pub fn value(&self, x: &[f64; 2]) -> Result<f64> {
        match self {
            Influx::Function(f) => Ok(f(x)),
            Influx::Table(rows) => {
                for axis in 0..2 {
                    for side in [0.0, 1.0] {
                        if (x[axis] - side).abs() > EDGE_TOL {
                            continue;
                        }
                        let free = 1 - axis;
                        let mut edge: Vec<(f64, f64)> = rows
                            .iter()
                            .filter(|r| (r[axis] - side).abs() <= EDGE_TOL)
                            .map(|r| (r[free], r[2]))
                            .collect();
                        edge.sort_by(|a, b| a.0.total_cmp(&b.0));
                        if let Some(v) = interp_edge(&edge, x[free]) {
                            return Ok(v);
                        }
                    }
                }
                Err(Error::Config(format!("no influx value covers boundary point ({}, {})", x[0], x[1])))
            }
        }
    }

    /// Reads a CSV with header `x,y,f`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let t = io::read_csv(path)?;
        t.expect_header(&["x", "y", "f"])?;
        let (x, y, f) = (t.column("x")?, t.column("y")?, t.column("f")?);
        Ok(Influx::Table(x.iter().zip(&y).zip(&f).map(|((a, b), c)| [*a, *b, *c]).collect()))
    }
}

fn interp_edge(edge: &[(f64, f64)], s: f64) -> Option<f64> {
    let first = edge.first()?;
    let last = edge.last()?;
    if s < first.0 - 1e-9 || s > last.0 + 1e-9 {
        return None;
    }
    if edge.len() == 1 || s <= first.0 {
        return Some(first.1);
    }
    let k = edge.partition_point(|p| p.0 < s);
    if k >= edge.len() {
        return Some(last.1);
    }
    let (a, b) = (edge[k - 1], edge[k]);
    if b.0 == a.0 {
        return Some(b.1);
    }
    Some(a.1 + (s - a.0) / (b.0 - a.0) * (b.1 - a.1))
}

/// Inputs of the characteristics algorithm on the grid `(i delta, j delta)`.
#[derive(Clone)]
pub struct DarcyGrid {
    pub delta: f64,
    pub u: GridFunction,
    pub grad_u: [GridFunction; 2],
    pub lap_u: GridFunction,
    /// Right-hand side `h` of the Darcy equation.
    pub g_rhs: GridFunction,
    pub influx: Influx,
}

impl DarcyGrid {
    fn check_axes(u: &GridFunction) -> Result<usize> {
        if u.axes.len() != 2 || u.axes[0] != u.axes[1] {
            return Err(Error::Dimension("Darcy grids are square and two-dimensional".into()));
        }
        let m = u.axes[0].len - 1;
        if u.axes[0] != unit_axis(m) || m < 3 {
            return Err(Error::Dimension("Darcy grid must be {k delta} with 1/delta >= 3".into()));
        }
        Ok(m)
    }

    /// Gradient and Laplacian from finite differences of sampled `u`.
    pub fn from_samples(u: &GridFunction, g_rhs: &GridFunction, influx: Influx) -> Result<Self> {
        let m = Self::check_axes(u)?;
        if g_rhs.axes != u.axes {
            return Err(Error::Dimension("u and h must share the grid".into()));
        }
        let h = 1.0 / m as f64;
        let dims = u.dims();
        let diff = |axis: usize| {
            u.like((0..u.len()).map(|k| fd::first_diff(&u.values, &dims, axis, h, &u.unflat(k))).collect())
        };
        let lap = u.like((0..u.len()).map(|k| fd::laplacian(&u.values, &dims, 2, h, &u.unflat(k))).collect());
        Ok(Self { delta: h, u: u.clone(), grad_u: [diff(0), diff(1)], lap_u: lap, g_rhs: g_rhs.clone(), influx })
    }

    /// Exact pointwise inputs.
    pub fn from_exact(
        m: usize,
        u: &dyn Fn(&[f64]) -> f64,
        grad: &dyn Fn(&[f64]) -> [f64; 2],
        lap: &dyn Fn(&[f64]) -> f64,
        g_rhs: &dyn Fn(&[f64]) -> f64,
        influx: Influx,
    ) -> Result<Self> {
        let axes = vec![unit_axis(m); 2];
        let ug = GridFunction::from_fn(axes.clone(), u);
        Self::check_axes(&ug)?;
        Ok(Self {
            delta: 1.0 / m as f64,
            u: ug,
            grad_u: [GridFunction::from_fn(axes.clone(), |x| grad(x)[0]), GridFunction::from_fn(axes.clone(), |x| grad(x)[1])],
            lap_u: GridFunction::from_fn(axes.clone(), lap),
            g_rhs: GridFunction::from_fn(axes, g_rhs),
            influx,
        })
    }

    pub fn m(&self) -> usize {
        self.u.axes[0].len - 1
    }

    /// `C(u) = min (Delta u + |grad u|^2)` over the grid.
    pub fn c_u(&self) -> f64 {
        (0..self.u.len())
            .map(|k| self.lap_u.values[k] + self.grad_u[0].values[k].powi(2) + self.grad_u[1].values[k].powi(2))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug)]
enum Link {
    /// Small gradient: `alpha = g / Delta u`.
    Direct,
    /// Node on the influx boundary with its prescribed value.
    Fixed(f64),
    Node { k: usize, a: f64 },
    /// Step clipped at the boundary crossing, where `f` is prescribed.
    Boundary { value: f64, a: f64 },
}

/// Result of the characteristics inversion.
#[derive(Clone, Debug)]
pub struct DarcyInversion {
    pub alpha: GridFunction,
    pub c_u: f64,
    pub influx_points: usize,
    pub small_gradient: usize,
    /// Links `x_ij -> x_kl` with `u_kl >= u_ij`; zero for exact inputs.
    pub order_violations: usize,
}

/// Recovers `alpha_ij ~ f(x_ij)` along discretized characteristics.
pub fn darcy_characteristics(grid: &DarcyGrid) -> Result<DarcyInversion> {
    let c_u = grid.c_u();
    if !(c_u > 0.0) {
        return Err(Error::Domain(format!("C(u) = {c_u} must be positive before inversion")));
    }
    let m = grid.m();
    let delta = grid.delta;
    let sd = delta.sqrt();
    let n = grid.u.len();
    let node = |i: usize, j: usize| i * (m + 1) + j;
    let mut links = Vec::with_capacity(n);
    let (mut influx_points, mut small_gradient, mut order_violations) = (0, 0, 0);
    for i in 0..=m {
        for j in 0..=m {
            let k = node(i, j);
            let x = [i as f64 * delta, j as f64 * delta];
            let (gx, gy) = (grid.grad_u[0].values[k], grid.grad_u[1].values[k]);
            let norm = gx.hypot(gy);
            if norm < sd {
                small_gradient += 1;
                if !(grid.lap_u.values[k] > 0.0) {
                    return Err(Error::Domain(format!("Delta u = {} <= 0 at small-gradient node {x:?}", grid.lap_u.values[k])));
                }
                links.push(Link::Direct);
                continue;
            }
            let zi = [(gx / norm / sd).trunc() as i64, (gy / norm / sd).trunc() as i64];
            let target = [i as i64 - zi[0], j as i64 - zi[1]];
            let inside = target.iter().all(|t| (0..=m as i64).contains(t));
            let z = [zi[0] as f64 * delta, zi[1] as f64 * delta];
            let zlen = z[0].hypot(z[1]);
            if inside {
                let kl = node(target[0] as usize, target[1] as usize);
                if grid.u.values[kl] >= grid.u.values[k] {
                    order_violations += 1;
                }
                links.push(Link::Node { k: kl, a: norm / zlen });
                continue;
            }
            // largest t with x - t z inside the square
            let mut t: f64 = 1.0;
            for c in 0..2 {
                if z[c] > 0.0 {
                    t = t.min(x[c] / z[c]);
                } else if z[c] < 0.0 {
                    t = t.min((1.0 - x[c]) / -z[c]);
                }
            }
            if t <= 0.0 {
                influx_points += 1;
                links.push(Link::Fixed(grid.influx.value(&x)?));
            } else {
                let p = [(x[0] - t * z[0]).clamp(0.0, 1.0), (x[1] - t * z[1]).clamp(0.0, 1.0)];
                links.push(Link::Boundary { value: grid.influx.value(&p)?, a: norm / (t * zlen) });
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| grid.u.values[a].total_cmp(&grid.u.values[b]).then(a.cmp(&b)));
    let mut alpha = vec![f64::NAN; n];
    // 0 = pending, 1 = on the current chain, 2 = done
    let mut state = vec![0u8; n];
    let mut stack = Vec::new();
    let solve = |k: usize, link: Link, alpha: &[f64]| -> Result<f64> {
        let (g, lap) = (grid.g_rhs.values[k], grid.lap_u.values[k]);
        let (num, den) = match link {
            Link::Direct => (g, lap),
            Link::Fixed(v) => return Ok(v),
            Link::Node { k: kl, a } => (g + alpha[kl] * a, lap + a),
            Link::Boundary { value, a } => (g + value * a, lap + a),
        };
        if !(den > 0.0) {
            return Err(Error::Domain(format!("denominator {den} <= 0 at node {k}; C(u) too small for this delta")));
        }
        Ok(num / den)
    };
    for &start in &order {
        if state[start] == 2 {
            continue;
        }
        stack.push(start);
        state[start] = 1;
        while let Some(&top) = stack.last() {
            if let Link::Node { k: next, .. } = links[top] {
                match state[next] {
                    0 => {
                        state[next] = 1;
                        stack.push(next);
                        continue;
                    }
                    1 => return Err(Error::Numerical(format!("characteristic links form a cycle through node {next}"))),
                    _ => {}
                }
            }
            alpha[top] = solve(top, links[top], &alpha)?;
            state[top] = 2;
            stack.pop();
        }
    }
    Ok(DarcyInversion {
        alpha: grid.u.like(alpha).with_label("alpha"),
        c_u,
        influx_points,
        small_gradient,
        order_violations,
    })
}

/// Output of the multi-measurement inversion on interior nodes.
#[derive(Clone, Debug)]
pub struct MultiMeasure {
    pub grad_log_f: [GridFunction; 2],
    /// Integrated along x first, then y.
    pub f: GridFunction,
    /// Max `|log f|` difference between the x-first and y-first staircases.
    pub path_gap: f64,
    pub max_condition: f64,
}

/// `grad f / f = -[v_1 v_2][grad u_1 grad u_2]^{-1}` from two measurements
/// `u_j` (node grids, `h = 0`), integrated by the trapezoid rule from the
/// first interior node, where `f = anchor_value`.
pub fn darcy_multimeasure(us: &[GridFunction], anchor_value: f64, cond_cap: f64) -> Result<MultiMeasure> {
    if us.len() != 2 {
        return Err(Error::Dimension(format!("two-dimensional inversion needs 2 measurements, got {}", us.len())));
    }
    let m = DarcyGrid::check_axes(&us[0])?;
    if us[1].axes != us[0].axes {
        return Err(Error::Dimension("measurements must share the grid".into()));
    }
    let h = 1.0 / m as f64;
    let dims = us[0].dims();
    let w = m - 1;
    let axes = vec![Axis { start: h, step: h, len: w }; 2];
    let (mut gx, mut gy) = (vec![0.0; w * w], vec![0.0; w * w]);
    let mut max_condition: f64 = 0.0;
    for i in 1..m {
        for j in 1..m {
            let at = [i, j];
            let grad = |u: &GridFunction| [fd::first_diff(&u.values, &dims, 0, h, &at), fd::first_diff(&u.values, &dims, 1, h, &at)];
            let (a, b) = (grad(&us[0]), grad(&us[1]));
            let v = [fd::laplacian(&us[0].values, &dims, 2, h, &at), fd::laplacian(&us[1].values, &dims, 2, h, &at)];
            // M = [[a0, b0], [a1, b1]] with columns grad u_j
            let det = a[0] * b[1] - b[0] * a[1];
            let fro2 = a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1];
            let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
            let smin = ((fro2 - disc) / 2.0).max(0.0).sqrt();
            let smax = ((fro2 + disc) / 2.0).sqrt();
            let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
            if !(cond <= cond_cap) {
                return Err(Error::Domain(format!(
                    "gradient matrix condition number {cond:.3e} exceeds {cond_cap:.3e} at ({}, {})",
                    i as f64 * h,
                    j as f64 * h
                )));
            }
            max_condition = max_condition.max(cond);
            // r M = -v  <=>  M^T r^T = -v^T
            let r0 = (-v[0] * b[1] + v[1] * a[1]) / det;
            let r1 = (-v[1] * a[0] + v[0] * b[0]) / det;
            let k = (i - 1) * w + (j - 1);
            gx[k] = r0;
            gy[k] = r1;
        }
    }
    let idx = |i: usize, j: usize| i * w + j;
    let integrate = |x_first: bool| {
        let mut lf = vec![0.0; w * w];
        if x_first {
            for i in 1..w {
                lf[idx(i, 0)] = lf[idx(i - 1, 0)] + 0.5 * h * (gx[idx(i - 1, 0)] + gx[idx(i, 0)]);
            }
            for i in 0..w {
                for j in 1..w {
                    lf[idx(i, j)] = lf[idx(i, j - 1)] + 0.5 * h * (gy[idx(i, j - 1)] + gy[idx(i, j)]);
                }
            }
        } else {
            for j in 1..w {
                lf[idx(0, j)] = lf[idx(0, j - 1)] + 0.5 * h * (gy[idx(0, j - 1)] + gy[idx(0, j)]);
            }
            for j in 0..w {
                for i in 1..w {
                    lf[idx(i, j)] = lf[idx(i - 1, j)] + 0.5 * h * (gx[idx(i - 1, j)] + gx[idx(i, j)]);
                }
            }
        }
        lf
    };
    let (la, lb) = (integrate(true), integrate(false));
    let path_gap = la.iter().zip(&lb).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let f = la.iter().map(|l| anchor_value * l.exp()).collect();
    Ok(MultiMeasure {
        grad_log_f: [GridFunction::new(axes.clone(), gx)?, GridFunction::new(axes.clone(), gy)?],
        f: GridFunction::new(axes, f)?.with_label("f"),
        path_gap,
        max_condition,
    })
}
