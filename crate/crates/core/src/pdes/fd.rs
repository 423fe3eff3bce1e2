//! Finite-difference building blocks on the node grid `{k/m}^d`, `d <= 2`.

use crate::error::{Error, Result};
use crate::linalg::{solve_tridiagonal, BandedSpd};
use crate::observe::{tensor_points, Axis};

pub fn node_axes(m: usize, d: usize) -> Vec<Axis> {
    vec![crate::bases::unit_axis(m); d]
}

pub fn node_points(m: usize, d: usize) -> Vec<Vec<f64>> {
    tensor_points(&node_axes(m, d))
}

/// Conservative elliptic problem on the node grid:
/// `sum_e c_e (u_i - u_nb) / h^2 + r_i u_i = s_i` at interior nodes, with
/// `c_e` the conductance at the edge midpoint and `u = boundary` on the
/// boundary nodes. Returns all node values.
pub struct Elliptic<'a> {
    pub m: usize,
    pub d: usize,
    pub conductance: &'a dyn Fn(&[f64]) -> f64,
    pub reaction: &'a [f64],
    pub source: &'a [f64],
    pub boundary: &'a [f64],
}

impl Elliptic<'_> {
    pub fn solve(&self, family: &'static str) -> Result<Vec<f64>> {
        let (m, d) = (self.m, self.d);
        let total = (m + 1).pow(d as u32);
        if self.reaction.len() != total || self.source.len() != total || self.boundary.len() != total {
            return Err(Error::Dimension(format!("elliptic data must have {total} node values")));
        }
        if m < 2 {
            return Err(Error::Dimension("need at least 3 nodes per axis".into()));
        }
        let h = 1.0 / m as f64;
        match d {
            1 => self.solve_1d(h, family),
            2 => self.solve_2d(h, family),
            _ => Err(Error::Dimension(format!("finite differences implemented for d <= 2, got {d}"))),
        }
    }

    fn solve_1d(&self, h: f64, family: &'static str) -> Result<Vec<f64>> {
        let m = self.m;
        let n = m - 1;
        let (mut sub, mut diag, mut sup, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let h2 = h * h;
        for k in 0..n {
            let i = k + 1;
            let cl = (self.conductance)(&[(i as f64 - 0.5) * h]);
            let cr = (self.conductance)(&[(i as f64 + 0.5) * h]);
            diag[k] = (cl + cr) / h2 + self.reaction[i];
            rhs[k] = self.source[i];
            if k > 0 {
                sub[k] = -cl / h2;
            } else {
                rhs[k] += cl / h2 * self.boundary[0];
            }
            if k + 1 < n {
                sup[k] = -cr / h2;
            } else {
                rhs[k] += cr / h2 * self.boundary[m];
            }
        }
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs).map_err(|e| Error::Solver { family, detail: e.to_string() })?;
        let mut out = self.boundary.to_vec();
        out[1..m].copy_from_slice(&x);
        Ok(out)
    }

    fn solve_2d(&self, h: f64, family: &'static str) -> Result<Vec<f64>> {
        let m = self.m;
        let w = m - 1;
        let node = |i: usize, j: usize| i * (m + 1) + j;
        let unk = |i: usize, j: usize| (i - 1) * w + (j - 1);
        let mut a = BandedSpd::zeros(w * w, w);
        let mut rhs = vec![0.0; w * w];
        let h2 = h * h;
        for i in 1..m {
            for j in 1..m {
                let (x, y) = (i as f64 * h, j as f64 * h);
                let k = unk(i, j);
                rhs[k] += self.source[node(i, j)];
                a.add(k, k, self.reaction[node(i, j)]);
                let nbs = [
                    (i - 1, j, [x - 0.5 * h, y]),
                    (i + 1, j, [x + 0.5 * h, y]),
                    (i, j - 1, [x, y - 0.5 * h]),
                    (i, j + 1, [x, y + 0.5 * h]),
                ];
                for (ni, nj, mid) in nbs {
                    let c = (self.conductance)(&mid) / h2;
                    a.add(k, k, c);
                    if ni == 0 || nj == 0 || ni == m || nj == m {
                        rhs[k] += c * self.boundary[node(ni, nj)];
                    } else if unk(ni, nj) < k {
                        a.add(k, unk(ni, nj), -c);
                    }
                }
            }
        }
        a.factor().map_err(|e| Error::Solver { family, detail: e.to_string() })?;
        let x = a.solve(&rhs)?;
        let mut out = self.boundary.to_vec();
        for i in 1..m {
            for j in 1..m {
                out[node(i, j)] = x[unk(i, j)];
            }
        }
        Ok(out)
    }
}

/// Node values of a boundary function (interior nodes set to zero).
pub fn boundary_values(m: usize, d: usize, g: &dyn Fn(&[f64]) -> f64) -> Vec<f64> {
    node_points(m, d)
        .iter()
        .map(|p| if p.iter().any(|&c| c == 0.0 || c == 1.0) { g(p) } else { 0.0 })
        .collect()
}

/// Second difference along one axis of a node grid; one-sided
/// second-order stencils at the ends.
fn second_diff(values: &[f64], dims: &[usize], axis: usize, h: f64, at: &[usize]) -> f64 {
    let n = dims[axis];
    let stride: usize = dims[axis + 1..].iter().product();
    let mut base_idx = at.to_vec();
    base_idx[axis] = 0;
    let base = base_idx.iter().zip(dims).fold(0, |acc, (&i, &l)| acc * l + i);
    let v = |k: usize| values[base + k * stride];
    let i = at[axis];
    let h2 = h * h;
    if i == 0 {
        (2.0 * v(0) - 5.0 * v(1) + 4.0 * v(2) - v(3)) / h2
    } else if i == n - 1 {
        (2.0 * v(n - 1) - 5.0 * v(n - 2) + 4.0 * v(n - 3) - v(n - 4)) / h2
    } else {
        (v(i - 1) - 2.0 * v(i) + v(i + 1)) / h2
    }
}

/// First difference along one axis: central inside, second-order one-sided at ends.
pub fn first_diff(values: &[f64], dims: &[usize], axis: usize, h: f64, at: &[usize]) -> f64 {
    let n = dims[axis];
    let stride: usize = dims[axis + 1..].iter().product();
    let mut base_idx = at.to_vec();
    base_idx[axis] = 0;
    let base = base_idx.iter().zip(dims).fold(0, |acc, (&i, &l)| acc * l + i);
    let v = |k: usize| values[base + k * stride];
    let i = at[axis];
    if i == 0 {
        (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * v(n - 1) - 4.0 * v(n - 2) + v(n - 3)) / (2.0 * h)
    } else {
        (v(i + 1) - v(i - 1)) / (2.0 * h)
    }
}

/// Laplacian over the first `spatial` axes of a node grid.
pub fn laplacian(values: &[f64], dims: &[usize], spatial: usize, h: f64, at: &[usize]) -> f64 {
    (0..spatial).map(|a| second_diff(values, dims, a, h, at)).sum()
}

/// Unflattens a row-major position.
pub fn unflat(mut k: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for j in (0..dims.len()).rev() {
        idx[j] = k % dims[j];
        k /= dims[j];
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn poisson_1d_second_order() {
        let mut errs = Vec::new();
        for m in [32, 64] {
            let n = m + 1;
            let pts = node_points(m, 1);
            let src: Vec<f64> = pts.iter().map(|p| PI * PI * (PI * p[0]).sin()).collect();
            let u = Elliptic { m, d: 1, conductance: &|_| 1.0, reaction: &vec![0.0; n], source: &src, boundary: &vec![0.0; n] }
                .solve("poisson")
                .unwrap();
            errs.push(pts.iter().zip(&u).map(|(p, v)| (v - (PI * p[0]).sin()).abs()).fold(0.0, f64::max));
        }
        let ratio = errs[0] / errs[1];
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn poisson_2d_matches_1d_product() {
        let m = 16;
        let n = (m + 1) * (m + 1);
        let pts = node_points(m, 2);
        let exact = |p: &[f64]| (PI * p[0]).sin() * (PI * p[1]).sin();
        // discrete eigenfunction: source = lambda_h * u exactly
        let lam = 2.0 * 4.0 * (m * m) as f64 * (PI / (2.0 * m as f64)).sin().powi(2);
        let src: Vec<f64> = pts.iter().map(|p| lam * exact(p)).collect();
        let u = Elliptic { m, d: 2, conductance: &|_| 1.0, reaction: &vec![0.0; n], source: &src, boundary: &vec![0.0; n] }
            .solve("poisson")
            .unwrap();
        for (p, v) in pts.iter().zip(&u) {
            assert!((v - exact(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn stencils_exact_on_cubics() {
        let m = 10;
        let dims = [m + 1];
        let h = 0.1;
        let vals: Vec<f64> = (0..=m).map(|k| (k as f64 * h).powi(3)).collect();
        for k in 0..=m {
            let x = k as f64 * h;
            assert!((laplacian(&vals, &dims, 1, h, &[k]) - 6.0 * x).abs() < 1e-9);
        }
        let q: Vec<f64> = (0..=m).map(|k| (k as f64 * h).powi(2)).collect();
        for k in 0..=m {
            assert!((first_diff(&q, &dims, 0, h, &[k]) - 2.0 * k as f64 * h).abs() < 1e-12);
        }
    }
}
