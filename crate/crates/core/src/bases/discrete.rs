use nalgebra::DMatrix;

use super::{estimate_p, BasisKind, SvdSystem, Triple};
use crate::error::{Error, Result};
use crate::observe::Axis;
use crate::seqspace::MultiIndex;

/// Nodes and quadrature weights on which a discretized operator acts.
/// Node order is row-major over `axes` (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
    pub weights: Vec<f64>,
}

impl GridSpec {
    /// Equal weights `prod_j step_j` on every node.
    pub fn uniform(axes: Vec<Axis>) -> Self {
        let n: usize = axes.iter().map(|a| a.len).product();
        let w: f64 = axes.iter().map(|a| a.step).product();
        Self { axes, weights: vec![w; n] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        crate::observe::tensor_points(&self.axes)
    }

    /// Multilinear interpolation of node values, clamped to the grid box.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        let dims = self.axes.len();
        let mut base = vec![0usize; dims];
        let mut frac = vec![0.0; dims];
        for (j, a) in self.axes.iter().enumerate() {
            if a.len == 1 {
                continue;
            }
            let s = ((x[j] - a.start) / a.step).clamp(0.0, (a.len - 1) as f64);
            let b = (s.floor() as usize).min(a.len - 2);
            base[j] = b;
            frac[j] = s - b as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dims) {
            let mut w = 1.0;
            let mut flat = 0;
            for (j, a) in self.axes.iter().enumerate() {
                let up = (corner >> (dims - 1 - j)) & 1 == 1 && a.len > 1;
                w *= if up { frac[j] } else { 1.0 - frac[j] };
                flat = flat * a.len + base[j] + usize::from(up);
            }
            if w != 0.0 {
                acc += w * values[flat];
            }
        }
        acc
    }
}

/// Numerical SVD of an operator matrix acting on node values.
///
/// With `W` the quadrature weights, the SVD is taken of `W^{1/2} A W^{-1/2}`
/// so that singular functions are orthonormal in the weighted `L_2`. Singular
/// values below `1e-14` times the largest are dropped. Each pair's sign is
/// fixed so the largest-magnitude entry of `h` is positive.
pub fn discrete_svd(op: &DMatrix<f64>, grid: &GridSpec, id: &str) -> Result<SvdSystem> {
    let n = grid.len();
    if op.nrows() != n || op.ncols() != n {
        return Err(Error::Dimension(format!("operator is {}x{}, grid has {n} nodes", op.nrows(), op.ncols())));
    }
    if grid.weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Domain("quadrature weights must be positive".into()));
    }
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| sw[i] * op[(i, j)] / sw[j]);
    let svd = b.try_svd(true, true, f64::EPSILON, 10_000).ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD returned no left vectors".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD returned no right vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap().then(a.cmp(&b)));
    let smax = svd.singular_values[order[0]];
    let mut triples = Vec::new();
    let (mut hs, mut gs) = (Vec::new(), Vec::new());
    for (rank, &c) in order.iter().enumerate() {
        let s = svd.singular_values[c];
        if !(s > 1e-14 * smax) {
            break;
        }
        let mut h: Vec<f64> = (0..n).map(|i| vt[(c, i)] / sw[i]).collect();
        let mut g: Vec<f64> = (0..n).map(|i| u[(i, c)] / sw[i]).collect();
        let pivot = h.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            h.iter_mut().for_each(|v| *v = -*v);
            g.iter_mut().for_each(|v| *v = -*v);
        }
        triples.push(Triple { index: MultiIndex::new(vec![rank as u32 + 1])?, kappa: s, sign: 1.0 });
        hs.push(h);
        gs.push(g);
    }
    let d = grid.axes.iter().filter(|a| a.len > 1).count().max(1);
    let k: Vec<f64> = triples.iter().map(|t| t.kappa).collect();
    let p_estimate = estimate_p(&k[..k.len().div_ceil(2)], d);
    Ok(SvdSystem {
        id: id.to_owned(),
        d,
        p: p_estimate,
        kind: BasisKind::Discrete { grid: grid.clone(), h: hs, g: gs, p_estimate },
        triples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn identity_has_unit_spectrum() {
        let grid = GridSpec::uniform(vec![Axis { start: 0.0, step: 0.1, len: 10 }]);
        let s = discrete_svd(&DMatrix::identity(10, 10), &grid, "id").unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.kappas().iter().all(|k| (k - 1.0).abs() < 1e-12));
    }

    #[test]
    fn interpolation_is_exact_for_bilinear() {
        let axes = vec![Axis { start: 0.0, step: 0.25, len: 5 }, Axis { start: 0.0, step: 0.5, len: 3 }];
        let grid = GridSpec::uniform(axes);
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 3.0 * x[0] * x[1];
        let vals: Vec<f64> = grid.points().iter().map(|p| f(p)).collect();
        for p in [[0.1, 0.7], [0.99, 0.01], [0.5, 0.5], [1.0, 1.0]] {
            assert!((grid.interpolate(&vals, &p) - f(&p)).abs() < 1e-13);
        }
    }

    #[test]
    fn svd_relation_holds() {
        // cell-centred Volterra matrix on 60 points
        let n = 60;
        let h = 1.0 / n as f64;
        let a = DMatrix::from_fn(n, n, |i, j| if j < i { h } else if j == i { h / 2.0 } else { 0.0 });
        let grid = GridSpec::uniform(vec![Axis { start: h / 2.0, step: h, len: n }]);
        let s = discrete_svd(&a, &grid, "v").unwrap();
        if let BasisKind::Discrete { h: hv, g: gv, .. } = &s.kind {
            for l in 0..5 {
                let img: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)] * hv[l][j]).sum()).collect();
                for i in 0..n {
                    assert!((img[i] - s.triples[l].kappa * gv[l][i]).abs() < 1e-10);
                }
            }
        } else {
            panic!("expected discrete kind");
        }
        assert!((s.triples[0].kappa * PI / 2.0 - 1.0).abs() < 0.01);
        assert!((s.p - 1.0).abs() < 0.2, "p estimate {}", s.p);
    }
}
