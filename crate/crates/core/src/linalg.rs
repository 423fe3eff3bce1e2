//! Small direct solvers and quadrature helpers for finite-difference grids.

use crate::error::{Error, Result};

/// Thomas algorithm for a tridiagonal system. `sub[i]` couples row `i` to
/// `i - 1`, `sup[i]` couples row `i` to `i + 1`; `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::Dimension("tridiagonal bands and rhs must share a length".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 || !piv.is_finite() {
        return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return Err(Error::Numerical(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        c[i] = sup[i] / piv;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / piv;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Symmetric positive definite band matrix, stored by lower band rows.
#[derive(Clone, Debug)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
    factored: bool,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)], factored: false }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `value` to entry (i, j); only the lower triangle is stored, so
    /// callers add each symmetric pair once.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) lies outside the band");
        let s = self.slot(i, j);
        self.data[s] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// In-place band Cholesky factorization.
    pub fn factor(&mut self) -> Result<()> {
        let (n, bw) = (self.n, self.bw);
        for j in 0..n {
            let k0 = j.saturating_sub(bw);
            let mut s = self.data[self.slot(j, j)];
            for k in k0..j {
                let l = self.data[self.slot(j, k)];
                s -= l * l;
            }
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::Numerical(format!("matrix is not positive definite (pivot {j})")));
            }
            let ljj = s.sqrt();
            let sj = self.slot(j, j);
            self.data[sj] = ljj;
            for i in j + 1..(j + bw + 1).min(n) {
                let k0 = i.saturating_sub(bw);
                let mut t = self.data[self.slot(i, j)];
                for k in k0..j {
                    t -= self.data[self.slot(i, k)] * self.data[self.slot(j, k)];
                }
                let sij = self.slot(i, j);
                self.data[sij] = t / ljj;
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves with the factored matrix.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if !self.factored {
            return Err(Error::Numerical("band matrix used before factorization".into()));
        }
        if rhs.len() != self.n {
            return Err(Error::Dimension("rhs length differs from matrix size".into()));
        }
        let (n, bw) = (self.n, self.bw);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[self.slot(i, k)] * y[k];
            }
            y[i] = s / self.data[self.slot(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.data[self.slot(k, i)] * y[k];
            }
            y[i] = s / self.data[self.slot(i, i)];
        }
        Ok(y)
    }
}

/// Trapezoidal integral of uniformly spaced samples.
pub fn trapz(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Running trapezoidal integral, starting from zero at the first sample.
pub fn cumtrapz(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Composite Simpson weights for `m` (even) intervals of width `h`.
pub fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    assert!(m >= 2 && m.is_multiple_of(2), "Simpson needs an even number of intervals");
    (0..=m)
        .map(|k| {
            let c = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Ordinary least squares fit `y ≈ a + b x`; returns `(b, a)`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (b, my - b * mx)
}

/// Empirical quantile (inverse of the empirical CDF) of sorted data.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let m = sorted.len();
    let k = ((level * m as f64).ceil() as usize).clamp(1, m);
    sorted[k - 1]
}
