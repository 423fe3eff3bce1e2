//! Coefficient sequences, smoothness-scale norms and the ordering of
//! multi-indexed eigenvalues into a single decreasing sequence.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bases::SvdSystem;
use crate::error::{Error, Result};
use crate::io;

/// A tuple `(i_1, ..., i_d)` of positive integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Dimension("multi-index needs at least one entry".into()));
        }
        if entries.contains(&0) {
            return Err(Error::Domain(format!("multi-index entries must be >= 1, got {entries:?}")));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn sum_sq(&self) -> f64 {
        self.0.iter().map(|&i| (i as f64) * (i as f64)).sum()
    }

    pub fn max_entry(&self) -> u32 {
        *self.0.iter().max().expect("non-empty")
    }

    /// Renders as `i1:i2:...` for audit tables.
    pub fn label(&self) -> String {
        self.0.iter().map(u32::to_string).collect::<Vec<_>>().join(":")
    }

    /// All tuples in `{1..=max}^d`, lexicographic.
    pub fn cube(d: usize, max: u32) -> Vec<MultiIndex> {
        let mut out = Vec::with_capacity((max as usize).pow(d as u32));
        let mut cur = vec![1u32; d];
        loop {
            out.push(MultiIndex(cur.clone()));
            let mut pos = d;
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                if cur[pos] < max {
                    cur[pos] += 1;
                    for c in cur.iter_mut().skip(pos + 1) {
                        *c = 1;
                    }
                    break;
                }
            }
        }
    }
}

/// Truncated coefficient vector of a function in a declared basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffSeq {
    pub basis_id: String,
    pub d: usize,
    pub coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CoeffSidecar {
    basis_id: String,
    d: usize,
    #[serde(rename = "N")]
    n: usize,
}

impl CoeffSeq {
    pub fn new(basis_id: impl Into<String>, d: usize, coeffs: Vec<f64>) -> Self {
        Self { basis_id: basis_id.into(), d, coeffs }
    }

    pub fn zeros(basis_id: impl Into<String>, d: usize, n: usize) -> Self {
        Self::new(basis_id, d, vec![0.0; n])
    }

    /// Truncation level `N`.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Writes `index,coeff` rows (1-based index) plus a `{basis_id, d, N}` sidecar.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.coeffs.iter().enumerate().map(|(i, c)| vec![(i + 1).to_string(), io::fmt_f64(*c)]);
        io::write_csv(path, &["index", "coeff"], rows)?;
        let side = CoeffSidecar { basis_id: self.basis_id.clone(), d: self.d, n: self.len() };
        io::write_json(&io::sidecar_path(path), &side)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let table = io::read_csv(path)?;
        table.expect_header(&["index", "coeff"])?;
        let side: CoeffSidecar = io::read_json(&io::sidecar_path(path))?;
        let coeffs = table.column("coeff")?;
        if coeffs.len() != side.n {
            return Err(Error::Parse(format!("sidecar declares N = {} but file has {} rows", side.n, coeffs.len())));
        }
        Ok(Self::new(side.basis_id, side.d, coeffs))
    }
}

/// The scale `G^s` with norm `sum_l v_l^2 l^{2s/d}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothnessScale {
    pub d: usize,
    pub s: f64,
}

/// `||v||_{G^s}`, summed left to right.
pub fn gs_norm(v: &CoeffSeq, scale: SmoothnessScale) -> Result<f64> {
    if scale.d != v.d {
        return Err(Error::Dimension(format!("scale has d = {}, sequence has d = {}", scale.d, v.d)));
    }
    if scale.d == 0 {
        return Err(Error::Dimension("dimension must be positive".into()));
    }
    let e = 2.0 * scale.s / scale.d as f64;
    let mut acc = 0.0;
    for (i, c) in v.coeffs.iter().enumerate() {
        let w = if e == 0.0 { 1.0 } else { ((i + 1) as f64).powf(e) };
        acc += c * c * w;
    }
    Ok(acc.sqrt())
}

/// Orders `(index, eigenvalue, payload)` entries by decreasing eigenvalue,
/// breaking ties lexicographically on the index.
pub fn sort_multiindexed<P>(mut entries: Vec<(MultiIndex, f64, P)>) -> Result<Vec<(MultiIndex, f64, P)>> {
    if let Some((idx, val, _)) = entries.iter().find(|(_, v, _)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("eigenvalue {val} at index {idx:?} is not positive")));
    }
    entries.sort_by(|a, b| match b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
    Ok(entries)
}

/// Synthesis `sum_{l <= N} v_l h_l(x)`.
pub fn evaluate(v: &CoeffSeq, basis: &SvdSystem, x: &[f64]) -> Result<f64> {
    if v.len() > basis.len() {
        return Err(Error::Dimension(format!("sequence has {} terms, basis only {}", v.len(), basis.len())));
    }
    basis.check_point(x)?;
    let mut acc = 0.0;
    for (l, c) in v.coeffs.iter().enumerate() {
        if *c != 0.0 {
            acc += c * basis.h(l, x);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases;

    #[test]
    fn unit_vectors() {
        let v = CoeffSeq::new("t", 1, vec![1.0, 0.0, 0.0]);
        assert_eq!(gs_norm(&v, SmoothnessScale { d: 1, s: 3.7 }).unwrap(), 1.0);
        let v = CoeffSeq::new("t", 1, vec![0.0, 1.0, 0.0]);
        assert!((gs_norm(&v, SmoothnessScale { d: 1, s: 1.0 }).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gs_norm_matches_independent_loop() {
        let n = 10_000;
        let coeffs: Vec<f64> = (1..=n).map(|l| (l as f64).powf(-1.5) * (l as f64).sin()).collect();
        let v = CoeffSeq::new("t", 1, coeffs);
        let got = gs_norm(&v, SmoothnessScale { d: 1, s: 0.9 }).unwrap();
        let mut acc = 0.0f64;
        for l in 1..=n {
            let lf = l as f64;
            let c = lf.powf(-1.5) * lf.sin();
            acc += c * c * lf.powf(1.8);
        }
        assert!((got - acc.sqrt()).abs() <= 1e-12 * acc.sqrt());
    }

    #[test]
    fn gs_norm_dimension_mismatch() {
        let v = CoeffSeq::new("t", 2, vec![1.0]);
        assert!(matches!(gs_norm(&v, SmoothnessScale { d: 1, s: 0.0 }), Err(Error::Dimension(_))));
    }

    #[test]
    fn cube_enumeration() {
        let c = MultiIndex::cube(2, 3);
        assert_eq!(c.len(), 9);
        assert_eq!(c[0].entries(), &[1, 1]);
        assert_eq!(c[1].entries(), &[1, 2]);
        assert_eq!(c[8].entries(), &[3, 3]);
    }

    #[test]
    fn laplacian_order_starts_at_one_one() {
        let entries: Vec<_> = MultiIndex::cube(2, 3)
            .into_iter()
            .map(|i| {
                let k = 1.0 / (std::f64::consts::PI.powi(2) * i.sum_sq());
                (i, k, ())
            })
            .collect();
        let s = sort_multiindexed(entries).unwrap();
        assert_eq!(s[0].0.entries(), &[1, 1]);
        assert!((s[0].1 - 1.0 / (2.0 * std::f64::consts::PI.powi(2))).abs() < 1e-15);
        // (1,2) and (2,1) tie; lexicographic puts (1,2) first
        assert_eq!(s[1].0.entries(), &[1, 2]);
        assert_eq!(s[2].0.entries(), &[2, 1]);
    }

    #[test]
    fn one_dimensional_order_is_identity() {
        let entries: Vec<_> = (1..=20u32).rev().map(|i| (MultiIndex::new(vec![i]).unwrap(), 1.0 / i as f64, i)).collect();
        let s = sort_multiindexed(entries).unwrap();
        for (pos, e) in s.iter().enumerate() {
            assert_eq!(e.2 as usize, pos + 1);
        }
    }

    #[test]
    fn sorted_laplacian_rate_band() {
        let entries: Vec<_> = MultiIndex::cube(2, 50)
            .into_iter()
            .map(|i| {
                let k = 1.0 / (std::f64::consts::PI.powi(2) * i.sum_sq());
                (i, k, ())
            })
            .collect();
        let s = sort_multiindexed(entries).unwrap();
        // only the prefix inside the quarter disc of radius 50 is the true ordering
        let complete = s.iter().take_while(|e| e.0.sum_sq() <= 2500.0).count();
        for (pos, e) in s.iter().take(complete).enumerate() {
            let r = e.1 * (pos + 1) as f64;
            // the minimum 2/(5 pi^2) sits at l = 2, the supremum tends to 1/(4 pi)
            assert!((0.04..=0.08).contains(&r), "k_l * l = {r} at l = {}", pos + 1);
        }
    }

    #[test]
    fn nonpositive_eigenvalue_rejected() {
        let e = vec![(MultiIndex::new(vec![1]).unwrap(), 0.0, ())];
        assert!(matches!(sort_multiindexed(e), Err(Error::Domain(_))));
    }

    #[test]
    fn evaluate_single_and_zero() {
        let sys = bases::laplacian_system(1, 8).unwrap();
        let mut c = vec![0.0; 8];
        c[0] = 1.0;
        let v = CoeffSeq::new(sys.id.clone(), 1, c);
        assert!((evaluate(&v, &sys, &[0.5]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let z = CoeffSeq::zeros(sys.id.clone(), 1, 8);
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(evaluate(&z, &sys, &[x]).unwrap(), 0.0);
        }
        assert!(matches!(evaluate(&z, &sys, &[1.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn evaluate_matches_naive_sum() {
        use rand::Rng;
        let sys = bases::laplacian_system(1, 64).unwrap();
        let mut r = crate::rng(11);
        let c: Vec<f64> = (0..64).map(|_| r.random_range(-1.0..1.0)).collect();
        let v = CoeffSeq::new(sys.id.clone(), 1, c.clone());
        for x in [0.013, 0.37, 0.9] {
            let naive: f64 =
                (1..=64).map(|i| c[i - 1] * 2f64.sqrt() * (i as f64 * std::f64::consts::PI * x).sin()).sum();
            assert!((evaluate(&v, &sys, &[x]).unwrap() - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        let v = CoeffSeq::new("laplacian-d1", 1, vec![0.5, -1e-9, 3.0]);
        v.write_csv(&p).unwrap();
        assert_eq!(CoeffSeq::read_csv(&p).unwrap(), v);
    }
}
