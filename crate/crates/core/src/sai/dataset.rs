//! Synthetic banded matrices and diagonal windows of larger matrices.

use rand::Rng;

use super::SparseMatrix;
use crate::error::{Error, Result};
use crate::rng;

/// Acceptance filter shared by both dataset builders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixFilter {
    /// Largest allowed fraction of zero entries.
    pub max_sparsity: f64,
    pub min_det: f64,
    pub max_det: f64,
}

impl Default for MatrixFilter {
    fn default() -> Self {
        Self {
            max_sparsity: 0.96,
            min_det: 0.001,
            max_det: 50.0,
        }
    }
}

impl MatrixFilter {
    /// Accepts everything.
    pub fn none() -> Self {
        Self {
            max_sparsity: 1.0,
            min_det: f64::NEG_INFINITY,
            max_det: f64::INFINITY,
        }
    }

    pub fn accepts(&self, a: &SparseMatrix) -> bool {
        if a.sparsity() > self.max_sparsity {
            return false;
        }
        if self.min_det == f64::NEG_INFINITY && self.max_det == f64::INFINITY {
            return true;
        }
        let det = a.determinant();
        det >= self.min_det && det <= self.max_det
    }
}

/// Generator of symmetric binary matrices denser near the diagonal.
///
/// Off-diagonal entries at distance `d` are nonzero with probability
/// `p0 exp(-(d / sigma)²)`; the diagonal is always one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandedConfig {
    pub n: usize,
    pub p0: f64,
    pub sigma: f64,
    pub filter: MatrixFilter,
    /// Rejection attempts allowed per accepted matrix.
    pub max_attempts: usize,
}

impl Default for BandedConfig {
    fn default() -> Self {
        Self {
            n: 30,
            p0: 0.9,
            sigma: 4.0,
            filter: MatrixFilter::default(),
            max_attempts: 10_000,
        }
    }
}

pub fn gen_dataset1(count: usize, seed: u64) -> Result<Vec<SparseMatrix>> {
    gen_banded(count, &BandedConfig::default(), seed)
}

pub fn gen_banded(count: usize, cfg: &BandedConfig, seed: u64) -> Result<Vec<SparseMatrix>> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let n = cfg.n;
    let prob: Vec<f64> = (0..n)
        .map(|d| cfg.p0 * (-(d as f64 / cfg.sigma).powi(2)).exp())
        .collect();
    let mut r = rng::seeded_rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut accepted = None;
        for _ in 0..cfg.max_attempts {
            let mut t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
            for i in 0..n {
                for j in i + 1..n {
                    if r.gen::<f64>() < prob[j - i] {
                        t.push((i, j, 1.0));
                        t.push((j, i, 1.0));
                    }
                }
            }
            let a = SparseMatrix::from_triplets(n, &t)?;
            if cfg.filter.accepts(&a) {
                accepted = Some(a);
                break;
            }
        }
        out.push(accepted.ok_or(Error::RejectionBudget(cfg.max_attempts))?);
    }
    Ok(out)
}

/// Entries below this magnitude count as zero when screening windows.
pub const WINDOW_ZERO_TOL: f64 = 1e-6;

/// Non-overlapping `window x window` blocks along the diagonal of `a`.
///
/// Each block is symmetrized from its upper triangle and scaled so its largest
/// magnitude is one. Blocks whose entries are all below [`WINDOW_ZERO_TOL`]
/// are dropped, then `filter` is applied. A trailing partial block is ignored.
pub fn extract_submatrices(
    a: &SparseMatrix,
    window: usize,
    filter: &MatrixFilter,
) -> Result<Vec<SparseMatrix>> {
    if window == 0 {
        return Err(Error::InvalidParameter("window must be positive".into()));
    }
    let blocks = a.dim() / window;
    let mut per_block: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); blocks];
    for (i, j, v) in a.triplets() {
        let (bi, bj) = (i / window, j / window);
        if bi == bj && bi < blocks && i <= j {
            let (li, lj) = (i - bi * window, j - bi * window);
            per_block[bi].push((li, lj, v));
            if li != lj {
                per_block[bi].push((lj, li, v));
            }
        }
    }
    let mut out = Vec::new();
    for t in per_block {
        let m = SparseMatrix::from_triplets(window, &t)?;
        let max = m.max_abs();
        if max < WINDOW_ZERO_TOL {
            continue;
        }
        let m = m.scaled(1.0 / max);
        if filter.accepts(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidData("no window passed the filters".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset1_properties() {
        let mats = gen_dataset1(60, 7).unwrap();
        let mut mean_sparsity = 0.0;
        for a in &mats {
            assert_eq!(a.dim(), 30);
            assert!(a.is_symmetric());
            assert!((0..30).all(|i| a.get(i, i) == 1.0));
            assert!(a.triplets().iter().all(|t| t.2 == 1.0));
            let det = a.determinant();
            assert!((0.001..=50.0).contains(&det), "det {det}");
            assert!(a.sparsity() <= 0.96);
            mean_sparsity += a.sparsity() / mats.len() as f64;
        }
        assert!((0.75..=0.90).contains(&mean_sparsity), "{mean_sparsity}");
    }

    #[test]
    fn dataset1_seeded() {
        assert_eq!(gen_dataset1(3, 1).unwrap(), gen_dataset1(3, 1).unwrap());
        assert_ne!(gen_dataset1(3, 1).unwrap(), gen_dataset1(3, 2).unwrap());
        assert!(gen_dataset1(0, 1).is_err());
    }

    #[test]
    fn impossible_filter_exhausts_budget() {
        let cfg = BandedConfig {
            n: 6,
            filter: MatrixFilter {
                max_sparsity: 0.0,
                ..MatrixFilter::default()
            },
            max_attempts: 20,
            ..BandedConfig::default()
        };
        assert!(matches!(gen_banded(1, &cfg, 0), Err(Error::RejectionBudget(20))));
    }

    #[test]
    fn identity_windows() {
        let w = extract_submatrices(&SparseMatrix::identity(90), 30, &MatrixFilter::none()).unwrap();
        assert_eq!(w.len(), 3);
        assert!(w.iter().all(|m| *m == SparseMatrix::identity(30)));
        // the identity is sparser than the default 96% cap
        assert!(extract_submatrices(&SparseMatrix::identity(90), 30, &MatrixFilter::default()).is_err());
    }

    #[test]
    fn windows_rescaled_symmetrized_and_screened() {
        // block 0: upper entry 4 at (0, 1), a conflicting lower entry ignored
        // block 1: only tiny values, dropped
        let t = vec![
            (0, 0, 1.0),
            (1, 1, 2.0),
            (0, 1, 4.0),
            (1, 0, -7.0),
            (2, 2, 1e-9),
            (3, 3, 1e-8),
            (4, 4, 3.0),
        ];
        let a = SparseMatrix::from_triplets(5, &t).unwrap();
        let w = extract_submatrices(&a, 2, &MatrixFilter::none()).unwrap();
        assert_eq!(w.len(), 1);
        let m = &w[0];
        assert!(m.is_symmetric());
        assert_eq!(m.max_abs(), 1.0);
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 1.0);
        assert_eq!(m.get(0, 0), 0.25);
    }
}
