//! Numerical kernels shared by every model: the `sgn` and top-k
//! nonlinearities, an SVD-backed Moore–Penrose pseudoinverse, the Gauss error
//! function and a seedable counter-based random stream.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense real matrix. Patterns are stored column-wise.
pub type RealMatrix = DMatrix<f64>;
/// Dense real column vector.
pub type RealVector = DVector<f64>;

/// Default relative singular-value cutoff for [`pseudoinverse`].
pub const DEFAULT_RCOND: f64 = 1e-10;

fn ensure_finite<'a>(values: impl IntoIterator<Item = &'a f64>, what: &'static str) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Elementwise sign with `sgn(0) = +1`.
pub fn sgn(v: &RealVector) -> Result<RealVector> {
    ensure_finite(v.iter(), "sgn input")?;
    Ok(v.map(sign_of))
}

/// Scalar sign used by all ±1 dynamics; zero maps to `+1`.
#[inline]
pub fn sign_of(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// k-winners-take-all: ones at the `k` largest entries, zeros elsewhere.
///
/// Ties are resolved in favour of the lower index, so the output is a pure
/// function of the input even for integer-valued drives.
pub fn topk(v: &RealVector, k: usize) -> Result<RealVector> {
    let n = v.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, len: n });
    }
    ensure_finite(v.iter(), "topk input")?;
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps lower indices first among equal values
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    let mut out = RealVector::zeros(n);
    for &i in &order[..k] {
        out[i] = 1.0;
    }
    Ok(out)
}

fn to_faer(m: &RealMatrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Moore–Penrose pseudoinverse through a thin SVD.
///
/// Singular values below `rcond * s_max` are treated as exact zeros. The SVD
/// is faer's; nalgebra's iteration can return an inaccurate factorisation for
/// sign matrices with clustered singular values.
pub fn pseudoinverse(m: &RealMatrix, rcond: f64) -> Result<RealMatrix> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    ensure_finite(m.iter(), "pseudoinverse input")?;
    let svd = to_faer(m).thin_svd().map_err(|_| Error::Decomposition { rows, cols })?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let s_max = (0..s.nrows()).map(|j| s[j]).fold(0.0_f64, f64::max);
    let cutoff = rcond * s_max;

    // M+ = V diag(1/s) U^T over the retained singular triplets
    let kept: Vec<usize> = (0..s.nrows()).filter(|&j| s[j] > cutoff && s[j] > 0.0).collect();
    let scaled_v = RealMatrix::from_fn(cols, kept.len(), |c, t| v[(c, kept[t])] / s[kept[t]]);
    let u_t = RealMatrix::from_fn(kept.len(), rows, |t, r| u[(r, kept[t])]);
    let pinv = scaled_v * u_t;
    ensure_finite(pinv.iter(), "pseudoinverse output")?;
    Ok(pinv)
}

/// Number of singular values above `rcond * s_max`.
pub fn numerical_rank(m: &RealMatrix, rcond: f64) -> Result<usize> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    ensure_finite(m.iter(), "rank input")?;
    let s = to_faer(m).singular_values().map_err(|_| Error::Decomposition { rows, cols })?;
    let s_max = s.iter().cloned().fold(0.0_f64, f64::max);
    Ok(s.iter().filter(|&&x| x > rcond * s_max && x > 0.0).count())
}

/// Gauss error function, accurate to ~1e-15 absolute.
///
/// Uses the everywhere-positive series
/// `erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (1*3*...*(2n+1))`,
/// which has no cancellation; beyond `|x| = 6` the result is `±1` to double
/// precision.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() || x == 0.0 {
        return x;
    }
    let ax = x.abs();
    if ax > 6.0 {
        return x.signum();
    }
    let x2 = ax * ax;
    let mut term = ax;
    let mut sum = ax;
    let mut n = 0.0_f64;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    let value = 2.0 / std::f64::consts::PI.sqrt() * (-x2).exp() * sum;
    value.min(1.0).copysign(x)
}

/// Mixes a sequence of words into one 64-bit seed (splitmix64 finaliser).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x243F_6A88_85A3_08D3;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

/// Seeded, counter-based random stream (ChaCha8).
///
/// A stream is identified by `(seed, stream)`; the same pair yields the same
/// sequence on any machine and under any thread count.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent sub-stream of the generator keyed by `seed`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn sign(&mut self) -> f64 {
        if self.rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Matrix of i.i.d. standard normal entries, filled column by column.
    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> RealMatrix {
        RealMatrix::from_fn(rows, cols, |_, _| self.normal())
    }

    /// Uniformly random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut self.rng);
        idx
    }

    /// `count` distinct indices from `0..n`, in the order drawn.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.rng, n, count).into_vec()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec(v: &[f64]) -> RealVector {
        RealVector::from_column_slice(v)
    }

    /// Composite Simpson rule for 2/sqrt(pi) * int_0^x exp(-y^2) dy.
    fn erf_quadrature(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let f = |y: f64| (-y * y).exp();
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn sgn_zero_is_positive() {
        let out = sgn(&vec(&[2.0, -0.1, 0.0])).unwrap();
        assert_eq!(out.as_slice(), &[1.0, -1.0, 1.0]);
        let out = sgn(&vec(&[0.5, 3.0])).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn sgn_rejects_nan() {
        assert!(sgn(&vec(&[1.0, f64::NAN])).is_err());
        assert!(sgn(&vec(&[f64::INFINITY])).is_err());
    }

    #[test]
    fn topk_examples() {
        let out = topk(&vec(&[0.3, 7.0, 2.5, 0.3]), 2).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
        let out = topk(&vec(&[1.0, 1.0, 0.5]), 2).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 1.0, 0.0]);
        // tie at the cut goes to the lower index
        let out = topk(&vec(&[0.2, 1.0, 0.2, 0.2]), 2).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 1.0, 0.0, 0.0]);
        let khot = vec(&[0.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(topk(&khot, 3).unwrap(), khot);
    }

    #[test]
    fn topk_range_checked() {
        assert!(topk(&vec(&[1.0, 2.0]), 0).is_err());
        assert!(topk(&vec(&[1.0, 2.0]), 3).is_err());
    }

    #[test]
    fn pinv_identity_and_diag() {
        let eye = RealMatrix::identity(4, 4);
        let p = pseudoinverse(&eye, DEFAULT_RCOND).unwrap();
        assert!((p - eye).amax() < 1e-14);

        let d = RealMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let p = pseudoinverse(&d, DEFAULT_RCOND).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
        assert!(p[(0, 1)].abs() < 1e-14 && p[(1, 0)].abs() < 1e-14 && p[(1, 1)].abs() < 1e-14);
    }

    #[test]
    fn pinv_moore_penrose_random() {
        let mut rng = RngStream::new(7);
        let m = rng.normal_matrix(5, 8);
        let p = pseudoinverse(&m, DEFAULT_RCOND).unwrap();
        assert!((&m * &p * &m - &m).amax() < 1e-8);
        assert!((&p * &m * &p - &p).amax() < 1e-8);
        let mp = &m * &p;
        assert!((&mp - mp.transpose()).amax() < 1e-8);
        let pm = &p * &m;
        assert!((&pm - pm.transpose()).amax() < 1e-8);
    }

    #[test]
    fn pinv_rank_deficient_sign_matrix() {
        // rank 2 with repeated rows; a too-tight SVD tolerance mis-converges here
        let m = RealMatrix::from_row_slice(
            7,
            3,
            &[1., -1., 1., 1., -1., 1., 1., -1., 1., 1., 1., 1., -1., -1., -1., -1., 1., -1., 1., -1., 1.],
        );
        let p = pseudoinverse(&m, DEFAULT_RCOND).unwrap();
        assert!((&m * &p * &m - &m).amax() < 1e-12);
        assert_eq!(numerical_rank(&m, DEFAULT_RCOND).unwrap(), 2);
    }

    #[test]
    fn pinv_rejects_empty() {
        assert!(matches!(pseudoinverse(&RealMatrix::zeros(0, 3), 1e-10), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn rank_counts_truncation() {
        let d = RealMatrix::from_diagonal(&vec(&[3.0, 1.0, 0.01]));
        assert_eq!(numerical_rank(&d, 1e-10).unwrap(), 3);
        assert_eq!(numerical_rank(&d, 0.1).unwrap(), 2);
    }

    #[test]
    fn erf_values() {
        assert_eq!(erf(0.0), 0.0);
        let x = std::f64::consts::FRAC_1_SQRT_2;
        assert!((erf(x) - 0.682_689_492_137_085_9).abs() < 1e-13);
        for i in 0..=120 {
            let x = -6.0 + 0.1 * i as f64;
            assert_eq!(erf(x), -erf(-x));
        }
    }

    #[test]
    fn erf_matches_quadrature() {
        for &x in &[0.05, 0.3, 0.7, 1.0, 1.5, 2.2, 3.0, 4.0, 5.5] {
            let q = erf_quadrature(x);
            assert!((erf(x) - q).abs() < 1e-12, "x = {x}: {} vs {q}", erf(x));
        }
    }

    #[test]
    fn streams_reproduce() {
        let a = RngStream::with_stream(11, 3).normal_matrix(6, 4);
        let b = RngStream::with_stream(11, 3).normal_matrix(6, 4);
        let c = RngStream::with_stream(11, 4).normal_matrix(6, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn seed_derivation_is_order_sensitive() {
        assert_eq!(derive_seed(&[1, 2, 3]), derive_seed(&[1, 2, 3]));
        assert_ne!(derive_seed(&[1, 2, 3]), derive_seed(&[1, 3, 2]));
    }
}
