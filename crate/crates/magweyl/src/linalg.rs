//! Dense complex matrix helpers: products, norms, power iteration, Hermitian eigensolver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

const POWER_SEED: u64 = 0x6d61_6777_6579_6c21;

/// `a * b` through the blocked complex GEMM kernel (single-threaded, fixed summation order).
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = CMat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: Complex64 is repr(C) {re, im}, layout-identical to [f64; 2]; all
    // three buffers are column-major with the strides given below and do not alias.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// Product of a chain of matrices, left to right.
pub fn matmul_chain(factors: &[&CMat]) -> CMat {
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = matmul(&acc, f);
    }
    acc
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// max |M − M†| entrywise.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Operator 2-norm estimate of a linear map via power iteration on A†A.
///
/// Stops after `max_iter` sweeps or when the relative change of the Rayleigh
/// quotient drops below `rtol`.
pub fn power_norm_with<F, G>(dim: usize, apply: F, apply_adj: G, max_iter: usize, rtol: f64) -> f64
where
    F: Fn(&CVec) -> CVec,
    G: Fn(&CVec) -> CVec,
{
    if dim == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = CVec::from_fn(dim, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let nv = v.norm();
    v /= C64::from(nv);
    let mut last = 0.0;
    for it in 0..max_iter {
        let u = apply_adj(&apply(&v));
        let lam = u.norm();
        if lam == 0.0 {
            return 0.0;
        }
        v = u / C64::from(lam);
        if it > 0 && (lam - last).abs() <= rtol * lam {
            return lam.sqrt();
        }
        last = lam;
    }
    last.sqrt()
}

/// Power-iteration operator norm with the default budget (200 sweeps, rtol 1e-10).
pub fn op_norm(m: &CMat) -> f64 {
    let adj = m.adjoint();
    power_norm_with(m.ncols(), |v| m * v, |v| &adj * v, 200, 1e-10)
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Groups of ascending eigenvalues whose consecutive gaps are ≤ `rtol·max(1, |λ|)`,
/// keeping groups with at least `min_size` members. Returns (mean, size) per group.
pub fn degenerate_clusters(sorted: &[f64], rtol: f64, min_size: usize) -> Vec<(f64, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        let split = i == sorted.len() || sorted[i] - sorted[i - 1] > rtol * sorted[i].abs().max(1.0);
        if split {
            let group = &sorted[start..i];
            if group.len() >= min_size {
                out.push((group.iter().sum::<f64>() / group.len() as f64, group.len()));
            }
            start = i;
        }
    }
    out
}

/// Least-squares slope of ys against xs.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn gemm_matches_naive_product() {
        let a = sample(17, 1);
        let b = CMat::from_fn(17, 5, |i, j| C64::new(i as f64, -(j as f64)));
        let fast = matmul(&a, &b);
        let slow = &a * &b;
        assert!(max_abs(&(fast - slow)) < 1e-12);
    }

    #[test]
    fn power_norm_of_diagonal() {
        let d = CMat::from_diagonal(&CVec::from_vec(vec![
            C64::new(0.5, 0.0),
            C64::new(0.0, -3.0),
            C64::new(2.0, 0.0),
        ]));
        assert!((op_norm(&d) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn clusters_skip_isolated_values() {
        let ev = [0.5, 1.0, 1.0 + 1e-9, 1.0 + 2e-9, 1.7, 3.0, 3.0, 3.0, 3.0, 4.2];
        let c = degenerate_clusters(&ev, 1e-6, 3);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].1, 3);
        assert!((c[0].0 - 1.0).abs() < 1e-8);
        assert_eq!(c[1], (3.0, 4));
    }

    #[test]
    fn eigen_reconstructs_hermitian_matrix() {
        let a = sample(12, 7);
        let h = &a + a.adjoint();
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMat::from_diagonal(&CVec::from_iterator(12, vals.iter().map(|&x| C64::from(x))));
        let back = &vecs * d * vecs.adjoint();
        assert!(max_abs(&(back - h)) < 1e-12);
    }
}
