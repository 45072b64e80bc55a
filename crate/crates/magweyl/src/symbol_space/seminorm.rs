use super::symbol::Symbol;
use crate::error::{MagweylError, Result};
use crate::field_geometry::{japanese, multi_indices};
use crate::linalg::C64;

// Central difference along `axis` of a rank-2d array; entries within `margin` of
// the edge on that axis become invalid.
fn diff_axis(data: &[C64], n: usize, rank: usize, axis: usize, step: f64) -> Vec<C64> {
    let stride = n.pow((rank - axis - 1) as u32);
    let mut out = vec![C64::new(0.0, 0.0); data.len()];
    let inv = 0.5 / step;
    for (i, o) in out.iter_mut().enumerate() {
        let k = (i / stride) % n;
        if k == 0 || k + 1 == n {
            continue;
        }
        *o = (data[i + stride] - data[i - stride]) * inv;
    }
    out
}

/// ∂_x^a ∂_ξ^α F by nested second-order central differences, with the per-axis
/// margin that stays valid.
fn derivative(f: &Symbol, a: &[usize], alpha: &[usize]) -> (Vec<C64>, Vec<usize>) {
    let g = f.grid().position;
    let (n, d) = (g.n, g.d);
    let mut data = f.values().to_vec();
    let mut margin = vec![0; 2 * d];
    let steps: Vec<(usize, f64)> = a
        .iter()
        .map(|&k| (k, g.spacing()))
        .chain(alpha.iter().map(|&k| (k, g.dual_spacing())))
        .collect();
    for (axis, (k, step)) in steps.into_iter().enumerate() {
        for _ in 0..k {
            data = diff_axis(&data, n, 2 * d, axis, step);
            margin[axis] += 1;
        }
    }
    (data, margin)
}

fn check_stencil(f: &Symbol, m1: usize, m2: usize) -> Result<()> {
    let n = f.grid().n();
    if 2 * m1.max(m2) >= n {
        return Err(MagweylError::GridTooSmall(format!("order ({m1}, {m2}) needs more than {n} points per axis")));
    }
    Ok(())
}

/// Paper weight ν^p_{m1,m2}(F) = sup ⟨ξ⟩^{−p} max_{|a|=m1,|α|=m2} |∂_x^a ∂_ξ^α F| on interior nodes.
pub fn nu(f: &Symbol, p: f64, m1: usize, m2: usize) -> Result<f64> {
    check_stencil(f, m1, m2)?;
    let g = f.grid().position;
    let (n, d) = (g.n, g.d);
    let m = g.len();
    let weights: Vec<f64> = (0..m).map(|q| japanese(&g.momentum(q)).powf(-p)).collect();
    let mut best: f64 = 0.0;
    for a in multi_indices(d, m1) {
        for alpha in multi_indices(d, m2) {
            let (data, margin) = derivative(f, &a, &alpha);
            'entries: for (i, v) in data.iter().enumerate() {
                let mut r = i;
                for &mg in margin.iter().rev() {
                    let k = r % n;
                    r /= n;
                    if k < mg || k + mg >= n {
                        continue 'entries;
                    }
                }
                best = best.max(v.norm() * weights[i % m]);
            }
        }
    }
    Ok(best)
}

/// Hörmander seminorm of order p: sup ⟨ξ⟩^{−p+m2} max |∂_x^a ∂_ξ^α F|, i.e. ν^{p−m2}_{m1,m2}.
pub fn hormander_seminorm(f: &Symbol, p: f64, m1: usize, m2: usize) -> Result<f64> {
    nu(f, p - m2 as f64, m1, m2)
}

/// ρ^p_{m1; m0, m2} = max_{n1 ≤ m1} max_{m0 ≤ n2 ≤ m0 + m2} ν^p_{n1, n2}.
pub fn rho(f: &Symbol, p: f64, m1: usize, m0: usize, m2: usize) -> Result<f64> {
    let mut best: f64 = 0.0;
    for n1 in 0..=m1 {
        for n2 in m0..=m0 + m2 {
            best = best.max(nu(f, p, n1, n2)?);
        }
    }
    Ok(best)
}

/// min over |ξ| ≥ R of |F(x, ξ)| / ⟨ξ⟩^p.
pub fn ellipticity_margin(f: &Symbol, p: f64, r: f64) -> Result<f64> {
    let g = f.grid().position;
    let m = g.len();
    let mut best = f64::INFINITY;
    for q in 0..m {
        let xi = g.momentum(q);
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < r {
            continue;
        }
        let w = japanese(&xi).powf(-p);
        for pos in 0..m {
            best = best.min(f.at(pos, q).norm() * w);
        }
    }
    if best.is_infinite() {
        return Err(MagweylError::InvalidArgument(format!("no momentum nodes with |ξ| ≥ {r}")));
    }
    Ok(best)
}
