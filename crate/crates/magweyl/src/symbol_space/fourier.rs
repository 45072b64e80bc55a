use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::grid::BoxGrid;
use crate::error::{MagweylError, Result};
use crate::linalg::C64;

/// The five transforms: F, F⁻ (position → momentum), F_*, F_*⁻ (momentum → position)
/// and the symplectic transform tilde-F on phase space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    F,
    FInv,
    FStar,
    FStarInv,
    TildeF,
}

/// One-axis sum out_j = scale · Σ_k e^{s·i·u_j·w_k} in_k between offset grids
/// u_j = u0 + j du, w_k = w0 + k dw with du·dw = 2π/n, done by FFT.
pub(crate) struct AxisDft {
    n: usize,
    pre: Vec<C64>,
    post: Vec<C64>,
    fft: Arc<dyn Fft<f64>>,
}

impl AxisDft {
    pub(crate) fn new(n: usize, sign: f64, u0: f64, du: f64, w0: f64, dw: f64, scale: f64) -> Self {
        debug_assert!((du * dw * n as f64 - 2.0 * PI).abs() < 1e-9);
        let mut planner = FftPlanner::new();
        let fft = if sign < 0.0 { planner.plan_fft_forward(n) } else { planner.plan_fft_inverse(n) };
        let pre = (0..n).map(|k| C64::from_polar(1.0, sign * u0 * k as f64 * dw)).collect();
        let post = (0..n)
            .map(|j| C64::from_polar(scale, sign * (u0 * w0 + j as f64 * du * w0)))
            .collect();
        AxisDft { n, pre, post, fft }
    }

    fn apply(&self, buf: &mut [C64], scratch: &mut [C64]) {
        for (b, p) in buf.iter_mut().zip(&self.pre) {
            *b *= p;
        }
        self.fft.process_with_scratch(buf, scratch);
        for (b, p) in buf.iter_mut().zip(&self.post) {
            *b *= p;
        }
    }
}

/// Apply `dft` along `axis` of a row-major array with `rank` axes of length n.
pub(crate) fn apply_axis(data: &mut [C64], n: usize, rank: usize, axis: usize, dft: &AxisDft) {
    debug_assert_eq!(dft.n, n);
    let stride = n.pow((rank - axis - 1) as u32);
    let block = stride * n;
    let mut line = vec![C64::new(0.0, 0.0); n];
    let mut scratch = vec![C64::new(0.0, 0.0); dft.fft.get_inplace_scratch_len()];
    for chunk in data.chunks_mut(block) {
        for inner in 0..stride {
            for (k, v) in line.iter_mut().enumerate() {
                *v = chunk[inner + k * stride];
            }
            dft.apply(&mut line, &mut scratch);
            for (k, v) in line.iter().enumerate() {
                chunk[inner + k * stride] = *v;
            }
        }
    }
}

fn position_to_momentum(g: &BoxGrid, sign: f64) -> AxisDft {
    let (h, dxi, n) = (g.spacing(), g.dual_spacing(), g.n);
    AxisDft::new(n, sign, g.momentum_node(0), dxi, g.node(0), h, h / (2.0 * PI).sqrt())
}

fn momentum_to_position(g: &BoxGrid, sign: f64) -> AxisDft {
    let (h, dxi, n) = (g.spacing(), g.dual_spacing(), g.n);
    AxisDft::new(n, sign, g.node(0), h, g.momentum_node(0), dxi, dxi / (2.0 * PI).sqrt())
}

/// Discrete version of the chosen transform with the (2π)^{−d/2} (tilde-F: (2π)^{−d}) normalisation.
///
/// F, F⁻ take samples on the position nodes and return samples on the momentum nodes;
/// F_*, F_*⁻ go the other way. tilde-F acts on phase-space arrays (position-major layout).
pub fn fourier(direction: Direction, grid: &BoxGrid, input: &[C64]) -> Result<Vec<C64>> {
    let (d, n) = (grid.d, grid.n);
    let expected = if direction == Direction::TildeF { grid.len() * grid.len() } else { grid.len() };
    if input.len() != expected {
        return Err(MagweylError::GridMismatch(format!("expected {expected} samples, got {}", input.len())));
    }
    let mut data = input.to_vec();
    match direction {
        Direction::F | Direction::FInv => {
            let dft = position_to_momentum(grid, if direction == Direction::F { -1.0 } else { 1.0 });
            for ax in 0..d {
                apply_axis(&mut data, n, d, ax, &dft);
            }
            Ok(data)
        }
        Direction::FStar | Direction::FStarInv => {
            let dft = momentum_to_position(grid, if direction == Direction::FStar { -1.0 } else { 1.0 });
            for ax in 0..d {
                apply_axis(&mut data, n, d, ax, &dft);
            }
            Ok(data)
        }
        Direction::TildeF => {
            // (2π)^{−d} ∫ e^{i⟨ξ,y⟩ − i⟨η,x⟩} F(y, η): y-slots become ξ, η-slots become x
            let to_xi = position_to_momentum(grid, 1.0);
            let to_x = momentum_to_position(grid, -1.0);
            for ax in 0..d {
                apply_axis(&mut data, n, 2 * d, ax, &to_xi);
                apply_axis(&mut data, n, 2 * d, d + ax, &to_x);
            }
            let m = grid.len();
            let mut out = vec![C64::new(0.0, 0.0); m * m];
            for a in 0..m {
                for b in 0..m {
                    out[b * m + a] = data[a * m + b];
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(len: usize) -> Vec<C64> {
        (0..len).map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos() - 0.3)).collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(u, v)| u * v).sum()
    }

    // Direct double loop with the continuum signs.
    fn brute(direction: Direction, g: &BoxGrid, input: &[C64]) -> Vec<C64> {
        let m = g.len();
        let c = (2.0 * PI).powf(-(g.d as f64) / 2.0);
        let (h, dxi) = (g.cell_volume(), g.dual_spacing().powi(g.d as i32));
        let xs: Vec<Vec<f64>> = (0..m).map(|k| g.point(k)).collect();
        let ps: Vec<Vec<f64>> = (0..m).map(|k| g.momentum(k)).collect();
        match direction {
            Direction::F | Direction::FInv => {
                let s = if direction == Direction::F { -1.0 } else { 1.0 };
                (0..m)
                    .map(|l| (0..m).map(|k| C64::from_polar(c * h, s * dot(&ps[l], &xs[k])) * input[k]).sum())
                    .collect()
            }
            Direction::FStar | Direction::FStarInv => {
                let s = if direction == Direction::FStar { -1.0 } else { 1.0 };
                (0..m)
                    .map(|k| (0..m).map(|l| C64::from_polar(c * dxi, s * dot(&ps[l], &xs[k])) * input[l]).sum())
                    .collect()
            }
            Direction::TildeF => {
                let mut out = vec![C64::new(0.0, 0.0); m * m];
                for xa in 0..m {
                    for xib in 0..m {
                        let mut acc = C64::new(0.0, 0.0);
                        for y in 0..m {
                            for eta in 0..m {
                                let ph = dot(&ps[xib], &xs[y]) - dot(&ps[eta], &xs[xa]);
                                acc += C64::from_polar(1.0, ph) * input[y * m + eta];
                            }
                        }
                        out[xa * m + xib] = acc * (c * c * h * dxi);
                    }
                }
                out
            }
        }
    }

    #[test]
    fn transforms_match_direct_sums() {
        let g = BoxGrid::new(2, 3.0, 8).unwrap();
        for dir in [Direction::F, Direction::FInv, Direction::FStar, Direction::FStarInv] {
            let x = sample(g.len());
            let fast = fourier(dir, &g, &x).unwrap();
            let slow = brute(dir, &g, &x);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12, "{dir:?}");
            }
        }
        let x = sample(g.len() * g.len());
        let fast = fourier(Direction::TildeF, &g, &x).unwrap();
        let slow = brute(Direction::TildeF, &g, &x);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
        // tilde-F is an involution on the grid
        let back = fourier(Direction::TildeF, &g, &fast).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn inversion_pairs() {
        let g = BoxGrid::new(2, 5.0, 16).unwrap();
        let x = sample(g.len());
        let fx = fourier(Direction::F, &g, &x).unwrap();
        let back = fourier(Direction::FStarInv, &g, &fx).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
        let gx = fourier(Direction::FStar, &g, &x).unwrap();
        let back = fourier(Direction::FInv, &g, &gx).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_is_fixed_point() {
        let g = BoxGrid::new(2, 8.0, 64).unwrap();
        let x: Vec<C64> = (0..g.len())
            .map(|k| {
                let p = g.point(k);
                C64::new((-0.5 * dot(&p, &p)).exp(), 0.0)
            })
            .collect();
        let fx = fourier(Direction::F, &g, &x).unwrap();
        for (l, v) in fx.iter().enumerate() {
            let xi = g.momentum(l);
            assert!((v - (-0.5 * dot(&xi, &xi)).exp()).norm() < 1e-8);
        }
        assert!(fourier(Direction::F, &g, &x[1..]).is_err());
    }
}
