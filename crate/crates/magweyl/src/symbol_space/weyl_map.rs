//! The coordinate change Υ between (midpoint, separation) and (x, y) on the grid,
//! and the partial Fourier transform from momenta to separations.
//!
//! Per axis, a column of separation m is evaluated at the midpoint a + m/2 on the
//! periodic grid (odd m use a spectral half-step), then stored at (a, a + m mod n).
//! The Nyquist separation −n/2 reaches each unordered pair {a, a + n/2} twice and is
//! split symmetrically between K[a, b] and K[b, a]. Every step is invertible, so Υ
//! is a bijection of grid arrays.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::fourier::{apply_axis, AxisDft};
use super::grid::BoxGrid;
use crate::error::{MagweylError, Result};
use crate::linalg::C64;

struct HalfShift {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    phase: Vec<C64>,
}

impl HalfShift {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let phase = (0..n)
            .map(|k| {
                if 2 * k == n {
                    C64::new(1.0, 0.0)
                } else {
                    let ks = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
                    C64::from_polar(1.0, PI * ks / n as f64)
                }
            })
            .collect();
        HalfShift { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n), phase }
    }

    /// g(a) ← g(a + ½) (or g(a − ½) when `back`).
    fn apply(&self, g: &mut [C64], back: bool) {
        self.fwd.process(g);
        for (v, p) in g.iter_mut().zip(&self.phase) {
            *v *= if back { p.conj() } else { *p };
        }
        self.inv.process(g);
        let s = 1.0 / self.n as f64;
        for v in g.iter_mut() {
            *v *= s;
        }
    }
}

fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

// s[a * n + m] (midpoint a, separation m) → k[a * n + b]
fn forward_slab(s: &[C64], k: &mut [C64], half: &HalfShift) {
    let n = half.n;
    let hn = (n / 2) as isize;
    let mut c = vec![C64::new(0.0, 0.0); n];
    let mut g = vec![C64::new(0.0, 0.0); n];
    for m in 0..n {
        let ms = m as isize - hn;
        for a in 0..n {
            c[a] = s[a * n + m];
        }
        if ms % 2 == 0 {
            let sh = ms / 2;
            for a in 0..n {
                g[a] = c[wrap(a as isize + sh, n)];
            }
        } else {
            let sh = (ms - 1) / 2;
            for a in 0..n {
                g[a] = c[wrap(a as isize + sh, n)];
            }
            half.apply(&mut g, false);
        }
        if ms == -hn {
            for a in 0..n / 2 {
                let b = a + n / 2;
                let (sum, diff) = (g[a] + g[b], g[a] - g[b]);
                let i = C64::new(0.0, 1.0);
                k[a * n + b] = 0.5 * (sum + i * diff);
                k[b * n + a] = 0.5 * (sum - i * diff);
            }
        } else {
            for a in 0..n {
                k[a * n + wrap(a as isize + ms, n)] = g[a];
            }
        }
    }
}

fn inverse_slab(k: &[C64], s: &mut [C64], half: &HalfShift) {
    let n = half.n;
    let hn = (n / 2) as isize;
    let mut g = vec![C64::new(0.0, 0.0); n];
    for m in 0..n {
        let ms = m as isize - hn;
        if ms == -hn {
            let i = C64::new(0.0, 1.0);
            for a in 0..n / 2 {
                let b = a + n / 2;
                let sum = k[a * n + b] + k[b * n + a];
                let diff = (k[a * n + b] - k[b * n + a]) / i;
                g[a] = 0.5 * (sum + diff);
                g[b] = 0.5 * (sum - diff);
            }
        } else {
            for a in 0..n {
                g[a] = k[a * n + wrap(a as isize + ms, n)];
            }
        }
        let sh = if ms % 2 == 0 {
            ms / 2
        } else {
            half.apply(&mut g, true);
            (ms - 1) / 2
        };
        for a in 0..n {
            s[a * n + m] = g[wrap(a as isize - sh, n)];
        }
    }
}

// Apply a slab map to every (axis, d + axis) plane of a rank-2d array.
fn for_each_plane<F>(data: &mut [C64], n: usize, d: usize, axis: usize, f: F)
where
    F: Fn(&[C64], &mut [C64]),
{
    let rank = 2 * d;
    let sa = n.pow((rank - 1 - axis) as u32);
    let sm = n.pow((d - 1 - axis) as u32);
    let mut slab = vec![C64::new(0.0, 0.0); n * n];
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for base in 0..data.len() {
        if !(base / sa).is_multiple_of(n) || !(base / sm).is_multiple_of(n) {
            continue;
        }
        for a in 0..n {
            for m in 0..n {
                slab[a * n + m] = data[base + a * sa + m * sm];
            }
        }
        f(&slab, &mut out);
        for a in 0..n {
            for m in 0..n {
                data[base + a * sa + m * sm] = out[a * n + m];
            }
        }
    }
}

fn check_len(g: &BoxGrid, len: usize) -> Result<()> {
    let want = g.len() * g.len();
    if len != want {
        return Err(MagweylError::GridMismatch(format!("expected {want} samples, got {len}")));
    }
    Ok(())
}

/// (ΥF)(x, y) = (2π)^{−d/2} F((x + y)/2, y − x) for F sampled on (position, separation) nodes.
pub fn upsilon(input: &[C64], grid: &BoxGrid) -> Result<Vec<C64>> {
    check_len(grid, input.len())?;
    let mut data = input.to_vec();
    upsilon_in_place(&mut data, grid);
    let c = (2.0 * PI).powf(-(grid.d as f64) / 2.0);
    data.iter_mut().for_each(|v| *v *= c);
    Ok(data)
}

pub fn upsilon_inverse(input: &[C64], grid: &BoxGrid) -> Result<Vec<C64>> {
    check_len(grid, input.len())?;
    let mut data = input.to_vec();
    upsilon_inverse_in_place(&mut data, grid);
    let c = (2.0 * PI).powf(grid.d as f64 / 2.0);
    data.iter_mut().for_each(|v| *v *= c);
    Ok(data)
}

pub(crate) fn upsilon_in_place(data: &mut [C64], grid: &BoxGrid) {
    let half = HalfShift::new(grid.n);
    for axis in 0..grid.d {
        for_each_plane(data, grid.n, grid.d, axis, |s, k| forward_slab(s, k, &half));
    }
}

pub(crate) fn upsilon_inverse_in_place(data: &mut [C64], grid: &BoxGrid) {
    let half = HalfShift::new(grid.n);
    for axis in 0..grid.d {
        for_each_plane(data, grid.n, grid.d, axis, |k, s| inverse_slab(k, s, &half));
    }
}

/// (1 ⊗ F_*): momentum slots → separation slots, (2π)^{−d/2}Σ_l (π/L)^d e^{−i⟨ξ_l, v⟩}.
pub(crate) fn momentum_to_separation(data: &mut [C64], grid: &BoxGrid) {
    let (n, d, h, dxi) = (grid.n, grid.d, grid.spacing(), grid.dual_spacing());
    let dft = AxisDft::new(n, -1.0, grid.separation_node(0), h, grid.momentum_node(0), dxi, dxi / (2.0 * PI).sqrt());
    for ax in 0..d {
        apply_axis(data, n, 2 * d, d + ax, &dft);
    }
}

pub(crate) fn separation_to_momentum(data: &mut [C64], grid: &BoxGrid) {
    let (n, d, h, dxi) = (grid.n, grid.d, grid.spacing(), grid.dual_spacing());
    let dft = AxisDft::new(n, 1.0, grid.momentum_node(0), dxi, grid.separation_node(0), h, h / (2.0 * PI).sqrt());
    for ax in 0..d {
        apply_axis(data, n, 2 * d, d + ax, &dft);
    }
}
