use crate::error::{MagweylError, Result};
use crate::field_geometry::VectorPotential;
use crate::linalg::C64;
use crate::symbol_space::{BoxGrid, StateVector};

fn lattice_shift(grid: &BoxGrid, x: &[f64]) -> Result<Vec<i64>> {
    if x.len() != grid.d {
        return Err(MagweylError::DimensionMismatch { expected: grid.d, found: x.len() });
    }
    let h = grid.spacing();
    let mut s = Vec::with_capacity(x.len());
    for &xi in x {
        let k = xi / h;
        let r = k.round();
        if (k - r).abs() > 1e-9 * r.abs().max(1.0) {
            return Err(MagweylError::OffLattice(x.to_vec()));
        }
        s.push(r as i64);
    }
    Ok(s)
}

fn shifted_index(grid: &BoxGrid, k: usize, shift: &[i64]) -> Option<usize> {
    let idx = grid.unflatten(k);
    let mut out = Vec::with_capacity(idx.len());
    for (&i, &s) in idx.iter().zip(shift) {
        let j = i as i64 + s;
        if j < 0 || j >= grid.n as i64 {
            return None;
        }
        out.push(j as usize);
    }
    Some(grid.flatten(&out))
}

fn weyl_impl(a: Option<&VectorPotential>, x: &[f64], xi: &[f64], f: &StateVector) -> Result<StateVector> {
    let grid = *f.grid();
    let shift = lattice_shift(&grid, x)?;
    if xi.len() != grid.d {
        return Err(MagweylError::DimensionMismatch { expected: grid.d, found: xi.len() });
    }
    if let Some(a) = a {
        if a.dim() != grid.d {
            return Err(MagweylError::DimensionMismatch { expected: grid.d, found: a.dim() });
        }
    }
    let half: f64 = -0.5 * xi.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
    let vals = f.values();
    let out = (0..grid.len())
        .map(|k| {
            let Some(src) = shifted_index(&grid, k, &shift) else {
                return C64::new(0.0, 0.0);
            };
            let z = grid.point(k);
            let ph = half - xi.iter().zip(&z).map(|(p, q)| p * q).sum::<f64>();
            let mut v = C64::from_polar(1.0, ph) * vals[src];
            if let Some(a) = a {
                let zx: Vec<f64> = z.iter().zip(x).map(|(p, q)| p + q).collect();
                v *= C64::from_polar(1.0, -a.circulation_unchecked(&z, &zx));
            }
            v
        })
        .collect();
    StateVector::new(grid, out)
}

/// (W(x, ξ)f)(z) = e^{−(i/2)⟨ξ,x⟩} e^{−i⟨ξ,z⟩} f(z + x); samples shifted out of the box are zero.
pub fn weyl_system(x: &[f64], xi: &[f64], f: &StateVector) -> Result<StateVector> {
    weyl_impl(None, x, xi, f)
}

/// W^A(x, ξ)f = Λ^A(Q, Q + x) W(x, ξ)f.
pub fn magnetic_weyl_system(a: &VectorPotential, x: &[f64], xi: &[f64], f: &StateVector) -> Result<StateVector> {
    weyl_impl(Some(a), x, xi, f)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field_geometry::{flux_triangle, MagneticField};

    fn grid() -> BoxGrid {
        BoxGrid::new(2, 4.0, 16).unwrap()
    }

    #[test]
    fn identity_shift_and_unitarity() {
        let g = grid();
        let h = g.spacing();
        let f = StateVector::gaussian(g, &[0.2, -0.1], 0.4, &[0.5, 0.0]);
        let w0 = weyl_system(&[0.0, 0.0], &[0.0, 0.0], &f).unwrap();
        assert_eq!(w0.values(), f.values());

        let s = weyl_system(&[2.0 * h, -h], &[0.0, 0.0], &f).unwrap();
        let k = g.flatten(&[5, 9]);
        let src = g.flatten(&[7, 8]);
        assert_eq!(s.values()[k], f.values()[src]);

        let w = weyl_system(&[h, -h], &[0.7, -1.1], &f).unwrap();
        assert!((w.norm() - f.norm()).abs() < 1e-12 * f.norm());
        assert!(matches!(weyl_system(&[0.3 * h, 0.0], &[0.0, 0.0], &f), Err(MagweylError::OffLattice(_))));
    }

    #[test]
    fn magnetic_reductions() {
        let g = grid();
        let h = g.spacing();
        let f = StateVector::gaussian(g, &[0.0, 0.0], 1.0, &[0.0, 0.3]);
        let zero = VectorPotential::transversal(Arc::new(MagneticField::zero(2)));
        let a = magnetic_weyl_system(&zero, &[h, -2.0 * h], &[0.4, 0.1], &f).unwrap();
        let b = weyl_system(&[h, -2.0 * h], &[0.4, 0.1], &f).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);

        let pot = VectorPotential::transversal(Arc::new(MagneticField::constant_2d(1.3)));
        let m = magnetic_weyl_system(&pot, &[0.0, 0.0], &[0.4, 0.1], &f).unwrap();
        for (k, v) in m.values().iter().enumerate() {
            let z = g.point(k);
            let want = C64::from_polar(1.0, -(0.4 * z[0] + 0.1 * z[1])) * f.values()[k];
            assert!((v - want).norm() < 1e-14);
        }
    }

    #[test]
    fn translations_compose_up_to_flux() {
        // U(x)U(y)f(z) = Ω(z, z−x, z−x−y) U(x+y)f(z)
        let g = grid();
        let h = g.spacing();
        let field = Arc::new(MagneticField::constant_2d(0.9));
        let pot = VectorPotential::transversal(field.clone());
        let f = StateVector::gaussian(g, &[0.3, 0.1], 1.2, &[0.0, 0.0]);
        let x = [2.0 * h, -h];
        let y = [-h, 3.0 * h];
        let neg = |v: &[f64]| v.iter().map(|t| -t).collect::<Vec<_>>();
        let u = |s: &[f64], st: &StateVector| magnetic_weyl_system(&pot, &neg(s), &[0.0, 0.0], st).unwrap();
        let lhs = u(&x, &u(&y, &f));
        let xy = [x[0] + y[0], x[1] + y[1]];
        let rhs = u(&xy, &f);
        let mut checked = 0;
        for k in 0..g.len() {
            if rhs.values()[k].norm() < 1e-3 {
                continue;
            }
            let z = g.point(k);
            let z1: Vec<f64> = (0..2).map(|i| z[i] - x[i]).collect();
            if z1.iter().any(|t| t.abs() > g.half_width) {
                continue;
            }
            let z2: Vec<f64> = (0..2).map(|i| z[i] - xy[i]).collect();
            let phi = flux_triangle(&field, &z, &z1, &z2).unwrap();
            let want = C64::from_polar(1.0, -phi) * rhs.values()[k];
            assert!((lhs.values()[k] - want).norm() < 1e-12, "at {z:?}");
            checked += 1;
        }
        assert!(checked > 20);
    }
}
