//! Phase-space grids, symbols, Fourier conventions, seminorm estimators and the
//! kernel coordinate change Υ.

mod fourier;
mod grid;
mod io;
mod seminorm;
mod state;
mod symbol;
mod weyl_map;

pub use fourier::{fourier, Direction};
pub use grid::{symplectic_form, BoxGrid, PhaseSpaceGrid};
pub use io::{read_complex_bin, read_symbol, write_complex_bin, write_symbol, SymbolSidecar, SYMBOL_LAYOUT};
pub use seminorm::{ellipticity_margin, hormander_seminorm, nu, rho};
pub use state::StateVector;
pub use symbol::{standard_symbol, Symbol, SymbolSpec};
pub use weyl_map::{upsilon, upsilon_inverse};

pub(crate) use weyl_map::{momentum_to_separation, separation_to_momentum, upsilon_in_place, upsilon_inverse_in_place};

use crate::linalg::C64;

/// (1 ⊗ F_*)F: the momentum slot of a symbol transformed onto the separation nodes v_m = (m − n/2)h.
pub fn partial_fourier_star(f: &Symbol) -> Vec<C64> {
    let mut data = f.values().to_vec();
    momentum_to_separation(&mut data, &f.grid().position);
    data
}

/// Inverse of [`partial_fourier_star`].
pub fn partial_fourier_star_inverse(grid: &PhaseSpaceGrid, data: &[C64], order: f64) -> crate::Result<Symbol> {
    let mut v = data.to_vec();
    if v.len() != grid.len() {
        return Err(crate::MagweylError::GridMismatch(format!("expected {} samples, got {}", grid.len(), v.len())));
    }
    separation_to_momentum(&mut v, &grid.position);
    Symbol::new(*grid, v, order, "computed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_io_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = PhaseSpaceGrid::from_params(2, 3.0, 8).unwrap();
        let f = standard_symbol(&SymbolSpec::Ps { s: 1.5 }, &g).unwrap().scale(C64::new(1.0, 0.25));
        let stem = dir.path().join("sym");
        write_symbol(&stem, &f).unwrap();
        let back = read_symbol(&stem).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.order(), 1.5);
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap()).unwrap();
        assert_eq!(side["layout"], SYMBOL_LAYOUT);
        assert_eq!(side["L"], 3.0);
    }

    #[test]
    fn partial_transform_of_x_only_symbol_is_a_delta() {
        let g = PhaseSpaceGrid::from_params(2, 3.0, 8).unwrap();
        let f = standard_symbol(&SymbolSpec::Qs { s: 1.0 }, &g).unwrap();
        let t = partial_fourier_star(&f);
        let m = g.position.len();
        let zero_sep = g.position.flatten(&[4, 4]);
        let scale = (g.position.dual_spacing() * 8.0 / (2.0 * std::f64::consts::PI).sqrt()).powi(2);
        for p in 0..m {
            for q in 0..m {
                let want = if q == zero_sep { f.at(p, 0) * scale } else { C64::new(0.0, 0.0) };
                assert!((t[p * m + q] - want).norm() < 1e-12);
            }
        }
        let back = partial_fourier_star_inverse(&g, &t, 0.0).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-12);
    }
}
