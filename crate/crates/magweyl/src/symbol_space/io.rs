use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{BoxGrid, PhaseSpaceGrid};
use super::symbol::Symbol;
use crate::error::{MagweylError, Result};
use crate::linalg::C64;

pub const SYMBOL_LAYOUT: &str = "row-major position-then-momentum";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSidecar {
    pub d: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
    pub order: f64,
    pub layout: String,
    pub provenance: String,
}

/// Little-endian (re, im) f64 pairs.
pub fn write_complex_bin(path: &Path, values: &[C64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 16);
    for v in values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_complex_bin(path: &Path) -> Result<Vec<C64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 16 != 0 {
        return Err(MagweylError::InvalidArgument(format!("{} is not a complex array", path.display())));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect())
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

/// Writes `<stem>.bin` and `<stem>.json`.
pub fn write_symbol(stem: &Path, f: &Symbol) -> Result<()> {
    let (bin, json) = paths(stem);
    let g = f.grid().position;
    let side = SymbolSidecar {
        d: g.d,
        half_width: g.half_width,
        n: g.n,
        order: f.order(),
        layout: SYMBOL_LAYOUT.into(),
        provenance: f.provenance().into(),
    };
    write_complex_bin(&bin, f.values())?;
    fs::write(json, serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_symbol(stem: &Path) -> Result<Symbol> {
    let (bin, json) = paths(stem);
    let side: SymbolSidecar = serde_json::from_str(&fs::read_to_string(json)?)?;
    if side.layout != SYMBOL_LAYOUT {
        return Err(MagweylError::InvalidArgument(format!("unsupported layout `{}`", side.layout)));
    }
    let grid = PhaseSpaceGrid::new(BoxGrid::new(side.d, side.half_width, side.n)?);
    Symbol::new(grid, read_complex_bin(&bin)?, side.order, side.provenance)
}
