//! gnuplot scripts next to the CSVs they plot. Scripts are written, never run.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use magweyl::linalg::ls_slope;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// eigenvalue index against value
    Spectra,
    /// log-log defect against shift, with the fitted slope
    Defect,
    /// one time series per (α, β)
    Moments,
    /// log error against grid size
    Convergence,
}

impl FromStr for PlotKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "spectra" => Ok(PlotKind::Spectra),
            "defect" => Ok(PlotKind::Defect),
            "moments" => Ok(PlotKind::Moments),
            "convergence" => Ok(PlotKind::Convergence),
            other => Err(CliError::Run(magweyl::MagweylError::UnknownKind(other.to_string()))),
        }
    }
}

fn read_rows(csv_path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>), CliError> {
    let mut rdr = csv::Reader::from_path(csv_path)?;
    let headers = rdr.headers()?.iter().map(str::to_string).collect();
    let rows = rdr.records().collect::<Result<Vec<_>, _>>()?;
    Ok((headers, rows))
}

fn numeric_column(rows: &[csv::StringRecord], i: usize) -> Result<Vec<f64>, CliError> {
    rows.iter()
        .map(|r| {
            r.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Config(format!("column {i} is not numeric")))
        })
        .collect()
}

/// Writes `<csv stem>.gp` and returns its path.
pub fn emit_plot_script(csv_path: &Path, kind: PlotKind) -> Result<PathBuf, CliError> {
    if !csv_path.is_file() {
        return Err(CliError::Config(format!("no CSV at {}", csv_path.display())));
    }
    let (headers, rows) = read_rows(csv_path)?;
    let file = csv_path.file_name().and_then(|s| s.to_str()).unwrap_or("data.csv");
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let col = |i: usize| headers.get(i).cloned().unwrap_or_default();
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key outside right");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{stem}.png'");
    match kind {
        PlotKind::Spectra => {
            let _ = writeln!(s, "set xlabel '{}'\nset ylabel '{}'", col(0), col(1));
            let _ = writeln!(s, "plot '{file}' skip 1 using 1:2 with points pt 7 ps 0.6 title 'eigenvalues'");
        }
        PlotKind::Defect => {
            let xs: Vec<f64> = numeric_column(&rows, 0)?.iter().map(|v| v.ln()).collect();
            let ys: Vec<f64> = numeric_column(&rows, 1)?.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
            let slope = if xs.len() >= 2 { ls_slope(&xs, &ys) } else { f64::NAN };
            let _ = writeln!(s, "set logscale xy\nset xlabel '{}'\nset ylabel '{}'", col(0), col(1));
            let _ = writeln!(s, "set label 1 sprintf('fitted slope %.4f', {slope:.6}) at graph 0.05, graph 0.1");
            let _ = writeln!(s, "plot '{file}' skip 1 using 1:2 with linespoints pt 7 title 'defect'");
        }
        PlotKind::Moments => {
            let pairs: BTreeSet<(String, String)> =
                rows.iter().map(|r| (r.get(1).unwrap_or("").to_string(), r.get(2).unwrap_or("").to_string())).collect();
            let _ = writeln!(s, "set logscale y\nset xlabel 't'\nset ylabel 'norm'");
            let clauses: Vec<String> = pairs
                .iter()
                .map(|(a, b)| {
                    format!(
                        "'{file}' skip 1 using 1:((strcol(2) eq '{a}' && strcol(3) eq '{b}') ? $4 : 1/0) with linespoints title 'a={a} b={b}'"
                    )
                })
                .collect();
            let _ = writeln!(s, "plot {}", clauses.join(", \\\n     "));
        }
        PlotKind::Convergence => {
            let _ = writeln!(s, "set logscale y\nset xlabel '{}'\nset ylabel '{}'", col(0), col(1));
            let _ = writeln!(s, "plot '{file}' skip 1 using 1:2 with linespoints pt 7 title '{}'", col(1));
        }
    }
    let out = csv_path.with_extension("gp");
    std::fs::write(&out, s)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defect_script_carries_the_fitted_slope() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("defect.csv");
        std::fs::write(&p, "shift,defect\n1,1\n4,0.5\n16,0.25\n").unwrap();
        let gp = emit_plot_script(&p, PlotKind::Defect).unwrap();
        let text = std::fs::read_to_string(gp).unwrap();
        assert!(text.contains("fitted slope %.4f', -0.500000"), "{text}");
        assert!(text.contains("set logscale xy"));
    }

    #[test]
    fn moments_script_has_one_series_per_index_pair() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("moments.csv");
        std::fs::write(&p, "t,alpha,beta,norm\n0,0;0,0;0,1\n0,1;0,0;0,0.7\n1,0;0,0;0,1\n1,1;0,0;0,0.9\n").unwrap();
        let text = std::fs::read_to_string(emit_plot_script(&p, PlotKind::Moments).unwrap()).unwrap();
        assert_eq!(text.matches("with linespoints").count(), 2);
    }

    #[test]
    fn unknown_kind_and_missing_csv() {
        assert!("surface".parse::<PlotKind>().is_err());
        assert_eq!("spectra".parse::<PlotKind>().unwrap(), PlotKind::Spectra);
        assert!(emit_plot_script(Path::new("/nonexistent/x.csv"), PlotKind::Spectra).is_err());
    }
}
