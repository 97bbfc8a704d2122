//! CSV tables with `#` metadata lines, JSON sidecars and scattering-matrix dumps.
//!
//! Numbers are written with 17 significant digits so every value round-trips.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RifError};
use crate::scattering::ScatteringMatrix;
use crate::spectra::{SpectrumFrame, SpectrumTable};

pub const TOOL_NAME: &str = "rif";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DELTA_TAU_CONVENTION: &str = "delta_tau = L / (u * gamma)";

/// Identifies the run that produced a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
}

impl Provenance {
    pub fn new(command: &str, config_sha256: &str) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            config_sha256: config_sha256.into(),
        }
    }

    fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("tool = {} {}", self.tool, self.version),
            format!("command = {}", self.command),
            format!("config_sha256 = {}", self.config_sha256),
        ]
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| RifError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| RifError::io(path, e))
}

/// Writes `# ` comment lines, a header row and string rows.
pub fn write_csv(
    path: &Path,
    comments: &[String],
    header: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = create(path)?;
    for c in comments {
        writeln!(out, "# {c}").map_err(|e| RifError::io(path, e))?;
    }
    let csv_err = |source| RifError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| RifError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| RifError::io(path, std::io::Error::other(e)))?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.write_all(b"\n"))
        .and_then(|_| out.flush())
        .map_err(|e| RifError::io(path, e))
}

/// Header and numeric rows of a CSV written by [`write_csv`]; non-numeric cells are NaN.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let file = File::open(path).map_err(|e| RifError::io(path, e))?;
    let csv_err = |source| RifError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file);
    let header = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        rows.push(
            rec.iter()
                .map(|s| s.parse::<f64>().unwrap_or(f64::NAN))
                .collect(),
        );
    }
    Ok((header, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SpectrumSidecar<'a, E: Serialize> {
    provenance: &'a Provenance,
    frame: SpectrumFrame,
    axis: &'a str,
    columns: Vec<&'a str>,
    aux_columns: Vec<&'a str>,
    rows: usize,
    delta_tau_convention: &'static str,
    metadata: &'a crate::spectra::SpectrumMetadata,
    extra: &'a E,
}

/// Writes `<dir>/<stem>.csv` and its `<dir>/<stem>.json` sidecar.
///
/// CSV columns: the axis, one column per mode, `total`, then side columns.
pub fn write_spectrum<E: Serialize>(
    dir: &Path,
    stem: &str,
    table: &SpectrumTable,
    provenance: &Provenance,
    extra: &E,
) -> Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let m = &table.metadata;
    let mut comments = provenance.comment_lines();
    comments.push(format!("frame = {:?}", table.frame));
    comments.push(format!("delta_n = {}", fmt_f64(m.delta_n)));
    comments.push(format!("u = {}", fmt_f64(m.u)));
    comments.push(format!("gamma = {}", fmt_f64(m.gamma)));
    comments.push(format!("sigma = {}", fmt_f64(m.sigma)));
    comments.push(format!("n_ref = {}", fmt_f64(m.n_ref)));
    comments.push(format!("grid = {}", m.grid));
    comments.push(format!(
        "edges = {}",
        m.edges.iter().map(|e| fmt_f64(*e)).collect::<Vec<_>>().join(" ")
    ));
    for mk in &m.markers {
        comments.push(format!("marker {} = {}", mk.name, fmt_f64(mk.value)));
    }
    comments.push(format!("quarantined_points = {}", m.quarantine.len()));
    let mut header = vec![table.axis_name.clone()];
    header.extend(table.columns.iter().map(|c| c.name.clone()));
    header.push("total".into());
    header.extend(table.aux.iter().map(|c| c.name.clone()));
    let rows = (0..table.len()).map(|i| {
        let mut r = vec![fmt_f64(table.axis[i])];
        r.extend(table.columns.iter().map(|c| fmt_f64(c.values[i])));
        r.push(fmt_f64(table.total[i]));
        r.extend(table.aux.iter().map(|c| fmt_f64(c.values[i])));
        r
    });
    write_csv(&csv_path, &comments, &header, rows)?;
    let sidecar = SpectrumSidecar {
        provenance,
        frame: table.frame,
        axis: &table.axis_name,
        columns: table.columns.iter().map(|c| c.name.as_str()).collect(),
        aux_columns: table.aux.iter().map(|c| c.name.as_str()).collect(),
        rows: table.len(),
        delta_tau_convention: DELTA_TAU_CONVENTION,
        metadata: m,
        extra,
    };
    write_json(&json_path, &sidecar)?;
    Ok((csv_path, json_path))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SMatrixRecord {
    omega_prime: f64,
    configuration: u8,
    in_labels: Vec<String>,
    out_labels: Vec<String>,
    in_metric: Vec<f64>,
    out_metric: Vec<f64>,
    /// Row-major `[re, im]` pairs, rows indexed by in-mode.
    entries: Vec<[f64; 2]>,
    unitarity_residual: f64,
    condition: f64,
}

/// One JSON object per line and per matrix, in grid order.
pub fn write_s_matrices(path: &Path, matrices: &[ScatteringMatrix]) -> Result<()> {
    let mut out = create(path)?;
    for s in matrices {
        let n = s.dim();
        let rec = SMatrixRecord {
            omega_prime: s.omega_prime,
            configuration: s.configuration.configuration.number(),
            in_labels: s.in_labels.iter().map(|l| l.to_string()).collect(),
            out_labels: s.out_labels.iter().map(|l| l.to_string()).collect(),
            in_metric: s.in_metric.clone(),
            out_metric: s.out_metric.clone(),
            entries: (0..n)
                .flat_map(|a| (0..n).map(move |b| (a, b)))
                .map(|(a, b)| [s.entries[(a, b)].re, s.entries[(a, b)].im])
                .collect(),
            unitarity_residual: s.unitarity_residual,
            condition: s.condition,
        };
        let line = serde_json::to_string(&rec)
            .map_err(|e| RifError::io(path, std::io::Error::other(e)))?;
        writeln!(out, "{line}").map_err(|e| RifError::io(path, e))?;
    }
    out.flush().map_err(|e| RifError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_round_trips_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/t.csv");
        let vals = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23];
        write_csv(
            &p,
            &["a = 1".into()],
            &["x".into(), "y".into()],
            vals.iter().map(|v| vec![fmt_f64(*v), fmt_f64(-v)]),
        )
        .unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# a = 1\nx,y\n"));
        let (h, rows) = read_csv(&p).unwrap();
        assert_eq!(h, vec!["x", "y"]);
        for (r, v) in rows.iter().zip(vals) {
            assert_eq!(r[0], v);
            assert_eq!(r[1], -v);
        }
    }

    #[test]
    fn missing_directory_error_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_json(&blocker.join("sub/a.json"), &1).unwrap_err();
        assert!(err.to_string().contains("file"));
    }

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
