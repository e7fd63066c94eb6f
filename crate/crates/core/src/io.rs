//! CSV and JSON artifacts. Numbers are written in `{:.15e}` form so that
//! output bytes depend only on the computed values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::game::McEstimate;
use crate::isaacs::{ConvergenceRow, Side};
use crate::pde::PriceGrid;

pub fn fmt_num(v: f64) -> String {
    format!("{v:.15e}")
}

fn header(n: usize, extra: &[&str]) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("x_{i}")));
    cols.push("u".into());
    cols.extend(extra.iter().map(|s| s.to_string()));
    cols.join(",")
}

fn write_rows<W: Write + ?Sized>(w: &mut W, grid: &PriceGrid, suffix: Option<&str>) -> Result<()> {
    let lat = grid.lattice();
    for k in (0..=grid.nt()).rev() {
        let t = fmt_num(grid.time(k));
        let slice = grid.slice(k);
        for (node, u) in slice.iter().enumerate() {
            let mut line = t.clone();
            for x in lat.coords(node) {
                line.push(',');
                line.push_str(&fmt_num(x));
            }
            line.push(',');
            line.push_str(&fmt_num(*u));
            if let Some(s) = suffix {
                line.push(',');
                line.push_str(s);
            }
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

/// `t,x_1,...,x_n,u`, slices descending from `T`, nodes in lattice order.
pub fn write_surface_csv<W: Write + ?Sized>(w: &mut W, grid: &PriceGrid) -> Result<()> {
    writeln!(w, "{}", header(grid.lattice().dim(), &[]))?;
    write_rows(w, grid, None)
}

/// Surface layout plus a trailing `side` column; minus rows first.
pub fn write_value_table_csv<W: Write + ?Sized>(w: &mut W, tables: &[(Side, &PriceGrid)]) -> Result<()> {
    let n = tables.first().map(|(_, g)| g.lattice().dim()).unwrap_or(1);
    writeln!(w, "{}", header(n, &["side"]))?;
    for (side, grid) in tables {
        write_rows(w, grid, Some(side.as_str()))?;
    }
    Ok(())
}

pub fn write_convergence_csv<W: Write + ?Sized>(w: &mut W, rows: &[ConvergenceRow]) -> Result<()> {
    writeln!(w, "trial,m,err_plus,err_minus")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.trial,
            fmt_num(r.m),
            fmt_num(r.err_plus),
            fmt_num(r.err_minus)
        )?;
    }
    Ok(())
}

/// Monte Carlo report body.
#[derive(Clone, Debug, Serialize)]
pub struct McReport<'a> {
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
    pub seed: u64,
    pub config_digest: &'a str,
    #[serde(flatten)]
    pub extra: serde_json::Value,
}

impl<'a> McReport<'a> {
    pub fn new(est: &McEstimate, digest: &'a str, extra: serde_json::Value) -> Self {
        Self {
            mean: est.mean,
            stderr: est.stderr,
            paths: est.paths,
            seed: est.seed,
            config_digest: digest,
            extra,
        }
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// `surface.csv` -> `surface.csv.meta.json`.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    s.into()
}
