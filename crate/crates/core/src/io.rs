//! Writing snapshot histories: one CSV per frame plus an index of `(t, file)`.

use crate::error::Result;
use crate::fokkerplanck::DensityHistory;
use crate::liouville::Snapshot;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

fn frame_name(prefix: &str, k: usize) -> String {
    format!("{prefix}_{k:05}.csv")
}

fn write_index(dir: &Path, prefix: &str, entries: &[(f64, String)]) -> Result<PathBuf> {
    let path = dir.join(format!("{prefix}_index.csv"));
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "t,filename")?;
    for (t, name) in entries {
        writeln!(w, "{t:e},{name}")?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes `prefix_00000.csv, …` and `prefix_index.csv` into `dir`; returns
/// every path written, index last.
pub fn write_snapshots(dir: &Path, prefix: &str, history: &[Snapshot]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(history.len() + 1);
    let mut entries = Vec::with_capacity(history.len());
    for (k, snap) in history.iter().enumerate() {
        let name = frame_name(prefix, k);
        let path = dir.join(&name);
        let mut w = BufWriter::new(File::create(&path)?);
        snap.field.write_csv(&mut w)?;
        w.flush()?;
        entries.push((snap.t, name));
        paths.push(path);
    }
    paths.push(write_index(dir, prefix, &entries)?);
    Ok(paths)
}

/// Same layout as [`write_snapshots`] for density histories.
pub fn write_density_history(dir: &Path, prefix: &str, history: &DensityHistory) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(history.times.len() + 1);
    let mut entries = Vec::with_capacity(history.times.len());
    for k in 0..history.times.len() {
        let name = frame_name(prefix, k);
        let path = dir.join(&name);
        let mut w = BufWriter::new(File::create(&path)?);
        history.write_frame_csv(k, &mut w)?;
        w.flush()?;
        entries.push((history.times[k], name));
        paths.push(path);
    }
    paths.push(write_index(dir, prefix, &entries)?);
    Ok(paths)
}
