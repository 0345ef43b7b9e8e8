//! Collects a run's artifacts in memory, then writes them with `summary.txt`
//! and an `index.csv` that lists every file.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

/// One named scalar check with its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.to_string(), value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, String, Vec<u8>)>,
    values: Vec<(String, String)>,
    checks: Vec<Check>,
}

impl Artifacts {
    pub fn new() -> Self {
        Artifacts::default()
    }

    /// Adds file `name` of kind `kind` whose bytes come from `write`.
    pub fn file(&mut self, name: &str, kind: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) {
        let mut buf = Vec::new();
        write(&mut buf).expect("writing to memory");
        self.files.push((name.to_string(), kind.to_string(), buf));
    }

    pub fn text(&mut self, name: &str, kind: &str, body: String) {
        self.files.push((name.to_string(), kind.to_string(), body.into_bytes()));
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.values.push((key.to_string(), format!("{v:e}")));
    }

    pub fn label(&mut self, key: &str, v: &str) {
        self.values.push((key.to_string(), v.to_string()));
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn files(&self) -> impl Iterator<Item = (&str, &[u8])> {
        self.files.iter().map(|(n, _, b)| (n.as_str(), b.as_slice()))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k}={v}");
        }
        for c in &self.checks {
            let _ = writeln!(s, "check.{}.value={:e}", c.name, c.value);
            let _ = writeln!(s, "check.{}.tolerance={:e}", c.name, c.tolerance);
            let _ = writeln!(s, "check.{}.pass={}", c.name, c.pass);
        }
        let _ = writeln!(s, "pass={}", self.passed());
        let _ = writeln!(s, "index=index.csv");
        s
    }

    pub fn index(&self) -> String {
        let mut s = String::from("file,kind\n");
        s.push_str("summary.txt,summary\n");
        for (n, k, _) in &self.files {
            let _ = writeln!(s, "{n},{k}");
        }
        s
    }

    /// Writes every artifact plus `summary.txt` and `index.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let mut put = |name: &str, bytes: &[u8]| -> std::io::Result<()> {
            let path = dir.join(name);
            let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
            f.write_all(bytes)?;
            f.flush()?;
            out.push(path);
            Ok(())
        };
        for (n, _, b) in &self.files {
            put(n, b)?;
        }
        put("summary.txt", self.summary().as_bytes())?;
        put("index.csv", self.index().as_bytes())?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_lists_every_written_file() {
        let mut a = Artifacts::new();
        a.text("a.csv", "data", "x\n1\n".into());
        a.file("b.csv", "data", |w| writeln!(w, "y"));
        a.value("speed", 1.0);
        a.check(Check::at_most("gap", 0.5, 1.0));
        let dir = std::env::temp_dir().join(format!("pw-out-{}", std::process::id()));
        let paths = a.write_to(&dir).unwrap();
        let index = std::fs::read_to_string(dir.join("index.csv")).unwrap();
        for p in &paths {
            let name = p.file_name().unwrap().to_str().unwrap();
            assert!(name == "index.csv" || index.contains(name), "{name}");
        }
        let summary = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
        assert!(summary.contains("speed=1e0"));
        assert!(summary.contains("check.gap.pass=true"));
        assert!(summary.contains("pass=true"));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
