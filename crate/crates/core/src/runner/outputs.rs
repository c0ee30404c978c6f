//! Deterministic CSV output, atomic per-cell writes and the content digest
//! used by the manifest and the resume check.

use std::io::Write;
use std::path::{Path, PathBuf};

/// FNV-1a over bytes; stable across platforms, good enough to fingerprint
/// inputs and outputs for reproducibility bookkeeping.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub fn digest_file(path: &Path) -> std::io::Result<u64> {
    Ok(fnv1a(&std::fs::read(path)?))
}

/// Hash every regular file under a directory, by sorted relative path.
pub fn digest_tree(root: &Path) -> std::io::Result<u64> {
    let mut files = Vec::new();
    collect_files(root, root, &mut files)?;
    files.sort();
    let mut acc = Vec::new();
    for rel in files {
        let content = std::fs::read(root.join(&rel))?;
        acc.extend_from_slice(rel.as_bytes());
        acc.push(0);
        acc.extend_from_slice(&fnv1a(&content).to_be_bytes());
    }
    Ok(fnv1a(&acc))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path
                .strip_prefix(root)
                .expect("child of root")
                .to_string_lossy()
                .replace('\\', "/");
            out.push(rel);
        }
    }
    Ok(())
}

/// Write a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, content: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".tmp.{}.{}",
        std::process::id(),
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    ));
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(content)?;
        file.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Builder for one CSV file with deterministic float formatting (shortest
/// round-trip representation).
pub struct Csv {
    buffer: String,
    columns: usize,
    cell_in_row: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        let mut buffer = String::new();
        buffer.push_str(&header.join(","));
        buffer.push('\n');
        Csv {
            buffer,
            columns: header.len(),
            cell_in_row: 0,
        }
    }

    pub fn field(&mut self, text: &str) -> &mut Self {
        debug_assert!(!text.contains(',') && !text.contains('\n'));
        if self.cell_in_row > 0 {
            self.buffer.push(',');
        }
        self.buffer.push_str(text);
        self.cell_in_row += 1;
        self
    }

    pub fn value(&mut self, v: f64) -> &mut Self {
        let text = format!("{v}");
        self.field(&text)
    }

    pub fn end_row(&mut self) {
        debug_assert_eq!(self.cell_in_row, self.columns, "row width mismatch");
        self.buffer.push('\n');
        self.cell_in_row = 0;
    }

    pub fn finish(self) -> String {
        debug_assert_eq!(self.cell_in_row, 0, "unterminated row");
        self.buffer
    }

    pub fn write_to(self, path: &Path) -> std::io::Result<()> {
        write_atomic(path, self.finish().as_bytes())
    }
}

/// Directory layout for one run.
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: &Path) -> OutputLayout {
        OutputLayout { root: root.into() }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.txt")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.csv")
    }

    pub fn household_dir(&self, label: &str) -> PathBuf {
        self.root.join("households").join(label)
    }

    pub fn cell_dir(&self, name: &str) -> PathBuf {
        self.root.join("cells").join(name)
    }
}
