//! Small CSV writers. Every file carries a header row; numbers are
//! formatted locale-independently, full-precision values at 17
//! significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// 17-significant-digit representation that round-trips f64 bit-exactly.
pub fn full(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_rows<W: Write>(
    mut w: W,
    header: &str,
    rows: impl Iterator<Item = String>,
) -> anyhow::Result<()> {
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    Ok(())
}
