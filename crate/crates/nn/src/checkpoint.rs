//! Checkpoint file format: a plain-text header describing every parameter
//! (name, shape, byte offset, length) followed by raw little-endian f32
//! blocks. Round trips are bit-exact.
//!
//! ```text
//! rlr-checkpoint v1
//! params <n>
//! <name> <ndim> <d0> ... <dk> <offset-bytes> <len-elems>
//! ...
//! data
//! <raw f32 little-endian blocks>
//! ```

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::params::ParamStore;
use crate::{NnError, Result};

const MAGIC: &str = "rlr-checkpoint v1";

/// Raw entry as read back from a checkpoint file.
#[derive(Debug, Clone)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

/// Writes all parameter values (not gradients or optimizer state).
pub fn save(ps: &ParamStore<f32>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "params {}", ps.n_entries())?;
    let mut offset = 0usize;
    for e in ps.entries() {
        let dims: Vec<String> = e.shape.iter().map(|d| d.to_string()).collect();
        writeln!(
            w,
            "{} {} {} {} {}",
            e.name,
            e.shape.len(),
            dims.join(" "),
            offset,
            e.value.len()
        )?;
        offset += e.value.len() * 4;
    }
    writeln!(w, "data")?;
    for e in ps.entries() {
        for v in &e.value {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads every entry of a checkpoint file.
pub fn read_entries(path: &Path) -> Result<Vec<CheckpointEntry>> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut line = String::new();

    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(NnError::Checkpoint(format!(
            "{}: bad magic `{}`",
            path.display(),
            line.trim_end()
        )));
    }
    line.clear();
    r.read_line(&mut line)?;
    let n: usize = line
        .trim_end()
        .strip_prefix("params ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| NnError::Checkpoint(format!("{}: bad params line", path.display())))?;

    let mut headers = Vec::with_capacity(n);
    for _ in 0..n {
        line.clear();
        r.read_line(&mut line)?;
        let toks: Vec<&str> = line.trim_end().split(' ').collect();
        let parse = || -> Option<(String, Vec<usize>, usize, usize)> {
            let name = toks.first()?.to_string();
            let ndim: usize = toks.get(1)?.parse().ok()?;
            if toks.len() != 2 + ndim + 2 {
                return None;
            }
            let mut shape = Vec::with_capacity(ndim);
            for d in &toks[2..2 + ndim] {
                shape.push(d.parse().ok()?);
            }
            let offset: usize = toks[2 + ndim].parse().ok()?;
            let len: usize = toks[2 + ndim + 1].parse().ok()?;
            Some((name, shape, offset, len))
        };
        let (name, shape, offset, len) = parse().ok_or_else(|| {
            NnError::Checkpoint(format!("{}: bad header line `{}`", path.display(), line.trim_end()))
        })?;
        if shape.iter().product::<usize>() != len {
            return Err(NnError::Checkpoint(format!(
                "{}: `{}` shape {:?} does not cover {} elements",
                path.display(),
                name,
                shape,
                len
            )));
        }
        headers.push((name, shape, offset, len));
    }
    line.clear();
    r.read_line(&mut line)?;
    if line.trim_end() != "data" {
        return Err(NnError::Checkpoint(format!(
            "{}: missing data marker",
            path.display()
        )));
    }

    let mut blob = Vec::new();
    r.read_to_end(&mut blob)?;
    let mut out = Vec::with_capacity(n);
    for (name, shape, offset, len) in headers {
        let end = offset + len * 4;
        if end > blob.len() {
            return Err(NnError::Checkpoint(format!(
                "{}: `{}` extends past end of data",
                path.display(),
                name
            )));
        }
        let values = blob[offset..end]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        out.push(CheckpointEntry { name, shape, values });
    }
    Ok(out)
}

/// Loads values into an already-registered store; names and shapes must
/// match exactly.
pub fn load_into(ps: &mut ParamStore<f32>, path: &Path) -> Result<()> {
    let entries = read_entries(path)?;
    if entries.len() != ps.n_entries() {
        return Err(NnError::Checkpoint(format!(
            "{}: has {} params, store expects {}",
            path.display(),
            entries.len(),
            ps.n_entries()
        )));
    }
    for e in entries {
        if !ps.contains(&e.name) {
            return Err(NnError::Checkpoint(format!(
                "{}: unexpected param `{}`",
                path.display(),
                e.name
            )));
        }
        let entry = ps.entry_mut(&e.name);
        if entry.shape != e.shape {
            return Err(NnError::Checkpoint(format!(
                "{}: `{}` shape {:?} vs registered {:?}",
                path.display(),
                e.name,
                e.shape,
                entry.shape
            )));
        }
        entry.value.copy_from_slice(&e.values);
    }
    Ok(())
}
