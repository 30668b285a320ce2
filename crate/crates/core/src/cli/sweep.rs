//! Grid sweeps with one CSV row per cell. Rows carry a hash of their cell
//! key, so an interrupted sweep written to a file resumes where it stopped.

use super::table::Table;
use crate::error::{Error, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::Path;

/// Leading 16 hex digits of SHA-256 over the canonical cell key.
pub fn cell_hash(key: &str) -> String {
    hex::encode(&Sha256::digest(key.as_bytes())[..8])
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Evaluate `eval` on every cell key, in parallel batches. With a cache
/// path, rows already present under a matching hash are reused and the file
/// is rewritten in grid order after every batch.
pub fn sweep<F>(keys: &[String], header: &[&str], cache: Option<&Path>, eval: F) -> Result<Table>
where
    F: Fn(&str) -> Result<Vec<String>> + Sync,
{
    let mut full = vec!["cell"];
    full.extend_from_slice(header);
    let mut done: HashMap<String, Vec<String>> = HashMap::new();
    if let Some(p) = cache.filter(|p| p.exists()) {
        let old = Table::from_csv(&std::fs::read_to_string(p)?)?;
        if old.header == full {
            done.extend(old.rows.into_iter().map(|r| (r[0].clone(), r)));
        }
    }
    let hashes: Vec<String> = keys.iter().map(|k| cell_hash(k)).collect();
    let assemble = |done: &HashMap<String, Vec<String>>| {
        let mut t = Table::new(&full);
        for h in &hashes {
            if let Some(r) = done.get(h) {
                t.push(r.clone());
            }
        }
        t
    };
    let todo: Vec<usize> = (0..keys.len()).filter(|&i| !done.contains_key(&hashes[i])).collect();
    let batch = rayon::current_num_threads().max(1);
    for chunk in todo.chunks(batch) {
        let rows: Vec<Vec<String>> = chunk
            .par_iter()
            .map(|&i| {
                let mut row = vec![hashes[i].clone()];
                row.extend(eval(&keys[i])?);
                if row.len() != full.len() {
                    return Err(Error::Structure(format!("cell {} produced {} columns", keys[i], row.len() - 1)));
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        for (&i, r) in chunk.iter().zip(rows) {
            done.insert(hashes[i].clone(), r);
        }
        if let Some(p) = cache {
            write_atomic(p, &assemble(&done).to_csv())?;
        }
    }
    let t = assemble(&done);
    if let Some(p) = cache {
        write_atomic(p, &t.to_csv())?;
    }
    Ok(t)
}
