use std::io::Write;

use crate::error::Result;
use crate::scalar::Scalar;

use super::PathEnsemble;

/// Writes paths as CSV rows `path,t,S,Z,V`, preceded by `header` lines
/// (each emitted as a `#` comment). At most `max_paths` paths are written.
pub fn write_paths_csv<T: Scalar, W: Write>(
    ensemble: &PathEnsemble<T>,
    header: &[String],
    max_paths: usize,
    mut out: W,
) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "path,t,S,Z,V")?;
    let grid = ensemble.grid();
    for p in 0..ensemble.n_paths().min(max_paths) {
        let ls = ensemble.log_spot(p);
        let z = ensemble.z(p);
        let v = ensemble.v(p);
        for k in 0..grid.len() {
            writeln!(
                out,
                "{p},{},{},{},{}",
                grid[k].as_f64(),
                ls[k].exp().as_f64(),
                z[k].as_f64(),
                v[k].as_f64()
            )?;
        }
    }
    out.flush()?;
    Ok(())
}
