use std::path::Path;

use anyhow::{Context, Result};
use hypsgn::{Grid2D, StateField};

/// Round-trip exact formatting used for every float written to disk.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// File name of the snapshot at time `t`.
pub fn snapshot_name(prefix: &str, t: f64) -> String {
    format!("{prefix}_t{t:.6}.csv")
}

pub fn write_snapshot(path: &Path, grid: &Grid2D<f64>, state: &StateField<f64>, b: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["x", "y", "h", "u", "v", "w", "eta", "b"])?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            let row = [
                grid.x(i),
                grid.y(j),
                state.h()[k],
                state.u()[k],
                state.v()[k],
                state.w()[k],
                state.eta()[k],
                b[k],
            ];
            w.write_record(row.map(fmt))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Values along the grid row `j`.
pub fn write_cross_section(
    path: &Path,
    grid: &Grid2D<f64>,
    state: &StateField<f64>,
    b: &[f64],
    j: usize,
) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["x", "y", "h", "u", "v", "b", "surface"])?;
    for i in 0..grid.nx {
        let k = grid.index(i, j);
        let h = state.h()[k];
        let row = [grid.x(i), grid.y(j), h, state.u()[k], state.v()[k], b[k], h + b[k]];
        w.write_record(row.map(fmt))?;
    }
    w.flush()?;
    Ok(())
}
