//! CSV import/export of payoff tensors: `index, a_1..a_p, y_1..y_p`.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::grid::StrategyGrid;
use super::nash::PayoffTensor;
use crate::error::{invalid, Error, Result};

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => invalid(format!("CSV: {other:?}")),
    }
}

pub fn write_tensor_csv<W: Write>(out: W, grid: &StrategyGrid, tensor: &PayoffTensor) -> Result<()> {
    if tensor.shape() != grid.shape().as_slice() {
        return Err(invalid("tensor shape differs from the grid"));
    }
    let p = grid.n_players();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string()];
    header.extend((1..=p).map(|i| format!("a_{i}")));
    header.extend((1..=p).map(|i| format!("y_{i}")));
    w.write_record(&header).map_err(csv_error)?;
    for k in 0..grid.size() {
        let mut row = vec![k.to_string()];
        row.extend(grid.tuple(k).iter().map(usize::to_string));
        row.extend(tensor.values().row(k).iter().map(|v| format!("{v:e}")));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a tensor written by [`write_tensor_csv`]; rows may come in any order.
pub fn read_tensor_csv<R: Read>(input: R, grid: &StrategyGrid) -> Result<PayoffTensor> {
    let p = grid.n_players();
    let mut r = csv::Reader::from_reader(input);
    let mut values = DMatrix::from_element(grid.size(), p, f64::NAN);
    let mut seen = vec![false; grid.size()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        if rec.len() != 1 + 2 * p {
            return Err(invalid(format!(
                "row {}: expected {} fields, found {}",
                line + 2,
                1 + 2 * p,
                rec.len()
            )));
        }
        let parse_idx = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| invalid(format!("row {}: {e}", line + 2)))
        };
        let k = parse_idx(&rec[0])?;
        let tuple = (1..=p).map(|c| parse_idx(&rec[c])).collect::<Result<Vec<_>>>()?;
        if grid.flat(&tuple)? != k {
            return Err(invalid(format!("row {}: index {k} does not match its action tuple", line + 2)));
        }
        if std::mem::replace(&mut seen[k], true) {
            return Err(invalid(format!("row {}: duplicate index {k}", line + 2)));
        }
        for i in 0..p {
            values[(k, i)] = rec[1 + p + i]
                .trim()
                .parse::<f64>()
                .map_err(|e| invalid(format!("row {}: {e}", line + 2)))?;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(invalid(format!("grid index {missing} is missing")));
    }
    PayoffTensor::from_grid(grid, values)
}
