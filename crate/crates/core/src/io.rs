//! Line-oriented vector files: one decimal value per line.

use std::fmt::Display;
use std::io::{BufRead, Write};

use crate::error::{PcsError, Result};
use crate::model::CountVector;

pub fn write_values<W: Write, T: Display>(mut out: W, values: &[T]) -> Result<()> {
    for v in values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

fn parse_lines<R: BufRead, T: std::str::FromStr>(input: R) -> Result<Vec<T>>
where
    T::Err: Display,
{
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(t.parse::<T>().map_err(|e| PcsError::Parse {
            line: k + 1,
            msg: format!("{t:?}: {e}"),
        })?);
    }
    Ok(out)
}

pub fn read_values<R: BufRead>(input: R) -> Result<Vec<f64>> {
    parse_lines(input)
}

pub fn read_counts<R: BufRead>(input: R) -> Result<CountVector> {
    Ok(CountVector(parse_lines(input)?))
}
