//! Table files: `#` comment lines, strata separated by blank lines, and
//! within a stratum one row per line with counts split on commas or
//! whitespace. A single stratum gives an `R×C` table, several give `K×R×C`.

use ctexact_core::table::validate_table;
use ctexact_core::ContingencyTable;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("table file contains no counts")]
    Empty,
    #[error("{0}")]
    Table(#[from] ctexact_core::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

pub fn parse_table(text: &str) -> Result<ContingencyTable, ParseError> {
    let mut strata: Vec<Vec<Vec<i64>>> = Vec::new();
    let mut current: Vec<Vec<i64>> = Vec::new();
    let mut width = None;
    let mut first_line_of = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !current.is_empty() {
                strata.push(std::mem::take(&mut current));
            }
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<i64>().map_err(|_| syntax(line_no, format!("`{t}` is not an integer"))))
            .collect::<Result<Vec<_>, _>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(syntax(line_no, format!("expected {w} counts, found {}", row.len())))
            }
            _ => {}
        }
        if current.is_empty() {
            first_line_of.push(line_no);
        }
        current.push(row);
    }
    if !current.is_empty() {
        strata.push(current);
    }
    let Some(cols) = width else {
        return Err(ParseError::Empty);
    };
    let rows = strata[0].len();
    if let Some(k) = strata.iter().position(|s| s.len() != rows) {
        return Err(syntax(
            first_line_of[k],
            format!("stratum has {} rows, the first has {rows}", strata[k].len()),
        ));
    }
    let counts: Vec<i64> = strata.iter().flatten().flatten().copied().collect();
    let shape = if strata.len() == 1 {
        vec![rows, cols]
    } else {
        vec![strata.len(), rows, cols]
    };
    let table = validate_table(&counts, &shape)?;
    if table.total() == 0 {
        return Err(ctexact_core::Error::EmptyTable.into());
    }
    Ok(table)
}
