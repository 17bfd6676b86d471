//! Readers for dense CSV tables and `src dst weight` edge lists.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::table::ContingencyTable;

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok()
}

/// Reads a dense table. A first row and/or first column of non-numeric
/// cells is taken as labels.
pub fn read_csv<R: Read>(reader: R) -> Result<ContingencyTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: line + 1,
            message: e.to_string(),
        })?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        rows.push(record.iter().map(str::to_owned).collect());
    }
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }

    let first = &rows[0];
    let numeric = |c: &String| parse_number(c).is_some();
    let has_header = first.iter().skip(1).any(|c| !numeric(c))
        || (!numeric(&first[0]) && rows.len() > 1 && rows[1..].iter().all(|r| numeric(&r[0])));
    let data = if has_header { &rows[1..] } else { &rows[..] };
    if data.is_empty() {
        return Err(Error::EmptyTable);
    }
    let has_row_labels = data.iter().any(|r| !numeric(&r[0]));
    let skip = usize::from(has_row_labels);
    let width = data[0].len() - skip;
    let first_data_line = usize::from(has_header) + 1;

    let mut values = Array2::<f64>::zeros((data.len(), width));
    let mut row_labels = Vec::with_capacity(data.len());
    for (i, row) in data.iter().enumerate() {
        if row.len() - skip != width {
            return Err(Error::Parse {
                line: first_data_line + i,
                message: format!("expected {width} values, found {}", row.len() - skip),
            });
        }
        if has_row_labels {
            row_labels.push(row[0].clone());
        }
        for (k, cell) in row[skip..].iter().enumerate() {
            values[[i, k]] = parse_number(cell).ok_or_else(|| Error::Parse {
                line: first_data_line + i,
                message: format!("not a number: {cell:?}"),
            })?;
        }
    }
    let col_labels = has_header.then(|| {
        let header = &rows[0];
        let start = header.len().saturating_sub(width);
        header[start..].to_vec()
    });
    ContingencyTable::normalize(values.view())?
        .with_labels(has_row_labels.then_some(row_labels), col_labels)
}

pub fn read_csv_path(path: impl AsRef<Path>) -> Result<ContingencyTable> {
    read_csv(File::open(path)?)
}

/// Reads whitespace separated `src dst weight` lines into a square table over
/// the union of vertex labels, in order of first appearance. Repeated pairs
/// are summed; blank lines and `#` comments are skipped.
pub fn read_edge_list<R: Read>(reader: R) -> Result<ContingencyTable> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut vertex = |name: &str, labels: &mut Vec<String>| -> usize {
        *index.entry(name.to_owned()).or_insert_with(|| {
            labels.push(name.to_owned());
            labels.len() - 1
        })
    };
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected `src dst weight`, found {} fields", fields.len()),
            });
        }
        let weight = parse_number(fields[2]).ok_or_else(|| Error::Parse {
            line: lineno + 1,
            message: format!("not a number: {:?}", fields[2]),
        })?;
        let src = vertex(fields[0], &mut labels);
        let dst = vertex(fields[1], &mut labels);
        edges.push((src, dst, weight));
    }
    if labels.is_empty() {
        return Err(Error::EmptyTable);
    }
    let n = labels.len();
    let mut values = Array2::<f64>::zeros((n, n));
    for (src, dst, w) in edges {
        values[[src, dst]] += w;
    }
    ContingencyTable::normalize(values.view())?.with_labels(Some(labels.clone()), Some(labels))
}

pub fn read_edge_list_path(path: impl AsRef<Path>) -> Result<ContingencyTable> {
    read_edge_list(File::open(path)?)
}
