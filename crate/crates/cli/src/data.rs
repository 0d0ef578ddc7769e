//! CSV ingestion: one row per point, comma-separated decimal coordinates, with
//! an optional header detected by a non-numeric first field.

use std::path::Path;

use dynkde::PointSet;

use crate::error::{CliError, CliResult};

/// A parsed row together with its 1-based line number in the file.
struct Row {
    line: u64,
    fields: Vec<String>,
}

fn rows(path: &Path) -> CliResult<Vec<Row>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push(Row { line, fields: rec.iter().map(str::to_string).collect() });
    }
    if out.first().is_some_and(|r| r.fields[0].parse::<f64>().is_err()) {
        out.remove(0);
    }
    Ok(out)
}

fn coordinate(field: &str, line: u64) -> CliResult<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::Data(format!("line {line}: invalid coordinate '{field}'"))),
    }
}

fn check_dim(dim: &mut Option<usize>, got: usize, line: u64) -> CliResult<()> {
    match *dim {
        None if got == 0 => Err(CliError::Data(format!("line {line}: no coordinates"))),
        None => {
            *dim = Some(got);
            Ok(())
        }
        Some(d) if d != got => Err(CliError::Data(format!("line {line}: expected {d} coordinates, found {got}"))),
        Some(_) => Ok(()),
    }
}

/// Reads a point file. The dimension is fixed by the first data row.
pub fn read_points(path: &Path) -> CliResult<PointSet> {
    let rows = rows(path)?;
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    let mut dim = None;
    let mut coords = Vec::new();
    for row in &rows {
        check_dim(&mut dim, row.fields.len(), row.line)?;
        for f in &row.fields {
            coords.push(coordinate(f, row.line)?);
        }
    }
    Ok(PointSet::from_flat(dim.unwrap(), coords)?)
}

/// One replacement `x_index <- point` from an update file.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRow {
    pub line: u64,
    pub index: usize,
    pub point: Vec<f64>,
}

/// Reads an update file with rows `index, x_1, ..., x_d`. An empty file is allowed.
pub fn read_updates(path: &Path) -> CliResult<Vec<UpdateRow>> {
    let mut dim = None;
    rows(path)?
        .into_iter()
        .map(|row| {
            let index = row.fields[0]
                .parse::<usize>()
                .map_err(|_| CliError::Data(format!("line {}: invalid index '{}'", row.line, row.fields[0])))?;
            check_dim(&mut dim, row.fields.len() - 1, row.line)?;
            let point = row.fields[1..].iter().map(|f| coordinate(f, row.line)).collect::<CliResult<Vec<_>>>()?;
            Ok(UpdateRow { line: row.line, index, point })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_is_detected() {
        let with = read_points(file("x,y\n1,2\n3,4\n").path()).unwrap();
        let without = read_points(file("1,2\n3,4\n").path()).unwrap();
        assert_eq!(with, without);
        assert_eq!(with.len(), 2);
        assert_eq!(with.dim(), 2);
    }

    #[test]
    fn errors_name_the_line() {
        let err = read_points(file("1,2\n3,4\n5\n").path()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = read_points(file("a,b\n1,2\n3,zz\n").path()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(read_points(file("").path()).is_err());
        assert!(read_points(file("x,y\n").path()).is_err());
        assert!(read_points(file("1,inf\n").path()).is_err());
    }

    #[test]
    fn updates() {
        let u = read_updates(file("index,x,y\n0,1.5,2\n3,-1,0\n").path()).unwrap();
        assert_eq!(u, vec![
            UpdateRow { line: 2, index: 0, point: vec![1.5, 2.0] },
            UpdateRow { line: 3, index: 3, point: vec![-1.0, 0.0] },
        ]);
        assert!(read_updates(file("").path()).unwrap().is_empty());
        let err = read_updates(file("0,1\n-1,2\n").path()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
