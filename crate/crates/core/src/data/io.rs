use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::table::{ColumnKind, ColumnSpec, ColumnValues, Table, MISSING_CATEGORY};
use crate::{Error, Result};

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s == "NA"
}

pub fn read_schema(path: impl AsRef<Path>) -> Result<Vec<ColumnSpec>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

pub fn write_schema(specs: &[ColumnSpec], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut json = serde_json::to_string_pretty(specs)?;
    json.push('\n');
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Load a CSV file whose header matches `schema` (column order may differ).
///
/// Empty cells and `NA` are missing. Reported row numbers are 1-based data
/// rows, not counting the header.
pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnSpec]) -> Result<Table> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &[ColumnSpec]) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    // position of each schema column inside the file
    let mut positions = Vec::with_capacity(schema.len());
    for spec in schema {
        let pos = header
            .iter()
            .position(|h| h == &spec.name)
            .ok_or_else(|| Error::UnknownColumn(spec.name.clone()))?;
        positions.push(pos);
    }
    if let Some(extra) = header
        .iter()
        .find(|h| !schema.iter().any(|s| &s.name == *h))
    {
        return Err(Error::UnknownColumn(extra.clone()));
    }

    let mut columns: Vec<ColumnValues> = schema
        .iter()
        .map(|s| match s.kind {
            ColumnKind::Continuous => ColumnValues::Continuous(Vec::new()),
            ColumnKind::Categorical => ColumnValues::Categorical(Vec::new()),
        })
        .collect();

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        for ((spec, &pos), col) in schema.iter().zip(&positions).zip(columns.iter_mut()) {
            let cell = record.get(pos).unwrap_or("");
            match col {
                ColumnValues::Continuous(v) => {
                    if is_missing_token(cell) {
                        v.push(f64::NAN);
                    } else {
                        let x: f64 = cell.trim().parse().map_err(|_| Error::TypeParse {
                            row,
                            column: spec.name.clone(),
                            value: cell.to_string(),
                        })?;
                        if x.is_nan() {
                            return Err(Error::TypeParse {
                                row,
                                column: spec.name.clone(),
                                value: cell.to_string(),
                            });
                        }
                        v.push(x);
                    }
                }
                ColumnValues::Categorical(v) => {
                    if is_missing_token(cell) {
                        v.push(MISSING_CATEGORY);
                    } else {
                        let idx =
                            spec.categories
                                .iter()
                                .position(|c| c == cell)
                                .ok_or_else(|| Error::UnknownCategory {
                                    row,
                                    column: spec.name.clone(),
                                    value: cell.to_string(),
                                })?;
                        v.push(idx as u32);
                    }
                }
            }
        }
    }
    Table::new(schema.to_vec(), columns)
}

pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(table, std::io::BufWriter::new(file))
}

pub(crate) fn write_csv_to<W: Write>(table: &Table, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(table.column_names())?;
    let mut record: Vec<String> = Vec::with_capacity(table.n_cols());
    for row in 0..table.n_rows() {
        record.clear();
        for col in 0..table.n_cols() {
            let cell = if table.is_missing(col, row) {
                String::new()
            } else {
                match table.values(col) {
                    ColumnValues::Continuous(v) => format!("{}", v[row]),
                    ColumnValues::Categorical(_) => table
                        .category_label(col, row)
                        .unwrap_or_default()
                        .to_string(),
                }
            };
            record.push(cell);
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Domain;

    fn schema() -> Vec<ColumnSpec> {
        vec![
            ColumnSpec::continuous("age", Domain::Patient),
            ColumnSpec::categorical("stroke_unit", Domain::Clinical, ["no", "yes"]),
            ColumnSpec::continuous("los", Domain::Outcome),
        ]
    }

    #[test]
    fn one_empty_cell_gives_one_missing() {
        let csv = "age,stroke_unit,los\n70,yes,4\n,no,12\n80,yes,3\n";
        let t = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.total_missing(), 1);
        assert!(t.is_missing(0, 1));
    }

    #[test]
    fn na_token_is_missing_and_header_order_is_free() {
        let csv = "los,age,stroke_unit\n4,NA,\"yes\"\n";
        let t = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert!(t.is_missing(0, 0));
        assert_eq!(t.category_label(1, 0), Some("yes"));
        assert_eq!(t.continuous(2).unwrap(), &[4.0]);
    }

    #[test]
    fn header_mismatch_is_unknown_column() {
        let csv = "age,unit,los\n70,yes,4\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &schema()),
            Err(Error::UnknownColumn(c)) if c == "stroke_unit"
        ));
        let csv = "age,stroke_unit,los,extra\n70,yes,4,1\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &schema()),
            Err(Error::UnknownColumn(c)) if c == "extra"
        ));
    }

    #[test]
    fn unknown_category_and_parse_errors_report_position() {
        let csv = "age,stroke_unit,los\n70,purple,4\n";
        match read_csv(csv.as_bytes(), &schema()) {
            Err(Error::UnknownCategory { row, column, value }) => {
                assert_eq!(
                    (row, column.as_str(), value.as_str()),
                    (1, "stroke_unit", "purple")
                );
            }
            other => panic!("unexpected {other:?}"),
        }
        let csv = "age,stroke_unit,los\n70,yes,4\nold,no,3\n";
        match read_csv(csv.as_bytes(), &schema()) {
            Err(Error::TypeParse { row, column, .. }) => {
                assert_eq!((row, column.as_str()), (2, "age"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn write_then_read_is_identical() {
        let csv = "age,stroke_unit,los\n70.25,yes,4\n,no,12\n1e-7,,3\n";
        let t = read_csv(csv.as_bytes(), &schema()).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&t, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &schema()).unwrap();
        assert_eq!(t, back);
    }
}
