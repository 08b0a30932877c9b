use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ErrorClass, InputError};
use crate::engine::PipelineOutput;

/// First line of any table file produced without noise.
pub const NOISELESS_WATERMARK: &str =
    "# UNSAFE-NOISELESS: exact counts, no privacy protection. Never publish.";

pub(super) const TABLES_FILE: &str = "tables.csv";
pub(super) const REPORT_FILE: &str = "accounting.json";

/// A headed, comma-separated input file held in memory.
pub(super) struct Table {
    pub file: String,
    columns: HashMap<String, usize>,
    pub rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    pub fn read(
        path: &Path,
        required: &[&str],
        optional: &[&str],
    ) -> Result<Table, InputError> {
        let file = path.display().to_string();
        let f = fs::File::open(path).map_err(|e| InputError::new(ErrorClass::Io, &file, e.to_string()))?;
        Self::from_reader(f, &file, required, optional)
    }

    pub fn from_reader(
        r: impl Read,
        file: &str,
        required: &[&str],
        optional: &[&str],
    ) -> Result<Table, InputError> {
        let schema = |line: u64, msg: String| InputError::new(ErrorClass::Schema, file, msg).at(line);
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(r);
        let headers = rdr.headers().map_err(|e| schema(1, e.to_string()))?.clone();
        let mut columns = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            if !required.contains(&h) && !optional.contains(&h) {
                return Err(schema(1, format!("unexpected column `{h}`")).field(h));
            }
            if columns.insert(h.to_owned(), i).is_some() {
                return Err(schema(1, format!("duplicate column `{h}`")).field(h));
            }
        }
        if let Some(missing) = required.iter().find(|c| !columns.contains_key(**c)) {
            return Err(schema(1, format!("missing column `{missing}`")).field(*missing));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                schema(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Table {
            file: file.to_owned(),
            columns,
            rows,
        })
    }

    pub fn has(&self, column: &str) -> bool {
        self.columns.contains_key(column)
    }

    /// The trimmed value of `column`, or `""` for an absent optional column.
    pub fn get<'r>(&self, rec: &'r csv::StringRecord, column: &str) -> &'r str {
        self.columns
            .get(column)
            .and_then(|&i| rec.get(i))
            .unwrap_or("")
    }

    pub fn error(&self, class: ErrorClass, line: u64, column: &str, msg: impl Into<String>) -> InputError {
        InputError::new(class, &self.file, msg).at(line).field(column)
    }
}

/// One released cell as written to `tables.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRow {
    pub region: String,
    pub level: String,
    pub geo_id: String,
    pub iteration_code: String,
    pub table_variant: String,
    pub cell_label: String,
    pub value: i64,
}

/// Writes every released shell row; noiseless output starts with
/// [`NOISELESS_WATERMARK`].
pub fn write_release_csv<W: Write>(mut w: W, out: &PipelineOutput) -> std::io::Result<()> {
    if out.noiseless {
        writeln!(w, "{NOISELESS_WATERMARK}")?;
    }
    let mut wtr = csv::Writer::from_writer(w);
    // serialize() only emits the header before the first row
    wtr.write_record([
        "region",
        "level",
        "geo_id",
        "iteration_code",
        "table_variant",
        "cell_label",
        "value",
    ])?;
    for s in &out.shells {
        for row in &s.shell.rows {
            wtr.write_record([
                out.region.code(),
                &s.level,
                &s.group.entity_id,
                &s.group.iteration_code,
                s.shell.variant.name(),
                row.label,
                &row.value.to_string(),
            ])?;
        }
    }
    wtr.flush()
}

/// Parses a `tables.csv`. Returns whether it carried the noiseless watermark.
pub fn read_release_csv<R: Read>(mut r: R) -> Result<(bool, Vec<OutputRow>), csv::Error> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let noiseless = text.starts_with(NOISELESS_WATERMARK);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = rdr.deserialize().collect::<Result<Vec<OutputRow>, _>>()?;
    Ok((noiseless, rows))
}

/// Writes `tables.csv` and `accounting.json` into `dir`. Both go through
/// temporary names and are renamed only once both are complete.
pub fn write_outputs(dir: &Path, out: &PipelineOutput) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let tables_tmp = dir.join(format!(".{TABLES_FILE}.partial"));
    let report_tmp = dir.join(format!(".{REPORT_FILE}.partial"));
    let result = (|| {
        let mut f = std::io::BufWriter::new(fs::File::create(&tables_tmp)?);
        write_release_csv(&mut f, out)?;
        f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        let report = serde_json::to_vec_pretty(&out.report)?;
        fs::write(&report_tmp, report)?;
        fs::rename(&tables_tmp, dir.join(TABLES_FILE))?;
        fs::rename(&report_tmp, dir.join(REPORT_FILE))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tables_tmp);
        let _ = fs::remove_file(&report_tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_columns() {
        let t = Table::from_reader("a, b\n1, 2\n3,4\n".as_bytes(), "x.csv", &["a"], &["b"]).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.get(&t.rows[1].1, "b"), "4");
        assert_eq!(t.rows[1].0, 3);
        assert_eq!(t.get(&t.rows[0].1, "c"), "");
    }

    #[test]
    fn missing_and_unexpected_columns() {
        let e = Table::from_reader("b\n1\n".as_bytes(), "x.csv", &["a"], &["b"]).err().unwrap();
        assert_eq!(e.field.as_deref(), Some("a"));
        assert_eq!(e.class, ErrorClass::Schema);
        let e = Table::from_reader("a,z\n1,2\n".as_bytes(), "x.csv", &["a"], &[]).err().unwrap();
        assert_eq!(e.field.as_deref(), Some("z"));
    }

    #[test]
    fn ragged_row_is_schema_error() {
        let e = Table::from_reader("a,b\n1\n".as_bytes(), "x.csv", &["a", "b"], &[]).err().unwrap();
        assert_eq!(e.class, ErrorClass::Schema);
        assert_eq!(e.line, Some(2));
    }
}
