//! CSV ingestion and emission.
//!
//! Data files are comma-separated with a header row. A companion schema file
//! assigns each header name a role, one `name = role` line per column, where
//! role is `numeric`, `categorical`, `decision` or `ignore`. Blank lines and
//! lines starting with `#` are skipped. Exactly one column must be the
//! decision; every header column must be declared and every declared column
//! must appear in the header.
//!
//! Empty cells and `?` are missing values. By default they are an error; a
//! schema line `@missing = drop` drops every row with a missing cell in a
//! used column, and `@missing = category` keeps missing categorical cells
//! as a symbol of their own while still dropping rows with a missing
//! numeric or decision cell.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use super::{AttributeColumn, AttributeKind, DecisionSystem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    Numeric,
    Categorical,
    Decision,
    Ignore,
}

impl FromStr for ColumnRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "numeric" => Ok(ColumnRole::Numeric),
            "categorical" => Ok(ColumnRole::Categorical),
            "decision" => Ok(ColumnRole::Decision),
            "ignore" => Ok(ColumnRole::Ignore),
            other => Err(Error::Schema(format!("unknown column role `{other}`"))),
        }
    }
}

impl fmt::Display for ColumnRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnRole::Numeric => "numeric",
            ColumnRole::Categorical => "categorical",
            ColumnRole::Decision => "decision",
            ColumnRole::Ignore => "ignore",
        })
    }
}

/// What to do with missing cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MissingPolicy {
    #[default]
    Error,
    Drop,
    Category,
}

impl FromStr for MissingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "error" => Ok(MissingPolicy::Error),
            "drop" => Ok(MissingPolicy::Drop),
            "category" => Ok(MissingPolicy::Category),
            other => Err(Error::Schema(format!("unknown missing-value policy `{other}`"))),
        }
    }
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MissingPolicy::Error => "error",
            MissingPolicy::Drop => "drop",
            MissingPolicy::Category => "category",
        })
    }
}

/// Column-role declaration for a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<(String, ColumnRole)>,
    missing: MissingPolicy,
}

impl Schema {
    pub fn new(columns: Vec<(String, ColumnRole)>) -> Result<Self> {
        let decisions = columns
            .iter()
            .filter(|(_, r)| *r == ColumnRole::Decision)
            .count();
        if decisions != 1 {
            return Err(Error::Schema(format!(
                "exactly one decision column required, found {decisions}"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some((name, _)) = columns.iter().find(|(n, _)| !seen.insert(n.as_str())) {
            return Err(Error::Schema(format!("column `{name}` declared twice")));
        }
        Ok(Schema {
            columns,
            missing: MissingPolicy::Error,
        })
    }

    pub fn with_missing(mut self, missing: MissingPolicy) -> Self {
        self.missing = missing;
        self
    }

    pub fn missing(&self) -> MissingPolicy {
        self.missing
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        let mut missing = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, role) = line.rsplit_once('=').ok_or_else(|| {
                Error::Schema(format!("line {}: expected `name = role`", lineno + 1))
            })?;
            let name = name.trim();
            if name == "@missing" {
                if missing.replace(role.parse()?).is_some() {
                    return Err(Error::Schema("`@missing` given twice".into()));
                }
                continue;
            }
            if name.starts_with('@') {
                return Err(Error::Schema(format!("line {}: unknown directive `{name}`", lineno + 1)));
            }
            columns.push((name.to_string(), role.parse()?));
        }
        Ok(Schema::new(columns)?.with_missing(missing.unwrap_or_default()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::parse(&text)
    }

    /// The schema `write_csv` emits for a system: attributes in order, then
    /// the decision column.
    pub fn for_system(sys: &DecisionSystem) -> Self {
        let mut columns: Vec<(String, ColumnRole)> = sys
            .columns()
            .iter()
            .map(|c| {
                let role = match c.kind() {
                    AttributeKind::Numeric => ColumnRole::Numeric,
                    AttributeKind::Categorical => ColumnRole::Categorical,
                };
                (c.name().to_string(), role)
            })
            .collect();
        columns.push((sys.decision_name().to_string(), ColumnRole::Decision));
        Schema {
            columns,
            missing: MissingPolicy::Error,
        }
    }

    pub fn columns(&self) -> &[(String, ColumnRole)] {
        &self.columns
    }

    pub fn role(&self, name: &str) -> Option<ColumnRole> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, r)| *r)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.missing != MissingPolicy::Error {
            writeln!(f, "@missing = {}", self.missing)?;
        }
        for (name, role) in &self.columns {
            writeln!(f, "{name} = {role}")?;
        }
        Ok(())
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

/// Loads a CSV file under `schema`, normalizing numeric columns and
/// interning categorical ones. Row order is preserved.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<DecisionSystem> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub(crate) fn read_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<DecisionSystem> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let mut roles = Vec::with_capacity(headers.len());
    for h in &headers {
        match schema.role(h) {
            Some(r) => roles.push(r),
            None => return Err(Error::Schema(format!("column `{h}` is not declared in the schema"))),
        }
    }
    let header_set: HashMap<&str, ()> = headers.iter().map(|h| (h.as_str(), ())).collect();
    if header_set.len() != headers.len() {
        return Err(Error::Schema("duplicate header names".into()));
    }
    if let Some((name, _)) = schema
        .columns()
        .iter()
        .find(|(n, _)| !header_set.contains_key(n.as_str()))
    {
        return Err(Error::Schema(format!("declared column `{name}` missing from the file")));
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    // file row of every kept record, 1-based after the header line
    let mut rows: Vec<usize> = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        let row = row_idx + 1;
        let mut keep = true;
        for (c, cell) in record.iter().enumerate() {
            if roles[c] == ColumnRole::Ignore || !is_missing(cell) {
                continue;
            }
            match (schema.missing, roles[c]) {
                (MissingPolicy::Error, _) => {
                    return Err(Error::MissingValue {
                        row,
                        column: headers[c].clone(),
                    })
                }
                (MissingPolicy::Category, ColumnRole::Categorical) => {}
                _ => keep = false,
            }
        }
        if !keep {
            continue;
        }
        rows.push(row);
        for (c, cell) in record.iter().enumerate() {
            if roles[c] != ColumnRole::Ignore {
                cells[c].push(if is_missing(cell) { "?".to_string() } else { cell.to_string() });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidSystem("no usable data rows".into()));
    }

    let mut columns = Vec::new();
    let mut labels: Option<(&str, &[String])> = None;
    for (c, role) in roles.iter().enumerate() {
        match role {
            ColumnRole::Numeric => {
                let raw = cells[c]
                    .iter()
                    .enumerate()
                    .map(|(r, s)| {
                        s.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| Error::Parse {
                                row: rows[r],
                                column: headers[c].clone(),
                                message: format!("`{s}` is not a finite number"),
                            })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                columns.push(AttributeColumn::numeric_normalized(headers[c].clone(), &raw)?);
            }
            ColumnRole::Categorical => {
                columns.push(AttributeColumn::categorical(headers[c].clone(), &cells[c]));
            }
            ColumnRole::Decision => labels = Some((&headers[c], &cells[c])),
            ColumnRole::Ignore => {}
        }
    }
    let (decision_name, labels) = labels.expect("schema guarantees a decision column");
    DecisionSystem::from_labels(columns, labels, decision_name)
}

/// Writes the system as CSV: attribute columns in order, then the decision.
pub fn write_csv(sys: &DecisionSystem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(sys, file)
}

pub(crate) fn write_csv_to<W: Write>(sys: &DecisionSystem, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = sys.columns().iter().map(|c| c.name()).collect();
    header.push(sys.decision_name());
    wtr.write_record(&header)?;
    for x in 0..sys.n_samples() {
        let mut row: Vec<String> = sys.columns().iter().map(|c| c.display_value(x)).collect();
        row.push(sys.class_names()[sys.decision()[x] as usize].clone());
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Writes the schema matching [`write_csv`]'s output.
pub fn write_schema(sys: &DecisionSystem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, Schema::for_system(sys).to_string()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema(text: &str) -> Schema {
        Schema::parse(text).unwrap()
    }

    #[test]
    fn loads_and_normalizes() {
        let text = "num,cat,d\n2,x,a\n4,y,b\n6,x,a\n10,z,b\n";
        let sys = read_csv(text.as_bytes(), &schema("num = numeric\ncat = categorical\nd = decision")).unwrap();
        assert_eq!(sys.n_samples(), 4);
        assert_eq!(sys.column(0).numeric_values().unwrap(), &[0.0, 0.25, 0.5, 1.0]);
        assert_eq!(sys.column(1).levels(), &[0, 1, 0, 2]);
        assert_eq!(sys.decision(), &[0, 1, 0, 1]);
        assert_eq!(sys.n_classes(), 2);
    }

    #[test]
    fn single_label_is_valid() {
        let text = "num,d\n1,a\n2,a\n";
        let sys = read_csv(text.as_bytes(), &schema("num = numeric\nd = decision")).unwrap();
        assert_eq!(sys.n_classes(), 1);
    }

    #[test]
    fn constant_numeric_column_is_zeros() {
        let text = "num,d\n5,a\n5,b\n";
        let sys = read_csv(text.as_bytes(), &schema("num = numeric\nd = decision")).unwrap();
        assert_eq!(sys.column(0).numeric_values().unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let text = "num,extra,d\n1,2,a\n";
        let err = read_csv(text.as_bytes(), &schema("num = numeric\nd = decision")).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");

        let text = "num,d\n1,a\n";
        let err = read_csv(text.as_bytes(), &schema("num = numeric\nmissing = categorical\nd = decision"))
            .unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn schema_needs_one_decision() {
        assert!(Schema::parse("a = numeric").is_err());
        assert!(Schema::parse("a = decision\nb = decision").is_err());
        assert!(Schema::parse("a = weird\nb = decision").is_err());
    }

    #[test]
    fn parse_error_reports_row_and_column() {
        let text = "num,d\n1,a\nabc,b\n";
        match read_csv(text.as_bytes(), &schema("num = numeric\nd = decision")) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "num");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_values_are_rejected() {
        let text = "num,c,d\n1,?,a\n2,x,b\n";
        let err = read_csv(text.as_bytes(), &schema("num = numeric\nc = categorical\nd = decision"))
            .unwrap_err();
        assert!(matches!(err, Error::MissingValue { row: 1, .. }), "{err}");
    }

    #[test]
    fn missing_value_policies() {
        let text = "num,c,d\n1,?,a\n,x,b\n3,y,\n4,x,a\n5,y,b\n";
        let cols = "num = numeric\nc = categorical\nd = decision\n";

        let dropped = read_csv(text.as_bytes(), &schema(&format!("@missing = drop\n{cols}"))).unwrap();
        assert_eq!(dropped.n_samples(), 2);
        assert_eq!(dropped.column(0).display_value(0), "0");

        let kept = read_csv(text.as_bytes(), &schema(&format!("@missing = category\n{cols}"))).unwrap();
        assert_eq!(kept.n_samples(), 3);
        assert_eq!(kept.column(1).display_value(0), "?");

        let bad = "num,c,d\n1,x,a\n?,x,b\nz,y,a\n";
        let err = read_csv(bad.as_bytes(), &schema(&format!("@missing = drop\n{cols}"))).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");

        assert!(Schema::parse(&format!("@missing = maybe\n{cols}")).is_err());
        assert!(Schema::parse(&format!("@other = drop\n{cols}")).is_err());
        let s = schema(&format!("@missing = category\n{cols}"));
        assert_eq!(Schema::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn ignored_columns_are_dropped() {
        let text = "id,num,d\n7,1,a\n?,3,b\n";
        let sys = read_csv(text.as_bytes(), &schema("id = ignore\nnum = numeric\nd = decision")).unwrap();
        assert_eq!(sys.n_attributes(), 1);
    }

    fn normalized_system() -> impl Strategy<Value = DecisionSystem> {
        (1usize..20).prop_flat_map(|n| {
            (
                proptest::collection::vec(-50.0f64..50.0, n),
                proptest::collection::vec(0u8..3, n),
                proptest::collection::vec(0u8..3, n),
            )
                .prop_map(|(num, cat, d)| {
                    let cat: Vec<String> = cat.iter().map(|c| format!("s{c}")).collect();
                    let d: Vec<String> = d.iter().map(|c| format!("k{c}")).collect();
                    DecisionSystem::from_labels(
                        vec![
                            AttributeColumn::numeric_normalized("num", &num).unwrap(),
                            AttributeColumn::categorical("cat", &cat),
                        ],
                        &d,
                        "class",
                    )
                    .unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_identity(sys in normalized_system()) {
            let mut buf = Vec::new();
            write_csv_to(&sys, &mut buf).unwrap();
            let back = read_csv(buf.as_slice(), &Schema::for_system(&sys)).unwrap();
            prop_assert_eq!(back, sys);
        }
    }
}
