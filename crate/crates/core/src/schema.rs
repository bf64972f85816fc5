//! Order data model: attribute schemas, records, datasets and CSV I/O.
//!
//! Attribute values are opaque strings compared only by equality. A
//! [`Dataset`] interns every column into dense `u32` codes once at
//! construction so distance kernels never touch strings.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Code used for a missing value in the interned representation.
pub const NULL_CODE: u32 = u32::MAX;

/// Names of the reserved leading CSV columns.
pub const RESERVED_COLUMNS: [&str; 3] = ["record_id", "timestamp", "label"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttributeCategory {
    Customer,
    Delivery,
    Shipping,
    Payment,
    Billing,
}

impl AttributeCategory {
    pub const ALL: [AttributeCategory; 5] = [
        AttributeCategory::Customer,
        AttributeCategory::Delivery,
        AttributeCategory::Shipping,
        AttributeCategory::Payment,
        AttributeCategory::Billing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttributeCategory::Customer => "customer",
            AttributeCategory::Delivery => "delivery",
            AttributeCategory::Shipping => "shipping",
            AttributeCategory::Payment => "payment",
            AttributeCategory::Billing => "billing",
        }
    }
}

impl fmt::Display for AttributeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttributeCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttributeCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Schema(format!("unknown attribute category `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub id: String,
    pub category: AttributeCategory,
}

impl Attribute {
    pub fn new(id: impl Into<String>, category: AttributeCategory) -> Self {
        Attribute {
            id: id.into(),
            category,
        }
    }
}

/// Ordered list of categorical attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
}

const DEFAULT_LAYOUT: [(AttributeCategory, &[&str]); 5] = [
    (
        AttributeCategory::Customer,
        &[
            "customer_id",
            "customer_email",
            "customer_name",
            "customer_phone",
            "customer_birthdate",
            "customer_account_age",
            "customer_type",
            "customer_language",
            "customer_device",
        ],
    ),
    (
        AttributeCategory::Delivery,
        &["delivery_method", "delivery_carrier", "delivery_option"],
    ),
    (
        AttributeCategory::Shipping,
        &[
            "ship_name",
            "ship_street",
            "ship_house_number",
            "ship_zip",
            "ship_city",
            "ship_country",
            "ship_address_type",
        ],
    ),
    (
        AttributeCategory::Payment,
        &[
            "payment_method",
            "card_bin",
            "card_number",
            "card_country",
            "card_expiry",
            "iban",
            "payment_provider",
            "payment_account",
            "payment_installments",
            "voucher_code",
            "gift_card",
        ],
    ),
    (
        AttributeCategory::Billing,
        &[
            "bill_name",
            "bill_street",
            "bill_house_number",
            "bill_zip",
            "bill_city",
            "bill_country",
            "bill_email",
        ],
    ),
];

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Schema("schema has no attributes".into()));
        }
        let mut seen = HashSet::new();
        for a in &attributes {
            if a.id.is_empty() {
                return Err(Error::Schema("empty attribute id".into()));
            }
            if RESERVED_COLUMNS.contains(&a.id.as_str()) {
                return Err(Error::Schema(format!("`{}` is a reserved column", a.id)));
            }
            if !seen.insert(a.id.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute id `{}`", a.id)));
            }
        }
        Ok(AttributeSchema { attributes })
    }

    /// The 37-attribute order layout: 9 customer, 3 delivery, 7 shipping,
    /// 11 payment and 7 billing attributes.
    pub fn default_orders() -> Self {
        let attributes = DEFAULT_LAYOUT
            .iter()
            .flat_map(|(cat, ids)| ids.iter().map(|id| Attribute::new(*id, *cat)))
            .collect();
        AttributeSchema { attributes }
    }

    /// Number of attributes.
    pub fn d(&self) -> usize {
        self.attributes.len()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.id.as_str())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.id == id)
    }

    pub fn count(&self, category: AttributeCategory) -> usize {
        self.attributes
            .iter()
            .filter(|a| a.category == category)
            .count()
    }

    /// Parses `attribute_id=category` lines. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut attributes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, cat) = line.split_once('=').ok_or_else(|| {
                Error::parse(
                    lineno as u64 + 1,
                    format!("expected `id=category`, got `{line}`"),
                )
            })?;
            let category = cat
                .trim()
                .parse()
                .map_err(|e: Error| Error::parse(lineno as u64 + 1, e.to_string()))?;
            attributes.push(Attribute::new(id.trim(), category));
        }
        AttributeSchema::new(attributes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        AttributeSchema::parse(&text)
    }

    pub fn to_text(&self) -> String {
        self.attributes
            .iter()
            .map(|a| format!("{}={}\n", a.id, a.category))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Fraud,
    Legitimate,
    Unlabeled,
}

impl Label {
    pub fn token(self) -> &'static str {
        match self {
            Label::Fraud => "F",
            Label::Legitimate => "L",
            Label::Unlabeled => "U",
        }
    }

    /// Accepts `F`, `L`, `U` and the empty cell (unlabeled).
    pub fn from_token(token: &str) -> Option<Label> {
        match token {
            "F" => Some(Label::Fraud),
            "L" => Some(Label::Legitimate),
            "U" | "" => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn is_labeled(self) -> bool {
        self != Label::Unlabeled
    }
}

/// One order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub record_id: String,
    /// Seconds since the epoch.
    pub timestamp: i64,
    pub label: Label,
    /// One entry per schema attribute; `None` is a missing value.
    pub values: Vec<Option<String>>,
}

/// Immutable set of records conforming to one schema.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Arc<AttributeSchema>,
    records: Vec<Record>,
    codes: Vec<u32>,
}

impl Dataset {
    pub fn new(schema: impl Into<Arc<AttributeSchema>>, records: Vec<Record>) -> Result<Self> {
        let schema = schema.into();
        let d = schema.d();
        for r in &records {
            if r.values.len() != d {
                return Err(Error::Schema(format!(
                    "record `{}` has {} values, schema has {d} attributes",
                    r.record_id,
                    r.values.len()
                )));
            }
        }
        let codes = encode(&records, d);
        Ok(Dataset {
            schema,
            records,
            codes,
        })
    }

    pub fn empty(schema: impl Into<Arc<AttributeSchema>>) -> Self {
        Dataset {
            schema: schema.into(),
            records: Vec::new(),
            codes: Vec::new(),
        }
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn shared_schema(&self) -> Arc<AttributeSchema> {
        Arc::clone(&self.schema)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn record(&self, i: usize) -> &Record {
        &self.records[i]
    }

    /// Number of records.
    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Interned attribute codes of record `i`. Equal codes at the same
    /// position mean equal values; [`NULL_CODE`] marks a missing value.
    #[inline]
    pub fn row(&self, i: usize) -> &[u32] {
        let d = self.schema.d();
        &self.codes[i * d..(i + 1) * d]
    }

    pub fn labels(&self) -> Vec<Label> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.n(),
            })
        }
    }

    /// New dataset holding the given records in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut records = Vec::with_capacity(indices.len());
        for &i in indices {
            self.check_index(i)?;
            records.push(self.records[i].clone());
        }
        Dataset::new(self.shared_schema(), records)
    }

    /// Same records with labels replaced by `f(index, record)`.
    pub fn relabel(&self, mut f: impl FnMut(usize, &Record) -> Label) -> Dataset {
        let records = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| Record {
                label: f(i, r),
                ..r.clone()
            })
            .collect();
        Dataset {
            schema: self.shared_schema(),
            records,
            codes: self.codes.clone(),
        }
    }
}

fn encode(records: &[Record], d: usize) -> Vec<u32> {
    let mut dictionaries: Vec<HashMap<&str, u32>> = vec![HashMap::new(); d];
    let mut codes = Vec::with_capacity(records.len() * d);
    for r in records {
        for (dict, v) in dictionaries.iter_mut().zip(&r.values) {
            let code = match v {
                None => NULL_CODE,
                Some(s) => {
                    let next = dict.len() as u32;
                    *dict.entry(s.as_str()).or_insert(next)
                }
            };
            codes.push(code);
        }
    }
    codes
}

/// Concatenates two datasets over the same schema, `a` first.
pub fn merge(a: &Dataset, b: &Dataset) -> Result<Dataset> {
    if a.schema() != b.schema() {
        return Err(Error::Schema(
            "cannot merge datasets with different schemas".into(),
        ));
    }
    let records = a.records.iter().chain(&b.records).cloned().collect();
    Dataset::new(a.shared_schema(), records)
}

pub fn load_csv(
    path: impl AsRef<Path>,
    schema: impl Into<Arc<AttributeSchema>>,
    null_marker: &str,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    read_csv(file, schema, null_marker)
}

/// Reads the order CSV format: header `record_id,timestamp,label,<attr_1>,...`.
pub fn read_csv(
    reader: impl Read,
    schema: impl Into<Arc<AttributeSchema>>,
    null_marker: &str,
) -> Result<Dataset> {
    let schema = schema.into();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();

    let header = match rows.next() {
        Some(h) => h.map_err(|e| csv_error(&e))?,
        None => return Err(Error::parse(1, "missing header row")),
    };
    let expected: Vec<&str> = RESERVED_COLUMNS
        .iter()
        .copied()
        .chain(schema.ids())
        .collect();
    let found: Vec<&str> = header.iter().collect();
    if found != expected {
        return Err(Error::parse(
            1,
            format!("header does not match schema: expected {expected:?}, found {found:?}"),
        ));
    }

    let width = expected.len();
    let mut records = Vec::new();
    for row in rows {
        let row = row.map_err(|e| csv_error(&e))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != width {
            return Err(Error::parse(
                line,
                format!("expected {width} columns, found {}", row.len()),
            ));
        }
        let timestamp = row[1]
            .parse::<i64>()
            .map_err(|_| Error::parse(line, format!("invalid timestamp `{}`", &row[1])))?;
        let label = Label::from_token(&row[2])
            .ok_or_else(|| Error::parse(line, format!("unknown label `{}`", &row[2])))?;
        let values = row
            .iter()
            .skip(RESERVED_COLUMNS.len())
            .map(|cell| (cell != null_marker).then(|| cell.to_owned()))
            .collect();
        records.push(Record {
            record_id: row[0].to_owned(),
            timestamp,
            label,
            values,
        });
    }
    Dataset::new(schema, records)
}

fn csv_error(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::parse(line, e.to_string())
}

pub fn write_csv(data: &Dataset, writer: impl Write, null_marker: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<&str> = RESERVED_COLUMNS
        .iter()
        .copied()
        .chain(data.schema().ids())
        .collect();
    w.write_record(&header).map_err(|e| csv_error(&e))?;
    for r in data.records() {
        let ts = r.timestamp.to_string();
        let fields = [r.record_id.as_str(), ts.as_str(), r.label.token()]
            .into_iter()
            .chain(r.values.iter().map(|v| v.as_deref().unwrap_or(null_marker)));
        w.write_record(fields).map_err(|e| csv_error(&e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>, null_marker: &str) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    write_csv(data, std::io::BufWriter::new(file), null_marker)
}
