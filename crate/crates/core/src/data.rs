//! Dataset model and CSV ingestion.
//!
//! Missing cells are stored as `NaN` inside feature matrices and as `None`
//! inside label matrices. Every loader validates the invariants of the type it
//! returns, so downstream code can assume unique ids and unique feature names.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A calendar month. Ordered by (year, month).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthDate {
    year: i32,
    month: u8,
}

impl MonthDate {
    pub const MIN_YEAR: i32 = 1800;
    pub const MAX_YEAR: i32 = 2200;

    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) || !(Self::MIN_YEAR..=Self::MAX_YEAR).contains(&year) {
            return Err(Error::InvalidDate(format!("{year:04}-{month:02}")));
        }
        Ok(MonthDate { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    /// Months elapsed since January of year 0.
    pub fn ordinal(self) -> i32 {
        self.year * 12 + i32::from(self.month) - 1
    }

    pub fn from_ordinal(ordinal: i32) -> Result<Self> {
        Self::new(ordinal.div_euclid(12), (ordinal.rem_euclid(12) + 1) as u8)
    }

    /// Signed number of months from `self` to `later`.
    pub fn months_until(self, later: MonthDate) -> i32 {
        later.ordinal() - self.ordinal()
    }
}

impl FromStr for MonthDate {
    type Err = Error;

    /// Accepts `YYYY-MM` and `YYYY/MM`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDate(s.to_string());
        let t = s.trim();
        let (y, m) = t.split_once(['-', '/']).ok_or_else(bad)?;
        if y.len() != 4 || m.is_empty() || m.len() > 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u8 = m.parse().map_err(|_| bad())?;
        MonthDate::new(year, month).map_err(|_| bad())
    }
}

impl fmt::Display for MonthDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl Serialize for MonthDate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthDate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundRecord {
    pub id: String,
    pub canonical_name: String,
    pub smiles: Option<String>,
    pub market_date: Option<MonthDate>,
}

/// A set of compounds with unique ids.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    records: Vec<CompoundRecord>,
    index: HashMap<String, usize>,
}

impl Registry {
    pub fn new(records: Vec<CompoundRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.canonical_name.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "compound {:?} has an empty canonical name",
                    r.id
                )));
            }
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::DuplicateCompound(r.id.clone()));
            }
        }
        Ok(Registry { records, index })
    }

    /// Builds a registry from `dates.csv` rows, attaching structures where
    /// `smiles` has an entry for the id.
    pub fn from_parts(
        dates: Vec<(String, Option<MonthDate>)>,
        smiles: &HashMap<String, String>,
    ) -> Result<Self> {
        let records = dates
            .into_iter()
            .map(|(id, market_date)| CompoundRecord {
                canonical_name: id.clone(),
                smiles: smiles.get(&id).cloned(),
                market_date,
                id,
            })
            .collect();
        Registry::new(records)
    }

    pub fn get(&self, id: &str) -> Option<&CompoundRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[CompoundRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// One named dataset: rows are compounds, columns are features, `NaN` marks a
/// missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub dataset_name: String,
    pub compound_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub values: Array2<f64>,
}

impl FeatureTable {
    pub fn new(
        dataset_name: impl Into<String>,
        compound_ids: Vec<String>,
        feature_names: Vec<String>,
        values: Array2<f64>,
    ) -> Result<Self> {
        if values.nrows() != compound_ids.len() || values.ncols() != feature_names.len() {
            return Err(Error::ShapeMismatch(format!(
                "matrix is {}x{} but there are {} ids and {} feature names",
                values.nrows(),
                values.ncols(),
                compound_ids.len(),
                feature_names.len()
            )));
        }
        ensure_unique(&compound_ids).map_err(Error::DuplicateCompound)?;
        ensure_unique(&feature_names).map_err(Error::DuplicateFeature)?;
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::NonFinite("feature table"));
        }
        Ok(FeatureTable {
            dataset_name: dataset_name.into(),
            compound_ids,
            feature_names,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    /// Feature names prefixed with the dataset name (`dataset.feature`).
    pub fn namespaced_feature_names(&self) -> Vec<String> {
        self.feature_names
            .iter()
            .map(|f| format!("{}.{}", self.dataset_name, f))
            .collect()
    }

    pub fn row_index(&self) -> HashMap<&str, usize> {
        self.compound_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect()
    }

    /// Rows for `ids`, in that order. Every id must be present.
    pub fn select_rows(&self, ids: &[String]) -> Result<FeatureTable> {
        let index = self.row_index();
        let rows = ids
            .iter()
            .map(|id| {
                index.get(id.as_str()).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "compound {id:?} not in dataset {:?}",
                        self.dataset_name
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureTable {
            dataset_name: self.dataset_name.clone(),
            compound_ids: ids.to_vec(),
            feature_names: self.feature_names.clone(),
            values: self.values.select(Axis(0), &rows),
        })
    }

    pub fn select_columns(&self, columns: &[usize]) -> FeatureTable {
        FeatureTable {
            dataset_name: self.dataset_name.clone(),
            compound_ids: self.compound_ids.clone(),
            feature_names: columns.iter().map(|&j| self.feature_names[j].clone()).collect(),
            values: self.values.select(Axis(1), columns),
        }
    }

    pub fn rename_ids(&self, ids: Vec<String>) -> Result<FeatureTable> {
        FeatureTable::new(
            self.dataset_name.clone(),
            ids,
            self.feature_names.clone(),
            self.values.clone(),
        )
    }

    /// Writes the `features_<name>.csv` layout. Values use the shortest
    /// decimal form that parses back to the identical `f64`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "compound_id")?;
        for f in &self.feature_names {
            write!(w, ",{}", csv_field(f))?;
        }
        writeln!(w)?;
        for (id, row) in self.compound_ids.iter().zip(self.values.rows()) {
            write!(w, "{}", csv_field(id))?;
            for v in row {
                if v.is_nan() {
                    write!(w, ",")?;
                } else {
                    write!(w, ",{v}")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Binary labels per compound and target; `None` is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTable {
    pub compound_ids: Vec<String>,
    pub target_names: Vec<String>,
    pub values: Array2<Option<bool>>,
}

impl LabelTable {
    pub fn new(
        compound_ids: Vec<String>,
        target_names: Vec<String>,
        values: Array2<Option<bool>>,
    ) -> Result<Self> {
        if values.nrows() != compound_ids.len() || values.ncols() != target_names.len() {
            return Err(Error::ShapeMismatch(format!(
                "label matrix is {}x{} but there are {} ids and {} targets",
                values.nrows(),
                values.ncols(),
                compound_ids.len(),
                target_names.len()
            )));
        }
        ensure_unique(&compound_ids).map_err(Error::DuplicateCompound)?;
        ensure_unique(&target_names)
            .map_err(|t| Error::InvalidArgument(format!("duplicate target name {t:?}")))?;
        Ok(LabelTable {
            compound_ids,
            target_names,
            values,
        })
    }

    pub fn target_index(&self, name: &str) -> Option<usize> {
        self.target_names.iter().position(|t| t == name)
    }

    /// Labels of one target, aligned with `compound_ids`.
    pub fn target(&self, j: usize) -> Vec<Option<bool>> {
        self.values.column(j).to_vec()
    }

    /// Fraction of positives among non-missing labels of column `j`, if any.
    pub fn positive_ratio(&self, j: usize) -> Option<f64> {
        let (pos, n) = self
            .values
            .column(j)
            .iter()
            .flatten()
            .fold((0usize, 0usize), |(p, n), &l| (p + usize::from(l), n + 1));
        (n > 0).then(|| pos as f64 / n as f64)
    }

    pub fn select_rows(&self, ids: &[String]) -> Result<LabelTable> {
        let index: HashMap<&str, usize> = self
            .compound_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let rows = ids
            .iter()
            .map(|id| {
                index.get(id.as_str()).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!("compound {id:?} has no labels"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabelTable {
            compound_ids: ids.to_vec(),
            target_names: self.target_names.clone(),
            values: self.values.select(Axis(0), &rows),
        })
    }

    pub fn select_targets(&self, columns: &[usize]) -> LabelTable {
        LabelTable {
            compound_ids: self.compound_ids.clone(),
            target_names: columns.iter().map(|&j| self.target_names[j].clone()).collect(),
            values: self.values.select(Axis(1), columns),
        }
    }
}

/// Case-insensitive alias → canonical name lookup.
#[derive(Debug, Clone, Default)]
pub struct SynonymMap {
    map: HashMap<String, String>,
}

impl SynonymMap {
    /// Builds the map from `(alias, canonical)` pairs. Each canonical name is
    /// also registered as an alias of itself. An alias bound to two different
    /// canonical names is an error.
    pub fn new<I, A, C>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, C)>,
        A: AsRef<str>,
        C: AsRef<str>,
    {
        let mut map: HashMap<String, String> = HashMap::new();
        let mut insert = |alias: &str, canonical: &str| -> Result<()> {
            let key = alias.trim().to_lowercase();
            match map.get(&key) {
                Some(existing) if existing != canonical => Err(Error::InvalidArgument(format!(
                    "alias {alias:?} maps to both {existing:?} and {canonical:?}"
                ))),
                Some(_) => Ok(()),
                None => {
                    map.insert(key, canonical.to_string());
                    Ok(())
                }
            }
        };
        let pairs: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(a, c)| (a.as_ref().to_string(), c.as_ref().trim().to_string()))
            .collect();
        for (alias, canonical) in &pairs {
            insert(alias, canonical)?;
        }
        for (_, canonical) in &pairs {
            insert(canonical, canonical)?;
        }
        Ok(SynonymMap { map })
    }

    pub fn lookup(&self, name: &str) -> Option<&str> {
        self.map.get(&name.trim().to_lowercase()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NameResolution {
    /// `(raw, canonical)` for every name that had a mapping, in input order.
    pub resolved: Vec<(String, String)>,
    pub excluded: Vec<String>,
}

pub fn normalize_names<S: AsRef<str>>(names: &[S], synonyms: &SynonymMap) -> NameResolution {
    let mut out = NameResolution::default();
    for raw in names {
        let raw = raw.as_ref();
        match synonyms.lookup(raw) {
            Some(c) => out.resolved.push((raw.to_string(), c.to_string())),
            None => out.excluded.push(raw.to_string()),
        }
    }
    out
}

/// Inputs aligned to one shared, lexicographically sorted id list.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub compound_ids: Vec<String>,
    pub records: Vec<CompoundRecord>,
    pub tables: Vec<FeatureTable>,
    pub labels: LabelTable,
}

impl DatasetBundle {
    pub fn len(&self) -> usize {
        self.compound_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.compound_ids.is_empty()
    }

    pub fn table(&self, name: &str) -> Option<&FeatureTable> {
        self.tables.iter().find(|t| t.dataset_name == name)
    }
}

pub fn intersect_compounds(
    tables: &[FeatureTable],
    labels: &LabelTable,
    registry: &Registry,
) -> Result<DatasetBundle> {
    if tables.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one feature table is required".into(),
        ));
    }
    let mut shared: BTreeSet<&str> = tables[0].compound_ids.iter().map(String::as_str).collect();
    for t in &tables[1..] {
        let ids: HashSet<&str> = t.compound_ids.iter().map(String::as_str).collect();
        shared.retain(|id| ids.contains(id));
    }
    let label_ids: HashSet<&str> = labels.compound_ids.iter().map(String::as_str).collect();
    shared.retain(|id| label_ids.contains(id) && registry.get(id).is_some());
    if shared.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let ids: Vec<String> = shared.into_iter().map(str::to_string).collect();
    let tables = tables
        .iter()
        .map(|t| t.select_rows(&ids))
        .collect::<Result<Vec<_>>>()?;
    let records = ids
        .iter()
        .map(|id| registry.get(id).cloned().expect("filtered above"))
        .collect();
    Ok(DatasetBundle {
        labels: labels.select_rows(&ids)?,
        compound_ids: ids,
        records,
        tables,
    })
}

/// Keeps targets whose positive ratio `r` satisfies `low <= r <= high`.
/// Targets with no labelled compounds are dropped.
pub fn filter_targets_by_positive_ratio(
    labels: &LabelTable,
    low: f64,
    high: f64,
) -> Result<LabelTable> {
    if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low >= high {
        return Err(Error::InvalidArgument(format!(
            "positive-ratio bounds must satisfy 0 <= low < high <= 1, got [{low}, {high}]"
        )));
    }
    let keep: Vec<usize> = (0..labels.target_names.len())
        .filter(|&j| {
            labels
                .positive_ratio(j)
                .is_some_and(|r| r >= low && r <= high)
        })
        .collect();
    Ok(labels.select_targets(&keep))
}

fn ensure_unique(items: &[String]) -> std::result::Result<(), String> {
    let mut seen = HashSet::with_capacity(items.len());
    for item in items {
        if !seen.insert(item.as_str()) {
            return Err(item.clone());
        }
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub(crate) fn is_missing_cell(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t == "NaN" || t == "nan"
}

pub(crate) fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Headers)
        .from_reader(file))
}

pub(crate) fn headers(path: &Path, rdr: &mut csv::Reader<std::fs::File>) -> Result<Vec<String>> {
    Ok(rdr
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect())
}

pub(crate) fn expect_first_header(path: &Path, headers: &[String], expected: &str) -> Result<()> {
    match headers.first() {
        Some(h) if h == expected => Ok(()),
        other => Err(Error::format(
            path,
            format!("first column header must be {expected:?}, found {other:?}"),
        )),
    }
}

/// Loads `compound_id, f1, f2, …`. Rows keep file order.
pub fn load_feature_table(path: impl AsRef<Path>, dataset_name: &str) -> Result<FeatureTable> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let headers = headers(path, &mut rdr)?;
    expect_first_header(path, &headers, "compound_id")?;
    let feature_names = headers[1..].to_vec();
    ensure_unique(&feature_names).map_err(Error::DuplicateFeature)?;

    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = row + 2;
        if rec.len() != headers.len() {
            return Err(Error::format(
                path,
                format!("line {line}: expected {} cells, found {}", headers.len(), rec.len()),
            ));
        }
        let id = rec[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateCompound(id));
        }
        for (col, cell) in rec.iter().enumerate().skip(1) {
            let v = if is_missing_cell(cell) {
                f64::NAN
            } else {
                match cell.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(Error::format(
                            path,
                            format!(
                                "line {line}, column {:?}: non-numeric value {cell:?}",
                                headers[col]
                            ),
                        ))
                    }
                }
            };
            values.push(v);
        }
        ids.push(id);
    }
    let matrix = Array2::from_shape_vec((ids.len(), feature_names.len()), values)
        .expect("row lengths checked");
    FeatureTable::new(dataset_name, ids, feature_names, matrix)
}

/// Loads `compound_id, target1, …` with cells `0`, `1`, or empty.
pub fn load_label_table(path: impl AsRef<Path>) -> Result<LabelTable> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let headers = headers(path, &mut rdr)?;
    expect_first_header(path, &headers, "compound_id")?;
    let targets = headers[1..].to_vec();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = row + 2;
        if rec.len() != headers.len() {
            return Err(Error::format(
                path,
                format!("line {line}: expected {} cells, found {}", headers.len(), rec.len()),
            ));
        }
        ids.push(rec[0].trim().to_string());
        for (col, cell) in rec.iter().enumerate().skip(1) {
            let label = match cell.trim() {
                c if is_missing_cell(c) => None,
                "0" | "0.0" => Some(false),
                "1" | "1.0" => Some(true),
                other => {
                    return Err(Error::format(
                        path,
                        format!("line {line}, column {:?}: label must be 0, 1 or empty, found {other:?}", headers[col]),
                    ))
                }
            };
            values.push(label);
        }
    }
    let matrix =
        Array2::from_shape_vec((ids.len(), targets.len()), values).expect("row lengths checked");
    LabelTable::new(ids, targets, matrix)
}

/// Loads `compound_id, market_date` (YYYY-MM, empty = unknown).
pub fn load_dates(path: impl AsRef<Path>) -> Result<Vec<(String, Option<MonthDate>)>> {
    let path = path.as_ref();
    let rows = load_pairs(path, "compound_id")?;
    let mut seen = HashSet::new();
    rows.into_iter()
        .enumerate()
        .map(|(i, (id, date))| {
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateCompound(id));
            }
            let date = if date.trim().is_empty() {
                None
            } else {
                Some(date.parse().map_err(|e: Error| {
                    Error::format(path, format!("line {}: {e}", i + 2))
                })?)
            };
            Ok((id, date))
        })
        .collect()
}

/// Loads `compound_id, smiles`.
pub fn load_smiles(path: impl AsRef<Path>) -> Result<HashMap<String, String>> {
    let path = path.as_ref();
    let mut out = HashMap::new();
    for (id, smiles) in load_pairs(path, "compound_id")? {
        if smiles.trim().is_empty() {
            continue;
        }
        if out.insert(id.clone(), smiles.trim().to_string()).is_some() {
            return Err(Error::DuplicateCompound(id));
        }
    }
    Ok(out)
}

/// Loads `alias, canonical`.
pub fn load_synonyms(path: impl AsRef<Path>) -> Result<SynonymMap> {
    SynonymMap::new(load_pairs(path.as_ref(), "alias")?)
}

fn load_pairs(path: &Path, first: &str) -> Result<Vec<(String, String)>> {
    let mut rdr = reader(path)?;
    let headers = headers(path, &mut rdr)?;
    expect_first_header(path, &headers, first)?;
    if headers.len() < 2 {
        return Err(Error::format(path, "expected at least two columns"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        out.push((
            rec.get(0).unwrap_or("").trim().to_string(),
            rec.get(1).unwrap_or("").to_string(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn month_date_parse_and_order() {
        let a: MonthDate = "1998-09".parse().unwrap();
        let b: MonthDate = "1998/10".parse().unwrap();
        assert!(a < b);
        assert_eq!(b.to_string(), "1998-10");
        assert!("1998-13".parse::<MonthDate>().is_err());
        assert!("1700-01".parse::<MonthDate>().is_err());
        assert!("98-01".parse::<MonthDate>().is_err());
        let d = MonthDate::new(2000, 1).unwrap();
        assert_eq!(MonthDate::from_ordinal(d.ordinal()).unwrap(), d);
        assert_eq!(d.months_until(MonthDate::new(2003, 1).unwrap()), 36);
    }

    #[test]
    fn feature_table_shape_and_literals() {
        let f = write_tmp("compound_id,f1,f2\nA,1,1e-3\nB,,2\nC,NaN,3\n");
        let t = load_feature_table(f.path(), "d").unwrap();
        assert_eq!(t.values.dim(), (3, 2));
        assert_eq!(t.values[[0, 1]], 0.001);
        assert!(t.values[[1, 0]].is_nan());
        assert!(t.values[[2, 0]].is_nan());
    }

    #[test]
    fn duplicate_header_rejected() {
        let f = write_tmp("compound_id,f1,f1\nA,1,2\n");
        let err = load_feature_table(f.path(), "d").unwrap_err();
        assert!(err.to_string().contains("duplicate feature name"), "{err}");
    }

    #[test]
    fn duplicate_id_and_bad_cell_rejected() {
        let f = write_tmp("compound_id,f1\nA,1\nA,2\n");
        assert!(matches!(
            load_feature_table(f.path(), "d"),
            Err(Error::DuplicateCompound(id)) if id == "A"
        ));
        let f = write_tmp("compound_id,f1\nA,abc\n");
        let err = load_feature_table(f.path(), "d").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("f1"), "{err}");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = FeatureTable::new(
            "d",
            vec!["A".into(), "B".into()],
            vec!["x".into(), "y".into()],
            array![[0.1 + 0.2, f64::NAN], [1e-300, -123456.789]],
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let f = write_tmp(std::str::from_utf8(&buf).unwrap());
        let back = load_feature_table(f.path(), "d").unwrap();
        assert_eq!(back.compound_ids, t.compound_ids);
        for (a, b) in back.values.iter().zip(t.values.iter()) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn labels_and_ratio_filter() {
        let f = write_tmp("compound_id,t1,t2\nA,1,0\nB,0,\nC,0,1\nD,0,1\nE,0,0\n");
        let l = load_label_table(f.path()).unwrap();
        assert_eq!(l.positive_ratio(0), Some(0.2));
        assert_eq!(l.positive_ratio(1), Some(0.5));
        let kept = filter_targets_by_positive_ratio(&l, 0.2, 0.8).unwrap();
        assert_eq!(kept.target_names, vec!["t1", "t2"]);
        let kept = filter_targets_by_positive_ratio(&l, 0.25, 0.8).unwrap();
        assert_eq!(kept.target_names, vec!["t2"]);
        assert_eq!(filter_targets_by_positive_ratio(&l, 0.0, 1.0).unwrap(), l);
    }

    #[test]
    fn ratio_examples() {
        let mk = |pos: usize, n: usize| {
            let v: Vec<Option<bool>> = (0..n).map(|i| Some(i < pos)).collect();
            LabelTable::new(
                (0..n).map(|i| format!("c{i}")).collect(),
                vec!["t".into()],
                Array2::from_shape_vec((n, 1), v).unwrap(),
            )
            .unwrap()
        };
        let low = filter_targets_by_positive_ratio(&mk(10, 100), 0.2, 0.8).unwrap();
        assert!(low.target_names.is_empty());
        let ok = filter_targets_by_positive_ratio(&mk(19, 90), 0.2, 0.8).unwrap();
        assert_eq!(ok.target_names, vec!["t"]);
    }

    #[test]
    fn synonyms_resolve_case_insensitively() {
        let map = SynonymMap::new([("aspirin", "acetylsalicylic acid")]).unwrap();
        let r = normalize_names(&["ASPIRIN", "unknownium", "Acetylsalicylic Acid"], &map);
        assert_eq!(
            r.resolved,
            vec![
                ("ASPIRIN".to_string(), "acetylsalicylic acid".to_string()),
                ("Acetylsalicylic Acid".to_string(), "acetylsalicylic acid".to_string())
            ]
        );
        assert_eq!(r.excluded, vec!["unknownium"]);
        let identity = SynonymMap::new([("x", "x")]).unwrap();
        assert_eq!(normalize_names(&["x"], &identity).resolved[0].1, "x");
        assert!(SynonymMap::new([("a", "b"), ("A", "c")]).is_err());
    }

    fn table(name: &str, ids: &[&str]) -> FeatureTable {
        let n = ids.len();
        FeatureTable::new(
            name,
            ids.iter().map(|s| s.to_string()).collect(),
            vec!["f".into()],
            Array2::from_shape_fn((n, 1), |(i, _)| i as f64),
        )
        .unwrap()
    }

    fn labels_for(ids: &[&str]) -> LabelTable {
        LabelTable::new(
            ids.iter().map(|s| s.to_string()).collect(),
            vec!["t".into()],
            Array2::from_elem((ids.len(), 1), Some(true)),
        )
        .unwrap()
    }

    fn registry_for(ids: &[&str]) -> Registry {
        Registry::from_parts(
            ids.iter().map(|s| (s.to_string(), None)).collect(),
            &HashMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn intersection_is_sorted_and_aligned() {
        let all = ["A", "B", "C", "D"];
        let b = intersect_compounds(
            &[table("x", &["C", "A", "B"]), table("y", &["D", "C", "B"])],
            &labels_for(&all),
            &registry_for(&all),
        )
        .unwrap();
        assert_eq!(b.compound_ids, vec!["B", "C"]);
        assert_eq!(b.tables[0].values.column(0).to_vec(), vec![2.0, 0.0]);
        assert_eq!(b.tables[1].values.column(0).to_vec(), vec![2.0, 1.0]);

        let single = intersect_compounds(
            &[table("x", &["C", "A"])],
            &labels_for(&all),
            &registry_for(&all),
        )
        .unwrap();
        assert_eq!(single.compound_ids, vec!["A", "C"]);

        let none = intersect_compounds(
            &[table("x", &["A"]), table("y", &["B"])],
            &labels_for(&all),
            &registry_for(&all),
        );
        assert!(matches!(none, Err(Error::EmptyIntersection)));
    }
}
