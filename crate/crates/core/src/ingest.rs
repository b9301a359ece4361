//! Reading, writing and validating cohort datasets.
//!
//! The on-disk format is plain comma-delimited UTF-8:
//!
//! ```text
//! #series,Italy                        (optional; makes the blocks one series)
//! source: Istituto Superiore di Sanita
//! #cohort,Italy,2020-03-09,iss9march
//! band,cases,deaths
//! 0-9,43,0
//! ...
//! 80+,1532,202
//! total,8026,357                       (optional; cross-checked)
//! ```
//!
//! A file without `#series` may hold one or several independent cohort blocks.
//! Scalar tables use `#scalars,<name>` followed by `label,value` rows.
//! Empty lines are ignored. `source:` lines are kept and written back first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohort::{AgeBand, BandSchema, CohortSeries, Counts, StratifiedCohort};
use crate::error::{Error, Result};

/// A located diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

/// Errors and warnings from parsing or validation. Ingestion succeeds iff `errors` is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn error(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Diagnostic { location: location.into(), message: message.into() });
    }

    pub fn warn(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Diagnostic { location: location.into(), message: message.into() });
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.errors.extend(other.errors);
        self.warnings.extend(other.warnings);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.errors {
            writeln!(f, "error: {}: {}", d.location, d.message)?;
        }
        for d in &self.warnings {
            writeln!(f, "warning: {}: {}", d.location, d.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarTable {
    pub name: String,
    pub entries: Vec<(String, f64)>,
}

impl ScalarTable {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries.iter().find(|(l, _)| l == label).map(|e| e.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dataset {
    /// One or more independent cohorts, in file order.
    Cohorts(Vec<StratifiedCohort>),
    Series(CohortSeries),
    Scalars(ScalarTable),
}

impl Dataset {
    /// All cohorts, whether independent or snapshots of a series.
    pub fn cohorts(&self) -> &[StratifiedCohort] {
        match self {
            Dataset::Cohorts(v) => v,
            Dataset::Series(s) => s.snapshots(),
            Dataset::Scalars(_) => &[],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Dataset::Cohorts(_) => "cohorts",
            Dataset::Series(_) => "series",
            Dataset::Scalars(_) => "scalars",
        }
    }
}

/// A parsed file: its content plus `source:` citations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub sources: Vec<String>,
    pub content: Dataset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub file: DatasetFile,
    pub report: ValidationReport,
}

struct Block {
    line: usize,
    label: String,
    date: Option<NaiveDate>,
    source: String,
    bands: Vec<AgeBand>,
    cases: Vec<u64>,
    deaths: Vec<u64>,
    total: Option<Counts>,
    expect_columns: bool,
}

fn parse_count(field: &str, what: &str, loc: &str, report: &mut ValidationReport) -> Option<u64> {
    let f = field.trim();
    match f.parse::<i64>() {
        Ok(v) if v < 0 => {
            report.error(loc, format!("negative {what} count {v}"));
            None
        }
        Ok(v) => Some(v as u64),
        Err(_) => {
            report.error(loc, format!("{what} `{f}` is not an integer"));
            None
        }
    }
}

/// Parse a dataset from text. `origin` names the input in diagnostics.
pub fn parse_str(text: &str, origin: &str) -> std::result::Result<Parsed, ValidationReport> {
    let mut report = ValidationReport::default();
    let mut sources = Vec::new();
    let mut series_label: Option<String> = None;
    let mut scalars: Option<ScalarTable> = None;
    let mut blocks: Vec<Block> = Vec::new();
    let mut seen_header = false;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        let loc = format!("{origin}:{lineno}");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(src) = line.strip_prefix("source:") {
            sources.push(src.trim().to_string());
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let fields: Vec<&str> = rest.splitn(4, ',').collect();
            match fields[0] {
                "series" if !seen_header && fields.len() == 2 && !fields[1].is_empty() => {
                    series_label = Some(fields[1].to_string());
                }
                "scalars" if !seen_header && fields.len() == 2 && !fields[1].is_empty() => {
                    scalars = Some(ScalarTable { name: fields[1].to_string(), entries: Vec::new() });
                }
                "cohort" if scalars.is_none() && fields.len() == 4 => {
                    let date = match fields[2].parse::<NaiveDate>() {
                        Ok(d) => Some(d),
                        Err(_) => {
                            report.error(&loc, format!("invalid ISO-8601 date `{}`", fields[2]));
                            None
                        }
                    };
                    if fields[1].is_empty() {
                        report.error(&loc, "cohort label is empty");
                    }
                    blocks.push(Block {
                        line: lineno,
                        label: fields[1].to_string(),
                        date,
                        source: fields[3].to_string(),
                        bands: Vec::new(),
                        cases: Vec::new(),
                        deaths: Vec::new(),
                        total: None,
                        expect_columns: true,
                    });
                }
                _ => report.error(&loc, format!("malformed header `{line}`")),
            }
            seen_header = true;
            continue;
        }
        if let Some(table) = scalars.as_mut() {
            match line.split_once(',') {
                Some((label, value)) => match value.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => table.entries.push((label.to_string(), v)),
                    _ => report.error(&loc, format!("invalid scalar value `{value}`")),
                },
                None => report.error(&loc, format!("expected `label,value`, got `{line}`")),
            }
            continue;
        }
        let Some(block) = blocks.last_mut() else {
            report.error(&loc, "data row before any `#cohort` header");
            continue;
        };
        let fields: Vec<&str> = line.split(',').collect();
        if block.expect_columns {
            if fields != ["band", "cases", "deaths"] {
                report.error(&loc, format!("malformed header: expected `band,cases,deaths`, got `{line}`"));
            }
            block.expect_columns = false;
            continue;
        }
        if fields.len() != 3 {
            report.error(&loc, format!("expected 3 fields, got {}", fields.len()));
            continue;
        }
        if block.total.is_some() {
            report.error(&loc, "rows after the `total` row");
            continue;
        }
        let row_loc = format!("{loc} {} band {}", block.label, fields[0]);
        let cases = parse_count(fields[1], "cases", &row_loc, &mut report);
        let deaths = parse_count(fields[2], "deaths", &row_loc, &mut report);
        if fields[0] == "total" {
            if let (Some(c), Some(d)) = (cases, deaths) {
                block.total = Some(Counts { cases: c, deaths: d });
            }
            continue;
        }
        let band = match AgeBand::parse(fields[0]) {
            Ok(b) => b,
            Err(_) => {
                report.error(&row_loc, format!("unknown band label `{}`", fields[0]));
                continue;
            }
        };
        if block.bands.contains(&band) {
            report.error(&row_loc, format!("duplicate band {band}"));
            continue;
        }
        if let (Some(c), Some(d)) = (cases, deaths) {
            if d > c {
                report.error(&row_loc, format!("deaths exceed cases ({d} > {c})"));
            }
            block.bands.push(band);
            block.cases.push(c);
            block.deaths.push(d);
        }
    }

    if let Some(table) = scalars {
        let mut seen = BTreeSet::new();
        for (label, _) in &table.entries {
            if !seen.insert(label.as_str()) {
                report.error(origin, format!("duplicate scalar label `{label}`"));
            }
        }
        if table.entries.is_empty() {
            report.error(origin, "scalar table has no rows");
        }
        return finish(report, sources, Dataset::Scalars(table));
    }
    if blocks.is_empty() {
        report.error(origin, "no `#cohort` blocks found");
        return Err(report);
    }

    let mut cohorts = Vec::new();
    for b in blocks {
        let loc = format!("{origin}:{}", b.line);
        if b.expect_columns {
            report.error(&loc, "missing `band,cases,deaths` header");
            continue;
        }
        let schema = match BandSchema::new(b.bands) {
            Ok(s) => s,
            Err(e) => {
                report.error(&loc, format!("{} : {e}", b.label));
                continue;
            }
        };
        let Some(date) = b.date else { continue };
        let cohort =
            StratifiedCohort::from_parts_unchecked(b.label, date, b.source, schema, b.cases, b.deaths, b.total);
        let name = cohort.display_name();
        for issue in cohort.issues() {
            // Band-level count errors were already reported with line numbers.
            if issue.band.is_some() {
                continue;
            }
            if issue.fatal {
                report.error(&name, issue.message);
            } else {
                report.warn(&name, issue.message);
            }
        }
        cohorts.push(cohort);
    }
    if !report.is_ok() {
        return Err(report);
    }

    let content = match series_label {
        Some(label) => {
            let mut dates = BTreeSet::new();
            for c in &cohorts {
                if !dates.insert(c.report_date()) {
                    report.error(format!("{origin} {label}"), format!("duplicate date {}", c.report_date()));
                }
            }
            if !report.is_ok() {
                return Err(report);
            }
            match CohortSeries::new(label.clone(), cohorts) {
                Ok(series) => {
                    for (loc, msg) in series.monotonicity_warnings() {
                        report.warn(loc, msg);
                    }
                    Dataset::Series(series)
                }
                Err(e) => {
                    report.error(format!("{origin} {label}"), e.to_string());
                    return Err(report);
                }
            }
        }
        None => {
            let mut seen = BTreeSet::new();
            for c in &cohorts {
                if !seen.insert(c.label().to_string()) {
                    report.error(origin, format!("duplicate cohort label `{}`", c.label()));
                }
            }
            Dataset::Cohorts(cohorts)
        }
    };
    finish(report, sources, content)
}

fn finish(report: ValidationReport, sources: Vec<String>, content: Dataset) -> std::result::Result<Parsed, ValidationReport> {
    if report.is_ok() {
        Ok(Parsed { file: DatasetFile { sources, content }, report })
    } else {
        Err(report)
    }
}

pub fn parse_reader<R: Read>(mut reader: R, origin: &str) -> std::result::Result<Parsed, ValidationReport> {
    let mut text = String::new();
    if let Err(e) = reader.read_to_string(&mut text) {
        let mut r = ValidationReport::default();
        r.error(origin, format!("read failed: {e}"));
        return Err(r);
    }
    parse_str(&text, origin)
}

pub fn parse_path(path: &Path) -> std::result::Result<Parsed, ValidationReport> {
    match std::fs::File::open(path) {
        Ok(f) => parse_reader(f, &path.display().to_string()),
        Err(e) => {
            let mut r = ValidationReport::default();
            r.error(path.display().to_string(), format!("cannot open: {e}"));
            Err(r)
        }
    }
}

fn write_cohort(out: &mut String, c: &StratifiedCohort) {
    out.push_str(&format!("#cohort,{},{},{}\nband,cases,deaths\n", c.label(), c.report_date(), c.source()));
    for ((band, cases), deaths) in c.schema().bands().iter().zip(c.cases()).zip(c.deaths()) {
        out.push_str(&format!("{band},{cases},{deaths}\n"));
    }
    if let Some(t) = c.stated_total() {
        out.push_str(&format!("total,{},{}\n", t.cases, t.deaths));
    }
}

/// Canonical text form; `parse_str(serialize(f))` yields `f` again.
pub fn serialize(file: &DatasetFile) -> String {
    let mut out = String::new();
    let sources = |out: &mut String| {
        for s in &file.sources {
            out.push_str(&format!("source: {s}\n"));
        }
    };
    match &file.content {
        Dataset::Cohorts(cs) => {
            sources(&mut out);
            cs.iter().for_each(|c| write_cohort(&mut out, c));
        }
        Dataset::Series(s) => {
            out.push_str(&format!("#series,{}\n", s.label()));
            sources(&mut out);
            s.snapshots().iter().for_each(|c| write_cohort(&mut out, c));
        }
        Dataset::Scalars(t) => {
            out.push_str(&format!("#scalars,{}\n", t.name));
            sources(&mut out);
            for (l, v) in &t.entries {
                out.push_str(&format!("{l},{v}\n"));
            }
        }
    }
    out
}

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Datasets shipped with the crate: `(name, description, file text)`.
pub const BUNDLED: &[(&str, &str, &str)] = &[
    (
        "countries_latest",
        "latest age-stratified CFR data for 11 countries and the Diamond Princess",
        include_str!("../data/countries_latest.csv"),
    ),
    ("italy_series", "weekly Italian snapshots, 9 March to 26 May 2020", include_str!("../data/italy_series.csv")),
    ("spain_series", "Spanish snapshots, 22 March to 29 May 2020", include_str!("../data/spain_series.csv")),
    (
        "china_vs_italy_march9",
        "China (17 Feb) vs Italy (9 Mar), plus a China variant with an empty 0-9 band",
        include_str!("../data/china_vs_italy_march9.csv"),
    ),
    ("lombardy_ifr", "Lombardy infection fatality data before/after 16 March 2020", include_str!("../data/lombardy_ifr.csv")),
    ("median_ages", "population median age per cohort label", include_str!("../data/median_ages.csv")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.0).collect()
}

pub fn bundled_text(name: &str) -> Result<&'static str> {
    BUNDLED
        .iter()
        .find(|b| b.0 == name)
        .map(|b| b.2)
        .ok_or_else(|| Error::UnknownDataset { name: name.to_string(), available: bundled_names().iter().map(|s| s.to_string()).collect() })
}

/// A dataset registered under a name, with its parse report and content hash.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistryEntry {
    pub name: String,
    pub file: DatasetFile,
    pub report: ValidationReport,
    pub sha256: String,
}

impl RegistryEntry {
    pub fn from_text(name: &str, text: &str) -> std::result::Result<Self, ValidationReport> {
        let parsed = parse_str(text, name)?;
        Ok(RegistryEntry { name: name.to_string(), file: parsed.file, report: parsed.report, sha256: content_hash(text.as_bytes()) })
    }

    pub fn cohort(&self, label: &str) -> Option<&StratifiedCohort> {
        self.file.content.cohorts().iter().find(|c| c.label() == label)
    }
}

/// Parse one bundled dataset.
pub fn load_bundled(name: &str) -> Result<RegistryEntry> {
    let text = bundled_text(name)?;
    RegistryEntry::from_text(name, text).map_err(|r| Error::Validation(r.errors.len()))
}

/// Named datasets. Labels only need to be unique within a dataset, so the
/// same country can appear in several datasets with different snapshots.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetRegistry {
    entries: BTreeMap<String, RegistryEntry>,
}

impl DatasetRegistry {
    pub fn bundled() -> Result<Self> {
        let mut reg = DatasetRegistry::default();
        for name in bundled_names() {
            reg.entries.insert(name.to_string(), load_bundled(name)?);
        }
        Ok(reg)
    }

    /// Register without re-validating. [`validate_registry`] will report any problems.
    pub fn insert(&mut self, entry: RegistryEntry) {
        self.entries.insert(entry.name.clone(), entry);
    }

    pub fn get(&self, name: &str) -> Option<&RegistryEntry> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut RegistryEntry> {
        self.entries.get_mut(name)
    }

    pub fn entries(&self) -> impl Iterator<Item = &RegistryEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn series(&self, name: &str) -> Option<&CohortSeries> {
        match &self.entries.get(name)?.file.content {
            Dataset::Series(s) => Some(s),
            _ => None,
        }
    }

    pub fn scalars(&self, name: &str) -> Option<&ScalarTable> {
        match &self.entries.get(name)?.file.content {
            Dataset::Scalars(t) => Some(t),
            _ => None,
        }
    }
}

fn validate_cohort(prefix: &str, c: &StratifiedCohort, report: &mut ValidationReport) {
    let loc = format!("{prefix} {}", c.display_name());
    for issue in c.issues() {
        let loc = match issue.band {
            Some(b) => format!("{loc} band {b}"),
            None => loc.clone(),
        };
        if issue.fatal {
            report.error(loc, issue.message);
        } else {
            report.warn(loc, issue.message);
        }
    }
}

/// Re-check every registered object from scratch and aggregate the findings.
pub fn validate_registry(registry: &DatasetRegistry) -> ValidationReport {
    let mut report = ValidationReport::default();
    for entry in registry.entries() {
        let name = entry.name.as_str();
        match &entry.file.content {
            Dataset::Cohorts(cs) => {
                let mut seen = BTreeSet::new();
                for c in cs {
                    validate_cohort(name, c, &mut report);
                    if !seen.insert(c.label()) {
                        report.error(name, format!("duplicate cohort label `{}`", c.label()));
                    }
                }
            }
            Dataset::Series(s) => {
                for c in s.snapshots() {
                    validate_cohort(name, c, &mut report);
                }
                for (loc, msg) in s.monotonicity_warnings() {
                    report.warn(format!("{name} {loc}"), msg);
                }
            }
            Dataset::Scalars(t) => {
                let mut seen = BTreeSet::new();
                for (l, v) in &t.entries {
                    if !v.is_finite() {
                        report.error(format!("{name} {l}"), "non-finite scalar");
                    }
                    if !seen.insert(l.as_str()) {
                        report.error(name, format!("duplicate scalar label `{l}`"));
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SMALL: &str = "source: test\n#cohort,A,2020-03-01,ref\nband,cases,deaths\n0-49,10,1\n50+,20,5\ntotal,30,6\n";

    #[test]
    fn parses_single_cohort() {
        let p = parse_str(SMALL, "small").unwrap();
        assert!(p.report.warnings.is_empty());
        let cs = p.file.content.cohorts();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].total_cases(), 30);
        assert_eq!(p.file.sources, vec!["test".to_string()]);
        assert_eq!(serialize(&p.file), SMALL);
    }

    #[test]
    fn deaths_exceeding_cases_is_error() {
        let text = "#cohort,A,2020-03-01,ref\nband,cases,deaths\n0-49,3,5\n50+,20,5\n";
        let r = parse_str(text, "f").unwrap_err();
        assert_eq!(r.errors.len(), 1);
        assert!(r.errors[0].message.contains("deaths exceed cases"));
        assert!(r.errors[0].location.contains("f:3 A band 0-49"));
    }

    #[test]
    fn structural_errors() {
        let cases = [
            ("#cohort,A,2020-03-01,ref\nband,deaths,cases\n0-49,3,1\n", "malformed header"),
            ("#cohort,A,2020-03-01,ref\nband,cases,deaths\n0-49,3,1\n50-plus,2,1\n", "unknown band label"),
            ("#cohort,A,2020-03-01,ref\nband,cases,deaths\n0-49,-3,1\n", "negative cases count"),
            ("#cohort,A,2020-13-01,ref\nband,cases,deaths\n0-49,3,1\n", "invalid ISO-8601 date"),
            ("#cohrt,A\n", "malformed header"),
            ("0-9,1,1\n", "before any"),
            (
                "#series,S\n#cohort,S,2020-03-01,r\nband,cases,deaths\n0-9,3,1\n#cohort,S,2020-03-01,r\nband,cases,deaths\n0-9,4,1\n",
                "duplicate date",
            ),
            (
                "#cohort,A,2020-03-01,r\nband,cases,deaths\n0-9,3,1\n#cohort,A,2020-03-02,r\nband,cases,deaths\n0-9,4,1\n",
                "duplicate cohort label",
            ),
            ("#cohort,A,2020-03-01,r\nband,cases,deaths\n0-9,0,0\n", "no cases"),
        ];
        for (text, needle) in cases {
            let r = parse_str(text, "f").unwrap_err();
            assert!(r.errors.iter().any(|d| d.message.contains(needle)), "{needle}: {r}");
        }
    }

    #[test]
    fn non_monotone_series_warns() {
        let text = "#series,S\n#cohort,S,2020-03-01,r\nband,cases,deaths\n0-9,5,2\n#cohort,S,2020-03-08,r\nband,cases,deaths\n0-9,6,1\n";
        let p = parse_str(text, "f").unwrap();
        assert_eq!(p.report.warnings.len(), 1);
        assert!(matches!(p.file.content, Dataset::Series(ref s) if s.snapshots().len() == 2));
    }

    #[test]
    fn total_mismatch_warns() {
        let text = SMALL.replace("total,30,6", "total,30,7");
        let p = parse_str(&text, "f").unwrap();
        assert_eq!(p.report.warnings[0].message, "stated total deaths 7 does not match per-band sum 6");
        assert_eq!(p.report.warnings[0].location, "A 2020-03-01");
    }

    #[test]
    fn scalars_parse() {
        let p = parse_str("#scalars,m\nsource: x\nA,1.5\nB,2\n", "m").unwrap();
        let Dataset::Scalars(t) = &p.file.content else { panic!() };
        assert_eq!(t.get("B"), Some(2.0));
        assert_eq!(serialize(&p.file), "#scalars,m\nsource: x\nA,1.5\nB,2\n");
        assert!(parse_str("#scalars,m\nA,x\n", "m").is_err());
        assert!(parse_str("#scalars,m\nA,1\nA,2\n", "m").is_err());
    }

    #[test]
    fn block_order_does_not_change_lookup() {
        let a = "#cohort,A,2020-03-01,r\nband,cases,deaths\n0-9,3,1\n";
        let b = "#cohort,B,2020-03-02,r\nband,cases,deaths\n0-9,4,2\n";
        let ab = RegistryEntry::from_text("x", &format!("{a}{b}")).unwrap();
        let ba = RegistryEntry::from_text("x", &format!("{b}{a}")).unwrap();
        for l in ["A", "B"] {
            assert_eq!(ab.cohort(l), ba.cohort(l));
        }
    }

    #[test]
    fn bundled_datasets_load() {
        let reg = DatasetRegistry::bundled().unwrap();
        assert_eq!(reg.len(), 6);
        assert_eq!(reg.get("countries_latest").unwrap().file.content.cohorts().len(), 12);
        assert_eq!(reg.series("italy_series").unwrap().snapshots().len(), 14);
        assert_eq!(reg.series("spain_series").unwrap().snapshots().len(), 11);
        assert!(matches!(load_bundled("nope"), Err(Error::UnknownDataset { .. })));
        for (name, _, text) in BUNDLED {
            assert!(text.lines().any(|l| l.starts_with("source:")), "{name} lacks a source line");
        }
    }

    #[test]
    fn corrupted_registry_reports_one_error() {
        let mut reg = DatasetRegistry::bundled().unwrap();
        assert!(validate_registry(&reg).is_ok());
        let entry = reg.get_mut("countries_latest").unwrap();
        let Dataset::Cohorts(cs) = &mut entry.file.content else { panic!() };
        let c = &cs[3];
        let mut deaths = c.deaths().to_vec();
        deaths[2] = c.cases()[2] + 1;
        cs[3] = StratifiedCohort::from_parts_unchecked(
            c.label(),
            c.report_date(),
            c.source(),
            c.schema().clone(),
            c.cases().to_vec(),
            deaths,
            None,
        );
        let report = validate_registry(&reg);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].location, "countries_latest Diamond Princess 2020-03-26 band 20-29");
        assert_eq!(validate_registry(&reg), report);
    }

    fn arb_block() -> impl Strategy<Value = (Vec<(u64, u64)>, bool)> {
        (prop::collection::vec((1u64..100_000, 0u64..100_000), 1..10), any::<bool>())
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(blocks in prop::collection::vec(arb_block(), 1..4)) {
            let mut text = String::from("source: generated\n");
            for (i, (rows, with_total)) in blocks.iter().enumerate() {
                text.push_str(&format!("#cohort,C{i},2020-01-{:02},src\nband,cases,deaths\n", i + 1));
                let (mut tc, mut td) = (0, 0);
                for (j, (c, d)) in rows.iter().enumerate() {
                    let d = d % (c + 1);
                    tc += c;
                    td += d;
                    text.push_str(&format!("{}-{},{c},{d}\n", 10 * j, 10 * j + 9));
                }
                if *with_total {
                    text.push_str(&format!("total,{tc},{td}\n"));
                }
            }
            let parsed = parse_str(&text, "gen").unwrap();
            prop_assert_eq!(serialize(&parsed.file), text);
        }
    }
}
