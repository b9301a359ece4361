//! Age-stratified count data and the elementary rates derived from it.
//!
//! A [`StratifiedCohort`] holds cases and deaths per age band for one
//! population snapshot. Its case demographic is the empirical `P(A = a | C = c)`
//! and its per-band case fatality rates the empirical `P(F = 1 | A = a, C = c)`.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive age interval; `upper == None` marks the open terminal band (`80+`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct AgeBand {
    lower: u32,
    upper: Option<u32>,
}

impl AgeBand {
    pub fn bounded(lower: u32, upper: u32) -> Result<Self> {
        if lower > upper {
            return Err(Error::UnknownBand(format!("{lower}-{upper}")));
        }
        Ok(AgeBand { lower, upper: Some(upper) })
    }

    pub fn open(lower: u32) -> Self {
        AgeBand { lower, upper: None }
    }

    pub fn lower(&self) -> u32 {
        self.lower
    }

    pub fn upper(&self) -> Option<u32> {
        self.upper
    }

    pub fn is_open(&self) -> bool {
        self.upper.is_none()
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.parse()
    }

    fn overlaps(&self, other: &AgeBand) -> bool {
        let a_hi = self.upper.unwrap_or(u32::MAX);
        let b_hi = other.upper.unwrap_or(u32::MAX);
        self.lower <= b_hi && other.lower <= a_hi
    }
}

impl fmt::Display for AgeBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.upper {
            Some(u) => write!(f, "{}-{}", self.lower, u),
            None => write!(f, "{}+", self.lower),
        }
    }
}

fn parse_age(s: &str, whole: &str) -> Result<u32> {
    // Reject signs and whitespace so labels stay canonical.
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
        return Err(Error::UnknownBand(whole.to_string()));
    }
    s.parse().map_err(|_| Error::UnknownBand(whole.to_string()))
}

impl FromStr for AgeBand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(lo) = s.strip_suffix('+') {
            return Ok(AgeBand::open(parse_age(lo, s)?));
        }
        let (lo, hi) = s.split_once('-').ok_or_else(|| Error::UnknownBand(s.to_string()))?;
        AgeBand::bounded(parse_age(lo, s)?, parse_age(hi, s)?)
    }
}

impl From<AgeBand> for String {
    fn from(b: AgeBand) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for AgeBand {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Ordered, disjoint list of age bands shared by cohorts that are compared.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<AgeBand>", into = "Vec<AgeBand>")]
pub struct BandSchema {
    bands: Vec<AgeBand>,
}

impl BandSchema {
    pub fn new(bands: Vec<AgeBand>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::InvalidSchema("schema has no bands".into()));
        }
        for pair in bands.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.is_open() {
                return Err(Error::InvalidSchema(format!("open band {a} must be last")));
            }
            if a.lower >= b.lower || a.overlaps(&b) {
                return Err(Error::InvalidSchema(format!("bands {a} and {b} are unsorted or overlap")));
            }
        }
        Ok(BandSchema { bands })
    }

    /// `0-9, 10-19, ..., 70-79, 80+`.
    pub fn ten_year() -> Self {
        let mut bands: Vec<AgeBand> = (0..8).map(|i| AgeBand { lower: 10 * i, upper: Some(10 * i + 9) }).collect();
        bands.push(AgeBand::open(80));
        BandSchema { bands }
    }

    /// One single-year band per level `0..k`; used for mediator levels of synthetic models.
    pub fn levels(k: usize) -> Result<Self> {
        BandSchema::new((0..k as u32).map(|x| AgeBand { lower: x, upper: Some(x) }).collect())
    }

    pub fn bands(&self) -> &[AgeBand] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn index_of(&self, band: &AgeBand) -> Option<usize> {
        self.bands.iter().position(|b| b == band)
    }

    pub fn labels(&self) -> Vec<String> {
        self.bands.iter().map(AgeBand::label).collect()
    }
}

impl TryFrom<Vec<AgeBand>> for BandSchema {
    type Error = Error;

    fn try_from(bands: Vec<AgeBand>) -> Result<Self> {
        BandSchema::new(bands)
    }
}

impl From<BandSchema> for Vec<AgeBand> {
    fn from(s: BandSchema) -> Self {
        s.bands
    }
}

/// Returns the shared schema when both are identical. No re-binning is attempted.
pub fn align(a: &BandSchema, b: &BandSchema) -> Result<BandSchema> {
    if a == b {
        Ok(a.clone())
    } else {
        Err(Error::SchemaMismatch { left: a.labels(), right: b.labels() })
    }
}

/// A rate that may be undefined because its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum Rate {
    Defined(f64),
    Undefined,
}

impl Rate {
    pub fn ratio(num: u64, den: u64) -> Rate {
        if den == 0 {
            Rate::Undefined
        } else {
            Rate::Defined(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Rate::Defined(v) => Some(v),
            Rate::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Rate::Defined(_))
    }
}

impl From<Option<f64>> for Rate {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Rate::Undefined, Rate::Defined)
    }
}

impl From<Rate> for Option<f64> {
    fn from(r: Rate) -> Self {
        r.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub cases: u64,
    pub deaths: u64,
}

/// Cases and deaths per band for one population snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedCohort {
    label: String,
    report_date: NaiveDate,
    source: String,
    schema: BandSchema,
    cases: Vec<u64>,
    deaths: Vec<u64>,
    stated_total: Option<Counts>,
}

/// Anomaly found when checking a cohort against its invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohortIssue {
    pub fatal: bool,
    pub band: Option<AgeBand>,
    pub message: String,
}

impl StratifiedCohort {
    pub fn new(
        label: impl Into<String>,
        report_date: NaiveDate,
        source: impl Into<String>,
        schema: BandSchema,
        cases: Vec<u64>,
        deaths: Vec<u64>,
    ) -> Result<Self> {
        let cohort = Self::from_parts_unchecked(label, report_date, source, schema, cases, deaths, None);
        if let Some(issue) = cohort.issues().into_iter().find(|i| i.fatal) {
            return Err(Error::InvalidCohort { cohort: cohort.label.clone(), message: issue.message });
        }
        Ok(cohort)
    }

    /// Builds a cohort without checking invariants. Call [`Self::issues`] before trusting it.
    pub fn from_parts_unchecked(
        label: impl Into<String>,
        report_date: NaiveDate,
        source: impl Into<String>,
        schema: BandSchema,
        cases: Vec<u64>,
        deaths: Vec<u64>,
        stated_total: Option<Counts>,
    ) -> Self {
        StratifiedCohort {
            label: label.into(),
            report_date,
            source: source.into(),
            schema,
            cases,
            deaths,
            stated_total,
        }
    }

    /// Attach totals as printed by the source; mismatches surface as warnings.
    pub fn with_stated_total(mut self, total: Counts) -> Self {
        self.stated_total = Some(total);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn report_date(&self) -> NaiveDate {
        self.report_date
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn schema(&self) -> &BandSchema {
        &self.schema
    }

    pub fn cases(&self) -> &[u64] {
        &self.cases
    }

    pub fn deaths(&self) -> &[u64] {
        &self.deaths
    }

    pub fn stated_total(&self) -> Option<Counts> {
        self.stated_total
    }

    pub fn total_cases(&self) -> u64 {
        self.cases.iter().sum()
    }

    pub fn total_deaths(&self) -> u64 {
        self.deaths.iter().sum()
    }

    /// Label plus date, as used in diagnostics.
    pub fn display_name(&self) -> String {
        format!("{} {}", self.label, self.report_date)
    }

    /// Every invariant violation. Fatal issues make the cohort unusable;
    /// the rest are warnings (stated totals that disagree with the band sums).
    pub fn issues(&self) -> Vec<CohortIssue> {
        let mut out = Vec::new();
        let n = self.schema.len();
        if self.cases.len() != n || self.deaths.len() != n {
            out.push(CohortIssue {
                fatal: true,
                band: None,
                message: format!(
                    "expected {n} bands, got {} case and {} death entries",
                    self.cases.len(),
                    self.deaths.len()
                ),
            });
            return out;
        }
        for ((band, &c), &d) in self.schema.bands().iter().zip(&self.cases).zip(&self.deaths) {
            if d > c {
                out.push(CohortIssue {
                    fatal: true,
                    band: Some(*band),
                    message: format!("deaths exceed cases in band {band} ({d} > {c})"),
                });
            }
        }
        if self.total_cases() == 0 {
            out.push(CohortIssue { fatal: true, band: None, message: "cohort has no cases".into() });
        }
        if let Some(stated) = self.stated_total {
            let (sc, sd) = (self.total_cases(), self.total_deaths());
            if stated.cases != sc {
                out.push(CohortIssue {
                    fatal: false,
                    band: None,
                    message: format!("stated total cases {} does not match per-band sum {sc}", stated.cases),
                });
            }
            if stated.deaths != sd {
                out.push(CohortIssue {
                    fatal: false,
                    band: None,
                    message: format!("stated total deaths {} does not match per-band sum {sd}", stated.deaths),
                });
            }
        }
        out
    }

    fn index(&self, band: &AgeBand) -> Result<usize> {
        self.schema.index_of(band).ok_or_else(|| Error::UnknownBand(band.label()))
    }

    /// Case fatality rate within `band`.
    pub fn cfr(&self, band: &AgeBand) -> Result<Rate> {
        Ok(self.cfr_at(self.index(band)?))
    }

    pub fn cfr_at(&self, idx: usize) -> Rate {
        Rate::ratio(self.deaths[idx], self.cases[idx])
    }

    /// Deaths over cases across all bands.
    pub fn total_cfr(&self) -> f64 {
        self.total_deaths() as f64 / self.total_cases() as f64
    }

    pub fn case_demographic(&self) -> GroupDistribution {
        let total = self.total_cases() as f64;
        GroupDistribution {
            schema: self.schema.clone(),
            weights: self.cases.iter().map(|&c| c as f64 / total).collect(),
        }
    }

    pub fn rates(&self) -> RateTable {
        RateTable {
            schema: self.schema.clone(),
            rates: (0..self.schema.len()).map(|i| self.cfr_at(i)).collect(),
        }
    }

    /// Same cohort with every count multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        let mut c = self.clone();
        c.cases.iter_mut().for_each(|x| *x *= factor);
        c.deaths.iter_mut().for_each(|x| *x *= factor);
        c.stated_total = None;
        c
    }

    pub fn relabeled(&self, label: impl Into<String>) -> Self {
        let mut c = self.clone();
        c.label = label.into();
        c
    }
}

/// Distribution of cases over bands, `P(A | C)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDistribution {
    schema: BandSchema,
    weights: Vec<f64>,
}

impl GroupDistribution {
    pub fn schema(&self) -> &BandSchema {
        &self.schema
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, band: &AgeBand) -> Result<f64> {
        let i = self.schema.index_of(band).ok_or_else(|| Error::UnknownBand(band.label()))?;
        Ok(self.weights[i])
    }
}

/// Per-band case fatality rates, `P(F = 1 | A, C)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    schema: BandSchema,
    rates: Vec<Rate>,
}

impl RateTable {
    pub fn schema(&self) -> &BandSchema {
        &self.schema
    }

    pub fn rates(&self) -> &[Rate] {
        &self.rates
    }
}

/// Date-ordered snapshots of one population sharing a band schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSeries {
    label: String,
    snapshots: Vec<StratifiedCohort>,
}

impl CohortSeries {
    pub fn new(label: impl Into<String>, snapshots: Vec<StratifiedCohort>) -> Result<Self> {
        let label = label.into();
        let first = snapshots
            .first()
            .ok_or_else(|| Error::InvalidCohort { cohort: label.clone(), message: "series has no snapshots".into() })?;
        for s in &snapshots[1..] {
            align(first.schema(), s.schema())?;
        }
        for pair in snapshots.windows(2) {
            if pair[1].report_date <= pair[0].report_date {
                return Err(Error::InvalidCohort {
                    cohort: label,
                    message: format!(
                        "snapshot dates must increase strictly ({} then {})",
                        pair[0].report_date, pair[1].report_date
                    ),
                });
            }
        }
        Ok(CohortSeries { label, snapshots })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn snapshots(&self) -> &[StratifiedCohort] {
        &self.snapshots
    }

    pub fn schema(&self) -> &BandSchema {
        self.snapshots[0].schema()
    }

    /// Places where a cumulative count decreases between consecutive snapshots.
    pub fn monotonicity_warnings(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for pair in self.snapshots.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            for (i, band) in self.schema().bands().iter().enumerate() {
                for (what, a, b) in [("cases", prev.cases[i], next.cases[i]), ("deaths", prev.deaths[i], next.deaths[i])] {
                    if b < a {
                        out.push((
                            format!("{} band {band}", next.display_name()),
                            format!("cumulative {what} decreased from {a} ({}) to {b}", prev.report_date),
                        ));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn italy_march9() -> StratifiedCohort {
        StratifiedCohort::new(
            "Italy",
            date("2020-03-09"),
            "iss9march",
            BandSchema::ten_year(),
            vec![43, 85, 296, 470, 891, 1453, 1471, 1785, 1532],
            vec![0, 0, 0, 0, 1, 3, 37, 114, 202],
        )
        .unwrap()
    }

    fn china(first_band_cases: u64) -> StratifiedCohort {
        StratifiedCohort::new(
            "China",
            date("2020-02-17"),
            "wu2020characteristics",
            BandSchema::ten_year(),
            vec![first_band_cases, 549, 3619, 7600, 8571, 10008, 8583, 3918, 1408],
            vec![0, 1, 7, 18, 38, 130, 309, 312, 208],
        )
        .unwrap()
    }

    #[test]
    fn band_labels_round_trip() {
        for s in ["0-9", "80+", "20-49", "3-3"] {
            assert_eq!(AgeBand::parse(s).unwrap().label(), s);
        }
        for bad in ["", "9-0", "abc", "-5", "1 -9", "80++", "05-9", "+"] {
            assert!(AgeBand::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn schema_rejects_overlap_and_misplaced_open_band() {
        let b = |s: &str| AgeBand::parse(s).unwrap();
        assert!(BandSchema::new(vec![b("0-9"), b("5-19")]).is_err());
        assert!(BandSchema::new(vec![b("10-19"), b("0-9")]).is_err());
        assert!(BandSchema::new(vec![b("80+"), b("90-99")]).is_err());
        assert!(BandSchema::new(vec![]).is_err());
        assert!(BandSchema::new(vec![b("0-19"), b("20-49"), b("50+")]).is_ok());
    }

    #[test]
    fn cfr_examples() {
        let it = italy_march9();
        let r = it.cfr(&AgeBand::parse("70-79").unwrap()).unwrap();
        assert_eq!(r, Rate::Defined(114.0 / 1785.0));
        assert!((r.value().unwrap() - 0.0639).abs() < 5e-5);
        assert_eq!(it.cfr(&AgeBand::parse("0-9").unwrap()).unwrap(), Rate::Defined(0.0));
        let c0 = china(0);
        assert_eq!(c0.cfr(&AgeBand::parse("0-9").unwrap()).unwrap(), Rate::Undefined);
        assert!(matches!(it.cfr(&AgeBand::parse("0-19").unwrap()), Err(Error::UnknownBand(_))));
    }

    #[test]
    fn total_cfr_examples() {
        assert_eq!(italy_march9().total_cfr(), 357.0 / 8026.0);
        assert_eq!(china(416).total_cfr(), 1023.0 / 44672.0);
        let none = StratifiedCohort::new("x", date("2020-01-01"), "", BandSchema::ten_year(), vec![5; 9], vec![0; 9]).unwrap();
        assert_eq!(none.total_cfr(), 0.0);
    }

    #[test]
    fn case_demographic_examples() {
        let it = italy_march9().case_demographic();
        // Per-band share of the 8026 age-stratified cases. A published 21.4% for this band
        // uses a larger denominator (cases of unknown age included) and is not reproducible here.
        assert_eq!(it.weight(&AgeBand::parse("70-79").unwrap()).unwrap(), 1785.0 / 8026.0);
        let ch = china(416).case_demographic();
        assert!((ch.weight(&AgeBand::open(80)).unwrap() - 0.032).abs() < 5e-4);
        let schema = BandSchema::new(vec![AgeBand::open(0)]).unwrap();
        let single = StratifiedCohort::new("s", date("2020-01-01"), "", schema, vec![7], vec![2]).unwrap();
        assert_eq!(single.case_demographic().weights(), &[1.0]);
    }

    #[test]
    fn align_is_strict() {
        let ten = BandSchema::ten_year();
        assert_eq!(align(&ten, &BandSchema::ten_year()).unwrap(), ten);
        let lombardy: Vec<AgeBand> = ["0-19", "20-49", "50-59", "60-69", "70-79", "80+"]
            .iter()
            .map(|s| AgeBand::parse(s).unwrap())
            .collect();
        let err = align(&ten, &BandSchema::new(lombardy).unwrap()).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch { ref left, ref right } if left.len() == 9 && right.len() == 6));
        let mut relabeled: Vec<AgeBand> = ten.bands().to_vec();
        relabeled[8] = AgeBand::open(85);
        assert!(align(&ten, &BandSchema::new(relabeled).unwrap()).is_err());
    }

    #[test]
    fn invalid_cohorts_rejected() {
        let err = StratifiedCohort::new("bad", date("2020-01-01"), "", BandSchema::ten_year(), vec![3; 9], vec![5; 9]);
        assert!(matches!(err, Err(Error::InvalidCohort { message, .. }) if message.contains("deaths exceed cases")));
        let empty = StratifiedCohort::new("e", date("2020-01-01"), "", BandSchema::ten_year(), vec![0; 9], vec![0; 9]);
        assert!(empty.is_err());
        let short = StratifiedCohort::new("s", date("2020-01-01"), "", BandSchema::ten_year(), vec![1; 3], vec![0; 3]);
        assert!(short.is_err());
    }

    #[test]
    fn stated_total_mismatch_is_warning() {
        let c = italy_march9().with_stated_total(Counts { cases: 8026, deaths: 350 });
        let issues = c.issues();
        assert_eq!(issues.len(), 1);
        assert!(!issues[0].fatal);
        assert_eq!(issues[0].message, "stated total deaths 350 does not match per-band sum 357");
    }

    #[test]
    fn series_requires_increasing_dates_and_shared_schema() {
        let a = italy_march9();
        let mut b = a.clone();
        b.report_date = date("2020-03-12");
        assert!(CohortSeries::new("Italy", vec![a.clone(), b.clone()]).is_ok());
        assert!(CohortSeries::new("Italy", vec![b.clone(), a.clone()]).is_err());
        assert!(CohortSeries::new("Italy", vec![a.clone(), a.clone()]).is_err());
        let mut shrunk = b.clone();
        shrunk.deaths[8] -= 1;
        let s = CohortSeries::new("Italy", vec![a, shrunk]).unwrap();
        let w = s.monotonicity_warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].1.contains("cumulative deaths decreased from 202"));
    }

    fn arb_cohort() -> impl Strategy<Value = StratifiedCohort> {
        prop::collection::vec((0u64..5000, 0.0f64..=1.0), 9).prop_filter_map("needs cases", |rows| {
            let cases: Vec<u64> = rows.iter().map(|r| r.0).collect();
            let deaths: Vec<u64> = rows.iter().map(|r| (r.0 as f64 * r.1).floor() as u64).collect();
            StratifiedCohort::new("p", NaiveDate::from_ymd_opt(2020, 1, 1)?, "", BandSchema::ten_year(), cases, deaths).ok()
        })
    }

    proptest! {
        #[test]
        fn total_cfr_decomposes_over_bands(c in arb_cohort()) {
            let w = c.case_demographic();
            let sum: f64 = (0..9)
                .filter_map(|i| c.cfr_at(i).value().map(|r| w.weights()[i] * r))
                .sum();
            prop_assert!((c.total_cfr() - sum).abs() < 1e-12);
            let wsum: f64 = w.weights().iter().sum();
            prop_assert!((wsum - 1.0).abs() < 1e-12);
            prop_assert_eq!(c.case_demographic(), w);
            prop_assert_eq!(c.rates(), c.rates());
        }
    }
}
