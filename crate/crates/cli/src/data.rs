//! Dataset resolution and label lookup.

use std::path::{Path, PathBuf};

use cfrmed::ingest::{self, RegistryEntry, ScalarTable, BUNDLED};
use cfrmed::{CohortSeries, StratifiedCohort};
use serde::Serialize;

use crate::Failure;

/// Overrides the directory that bundled dataset names resolve against.
pub const DATA_DIR_ENV: &str = "CFRMED_DATA_DIR";

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub name: String,
    pub origin: String,
    pub sha256: String,
}

pub struct Loaded {
    pub entry: RegistryEntry,
    pub provenance: Provenance,
}

fn from_path(name: &str, path: &Path, origin: String) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let entry = RegistryEntry::from_text(name, &text).map_err(|r| Failure::validation(format!("{} failed validation", path.display()), r))?;
    let provenance = Provenance { name: name.to_string(), origin, sha256: entry.sha256.clone() };
    Ok(Loaded { entry, provenance })
}

/// Resolve `--data`: a file under the override directory, a bundled name, or a path.
pub fn load(spec: &str) -> Result<Loaded, Failure> {
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let candidate = PathBuf::from(dir).join(format!("{spec}.csv"));
        if candidate.is_file() {
            return from_path(spec, &candidate, format!("{DATA_DIR_ENV}:{}", candidate.display()));
        }
    }
    if let Ok(text) = ingest::bundled_text(spec) {
        let entry = RegistryEntry::from_text(spec, text).map_err(|r| Failure::validation(format!("bundled {spec} failed validation"), r))?;
        let provenance = Provenance { name: spec.to_string(), origin: "bundled".into(), sha256: entry.sha256.clone() };
        return Ok(Loaded { entry, provenance });
    }
    let path = Path::new(spec);
    if path.is_file() {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec).to_string();
        return from_path(&name, path, format!("path:{}", path.display()));
    }
    let names: Vec<String> = BUNDLED.iter().map(|b| b.0.to_string()).collect();
    Err(Failure::usage(format!(
        "unknown dataset `{spec}` (not a bundled name or a readable file){}; available: {}",
        suggest_suffix(spec, &names),
        names.join(", ")
    )))
}

pub fn suggestions(input: &str, candidates: &[String]) -> Vec<String> {
    let lower = input.to_lowercase();
    let mut scored: Vec<(f64, &String)> = candidates
        .iter()
        .map(|c| (strsim::jaro_winkler(&lower, &c.to_lowercase()), c))
        .filter(|(s, _)| *s >= 0.8)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().take(3).map(|(_, c)| c.clone()).collect()
}

fn suggest_suffix(input: &str, candidates: &[String]) -> String {
    let s = suggestions(input, candidates);
    if s.is_empty() {
        String::new()
    } else {
        format!("; did you mean {}?", s.iter().map(|c| format!("`{c}`")).collect::<Vec<_>>().join(" or "))
    }
}

impl Loaded {
    /// Find a cohort by label, or by `label date` when the label names several snapshots.
    pub fn cohort(&self, label: &str) -> Result<&StratifiedCohort, Failure> {
        let cohorts = self.entry.file.content.cohorts();
        if let Some(c) = cohorts.iter().find(|c| c.display_name() == label) {
            return Ok(c);
        }
        let matches: Vec<&StratifiedCohort> = cohorts.iter().filter(|c| c.label() == label).collect();
        match matches.len() {
            1 => Ok(matches[0]),
            0 => {
                let mut names: Vec<String> = cohorts.iter().map(|c| c.label().to_string()).collect();
                names.dedup();
                if cohorts.is_empty() {
                    return Err(Failure::usage(format!("dataset `{}` has no cohorts", self.provenance.name)));
                }
                Err(Failure::usage(format!(
                    "unknown cohort `{label}` in `{}`{}; available: {}",
                    self.provenance.name,
                    suggest_suffix(label, &names),
                    names.join(", ")
                )))
            }
            _ => Err(Failure::usage(format!(
                "`{label}` names {} snapshots in `{}`; pick one of: {}",
                matches.len(),
                self.provenance.name,
                matches.iter().map(|c| format!("`{}`", c.display_name())).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn cohorts(&self) -> Result<&[StratifiedCohort], Failure> {
        match &self.entry.file.content {
            ingest::Dataset::Cohorts(cs) => Ok(cs),
            other => Err(Failure::usage(format!("dataset `{}` is a {} dataset, expected cohorts", self.provenance.name, other.kind()))),
        }
    }

    pub fn series(&self) -> Result<&CohortSeries, Failure> {
        match &self.entry.file.content {
            ingest::Dataset::Series(s) => Ok(s),
            other => Err(Failure::usage(format!("dataset `{}` is a {} dataset, expected a series", self.provenance.name, other.kind()))),
        }
    }

    pub fn scalars(&self) -> Result<&ScalarTable, Failure> {
        match &self.entry.file.content {
            ingest::Dataset::Scalars(t) => Ok(t),
            other => Err(Failure::usage(format!("dataset `{}` is a {} dataset, expected scalars", self.provenance.name, other.kind()))),
        }
    }
}
