//! End-to-end checks over the shipped datasets.

use cfrmed::effects::{self, MatrixKind};
use cfrmed::ingest::{self, DatasetRegistry};
use cfrmed::{Execution, UndefinedBandPolicy};

#[test]
fn registry_loads_and_revalidates_clean() {
    let reg = DatasetRegistry::bundled().unwrap();
    assert_eq!(reg.len(), ingest::BUNDLED.len());
    assert!(ingest::validate_registry(&reg).errors.is_empty());
    for entry in reg.entries() {
        let text = ingest::serialize(&entry.file);
        let again = ingest::parse_str(&text, &entry.name).unwrap();
        assert_eq!(again.file, entry.file, "{}", entry.name);
    }
}

#[test]
fn identities_hold_for_every_country_pair() {
    let reg = DatasetRegistry::bundled().unwrap();
    let cs = reg.get("countries_latest").unwrap().file.content.cohorts();
    let zero = UndefinedBandPolicy::Zero;
    for a in cs {
        for b in cs {
            let r = effects::subtractivity_check(a, b, zero).unwrap();
            assert!(r.max() < 1e-12, "{} -> {}: {r:?}", a.label(), b.label());
            let t = effects::tce(a, b).unwrap().value;
            let back = effects::tce(b, a).unwrap().value;
            assert_eq!(t, -back);
            let ecde = effects::expected_cde(a, b, a, zero).unwrap().value;
            assert_eq!(ecde, effects::nde(a, b, zero).unwrap().value);
        }
    }
}

#[test]
fn matrices_match_single_pair_estimates() {
    let reg = DatasetRegistry::bundled().unwrap();
    let cs = reg.get("countries_latest").unwrap().file.content.cohorts();
    let zero = UndefinedBandPolicy::Zero;
    for kind in [MatrixKind::Tce, MatrixKind::Nde, MatrixKind::Nie] {
        let par = effects::pairwise_matrix_with(cs, kind, zero, Execution::Parallel).unwrap();
        let seq = effects::pairwise_matrix_with(cs, kind, zero, Execution::Sequential).unwrap();
        assert_eq!(par, seq);
        for c in cs {
            for t in cs {
                let expect = match kind {
                    MatrixKind::Tce => effects::tce(c, t),
                    MatrixKind::Nde => effects::nde(c, t, zero),
                    MatrixKind::Nie => effects::nie(c, t, zero),
                }
                .unwrap()
                .value;
                assert_eq!(par.get(t.label(), c.label()), Some(expect));
            }
        }
    }
}

#[test]
fn series_traces_cover_every_snapshot() {
    let reg = DatasetRegistry::bundled().unwrap();
    let china = reg.get("countries_latest").unwrap().cohort("China").unwrap();
    for (name, n) in [("italy_series", 14), ("spain_series", 11)] {
        let series = reg.series(name).unwrap();
        let tr = effects::trace(china, series, UndefinedBandPolicy::Error).unwrap();
        assert_eq!(tr.points.len(), n, "{name}");
    }
}
