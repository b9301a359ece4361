use cfrmed::effects::{self, pairwise_matrix_with, EffectEstimate, MatrixKind, PairwiseEffectMatrix, Sign};
use cfrmed::ingest::{Dataset, BUNDLED};
use cfrmed::scm::{exact_effects, mediation_formula_effects, oracle_suite, replicate_study, DiscreteScm, ReplicateConfig};
use cfrmed::stats::{self, rank_by_avg_treatment, rank_delta, sign_discordance, CorrelationResult, PMethod, Ranking};
use cfrmed::{AgeBand, Execution, StratifiedCohort, UndefinedBandPolicy};
use serde::Serialize;
use serde_json::{json, Value};

use crate::data::{self, Loaded, Provenance};
use crate::render::{csv_row, num, pairs, pct, rate, table};
use crate::{CorrelateArgs, EffectsArgs, Failure, KindArg, MatrixArgs, OracleArgs, Output, PArg, PresetArg, SimpsonArgs, TestArg, TraceArgs};

fn document(command: &str, flags: &impl Serialize, datasets: &[&Provenance], result: Value) -> Value {
    json!({
        "tool": "cfrmed",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "flags": flags,
        "datasets": datasets,
        "result": result,
    })
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("result types serialize")
}

fn header(datasets: &[&Provenance]) -> String {
    datasets.iter().map(|p| format!("dataset {} ({}) sha256 {}\n", p.name, p.origin, p.sha256)).collect::<String>() + "\n"
}

fn ok(json: Value, table: String, csv: String) -> Result<Output, Failure> {
    Ok(Output { json, table, csv, exit_code: 0 })
}

fn parse_band(cohort: &StratifiedCohort, label: &str) -> Result<AgeBand, Failure> {
    let band: Option<AgeBand> = label.parse().ok();
    match band.filter(|b| cohort.schema().index_of(b).is_some()) {
        Some(b) => Ok(b),
        None => Err(Failure::usage(format!("unknown band `{label}`; bands: {}", cohort.schema().labels().join(", ")))),
    }
}

pub fn effects(a: &EffectsArgs) -> Result<Output, Failure> {
    let d = data::load(&a.data)?;
    let (control, treatment) = (d.cohort(&a.control)?, d.cohort(&a.treatment)?);
    let policy: UndefinedBandPolicy = a.undefined_band.into();
    let mut estimates: Vec<EffectEstimate> = vec![
        effects::tce(control, treatment)?,
        effects::nde(control, treatment, policy)?,
        effects::nie(control, treatment, policy)?,
        effects::moderation_residual(control, treatment, policy)?,
    ];
    if let Some(b) = &a.band {
        estimates.push(effects::cde(control, treatment, &parse_band(control, b)?)?);
    }
    let ref_data = a.reference_data.as_deref().map(data::load).transpose()?;
    let ref_loaded: &Loaded = ref_data.as_ref().unwrap_or(&d);
    if let Some(r) = &a.reference {
        estimates.push(effects::expected_cde(control, treatment, ref_loaded.cohort(r)?, policy)?);
    }
    let sub = effects::subtractivity_check(control, treatment, policy)?;

    let mut provs = vec![&d.provenance];
    if a.reference.is_some() && ref_data.is_some() {
        provs.push(&ref_loaded.provenance);
    }
    let name = |e: &EffectEstimate| match (&e.band, &e.reference) {
        (Some(b), _) => format!("CDE({b})"),
        (_, Some(r)) => format!("expected CDE (reference {r})"),
        _ => match e.kind {
            cfrmed::EffectKind::Tce => "TCE".into(),
            cfrmed::EffectKind::Nde => "NDE".into(),
            cfrmed::EffectKind::Nie => "NIE".into(),
            _ => "moderation residual".into(),
        },
    };
    let flag = |e: &EffectEstimate| if e.undefined_band_policy_used { " (undefined band coerced to 0)" } else { "" };
    let mut rows = vec![
        ("control".to_string(), control.display_name()),
        ("treatment".to_string(), treatment.display_name()),
        ("undefined bands".to_string(), format!("{:?}", a.undefined_band).to_lowercase()),
    ];
    rows.extend(estimates.iter().map(|e| (name(e), format!("{}{}", pct(e.value), flag(e)))));
    rows.push((
        "subtractivity residuals".into(),
        format!("{:.1e} / {:.1e}", sub.nde_minus_reverse_nie, sub.nie_minus_reverse_nde),
    ));
    let mut csv = csv_row(&["quantity", "value", "undefined_band_coerced"]);
    for e in &estimates {
        csv.push_str(&csv_row(&[name(e), num(e.value), e.undefined_band_policy_used.to_string()]));
    }
    csv.push_str(&csv_row(&["subtractivity NDE - reverse NIE".into(), num(sub.nde_minus_reverse_nie), "false".into()]));
    csv.push_str(&csv_row(&["subtractivity NIE - reverse NDE".into(), num(sub.nie_minus_reverse_nde), "false".into()]));
    let json = document(
        "effects",
        a,
        &provs,
        json!({
            "control": {"label": control.label(), "date": control.report_date()},
            "treatment": {"label": treatment.label(), "date": treatment.report_date()},
            "estimates": to_value(&estimates),
            "subtractivity_residuals": to_value(&sub),
        }),
    );
    ok(json, header(&provs) + &pairs(&rows), csv)
}

pub fn trace(a: &TraceArgs) -> Result<Output, Failure> {
    let d = data::load(&a.data)?;
    let series = d.series()?;
    let cd = data::load(&a.control_data)?;
    let control = cd.cohort(&a.control)?;
    let tr = effects::trace(control, series, a.undefined_band.into())?;
    let provs = [&d.provenance, &cd.provenance];
    let rows: Vec<Vec<String>> = tr.points.iter().map(|p| vec![p.date.to_string(), pct(p.tce), pct(p.nde), pct(p.nie)]).collect();
    let head = ["date", "TCE", "NDE", "NIE"].map(String::from);
    let title = format!("{} snapshots vs control {}\n\n", tr.treatment, control.display_name());
    let mut csv = csv_row(&["date", "tce", "nde", "nie"]);
    for p in &tr.points {
        csv.push_str(&csv_row(&[p.date.to_string(), num(p.tce), num(p.nde), num(p.nie)]));
    }
    let json = document("trace", a, &provs, json!({"control_date": control.report_date(), "trace": to_value(&tr)}));
    ok(json, header(&provs) + &title + &table(&head, &rows), csv)
}

fn kind(k: KindArg) -> MatrixKind {
    match k {
        KindArg::Tce => MatrixKind::Tce,
        KindArg::Nde => MatrixKind::Nde,
        KindArg::Nie => MatrixKind::Nie,
    }
}

fn matrix_csv(m: &PairwiseEffectMatrix) -> String {
    let mut head = vec!["treatment\\control".to_string()];
    head.extend(m.labels.iter().cloned());
    let mut out = csv_row(&head);
    for (i, row) in m.values.iter().enumerate() {
        let mut r = vec![m.labels[i].clone()];
        r.extend(row.iter().map(|v| num(*v)));
        out.push_str(&csv_row(&r));
    }
    out
}

pub fn matrix(a: &MatrixArgs, exec: Execution) -> Result<Output, Failure> {
    let d = data::load(&a.data)?;
    let m = pairwise_matrix_with(d.cohorts()?, kind(a.kind), a.undefined_band.into(), exec)?;
    let provs = [&d.provenance];
    let mut head = vec!["treatment \\ control".to_string()];
    head.extend(m.labels.iter().cloned());
    head.push("mean".into());
    let rows: Vec<Vec<String>> = m
        .values
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = vec![m.labels[i].clone()];
            r.extend(row.iter().enumerate().map(|(j, v)| if m.coerced[i][j] { format!("{}*", pct(*v)) } else { pct(*v) }));
            r.push(pct(m.row_means[i]));
            r
        })
        .collect();
    let coerced = m.coerced.iter().flatten().filter(|c| **c).count();
    let mut text = header(&provs) + &format!("{} matrix; {}\n\n", format!("{:?}", a.kind).to_uppercase(), m.ordering_rule);
    text.push_str(&table(&head, &rows));
    if coerced > 0 {
        text.push_str(&format!("\n* {coerced} cells used an undefined band rate coerced to 0\n"));
    }
    let json = document("matrix", a, &provs, to_value(&m));
    ok(json, text, matrix_csv(&m))
}

fn p_method(a: &CorrelateArgs) -> PMethod {
    match a.p {
        PArg::T => PMethod::TApprox,
        PArg::Permutation => PMethod::Permutation { seed: a.seed, reps: a.reps },
    }
}

fn p_text(p: f64) -> String {
    if p >= 1e-3 {
        format!("{p:.4}")
    } else {
        format!("{p:.2e}")
    }
}

fn correlation_rows(test: &str, c: &CorrelationResult) -> Vec<(String, String)> {
    let method = match c.p_method {
        PMethod::TApprox => "two-sided t approximation".to_string(),
        PMethod::Permutation { seed, reps } => format!("permutation ({reps} reps, seed {seed})"),
    };
    vec![
        ("test".into(), test.into()),
        ("method".into(), format!("{:?}", c.method).to_lowercase()),
        ("coefficient".into(), format!("{:.3}", c.coefficient)),
        ("p-value".into(), p_text(c.p_value)),
        ("p method".into(), method),
        ("n".into(), c.n.to_string()),
    ]
}

fn correlation_csv(c: &CorrelationResult, extra: &[(String, String)]) -> String {
    let mut out = csv_row(&["quantity", "value"]);
    out.push_str(&csv_row(&["coefficient".into(), num(c.coefficient)]));
    out.push_str(&csv_row(&["p_value".into(), num(c.p_value)]));
    out.push_str(&csv_row(&["n".into(), c.n.to_string()]));
    for (k, v) in extra {
        out.push_str(&csv_row(&[k, v]));
    }
    out
}

pub fn correlate(a: &CorrelateArgs, exec: Execution) -> Result<Output, Failure> {
    let d = data::load(&a.data)?;
    let cohorts = d.cohorts()?;
    let policy: UndefinedBandPolicy = a.undefined_band.into();
    let nde = pairwise_matrix_with(cohorts, MatrixKind::Nde, policy, exec)?;
    let nie = pairwise_matrix_with(cohorts, MatrixKind::Nie, policy, exec)?;
    let (rn, ri) = (rank_by_avg_treatment(&nde), rank_by_avg_treatment(&nie));
    let pm = p_method(a);
    let test_name = to_value(&a.test).as_str().unwrap_or_default().to_string();
    let scores = |r: &Ranking| -> Vec<(String, f64)> { r.labels.iter().cloned().zip(r.scores.iter().copied()).collect() };
    match a.test {
        TestArg::NdeVsNieRank => {
            let c = stats::spearman_with(&rn.scores, &rn.align(&scores(&ri))?, pm, exec)?;
            let deltas = rank_delta(&rn, &ri)?;
            let head = ["cohort", "NDE rank", "NIE rank", "delta", "mean NDE", "mean NIE"].map(String::from);
            let rows: Vec<Vec<String>> = deltas
                .iter()
                .map(|(l, dlt)| {
                    vec![
                        l.clone(),
                        rn.rank(l).unwrap().to_string(),
                        ri.rank(l).unwrap().to_string(),
                        format!("{dlt:+}"),
                        pct(rn.score(l).unwrap()),
                        pct(ri.score(l).unwrap()),
                    ]
                })
                .collect();
            let provs = [&d.provenance];
            let text = header(&provs) + &pairs(&correlation_rows(&test_name, &c)) + "\n" + &table(&head, &rows);
            let mut csv = correlation_csv(&c, &[]);
            csv.push('\n');
            csv.push_str(&csv_row(&["cohort", "nde_rank", "nie_rank", "delta", "mean_nde", "mean_nie"]));
            for (l, dlt) in &deltas {
                csv.push_str(&csv_row(&[
                    l.clone(),
                    rn.rank(l).unwrap().to_string(),
                    ri.rank(l).unwrap().to_string(),
                    dlt.to_string(),
                    num(rn.score(l).unwrap()),
                    num(ri.score(l).unwrap()),
                ]));
            }
            let json = document(
                "correlate",
                a,
                &provs,
                json!({"correlation": to_value(&c), "nde_ranking": to_value(&rn), "nie_ranking": to_value(&ri), "rank_deltas": to_value(&deltas)}),
            );
            ok(json, text, csv)
        }
        TestArg::NieRankVsMedianAge => {
            let ad = data::load(&a.ages)?;
            let ages = ri.align(&ad.scalars()?.entries).map_err(|e| Failure::usage(format!("{e} in `{}`", ad.provenance.name)))?;
            let c = stats::spearman_with(&ri.scores, &ages, pm, exec)?;
            let head = ["cohort", "NIE rank", "mean NIE", "median age"].map(String::from);
            let rows: Vec<Vec<String>> = ri
                .labels
                .iter()
                .enumerate()
                .map(|(i, l)| vec![l.clone(), (i + 1).to_string(), pct(ri.scores[i]), format!("{}", ages[i])])
                .collect();
            let provs = [&d.provenance, &ad.provenance];
            let text = header(&provs) + &pairs(&correlation_rows(&test_name, &c)) + "\n" + &table(&head, &rows);
            let mut csv = correlation_csv(&c, &[]);
            csv.push('\n');
            csv.push_str(&csv_row(&["cohort", "nie_rank", "mean_nie", "median_age"]));
            for (i, l) in ri.labels.iter().enumerate() {
                csv.push_str(&csv_row(&[l.clone(), (i + 1).to_string(), num(ri.scores[i]), num(ages[i])]));
            }
            let json = document(
                "correlate",
                a,
                &provs,
                json!({"correlation": to_value(&c), "nie_ranking": to_value(&ri), "median_ages": ages}),
            );
            ok(json, text, csv)
        }
        TestArg::PairwiseNdeVsNie => {
            let nie_aligned = nie.align_to(&nde);
            let c = stats::pearson_with(&nde.off_diagonal(), &nie_aligned.off_diagonal(), pm, exec)?;
            let disc = sign_discordance(&nde, &nie)?;
            let provs = [&d.provenance];
            let mut rows = correlation_rows(&test_name, &c);
            rows.push(("opposite signs".into(), format!("{} of {} ordered pairs", disc.count, disc.total)));
            rows.push(("pairs with a zero".into(), disc.zeros.to_string()));
            let extra = [
                ("discordant".to_string(), disc.count.to_string()),
                ("pairs".to_string(), disc.total.to_string()),
                ("zeros".to_string(), disc.zeros.to_string()),
            ];
            let json = document("correlate", a, &provs, json!({"correlation": to_value(&c), "sign_discordance": to_value(&disc)}));
            ok(json, header(&provs) + &pairs(&rows), correlation_csv(&c, &extra))
        }
    }
}

fn sign_text(s: Option<Sign>) -> &'static str {
    match s {
        Some(Sign::Positive) => "+",
        Some(Sign::Negative) => "-",
        Some(Sign::Zero) => "0 (tie)",
        None => "skipped",
    }
}

pub fn simpson(a: &SimpsonArgs) -> Result<Output, Failure> {
    let d = data::load(&a.data)?;
    let (control, treatment) = (d.cohort(&a.control)?, d.cohort(&a.treatment)?);
    let v = effects::simpson_verdict(control, treatment)?;
    let provs = [&d.provenance];
    let head = ["band", "control CFR", "treatment CFR", "CDE", "sign"].map(String::from);
    let rows: Vec<Vec<String>> = v
        .bands
        .iter()
        .enumerate()
        .map(|(i, b)| {
            vec![
                b.band.label(),
                rate(control.cfr_at(i).value()),
                rate(treatment.cfr_at(i).value()),
                rate(b.cde),
                sign_text(b.sign).into(),
            ]
        })
        .collect();
    let summary = pairs(&[
        ("control".into(), control.display_name()),
        ("treatment".into(), treatment.display_name()),
        ("total CFR".into(), format!("{} -> {}", pct(control.total_cfr()), pct(treatment.total_cfr()))),
        ("TCE".into(), format!("{} ({})", pct(v.tce), sign_text(Some(v.total_sign)))),
        ("reversal".into(), if v.is_reversal { "yes".into() } else { "no".into() }),
    ]);
    let mut csv = csv_row(&["band", "control_cfr", "treatment_cfr", "cde", "sign"]);
    for (i, b) in v.bands.iter().enumerate() {
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        csv.push_str(&csv_row(&[
            b.band.label(),
            opt(control.cfr_at(i).value()),
            opt(treatment.cfr_at(i).value()),
            opt(b.cde),
            b.sign.map(|s| format!("{s:?}").to_lowercase()).unwrap_or_else(|| "skipped".into()),
        ]));
    }
    csv.push_str(&csv_row(&["total".into(), num(control.total_cfr()), num(treatment.total_cfr()), num(v.tce), format!("{:?}", v.total_sign).to_lowercase()]));
    let json = document("simpson", a, &provs, to_value(&v));
    ok(json, header(&provs) + &table(&head, &rows) + "\n" + &summary, csv)
}

pub fn validate_oracle(a: &OracleArgs, exec: Execution) -> Result<Output, Failure> {
    if a.preset == Some(PresetArg::Moderation) {
        let scm = DiscreteScm::moderation();
        let (ex, mf) = (exact_effects(&scm), mediation_formula_effects(&scm));
        let disc = ex.max_abs_diff(&mf);
        let pass = disc < 1e-12 && (ex.tce, ex.nde, ex.nie) == (1.0, 0.0, 0.0);
        let rows = vec![
            ("preset".into(), "moderation".into()),
            ("exact TCE / NDE / NIE".into(), format!("{} / {} / {}", ex.tce, ex.nde, ex.nie)),
            ("formula TCE / NDE / NIE".into(), format!("{} / {} / {}", mf.tce, mf.nde, mf.nie)),
            ("moderation residual".into(), format!("{}", ex.tce - (ex.nde + ex.nie))),
            ("max discrepancy".into(), format!("{disc:.1e}")),
            ("result".into(), if pass { "PASS".into() } else { "FAIL".into() }),
        ];
        let mut csv = csv_row(&["quantity", "exact", "formula"]);
        for (n, e, f) in [("tce", ex.tce, mf.tce), ("nde", ex.nde, mf.nde), ("nie", ex.nie, mf.nie)] {
            csv.push_str(&csv_row(&[n.into(), num(e), num(f)]));
        }
        let json = document(
            "validate-oracle",
            a,
            &[],
            json!({"scm": to_value(&scm), "exact": to_value(&ex), "formula": to_value(&mf), "max_discrepancy": disc, "passed": pass}),
        );
        return Ok(Output { json, table: pairs(&rows), csv, exit_code: if pass { 0 } else { 1 } });
    }

    let report = oracle_suite(a.instances, a.k as usize, a.seed, exec)?;
    let mut pass = report.passed();
    let mut rows = vec![
        ("models".into(), format!("{} random (k={}, seed {}) + {} corner cases", report.random_models, report.k, report.seed, report.corner_cases)),
        ("max discrepancy".into(), format!("{:.1e} (tolerance {:.0e})", report.max_discrepancy, report.tolerance)),
        ("max subtractivity residual".into(), format!("{:.1e}", report.max_subtractivity_residual)),
        ("failures".into(), report.failures.len().to_string()),
    ];
    let mut csv = csv_row(&["quantity", "value"]);
    csv.push_str(&csv_row(&["max_discrepancy".into(), num(report.max_discrepancy)]));
    csv.push_str(&csv_row(&["max_subtractivity_residual".into(), num(report.max_subtractivity_residual)]));
    csv.push_str(&csv_row(&["failures".into(), report.failures.len().to_string()]));
    let mut sampling = Value::Null;
    if let Some(n) = a.sample_n {
        let config = ReplicateConfig { models: a.models, k: a.k as usize, n_per_arm: n, replicates: a.replicates as usize, z: 3.0, seed: a.seed };
        let study = replicate_study(config, exec)?;
        let frac = study.fraction_within();
        pass &= frac >= 0.95;
        rows.push((
            "sampling study".into(),
            format!("{:.1}% of {} models within 3 sd at n={n} per arm ({} replicates)", 100.0 * frac, study.models.len(), config.replicates),
        ));
        csv.push_str(&csv_row(&["sampling_fraction_within".into(), num(frac)]));
        sampling = to_value(&study);
    }
    rows.push(("result".into(), if pass { "PASS".into() } else { "FAIL".into() }));
    let json = document("validate-oracle", a, &[], json!({"oracle": to_value(&report), "sampling": sampling, "passed": pass}));
    Ok(Output { json, table: pairs(&rows), csv, exit_code: if pass { 0 } else { 1 } })
}

fn date_range(cohorts: &[StratifiedCohort]) -> String {
    let min = cohorts.iter().map(|c| c.report_date()).min();
    let max = cohorts.iter().map(|c| c.report_date()).max();
    match (min, max) {
        (Some(a), Some(b)) if a == b => a.to_string(),
        (Some(a), Some(b)) => format!("{a}..{b}"),
        _ => "-".into(),
    }
}

pub fn datasets_list() -> Result<Output, Failure> {
    let mut rows = Vec::new();
    let mut items = Vec::new();
    let mut csv = csv_row(&["name", "kind", "cohorts", "dates", "sha256", "sources"]);
    for (name, description, _) in BUNDLED {
        let d = data::load(name)?;
        let content = &d.entry.file.content;
        let n = match content {
            Dataset::Scalars(t) => t.entries.len(),
            other => other.cohorts().len(),
        };
        let dates = date_range(content.cohorts());
        let sources = d.entry.file.sources.join("; ");
        rows.push(vec![name.to_string(), content.kind().into(), n.to_string(), dates.clone(), description.to_string()]);
        csv.push_str(&csv_row(&[name.to_string(), content.kind().into(), n.to_string(), dates.clone(), d.provenance.sha256.clone(), sources.clone()]));
        items.push(json!({
            "name": name, "kind": content.kind(), "entries": n, "dates": dates, "description": description,
            "sources": d.entry.file.sources, "origin": d.provenance.origin, "sha256": d.provenance.sha256,
        }));
    }
    let head = ["name", "kind", "entries", "dates", "description"].map(String::from);
    let json = document("datasets list", &json!({}), &[], Value::Array(items));
    ok(json, table(&head, &rows), csv)
}

pub fn datasets_show(name: &str) -> Result<Output, Failure> {
    let d = data::load(name)?;
    let provs = [&d.provenance];
    let file = &d.entry.file;
    let mut text = header(&provs);
    text.push_str(&format!("kind {}\n", file.content.kind()));
    for s in &file.sources {
        text.push_str(&format!("source: {s}\n"));
    }
    text.push('\n');
    let mut csv;
    match &file.content {
        Dataset::Scalars(t) => {
            let rows: Vec<Vec<String>> = t.entries.iter().map(|(l, v)| vec![l.clone(), format!("{v}")]).collect();
            text.push_str(&table(&["label".into(), t.name.clone()], &rows));
            csv = csv_row(&["label", t.name.as_str()]);
            for (l, v) in &t.entries {
                csv.push_str(&csv_row(&[l.clone(), num(*v)]));
            }
        }
        content => {
            let cs = content.cohorts();
            let head = ["cohort", "date", "cases", "deaths", "CFR", "source"].map(String::from);
            let mut rows: Vec<Vec<String>> = cs
                .iter()
                .map(|c| {
                    vec![
                        c.label().into(),
                        c.report_date().to_string(),
                        c.total_cases().to_string(),
                        c.total_deaths().to_string(),
                        pct(c.total_cfr()),
                        c.source().into(),
                    ]
                })
                .collect();
            let (tc, td): (u64, u64) = cs.iter().fold((0, 0), |(a, b), c| (a + c.total_cases(), b + c.total_deaths()));
            if matches!(content, Dataset::Cohorts(_)) && cs.len() > 1 {
                rows.push(vec!["all cohorts".into(), date_range(cs), tc.to_string(), td.to_string(), String::new(), String::new()]);
            }
            text.push_str(&table(&head, &rows));
            csv = csv_row(&["cohort", "date", "cases", "deaths", "cfr", "source"]);
            for c in cs {
                csv.push_str(&csv_row(&[
                    c.label().to_string(),
                    c.report_date().to_string(),
                    c.total_cases().to_string(),
                    c.total_deaths().to_string(),
                    num(c.total_cfr()),
                    c.source().to_string(),
                ]));
            }
        }
    }
    let report = &d.entry.report;
    text.push_str(&format!("\n{} errors, {} warnings\n", report.errors.len(), report.warnings.len()));
    for w in &report.warnings {
        text.push_str(&format!("warning {}: {}\n", w.location, w.message));
    }
    let cohorts: Vec<Value> = file
        .content
        .cohorts()
        .iter()
        .map(|c| json!({"label": c.label(), "date": c.report_date(), "cases": c.total_cases(), "deaths": c.total_deaths(), "cfr": c.total_cfr()}))
        .collect();
    let json = document(
        "datasets show",
        &json!({"name": name}),
        &provs,
        json!({"kind": file.content.kind(), "sources": file.sources, "cohorts": cohorts, "content": to_value(&file.content), "validation": to_value(report)}),
    );
    ok(json, text, csv)
}
