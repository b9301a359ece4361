//! Total, direct and indirect effects of switching from a control cohort to a
//! treatment cohort, with age band as the mediator.
//!
//! Treatment `T = 0` is the control cohort, `T = 1` the treatment cohort,
//! `X` the age band and `Y` the fatality indicator. Under causal sufficiency:
//!
//! ```text
//! TCE    = E[Y | T=1] - E[Y | T=0]
//! CDE(x) = E[Y | T=1, X=x] - E[Y | T=0, X=x]
//! NDE    = sum_x P(x | T=0) (E[Y | T=1, x] - E[Y | T=0, x])
//! NIE    = sum_x (P(x | T=1) - P(x | T=0)) E[Y | T=0, x]
//! ```
//!
//! All values are signed fractions (changes in total CFR).

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::cohort::{align, AgeBand, CohortSeries, Rate, StratifiedCohort};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    Tce,
    Cde,
    Nde,
    Nie,
    ExpectedCde,
    ModerationResidual,
}

/// What to do when a formula needs the CFR of a band with zero cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndefinedBandPolicy {
    #[default]
    Error,
    /// Treat the undefined rate as 0 and flag the estimate.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub kind: EffectKind,
    pub control: String,
    pub treatment: String,
    pub band: Option<AgeBand>,
    pub reference: Option<String>,
    pub value: f64,
    pub undefined_band_policy_used: bool,
}

impl EffectEstimate {
    fn new(kind: EffectKind, control: &StratifiedCohort, treatment: &StratifiedCohort, value: f64) -> Self {
        EffectEstimate {
            kind,
            control: control.label().to_string(),
            treatment: treatment.label().to_string(),
            band: None,
            reference: None,
            value,
            undefined_band_policy_used: false,
        }
    }
}

fn check_pair(control: &StratifiedCohort, treatment: &StratifiedCohort) -> Result<()> {
    align(control.schema(), treatment.schema()).map(|_| ())
}

fn rate_or_policy(cohort: &StratifiedCohort, idx: usize, policy: UndefinedBandPolicy, coerced: &mut bool) -> Result<f64> {
    match (cohort.cfr_at(idx), policy) {
        (Rate::Defined(v), _) => Ok(v),
        (Rate::Undefined, UndefinedBandPolicy::Zero) => {
            *coerced = true;
            Ok(0.0)
        }
        (Rate::Undefined, UndefinedBandPolicy::Error) => Err(Error::UndefinedRate {
            cohort: cohort.display_name(),
            band: cohort.schema().bands()[idx].label(),
        }),
    }
}

/// Difference in total CFR.
pub fn tce(control: &StratifiedCohort, treatment: &StratifiedCohort) -> Result<EffectEstimate> {
    check_pair(control, treatment)?;
    // IEEE subtraction is exactly anti-commutative, so tce(a, b) == -tce(b, a).
    let value = treatment.total_cfr() - control.total_cfr();
    Ok(EffectEstimate::new(EffectKind::Tce, control, treatment, value))
}

/// Difference in CFR within one band. Always errors on an empty band.
pub fn cde(control: &StratifiedCohort, treatment: &StratifiedCohort, band: &AgeBand) -> Result<EffectEstimate> {
    check_pair(control, treatment)?;
    let idx = control.schema().index_of(band).ok_or_else(|| Error::UnknownBand(band.label()))?;
    let mut unused = false;
    let t = rate_or_policy(treatment, idx, UndefinedBandPolicy::Error, &mut unused)?;
    let c = rate_or_policy(control, idx, UndefinedBandPolicy::Error, &mut unused)?;
    let mut est = EffectEstimate::new(EffectKind::Cde, control, treatment, t - c);
    est.band = Some(*band);
    Ok(est)
}

/// `sum_a weight(a) * cde(a)` over bands where `weights` has cases.
fn weighted_cde(
    control: &StratifiedCohort,
    treatment: &StratifiedCohort,
    weights_from: &StratifiedCohort,
    policy: UndefinedBandPolicy,
) -> Result<(f64, bool)> {
    let weights = weights_from.case_demographic();
    let mut coerced = false;
    let mut sum = 0.0;
    for (i, &cases) in weights_from.cases().iter().enumerate() {
        if cases == 0 {
            continue;
        }
        let t = rate_or_policy(treatment, i, policy, &mut coerced)?;
        let c = rate_or_policy(control, i, policy, &mut coerced)?;
        sum += weights.weights()[i] * (t - c);
    }
    Ok((sum, coerced))
}

/// Natural direct effect: the control's case demographic under the treatment's per-band CFRs.
pub fn nde(control: &StratifiedCohort, treatment: &StratifiedCohort, policy: UndefinedBandPolicy) -> Result<EffectEstimate> {
    check_pair(control, treatment)?;
    let (value, coerced) = weighted_cde(control, treatment, control, policy)?;
    let mut est = EffectEstimate::new(EffectKind::Nde, control, treatment, value);
    est.undefined_band_policy_used = coerced;
    Ok(est)
}

/// Natural indirect effect: the control's per-band CFRs under the treatment's case demographic.
pub fn nie(control: &StratifiedCohort, treatment: &StratifiedCohort, policy: UndefinedBandPolicy) -> Result<EffectEstimate> {
    check_pair(control, treatment)?;
    let w0 = control.case_demographic();
    let w1 = treatment.case_demographic();
    let mut coerced = false;
    let mut sum = 0.0;
    for i in 0..control.schema().len() {
        let shift = w1.weights()[i] - w0.weights()[i];
        if shift == 0.0 {
            continue;
        }
        sum += shift * rate_or_policy(control, i, policy, &mut coerced)?;
    }
    let mut est = EffectEstimate::new(EffectKind::Nie, control, treatment, sum);
    est.undefined_band_policy_used = coerced;
    Ok(est)
}

/// Average CDE under a third cohort's case demographic. With `reference == control` this is the NDE.
pub fn expected_cde(
    control: &StratifiedCohort,
    treatment: &StratifiedCohort,
    reference: &StratifiedCohort,
    policy: UndefinedBandPolicy,
) -> Result<EffectEstimate> {
    check_pair(control, treatment)?;
    check_pair(control, reference)?;
    let (value, coerced) = weighted_cde(control, treatment, reference, policy)?;
    let mut est = EffectEstimate::new(EffectKind::ExpectedCde, control, treatment, value);
    est.reference = Some(reference.label().to_string());
    est.undefined_band_policy_used = coerced;
    Ok(est)
}

/// `TCE - (NDE + NIE)`; nonzero when treatment and mediator interact.
pub fn moderation_residual(
    control: &StratifiedCohort,
    treatment: &StratifiedCohort,
    policy: UndefinedBandPolicy,
) -> Result<EffectEstimate> {
    let t = tce(control, treatment)?;
    let d = nde(control, treatment, policy)?;
    let i = nie(control, treatment, policy)?;
    let mut est = EffectEstimate::new(EffectKind::ModerationResidual, control, treatment, t.value - (d.value + i.value));
    est.undefined_band_policy_used = d.undefined_band_policy_used || i.undefined_band_policy_used;
    Ok(est)
}

/// Residuals of `TCE(0->1) = NDE(0->1) - NIE(1->0) = NIE(0->1) - NDE(1->0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubtractivityResiduals {
    pub nde_minus_reverse_nie: f64,
    pub nie_minus_reverse_nde: f64,
}

impl SubtractivityResiduals {
    pub fn max(&self) -> f64 {
        self.nde_minus_reverse_nie.max(self.nie_minus_reverse_nde)
    }
}

pub fn subtractivity_check(
    control: &StratifiedCohort,
    treatment: &StratifiedCohort,
    policy: UndefinedBandPolicy,
) -> Result<SubtractivityResiduals> {
    let t = tce(control, treatment)?.value;
    let nde_fwd = nde(control, treatment, policy)?.value;
    let nie_fwd = nie(control, treatment, policy)?.value;
    let nde_rev = nde(treatment, control, policy)?.value;
    let nie_rev = nie(treatment, control, policy)?.value;
    Ok(SubtractivityResiduals {
        nde_minus_reverse_nie: (t - (nde_fwd - nie_rev)).abs(),
        nie_minus_reverse_nde: (t - (nie_fwd - nde_rev)).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn opposite(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSign {
    pub band: AgeBand,
    /// `None` when either cohort has no cases in the band.
    pub cde: Option<f64>,
    pub sign: Option<Sign>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpsonVerdict {
    pub control: String,
    pub treatment: String,
    pub bands: Vec<BandSign>,
    pub tce: f64,
    pub total_sign: Sign,
    pub is_reversal: bool,
    pub skipped_bands: Vec<AgeBand>,
    pub tied_bands: Vec<AgeBand>,
}

/// A reversal needs a nonzero total effect, at least one band with the
/// opposite sign, and no band sharing the total's sign. Zero-valued bands
/// (0% vs 0%) are reported as ties and do not block the verdict.
pub fn simpson_verdict(control: &StratifiedCohort, treatment: &StratifiedCohort) -> Result<SimpsonVerdict> {
    let total = tce(control, treatment)?.value;
    let total_sign = Sign::of(total);
    let mut bands = Vec::new();
    let mut skipped = Vec::new();
    let mut tied = Vec::new();
    for (i, band) in control.schema().bands().iter().enumerate() {
        let cde = match (treatment.cfr_at(i), control.cfr_at(i)) {
            (Rate::Defined(t), Rate::Defined(c)) => Some(t - c),
            _ => None,
        };
        let sign = cde.map(Sign::of);
        match sign {
            None => skipped.push(*band),
            Some(Sign::Zero) => tied.push(*band),
            _ => {}
        }
        bands.push(BandSign { band: *band, cde, sign });
    }
    let signs: Vec<Sign> = bands.iter().filter_map(|b| b.sign).collect();
    let is_reversal = total_sign != Sign::Zero
        && signs.iter().any(|&s| s == total_sign.opposite())
        && signs.iter().all(|&s| s != total_sign);
    Ok(SimpsonVerdict {
        control: control.label().to_string(),
        treatment: treatment.label().to_string(),
        bands,
        tce: total,
        total_sign,
        is_reversal,
        skipped_bands: skipped,
        tied_bands: tied,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub date: NaiveDate,
    pub tce: f64,
    pub nde: f64,
    pub nie: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectTrace {
    pub control: String,
    pub treatment: String,
    pub points: Vec<TracePoint>,
}

/// TCE, NDE and NIE for each snapshot of `series`, with the control fixed.
pub fn trace(control: &StratifiedCohort, series: &CohortSeries, policy: UndefinedBandPolicy) -> Result<EffectTrace> {
    let points = series
        .snapshots()
        .iter()
        .map(|snap| {
            Ok(TracePoint {
                date: snap.report_date(),
                tce: tce(control, snap)?.value,
                nde: nde(control, snap, policy)?.value,
                nie: nie(control, snap, policy)?.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectTrace { control: control.label().to_string(), treatment: series.label().to_string(), points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Tce,
    Nde,
    Nie,
}

impl MatrixKind {
    pub fn effect_kind(self) -> EffectKind {
        match self {
            MatrixKind::Tce => EffectKind::Tce,
            MatrixKind::Nde => EffectKind::Nde,
            MatrixKind::Nie => EffectKind::Nie,
        }
    }

    fn eval(self, control: &StratifiedCohort, treatment: &StratifiedCohort, policy: UndefinedBandPolicy) -> Result<EffectEstimate> {
        match self {
            MatrixKind::Tce => tce(control, treatment),
            MatrixKind::Nde => nde(control, treatment, policy),
            MatrixKind::Nie => nie(control, treatment, policy),
        }
    }
}

pub const ORDERING_RULE: &str = "rows ascending by mean effect as treatment over the other cohorts as control; ties alphabetical";

/// Effects for every ordered pair; `values[i][j]` switches from control `labels[j]` to treatment `labels[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseEffectMatrix {
    pub kind: MatrixKind,
    pub policy: UndefinedBandPolicy,
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Cells where an undefined band rate was coerced.
    pub coerced: Vec<Vec<bool>>,
    pub row_means: Vec<f64>,
    pub ordering_rule: String,
}

impl PairwiseEffectMatrix {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Value for switching from `control` to `treatment`.
    pub fn get(&self, treatment: &str, control: &str) -> Option<f64> {
        Some(self.values[self.index_of(treatment)?][self.index_of(control)?])
    }

    /// Same matrix with rows and columns permuted into `other`'s label order.
    /// Panics if the label sets differ.
    pub fn align_to(&self, other: &PairwiseEffectMatrix) -> PairwiseEffectMatrix {
        let map: Vec<usize> = other.labels.iter().map(|l| self.index_of(l).expect("same labels")).collect();
        PairwiseEffectMatrix {
            kind: self.kind,
            policy: self.policy,
            labels: other.labels.clone(),
            values: map.iter().map(|&i| map.iter().map(|&j| self.values[i][j]).collect()).collect(),
            coerced: map.iter().map(|&i| map.iter().map(|&j| self.coerced[i][j]).collect()).collect(),
            row_means: map.iter().map(|&i| self.row_means[i]).collect(),
            ordering_rule: format!("aligned to the {:?} ordering", other.kind).to_lowercase(),
        }
    }

    /// All off-diagonal values in row-major order.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let n = self.labels.len();
        (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| self.values[i][j]).collect()
    }
}

fn off_diagonal_mean(row: &[f64], i: usize) -> f64 {
    if row.len() < 2 {
        return 0.0;
    }
    let sum: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
    sum / (row.len() - 1) as f64
}

/// Row order for a square matrix: ascending mean, ties by label.
pub(crate) fn ordering(labels: &[String], means: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then_with(|| labels[a].cmp(&labels[b])));
    order
}

pub fn pairwise_matrix(cohorts: &[StratifiedCohort], kind: MatrixKind) -> Result<PairwiseEffectMatrix> {
    pairwise_matrix_with(cohorts, kind, UndefinedBandPolicy::Zero, Execution::Parallel)
}

/// Cells are independent, so parallel and sequential runs give bit-identical matrices.
pub fn pairwise_matrix_with(
    cohorts: &[StratifiedCohort],
    kind: MatrixKind,
    policy: UndefinedBandPolicy,
    exec: Execution,
) -> Result<PairwiseEffectMatrix> {
    let n = cohorts.len();
    for c in cohorts.iter().skip(1) {
        check_pair(&cohorts[0], c)?;
    }
    let labels: Vec<String> = cohorts.iter().map(|c| c.label().to_string()).collect();
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::InvalidCohort { cohort: l.clone(), message: "duplicate label in matrix input".into() });
        }
    }
    let cells = par::map_indices(exec, n * n, |k| {
        let (i, j) = (k / n, k % n);
        if i == j {
            return Ok((0.0, false));
        }
        kind.eval(&cohorts[j], &cohorts[i], policy).map(|e| (e.value, e.undefined_band_policy_used))
    });
    let cells = cells.into_iter().collect::<Result<Vec<_>>>()?;
    let raw: Vec<Vec<(f64, bool)>> = cells.chunks(n.max(1)).map(|r| r.to_vec()).collect();
    let means: Vec<f64> = raw
        .iter()
        .enumerate()
        .map(|(i, row)| off_diagonal_mean(&row.iter().map(|c| c.0).collect::<Vec<_>>(), i))
        .collect();
    let order = ordering(&labels, &means);
    Ok(PairwiseEffectMatrix {
        kind,
        policy,
        labels: order.iter().map(|&i| labels[i].clone()).collect(),
        values: order.iter().map(|&i| order.iter().map(|&j| raw[i][j].0).collect()).collect(),
        coerced: order.iter().map(|&i| order.iter().map(|&j| raw[i][j].1).collect()).collect(),
        row_means: order.iter().map(|&i| means[i]).collect(),
        ordering_rule: ORDERING_RULE.to_string(),
    })
}
