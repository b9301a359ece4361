//! Discrete structural causal model `T -> X -> Y`, `T -> Y` with explicit
//! exogenous noise, used as ground truth for the mediation formulas.
//!
//! `T` is binary, `X` takes `k` levels and `Y` is binary. The mechanisms are
//!
//! ```text
//! X = f_X(t, u_x)    inverse transform of u_x over the cumulative row P(X | T=t)
//! Y = f_Y(t, x, u_y) = [u_y < P(Y=1 | t, x)]
//! ```
//!
//! with `u_x` and `u_y` independent uniforms. Because every mechanism is a
//! step function of its noise, expectations (including nested counterfactuals
//! such as `Y_{1, X(0)}`) are computed exactly by enumerating the finitely many
//! noise cells on which the mechanisms are constant. Reusing one `u_x` across
//! both arms is a coupling choice only; `Y`'s noise is independent of `X`'s, so
//! the natural effects do not depend on it.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::cohort::{align, BandSchema, StratifiedCohort};
use crate::effects::{self, UndefinedBandPolicy};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Stream used by [`sample_cohorts`]; random models use streams `0..2^63`.
pub const SAMPLE_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteScm {
    p_x_given_t: [Vec<f64>; 2],
    p_y_given_tx: [Vec<f64>; 2],
}

impl DiscreteScm {
    pub fn new(p_x_given_t: [Vec<f64>; 2], p_y_given_tx: [Vec<f64>; 2]) -> Result<Self> {
        let k = p_x_given_t[0].len();
        if k == 0 {
            return Err(Error::InvalidScm("mediator needs at least one level".into()));
        }
        for t in 0..2 {
            if p_x_given_t[t].len() != k || p_y_given_tx[t].len() != k {
                return Err(Error::InvalidScm(format!("row for t={t} does not have {k} entries")));
            }
            for (name, row) in [("p_x_given_t", &p_x_given_t[t]), ("p_y_given_tx", &p_y_given_tx[t])] {
                if let Some(x) = row.iter().position(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::InvalidScm(format!("{name}[{t}][{x}] = {} is not a probability", row[x])));
                }
            }
            let sum: f64 = p_x_given_t[t].iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidScm(format!("p_x_given_t row {t} sums to {sum}")));
            }
        }
        Ok(DiscreteScm { p_x_given_t, p_y_given_tx })
    }

    /// Random model: mediator rows uniform on the simplex, outcome probabilities uniform on `[0, 1)`.
    /// Deterministic in `(seed, stream)`.
    pub fn random(k: usize, seed: u64, stream: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidScm("mediator needs at least one level".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let simplex_row = |rng: &mut ChaCha8Rng| {
            // Normalised unit exponentials are Dirichlet(1, ..., 1).
            let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = e.iter().sum();
            if s > 0.0 {
                e.iter().map(|v| v / s).collect()
            } else {
                let mut row = vec![0.0; k];
                row[0] = 1.0;
                row
            }
        };
        let p_x = [simplex_row(&mut rng), simplex_row(&mut rng)];
        let p_y = [(0..k).map(|_| rng.random::<f64>()).collect(), (0..k).map(|_| rng.random::<f64>()).collect()];
        DiscreteScm::new(p_x, p_y)
    }

    /// The drug that is useless without the activated protein: `X = T`, `Y = T and X`.
    /// The whole effect is moderation, so `TCE = 1` while `NDE = NIE = 0`.
    pub fn moderation() -> Self {
        DiscreteScm {
            p_x_given_t: [vec![1.0, 0.0], vec![0.0, 1.0]],
            p_y_given_tx: [vec![0.0, 0.0], vec![0.0, 1.0]],
        }
    }

    pub fn k(&self) -> usize {
        self.p_x_given_t[0].len()
    }

    pub fn p_x(&self, t: usize) -> &[f64] {
        &self.p_x_given_t[t]
    }

    pub fn p_y(&self, t: usize) -> &[f64] {
        &self.p_y_given_tx[t]
    }

    fn cumulative(&self, t: usize) -> Vec<f64> {
        self.p_x_given_t[t]
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    /// Mediator mechanism: first level whose cumulative probability exceeds `u_x`.
    pub fn f_x(&self, t: usize, u_x: f64) -> usize {
        let row = &self.p_x_given_t[t];
        let mut acc = 0.0;
        for (x, p) in row.iter().enumerate() {
            acc += p;
            if u_x < acc {
                return x;
            }
        }
        // Only reachable when the row sums to slightly under 1.
        row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
    }

    /// Outcome mechanism.
    pub fn f_y(&self, t: usize, x: usize, u_y: f64) -> bool {
        u_y < self.p_y_given_tx[t][x]
    }

    /// Text form: `#scm,<k>` then `table,t,x,value` rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("#scm,{}\n", self.k());
        for (name, table) in [("p_x_given_t", &self.p_x_given_t), ("p_y_given_tx", &self.p_y_given_tx)] {
            for (t, row) in table.iter().enumerate() {
                for (x, v) in row.iter().enumerate() {
                    out.push_str(&format!("{name},{t},{x},{v}\n"));
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, message: String| Error::Parse { line: line + 1, message };
        let (hline, header) = lines.next().ok_or_else(|| parse_err(0, "empty scm file".into()))?;
        let k: usize = header
            .trim()
            .strip_prefix("#scm,")
            .and_then(|k| k.trim().parse().ok())
            .ok_or_else(|| parse_err(hline, format!("expected `#scm,<k>` header, found `{header}`")))?;
        if k == 0 {
            return Err(parse_err(hline, "k must be at least 1".into()));
        }
        let mut tables: [[Vec<Option<f64>>; 2]; 2] = Default::default();
        for table in tables.iter_mut() {
            for row in table.iter_mut() {
                *row = vec![None; k];
            }
        }
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(parse_err(i, format!("expected 4 fields, found {}", fields.len())));
            }
            let table = match fields[0] {
                "p_x_given_t" => 0,
                "p_y_given_tx" => 1,
                other => return Err(parse_err(i, format!("unknown table `{other}`"))),
            };
            let t: usize = fields[1].parse().ok().filter(|&t| t < 2).ok_or_else(|| parse_err(i, format!("bad t `{}`", fields[1])))?;
            let x: usize = fields[2].parse().ok().filter(|&x| x < k).ok_or_else(|| parse_err(i, format!("bad x `{}`", fields[2])))?;
            let v: f64 = fields[3].parse().map_err(|_| parse_err(i, format!("bad value `{}`", fields[3])))?;
            let slot = &mut tables[table][t][x];
            if slot.is_some() {
                return Err(parse_err(i, format!("duplicate entry {},{t},{x}", fields[0])));
            }
            *slot = Some(v);
        }
        let finish = |table: &[Vec<Option<f64>>; 2], name: &str| -> Result<[Vec<f64>; 2]> {
            let row = |t: usize| -> Result<Vec<f64>> {
                table[t]
                    .iter()
                    .enumerate()
                    .map(|(x, v)| v.ok_or_else(|| Error::InvalidScm(format!("missing entry {name},{t},{x}"))))
                    .collect()
            };
            Ok([row(0)?, row(1)?])
        };
        DiscreteScm::new(finish(&tables[0], "p_x_given_t")?, finish(&tables[1], "p_y_given_tx")?)
    }
}

/// Effects of switching `T` from 0 to 1, plus the two reverse-direction natural effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmEffects {
    pub tce: f64,
    pub cde: Vec<f64>,
    pub nde: f64,
    pub nie: f64,
    /// NDE switching from 1 to 0.
    pub nde_reverse: f64,
    /// NIE switching from 1 to 0.
    pub nie_reverse: f64,
}

impl ScmEffects {
    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &ScmEffects) -> f64 {
        let scalars = [
            (self.tce, other.tce),
            (self.nde, other.nde),
            (self.nie, other.nie),
            (self.nde_reverse, other.nde_reverse),
            (self.nie_reverse, other.nie_reverse),
        ];
        scalars
            .iter()
            .copied()
            .chain(self.cde.iter().copied().zip(other.cde.iter().copied()))
            .map(|(a, b)| (a - b).abs())
            .fold(if self.cde.len() == other.cde.len() { 0.0 } else { f64::INFINITY }, f64::max)
    }

    /// Residuals of `TCE = NDE - NIE(reverse)` and `TCE = NIE - NDE(reverse)`.
    pub fn subtractivity_residual(&self) -> f64 {
        let a = (self.tce - (self.nde - self.nie_reverse)).abs();
        let b = (self.tce - (self.nie - self.nde_reverse)).abs();
        a.max(b)
    }
}

/// Noise cells `(midpoint, mass)` of the unit interval cut at `points`.
fn cells(mut points: Vec<f64>) -> Vec<(f64, f64)> {
    points.extend([0.0, 1.0]);
    points.retain(|p| (0.0..=1.0).contains(p));
    points.sort_by(f64::total_cmp);
    points.dedup();
    points.windows(2).filter(|w| w[1] > w[0]).map(|w| (0.5 * (w[0] + w[1]), w[1] - w[0])).collect()
}

/// Effects by integrating the structural mechanisms over the exogenous noise,
/// evaluating counterfactuals such as `Y_{1, X(0)}` directly.
pub fn exact_effects(scm: &DiscreteScm) -> ScmEffects {
    let k = scm.k();
    let ux_cells = cells([scm.cumulative(0), scm.cumulative(1)].concat());
    let uy_cells = cells([scm.p_y(0), scm.p_y(1)].concat());

    // E over u_y of Y(t, x) with the mediator forced to x.
    let outcome = |t: usize, x: usize| -> f64 {
        uy_cells.iter().map(|&(u, m)| if scm.f_y(t, x, u) { m } else { 0.0 }).sum()
    };
    // E[Y_{t, X(s)}]: treatment set to t, mediator as it would be under s.
    let nested = |t: usize, s: usize| -> f64 {
        ux_cells.iter().map(|&(u, m)| m * outcome(t, scm.f_x(s, u))).sum()
    };

    let y0 = nested(0, 0);
    let y1 = nested(1, 1);
    let y1_x0 = nested(1, 0);
    let y0_x1 = nested(0, 1);
    ScmEffects {
        tce: y1 - y0,
        cde: (0..k).map(|x| outcome(1, x) - outcome(0, x)).collect(),
        nde: y1_x0 - y0,
        nie: y0_x1 - y0,
        nde_reverse: y0_x1 - y1,
        nie_reverse: y1_x0 - y1,
    }
}

/// Effects by plugging the model's conditionals into the observational mediation formulas.
/// Summation order and zero-weight skipping mirror the cohort estimators.
pub fn mediation_formula_effects(scm: &DiscreteScm) -> ScmEffects {
    let (p0, p1) = (scm.p_x(0), scm.p_x(1));
    let (y0, y1) = (scm.p_y(0), scm.p_y(1));
    let k = scm.k();
    let direct = |w: &[f64], to: &[f64], from: &[f64]| -> f64 {
        (0..k).filter(|&x| w[x] != 0.0).map(|x| w[x] * (to[x] - from[x])).sum()
    };
    let indirect = |from_w: &[f64], to_w: &[f64], rates: &[f64]| -> f64 {
        (0..k)
            .map(|x| (to_w[x] - from_w[x], rates[x]))
            .filter(|&(shift, _)| shift != 0.0)
            .map(|(shift, r)| shift * r)
            .sum()
    };
    let total = |w: &[f64], r: &[f64]| -> f64 { (0..k).map(|x| w[x] * r[x]).sum() };
    ScmEffects {
        tce: total(p1, y1) - total(p0, y0),
        cde: (0..k).map(|x| y1[x] - y0[x]).collect(),
        nde: direct(p0, y1, y0),
        nie: indirect(p0, p1, y0),
        nde_reverse: direct(p1, y0, y1),
        nie_reverse: indirect(p1, p0, y1),
    }
}

/// Two cohorts drawn from the model's observational distribution, `x` levels as pseudo-bands.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohortPair {
    pub control: StratifiedCohort,
    pub treatment: StratifiedCohort,
    pub n_per_arm: u64,
    pub seed: u64,
    pub stream: u64,
}

pub fn sample_cohorts(scm: &DiscreteScm, n_per_arm: u64, seed: u64) -> Result<SyntheticCohortPair> {
    sample_cohorts_on_stream(scm, n_per_arm, seed, SAMPLE_STREAM)
}

/// Multinomial mediator counts via sequential conditional binomials, then
/// binomial deaths per level. ChaCha8 keyed by `seed`, on stream `stream`.
pub fn sample_cohorts_on_stream(scm: &DiscreteScm, n_per_arm: u64, seed: u64, stream: u64) -> Result<SyntheticCohortPair> {
    if n_per_arm == 0 {
        return Err(Error::InvalidScm("n_per_arm must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let schema = BandSchema::levels(scm.k())?;
    let date = NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date");
    let mut arm = |t: usize| -> Result<StratifiedCohort> {
        let p = scm.p_x(t);
        let mut remaining = n_per_arm;
        let mut cases = Vec::with_capacity(p.len());
        for x in 0..p.len() {
            let tail: f64 = p[x..].iter().sum();
            let q = if tail > 0.0 { (p[x] / tail).clamp(0.0, 1.0) } else { 0.0 };
            let c = if x + 1 == p.len() && q > 0.0 { remaining } else { binomial(&mut rng, remaining, q) };
            cases.push(c);
            remaining -= c;
        }
        let deaths = cases.iter().enumerate().map(|(x, &c)| binomial(&mut rng, c, scm.p_y(t)[x])).collect();
        let label = if t == 0 { "control" } else { "treatment" };
        StratifiedCohort::new(label, date, format!("synthetic, seed {seed}, stream {stream}"), schema.clone(), cases, deaths)
    };
    let control = arm(0)?;
    let treatment = arm(1)?;
    Ok(SyntheticCohortPair { control, treatment, n_per_arm, seed, stream })
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p checked to lie in (0, 1)").sample(rng)
}

/// A model fitted from two cohorts, with the levels whose outcome rate had no cases behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedScm {
    pub scm: DiscreteScm,
    pub schema: BandSchema,
    /// `(t, x)` cells of `p_y_given_tx` filled with a placeholder 0 because the band had no cases.
    pub placeholders: Vec<(usize, usize)>,
}

impl FittedScm {
    /// Mediation-formula effects, refusing placeholder cells under the error policy.
    pub fn effects(&self, policy: UndefinedBandPolicy) -> Result<ScmEffects> {
        if policy == UndefinedBandPolicy::Error {
            if let Some(&(t, x)) = self.placeholders.first() {
                return Err(Error::UndefinedRate {
                    cohort: if t == 0 { "control".into() } else { "treatment".into() },
                    band: self.schema.bands()[x].label(),
                });
            }
        }
        Ok(mediation_formula_effects(&self.scm))
    }
}

/// Empirical conditionals: case demographic as `P(X | T)` and per-band CFR as `P(Y | T, X)`.
pub fn fit_scm_from_cohorts(control: &StratifiedCohort, treatment: &StratifiedCohort) -> Result<FittedScm> {
    let schema = align(control.schema(), treatment.schema())?;
    let mut placeholders = Vec::new();
    let mut rates = |t: usize, c: &StratifiedCohort| -> Vec<f64> {
        (0..schema.len())
            .map(|x| {
                c.cfr_at(x).value().unwrap_or_else(|| {
                    placeholders.push((t, x));
                    0.0
                })
            })
            .collect()
    };
    let p_y = [rates(0, control), rates(1, treatment)];
    let p_x = [control.case_demographic().weights().to_vec(), treatment.case_demographic().weights().to_vec()];
    Ok(FittedScm { scm: DiscreteScm::new(p_x, p_y)?, schema, placeholders })
}

/// Small models exercising deterministic mechanisms and degenerate rows.
pub fn corner_cases() -> Vec<(&'static str, DiscreteScm)> {
    let m = |name, px: [Vec<f64>; 2], py: [Vec<f64>; 2]| (name, DiscreteScm::new(px, py).expect("valid corner case"));
    vec![
        ("moderation", DiscreteScm::moderation()),
        m("single level", [vec![1.0], vec![1.0]], [vec![0.3], vec![0.8]]),
        m("all outcomes impossible", [vec![0.2, 0.8], vec![0.6, 0.4]], [vec![0.0; 2], vec![0.0; 2]]),
        m("all outcomes certain", [vec![0.2, 0.8], vec![0.6, 0.4]], [vec![1.0; 2], vec![1.0; 2]]),
        m("deterministic everything", [vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], [vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]),
        m("identical mediator rows", [vec![0.25, 0.25, 0.5], vec![0.25, 0.25, 0.5]], [vec![0.1, 0.5, 0.9], vec![0.2, 0.2, 0.7]]),
        m("outcome ignores mediator", [vec![0.9, 0.1, 0.0], vec![0.0, 0.3, 0.7]], [vec![0.4; 3], vec![0.65; 3]]),
        m("disjoint supports", [vec![0.5, 0.5, 0.0, 0.0], vec![0.0, 0.0, 0.5, 0.5]], [vec![0.1, 0.2, 0.3, 0.4], vec![0.9, 0.8, 0.7, 0.6]]),
        m("zero level in both arms", [vec![0.0, 0.3, 0.7], vec![0.0, 0.9, 0.1]], [vec![0.5, 0.25, 0.75], vec![1.0, 0.125, 0.0]]),
        m("additive outcome", [vec![0.1, 0.2, 0.3, 0.4], vec![0.4, 0.3, 0.2, 0.1]], [vec![0.1, 0.2, 0.3, 0.4], vec![0.15, 0.25, 0.35, 0.45]]),
        m("reversal", [vec![0.9, 0.1], vec![0.1, 0.9]], [vec![0.01, 0.2], vec![0.005, 0.15]]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFailure {
    pub name: String,
    pub discrepancy: f64,
    pub subtractivity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub k: usize,
    pub seed: u64,
    pub random_models: usize,
    pub corner_cases: usize,
    pub tolerance: f64,
    pub max_discrepancy: f64,
    pub max_subtractivity_residual: f64,
    pub failures: Vec<OracleFailure>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compare exact enumeration with the mediation formulas on every corner case
/// and on `n_random` random models of `k` levels (model `i` on stream `i`).
pub fn oracle_suite(n_random: usize, k: usize, seed: u64, exec: Execution) -> Result<OracleReport> {
    const TOLERANCE: f64 = 1e-12;
    let mut models: Vec<(String, DiscreteScm)> = corner_cases().into_iter().map(|(n, s)| (n.to_string(), s)).collect();
    let corner = models.len();
    let random = par::map_indices(exec, n_random, |i| DiscreteScm::random(k, seed, i as u64));
    for (i, scm) in random.into_iter().enumerate() {
        models.push((format!("random k={k} seed={seed} stream={i}"), scm?));
    }
    let checks = par::map_slice(exec, &models, |(name, scm)| {
        let exact = exact_effects(scm);
        OracleFailure {
            name: name.clone(),
            discrepancy: exact.max_abs_diff(&mediation_formula_effects(scm)),
            subtractivity_residual: exact.subtractivity_residual(),
        }
    });
    Ok(OracleReport {
        k,
        seed,
        random_models: n_random,
        corner_cases: corner,
        tolerance: TOLERANCE,
        max_discrepancy: checks.iter().map(|c| c.discrepancy).fold(0.0, f64::max),
        max_subtractivity_residual: checks.iter().map(|c| c.subtractivity_residual).fold(0.0, f64::max),
        failures: checks
            .into_iter()
            .filter(|c| !(c.discrepancy < TOLERANCE && c.subtractivity_residual < TOLERANCE))
            .collect(),
    })
}

/// TCE, NDE, NIE estimated from a sampled pair by the cohort estimators.
pub fn estimate(pair: &SyntheticCohortPair) -> Result<[f64; 3]> {
    let policy = UndefinedBandPolicy::Zero;
    Ok([
        effects::tce(&pair.control, &pair.treatment)?.value,
        effects::nde(&pair.control, &pair.treatment, policy)?.value,
        effects::nie(&pair.control, &pair.treatment, policy)?.value,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateConfig {
    pub models: usize,
    pub k: usize,
    pub n_per_arm: u64,
    /// Replicates used for the empirical spread; one further replicate is held out and tested.
    pub replicates: usize,
    pub z: f64,
    pub seed: u64,
}

impl Default for ReplicateConfig {
    fn default() -> Self {
        ReplicateConfig { models: 50, k: 9, n_per_arm: 1_000_000, replicates: 200, z: 3.0, seed: 2020 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReplicates {
    pub model: usize,
    /// Exact TCE, NDE, NIE.
    pub exact: [f64; 3],
    /// Replicate standard deviation of each estimator.
    pub spread: [f64; 3],
    /// Estimates from the held-out replicate.
    pub held_out: [f64; 3],
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub config: ReplicateConfig,
    pub models: Vec<ModelReplicates>,
}

impl ReplicateReport {
    pub fn fraction_within(&self) -> f64 {
        if self.models.is_empty() {
            return 0.0;
        }
        self.models.iter().filter(|m| m.within).count() as f64 / self.models.len() as f64
    }
}

/// Sampling stream for replicate `r` of model `i`.
pub fn replicate_stream(model: usize, replicate: usize) -> u64 {
    SAMPLE_STREAM | ((model as u64) << 32) | replicate as u64
}

fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// For each random model, estimate the sampling spread from `replicates`
/// draws and check that a further, independent draw lands within `z`
/// spreads of the exact effects for all of TCE, NDE and NIE.
pub fn replicate_study(config: ReplicateConfig, exec: Execution) -> Result<ReplicateReport> {
    let per_model = config.replicates + 1;
    let scms = (0..config.models).map(|i| DiscreteScm::random(config.k, config.seed, i as u64)).collect::<Result<Vec<_>>>()?;
    let draws = par::map_indices(exec, config.models * per_model, |job| {
        let (i, r) = (job / per_model, job % per_model);
        sample_cohorts_on_stream(&scms[i], config.n_per_arm, config.seed, replicate_stream(i, r)).and_then(|p| estimate(&p))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let models = scms
        .iter()
        .enumerate()
        .map(|(i, scm)| {
            let ex = exact_effects(scm);
            let exact = [ex.tce, ex.nde, ex.nie];
            let rows = &draws[i * per_model..(i + 1) * per_model];
            let (spread_rows, held_out) = (&rows[..config.replicates], rows[config.replicates]);
            let spread: [f64; 3] = std::array::from_fn(|c| sample_sd(&spread_rows.iter().map(|r| r[c]).collect::<Vec<_>>()));
            let within = (0..3).all(|c| {
                let err = (held_out[c] - exact[c]).abs();
                // A zero spread only happens for deterministic estimators; require exactness then.
                if spread[c] > 0.0 { err <= config.z * spread[c] } else { err <= 1e-12 }
            });
            ModelReplicates { model: i, exact, spread, held_out, within }
        })
        .collect();
    Ok(ReplicateReport { config, models })
}

/// Median over `seeds` replicates of the largest absolute error among TCE, NDE, NIE.
pub fn median_abs_error(scm: &DiscreteScm, n_per_arm: u64, seeds: usize, seed: u64, exec: Execution) -> Result<f64> {
    let ex = exact_effects(scm);
    let exact = [ex.tce, ex.nde, ex.nie];
    let mut errs = par::map_indices(exec, seeds, |r| {
        let est = estimate(&sample_cohorts_on_stream(scm, n_per_arm, seed, replicate_stream(0, r))?)?;
        Ok((0..3).map(|c| (est[c] - exact[c]).abs()).fold(0.0, f64::max))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    errs.sort_by(f64::total_cmp);
    let n = errs.len();
    if n == 0 {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    Ok(if n % 2 == 1 { errs[n / 2] } else { 0.5 * (errs[n / 2 - 1] + errs[n / 2]) })
}
