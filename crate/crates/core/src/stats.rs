//! Rankings, rank deltas, correlation tests and sign discordance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::effects::{PairwiseEffectMatrix, Sign};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Labels ordered best to worst (lowest score first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub criterion: String,
    pub labels: Vec<String>,
    pub scores: Vec<f64>,
    /// True where the score equals a neighbour's.
    pub tied: Vec<bool>,
}

impl Ranking {
    /// Build from unordered `(label, score)` pairs; ascending score, ties alphabetical.
    pub fn from_scores(criterion: impl Into<String>, mut entries: Vec<(String, f64)>) -> Result<Self> {
        entries.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::LabelMismatch);
            }
        }
        let scores: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let tied = (0..scores.len())
            .map(|i| (i > 0 && scores[i - 1] == scores[i]) || (i + 1 < scores.len() && scores[i + 1] == scores[i]))
            .collect();
        Ok(Ranking { criterion: criterion.into(), labels: entries.into_iter().map(|e| e.0).collect(), scores, tied })
    }

    /// 1-based position of `label`.
    pub fn rank(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label).map(|i| i + 1)
    }

    pub fn score(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.scores[i])
    }

    /// Values for this ranking's labels, in ranking order.
    pub fn align(&self, values: &[(String, f64)]) -> Result<Vec<f64>> {
        self.labels
            .iter()
            .map(|l| {
                values.iter().find(|(k, _)| k == l).map(|(_, v)| *v).ok_or_else(|| Error::UnknownLabel {
                    label: l.clone(),
                    suggestions: Vec::new(),
                })
            })
            .collect()
    }
}

/// Rank cohorts by their mean effect as treatment; most negative is rank 1.
pub fn rank_by_avg_treatment(matrix: &PairwiseEffectMatrix) -> Ranking {
    let entries = matrix.labels.iter().cloned().zip(matrix.row_means.iter().copied()).collect();
    let criterion = format!("mean {:?} as treatment, ascending", matrix.kind).to_lowercase();
    Ranking::from_scores(criterion, entries).expect("matrix labels are unique")
}

/// `rank in r1 - rank in r2` per label, in `r1` order.
pub fn rank_delta(r1: &Ranking, r2: &Ranking) -> Result<Vec<(String, i64)>> {
    if r1.labels.len() != r2.labels.len() {
        return Err(Error::LabelMismatch);
    }
    r1.labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let j = r2.rank(l).ok_or(Error::LabelMismatch)?;
            Ok((l.clone(), (i + 1) as i64 - j as i64))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    Spearman,
    Pearson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PMethod {
    /// Two-sided Student t approximation with `n - 2` degrees of freedom.
    TApprox,
    /// Two-sided permutation test; deterministic in `(seed, reps)`.
    Permutation { seed: u64, reps: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub method: CorrelationMethod,
    pub coefficient: f64,
    pub p_value: f64,
    pub p_method: PMethod,
    pub n: usize,
}

/// Permutations per batch; each batch draws from its own ChaCha stream, so the
/// p-value does not depend on how batches are scheduled.
pub const PERMUTATION_BATCH: u64 = 1000;

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn check_inputs(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: xs.len() });
    }
    Ok(())
}

fn centered(xs: &[f64]) -> Result<Vec<f64>> {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let c: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    if c.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(c)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn correlate(method: CorrelationMethod, xs: &[f64], ys: &[f64], p_method: PMethod, exec: Execution) -> Result<CorrelationResult> {
    check_inputs(xs, ys)?;
    let cx = centered(xs)?;
    let cy = centered(ys)?;
    let norm = (dot(&cx, &cx) * dot(&cy, &cy)).sqrt();
    let r = (dot(&cx, &cy) / norm).clamp(-1.0, 1.0);
    let n = xs.len();
    let p_value = match p_method {
        PMethod::TApprox => t_approx_p(r, n),
        PMethod::Permutation { seed, reps } => permutation_p(&cx, &cy, norm, r, seed, reps, exec),
    };
    Ok(CorrelationResult { method, coefficient: r, p_value, p_method, n })
}

fn t_approx_p(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

fn permutation_p(cx: &[f64], cy: &[f64], norm: f64, r: f64, seed: u64, reps: u64, exec: Execution) -> f64 {
    // Permuting a centered vector leaves its mean and norm unchanged.
    let threshold = r.abs() * (1.0 - 1e-12);
    let batches = reps.div_ceil(PERMUTATION_BATCH);
    let counts = par::map_indices(exec, batches as usize, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let size = PERMUTATION_BATCH.min(reps - b as u64 * PERMUTATION_BATCH);
        let mut perm = cy.to_vec();
        let mut hits = 0u64;
        for _ in 0..size {
            perm.shuffle(&mut rng);
            if (dot(cx, &perm) / norm).abs() >= threshold {
                hits += 1;
            }
        }
        hits
    });
    (1 + counts.iter().sum::<u64>()) as f64 / (reps + 1) as f64
}

/// Pearson correlation of the average ranks.
pub fn spearman(xs: &[f64], ys: &[f64], p_method: PMethod) -> Result<CorrelationResult> {
    spearman_with(xs, ys, p_method, Execution::Parallel)
}

pub fn spearman_with(xs: &[f64], ys: &[f64], p_method: PMethod, exec: Execution) -> Result<CorrelationResult> {
    check_inputs(xs, ys)?;
    correlate(CorrelationMethod::Spearman, &average_ranks(xs), &average_ranks(ys), p_method, exec)
}

pub fn pearson(xs: &[f64], ys: &[f64], p_method: PMethod) -> Result<CorrelationResult> {
    pearson_with(xs, ys, p_method, Execution::Parallel)
}

pub fn pearson_with(xs: &[f64], ys: &[f64], p_method: PMethod, exec: Execution) -> Result<CorrelationResult> {
    correlate(CorrelationMethod::Pearson, xs, ys, p_method, exec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscordantPair {
    pub treatment: String,
    pub control: String,
    pub first: f64,
    pub second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignDiscordance {
    /// Ordered pairs whose two effects are nonzero with opposite signs.
    pub count: usize,
    /// All ordered off-diagonal pairs.
    pub total: usize,
    /// Pairs where at least one effect is exactly zero.
    pub zeros: usize,
    pub pairs: Vec<DiscordantPair>,
}

/// Count opposite-sign cells between two matrices over the same labels (`m2` is aligned to `m1` by label).
pub fn sign_discordance(m1: &PairwiseEffectMatrix, m2: &PairwiseEffectMatrix) -> Result<SignDiscordance> {
    let n = m1.labels.len();
    if m2.labels.len() != n {
        return Err(Error::LabelMismatch);
    }
    let map: Vec<usize> = m1.labels.iter().map(|l| m2.index_of(l).ok_or(Error::LabelMismatch)).collect::<Result<_>>()?;
    let mut out = SignDiscordance { count: 0, total: 0, zeros: 0, pairs: Vec::new() };
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            out.total += 1;
            let (a, b) = (m1.values[i][j], m2.values[map[i]][map[j]]);
            let (sa, sb) = (Sign::of(a), Sign::of(b));
            if sa == Sign::Zero || sb == Sign::Zero {
                out.zeros += 1;
            } else if sa != sb {
                out.count += 1;
                out.pairs.push(DiscordantPair {
                    treatment: m1.labels[i].clone(),
                    control: m1.labels[j].clone(),
                    first: a,
                    second: b,
                });
            }
        }
    }
    Ok(out)
}
