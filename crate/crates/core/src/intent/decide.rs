use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::embedding::{EmbeddingProvider, ProviderError};
use super::metrics::{cosine_similarity, jaccard_distance, levenshtein, Granularity, ZeroVector};
use super::normalize::{split_identifier, Utterance};
use crate::workflow::{AdmissibleTrigger, TriggerKind};

/// A command the utterance may resolve to. `order` is its definition index;
/// ties between equally scored candidates go to the lowest order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCandidate {
    pub trigger: String,
    pub match_text: String,
    pub kind: TriggerKind,
    pub order: usize,
}

impl TransitionCandidate {
    pub fn new(trigger: impl Into<String>, kind: TriggerKind, order: usize) -> Self {
        let trigger = trigger.into();
        let match_text = split_identifier(&trigger);
        Self {
            trigger,
            match_text,
            kind,
            order,
        }
    }

    /// Candidates for an admissible list, ordered as given.
    pub fn from_admissible(list: &[AdmissibleTrigger]) -> Vec<Self> {
        list.iter()
            .enumerate()
            .map(|(i, a)| Self::new(a.trigger.clone(), a.kind, i))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScores {
    pub d_lev: usize,
    pub d_jac: f64,
    pub s_cos: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau_lev: usize,
    pub tau_jac: f64,
    pub tau_cos: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau_lev: 2,
            tau_jac: 0.3,
            tau_cos: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid thresholds: {0}")]
pub struct InvalidThresholds(pub String);

impl Thresholds {
    pub fn new(tau_lev: usize, tau_jac: f64, tau_cos: f64) -> Result<Self, InvalidThresholds> {
        let t = Self { tau_lev, tau_jac, tau_cos };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), InvalidThresholds> {
        if !(0.0..=1.0).contains(&self.tau_jac) {
            return Err(InvalidThresholds(format!("tau_jac {} outside [0, 1]", self.tau_jac)));
        }
        if !(0.0..=1.0).contains(&self.tau_cos) {
            return Err(InvalidThresholds(format!("tau_cos {} outside [0, 1]", self.tau_cos)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MatcherConfig {
    pub thresholds: Thresholds,
    pub granularity: Granularity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Lev,
    Jac,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NoConfidentMatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Matched { trigger: String, branch: Branch },
    Rejected { reason: RejectReason },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub trigger: String,
    pub kind: TriggerKind,
    pub scores: SimilarityScores,
}

/// One evaluated condition of the decision cascade, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchCheck {
    pub branch: Branch,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentDecision {
    pub outcome: Outcome,
    /// Metric the ranking is ordered by: the winning branch, or cosine
    /// similarity for a rejection.
    pub ranked_by: Branch,
    pub ranking: Vec<RankedCandidate>,
    pub trace: Vec<BranchCheck>,
}

impl IntentDecision {
    pub fn matched_trigger(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Matched { trigger, .. } => Some(trigger),
            Outcome::Rejected { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntentError {
    #[error("no candidate commands to match against")]
    EmptyCandidateSet,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    ZeroVector(#[from] ZeroVector),
}

fn by_order(a: &TransitionCandidate, b: &TransitionCandidate) -> Ordering {
    a.order.cmp(&b.order)
}

/// Index of the best candidate under `cmp` (Less = better), ties to lowest order.
fn best_by(
    candidates: &[TransitionCandidate],
    scores: &[SimilarityScores],
    cmp: impl Fn(&SimilarityScores, &SimilarityScores) -> Ordering,
) -> usize {
    (0..candidates.len())
        .min_by(|&i, &j| cmp(&scores[i], &scores[j]).then_with(|| by_order(&candidates[i], &candidates[j])))
        .expect("candidates are non-empty")
}

fn cmp_lev(a: &SimilarityScores, b: &SimilarityScores) -> Ordering {
    a.d_lev.cmp(&b.d_lev)
}

fn cmp_jac(a: &SimilarityScores, b: &SimilarityScores) -> Ordering {
    a.d_jac.total_cmp(&b.d_jac)
}

fn cmp_cos(a: &SimilarityScores, b: &SimilarityScores) -> Ordering {
    b.s_cos.total_cmp(&a.s_cos)
}

pub fn score_candidates(
    q: &Utterance,
    candidates: &[TransitionCandidate],
    granularity: Granularity,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<SimilarityScores>, IntentError> {
    let qv = provider.embed(&q.normalized)?;
    candidates
        .iter()
        .map(|c| {
            let cv = provider.embed(&c.match_text)?;
            Ok(SimilarityScores {
                d_lev: levenshtein(&q.normalized, &c.match_text),
                d_jac: jaccard_distance(&q.normalized, &c.match_text, granularity),
                s_cos: cosine_similarity(&qv, &cv)?,
            })
        })
        .collect()
}

/// Resolves an utterance to exactly one candidate or rejects it.
///
/// Per-metric optima are the lexical argmins and the cosine argmax. The
/// cascade then accepts, in order: the edit-distance optimum if its distance
/// is within `tau_lev`; the Jaccard optimum if its distance is within
/// `tau_jac`; the cosine optimum if it agrees with the edit-distance optimum
/// and its similarity is strictly above `tau_cos`. Otherwise the utterance is
/// rejected.
pub fn decide(
    q: &Utterance,
    candidates: &[TransitionCandidate],
    cfg: &MatcherConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<IntentDecision, IntentError> {
    if candidates.is_empty() {
        return Err(IntentError::EmptyCandidateSet);
    }
    let th = &cfg.thresholds;
    let scores = score_candidates(q, candidates, cfg.granularity, provider)?;

    let o_lev = best_by(candidates, &scores, cmp_lev);
    let o_jac = best_by(candidates, &scores, cmp_jac);
    let o_cos = best_by(candidates, &scores, cmp_cos);

    let mut trace = Vec::with_capacity(3);
    let mut check = |branch, passed| {
        trace.push(BranchCheck { branch, passed });
        passed
    };

    let winner = if check(Branch::Lev, scores[o_lev].d_lev <= th.tau_lev) {
        Some((o_lev, Branch::Lev))
    } else if check(Branch::Jac, scores[o_jac].d_jac <= th.tau_jac) {
        Some((o_jac, Branch::Jac))
    } else if check(Branch::Cos, o_cos == o_lev && scores[o_cos].s_cos > th.tau_cos) {
        Some((o_cos, Branch::Cos))
    } else {
        None
    };

    let (outcome, ranked_by) = match winner {
        Some((i, branch)) => (
            Outcome::Matched {
                trigger: candidates[i].trigger.clone(),
                branch,
            },
            branch,
        ),
        None => (
            Outcome::Rejected {
                reason: RejectReason::NoConfidentMatch,
            },
            Branch::Cos,
        ),
    };

    let cmp = match ranked_by {
        Branch::Lev => cmp_lev,
        Branch::Jac => cmp_jac,
        Branch::Cos => cmp_cos,
    };
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&i, &j| cmp(&scores[i], &scores[j]).then_with(|| by_order(&candidates[i], &candidates[j])));
    let ranking = idx
        .into_iter()
        .map(|i| RankedCandidate {
            trigger: candidates[i].trigger.clone(),
            kind: candidates[i].kind,
            scores: scores[i],
        })
        .collect();

    Ok(IntentDecision {
        outcome,
        ranked_by,
        ranking,
        trace,
    })
}
