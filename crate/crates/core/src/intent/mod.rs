//! Maps free-text operator utterances onto the commands admissible in the
//! current state.

mod decide;
mod embedding;
mod metrics;
mod normalize;

use std::sync::Arc;

pub use decide::{
    decide, score_candidates, Branch, BranchCheck, IntentDecision, IntentError, InvalidThresholds, MatcherConfig,
    Outcome, RankedCandidate, RejectReason, SimilarityScores, Thresholds, TransitionCandidate,
};
pub use embedding::{
    embed, EmbeddingProvider, EmbeddingVector, HashEmbedding, HttpEmbedding, ProviderError, TableEmbedding,
    TableLoadError, EMBEDDING_DIM,
};
pub use metrics::{cosine_similarity, jaccard_distance, jaccard_similarity, levenshtein, Granularity, ZeroVector};
pub use normalize::{normalize, split_identifier, Utterance};

use crate::commands::GlobalCommandSet;
use crate::engine::SessionState;
use crate::workflow::WorkflowCatalog;

/// Thresholds plus the embedding provider they are applied with.
#[derive(Clone)]
pub struct IntentMatcher {
    pub config: MatcherConfig,
    pub provider: Arc<dyn EmbeddingProvider>,
}

impl IntentMatcher {
    pub fn new(config: MatcherConfig, provider: Arc<dyn EmbeddingProvider>) -> Self {
        Self { config, provider }
    }

    pub fn decide(&self, q: &Utterance, candidates: &[TransitionCandidate]) -> Result<IntentDecision, IntentError> {
        decide(q, candidates, &self.config, self.provider.as_ref())
    }
}

impl Default for IntentMatcher {
    fn default() -> Self {
        Self::new(MatcherConfig::default(), Arc::new(HashEmbedding))
    }
}

impl std::fmt::Debug for IntentMatcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntentMatcher")
            .field("config", &self.config)
            .field("provider", &self.provider.name())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatchError {
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error("session has no active frame")]
    NoActiveFrame,
    #[error("workflow `{0}` is not in the catalog")]
    UnknownWorkflow(String),
    #[error(transparent)]
    UnknownState(#[from] crate::workflow::UnknownState),
}

/// Candidates for the session's active frame: its state's transitions, the
/// frame workflow's jump states, then global commands.
pub fn candidates_in_state(
    s: &SessionState,
    catalog: &WorkflowCatalog,
    globals: &GlobalCommandSet,
) -> Result<Vec<TransitionCandidate>, MatchError> {
    let frame = s.top().ok_or(MatchError::NoActiveFrame)?;
    let w = catalog
        .get(&frame.workflow)
        .ok_or_else(|| MatchError::UnknownWorkflow(frame.workflow.clone()))?;
    let admissible = w.admissible_commands(&frame.state, globals)?;
    Ok(TransitionCandidate::from_admissible(&admissible))
}

pub fn match_in_state(
    q: &Utterance,
    s: &SessionState,
    catalog: &WorkflowCatalog,
    globals: &GlobalCommandSet,
    matcher: &IntentMatcher,
) -> Result<IntentDecision, MatchError> {
    let candidates = candidates_in_state(s, catalog, globals)?;
    Ok(matcher.decide(q, &candidates)?)
}
