//! The language-model contract: free generation with token log-probabilities
//! and constrained scoring of candidate continuations.

mod mock;
mod remote;
mod types;

pub use mock::{MockPayload, MockRule, MockScript, PromptMatcher, ScriptError, ScriptedBackend};
pub use remote::{RemoteBackend, RemoteConfig};
pub use types::{
    apply_limits, prompt_digest, sequence_logprob_norm, BackendError, FinishReason, Generation,
    GenerationRequest, ScoreMap, ScoreRequest, TokenLogprob,
};

/// A language model. Implementations must tolerate concurrent calls.
pub trait LanguageModel: Send + Sync {
    /// Identity string recorded in run logs and datasets.
    fn name(&self) -> String;

    fn generate(&self, req: &GenerationRequest) -> Result<Generation, BackendError>;

    /// One log-probability per requested candidate, `-inf` for candidates the
    /// backend cannot score. Keys always equal the candidate set.
    fn score_continuations(&self, req: &ScoreRequest) -> Result<ScoreMap, BackendError>;
}

impl<M: LanguageModel + ?Sized> LanguageModel for &M {
    fn name(&self) -> String {
        (**self).name()
    }
    fn generate(&self, req: &GenerationRequest) -> Result<Generation, BackendError> {
        (**self).generate(req)
    }
    fn score_continuations(&self, req: &ScoreRequest) -> Result<ScoreMap, BackendError> {
        (**self).score_continuations(req)
    }
}

impl<M: LanguageModel + ?Sized> LanguageModel for std::sync::Arc<M> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn generate(&self, req: &GenerationRequest) -> Result<Generation, BackendError> {
        (**self).generate(req)
    }
    fn score_continuations(&self, req: &ScoreRequest) -> Result<ScoreMap, BackendError> {
        (**self).score_continuations(req)
    }
}

impl<M: LanguageModel + ?Sized> LanguageModel for Box<M> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn generate(&self, req: &GenerationRequest) -> Result<Generation, BackendError> {
        (**self).generate(req)
    }
    fn score_continuations(&self, req: &ScoreRequest) -> Result<ScoreMap, BackendError> {
        (**self).score_continuations(req)
    }
}
