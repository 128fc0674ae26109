//! The search loop: render prompts, obtain proposals, train, feed metrics
//! back, and keep the lexicographically best (KL, parameters, depth) spec.
//! With the heuristic proposer the whole campaign is a pure function of
//! (config, seed); wall-clock time never enters the log.

use serde::{Deserialize, Serialize};

use crate::ansatz::{build_circuit, parse_proposal, AnsatzError, AnsatzSpec};
use crate::prompts::{
    render_feedback_prompt, render_task_prompt, FeedbackRecord, PromptTemplates,
};
use crate::proposer::{HeuristicProposer, Message, Proposer, RemoteLlm, RemoteLlmConfig};
use crate::sim::MAX_QUBITS;
use crate::target::{discretize_target, TargetError, TargetFamily};
use crate::train::{mix_seed, train_repeats, TrainConfig, TrainError};

const STREAM_ITERATION: u64 = 101;

/// Relative best-KL improvement below which the campaign stops.
const PLATEAU_THRESHOLD: f64 = 0.01;
/// Number of consecutive iterations the plateau must span.
const PLATEAU_WINDOW: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("invalid campaign config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error("building the proposed circuit failed: {0}")]
    Build(#[from] AnsatzError),
    #[error(transparent)]
    Train(#[from] TrainError),
    /// Transport failure after retries; carries the log accumulated so far
    /// so callers can persist it before propagating.
    #[error("proposer unavailable: {detail}")]
    ProposerUnavailable {
        detail: String,
        log: Box<CampaignLog>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProposerChoice {
    Heuristic,
    Llm(RemoteLlmConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub n_qubits: usize,
    /// Block count the task prompt advertises and the heuristic starts from.
    pub blocks: usize,
    pub max_iterations: usize,
    pub target: TargetFamily,
    pub train: TrainConfig,
    pub proposer: ProposerChoice,
    /// Resend only the task prompt and the latest feedback instead of the
    /// whole dialogue.
    pub stateless_conversation: bool,
    pub seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            n_qubits: 3,
            blocks: 4,
            max_iterations: 10,
            target: TargetFamily::Lognormal { mu: 1.0, sigma: 1.0 },
            train: TrainConfig::default(),
            proposer: ProposerChoice::Heuristic,
            stateless_conversation: false,
            seed: 0,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), CampaignError> {
        let fail = |reason: &str| Err(CampaignError::InvalidConfig(reason.to_string()));
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return fail("n_qubits must be in 1..=20");
        }
        if self.blocks == 0 {
            return fail("blocks must be at least 1");
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1");
        }
        self.train.validate().map_err(|e| match e {
            TrainError::InvalidConfig(reason) => CampaignError::InvalidConfig(reason),
            other => CampaignError::InvalidConfig(other.to_string()),
        })
    }
}

/// How the reply of one iteration fared against the proposal grammar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ParseOutcome {
    Parsed,
    RetriedThenParsed { first_error: String },
    /// Both attempts failed; the iteration trained the fallback spec.
    Failed {
        first_error: String,
        second_error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// The spec actually trained (the fallback one when parsing failed).
    pub spec: AnsatzSpec,
    /// Prompt texts sent this iteration: the feedback (or task) prompt,
    /// plus the corrective prompt when a retry happened.
    pub prompts: Vec<String>,
    pub replies: Vec<String>,
    pub parse_outcome: ParseOutcome,
    pub feedback: FeedbackRecord,
    pub kl_mean: f64,
    pub kl_min: f64,
    pub kl_max: f64,
    /// Master seed handed to train_repeats, recorded for replay.
    pub train_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSoFar {
    pub iteration: usize,
    pub spec: AnsatzSpec,
    pub final_kl: f64,
    pub parameter_count: usize,
    pub depth: usize,
}

impl BestSoFar {
    fn key(&self) -> (f64, usize, usize) {
        (self.final_kl, self.parameter_count, self.depth)
    }

    fn better_than(&self, other: &BestSoFar) -> bool {
        let (ka, pa, da) = self.key();
        let (kb, pb, db) = other.key();
        (ka.total_cmp(&kb).then(pa.cmp(&pb)).then(da.cmp(&db))).is_lt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignLog {
    pub iterations: Vec<IterationRecord>,
    pub best: Option<BestSoFar>,
}

impl CampaignLog {
    /// Appends a record, updating best-so-far under the lexicographic
    /// (final KL, parameter count, depth) order. Ties keep the earlier
    /// iteration.
    fn absorb(&mut self, record: IterationRecord) {
        let candidate = BestSoFar {
            iteration: record.iteration,
            spec: record.spec.clone(),
            final_kl: *record
                .feedback
                .entropy_values
                .last()
                .expect("series has at least one epoch"),
            parameter_count: record.feedback.ansatz_parameter_count,
            depth: record.feedback.ansatz_depth,
        };
        match &self.best {
            Some(best) if !candidate.better_than(best) => {}
            _ => self.best = Some(candidate),
        }
        self.iterations.push(record);
    }

    /// Rebuilds a log (including best-so-far) from persisted records.
    pub fn from_records(records: Vec<IterationRecord>) -> Self {
        let mut log = Self {
            iterations: Vec::new(),
            best: None,
        };
        for record in records {
            log.absorb(record);
        }
        log
    }
}

/// True when the best final KL improved by less than 1% over the last
/// three iterations. `history` holds the best-so-far KL after each
/// iteration in order.
fn plateaued(history: &[f64]) -> bool {
    if history.len() <= PLATEAU_WINDOW {
        return false;
    }
    let now = history[history.len() - 1];
    let then = history[history.len() - 1 - PLATEAU_WINDOW];
    if then <= 0.0 {
        return true;
    }
    (then - now) / then < PLATEAU_THRESHOLD
}

/// Default spec when the very first iteration fails to parse twice: the
/// same alternating pattern the heuristic starts from.
fn fallback_spec(blocks: usize) -> AnsatzSpec {
    let tags: Vec<u8> = (0..blocks.max(1))
        .map(|i| if i % 2 == 0 { 2 } else { 4 })
        .collect();
    AnsatzSpec::from_tags(&tags).expect("alternating tags are valid")
}

/// Builds the proposer the config names.
pub fn make_proposer(cfg: &CampaignConfig) -> Result<Box<dyn Proposer>, CampaignError> {
    match &cfg.proposer {
        ProposerChoice::Heuristic => Ok(Box::new(HeuristicProposer::new(cfg.seed))),
        ProposerChoice::Llm(llm_cfg) => Ok(Box::new(
            RemoteLlm::new(llm_cfg.clone())
                .map_err(|e| CampaignError::InvalidConfig(e.to_string()))?,
        )),
    }
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignLog, CampaignError> {
    let mut proposer = make_proposer(cfg)?;
    run_campaign_with(cfg, proposer.as_mut(), &mut |_| {})
}

/// Campaign loop with an injected proposer and a per-iteration observer
/// (used by the CLI to persist records as they complete).
pub fn run_campaign_with(
    cfg: &CampaignConfig,
    proposer: &mut dyn Proposer,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<CampaignLog, CampaignError> {
    run_campaign_from(cfg, proposer, Vec::new(), observer)
}

/// Continues a campaign whose first iterations already ran. The dialogue
/// and the best-so-far state are rebuilt from the prior records, so a
/// resumed campaign is indistinguishable from an uninterrupted one.
pub fn run_campaign_from(
    cfg: &CampaignConfig,
    proposer: &mut dyn Proposer,
    prior: Vec<IterationRecord>,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<CampaignLog, CampaignError> {
    cfg.validate()?;
    let target = discretize_target(&cfg.target, cfg.n_qubits)?;
    let templates = PromptTemplates::builtin();
    let task_prompt = render_task_prompt(&templates, cfg.n_qubits, cfg.blocks);

    let mut conversation = vec![Message::user(task_prompt)];
    let mut best_history: Vec<f64> = Vec::new();
    let mut log = CampaignLog {
        iterations: Vec::new(),
        best: None,
    };
    for record in prior {
        for (reply, prompt) in record.replies.iter().zip(record.prompts.iter().skip(1)) {
            conversation.push(Message::assistant(reply.clone()));
            conversation.push(Message::user(prompt.clone()));
        }
        conversation.push(Message::assistant(record.replies.last().unwrap().clone()));
        conversation.push(Message::user(render_feedback_prompt(
            &templates,
            &record.feedback,
        )));
        log.absorb(record);
        best_history.push(log.best.as_ref().unwrap().final_kl);
    }
    let first_iteration = log.iterations.len();
    if plateaued(&best_history) {
        return Ok(log);
    }

    for iteration in first_iteration..cfg.max_iterations {
        // The prompt driving this iteration is the newest user message
        // (task prompt first, feedback afterwards).
        let mut prompts = vec![conversation.last().unwrap().content.clone()];
        let mut replies = Vec::new();

        let view: Vec<Message> = if cfg.stateless_conversation && conversation.len() > 2 {
            vec![
                conversation[0].clone(),
                conversation.last().unwrap().clone(),
            ]
        } else {
            conversation.clone()
        };
        let reply = match proposer.propose(&view) {
            Ok(reply) => reply,
            Err(e) => {
                return Err(CampaignError::ProposerUnavailable {
                    detail: e.to_string(),
                    log: Box::new(log),
                })
            }
        };
        replies.push(reply.clone());
        conversation.push(Message::assistant(reply.clone()));

        let (spec, parse_outcome) = match parse_proposal(&reply) {
            Ok(spec) => (spec, ParseOutcome::Parsed),
            Err(first_error) => {
                let corrective = format!(
                    "Your previous reply could not be parsed: {first_error}. \
                     Please reply again, following the required output format exactly."
                );
                prompts.push(corrective.clone());
                conversation.push(Message::user(corrective));
                let view: Vec<Message> = if cfg.stateless_conversation && conversation.len() > 2 {
                    vec![
                        conversation[0].clone(),
                        conversation.last().unwrap().clone(),
                    ]
                } else {
                    conversation.clone()
                };
                let retry = match proposer.propose(&view) {
                    Ok(reply) => reply,
                    Err(e) => {
                        return Err(CampaignError::ProposerUnavailable {
                            detail: e.to_string(),
                            log: Box::new(log),
                        })
                    }
                };
                replies.push(retry.clone());
                conversation.push(Message::assistant(retry.clone()));
                match parse_proposal(&retry) {
                    Ok(spec) => (
                        spec,
                        ParseOutcome::RetriedThenParsed {
                            first_error: first_error.to_string(),
                        },
                    ),
                    Err(second_error) => {
                        let fallback = log
                            .best
                            .as_ref()
                            .map(|b| b.spec.clone())
                            .unwrap_or_else(|| fallback_spec(cfg.blocks));
                        (
                            fallback,
                            ParseOutcome::Failed {
                                first_error: first_error.to_string(),
                                second_error: second_error.to_string(),
                            },
                        )
                    }
                }
            }
        };

        let circuit = build_circuit(&spec, cfg.n_qubits)?;
        let train_seed = mix_seed(mix_seed(cfg.seed, STREAM_ITERATION), iteration as u64);
        let summary = train_repeats(&circuit, &target, &cfg.train, train_seed)?;
        let median = summary.median_trace();
        let feedback = FeedbackRecord {
            iteration,
            discriminator_loss_values: median.disc_loss.clone(),
            generator_loss_values: median.gen_loss.clone(),
            entropy_values: median.kl.clone(),
            ks_values: median.ks.clone(),
            ansatz_parameter_count: circuit.param_count(),
            ansatz_depth: circuit.depth(),
        };

        conversation.push(Message::user(render_feedback_prompt(&templates, &feedback)));

        let record = IterationRecord {
            iteration,
            spec,
            prompts,
            replies,
            parse_outcome,
            feedback,
            kl_mean: summary.kl_mean,
            kl_min: summary.kl_min,
            kl_max: summary.kl_max,
            train_seed,
        };
        observer(&record);
        log.absorb(record);
        best_history.push(log.best.as_ref().unwrap().final_kl);

        if plateaued(&best_history) {
            break;
        }
    }
    Ok(log)
}
