//! Proposal sources for the search loop: a network-backed chat-completions
//! client and a deterministic offline heuristic. Both consume the whole
//! conversation (alternating prompt/reply messages) and return raw reply
//! text; parsing stays in [`crate::ansatz`].

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::LazyLock;
use std::time::Duration;

use crate::ansatz::{
    parse_proposal, render_proposal, AnsatzSpec, BlockKind, EntanglementStrategy, RotationGate,
    TwoLocalConfig,
};
use crate::train::mix_seed;

#[derive(Debug, thiserror::Error)]
pub enum ProposerError {
    #[error("proposer unavailable: {0}")]
    Unavailable(String),
    #[error("malformed proposer response: {0}")]
    MalformedResponse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

/// One turn of the search dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

pub trait Proposer {
    fn propose(&mut self, conversation: &[Message]) -> Result<String, ProposerError>;
}

static QUBITS_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Number of qubits: (\d+)").unwrap());
static BLOCKS_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Default number of circuit blocks: (\d+)").unwrap());
static ENTROPY_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"entropy_values: \[([^\]]*)\]").unwrap());
static PARAMS_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"ansatz parameter: (\d+)").unwrap());

fn capture_usize(re: &Regex, text: &str) -> Option<usize> {
    re.captures(text)?[1].parse().ok()
}

/// Offline stand-in for the LLM: a pure function of (conversation, seed)
/// that always emits grammar-valid proposals.
///
/// Policy: the first call proposes blocks alternating [2, 4, ...]. On
/// feedback, if the final KL worsened against the previous feedback, one
/// randomly chosen block is replaced; otherwise the proposal is kept,
/// except that the highest-parameter block is downgraded to the bare
/// entangling block when the parameter count exceeds 2 * qubits * blocks.
#[derive(Debug, Clone)]
pub struct HeuristicProposer {
    seed: u64,
}

impl HeuristicProposer {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn first_proposal(block_count: usize) -> AnsatzSpec {
        let tags: Vec<u8> = (0..block_count)
            .map(|i| if i % 2 == 0 { 2 } else { 4 })
            .collect();
        AnsatzSpec::from_tags(&tags).expect("alternating tags are valid")
    }

    /// Final KL of each feedback prompt in order.
    fn final_entropies(conversation: &[Message]) -> Vec<f64> {
        conversation
            .iter()
            .filter(|m| m.role == Role::User)
            .filter_map(|m| {
                let series = ENTROPY_RE.captures(&m.content)?[1].to_string();
                series
                    .rsplit(',')
                    .next()?
                    .trim()
                    .parse::<f64>()
                    .ok()
            })
            .collect()
    }

    /// The spec this proposer last emitted, recovered from the newest
    /// parseable assistant message.
    fn current_spec(conversation: &[Message]) -> Option<AnsatzSpec> {
        conversation
            .iter()
            .rev()
            .filter(|m| m.role == Role::Assistant)
            .find_map(|m| parse_proposal(&m.content).ok())
    }

    fn random_twolocal(rng: &mut ChaCha8Rng) -> TwoLocalConfig {
        let mut rotations = vec![RotationGate::Rx, RotationGate::Ry, RotationGate::Rz];
        rotations.shuffle(rng);
        rotations.truncate(rng.gen_range(1..=3));
        let entanglement = *EntanglementStrategy::ALL.choose(rng).unwrap();
        TwoLocalConfig::new(rotations, entanglement).expect("distinct rotations")
    }

    fn mutate_one_block(spec: &AnsatzSpec, rng: &mut ChaCha8Rng) -> AnsatzSpec {
        let position = rng.gen_range(0..spec.blocks().len());
        let old_tag = spec.blocks()[position].tag();
        let replacement = loop {
            let tag = rng.gen_range(1..=5u8);
            if tag != old_tag {
                break BlockKind::from_tag(tag).unwrap();
            }
        };
        let mut blocks: Vec<BlockKind> = spec.blocks().to_vec();
        blocks[position] = replacement;
        let mut configs: BTreeMap<usize, TwoLocalConfig> = spec
            .twolocal_positions()
            .filter(|&p| p != position)
            .map(|p| (p, spec.config_for(p).unwrap().clone()))
            .collect();
        if replacement == BlockKind::TwoLocal {
            configs.insert(position, Self::random_twolocal(rng));
        }
        AnsatzSpec::new(blocks, configs).expect("mutation preserves validity")
    }

    /// Swaps the widest rotation block for the parameter-free one.
    fn shed_parameters(spec: &AnsatzSpec) -> AnsatzSpec {
        let rotations_at = |position: usize| match spec.blocks()[position] {
            BlockKind::TwoLocal => spec.config_for(position).unwrap().rotations.len(),
            kind => kind.fixed_rotations().len(),
        };
        // First position with the most rotation layers.
        let mut position = 0;
        for p in 1..spec.blocks().len() {
            if rotations_at(p) > rotations_at(position) {
                position = p;
            }
        }
        if rotations_at(position) == 0 {
            return spec.clone();
        }
        let mut blocks: Vec<BlockKind> = spec.blocks().to_vec();
        blocks[position] = BlockKind::CzOnly;
        let configs = spec
            .twolocal_positions()
            .filter(|&p| p != position)
            .map(|p| (p, spec.config_for(p).unwrap().clone()))
            .collect();
        AnsatzSpec::new(blocks, configs).expect("downgrade preserves validity")
    }
}

impl Proposer for HeuristicProposer {
    fn propose(&mut self, conversation: &[Message]) -> Result<String, ProposerError> {
        let task = conversation.first().map(|m| m.content.as_str()).unwrap_or("");
        let n_qubits = capture_usize(&QUBITS_RE, task).unwrap_or(3);
        let block_count = capture_usize(&BLOCKS_RE, task).unwrap_or(4);
        let mut rng =
            ChaCha8Rng::seed_from_u64(mix_seed(self.seed, conversation.len() as u64));

        let Some(spec) = Self::current_spec(conversation) else {
            return Ok(render_proposal(&Self::first_proposal(block_count)));
        };
        let entropies = Self::final_entropies(conversation);
        let worsened = entropies
            .len()
            .checked_sub(2)
            .map(|k| entropies[k + 1] > entropies[k])
            .unwrap_or(false);
        let next = if worsened {
            Self::mutate_one_block(&spec, &mut rng)
        } else {
            let last_feedback = conversation
                .iter()
                .rev()
                .find(|m| m.role == Role::User)
                .map(|m| m.content.as_str())
                .unwrap_or("");
            let params = capture_usize(&PARAMS_RE, last_feedback).unwrap_or(0);
            if params > 2 * n_qubits * block_count {
                Self::shed_parameters(&spec)
            } else {
                spec
            }
        };
        Ok(render_proposal(&next))
    }
}

/// Chat-completions client: POSTs the conversation as JSON, returns the
/// first choice's message text. Retries transport failures and 429/5xx
/// responses with doubling backoff.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteLlmConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token; the
    /// header is omitted when the variable is unset.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
}

impl Default for RemoteLlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".to_string(),
            model: "default".to_string(),
            api_key_env: "QAS_API_KEY".to_string(),
            timeout_secs: 60,
            max_retries: 3,
            initial_backoff_ms: 500,
        }
    }
}

pub struct RemoteLlm {
    config: RemoteLlmConfig,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl RemoteLlm {
    pub fn new(config: RemoteLlmConfig) -> Result<Self, ProposerError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ProposerError::Unavailable(e.to_string()))?;
        Ok(Self { config, client })
    }

    fn attempt(&self, conversation: &[Message]) -> Result<String, ProposerError> {
        let mut request = self.client.post(&self.config.endpoint).json(&ChatRequest {
            model: &self.config.model,
            messages: conversation,
        });
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| ProposerError::Unavailable(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(ProposerError::Unavailable(format!("status {status}")));
        }
        if !status.is_success() {
            // Client errors are config mistakes; retrying cannot help.
            return Err(ProposerError::MalformedResponse(format!(
                "status {status}"
            )));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| ProposerError::MalformedResponse(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ProposerError::MalformedResponse("empty choices".to_string()))
    }
}

impl Proposer for RemoteLlm {
    fn propose(&mut self, conversation: &[Message]) -> Result<String, ProposerError> {
        let mut backoff = Duration::from_millis(self.config.initial_backoff_ms);
        let mut last = None;
        for attempt in 0..=self.config.max_retries {
            match self.attempt(conversation) {
                Ok(reply) => return Ok(reply),
                Err(e @ ProposerError::MalformedResponse(_)) => return Err(e),
                Err(e) => last = Some(e),
            }
            if attempt < self.config.max_retries {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(last.unwrap_or_else(|| ProposerError::Unavailable("no attempts".to_string())))
    }
}
