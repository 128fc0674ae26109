//! Ansatz-block DSL: the five candidate blocks a proposer can pick from,
//! expansion of a block list into a [`Circuit`], entanglement-pair
//! enumeration for the six TwoLocal strategies, and the reply grammar
//! (`improved_ansatz_list = [...]` plus `twolocal_config = {...}` lines).

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::sim::{Circuit, Gate, SimError};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AnsatzError {
    #[error("reply contains no `improved_ansatz_list = [...]`")]
    NoAnsatzList,
    #[error("ansatz number {0} outside 1..=5")]
    InvalidBlockIndex(i64),
    #[error("TwoLocal block at position {0} has no twolocal_config")]
    MissingTwoLocalConfig(usize),
    #[error("malformed twolocal_config: {0}")]
    MalformedTwoLocalConfig(String),
    #[error(transparent)]
    Circuit(#[from] SimError),
}

/// Single-qubit rotation gates a TwoLocal layer may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationGate {
    #[serde(rename = "RX")]
    Rx,
    #[serde(rename = "RY")]
    Ry,
    #[serde(rename = "RZ")]
    Rz,
}

impl RotationGate {
    pub fn name(self) -> &'static str {
        match self {
            RotationGate::Rx => "RX",
            RotationGate::Ry => "RY",
            RotationGate::Rz => "RZ",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "RX" => Some(RotationGate::Rx),
            "RY" => Some(RotationGate::Ry),
            "RZ" => Some(RotationGate::Rz),
            _ => None,
        }
    }

    fn gate(self, qubit: usize, slot: usize) -> Gate {
        match self {
            RotationGate::Rx => Gate::Rx { qubit, slot },
            RotationGate::Ry => Gate::Ry { qubit, slot },
            RotationGate::Rz => Gate::Rz { qubit, slot },
        }
    }
}

/// Qubit connectivity rule for a TwoLocal entangling layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntanglementStrategy {
    Full,
    Linear,
    ReverseLinear,
    Pairwise,
    Circular,
    Sca,
}

impl EntanglementStrategy {
    pub const ALL: [EntanglementStrategy; 6] = [
        EntanglementStrategy::Full,
        EntanglementStrategy::Linear,
        EntanglementStrategy::ReverseLinear,
        EntanglementStrategy::Pairwise,
        EntanglementStrategy::Circular,
        EntanglementStrategy::Sca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntanglementStrategy::Full => "full",
            EntanglementStrategy::Linear => "linear",
            EntanglementStrategy::ReverseLinear => "reverse_linear",
            EntanglementStrategy::Pairwise => "pairwise",
            EntanglementStrategy::Circular => "circular",
            EntanglementStrategy::Sca => "sca",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        let lower = name.to_ascii_lowercase();
        Self::ALL.into_iter().find(|s| s.name() == lower)
    }
}

/// Rotation layers and connectivity for one TwoLocal block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoLocalConfig {
    pub rotations: Vec<RotationGate>,
    pub entanglement: EntanglementStrategy,
}

impl TwoLocalConfig {
    /// `rotations` must hold 1 to 3 distinct gates.
    pub fn new(
        rotations: Vec<RotationGate>,
        entanglement: EntanglementStrategy,
    ) -> Result<Self, AnsatzError> {
        if rotations.is_empty() || rotations.len() > 3 {
            return Err(AnsatzError::MalformedTwoLocalConfig(format!(
                "rotations must list 1 to 3 gates, got {}",
                rotations.len()
            )));
        }
        for (i, gate) in rotations.iter().enumerate() {
            if rotations[..i].contains(gate) {
                return Err(AnsatzError::MalformedTwoLocalConfig(format!(
                    "duplicate rotation gate {}",
                    gate.name()
                )));
            }
        }
        Ok(Self {
            rotations,
            entanglement,
        })
    }
}

impl Default for TwoLocalConfig {
    /// RY rotations with full connectivity, the conventional TwoLocal
    /// baseline; fills in for replies that pick block 5 without settings.
    fn default() -> Self {
        Self {
            rotations: vec![RotationGate::Ry],
            entanglement: EntanglementStrategy::Full,
        }
    }
}

/// The five block candidates, numbered 1 to 5 in the proposal grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum BlockKind {
    /// RX layer followed by a linear CZ chain.
    RxCz,
    /// RX and RY layers followed by a CZ chain.
    RxRyCz,
    /// RX, RY and RZ layers followed by a CZ chain.
    RxRyRzCz,
    /// CZ chain with no rotations.
    CzOnly,
    /// Configurable rotation layers plus a configurable entangling layer.
    TwoLocal,
}

impl BlockKind {
    pub fn tag(self) -> u8 {
        match self {
            BlockKind::RxCz => 1,
            BlockKind::RxRyCz => 2,
            BlockKind::RxRyRzCz => 3,
            BlockKind::CzOnly => 4,
            BlockKind::TwoLocal => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(BlockKind::RxCz),
            2 => Some(BlockKind::RxRyCz),
            3 => Some(BlockKind::RxRyRzCz),
            4 => Some(BlockKind::CzOnly),
            5 => Some(BlockKind::TwoLocal),
            _ => None,
        }
    }

    /// Fixed rotation layers for blocks 1-4; block 5 reads its config instead.
    pub fn fixed_rotations(self) -> &'static [RotationGate] {
        match self {
            BlockKind::RxCz => &[RotationGate::Rx],
            BlockKind::RxRyCz => &[RotationGate::Rx, RotationGate::Ry],
            BlockKind::RxRyRzCz => &[RotationGate::Rx, RotationGate::Ry, RotationGate::Rz],
            BlockKind::CzOnly | BlockKind::TwoLocal => &[],
        }
    }
}

impl From<BlockKind> for u8 {
    fn from(kind: BlockKind) -> u8 {
        kind.tag()
    }
}

impl TryFrom<u8> for BlockKind {
    type Error = String;

    fn try_from(tag: u8) -> Result<Self, String> {
        BlockKind::from_tag(tag).ok_or_else(|| format!("ansatz number {tag} outside 1..=5"))
    }
}

/// An ordered block list plus the TwoLocal configuration for every block of
/// kind 5. This is the proposer's decision variable and the unit persisted in
/// campaign logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    blocks: Vec<BlockKind>,
    twolocal_configs: BTreeMap<usize, TwoLocalConfig>,
}

impl AnsatzSpec {
    /// Validates that configs exist exactly for the TwoLocal positions.
    pub fn new(
        blocks: Vec<BlockKind>,
        twolocal_configs: BTreeMap<usize, TwoLocalConfig>,
    ) -> Result<Self, AnsatzError> {
        if blocks.is_empty() {
            return Err(AnsatzError::NoAnsatzList);
        }
        for (position, kind) in blocks.iter().enumerate() {
            let has_config = twolocal_configs.contains_key(&position);
            match kind {
                BlockKind::TwoLocal if !has_config => {
                    return Err(AnsatzError::MissingTwoLocalConfig(position));
                }
                _ => {}
            }
        }
        for position in twolocal_configs.keys() {
            if blocks.get(*position) != Some(&BlockKind::TwoLocal) {
                return Err(AnsatzError::MalformedTwoLocalConfig(format!(
                    "config given for position {position}, which is not a TwoLocal block"
                )));
            }
        }
        Ok(Self {
            blocks,
            twolocal_configs,
        })
    }

    /// Convenience constructor for specs without TwoLocal blocks.
    pub fn from_tags(tags: &[u8]) -> Result<Self, AnsatzError> {
        let blocks = tags
            .iter()
            .map(|&t| BlockKind::from_tag(t).ok_or(AnsatzError::InvalidBlockIndex(t as i64)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(blocks, BTreeMap::new())
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    pub fn config_for(&self, position: usize) -> Option<&TwoLocalConfig> {
        self.twolocal_configs.get(&position)
    }

    /// Block tags as plain integers, e.g. `[2, 4, 2]`.
    pub fn tags(&self) -> Vec<u8> {
        self.blocks.iter().map(|b| b.tag()).collect()
    }

    /// Positions holding a TwoLocal block, in order.
    pub fn twolocal_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.twolocal_configs.keys().copied()
    }
}

/// Ordered (control, target) pairs for one entangling layer.
///
/// `block_index` is the block's 0-based position in the spec; only SCA uses
/// it. Single-qubit registers get an empty layer.
pub fn entanglement_pairs(
    strategy: EntanglementStrategy,
    n_qubits: usize,
    block_index: usize,
) -> Vec<(usize, usize)> {
    if n_qubits < 2 {
        return Vec::new();
    }
    let linear: Vec<(usize, usize)> = (0..n_qubits - 1).map(|i| (i, i + 1)).collect();
    match strategy {
        EntanglementStrategy::Full => {
            let mut pairs = Vec::with_capacity(n_qubits * (n_qubits - 1) / 2);
            for i in 0..n_qubits {
                for j in i + 1..n_qubits {
                    pairs.push((i, j));
                }
            }
            pairs
        }
        EntanglementStrategy::Linear => linear,
        EntanglementStrategy::ReverseLinear => linear.into_iter().rev().collect(),
        EntanglementStrategy::Pairwise => {
            let mut pairs = Vec::with_capacity(n_qubits - 1);
            pairs.extend((0..n_qubits - 1).step_by(2).map(|i| (i, i + 1)));
            pairs.extend((1..n_qubits - 1).step_by(2).map(|i| (i, i + 1)));
            pairs
        }
        EntanglementStrategy::Circular => {
            let mut pairs = vec![(n_qubits - 1, 0)];
            pairs.extend(linear);
            pairs
        }
        EntanglementStrategy::Sca => {
            // Circular connectivity whose wrap position shifts by one per
            // block, with control/target roles alternating on odd blocks.
            let mut pairs = entanglement_pairs(EntanglementStrategy::Circular, n_qubits, 0);
            let shift = block_index % pairs.len();
            pairs.rotate_left(shift);
            if block_index % 2 == 1 {
                for pair in &mut pairs {
                    *pair = (pair.1, pair.0);
                }
            }
            pairs
        }
    }
}

/// Expands a spec into a flat circuit: block sub-circuits concatenated in
/// order, each as full rotation layers (one per gate type) followed by its
/// entangling layer, with parameter slots numbered left to right.
pub fn build_circuit(spec: &AnsatzSpec, n_qubits: usize) -> Result<Circuit, AnsatzError> {
    let mut gates = Vec::new();
    let mut slot = 0;
    for (position, kind) in spec.blocks().iter().enumerate() {
        let (rotations, pairs): (&[RotationGate], Vec<(usize, usize)>) = match kind {
            BlockKind::TwoLocal => {
                let config = spec
                    .config_for(position)
                    .ok_or(AnsatzError::MissingTwoLocalConfig(position))?;
                (
                    &config.rotations,
                    entanglement_pairs(config.entanglement, n_qubits, position),
                )
            }
            fixed => (
                fixed.fixed_rotations(),
                entanglement_pairs(EntanglementStrategy::Linear, n_qubits, position),
            ),
        };
        for rotation in rotations {
            for qubit in 0..n_qubits {
                gates.push(rotation.gate(qubit, slot));
                slot += 1;
            }
        }
        gates.extend(
            pairs
                .into_iter()
                .map(|(control, target)| Gate::Cz { control, target }),
        );
    }
    Ok(Circuit::new(n_qubits, gates)?)
}

static LIST_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"improved_ansatz_list\s*=\s*\[\s*(-?\d+(?:\s*,\s*-?\d+)*)?\s*\]").unwrap()
});
static CONFIG_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"twolocal_config\s*=\s*(\{[^{}\n]*\})").unwrap());

#[derive(Deserialize)]
struct RawTwoLocalConfig {
    block: usize,
    rotations: Vec<String>,
    entanglement: String,
}

/// Extracts an [`AnsatzSpec`] from a free-form proposer reply.
///
/// The first `improved_ansatz_list = [...]` occurrence wins; whitespace and
/// surrounding code fences are irrelevant. Every block value 5 must be
/// followed (later in the text) by a `twolocal_config = {"block": i, ...}`
/// line giving that block's 0-based position.
pub fn parse_proposal(text: &str) -> Result<AnsatzSpec, AnsatzError> {
    let found = LIST_RE.captures(text).ok_or(AnsatzError::NoAnsatzList)?;
    let list = found.get(1).map(|m| m.as_str()).unwrap_or("");
    if list.is_empty() {
        return Err(AnsatzError::NoAnsatzList);
    }
    let mut blocks = Vec::new();
    for token in list.split(',') {
        let value: i64 = token
            .trim()
            .parse()
            .map_err(|_| AnsatzError::InvalidBlockIndex(i64::MAX))?;
        let kind = u8::try_from(value)
            .ok()
            .and_then(BlockKind::from_tag)
            .ok_or(AnsatzError::InvalidBlockIndex(value))?;
        blocks.push(kind);
    }

    let tail = &text[found.get(0).unwrap().end()..];
    let mut configs: BTreeMap<usize, TwoLocalConfig> = BTreeMap::new();
    for capture in CONFIG_RE.captures_iter(tail) {
        let json = capture.get(1).unwrap().as_str();
        let raw: RawTwoLocalConfig = serde_json::from_str(json)
            .map_err(|e| AnsatzError::MalformedTwoLocalConfig(e.to_string()))?;
        // Configs pointing at non-TwoLocal or out-of-range positions are
        // ignored; the reply may discuss hypotheticals.
        if blocks.get(raw.block) != Some(&BlockKind::TwoLocal) {
            continue;
        }
        if configs.contains_key(&raw.block) {
            continue; // first config per block wins
        }
        let rotations = raw
            .rotations
            .iter()
            .map(|name| {
                RotationGate::from_name(name).ok_or_else(|| {
                    AnsatzError::MalformedTwoLocalConfig(format!("unknown rotation gate {name:?}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let entanglement = EntanglementStrategy::from_name(&raw.entanglement).ok_or_else(|| {
            AnsatzError::MalformedTwoLocalConfig(format!(
                "unknown entanglement strategy {:?}",
                raw.entanglement
            ))
        })?;
        configs.insert(raw.block, TwoLocalConfig::new(rotations, entanglement)?);
    }

    // A 5 without settings takes the default config: the task prompt's own
    // example reply is a bare list, so absence cannot be a parse error.
    for (position, kind) in blocks.iter().enumerate() {
        if *kind == BlockKind::TwoLocal {
            configs.entry(position).or_default();
        }
    }
    AnsatzSpec::new(blocks, configs)
}

/// Renders a spec in the reply grammar; `parse_proposal` inverts this.
pub fn render_proposal(spec: &AnsatzSpec) -> String {
    let tags: Vec<String> = spec.tags().iter().map(|t| t.to_string()).collect();
    let mut out = format!("improved_ansatz_list = [{}]", tags.join(", "));
    for (position, kind) in spec.blocks().iter().enumerate() {
        if *kind != BlockKind::TwoLocal {
            continue;
        }
        let config = spec.config_for(position).expect("validated spec");
        let rotations: Vec<String> = config
            .rotations
            .iter()
            .map(|r| format!("{:?}", r.name()))
            .collect();
        out.push_str(&format!(
            "\ntwolocal_config = {{\"block\": {}, \"rotations\": [{}], \"entanglement\": \"{}\"}}",
            position,
            rotations.join(", "),
            config.entanglement.name()
        ));
    }
    out
}
