//! Prompt rendering for the search loop. Templates are plain text with
//! `{key}` placeholders; rendering is literal key replacement, so brace
//! constructs that are not known keys (the `twolocal_config` example, the
//! code excerpts) pass through untouched. Templates ship in
//! `templates/` and can be overridden from a directory at runtime.

use serde::{Deserialize, Serialize};
use std::io;
use std::path::Path;

pub const TASK_TEMPLATE: &str = include_str!("../templates/task_prompt.txt");
pub const FEEDBACK_TEMPLATE: &str = include_str!("../templates/feedback_prompt.txt");

/// Number of ansatz block candidates the proposer chooses from.
pub const CANDIDATE_COUNT: usize = 5;

const DISCRIMINATOR_CODE: &str = r#"class Discriminator(nn.Module):
    def __init__(self):
        super().__init__()
        layers = []
        widths = [1, 256, 128, 64, 32, 16]
        for fan_in, width in zip(widths, widths[1:]):
            layers += [nn.Linear(fan_in, width),
                       nn.LeakyReLU(0.2),
                       nn.BatchNorm1d(width, eps=1e-5, momentum=0.1),
                       nn.Dropout(0.3)]
        layers += [nn.Linear(16, 1), nn.Sigmoid()]
        self.net = nn.Sequential(*layers)

    def forward(self, x):
        return self.net(x)"#;

const LOSS_CODE: &str = r#"def generator_loss(probs, disc_out):
    # non-saturating: -sum_k p_theta(k) * log D(x_k)
    return -(probs * disc_out.clamp(1e-12, 1).log()).sum()

def discriminator_loss(outputs, labels, weights):
    # weighted binary cross entropy over the union of
    # {real samples: label 1, weight 1/N} and
    # {all grid points: label 0, weight p_theta(k)}
    outputs = outputs.clamp(1e-12, 1 - 1e-12)
    return -(weights * (labels * outputs.log()
                        + (1 - labels) * (1 - outputs).log())).sum()"#;

const TRAINING_CODE: &str = r#"for epoch in range(300):
    for real_batch in loader:  # inverse-CDF samples of the target
        # one AMSGRAD step on the discriminator, lr = 1e-4
        d_loss = discriminator_loss(disc(batch), labels, weights)
        # then one AMSGRAD step on the generator angles, lr = 1e-4
        g_loss = generator_loss(p_theta(), disc(grid))
    track(d_loss, g_loss, relative_entropy(p_theta(), target))"#;

const CANDIDATE_DESCRIPTIONS: &str = "\
1: one RX rotation layer on every qubit, then a linear CZ chain.
2: RX and RY rotation layers on every qubit, then a linear CZ chain.
3: RX, RY and RZ rotation layers on every qubit, then a linear CZ chain.
4: a linear CZ chain only (no trainable parameters).
5: TwoLocal, with configurable rotation layers (any of RX, RY, RZ) and a
   configurable CZ entanglement strategy (full, linear, reverse_linear,
   pairwise, circular or sca).";

/// Metric payload of one iteration, substituted into the feedback prompt.
/// `ks_values` is logged but has no placeholder in the template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub iteration: usize,
    pub discriminator_loss_values: Vec<f64>,
    pub generator_loss_values: Vec<f64>,
    pub entropy_values: Vec<f64>,
    pub ks_values: Vec<f64>,
    pub ansatz_parameter_count: usize,
    pub ansatz_depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplates {
    pub task: String,
    pub feedback: String,
}

impl PromptTemplates {
    pub fn builtin() -> Self {
        Self {
            task: TASK_TEMPLATE.to_string(),
            feedback: FEEDBACK_TEMPLATE.to_string(),
        }
    }

    /// Loads `task_prompt.txt` and `feedback_prompt.txt` from a directory.
    pub fn from_dir(dir: &Path) -> io::Result<Self> {
        Ok(Self {
            task: std::fs::read_to_string(dir.join("task_prompt.txt"))?,
            feedback: std::fs::read_to_string(dir.join("feedback_prompt.txt"))?,
        })
    }
}

fn substitute(template: &str, pairs: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (key, value) in pairs {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

/// `[a, b, c]` with shortest round-trip decimals, matching the list syntax
/// the instruction block uses.
pub fn format_series(values: &[f64]) -> String {
    let body: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("[{}]", body.join(", "))
}

pub fn render_task_prompt(
    templates: &PromptTemplates,
    n_qubits: usize,
    block_count: usize,
) -> String {
    substitute(
        &templates.task,
        &[
            ("number_of_qubits", n_qubits.to_string()),
            ("circuit_block_count", block_count.to_string()),
            ("candidate_count", CANDIDATE_COUNT.to_string()),
            ("discriminator_code", DISCRIMINATOR_CODE.to_string()),
            ("loss_code", LOSS_CODE.to_string()),
            ("training_code", TRAINING_CODE.to_string()),
            ("candidate_descriptions", CANDIDATE_DESCRIPTIONS.to_string()),
        ],
    )
}

pub fn render_feedback_prompt(templates: &PromptTemplates, record: &FeedbackRecord) -> String {
    substitute(
        &templates.feedback,
        &[
            (
                "discriminator_loss_values",
                format_series(&record.discriminator_loss_values),
            ),
            (
                "generator_loss_values",
                format_series(&record.generator_loss_values),
            ),
            ("entropy_values", format_series(&record.entropy_values)),
            (
                "parameter_count",
                record.ansatz_parameter_count.to_string(),
            ),
            ("depth", record.ansatz_depth.to_string()),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn pinned_record() -> FeedbackRecord {
        FeedbackRecord {
            iteration: 1,
            discriminator_loss_values: vec![1.25, 1.1875],
            generator_loss_values: vec![0.75, 0.8125],
            entropy_values: vec![0.5, 0.25],
            ks_values: vec![0.125, 0.0625],
            ansatz_parameter_count: 9,
            ansatz_depth: 7,
        }
    }

    fn golden_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
    }

    #[test]
    fn task_prompt_substitutes_all_fields() {
        let text = render_task_prompt(&PromptTemplates::builtin(), 3, 4);
        assert!(text.contains("Number of qubits: 3"));
        assert!(text.contains("Default number of circuit blocks: 4"));
        assert!(text.contains("there are 5 types of ansatz"));
        assert!(text.contains("improved_ansatz_list"));
        assert!(text.contains("Please output the values like this:"));
        assert!(!text.contains('<'), "angle-bracket placeholder left behind");
        assert!(!text.contains('>'));
    }

    #[test]
    fn feedback_prompt_substitutes_all_fields() {
        let text = render_feedback_prompt(&PromptTemplates::builtin(), &pinned_record());
        assert!(text.contains("discriminator_loss_values: [1.25, 1.1875]"));
        assert!(text.contains("generator_loss_values: [0.75, 0.8125]"));
        assert!(text.contains("entropy_values: [0.5, 0.25]"));
        assert!(text.contains("ansatz parameter: 9"));
        assert!(text.contains("ansatz depth : 7"));
        assert!(text.contains("Discrepancy in Loss Values"));
        assert!(text.contains("The number of parameters (9) and the depth (7)"));
    }

    #[test]
    fn no_known_placeholder_survives_rendering() {
        let re = regex::Regex::new(r"\{[a-z_]+\}").unwrap();
        let task = render_task_prompt(&PromptTemplates::builtin(), 2, 3);
        let feedback = render_feedback_prompt(&PromptTemplates::builtin(), &pinned_record());
        assert!(re.find(&task).is_none(), "{:?}", re.find(&task));
        assert!(re.find(&feedback).is_none(), "{:?}", re.find(&feedback));
    }

    #[test]
    fn templates_keep_the_twolocal_example_braces() {
        let text = render_task_prompt(&PromptTemplates::builtin(), 3, 4);
        assert!(text.contains(
            r#"twolocal_config = {"block": 2, "rotations": ["RY"], "entanglement": "circular"}"#
        ));
    }

    #[test]
    fn from_dir_round_trips_the_builtin_templates() {
        let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("templates");
        let loaded = PromptTemplates::from_dir(&dir).unwrap();
        assert_eq!(loaded, PromptTemplates::builtin());
    }

    #[test]
    fn format_series_uses_list_syntax() {
        assert_eq!(format_series(&[]), "[]");
        assert_eq!(format_series(&[0.5]), "[0.5]");
        assert_eq!(format_series(&[1.25, 0.1]), "[1.25, 0.1]");
    }

    #[test]
    fn task_prompt_matches_golden_file() {
        let rendered = render_task_prompt(&PromptTemplates::builtin(), 3, 4);
        let golden = std::fs::read_to_string(golden_dir().join("task_prompt_n3_b4.txt"))
            .expect("golden file present; regenerate with the bless test");
        assert_eq!(rendered, golden);
    }

    #[test]
    fn feedback_prompt_matches_golden_file() {
        let rendered = render_feedback_prompt(&PromptTemplates::builtin(), &pinned_record());
        let golden = std::fs::read_to_string(golden_dir().join("feedback_prompt_iter1.txt"))
            .expect("golden file present; regenerate with the bless test");
        assert_eq!(rendered, golden);
    }

    /// Rewrites the golden files from the current templates. Run explicitly
    /// with `cargo test -p qas-core bless_golden -- --ignored` after an
    /// intentional template change, then review the diff.
    #[test]
    #[ignore]
    fn bless_golden_files() {
        let dir = golden_dir();
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(
            dir.join("task_prompt_n3_b4.txt"),
            render_task_prompt(&PromptTemplates::builtin(), 3, 4),
        )
        .unwrap();
        std::fs::write(
            dir.join("feedback_prompt_iter1.txt"),
            render_feedback_prompt(&PromptTemplates::builtin(), &pinned_record()),
        )
        .unwrap();
    }
}
