//! Four-role LLM consensus protocol: motivation extraction (LRM, checked by
//! V1 and V2, arbitrated by V3), alignment against reported motivations,
//! open coding into categories, and export of cases for human review.

mod client;
mod export;
mod mock;
mod prompt;
mod protocol;
mod transcript;

use serde::{Deserialize, Serialize};

use crate::refactoring::RefactoringInstance;

pub use client::{completions_url, BackendError, ChatBackend, ChatMessage, ChatRequest, HttpBackend};
pub use export::{export_validation_batch, read_validation_batch, ValidationCase};
pub use mock::{ScriptStep, ScriptedBackend, SyntheticBackend};
pub use prompt::{
    build_prompt, render_prompt, Budget, FieldKind, OutputSchema, Prompt, Task, Template, Templates,
    RESPONSE_RESERVE_TOKENS, TRUNCATION_MARKER,
};
pub use protocol::{Orchestrator, OrchestratorConfig};
pub use transcript::{TranscriptEntry, TranscriptStore};

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("{role} endpoint unreachable after {attempts} attempt(s): {message}")]
    EndpointUnreachable { role: Role, attempts: u32, message: String },
    #[error("{role} returned malformed output after a reprompt: {message}")]
    MalformedModelOutput { role: Role, message: String },
    #[error("prompt needs {needed} tokens without the diff but only {available} are available")]
    BudgetExceeded { needed: usize, available: usize },
    #[error("template: {0}")]
    Template(String),
    #[error("role configuration: {0}")]
    Roles(String),
    #[error("case {0} has no ground truth")]
    MissingGroundTruth(String),
    #[error("asked for {requested} records but only {available} exist")]
    InsufficientRecords { requested: usize, available: usize },
    #[error("no records to process")]
    EmptyInput,
    #[error("transcript: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "LRM")]
    Lrm,
    V1,
    V2,
    V3,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Lrm, Role::V1, Role::V2, Role::V3];

    pub fn name(self) -> &'static str {
        match self {
            Role::Lrm => "LRM",
            Role::V1 => "V1",
            Role::V2 => "V2",
            Role::V3 => "V3",
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_temperature() -> f64 {
    0.8
}
fn default_timeout() -> u64 {
    120
}
fn default_retries() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRole {
    pub role: Role,
    /// Base URL; requests go to `{endpoint}/v1/chat/completions`.
    pub endpoint: String,
    pub model_name: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    pub context_limit: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

/// Exactly one model configuration per role.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleSet([ModelRole; 4]);

impl RoleSet {
    pub fn new(roles: Vec<ModelRole>) -> Result<Self, LlmError> {
        let mut slots: [Option<ModelRole>; 4] = Default::default();
        for r in roles {
            if r.context_limit == 0 {
                return Err(LlmError::Roles(format!("{} context_limit must be positive", r.role)));
            }
            if !(0.0..=2.0).contains(&r.temperature) {
                return Err(LlmError::Roles(format!("{} temperature {} out of range", r.role, r.temperature)));
            }
            let i = r.role as usize;
            if slots[i].is_some() {
                return Err(LlmError::Roles(format!("{} configured twice", r.role)));
            }
            slots[i] = Some(r);
        }
        let missing: Vec<&str> = Role::ALL.iter().filter(|r| slots[**r as usize].is_none()).map(|r| r.name()).collect();
        if !missing.is_empty() {
            return Err(LlmError::Roles(format!("missing role(s): {}", missing.join(", "))));
        }
        Ok(Self(slots.map(Option::unwrap)))
    }

    /// Local OpenAI-compatible server hosting the four distilled models.
    pub fn local_defaults(endpoint: &str) -> Self {
        let mk = |role, model: &str, ctx| ModelRole {
            role,
            endpoint: endpoint.to_string(),
            model_name: model.to_string(),
            temperature: default_temperature(),
            context_limit: ctx,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
        };
        Self([
            mk(Role::Lrm, "marco-o1", 4096),
            mk(Role::V1, "mistral-nemo", 4096),
            mk(Role::V2, "deepseek-r1-distill-qwen-14b", 8129),
            mk(Role::V3, "phi-4", 8129),
        ])
    }

    pub fn get(&self, role: Role) -> &ModelRole {
        &self.0[role as usize]
    }

    pub fn all(&self) -> &[ModelRole] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub motivation: String,
    #[serde(default)]
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotivationCase {
    pub instance: RefactoringInstance,
    pub commit_message: String,
    pub code_diff: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

impl MotivationCase {
    pub fn id(&self) -> &str {
        &self.instance.id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Agree,
    Disagree,
}

impl Decision {
    fn parse(s: &str) -> Self {
        if s == "agree" {
            Decision::Agree
        } else {
            Decision::Disagree
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Decision::Agree => "agree",
            Decision::Disagree => "disagree",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LrmOutput {
    pub motivation: String,
    pub description: String,
    pub reasoning: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidatorVerdict {
    pub verdict: Decision,
    pub reasoning: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArbiterVerdict {
    pub verdict: Decision,
    /// Corrected motivation when overriding, else the confirmed one.
    pub motivation: String,
    pub reasoning: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FinalSource {
    #[serde(rename = "LRM")]
    Lrm,
    V3,
}

/// A request and the reply that answered it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub role: Role,
    pub key: String,
    pub request: ChatRequest,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusRecord {
    pub case_id: String,
    pub lrm_output: LrmOutput,
    pub v1_verdict: ValidatorVerdict,
    pub v2_verdict: ValidatorVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v3_verdict: Option<ArbiterVerdict>,
    pub final_source: FinalSource,
    pub final_motivation: String,
    pub raw_transcripts: Vec<Exchange>,
}

impl ConsensusRecord {
    /// Explanation accompanying the final motivation.
    pub fn final_description(&self) -> &str {
        match (&self.final_source, &self.v3_verdict) {
            (FinalSource::V3, Some(v3)) => &v3.reasoning,
            _ => &self.lrm_output.description,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    Yes,
    No,
    Extends,
}

impl Alignment {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" => Some(Alignment::Yes),
            "no" => Some(Alignment::No),
            "extends" => Some(Alignment::Extends),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Alignment::Yes => "yes",
            Alignment::No => "no",
            Alignment::Extends => "extends",
        }
    }

    /// `extends` refines a related motivation, so it counts as related.
    pub fn is_related(self) -> bool {
        self != Alignment::No
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentLabel {
    pub case_id: String,
    pub value: Alignment,
    pub reasoning: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolCategory {
    pub name: String,
    pub description: String,
    pub created_by: String,
}

/// Categories discovered during open coding, in order of creation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryPool {
    pub categories: Vec<PoolCategory>,
}

fn normalize(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl CategoryPool {
    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Case- and whitespace-insensitive lookup.
    pub fn find(&self, name: &str) -> Option<&PoolCategory> {
        let n = normalize(name);
        self.categories.iter().find(|c| normalize(&c.name) == n)
    }

    /// Returns the canonical name, adding the category if it is new.
    pub fn insert(&mut self, name: &str, description: &str, case_id: &str) -> String {
        if let Some(c) = self.find(name) {
            return c.name.clone();
        }
        let name = name.split_whitespace().collect::<Vec<_>>().join(" ");
        self.categories.push(PoolCategory {
            name: name.clone(),
            description: description.trim().to_string(),
            created_by: case_id.to_string(),
        });
        name
    }

    /// Numbered list for prompts.
    pub fn render(&self) -> String {
        if self.categories.is_empty() {
            return "(none yet)".to_string();
        }
        self.categories
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{}. {}: {}", i + 1, c.name, c.description))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// V1 and V2 proposed the same category.
    Shared,
    /// V3 chose V1's proposal.
    V1,
    /// V3 chose V2's proposal.
    V2,
    /// V3 proposed a category of its own.
    Arbiter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingAssignment {
    pub case_id: String,
    pub category: String,
    pub resolution: Resolution,
    pub v1_category: String,
    pub v2_category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v3_category: Option<String>,
    pub reasoning: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenCoding {
    pub assignments: Vec<CodingAssignment>,
    pub pool: CategoryPool,
}
