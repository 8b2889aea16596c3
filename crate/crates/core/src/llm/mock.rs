use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::{BackendError, ChatBackend, ChatRequest, ModelRole, Role};
use crate::reference::MOTIVATION_CATEGORIES;

#[derive(Debug, Clone, PartialEq)]
pub enum ScriptStep {
    Reply(String),
    Fail(BackendError),
}

/// Replays scripted replies per role, in order, and records every request.
#[derive(Default)]
pub struct ScriptedBackend {
    queues: Mutex<HashMap<Role, VecDeque<ScriptStep>>>,
    requests: Mutex<Vec<(Role, ChatRequest)>>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, role: Role, step: ScriptStep) -> &Self {
        self.queues.lock().unwrap().entry(role).or_default().push_back(step);
        self
    }

    pub fn reply(&self, role: Role, json: Value) -> &Self {
        self.push(role, ScriptStep::Reply(json.to_string()))
    }

    pub fn calls(&self) -> usize {
        self.requests.lock().unwrap().len()
    }

    pub fn calls_for(&self, role: Role) -> usize {
        self.requests.lock().unwrap().iter().filter(|(r, _)| *r == role).count()
    }

    pub fn requests(&self) -> Vec<(Role, ChatRequest)> {
        self.requests.lock().unwrap().clone()
    }

    /// Scripted steps not yet consumed.
    pub fn remaining(&self) -> usize {
        self.queues.lock().unwrap().values().map(VecDeque::len).sum()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, role: &ModelRole, request: &ChatRequest) -> Result<String, BackendError> {
        self.requests.lock().unwrap().push((role.role, request.clone()));
        let step = self.queues.lock().unwrap().get_mut(&role.role).and_then(VecDeque::pop_front);
        match step {
            Some(ScriptStep::Reply(s)) => Ok(s),
            Some(ScriptStep::Fail(e)) => Err(e),
            None => Err(BackendError::Protocol(format!("no scripted reply left for {}", role.role))),
        }
    }
}

const MOTIVATIONS: [&str; 8] = [
    "Improve readability",
    "Remove duplicated code",
    "Isolate a reusable behaviour",
    "Clarify responsibilities between classes",
    "Prepare the code for a new feature",
    "Simplify a long method",
    "Improve testability",
    "Align names with the domain vocabulary",
];

/// Offline stand-in for a model server: answers any schema-constrained
/// request with a valid, deterministic reply derived from a hash of the
/// prompt. Validators and coders share the prompt hash most of the time, so
/// they usually agree.
#[derive(Default)]
pub struct SyntheticBackend {
    calls: AtomicUsize,
}

impl SyntheticBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

fn digest(parts: &[&str]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().into()
}

fn weighted<'a>(byte: u8, options: &[(&'a str, u32)]) -> &'a str {
    let total: u32 = options.iter().map(|(_, w)| w).sum();
    let mut x = u32::from(byte) * total / 256;
    for (o, w) in options {
        if x < *w {
            return o;
        }
        x -= w;
    }
    options[options.len() - 1].0
}

impl ChatBackend for SyntheticBackend {
    fn complete(&self, role: &ModelRole, request: &ChatRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let schema = request
            .response_format
            .pointer("/json_schema/schema")
            .ok_or_else(|| BackendError::Protocol("request carries no JSON schema".into()))?;
        let prompt = request.messages.iter().find(|m| m.role == "user").map_or("", |m| m.content.as_str());
        let shared = digest(&[prompt]);
        let own = digest(&[&role.model_name, prompt]);
        // roughly one in four answers departs from the shared view
        let h = if own[31] < 64 { own } else { shared };
        let required = schema.get("required").and_then(Value::as_array).cloned().unwrap_or_default();
        let props = schema.get("properties").cloned().unwrap_or(Value::Null);
        let mut out = Map::new();
        for (i, name) in required.iter().filter_map(Value::as_str).enumerate() {
            let b = h[i % 31];
            let value = match name {
                "verdict" => weighted(b, &[("agree", 85), ("disagree", 15)]).to_string(),
                "label" => weighted(b, &[("yes", 105), ("no", 49), ("extends", 44)]).to_string(),
                "category" => {
                    let opts: Vec<(&str, u32)> =
                        MOTIVATION_CATEGORIES.iter().map(|c| (c.name, c.occurrences)).collect();
                    weighted(b, &opts).to_string()
                }
                "motivation" => MOTIVATIONS[usize::from(b) % MOTIVATIONS.len()].to_string(),
                "description" => format!("The change is best explained as: {}.", MOTIVATIONS[usize::from(h[30]) % 8]),
                "reasoning" => "Let's think step by step. The diff and the commit message point to this answer.".into(),
                other => match props.pointer(&format!("/{other}/enum")).and_then(Value::as_array) {
                    Some(vals) if !vals.is_empty() => {
                        vals[usize::from(b) % vals.len()].as_str().unwrap_or_default().to_string()
                    }
                    _ => format!("synthetic {other}"),
                },
            };
            out.insert(name.to_string(), Value::String(value));
        }
        Ok(Value::Object(out).to_string())
    }
}
