use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CategoryPool, LlmError, MotivationCase};

pub const TRUNCATION_MARKER: &str = "[diff truncated]";
pub const RESPONSE_RESERVE_TOKENS: usize = 512;

/// One prompting step of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Extract,
    Validate,
    Arbitrate,
    Align,
    Code,
    CodeArbitrate,
}

impl Task {
    pub const ALL: [Task; 6] =
        [Task::Extract, Task::Validate, Task::Arbitrate, Task::Align, Task::Code, Task::CodeArbitrate];

    pub fn name(self) -> &'static str {
        match self {
            Task::Extract => "extract",
            Task::Validate => "validate",
            Task::Arbitrate => "arbitrate",
            Task::Align => "align",
            Task::Code => "code",
            Task::CodeArbitrate => "code_arbitrate",
        }
    }

    /// Placeholders the user template must contain.
    pub fn required_placeholders(self) -> &'static [&'static str] {
        const CONTEXT: &[&str] = &["refactoring_type", "description", "commit_message", "diff"];
        match self {
            Task::Extract => CONTEXT,
            Task::Validate | Task::Arbitrate => &[
                "refactoring_type",
                "description",
                "commit_message",
                "diff",
                "lrm_motivation",
            ],
            Task::Align => &["motivation", "ground_truth"],
            Task::Code | Task::CodeArbitrate => &["motivation", "pool"],
        }
    }

    pub fn schema(self) -> OutputSchema {
        use FieldKind::*;
        let fields: Vec<(&str, FieldKind)> = match self {
            Task::Extract => vec![("motivation", Text), ("description", Text), ("reasoning", Text)],
            Task::Validate => vec![("verdict", OneOf(&["agree", "disagree"])), ("reasoning", Text)],
            Task::Arbitrate => vec![
                ("verdict", OneOf(&["agree", "disagree"])),
                ("motivation", Text),
                ("reasoning", Text),
            ],
            Task::Align => vec![("label", OneOf(&["yes", "no", "extends"])), ("reasoning", Text)],
            Task::Code | Task::CodeArbitrate => {
                vec![("category", Text), ("description", Text), ("reasoning", Text)]
            }
        };
        OutputSchema {
            name: self.name(),
            fields: fields.into_iter().map(|(n, k)| (n.to_string(), k)).collect(),
        }
    }

    fn defaults(self) -> (&'static str, &'static str) {
        match self {
            Task::Extract => {
                (include_str!("../../templates/extract.system.txt"), include_str!("../../templates/extract.user.txt"))
            }
            Task::Validate => (
                include_str!("../../templates/validate.system.txt"),
                include_str!("../../templates/validate.user.txt"),
            ),
            Task::Arbitrate => (
                include_str!("../../templates/arbitrate.system.txt"),
                include_str!("../../templates/arbitrate.user.txt"),
            ),
            Task::Align => {
                (include_str!("../../templates/align.system.txt"), include_str!("../../templates/align.user.txt"))
            }
            Task::Code => {
                (include_str!("../../templates/code.system.txt"), include_str!("../../templates/code.user.txt"))
            }
            Task::CodeArbitrate => (
                include_str!("../../templates/code_arbitrate.system.txt"),
                include_str!("../../templates/code_arbitrate.user.txt"),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Text,
    OneOf(&'static [&'static str]),
}

/// Expected JSON object: every field required, all strings, nothing extra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSchema {
    pub name: &'static str,
    pub fields: Vec<(String, FieldKind)>,
}

impl OutputSchema {
    /// The `response_format` value of a chat-completions request.
    pub fn response_format(&self) -> Value {
        let properties: serde_json::Map<String, Value> = self
            .fields
            .iter()
            .map(|(name, kind)| {
                let v = match kind {
                    FieldKind::Text => json!({"type": "string"}),
                    FieldKind::OneOf(values) => json!({"type": "string", "enum": values}),
                };
                (name.clone(), v)
            })
            .collect();
        let required: Vec<&str> = self.fields.iter().map(|(n, _)| n.as_str()).collect();
        json!({
            "type": "json_schema",
            "json_schema": {
                "name": self.name,
                "strict": true,
                "schema": {
                    "type": "object",
                    "properties": properties,
                    "required": required,
                    "additionalProperties": false,
                }
            }
        })
    }

    /// Strict parse of a model reply into field values.
    pub fn parse(&self, reply: &str) -> Result<BTreeMap<String, String>, String> {
        let value: Value = serde_json::from_str(reply.trim()).map_err(|e| format!("not JSON: {e}"))?;
        let Value::Object(obj) = value else { return Err("expected a JSON object".into()) };
        if let Some(extra) = obj.keys().find(|k| !self.fields.iter().any(|(n, _)| n == *k)) {
            return Err(format!("unexpected field \"{extra}\""));
        }
        let mut out = BTreeMap::new();
        for (name, kind) in &self.fields {
            let s = match obj.get(name) {
                Some(Value::String(s)) => s,
                Some(_) => return Err(format!("field \"{name}\" must be a string")),
                None => return Err(format!("missing field \"{name}\"")),
            };
            if let FieldKind::OneOf(values) = kind {
                if !values.contains(&s.as_str()) {
                    return Err(format!("field \"{name}\" must be one of {values:?}, got \"{s}\""));
                }
            }
            out.insert(name.clone(), s.clone());
        }
        Ok(out)
    }
}

/// System and user message templates with `{{name}}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub system: String,
    pub user: String,
}

impl Template {
    pub fn new(task: Task, system: String, user: String) -> Result<Self, LlmError> {
        let t = Self { system, user };
        let names = placeholders(&t.user)?;
        placeholders(&t.system)?;
        for p in task.required_placeholders() {
            if !names.iter().any(|n| n == p) {
                return Err(LlmError::Template(format!("{} template lacks {{{{{p}}}}}", task.name())));
            }
        }
        Ok(t)
    }

    pub fn default_for(task: Task) -> Self {
        let (s, u) = task.defaults();
        Self { system: s.to_string(), user: u.to_string() }
    }
}

/// One template per task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates(BTreeMap<Task, Template>);

impl Default for Templates {
    fn default() -> Self {
        Self(Task::ALL.iter().map(|&t| (t, Template::default_for(t))).collect())
    }
}

impl Templates {
    /// Loads `<task>.system.txt` / `<task>.user.txt` from `dir`, falling back
    /// to the bundled text for any missing file.
    pub fn load(dir: &Path) -> Result<Self, LlmError> {
        let mut out = BTreeMap::new();
        for task in Task::ALL {
            let (ds, du) = task.defaults();
            let read = |suffix: &str, default: &str| -> Result<String, LlmError> {
                let p = dir.join(format!("{}.{suffix}.txt", task.name()));
                match std::fs::read_to_string(&p) {
                    Ok(s) => Ok(s),
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(default.to_string()),
                    Err(e) => Err(LlmError::Template(format!("{}: {e}", p.display()))),
                }
            };
            out.insert(task, Template::new(task, read("system", ds)?, read("user", du)?)?);
        }
        Ok(Self(out))
    }

    pub fn get(&self, task: Task) -> &Template {
        &self.0[&task]
    }
}

fn placeholders(text: &str) -> Result<Vec<String>, LlmError> {
    let mut names = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or_else(|| LlmError::Template("unterminated {{".into()))?;
        names.push(after[..end].trim().to_string());
        rest = &after[end + 2..];
    }
    Ok(names)
}

/// Substitutes placeholders in one pass, so values are never re-expanded.
fn render(text: &str, vars: &BTreeMap<&str, String>) -> Result<String, LlmError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or_else(|| LlmError::Template("unterminated {{".into()))?;
        let name = after[..end].trim();
        let value = vars.get(name).ok_or_else(|| LlmError::Template(format!("no value for {{{{{name}}}}}")))?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Token estimate from byte length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub context_limit: usize,
    pub bytes_per_token: f64,
    pub response_reserve: usize,
}

impl Budget {
    pub fn new(context_limit: usize) -> Self {
        Self { context_limit, bytes_per_token: 4.0, response_reserve: RESPONSE_RESERVE_TOKENS }
    }

    pub fn estimate(&self, text: &str) -> usize {
        (text.len() as f64 / self.bytes_per_token).ceil() as usize
    }

    fn prompt_tokens(&self) -> usize {
        self.context_limit.saturating_sub(self.response_reserve)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
    pub schema: OutputSchema,
    pub truncated: bool,
}

/// Renders a task template. A `diff` variable is cut from the tail, at a
/// line boundary where possible, until the prompt fits the budget.
pub fn render_prompt(
    task: Task,
    template: &Template,
    mut vars: BTreeMap<&str, String>,
    budget: Budget,
) -> Result<Prompt, LlmError> {
    let diff = vars.insert("diff", String::new()).unwrap_or_default();
    let system = render(&template.system, &vars)?;
    let bare = render(&template.user, &vars)?;
    let available = budget.prompt_tokens();
    let fixed = budget.estimate(&system) + budget.estimate(&bare);
    if fixed > available {
        return Err(LlmError::BudgetExceeded { needed: fixed, available });
    }
    let mut truncated = false;
    let fits = |d: &str| fixed + ((d.len() as f64) / budget.bytes_per_token).ceil() as usize <= available;
    let diff = if fits(&diff) {
        diff
    } else {
        truncated = true;
        let suffix = format!("\n{TRUNCATION_MARKER}");
        let room = (((available - fixed) as f64) * budget.bytes_per_token).floor() as usize;
        let keep = room.saturating_sub(suffix.len());
        let mut cut = keep.min(diff.len());
        while !diff.is_char_boundary(cut) {
            cut -= 1;
        }
        let cut = diff[..cut].rfind('\n').map_or(cut, |nl| nl + 1);
        let mut d = diff[..cut].trim_end_matches('\n').to_string();
        d.push_str(&suffix);
        d
    };
    vars.insert("diff", diff);
    let user = render(&template.user, &vars)?;
    Ok(Prompt { system, user, schema: task.schema(), truncated })
}

/// Renders the prompt for one protocol step: the case context (type,
/// description, commit message, diff), the category pool when coding, and
/// any step-specific variables such as an earlier model's answer.
pub fn build_prompt(
    case: &MotivationCase,
    task: Task,
    template: &Template,
    pool: Option<&CategoryPool>,
    extra: &[(&'static str, String)],
    budget: Budget,
) -> Result<Prompt, LlmError> {
    let mut vars = BTreeMap::new();
    vars.insert("refactoring_type", case.instance.refactoring_type.name().to_string());
    vars.insert("description", case.instance.description.clone());
    vars.insert("commit_message", case.commit_message.clone());
    vars.insert("diff", case.code_diff.clone());
    if let Some(p) = pool {
        vars.insert("pool", p.render());
    }
    for (k, v) in extra {
        vars.insert(k, v.clone());
    }
    render_prompt(task, template, vars, budget)
}
