use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use super::prompt::render_prompt;
use super::{
    build_prompt, normalize, Alignment, AlignmentLabel, ArbiterVerdict, Budget, CategoryPool, ChatBackend,
    ChatMessage, ChatRequest, CodingAssignment, ConsensusRecord, Decision, Exchange, FinalSource, LlmError,
    LrmOutput, MotivationCase, OpenCoding, Prompt, Resolution, Role, RoleSet, Task, Templates, TranscriptEntry,
    TranscriptStore, ValidatorVerdict,
};

#[derive(Debug, Clone)]
pub struct OrchestratorConfig {
    pub roles: RoleSet,
    pub templates: Templates,
    /// Role that classifies alignment with reported motivations.
    pub align_role: Role,
    /// First retry waits this long; each further retry doubles it.
    pub retry_base_delay: Duration,
    pub bytes_per_token: f64,
    /// Cases processed concurrently by [`Orchestrator::extract_all`].
    pub workers: usize,
}

impl OrchestratorConfig {
    pub fn new(roles: RoleSet) -> Self {
        Self {
            roles,
            templates: Templates::default(),
            align_role: Role::Lrm,
            retry_base_delay: Duration::from_millis(500),
            bytes_per_token: 4.0,
            workers: 4,
        }
    }
}

type Fields = BTreeMap<String, String>;

pub struct Orchestrator {
    cfg: OrchestratorConfig,
    backend: Box<dyn ChatBackend>,
    store: TranscriptStore,
    network_calls: AtomicUsize,
}

fn field(f: &mut Fields, name: &str) -> String {
    f.remove(name).unwrap_or_default()
}

impl Orchestrator {
    pub fn new(cfg: OrchestratorConfig, backend: Box<dyn ChatBackend>, store: TranscriptStore) -> Self {
        Self { cfg, backend, store, network_calls: AtomicUsize::new(0) }
    }

    /// Requests that reached the backend (cache hits excluded).
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn store(&self) -> &TranscriptStore {
        &self.store
    }

    pub fn config(&self) -> &OrchestratorConfig {
        &self.cfg
    }

    fn budget(&self, role: Role) -> Budget {
        Budget { bytes_per_token: self.cfg.bytes_per_token, ..Budget::new(self.cfg.roles.get(role).context_limit) }
    }

    fn case_prompt(
        &self,
        case: &MotivationCase,
        task: Task,
        role: Role,
        extra: &[(&'static str, String)],
    ) -> Result<Prompt, LlmError> {
        build_prompt(case, task, self.cfg.templates.get(task), None, extra, self.budget(role))
    }

    fn send(&self, role: Role, request: &ChatRequest) -> Result<String, LlmError> {
        let model = self.cfg.roles.get(role);
        let attempts = model.max_retries + 1;
        let mut last = String::new();
        for attempt in 1..=attempts {
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            match self.backend.complete(model, request) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    last = e.to_string();
                    if !e.is_retryable() {
                        return Err(LlmError::EndpointUnreachable { role, attempts: attempt, message: last });
                    }
                    if attempt < attempts {
                        log::warn!("{role} request failed ({e}), retrying");
                        std::thread::sleep(self.cfg.retry_base_delay * 2u32.saturating_pow(attempt - 1));
                    }
                }
            }
        }
        Err(LlmError::EndpointUnreachable { role, attempts, message: last })
    }

    /// Answers from the transcript when possible; otherwise sends the
    /// request and persists the exchange before returning.
    fn exchange(
        &self,
        role: Role,
        scope: &str,
        request: ChatRequest,
        log: &mut Vec<Exchange>,
    ) -> Result<String, LlmError> {
        let endpoint = &self.cfg.roles.get(role).endpoint;
        let key = request.key(scope, endpoint);
        let response = match self.store.get(&key) {
            Some(r) => r,
            None => {
                let r = self.send(role, &request)?;
                self.store.append(&TranscriptEntry {
                    key: key.clone(),
                    scope: scope.to_string(),
                    role,
                    endpoint: endpoint.clone(),
                    request: request.clone(),
                    response: r.clone(),
                })?;
                r
            }
        };
        log.push(Exchange { role, key, request, response: response.clone() });
        Ok(response)
    }

    /// One structured exchange, with a single reprompt if the reply does
    /// not parse against the schema.
    fn ask(&self, role: Role, scope: &str, prompt: &Prompt, log: &mut Vec<Exchange>) -> Result<Fields, LlmError> {
        let model = self.cfg.roles.get(role);
        let mut request = ChatRequest {
            model: model.model_name.clone(),
            messages: vec![ChatMessage::new("system", &prompt.system), ChatMessage::new("user", &prompt.user)],
            temperature: model.temperature,
            response_format: prompt.schema.response_format(),
        };
        let reply = self.exchange(role, scope, request.clone(), log)?;
        let problem = match prompt.schema.parse(&reply) {
            Ok(f) => return Ok(f),
            Err(e) => e,
        };
        log::warn!("{role} reply did not match the schema ({problem}); reprompting");
        let fields: Vec<&str> = prompt.schema.fields.iter().map(|(n, _)| n.as_str()).collect();
        request.messages.push(ChatMessage::new("assistant", reply));
        request.messages.push(ChatMessage::new(
            "user",
            format!(
                "Your reply could not be used: {problem}. Reply again with only a JSON object with exactly the string fields {}.",
                fields.join(", ")
            ),
        ));
        let reply = self.exchange(role, scope, request, log)?;
        prompt.schema.parse(&reply).map_err(|message| LlmError::MalformedModelOutput { role, message })
    }

    fn validate(
        &self,
        case: &MotivationCase,
        role: Role,
        lrm: &[(&'static str, String)],
    ) -> Result<(ValidatorVerdict, Vec<Exchange>), LlmError> {
        let mut log = Vec::new();
        let p = self.case_prompt(case, Task::Validate, role, lrm)?;
        let mut f = self.ask(role, case.id(), &p, &mut log)?;
        let v = ValidatorVerdict { verdict: Decision::parse(&f["verdict"]), reasoning: field(&mut f, "reasoning") };
        Ok((v, log))
    }

    /// Runs LRM, then V1 and V2 concurrently, then V3 only if they differ.
    pub fn extract_motivation(&self, case: &MotivationCase) -> Result<ConsensusRecord, LlmError> {
        let mut log = Vec::new();
        let p = self.case_prompt(case, Task::Extract, Role::Lrm, &[])?;
        let mut f = self.ask(Role::Lrm, case.id(), &p, &mut log)?;
        let lrm = LrmOutput {
            motivation: field(&mut f, "motivation"),
            description: field(&mut f, "description"),
            reasoning: field(&mut f, "reasoning"),
        };
        let mut extra = vec![
            ("lrm_motivation", lrm.motivation.clone()),
            ("lrm_description", lrm.description.clone()),
            ("lrm_reasoning", lrm.reasoning.clone()),
        ];
        let (r1, r2) = std::thread::scope(|s| {
            let v2 = s.spawn(|| self.validate(case, Role::V2, &extra));
            let v1 = self.validate(case, Role::V1, &extra);
            (v1, v2.join().expect("validator thread panicked"))
        });
        let (v1, log1) = r1?;
        let (v2, log2) = r2?;
        log.extend(log1);
        log.extend(log2);

        let mut v3 = None;
        if v1.verdict != v2.verdict {
            extra.extend([
                ("v1_verdict", v1.verdict.label().to_string()),
                ("v1_reasoning", v1.reasoning.clone()),
                ("v2_verdict", v2.verdict.label().to_string()),
                ("v2_reasoning", v2.reasoning.clone()),
            ]);
            let p = self.case_prompt(case, Task::Arbitrate, Role::V3, &extra)?;
            let mut f = self.ask(Role::V3, case.id(), &p, &mut log)?;
            v3 = Some(ArbiterVerdict {
                verdict: Decision::parse(&f["verdict"]),
                motivation: field(&mut f, "motivation"),
                reasoning: field(&mut f, "reasoning"),
            });
        }
        let (final_source, final_motivation) = match &v3 {
            Some(a) if a.verdict == Decision::Disagree => (FinalSource::V3, a.motivation.clone()),
            _ => (FinalSource::Lrm, lrm.motivation.clone()),
        };
        Ok(ConsensusRecord {
            case_id: case.id().to_string(),
            lrm_output: lrm,
            v1_verdict: v1,
            v2_verdict: v2,
            v3_verdict: v3,
            final_source,
            final_motivation,
            raw_transcripts: log,
        })
    }

    /// Runs [`Self::extract_motivation`] over `cases` on a bounded worker
    /// pool; results keep the input order.
    pub fn extract_all(&self, cases: &[MotivationCase]) -> Vec<Result<ConsensusRecord, LlmError>> {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<ConsensusRecord, LlmError>>>> =
            cases.iter().map(|_| Mutex::new(None)).collect();
        let workers = self.cfg.workers.clamp(1, cases.len().max(1));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= cases.len() {
                        break;
                    }
                    *slots[i].lock().unwrap() = Some(self.extract_motivation(&cases[i]));
                });
            }
        });
        slots.into_iter().map(|m| m.into_inner().unwrap().expect("every case processed")).collect()
    }

    /// Asks the alignment role whether the final motivation matches the
    /// developer-reported one.
    pub fn classify_alignment(
        &self,
        case: &MotivationCase,
        record: &ConsensusRecord,
    ) -> Result<AlignmentLabel, LlmError> {
        let gt = case.ground_truth.as_ref().ok_or_else(|| LlmError::MissingGroundTruth(case.id().to_string()))?;
        let role = self.cfg.align_role;
        let extra = [
            ("motivation", record.final_motivation.clone()),
            ("motivation_description", record.final_description().to_string()),
            ("ground_truth", gt.motivation.clone()),
            ("explanation", gt.explanation.clone()),
        ];
        let p = self.case_prompt(case, Task::Align, role, &extra)?;
        let mut f = self.ask(role, case.id(), &p, &mut Vec::new())?;
        Ok(AlignmentLabel {
            case_id: case.id().to_string(),
            value: Alignment::parse(&f["label"]).expect("schema restricts labels"),
            reasoning: field(&mut f, "reasoning"),
        })
    }

    fn code(
        &self,
        role: Role,
        task: Task,
        case_id: &str,
        vars: &BTreeMap<&'static str, String>,
    ) -> Result<Fields, LlmError> {
        let p = render_prompt(task, self.cfg.templates.get(task), vars.clone(), self.budget(role))?;
        self.ask(role, &format!("coding:{case_id}"), &p, &mut Vec::new())
    }

    /// Open coding: V1 and V2 each assign a pool category or propose one;
    /// V3 resolves differences by picking one of theirs or proposing its own.
    /// Records are visited in the given order and the pool only grows.
    pub fn open_code(&self, records: &[ConsensusRecord]) -> Result<OpenCoding, LlmError> {
        if records.is_empty() {
            return Err(LlmError::EmptyInput);
        }
        let mut pool = CategoryPool::default();
        let mut assignments = Vec::with_capacity(records.len());
        for r in records {
            let mut vars = BTreeMap::new();
            vars.insert("motivation", r.final_motivation.clone());
            vars.insert("motivation_description", r.final_description().to_string());
            vars.insert("pool", pool.render());
            let (a, b) = std::thread::scope(|s| {
                let b = s.spawn(|| self.code(Role::V2, Task::Code, &r.case_id, &vars));
                (self.code(Role::V1, Task::Code, &r.case_id, &vars), b.join().expect("coder thread panicked"))
            });
            let (mut f1, mut f2) = (a?, b?);
            let (c1, c2) = (field(&mut f1, "category"), field(&mut f2, "category"));
            let assignment = if normalize(&c1) == normalize(&c2) {
                let category = pool.insert(&c1, &f1["description"], &r.case_id);
                CodingAssignment {
                    case_id: r.case_id.clone(),
                    category,
                    resolution: Resolution::Shared,
                    v1_category: c1,
                    v2_category: c2,
                    v3_category: None,
                    reasoning: field(&mut f1, "reasoning"),
                }
            } else {
                vars.insert("v1_category", c1.clone());
                vars.insert("v1_reasoning", f1["reasoning"].clone());
                vars.insert("v2_category", c2.clone());
                vars.insert("v2_reasoning", f2["reasoning"].clone());
                let mut f3 = self.code(Role::V3, Task::CodeArbitrate, &r.case_id, &vars)?;
                let c3 = field(&mut f3, "category");
                let (resolution, description) = if normalize(&c3) == normalize(&c1) {
                    (Resolution::V1, f1["description"].clone())
                } else if normalize(&c3) == normalize(&c2) {
                    (Resolution::V2, f2["description"].clone())
                } else {
                    (Resolution::Arbiter, f3["description"].clone())
                };
                let category = pool.insert(&c3, &description, &r.case_id);
                CodingAssignment {
                    case_id: r.case_id.clone(),
                    category,
                    resolution,
                    v1_category: c1,
                    v2_category: c2,
                    v3_category: Some(c3),
                    reasoning: field(&mut f3, "reasoning"),
                }
            };
            assignments.push(assignment);
        }
        Ok(OpenCoding { assignments, pool })
    }
}
