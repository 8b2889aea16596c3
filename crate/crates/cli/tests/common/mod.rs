#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use refwhy_core::llm::{Alignment, Decision, FinalSource, ValidationCase, ValidatorVerdict};
use refwhy_core::refactoring::{RefactoringInstance, RefactoringType};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub const ROLES: &str = r#"
[[roles]]
role = "LRM"
endpoint = "http://127.0.0.1:9"
model_name = "marco-o1"
context_limit = 4096
max_retries = 0

[[roles]]
role = "V1"
endpoint = "http://127.0.0.1:9"
model_name = "mistral-nemo"
context_limit = 4096
max_retries = 0

[[roles]]
role = "V2"
endpoint = "http://127.0.0.1:9"
model_name = "deepseek-r1-distill-qwen-14b"
context_limit = 8129
max_retries = 0

[[roles]]
role = "V3"
endpoint = "http://127.0.0.1:9"
model_name = "phi-4"
context_limit = 8129
max_retries = 0
"#;

/// A workspace holding the fixture repository and a config pointing at it.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub config: PathBuf,
}

impl Fixture {
    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn out(&self, stage: &str, file: &str) -> PathBuf {
        self.root().join("out").join(stage).join(file)
    }

    pub fn run(&self, args: &[&str]) -> Output {
        refwhy(&[args, &["--config", self.config.to_str().unwrap()]].concat())
    }

    /// Runs a stage and panics with its stderr unless it succeeds.
    pub fn ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        out
    }

    pub fn write_config(&self, extra: &str) {
        std::fs::write(&self.config, config_text(extra)).unwrap();
    }
}

pub fn config_text(extra: &str) -> String {
    let data = data_dir();
    format!(
        "repos = [\"mini-java\"]\nrm_json_dir = \"{}\"\nproduct_metrics_dir = \"{}\"\nground_truth = \"{}\"\noutput_dir = \"out\"\n{extra}\n\n[llm]\nretry_base_delay_ms = 1\n{ROLES}",
        data.join("rm").display(),
        data.join("product").display(),
        data.join("ground_truth.json").display(),
    )
}

/// Builds the fixture repository under `<tmp>/mini-java` with a config
/// whose extra top-level keys are `extra`.
pub fn fixture(extra: &str) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    refwhy_core::testkit::build_mini_java(&dir.path().join("mini-java")).unwrap();
    let f = Fixture { config: dir.path().join("refwhy.toml"), dir };
    f.write_config(extra);
    f
}

pub fn refwhy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refwhy")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

pub fn synthetic_instances(n: usize) -> Vec<RefactoringInstance> {
    (0..n)
        .map(|i| {
            let commit = format!("{:040x}", i / 3);
            RefactoringInstance {
                id: format!("proj{}:{commit}:{}", i % 4, i % 3),
                project: format!("proj{}", i % 4),
                commit_id: commit,
                refactoring_type: RefactoringType::all().nth((i * 7) % 12).unwrap(),
                description: String::new(),
                left: vec![],
                right: vec![],
            }
        })
        .collect()
}

pub fn validation_case(i: usize, llm: Option<Alignment>) -> ValidationCase {
    let verdict = ValidatorVerdict { verdict: Decision::Agree, reasoning: "fine".into() };
    ValidationCase {
        case_id: format!("case-{i:03}"),
        project: "p".into(),
        commit_id: format!("{i:040x}"),
        refactoring_type: "Extract Method".into(),
        description: "Extract Method".into(),
        commit_message: "msg".into(),
        diff: String::new(),
        lrm_motivation: "Improve readability".into(),
        v1_verdict: verdict.clone(),
        v2_verdict: verdict,
        v3_verdict: None,
        final_source: FinalSource::Lrm,
        final_motivation: "Improve readability".into(),
        ground_truth: None,
        llm_alignment: llm,
    }
}
