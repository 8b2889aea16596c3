use std::io::{self, BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    Alignment, AlignmentLabel, ArbiterVerdict, ConsensusRecord, FinalSource, GroundTruth, LlmError,
    MotivationCase, ValidatorVerdict,
};

/// Everything a human reviewer sees for one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCase {
    pub case_id: String,
    pub project: String,
    pub commit_id: String,
    pub refactoring_type: String,
    pub description: String,
    pub commit_message: String,
    pub diff: String,
    pub lrm_motivation: String,
    pub v1_verdict: ValidatorVerdict,
    pub v2_verdict: ValidatorVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v3_verdict: Option<ArbiterVerdict>,
    pub final_source: FinalSource,
    pub final_motivation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
    /// The model's own alignment judgement, compared against human verdicts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_alignment: Option<Alignment>,
}

impl ValidationCase {
    pub fn new(case: &MotivationCase, record: &ConsensusRecord, alignment: Option<&AlignmentLabel>) -> Self {
        Self {
            case_id: record.case_id.clone(),
            project: case.instance.project.clone(),
            commit_id: case.instance.commit_id.clone(),
            refactoring_type: case.instance.refactoring_type.name().to_string(),
            description: case.instance.description.clone(),
            commit_message: case.commit_message.clone(),
            diff: case.code_diff.clone(),
            lrm_motivation: record.lrm_output.motivation.clone(),
            v1_verdict: record.v1_verdict.clone(),
            v2_verdict: record.v2_verdict.clone(),
            v3_verdict: record.v3_verdict.clone(),
            final_source: record.final_source,
            final_motivation: record.final_motivation.clone(),
            ground_truth: case.ground_truth.clone(),
            llm_alignment: alignment.map(|a| a.value),
        }
    }
}

/// Writes a seeded uniform sample of `sample_n` cases as NDJSON, in input
/// order, and returns the exported case ids.
pub fn export_validation_batch<W: Write>(
    cases: &[ValidationCase],
    sample_n: usize,
    seed: u64,
    mut out: W,
) -> Result<Vec<String>, LlmError> {
    if sample_n > cases.len() {
        return Err(LlmError::InsufficientRecords { requested: sample_n, available: cases.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, cases.len(), sample_n).into_vec();
    picked.sort_unstable();
    let mut ids = Vec::with_capacity(sample_n);
    for i in picked {
        serde_json::to_writer(&mut out, &cases[i]).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
        ids.push(cases[i].case_id.clone());
    }
    out.flush()?;
    Ok(ids)
}

pub fn read_validation_batch<R: BufRead>(input: R) -> io::Result<Vec<ValidationCase>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(io::Error::from)?);
        }
    }
    Ok(out)
}
