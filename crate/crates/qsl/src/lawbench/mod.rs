//! Randomized law checking: generate operands, evaluate both sides at every state,
//! and report the first disagreeing state of each failing trial.

pub mod gen;
pub mod laws;

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use gen::{generate, Artifact, ArtifactKind, Gen, GenSpec, ProgramFeatures};
pub use laws::{catalog, DebugHooks, Law, LawCtx, Operand, OperandText, Operands, Outcome, Violation};

use crate::error::{ModelError, QslError};
use crate::expect::table::Space;
use crate::state::DomainConfig;

/// Witnesses kept per law.
pub const MAX_WITNESSES: usize = 3;

/// A failing trial with enough information to replay it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub law: String,
    pub trial: usize,
    pub operands: Vec<OperandText>,
    pub violation: Violation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LawResult {
    pub id: String,
    pub statement: String,
    pub trials: usize,
    pub violations: usize,
    pub witnesses: Vec<Witness>,
    /// Trials where evaluating an operand failed outright.
    pub error_trials: usize,
    pub first_error: Option<String>,
    /// States skipped because an entry was a model error.
    pub error_states: usize,
    pub vacuous: usize,
    pub known_refutation: Option<String>,
    pub elapsed_ms: u128,
}

impl LawResult {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LawReport {
    pub seed: u64,
    pub trials: usize,
    pub config: DomainConfig,
    pub max_cells: usize,
    pub laws: Vec<LawResult>,
    pub total_violations: usize,
}

impl LawReport {
    pub fn failing(&self) -> impl Iterator<Item = &LawResult> {
        self.laws.iter().filter(|l| !l.holds())
    }

    /// Failing laws that are not flagged as known refutations.
    pub fn unexpected_failures(&self) -> impl Iterator<Item = &LawResult> {
        self.failing().filter(|l| l.known_refutation.is_none())
    }
}

fn fnv(parts: &[&[u8]]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for byte in part.iter().chain(&[0xff]) {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(0x0100_0000_01b3);
        }
    }
    hash
}

/// Seed of one trial; depends only on the run seed, the law and the trial index.
pub fn trial_seed(seed: u64, law: &str, trial: usize) -> u64 {
    fnv(&[&seed.to_le_bytes(), law.as_bytes(), &(trial as u64).to_le_bytes()])
}

/// Laws whose id matches one of `patterns`; `prefix.*` matches a whole group, `*` everything.
pub fn select_laws(patterns: &[String]) -> Result<Vec<Law>, QslError> {
    let all = catalog();
    if patterns.is_empty() {
        return Ok(all);
    }
    for p in patterns {
        if !all.iter().any(|law| matches(p, law.id)) {
            return Err(QslError::Usage(format!("no law matches `{p}`")));
        }
    }
    Ok(all.into_iter().filter(|law| patterns.iter().any(|p| matches(p, law.id))).collect())
}

fn matches(pattern: &str, id: &str) -> bool {
    match pattern.strip_suffix('*') {
        Some(prefix) => id.starts_with(prefix),
        None => pattern == id,
    }
}

enum TrialResult {
    Checked(Operands, Outcome),
    Failed(ModelError),
}

fn run_trial(law: &Law, space: &Arc<Space>, spec: &GenSpec, hooks: DebugHooks, trial: usize) -> TrialResult {
    let mut g = Gen::new(spec, trial_seed(spec.seed, law.id, trial));
    let operands = (law.generate)(&mut g);
    let ctx = LawCtx::on_space(spec, space.clone(), hooks);
    match (law.check)(&ctx, &operands) {
        Ok(outcome) => TrialResult::Checked(operands, outcome),
        Err(e) => TrialResult::Failed(e),
    }
}

fn run_law(law: &Law, space: &Arc<Space>, spec: &GenSpec, hooks: DebugHooks, trials: usize) -> LawResult {
    let start = Instant::now();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(trials.max(1));
    let mut results: Vec<Option<TrialResult>> = (0..trials).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, chunk) in results.chunks_mut(trials.div_ceil(workers).max(1)).enumerate() {
            let offset = w * trials.div_ceil(workers).max(1);
            scope.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run_trial(law, space, spec, hooks, offset + k));
                }
            });
        }
    });

    let mut out = LawResult {
        id: law.id.to_string(),
        statement: law.statement.to_string(),
        trials,
        violations: 0,
        witnesses: Vec::new(),
        error_trials: 0,
        first_error: None,
        error_states: 0,
        vacuous: 0,
        known_refutation: law.known_refutation.map(str::to_string),
        elapsed_ms: 0,
    };
    for (trial, result) in results.into_iter().enumerate() {
        match result.expect("every trial ran") {
            TrialResult::Checked(operands, outcome) => {
                out.error_states += outcome.error_states;
                if outcome.vacuous {
                    out.vacuous += 1;
                }
                if let Some(violation) = outcome.violation {
                    out.violations += 1;
                    if out.witnesses.len() < MAX_WITNESSES {
                        out.witnesses.push(Witness { law: law.id.to_string(), trial, operands: operands.to_text(), violation });
                    }
                }
            }
            TrialResult::Failed(e) => {
                out.error_trials += 1;
                out.first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    out.elapsed_ms = start.elapsed().as_millis();
    out
}

pub fn run_law_suite(laws: &[Law], spec: &GenSpec, trials: usize) -> Result<LawReport, ModelError> {
    run_law_suite_with(laws, spec, trials, DebugHooks::default())
}

pub fn run_law_suite_with(laws: &[Law], spec: &GenSpec, trials: usize, hooks: DebugHooks) -> Result<LawReport, ModelError> {
    let space = Space::new(&spec.cfg)?;
    let results: Vec<LawResult> = laws.iter().map(|law| run_law(law, &space, spec, hooks, trials)).collect();
    Ok(LawReport {
        seed: spec.seed,
        trials,
        config: spec.cfg.clone(),
        max_cells: spec.max_cells,
        total_violations: results.iter().map(|r| r.violations).sum(),
        laws: results,
    })
}

/// Re-checks a witness from its textual operands; true when the violation reproduces.
pub fn replay_witness(witness: &Witness, spec: &GenSpec, hooks: DebugHooks) -> Result<bool, QslError> {
    let law = catalog()
        .into_iter()
        .find(|l| l.id == witness.law)
        .ok_or_else(|| QslError::Usage(format!("unknown law `{}`", witness.law)))?;
    let operands = Operands::from_text(&witness.operands)?;
    let ctx = LawCtx::new(spec, hooks)?;
    let outcome = (law.check)(&ctx, &operands)?;
    Ok(outcome.violation.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_ids_are_unique() {
        let ids: std::collections::BTreeSet<_> = catalog().iter().map(|l| l.id).collect();
        assert_eq!(ids.len(), catalog().len());
    }

    #[test]
    fn patterns_select_groups() {
        let laws = select_laws(&["sepcon.*".to_string()]).unwrap();
        assert!(laws.len() >= 5 && laws.iter().all(|l| l.id.starts_with("sepcon.")));
        assert!(select_laws(&["nope".to_string()]).is_err());
    }

    #[test]
    fn trial_seeds_differ() {
        assert_ne!(trial_seed(1, "a", 0), trial_seed(1, "a", 1));
        assert_ne!(trial_seed(1, "a", 0), trial_seed(1, "b", 0));
    }
}
