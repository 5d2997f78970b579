//! Empirical models: per-context joint outcome tables, their possibilistic
//! supports, the hard-coded oracle tables, and no-signalling checks.

use crate::scenario::{BellScenario, Protocol, ScenarioError};
use crate::POSSIBILISTIC_EPS;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EmpiricalError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("context table for {context:?} sums to {total}, not 1")]
    NotNormalized { context: Vec<String>, total: f64 },
    #[error("negative probability {probability} in context {context:?}")]
    NegativeProbability {
        context: Vec<String>,
        probability: f64,
    },
    #[error("measurement `{0}` appears in no context")]
    UnusedMeasurement(String),
    #[error("context {inner:?} is contained in {outer:?}; contexts must be maximal")]
    NonMaximalContext {
        inner: Vec<String>,
        outer: Vec<String>,
    },
    #[error("extra supermeasurement outcomes carry probability {mass:.3e} in context {context:?}")]
    ExtraOutcomeMass { context: Vec<String>, mass: f64 },
    #[error("context {0:?} has empty support")]
    EmptySupport(Vec<String>),
}

pub type Result<T> = std::result::Result<T, EmpiricalError>;

/// The shape of a contextuality scenario: measurement names, a common outcome
/// set, and the list of maximal contexts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementScenarioSpec {
    pub measurements: Vec<String>,
    pub outcomes: Vec<u8>,
    pub contexts: Vec<Vec<String>>,
}

impl MeasurementScenarioSpec {
    pub fn dichotomic(measurements: Vec<String>, contexts: Vec<Vec<String>>) -> Self {
        MeasurementScenarioSpec {
            measurements,
            outcomes: vec![0, 1],
            contexts,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for m in &self.measurements {
            if !self.contexts.iter().any(|c| c.contains(m)) {
                return Err(EmpiricalError::UnusedMeasurement(m.clone()));
            }
        }
        for (i, a) in self.contexts.iter().enumerate() {
            for (j, b) in self.contexts.iter().enumerate() {
                if i != j && a.iter().all(|m| b.contains(m)) {
                    return Err(EmpiricalError::NonMaximalContext {
                        inner: a.clone(),
                        outer: b.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// All joint outcomes of a context, lexicographically.
    pub fn context_outcomes(&self, context: &[String]) -> Vec<Vec<u8>> {
        let mut out = vec![Vec::new()];
        for _ in context {
            let mut next = Vec::new();
            for o in &out {
                for &v in &self.outcomes {
                    let mut t = o.clone();
                    t.push(v);
                    next.push(t);
                }
            }
            out = next;
        }
        out
    }
}

/// One probability table per context.
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalModel {
    pub spec: MeasurementScenarioSpec,
    /// Parallel to `spec.contexts`; keys in lexicographic outcome order.
    pub tables: Vec<IndexMap<Vec<u8>, f64>>,
}

impl EmpiricalModel {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        for (context, table) in self.spec.contexts.iter().zip(&self.tables) {
            let total: f64 = table.values().sum();
            if (total - 1.0).abs() > 1e-10 {
                return Err(EmpiricalError::NotNormalized {
                    context: context.clone(),
                    total,
                });
            }
            for &p in table.values() {
                if p < -1e-12 {
                    return Err(EmpiricalError::NegativeProbability {
                        context: context.clone(),
                        probability: p,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn table_for(&self, context: &[String]) -> Option<&IndexMap<Vec<u8>, f64>> {
        self.spec
            .contexts
            .iter()
            .position(|c| c == context)
            .map(|i| &self.tables[i])
    }

    pub fn probability(&self, context_index: usize, outcome: &[u8]) -> f64 {
        self.tables[context_index]
            .get(outcome)
            .copied()
            .unwrap_or(0.0)
    }
}

/// Per-context outcome supports: which events are possible at all.
#[derive(Clone, Debug, Serialize)]
pub struct PossibilisticModel {
    pub spec: MeasurementScenarioSpec,
    pub supports: Vec<BTreeSet<Vec<u8>>>,
}

impl PossibilisticModel {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        for (context, support) in self.spec.contexts.iter().zip(&self.supports) {
            if support.is_empty() {
                return Err(EmpiricalError::EmptySupport(context.clone()));
            }
        }
        Ok(())
    }

    pub fn support_for(&self, context: &[String]) -> Option<&BTreeSet<Vec<u8>>> {
        self.spec
            .contexts
            .iter()
            .position(|c| c == context)
            .map(|i| &self.supports[i])
    }

    /// 0/1 indicator table normalized per context, so that a second
    /// possibilistic reduction is the identity.
    pub fn to_indicator_model(&self) -> EmpiricalModel {
        let tables = self
            .spec
            .contexts
            .iter()
            .zip(&self.supports)
            .map(|(context, support)| {
                let weight = 1.0 / support.len() as f64;
                let mut table = IndexMap::new();
                for outcome in self.spec.context_outcomes(context) {
                    let p = if support.contains(&outcome) {
                        weight
                    } else {
                        0.0
                    };
                    table.insert(outcome, p);
                }
                table
            })
            .collect();
        EmpiricalModel {
            spec: self.spec.clone(),
            tables,
        }
    }

    /// Structural equality after renaming this model's measurements: contexts
    /// are matched as sets and outcome tuples permuted accordingly.
    pub fn equivalent_under(
        &self,
        other: &PossibilisticModel,
        rename: &BTreeMap<String, String>,
    ) -> bool {
        if self.spec.contexts.len() != other.spec.contexts.len() {
            return false;
        }
        for (context, support) in self.spec.contexts.iter().zip(&self.supports) {
            let renamed: Vec<String> = context
                .iter()
                .map(|m| rename.get(m).cloned().unwrap_or_else(|| m.clone()))
                .collect();
            let Some(position) = other
                .spec
                .contexts
                .iter()
                .position(|c| as_set(c) == as_set(&renamed))
            else {
                return false;
            };
            let target = &other.spec.contexts[position];
            // Permutation sending our renamed tuple order to theirs.
            let perm: Vec<usize> = target
                .iter()
                .map(|m| renamed.iter().position(|r| r == m).unwrap())
                .collect();
            let mapped: BTreeSet<Vec<u8>> = support
                .iter()
                .map(|o| perm.iter().map(|&i| o[i]).collect())
                .collect();
            if mapped != other.supports[position] {
                return false;
            }
        }
        true
    }
}

impl PartialEq for PossibilisticModel {
    fn eq(&self, other: &Self) -> bool {
        self.equivalent_under(other, &BTreeMap::new())
    }
}

fn as_set(names: &[String]) -> BTreeSet<&String> {
    names.iter().collect()
}

/// Empirical model of a Bell scenario via direct Born-rule simulation.
pub fn model_from_bell(bell: &BellScenario) -> Result<EmpiricalModel> {
    bell.validate().map_err(EmpiricalError::Scenario)?;
    let mut measurements = Vec::new();
    for party in &bell.parties {
        for setting in &party.settings {
            measurements.push(setting.name.clone());
        }
    }
    let contexts = bell.context_names();
    let mut tables = Vec::new();
    for context in &contexts {
        let dist = bell.joint_distribution(context)?;
        tables.push(dist.probabilities);
    }
    let model = EmpiricalModel {
        spec: MeasurementScenarioSpec::dichotomic(measurements, contexts),
        tables,
    };
    model.validate()?;
    Ok(model)
}

/// Empirical model of a protocol over the given gatherable contexts. Extra
/// supermeasurement outcomes (from basis completion) must carry negligible
/// probability and are dropped from the tables.
pub fn model_from_protocol(
    protocol: &Protocol,
    contexts: &[Vec<String>],
) -> Result<EmpiricalModel> {
    let mut measurements: Vec<String> = Vec::new();
    for context in contexts {
        for m in context {
            if !measurements.contains(m) {
                measurements.push(m.clone());
            }
        }
    }
    let mut tables = Vec::new();
    for context in contexts {
        let vars: Vec<&str> = context.iter().map(String::as_str).collect();
        let dist = protocol.joint_distribution(&vars)?;
        let mut table: IndexMap<Vec<u8>, f64> = IndexMap::new();
        let mut extra_mass = 0.0;
        for (outcome, p) in dist.probabilities {
            if outcome.iter().any(|&v| v > 1) {
                extra_mass += p;
            } else {
                table.insert(outcome, p);
            }
        }
        if extra_mass > POSSIBILISTIC_EPS {
            return Err(EmpiricalError::ExtraOutcomeMass {
                context: context.clone(),
                mass: extra_mass,
            });
        }
        tables.push(table);
    }
    let model = EmpiricalModel {
        spec: MeasurementScenarioSpec::dichotomic(measurements, contexts.to_vec()),
        tables,
    };
    model.validate()?;
    Ok(model)
}

/// Keep outcomes with probability above `eps`.
pub fn possibilistic(model: &EmpiricalModel, eps: f64) -> PossibilisticModel {
    let supports = model
        .tables
        .iter()
        .map(|table| {
            table
                .iter()
                .filter(|(_, &p)| p > eps)
                .map(|(o, _)| o.clone())
                .collect()
        })
        .collect();
    PossibilisticModel {
        spec: model.spec.clone(),
        supports,
    }
}

/// Hard-coded support table of the two-party model (contexts {A,B}, {A,W},
/// {U,B}, {U,W}), transcribed independently of the simulator. Outcome 0 of
/// the supermeasurements U and W is the `ok` outcome.
pub fn canonical_hardy() -> PossibilisticModel {
    let spec = MeasurementScenarioSpec::dichotomic(
        vec!["A".into(), "B".into(), "U".into(), "W".into()],
        vec![
            vec!["A".into(), "B".into()],
            vec!["A".into(), "W".into()],
            vec!["U".into(), "B".into()],
            vec!["U".into(), "W".into()],
        ],
    );
    let rows: [&[[u8; 2]]; 4] = [
        &[[0, 0], [1, 0], [1, 1]],
        &[[0, 0], [0, 1], [1, 1]],
        &[[0, 1], [1, 0], [1, 1]],
        &[[0, 0], [0, 1], [1, 0], [1, 1]],
    ];
    PossibilisticModel {
        spec,
        supports: rows
            .iter()
            .map(|row| row.iter().map(|o| o.to_vec()).collect())
            .collect(),
    }
}

/// Hard-coded support table of the three-party parity model over contexts
/// XXX, XYY, YXY, YYX: the XXX row supports even-parity triples, the other
/// rows odd-parity triples.
pub fn canonical_ghz_mermin() -> PossibilisticModel {
    let spec = MeasurementScenarioSpec::dichotomic(
        vec![
            "X_A".into(),
            "Y_A".into(),
            "X_B".into(),
            "Y_B".into(),
            "X_C".into(),
            "Y_C".into(),
        ],
        vec![
            vec!["X_A".into(), "X_B".into(), "X_C".into()],
            vec!["X_A".into(), "Y_B".into(), "Y_C".into()],
            vec!["Y_A".into(), "X_B".into(), "Y_C".into()],
            vec!["Y_A".into(), "Y_B".into(), "X_C".into()],
        ],
    );
    let parity_class = |rhs: u8| -> BTreeSet<Vec<u8>> {
        (0u8..8)
            .map(|i| vec![i >> 2 & 1, i >> 1 & 1, i & 1])
            .filter(|o| o.iter().fold(0, |acc, &v| acc ^ v) == rhs)
            .collect()
    };
    PossibilisticModel {
        spec,
        supports: vec![
            parity_class(0),
            parity_class(1),
            parity_class(1),
            parity_class(1),
        ],
    }
}

/// No-signalling check: marginals over shared measurements must agree across
/// contexts.
#[derive(Clone, Debug, Serialize)]
pub struct NoSignallingReport {
    pub max_deviation: f64,
    pub tolerance: f64,
    pub ok: bool,
    /// Worst offender: (context i, context j, shared measurements).
    pub worst: Option<(Vec<String>, Vec<String>, Vec<String>)>,
}

pub fn check_no_signalling(model: &EmpiricalModel, tol: f64) -> NoSignallingReport {
    let mut max_deviation = 0.0f64;
    let mut worst = None;
    for i in 0..model.spec.contexts.len() {
        for j in i + 1..model.spec.contexts.len() {
            let ci = &model.spec.contexts[i];
            let cj = &model.spec.contexts[j];
            let shared: Vec<String> = ci.iter().filter(|m| cj.contains(m)).cloned().collect();
            if shared.is_empty() {
                continue;
            }
            let mi = marginal_table(ci, &model.tables[i], &shared);
            let mj = marginal_table(cj, &model.tables[j], &shared);
            for (outcome, p) in &mi {
                let q = mj.get(outcome).copied().unwrap_or(0.0);
                let d = (p - q).abs();
                if d > max_deviation {
                    max_deviation = d;
                    worst = Some((ci.clone(), cj.clone(), shared.clone()));
                }
            }
        }
    }
    NoSignallingReport {
        max_deviation,
        tolerance: tol,
        ok: max_deviation <= tol,
        worst,
    }
}

fn marginal_table(
    context: &[String],
    table: &IndexMap<Vec<u8>, f64>,
    keep: &[String],
) -> IndexMap<Vec<u8>, f64> {
    let positions: Vec<usize> = keep
        .iter()
        .map(|k| context.iter().position(|m| m == k).unwrap())
        .collect();
    let mut out: IndexMap<Vec<u8>, f64> = IndexMap::new();
    for (outcome, p) in table {
        let key: Vec<u8> = positions.iter().map(|&i| outcome[i]).collect();
        *out.entry(key).or_insert(0.0) += p;
    }
    out.sort_keys();
    out
}
