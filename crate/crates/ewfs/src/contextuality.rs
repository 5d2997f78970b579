//! Contextuality hierarchy: noncontextual ≺ probabilistic ≺ logical ≺ strong.
//!
//! Strong and logical contextuality are decided by brute-force enumeration of
//! global outcome assignments. The probabilistic level asks whether any
//! probability distribution over global assignments reproduces every context
//! table; that feasibility question is decided in exact rational arithmetic
//! after snapping the floating-point tables to nearby small rationals, since
//! a floating-point solve near the boundary gives unreliable verdicts.

use crate::empirical::{possibilistic, EmpiricalError, EmpiricalModel, PossibilisticModel};
use crate::rational::{snap_probability, SnapError};
use crate::POSSIBILISTIC_EPS;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// Brute-force ceiling on |O|^|M|.
const MAX_GLOBALS: u64 = 1 << 24;

#[derive(Debug, Error, PartialEq)]
pub enum ContextualityError {
    #[error("scenario too large: {globals} global assignments exceed the brute-force bound")]
    TooLarge { globals: u64 },
    #[error(transparent)]
    Snap(#[from] SnapError),
    #[error(transparent)]
    Empirical(#[from] EmpiricalError),
}

pub type Result<T> = std::result::Result<T, ContextualityError>;

/// Total outcome assignment to every measurement in the scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GlobalAssignment(pub BTreeMap<String, u8>);

impl std::fmt::Display for GlobalAssignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(m, v)| format!("{m}↦{v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum HierarchyLevel {
    Noncontextual,
    Probabilistic,
    Logical,
    Strong,
}

impl std::fmt::Display for HierarchyLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            HierarchyLevel::Noncontextual => "NONCONTEXTUAL",
            HierarchyLevel::Probabilistic => "PROBABILISTIC",
            HierarchyLevel::Logical => "LOGICAL",
            HierarchyLevel::Strong => "STRONG",
        };
        write!(f, "{s}")
    }
}

/// A possible section of one context that extends to no consistent global.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogicalWitness {
    pub context: Vec<String>,
    pub section: BTreeMap<String, u8>,
}

/// Verdict of the exact feasibility question for the snapped tables.
#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    /// Explicit distribution over deterministic global assignments that
    /// reproduces every snapped table entry exactly.
    Feasible(Vec<(GlobalAssignment, BigRational)>),
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub level: HierarchyLevel,
    pub consistent_global_count: usize,
    pub logical_witness: Option<LogicalWitness>,
    /// Present when the probabilistic level had to be decided.
    pub lp: Option<LpOutcome>,
}

struct Enumeration {
    measurements: Vec<String>,
    /// Per context: positions of its measurements in `measurements`.
    context_positions: Vec<Vec<usize>>,
}

impl Enumeration {
    fn new(pm_spec: &crate::empirical::MeasurementScenarioSpec) -> Result<Self> {
        let n = pm_spec.measurements.len();
        let globals = (pm_spec.outcomes.len() as u64).checked_pow(n as u32);
        match globals {
            Some(g) if g <= MAX_GLOBALS => {}
            _ => {
                return Err(ContextualityError::TooLarge {
                    globals: globals.unwrap_or(u64::MAX),
                })
            }
        }
        let context_positions = pm_spec
            .contexts
            .iter()
            .map(|c| {
                c.iter()
                    .map(|m| {
                        pm_spec
                            .measurements
                            .iter()
                            .position(|x| x == m)
                            .expect("context measurement declared")
                    })
                    .collect()
            })
            .collect();
        Ok(Enumeration {
            measurements: pm_spec.measurements.clone(),
            context_positions,
        })
    }

    fn assignment_values(&self, index: u64) -> Vec<u8> {
        let n = self.measurements.len();
        (0..n).map(|i| (index >> (n - 1 - i) & 1) as u8).collect()
    }

    fn restrict(&self, values: &[u8], context: usize) -> Vec<u8> {
        self.context_positions[context]
            .iter()
            .map(|&p| values[p])
            .collect()
    }

    fn to_assignment(&self, values: &[u8]) -> GlobalAssignment {
        GlobalAssignment(
            self.measurements
                .iter()
                .cloned()
                .zip(values.iter().copied())
                .collect(),
        )
    }
}

/// All global assignments whose restriction to every context lies in that
/// context's support.
pub fn consistent_globals(pm: &PossibilisticModel) -> Result<Vec<GlobalAssignment>> {
    let en = Enumeration::new(&pm.spec)?;
    let mut out = Vec::new();
    for index in 0..(1u64 << en.measurements.len()) {
        let values = en.assignment_values(index);
        let consistent =
            (0..pm.spec.contexts.len()).all(|c| pm.supports[c].contains(&en.restrict(&values, c)));
        if consistent {
            out.push(en.to_assignment(&values));
        }
    }
    Ok(out)
}

/// True when not a single consistent global assignment exists.
pub fn is_strongly_contextual(pm: &PossibilisticModel) -> Result<bool> {
    Ok(consistent_globals(pm)?.is_empty())
}

/// True when some possible section of some context extends to no consistent
/// global assignment; the first such section (contexts in declaration order,
/// outcomes lexicographic) is returned as a witness.
pub fn is_logically_contextual(pm: &PossibilisticModel) -> Result<(bool, Option<LogicalWitness>)> {
    let en = Enumeration::new(&pm.spec)?;
    let globals = consistent_globals(pm)?;
    let global_values: Vec<Vec<u8>> = globals
        .iter()
        .map(|g| en.measurements.iter().map(|m| g.0[m]).collect::<Vec<u8>>())
        .collect();
    for (c, context) in pm.spec.contexts.iter().enumerate() {
        for section in &pm.supports[c] {
            let extendable = global_values
                .iter()
                .any(|values| en.restrict(values, c) == *section);
            if !extendable {
                let witness = LogicalWitness {
                    context: context.clone(),
                    section: context
                        .iter()
                        .cloned()
                        .zip(section.iter().copied())
                        .collect(),
                };
                return Ok((true, Some(witness)));
            }
        }
    }
    Ok((false, None))
}

/// True when no probability distribution over global assignments marginalises
/// to every context table. Decided in exact rational arithmetic on snapped
/// probabilities.
pub fn is_probabilistically_contextual(em: &EmpiricalModel) -> Result<bool> {
    Ok(matches!(lp_feasibility(em)?, LpOutcome::Infeasible))
}

/// Exact feasibility of weights over global assignments reproducing the
/// snapped tables.
pub fn lp_feasibility(em: &EmpiricalModel) -> Result<LpOutcome> {
    let en = Enumeration::new(&em.spec)?;
    let n_globals = 1usize << en.measurements.len();

    // Rows: one per (context, joint outcome) with its snapped probability.
    let mut rows: Vec<(usize, Vec<u8>, BigRational)> = Vec::new();
    for (c, context) in em.spec.contexts.iter().enumerate() {
        for outcome in em.spec.context_outcomes(context) {
            let p = em.probability(c, &outcome);
            rows.push((c, outcome, snap_probability(p)?));
        }
    }

    // Constraint matrix: column j contributes to a row when global j
    // restricts to that row's outcome.
    let mut matrix: Vec<Vec<BigRational>> = Vec::with_capacity(rows.len());
    let mut rhs: Vec<BigRational> = Vec::with_capacity(rows.len());
    for (c, outcome, p) in &rows {
        let mut row = vec![BigRational::zero(); n_globals];
        for (j, cell) in row.iter_mut().enumerate() {
            let values = en.assignment_values(j as u64);
            if en.restrict(&values, *c) == *outcome {
                *cell = BigRational::one();
            }
        }
        matrix.push(row);
        rhs.push(p.clone());
    }

    match phase_one_simplex(&matrix, &rhs) {
        Some(solution) => {
            let weights = solution
                .into_iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero())
                .map(|(j, w)| {
                    let values = en.assignment_values(j as u64);
                    (en.to_assignment(&values), w)
                })
                .collect();
            Ok(LpOutcome::Feasible(weights))
        }
        None => Ok(LpOutcome::Infeasible),
    }
}

/// Phase-one simplex with Bland's rule over exact rationals: find x ≥ 0 with
/// A x = b (b ≥ 0), or report infeasibility. Returns the feasible basic
/// solution when one exists.
fn phase_one_simplex(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let m = a.len();
    let n = if m > 0 { a[0].len() } else { 0 };
    // Tableau columns: n structural, m artificial, 1 rhs.
    let width = n + m + 1;
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut row = vec![BigRational::zero(); width];
        row[..n].clone_from_slice(&a[i]);
        row[n + i] = BigRational::one();
        row[width - 1] = b[i].clone();
        t.push(row);
    }
    // Objective: minimise the artificial sum. With artificials basic, the
    // reduced-cost row is the negated column sums of the structural part.
    let mut obj = vec![BigRational::zero(); width];
    for row in &t {
        for (o, v) in obj.iter_mut().zip(row.iter()) {
            *o -= v;
        }
    }
    // Artificial columns start with zero reduced cost.
    for j in n..n + m {
        obj[j] = BigRational::zero();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        // Bland: entering column = smallest index with negative reduced cost.
        let entering = (0..n + m).find(|&j| obj[j] < BigRational::zero());
        let Some(entering) = entering else { break };
        // Ratio test; Bland tie-break on smallest basis variable index.
        let mut leaving: Option<usize> = None;
        let mut best: Option<BigRational> = None;
        for (i, row) in t.iter().enumerate() {
            if row[entering] > BigRational::zero() {
                let ratio = &row[width - 1] / &row[entering];
                let better = match &best {
                    None => true,
                    Some(current) => {
                        ratio < *current
                            || (ratio == *current && basis[i] < basis[leaving.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    leaving = Some(i);
                }
            }
        }
        let leaving = leaving?; // unbounded cannot happen in phase one
                                // Pivot.
        let pivot = t[leaving][entering].clone();
        for v in t[leaving].iter_mut() {
            *v /= &pivot;
        }
        for i in 0..m {
            if i != leaving && !t[i][entering].is_zero() {
                let factor = t[i][entering].clone();
                for j in 0..width {
                    let delta = &factor * &t[leaving][j];
                    t[i][j] -= delta;
                }
            }
        }
        if !obj[entering].is_zero() {
            let factor = obj[entering].clone();
            for j in 0..width {
                let delta = &factor * &t[leaving][j];
                obj[j] -= delta;
            }
        }
        basis[leaving] = entering;
    }

    // Optimal artificial sum is -obj[rhs].
    let optimum = -obj[width - 1].clone();
    if !optimum.is_zero() {
        return None;
    }
    let mut x = vec![BigRational::zero(); n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = t[i][width - 1].clone();
        }
    }
    Some(x)
}

/// Place an empirical model in the hierarchy.
pub fn classify(em: &EmpiricalModel) -> Result<Classification> {
    classify_with_eps(em, POSSIBILISTIC_EPS)
}

/// As [`classify`], with an explicit possibilistic zero threshold.
pub fn classify_with_eps(em: &EmpiricalModel, eps: f64) -> Result<Classification> {
    let pm = possibilistic(em, eps);
    let globals = consistent_globals(&pm)?;
    if globals.is_empty() {
        return Ok(Classification {
            level: HierarchyLevel::Strong,
            consistent_global_count: 0,
            logical_witness: None,
            lp: None,
        });
    }
    let (logical, witness) = is_logically_contextual(&pm)?;
    if logical {
        return Ok(Classification {
            level: HierarchyLevel::Logical,
            consistent_global_count: globals.len(),
            logical_witness: witness,
            lp: None,
        });
    }
    let lp = lp_feasibility(em)?;
    let level = match lp {
        LpOutcome::Infeasible => HierarchyLevel::Probabilistic,
        LpOutcome::Feasible(_) => HierarchyLevel::Noncontextual,
    };
    Ok(Classification {
        level,
        consistent_global_count: globals.len(),
        logical_witness: None,
        lp: Some(lp),
    })
}
