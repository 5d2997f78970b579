//! Multi-agent consistency checking over protocol-derived constraints.
//!
//! Agents apply the possibilistic Born rule to gatherable contexts of a
//! protocol and obtain outcome constraints: the complement of a context's
//! support, compressed to parity equations when the support is exactly an
//! affine GF(2) class. A configurable assumption set decides which constraints
//! are active and over which variable space (one global outcome per
//! measurement, or one per agent–measurement pair linked by communicated
//! equalities), and a brute-force solver returns a satisfying model or a
//! minimal inconsistent core.

use crate::scenario::{MeasurementKind, Protocol, ScenarioError, Step};
use crate::POSSIBILISTIC_EPS;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReasoningError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("assumption set is incoherent: {0}")]
    IncoherentAssumptions(String),
    #[error("agent `{agent}` cannot access measurement `{measurement}`")]
    ScopeNotAccessible { agent: String, measurement: String },
    #[error("classical agreement is disabled; agents cannot communicate assignments")]
    CommunicationDisabled,
    #[error("agent `{0}` is not classical and cannot communicate assignments")]
    NotClassical(String),
    #[error("constraint system has {0} variables, beyond the brute-force bound")]
    TooManyVariables(usize),
    #[error("outcome triple {0:?} is outside the supermeasurement support")]
    UnsupportedTriple(Vec<u8>),
    #[error("protocol does not have the two-superobserver chain shape")]
    NotChainShaped,
}

pub type Result<T> = std::result::Result<T, ReasoningError>;

/// A reasoning agent. `classical` means the agent is not modelled quantumly
/// by any other agent in the protocol; `accessible` is the set of
/// measurements whose outcomes the agent believes they could still gather.
#[derive(Clone, Debug, Serialize)]
pub struct Agent {
    pub name: String,
    pub classical: bool,
    pub accessible: BTreeSet<String>,
}

/// Outcome constraint: a parity equation or an excluded set of joint
/// outcomes over named measurements.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ConstraintKind {
    Parity {
        vars: Vec<String>,
        rhs: u8,
    },
    Forbidden {
        vars: Vec<String>,
        excluded: Vec<Vec<u8>>,
    },
}

/// Whether the statement holds unconditionally or only once the owner has
/// gathered every non-own outcome in its scope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    Unconditional,
    OnGather,
}

/// An agent-owned outcome constraint derived from the Born rule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Statement {
    pub owner: String,
    pub scope: Vec<String>,
    pub kind: ConstraintKind,
    pub condition: Condition,
}

impl Statement {
    /// A directly observed outcome, e.g. a post-selected supermeasurement.
    pub fn observed(owner: &str, measurement: &str, value: u8) -> Statement {
        Statement {
            owner: owner.to_string(),
            scope: vec![measurement.to_string()],
            kind: ConstraintKind::Forbidden {
                vars: vec![measurement.to_string()],
                excluded: vec![vec![1 - value]],
            },
            condition: Condition::Unconditional,
        }
    }

    /// Paper-style rendering: parities put the owner's own measurement on the
    /// right-hand side (`b ⊕ c = 1 ⊕ u`), forbidden sets list exclusions.
    pub fn render(&self, own: Option<&str>) -> String {
        match &self.kind {
            ConstraintKind::Parity { vars, rhs } => {
                let (mut left, mut right): (Vec<&String>, Vec<&String>) = (vec![], vec![]);
                for v in vars {
                    if Some(v.as_str()) == own {
                        right.push(v);
                    } else {
                        left.push(v);
                    }
                }
                let lhs = left
                    .iter()
                    .map(|v| symbol(v))
                    .collect::<Vec<_>>()
                    .join(" ⊕ ");
                let mut rhs_s = rhs.to_string();
                for v in right {
                    rhs_s.push_str(&format!(" ⊕ {}", symbol(v)));
                }
                format!("{lhs} = {rhs_s}")
            }
            ConstraintKind::Forbidden { vars, excluded } => {
                let names = vars.iter().map(|v| symbol(v)).collect::<Vec<_>>().join(",");
                let sets = excluded
                    .iter()
                    .map(|o| {
                        format!(
                            "({})",
                            o.iter().map(u8::to_string).collect::<Vec<_>>().join(",")
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                format!("({names}) ∉ {{{sets}}}")
            }
        }
    }
}

impl std::fmt::Display for Statement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "K_{}[{}]", self.owner, self.render(None))
    }
}

/// Lower-case outcome symbol for a measurement name (`U` → `u`, `X_A` → `x_A`).
pub fn symbol(measurement: &str) -> String {
    let mut chars = measurement.chars();
    match chars.next() {
        Some(first) => first.to_lowercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Overlap equality between two agents' personal assignments of the same
/// measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Equality {
    pub left: (String, String),
    pub right: (String, String),
}

impl std::fmt::Display for Equality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "f_{}({}) = f_{}({})",
            self.left.0, self.left.1, self.right.0, self.right.1
        )
    }
}

/// Assumption toggles. Universality is implicit in running the protocol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AssumptionSet {
    /// Absoluteness of observed events: one outcome per measurement.
    pub aoe: bool,
    /// Born compatibility of the absolute assignment.
    pub born_compat_aoe: bool,
    /// Personal knowledge: per-agent outcome assignments.
    pub personal_knowledge: bool,
    /// Communicating classical agents agree on assignment overlaps.
    pub classical_agreement: bool,
    /// Born compatibility of personal assignments.
    pub born_compat_persk: bool,
    /// Born predictions valid only as conditionals on actually gathering.
    pub born_practicality: bool,
}

impl AssumptionSet {
    pub fn truth() -> Self {
        AssumptionSet {
            aoe: true,
            born_compat_aoe: true,
            ..Default::default()
        }
    }

    pub fn agreement() -> Self {
        AssumptionSet {
            personal_knowledge: true,
            classical_agreement: true,
            born_compat_persk: true,
            ..Default::default()
        }
    }

    pub fn practicality() -> Self {
        AssumptionSet {
            born_practicality: true,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.born_compat_aoe && !self.aoe {
            return Err(ReasoningError::IncoherentAssumptions(
                "Born compatibility (AOE form) requires AOE".into(),
            ));
        }
        if self.born_compat_persk && !self.personal_knowledge {
            return Err(ReasoningError::IncoherentAssumptions(
                "Born compatibility (personal form) requires personal knowledge".into(),
            ));
        }
        Ok(())
    }
}

/// Variable of the constraint system: a measurement outcome, either absolute
/// or relative to an agent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct VarKey {
    pub agent: Option<String>,
    pub measurement: String,
}

impl Serialize for VarKey {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl std::fmt::Display for VarKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.agent {
            Some(agent) => write!(f, "f_{}({})", agent, self.measurement),
            None => write!(f, "{}", symbol(&self.measurement)),
        }
    }
}

/// One constraint in the assembled system, for certificates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CoreItem {
    Statement(Statement),
    Equality(Equality),
}

impl std::fmt::Display for CoreItem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoreItem::Statement(s) => write!(f, "{s}"),
            CoreItem::Equality(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum Verdict {
    Sat {
        model: BTreeMap<VarKey, u8>,
        model_count: u64,
    },
    Unsat {
        certificate: Vec<CoreItem>,
    },
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat { .. })
    }
}

/// Facts about a protocol the checker needs: who performed what, which
/// outcomes are classical records, and which outcomes were asked for.
#[derive(Clone, Debug, Default)]
pub struct ProtocolFacts {
    pub performer: BTreeMap<String, String>,
    pub classical_vars: BTreeSet<String>,
    /// (asker, measurement) pairs realised by `Ask` steps.
    pub asks: BTreeSet<(String, String)>,
}

impl ProtocolFacts {
    pub fn from_protocol(protocol: &Protocol) -> Self {
        let mut performer = BTreeMap::new();
        let mut classical_vars = BTreeSet::new();
        let supermeasured_labs: BTreeSet<&str> = protocol
            .steps()
            .iter()
            .filter_map(|s| match s {
                Step::SuperMeasure { lab, .. } => Some(lab.as_str()),
                _ => None,
            })
            .collect();
        let mut lab_to_friend: BTreeMap<&str, &str> = BTreeMap::new();
        for step in protocol.steps() {
            match step {
                Step::FriendMeasure {
                    name, agent, lab, ..
                } => {
                    performer.insert(name.clone(), agent.clone());
                    lab_to_friend.insert(lab, name);
                    // A friend's record is classical only when no superobserver
                    // ever treats that lab as a quantum system.
                    if !supermeasured_labs.contains(lab.as_str()) {
                        classical_vars.insert(name.clone());
                    }
                }
                Step::SuperMeasure { name, agent, .. } => {
                    performer.insert(name.clone(), agent.clone());
                    classical_vars.insert(name.clone());
                }
                Step::Ask { .. } => {}
            }
        }
        let asks = protocol
            .asked_labs()
            .into_iter()
            .filter_map(|(asker, lab)| {
                lab_to_friend
                    .get(lab.as_str())
                    .map(|m| (asker, m.to_string()))
            })
            .collect();
        ProtocolFacts {
            performer,
            classical_vars,
            asks,
        }
    }

    fn owns(&self, agent: &str, measurement: &str) -> bool {
        self.performer.get(measurement).map(String::as_str) == Some(agent)
    }

    /// An ON_GATHER statement is realised when the owner asked for every
    /// scope outcome that is neither their own nor a classical record.
    fn gathered(&self, statement: &Statement) -> bool {
        statement.scope.iter().all(|m| {
            self.owns(&statement.owner, m)
                || self.classical_vars.contains(m)
                || self.asks.contains(&(statement.owner.clone(), m.clone()))
        })
    }
}

/// Derive Born-rule statements for an agent over the given contexts: the
/// complement of each context's support, compressed to parity equations when
/// the support is exactly an affine GF(2) class.
pub fn derive_statements(
    protocol: &Protocol,
    agent: &Agent,
    contexts: &[Vec<String>],
) -> Result<Vec<Statement>> {
    let facts = ProtocolFacts::from_protocol(protocol);
    let mut out = Vec::new();
    for context in contexts {
        for m in context {
            if !agent.accessible.contains(m) {
                return Err(ReasoningError::ScopeNotAccessible {
                    agent: agent.name.clone(),
                    measurement: m.clone(),
                });
            }
        }
        let vars: Vec<&str> = context.iter().map(String::as_str).collect();
        let dist = protocol.joint_distribution(&vars)?;
        let support: BTreeSet<Vec<u8>> = dist
            .support(POSSIBILISTIC_EPS)
            .into_iter()
            .filter(|o| o.iter().all(|&v| v <= 1))
            .collect();
        let condition = if context
            .iter()
            .all(|m| facts.owns(&agent.name, m) || facts.classical_vars.contains(m))
        {
            Condition::Unconditional
        } else {
            Condition::OnGather
        };
        out.extend(support_to_statements(
            &agent.name,
            context,
            &support,
            condition,
        ));
    }
    Ok(out)
}

/// Encode a support as statements: nothing for full support, parity equations
/// for affine classes, otherwise the raw forbidden set.
fn support_to_statements(
    owner: &str,
    context: &[String],
    support: &BTreeSet<Vec<u8>>,
    condition: Condition,
) -> Vec<Statement> {
    let k = context.len();
    let full = 1usize << k;
    if support.len() == full {
        return Vec::new();
    }
    // Collect every parity equation valid on the support.
    let mut valid: Vec<(usize, u8)> = Vec::new();
    for mask in 1..full {
        let mut rhs: Option<u8> = None;
        let mut constant = true;
        for s in support {
            let parity = (0..k).fold(0u8, |acc, i| {
                if mask >> (k - 1 - i) & 1 == 1 {
                    acc ^ s[i]
                } else {
                    acc
                }
            });
            match rhs {
                None => rhs = Some(parity),
                Some(r) if r != parity => {
                    constant = false;
                    break;
                }
                _ => {}
            }
        }
        if constant {
            if let Some(r) = rhs {
                valid.push((mask, r));
            }
        }
    }
    // Do the valid parities cut out exactly the support?
    let cut: BTreeSet<Vec<u8>> = (0..full)
        .map(|i| {
            (0..k)
                .map(|j| (i >> (k - 1 - j) & 1) as u8)
                .collect::<Vec<u8>>()
        })
        .filter(|o| {
            valid.iter().all(|(mask, rhs)| {
                let parity = (0..k).fold(0u8, |acc, i| {
                    if mask >> (k - 1 - i) & 1 == 1 {
                        acc ^ o[i]
                    } else {
                        acc
                    }
                });
                parity == *rhs
            })
        })
        .collect();
    if !valid.is_empty() && cut == *support {
        // Reduce to an independent set by GF(2) elimination on (mask, rhs).
        let mut basis: Vec<(usize, u8)> = Vec::new();
        for &(mask, rhs) in &valid {
            let (mut m, mut r) = (mask, rhs);
            for &(bm, br) in &basis {
                let pivot = highest_bit(bm);
                if m >> pivot & 1 == 1 {
                    m ^= bm;
                    r ^= br;
                }
            }
            if m != 0 {
                basis.push((m, r));
            }
        }
        return basis
            .into_iter()
            .map(|(mask, rhs)| {
                let vars: Vec<String> = (0..k)
                    .filter(|i| mask >> (k - 1 - i) & 1 == 1)
                    .map(|i| context[i].clone())
                    .collect();
                Statement {
                    owner: owner.to_string(),
                    scope: context.to_vec(),
                    kind: ConstraintKind::Parity { vars, rhs },
                    condition,
                }
            })
            .collect();
    }
    let excluded: Vec<Vec<u8>> = (0..full)
        .map(|i| {
            (0..k)
                .map(|j| (i >> (k - 1 - j) & 1) as u8)
                .collect::<Vec<u8>>()
        })
        .filter(|o| !support.contains(o))
        .collect();
    vec![Statement {
        owner: owner.to_string(),
        scope: context.to_vec(),
        kind: ConstraintKind::Forbidden {
            vars: context.to_vec(),
            excluded,
        },
        condition,
    }]
}

fn highest_bit(mask: usize) -> usize {
    usize::BITS as usize - 1 - mask.leading_zeros() as usize
}

/// Classical communication of assignments: the receiver takes over the
/// statements and both agents must agree on the overlap of their assignment
/// scopes.
pub fn communicate(
    sender: &Agent,
    receiver: &Agent,
    statements: &[Statement],
    assumptions: &AssumptionSet,
) -> Result<(Vec<Statement>, Vec<Equality>)> {
    if !assumptions.classical_agreement {
        return Err(ReasoningError::CommunicationDisabled);
    }
    for agent in [sender, receiver] {
        if !agent.classical {
            return Err(ReasoningError::NotClassical(agent.name.clone()));
        }
    }
    if sender.name == receiver.name {
        return Ok((statements.to_vec(), Vec::new()));
    }
    let equalities = sender
        .accessible
        .intersection(&receiver.accessible)
        .map(|m| Equality {
            left: (sender.name.clone(), m.clone()),
            right: (receiver.name.clone(), m.clone()),
        })
        .collect();
    Ok((statements.to_vec(), equalities))
}

/// Decide satisfiability of the active constraints under the assumption set.
pub fn check_consistency(
    statements: &[Statement],
    equalities: &[Equality],
    assumptions: &AssumptionSet,
    facts: &ProtocolFacts,
) -> Result<Verdict> {
    assumptions.validate()?;
    let per_agent = assumptions.personal_knowledge;

    let active_statements: Vec<&Statement> = statements
        .iter()
        .filter(|s| {
            if assumptions.born_practicality {
                s.condition == Condition::Unconditional || facts.gathered(s)
            } else {
                (assumptions.aoe && assumptions.born_compat_aoe)
                    || (assumptions.personal_knowledge && assumptions.born_compat_persk)
            }
        })
        .collect();
    let active_equalities: Vec<&Equality> = if per_agent && assumptions.classical_agreement {
        equalities.iter().collect()
    } else {
        Vec::new()
    };

    let constraints: Vec<CoreItem> = active_statements
        .iter()
        .map(|s| CoreItem::Statement((*s).clone()))
        .chain(
            active_equalities
                .iter()
                .map(|e| CoreItem::Equality((*e).clone())),
        )
        .collect();
    solve(&constraints, per_agent)
}

fn var_key(per_agent: bool, owner: &str, measurement: &str) -> VarKey {
    VarKey {
        agent: per_agent.then(|| owner.to_string()),
        measurement: measurement.to_string(),
    }
}

fn collect_vars(constraints: &[CoreItem], per_agent: bool) -> Vec<VarKey> {
    let mut vars: Vec<VarKey> = Vec::new();
    let mut push = |key: VarKey| {
        if !vars.contains(&key) {
            vars.push(key);
        }
    };
    for item in constraints {
        match item {
            CoreItem::Statement(s) => {
                for m in &s.scope {
                    push(var_key(per_agent, &s.owner, m));
                }
            }
            CoreItem::Equality(e) => {
                push(var_key(per_agent, &e.left.0, &e.left.1));
                push(var_key(per_agent, &e.right.0, &e.right.1));
            }
        }
    }
    vars
}

fn solve(constraints: &[CoreItem], per_agent: bool) -> Result<Verdict> {
    let vars = collect_vars(constraints, per_agent);
    if vars.len() > 24 {
        return Err(ReasoningError::TooManyVariables(vars.len()));
    }
    let index_of = |key: &VarKey| vars.iter().position(|v| v == key).unwrap();

    // Pre-resolve each constraint to variable indices.
    enum Compiled {
        Parity {
            idxs: Vec<usize>,
            rhs: u8,
        },
        Forbidden {
            idxs: Vec<usize>,
            excluded: Vec<Vec<u8>>,
        },
        Equal {
            a: usize,
            b: usize,
        },
    }
    let compiled: Vec<Compiled> = constraints
        .iter()
        .map(|item| match item {
            CoreItem::Statement(s) => match &s.kind {
                ConstraintKind::Parity { vars: pv, rhs } => Compiled::Parity {
                    idxs: pv
                        .iter()
                        .map(|m| index_of(&var_key(per_agent, &s.owner, m)))
                        .collect(),
                    rhs: *rhs,
                },
                ConstraintKind::Forbidden { vars: fv, excluded } => Compiled::Forbidden {
                    idxs: fv
                        .iter()
                        .map(|m| index_of(&var_key(per_agent, &s.owner, m)))
                        .collect(),
                    excluded: excluded.clone(),
                },
            },
            CoreItem::Equality(e) => Compiled::Equal {
                a: index_of(&var_key(per_agent, &e.left.0, &e.left.1)),
                b: index_of(&var_key(per_agent, &e.right.0, &e.right.1)),
            },
        })
        .collect();

    let n = vars.len();
    let mut first_model: Option<u64> = None;
    let mut model_count = 0u64;
    for assignment in 0..(1u64 << n) {
        let bit = |i: usize| (assignment >> i & 1) as u8;
        let ok = compiled.iter().all(|c| match c {
            Compiled::Parity { idxs, rhs } => idxs.iter().fold(0u8, |acc, &i| acc ^ bit(i)) == *rhs,
            Compiled::Forbidden { idxs, excluded } => {
                let tuple: Vec<u8> = idxs.iter().map(|&i| bit(i)).collect();
                !excluded.contains(&tuple)
            }
            Compiled::Equal { a, b } => bit(*a) == bit(*b),
        });
        if ok {
            model_count += 1;
            if first_model.is_none() {
                first_model = Some(assignment);
            }
        }
    }

    match first_model {
        Some(assignment) => {
            let model = vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), (assignment >> i & 1) as u8))
                .collect();
            Ok(Verdict::Sat { model, model_count })
        }
        None => {
            // Minimal inconsistent core by greedy deletion in derivation order.
            let mut core: Vec<CoreItem> = constraints.to_vec();
            let mut i = 0;
            while i < core.len() {
                let mut reduced = core.clone();
                reduced.remove(i);
                let still_unsat = solve_plain(&reduced, per_agent)?.is_none();
                if still_unsat {
                    core.remove(i);
                } else {
                    i += 1;
                }
            }
            Ok(Verdict::Unsat { certificate: core })
        }
    }
}

/// Plain SAT query used by core minimisation: first model or `None`.
fn solve_plain(constraints: &[CoreItem], per_agent: bool) -> Result<Option<u64>> {
    match solve_no_core(constraints, per_agent)? {
        Verdict::Sat { .. } => Ok(Some(0)),
        Verdict::Unsat { .. } => Ok(None),
    }
}

fn solve_no_core(constraints: &[CoreItem], per_agent: bool) -> Result<Verdict> {
    let vars = collect_vars(constraints, per_agent);
    if vars.len() > 24 {
        return Err(ReasoningError::TooManyVariables(vars.len()));
    }
    let index_of = |key: &VarKey| vars.iter().position(|v| v == key).unwrap();
    let n = vars.len();
    for assignment in 0..(1u64 << n) {
        let bit = |i: usize| (assignment >> i & 1) as u8;
        let ok = constraints.iter().all(|item| match item {
            CoreItem::Statement(s) => match &s.kind {
                ConstraintKind::Parity { vars: pv, rhs } => {
                    pv.iter()
                        .map(|m| bit(index_of(&var_key(per_agent, &s.owner, m))))
                        .fold(0u8, |acc, b| acc ^ b)
                        == *rhs
                }
                ConstraintKind::Forbidden { vars: fv, excluded } => {
                    let tuple: Vec<u8> = fv
                        .iter()
                        .map(|m| bit(index_of(&var_key(per_agent, &s.owner, m))))
                        .collect();
                    !excluded.contains(&tuple)
                }
            },
            CoreItem::Equality(e) => {
                bit(index_of(&var_key(per_agent, &e.left.0, &e.left.1)))
                    == bit(index_of(&var_key(per_agent, &e.right.0, &e.right.1)))
            }
        });
        if ok {
            return Ok(Verdict::Sat {
                model: BTreeMap::new(),
                model_count: 1,
            });
        }
    }
    Ok(Verdict::Unsat {
        certificate: Vec::new(),
    })
}

/// GF(2) bookkeeping over a certificate of parity constraints: summing the
/// equations cancels every variable while the right-hand sides sum to 1.
#[derive(Clone, Debug, Serialize)]
pub struct Gf2Check {
    pub lhs_cancels: bool,
    pub rhs_sum: u8,
}

pub fn gf2_sum_check(certificate: &[CoreItem]) -> Option<Gf2Check> {
    let mut coefficients: BTreeMap<String, u8> = BTreeMap::new();
    let mut rhs_sum = 0u8;
    for item in certificate {
        match item {
            CoreItem::Statement(Statement {
                kind: ConstraintKind::Parity { vars, rhs },
                ..
            }) => {
                for v in vars {
                    *coefficients.entry(v.clone()).or_insert(0) ^= 1;
                }
                rhs_sum ^= rhs;
            }
            _ => return None,
        }
    }
    Some(Gf2Check {
        lhs_cancels: coefficients.values().all(|&c| c == 0),
        rhs_sum,
    })
}

/// Superobserver agents of a protocol, each with their own supermeasurement
/// plus the friend measurements on other labs as accessible outcomes.
pub fn superobserver_agents(protocol: &Protocol) -> Vec<Agent> {
    let steps = protocol.steps();
    let mut agents = Vec::new();
    for step in steps {
        if let Step::SuperMeasure {
            name, agent, lab, ..
        } = step
        {
            let mut accessible: BTreeSet<String> = BTreeSet::new();
            accessible.insert(name.clone());
            for other in steps {
                if let Step::FriendMeasure {
                    name: fname,
                    lab: flab,
                    ..
                } = other
                {
                    if flab != lab {
                        accessible.insert(fname.clone());
                    }
                }
            }
            agents.push(Agent {
                name: agent.clone(),
                classical: true,
                accessible,
            });
        }
    }
    agents
}

/// An external classical agent (performs no measurement) with access to every
/// classically recorded outcome.
pub fn external_agent(protocol: &Protocol, name: &str) -> Agent {
    let facts = ProtocolFacts::from_protocol(protocol);
    Agent {
        name: name.to_string(),
        classical: true,
        accessible: facts.classical_vars,
    }
}

/// Default reasoning context of a superobserver: their own supermeasurement
/// together with the friend outcomes they believe they can still gather.
pub fn superobserver_context(protocol: &Protocol, agent: &Agent) -> Vec<String> {
    let mut context = Vec::new();
    for m in protocol.measurements() {
        if m.agent == agent.name && m.kind == MeasurementKind::Super {
            context.push(m.name);
        }
    }
    for m in protocol.measurements() {
        if m.kind == MeasurementKind::Friend && agent.accessible.contains(&m.name) {
            context.push(m.name);
        }
    }
    context
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NogoVariant {
    Truth,
    Agreement,
    Practicality,
}

impl std::fmt::Display for NogoVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NogoVariant::Truth => "truth",
            NogoVariant::Agreement => "agreement",
            NogoVariant::Practicality => "practicality",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NogoReport {
    pub variant: NogoVariant,
    pub assumptions: AssumptionSet,
    pub statements: Vec<Statement>,
    pub equalities: Vec<Equality>,
    pub verdict: Verdict,
    pub gf2_check: Option<Gf2Check>,
    pub resolutions: Vec<RenderedStatement>,
    pub expected_verdict_reproduced: bool,
}

/// Run the full derive → communicate → check pipeline for one variant.
pub fn run_nogo(protocol: &Protocol, variant: NogoVariant) -> Result<NogoReport> {
    let assumptions = match variant {
        NogoVariant::Truth => AssumptionSet::truth(),
        NogoVariant::Agreement => AssumptionSet::agreement(),
        NogoVariant::Practicality => AssumptionSet::practicality(),
    };
    run_nogo_with(protocol, variant, assumptions)
}

/// Same pipeline with explicit assumption toggles (for necessity checks).
pub fn run_nogo_with(
    protocol: &Protocol,
    variant: NogoVariant,
    assumptions: AssumptionSet,
) -> Result<NogoReport> {
    let facts = ProtocolFacts::from_protocol(protocol);
    let supers = superobserver_agents(protocol);
    let zeno = external_agent(protocol, "Zeno");

    let mut statements = Vec::new();
    for agent in &supers {
        let context = superobserver_context(protocol, agent);
        statements.extend(derive_statements(protocol, agent, &[context])?);
    }
    let zeno_context: Vec<String> = zeno.accessible.iter().cloned().collect();
    statements.extend(derive_statements(protocol, &zeno, &[zeno_context])?);

    let mut equalities = Vec::new();
    if assumptions.classical_agreement {
        // Superobservers communicate pairwise and each reports to Zeno.
        for i in 0..supers.len() {
            for j in i + 1..supers.len() {
                let (_, eq) = communicate(&supers[i], &supers[j], &[], &assumptions)?;
                equalities.extend(eq);
            }
        }
        for s in &supers {
            let (_, eq) = communicate(s, &zeno, &[], &assumptions)?;
            equalities.extend(eq);
        }
    }

    let verdict = check_consistency(&statements, &equalities, &assumptions, &facts)?;
    let gf2_check = match (&verdict, variant) {
        (Verdict::Unsat { certificate }, NogoVariant::Truth) => gf2_sum_check(certificate),
        _ => None,
    };
    let resolutions = if assumptions.born_practicality {
        let mut out = Vec::new();
        for agent in &supers {
            out.extend(render_resolution_statements(protocol, agent)?);
        }
        out
    } else {
        Vec::new()
    };
    let expected_sat = matches!(variant, NogoVariant::Practicality);
    let expected_verdict_reproduced = verdict.is_sat() == expected_sat;
    Ok(NogoReport {
        variant,
        assumptions,
        statements,
        equalities,
        verdict,
        gf2_check,
        resolutions,
        expected_verdict_reproduced,
    })
}

/// One conditional statement of the resolution, as an agent would phrase it.
#[derive(Clone, Debug, Serialize)]
pub struct RenderedStatement {
    pub speaker: String,
    pub scope: Vec<String>,
    pub condition: String,
    pub claim: String,
    pub caveat: String,
    pub text: String,
    pub machine: Statement,
}

const CAVEAT: &str = "as long as none of our memories about our outcomes are altered";

/// Render an agent's ON_GATHER statements as conditionals: parity statements
/// become a single ask-and-find conditional; a forbidden-set statement in a
/// two-superobserver chain unrolls into the chain of hypothetical asks.
pub fn render_resolution_statements(
    protocol: &Protocol,
    agent: &Agent,
) -> Result<Vec<RenderedStatement>> {
    let facts = ProtocolFacts::from_protocol(protocol);
    let context = superobserver_context(protocol, agent);
    if context.is_empty() {
        return Ok(Vec::new());
    }
    let statements: Vec<Statement> = derive_statements(protocol, agent, &[context])?
        .into_iter()
        .filter(|s| s.condition == Condition::OnGather)
        .collect();
    let mut out = Vec::new();
    for statement in statements {
        match &statement.kind {
            ConstraintKind::Parity { .. } => {
                let own: Vec<&String> = statement
                    .scope
                    .iter()
                    .filter(|m| facts.owns(&agent.name, m))
                    .collect();
                let askees: Vec<String> = statement
                    .scope
                    .iter()
                    .filter(|m| !facts.owns(&agent.name, m))
                    .map(|m| facts.performer[m].clone())
                    .collect();
                let asked_symbols: Vec<String> = statement
                    .scope
                    .iter()
                    .filter(|m| !facts.owns(&agent.name, m))
                    .map(|m| symbol(m))
                    .collect();
                let claim = statement.render(own.first().map(|m| m.as_str()));
                let condition = format!(
                    "I ({}) ask {} for their outcomes {}",
                    agent.name,
                    join_names(&askees),
                    asked_symbols.join(", ")
                );
                let text = format!("If {condition}, I will find that {claim} ({CAVEAT}).");
                out.push(RenderedStatement {
                    speaker: agent.name.clone(),
                    scope: statement.scope.clone(),
                    condition,
                    claim,
                    caveat: CAVEAT.to_string(),
                    text,
                    machine: statement.clone(),
                });
            }
            ConstraintKind::Forbidden { .. } => {
                out.extend(render_chain_statements(protocol, agent)?);
            }
        }
    }
    Ok(out)
}

fn join_names(names: &[String]) -> String {
    match names.len() {
        0 => String::new(),
        1 => names[0].clone(),
        _ => format!(
            "{} and {}",
            names[..names.len() - 1].join(", "),
            names[names.len() - 1]
        ),
    }
}

/// The chain shape of a two-superobserver protocol, from one superobserver's
/// point of view.
struct ChainShape {
    own_super: String,
    own_friend: String,
    other_friend: String,
    other_super: String,
}

fn chain_shape(protocol: &Protocol, agent: &Agent) -> Result<ChainShape> {
    let mut supers: Vec<(&str, &str, &str)> = Vec::new(); // (name, agent, lab)
    let mut friends: Vec<(&str, &str)> = Vec::new(); // (name, lab)
    for step in protocol.steps() {
        match step {
            Step::SuperMeasure {
                name, agent, lab, ..
            } => supers.push((name, agent, lab)),
            Step::FriendMeasure { name, lab, .. } => friends.push((name, lab)),
            Step::Ask { .. } => {}
        }
    }
    if supers.len() != 2 || friends.len() != 2 {
        return Err(ReasoningError::NotChainShaped);
    }
    let (own, other) = if supers[0].1 == agent.name {
        (supers[0], supers[1])
    } else if supers[1].1 == agent.name {
        (supers[1], supers[0])
    } else {
        return Err(ReasoningError::NotChainShaped);
    };
    let own_friend = friends
        .iter()
        .find(|(_, lab)| *lab == own.2)
        .ok_or(ReasoningError::NotChainShaped)?;
    let other_friend = friends
        .iter()
        .find(|(_, lab)| *lab == other.2)
        .ok_or(ReasoningError::NotChainShaped)?;
    Ok(ChainShape {
        own_super: own.0.to_string(),
        own_friend: own_friend.0.to_string(),
        other_friend: other_friend.0.to_string(),
        other_super: other.0.to_string(),
    })
}

/// Forced value of `unknown` in a two-variable context given the other
/// variable's value; `None` when both values stay possible.
fn forced_value(
    protocol: &Protocol,
    context: (&str, &str),
    known: (&str, u8),
) -> Result<Option<u8>> {
    let dist = protocol.joint_distribution(&[context.0, context.1])?;
    let known_pos = if context.0 == known.0 { 0 } else { 1 };
    let unknown_pos = 1 - known_pos;
    let candidates: Vec<u8> = dist
        .support(POSSIBILISTIC_EPS)
        .into_iter()
        .filter(|o| o.iter().all(|&v| v <= 1) && o[known_pos] == known.1)
        .map(|o| o[unknown_pos])
        .collect();
    Ok(match candidates.as_slice() {
        [single] => Some(*single),
        _ => None,
    })
}

/// Outcome display name (`ok`, `fail`, …) for a measurement's value.
pub fn outcome_name(protocol: &Protocol, measurement: &str, value: u8) -> String {
    if let Ok(Step::SuperMeasure { basis, .. }) = protocol.find_step(measurement) {
        if let Some(label) = basis.label_for(value) {
            return label.name.clone();
        }
    }
    value.to_string()
}

/// Unroll the reasoning chain of a two-superobserver protocol into the three
/// conditional statements the agent would make under the resolution.
fn render_chain_statements(protocol: &Protocol, agent: &Agent) -> Result<Vec<RenderedStatement>> {
    let shape = chain_shape(protocol, agent)?;
    let facts = ProtocolFacts::from_protocol(protocol);
    let own_value = 0u8; // the paradox branch conditions on the owner's `ok`
    let chain: [(&str, &str); 3] = [
        (&shape.own_super, &shape.other_friend),
        (&shape.own_friend, &shape.other_friend),
        (&shape.own_friend, &shape.other_super),
    ];
    let mut known: (String, u8) = (shape.own_super.clone(), own_value);
    let mut out = Vec::new();
    for (link_index, (x, y)) in chain.iter().enumerate() {
        let unknown = if known.0 == *x { *y } else { *x };
        let Some(forced) = forced_value(protocol, (x, y), (&known.0, known.1))? else {
            break;
        };
        let asker = if link_index == 0 {
            format!("I ({})", agent.name)
        } else {
            facts.performer[&known.0].clone()
        };
        let askee = facts.performer[unknown].clone();
        let condition = if link_index == 0 {
            format!("{asker} ask {askee} for their outcome")
        } else {
            format!(
                "{} obtains {} = {} and asks {} for their outcome",
                asker,
                symbol(&known.0),
                outcome_name(protocol, &known.0, known.1),
                askee
            )
        };
        let claim = format!(
            "{} = {}",
            symbol(unknown),
            outcome_name(protocol, unknown, forced)
        );
        let reply = format!("{askee} replies that {claim}");
        let text = format!("If {condition}, {reply} ({CAVEAT}).");
        let scope = vec![x.to_string(), y.to_string()];
        let dist_support: BTreeSet<Vec<u8>> = protocol
            .joint_distribution(&[x, y])?
            .support(POSSIBILISTIC_EPS)
            .into_iter()
            .filter(|o| o.iter().all(|&v| v <= 1))
            .collect();
        let machine =
            support_to_statements(&agent.name, &scope, &dist_support, Condition::OnGather)
                .into_iter()
                .next()
                .unwrap_or_else(|| Statement {
                    owner: agent.name.clone(),
                    scope: scope.clone(),
                    kind: ConstraintKind::Forbidden {
                        vars: scope.clone(),
                        excluded: Vec::new(),
                    },
                    condition: Condition::OnGather,
                });
        out.push(RenderedStatement {
            speaker: agent.name.clone(),
            scope,
            condition,
            claim,
            caveat: CAVEAT.to_string(),
            text,
            machine,
        });
        known = (unknown.to_string(), forced);
    }
    Ok(out)
}

/// One link of the post-selected reasoning chain.
#[derive(Clone, Debug, Serialize)]
pub struct ChainLink {
    pub context: Vec<String>,
    pub given: (String, u8),
    pub forced: (String, u8),
    /// Display names of the given/forced outcomes (`ok`, `fail`, digits).
    pub given_name: String,
    pub forced_name: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrChainReport {
    pub postselect: Vec<(String, u8)>,
    pub postselect_names: Vec<String>,
    pub postselect_probability: f64,
    pub links: Vec<ChainLink>,
    /// Present when the chain's final forced value conflicts with the
    /// post-selection.
    pub contradiction: Option<String>,
}

/// Chain single-variable eliminations through the contexts
/// (U,B) → (A,B) → (A,W) of a two-superobserver protocol, post-selected on
/// the supermeasurement outcomes.
pub fn fr_chain(protocol: &Protocol, u_value: u8, w_value: u8) -> Result<FrChainReport> {
    let supers: Vec<String> = protocol
        .measurements()
        .into_iter()
        .filter(|m| m.kind == MeasurementKind::Super)
        .map(|m| m.name)
        .collect();
    if supers.len() != 2 {
        return Err(ReasoningError::NotChainShaped);
    }
    let (u_name, w_name) = (supers[0].clone(), supers[1].clone());
    for (name, value) in [(&u_name, u_value), (&w_name, w_value)] {
        if let Ok(Step::SuperMeasure { basis, .. }) = protocol.find_step(name) {
            if basis.label_for(value).is_none() {
                return Err(ScenarioError::UnknownOutcome {
                    measurement: name.clone(),
                    value,
                }
                .into());
            }
        }
    }
    let dist = protocol.joint_distribution(&[&u_name, &w_name])?;
    let probability = dist.probability(&[u_value, w_value]);
    if probability < POSSIBILISTIC_EPS {
        return Err(ScenarioError::ImpossiblePostSelection { probability }.into());
    }

    let ursula = superobserver_agents(protocol)
        .into_iter()
        .find(|a| a.accessible.contains(&u_name))
        .ok_or(ReasoningError::NotChainShaped)?;
    let shape = chain_shape(protocol, &ursula)?;
    let chain: [(&str, &str); 3] = [
        (&shape.own_super, &shape.other_friend),
        (&shape.own_friend, &shape.other_friend),
        (&shape.own_friend, &shape.other_super),
    ];
    let mut known = (shape.own_super.clone(), u_value);
    let mut links = Vec::new();
    for (x, y) in chain {
        let unknown = if known.0 == x { y } else { x };
        let Some(forced) = forced_value(protocol, (x, y), (&known.0, known.1))? else {
            break;
        };
        links.push(ChainLink {
            context: vec![x.to_string(), y.to_string()],
            given_name: outcome_name(protocol, &known.0, known.1),
            forced_name: outcome_name(protocol, unknown, forced),
            given: (known.0.clone(), known.1),
            forced: (unknown.to_string(), forced),
        });
        known = (unknown.to_string(), forced);
    }
    let contradiction = links
        .last()
        .filter(|link| link.forced.0 == w_name && link.forced.1 != w_value)
        .map(|link| {
            format!(
                "derived {} = {} contradicts the post-selected {} = {}",
                symbol(&w_name),
                outcome_name(protocol, &w_name, link.forced.1),
                symbol(&w_name),
                outcome_name(protocol, &w_name, w_value)
            )
        });
    Ok(FrChainReport {
        postselect_names: vec![
            outcome_name(protocol, &u_name, u_value),
            outcome_name(protocol, &w_name, w_value),
        ],
        postselect: vec![(u_name, u_value), (w_name, w_value)],
        postselect_probability: probability,
        links,
        contradiction,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ModifiedFrPrediction {
    pub speaker: String,
    pub statement: Statement,
    /// Squared projection amplitude of the excluded event.
    pub probability: f64,
    pub text: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModifiedFrReport {
    pub predictions: Vec<ModifiedFrPrediction>,
    pub postselect: Vec<(String, u8)>,
    pub postselect_names: Vec<String>,
    pub verdict: Verdict,
}

/// The variant where only classical agents reason: Ursula excludes
/// (u=ok, b=0), Wigner excludes (a=1, w=ok), and an external agent excludes
/// (a=0, b=1); combining them with the post-selection u=ok, w=ok is
/// inconsistent.
pub fn modified_fr(protocol: &Protocol) -> Result<ModifiedFrReport> {
    let facts = ProtocolFacts::from_protocol(protocol);
    let supers = superobserver_agents(protocol);
    if supers.len() != 2 {
        return Err(ReasoningError::NotChainShaped);
    }
    let shape = chain_shape(protocol, &supers[0])?;
    let friends: Vec<String> = protocol
        .measurements()
        .into_iter()
        .filter(|m| m.kind == MeasurementKind::Friend)
        .map(|m| m.name)
        .collect();
    let zeno = Agent {
        name: "Zeno".to_string(),
        classical: true,
        accessible: friends.iter().cloned().collect(),
    };

    let mut statements = Vec::new();
    let mut predictions = Vec::new();
    let mut push_prediction =
        |speaker: &str, statement: Statement, probability: f64, text: String| {
            predictions.push(ModifiedFrPrediction {
                speaker: speaker.to_string(),
                statement: statement.clone(),
                probability,
                text,
            });
            statements.push(statement);
        };

    for agent in &supers {
        let context = superobserver_context(protocol, agent);
        let derived = derive_statements(protocol, agent, std::slice::from_ref(&context))?;
        let refs: Vec<&str> = context.iter().map(String::as_str).collect();
        let dist = protocol.joint_distribution(&refs)?;
        for statement in derived {
            if let ConstraintKind::Forbidden { vars, excluded } = &statement.kind {
                for outcome in excluded {
                    let probability = dist.probability(outcome);
                    let described = vars
                        .iter()
                        .zip(outcome)
                        .map(|(m, &v)| format!("{} = {}", symbol(m), outcome_name(protocol, m, v)))
                        .collect::<Vec<_>>()
                        .join(", ");
                    let text = format!("{} excludes ({described})", agent.name);
                    push_prediction(&agent.name, statement.clone(), probability, text);
                }
            }
        }
    }

    // The external agent's prediction over both friend outcomes.
    let friend_context: Vec<String> = friends.clone();
    let derived = derive_statements(protocol, &zeno, std::slice::from_ref(&friend_context))?;
    let refs: Vec<&str> = friend_context.iter().map(String::as_str).collect();
    let dist = protocol.joint_distribution(&refs)?;
    for statement in derived {
        if let ConstraintKind::Forbidden { vars, excluded } = &statement.kind {
            for outcome in excluded {
                let probability = dist.probability(outcome);
                let described = vars
                    .iter()
                    .zip(outcome)
                    .map(|(m, &v)| format!("{} = {v}", symbol(m)))
                    .collect::<Vec<_>>()
                    .join(", ");
                let text = format!("Zeno excludes ({described})");
                push_prediction("Zeno", statement.clone(), probability, text);
            }
        }
    }

    // Post-select both supermeasurements on ok.
    let postselect = vec![
        (shape.own_super.clone(), 0u8),
        (shape.other_super.clone(), 0u8),
    ];
    statements.push(Statement::observed(&supers[0].name, &shape.own_super, 0));
    statements.push(Statement::observed(&supers[1].name, &shape.other_super, 0));

    let verdict = check_consistency(&statements, &[], &AssumptionSet::truth(), &facts)?;
    let postselect_names = postselect
        .iter()
        .map(|(m, v)| outcome_name(protocol, m, *v))
        .collect();
    Ok(ModifiedFrReport {
        predictions,
        postselect,
        postselect_names,
        verdict,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpeckerReport {
    pub substitution: Vec<(String, u8)>,
    pub parities: Vec<Statement>,
    pub verdict: Verdict,
}

/// Post-select the three supermeasurement outcomes of a three-superobserver
/// protocol and substitute them into the superobserver parities, leaving
/// three pairwise constraints over the friend outcomes.
pub fn specker_triangle(protocol: &Protocol, u: u8, v: u8, w: u8) -> Result<SpeckerReport> {
    let supers: Vec<String> = protocol
        .measurements()
        .into_iter()
        .filter(|m| m.kind == MeasurementKind::Super)
        .map(|m| m.name)
        .collect();
    if supers.len() != 3 {
        return Err(ReasoningError::NotChainShaped);
    }
    let values = [u, v, w];
    let refs: Vec<&str> = supers.iter().map(String::as_str).collect();
    let dist = protocol.joint_distribution(&refs)?;
    if dist.probability(&values) < POSSIBILISTIC_EPS {
        return Err(ReasoningError::UnsupportedTriple(values.to_vec()));
    }

    let mut parities = Vec::new();
    for agent in superobserver_agents(protocol) {
        let context = superobserver_context(protocol, &agent);
        for statement in derive_statements(protocol, &agent, &[context])? {
            if let ConstraintKind::Parity { vars, rhs } = &statement.kind {
                // Substitute the post-selected supermeasurement values.
                let mut residual_vars = Vec::new();
                let mut residual_rhs = *rhs;
                for var in vars {
                    match supers.iter().position(|s| s == var) {
                        Some(i) => residual_rhs ^= values[i],
                        None => residual_vars.push(var.clone()),
                    }
                }
                parities.push(Statement {
                    owner: agent.name.clone(),
                    scope: residual_vars.clone(),
                    kind: ConstraintKind::Parity {
                        vars: residual_vars,
                        rhs: residual_rhs,
                    },
                    condition: Condition::Unconditional,
                });
            }
        }
    }
    let constraints: Vec<CoreItem> = parities
        .iter()
        .map(|s| CoreItem::Statement(s.clone()))
        .collect();
    let verdict = solve(&constraints, false)?;
    Ok(SpeckerReport {
        substitution: supers.into_iter().zip(values).collect(),
        parities,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{fr_protocol, ghz_fr_protocol};

    fn ghz_statements() -> (Vec<Statement>, ProtocolFacts) {
        let p = ghz_fr_protocol();
        let facts = ProtocolFacts::from_protocol(&p);
        let mut statements = Vec::new();
        for agent in superobserver_agents(&p) {
            let ctx = superobserver_context(&p, &agent);
            statements.extend(derive_statements(&p, &agent, &[ctx]).unwrap());
        }
        let zeno = external_agent(&p, "Zeno");
        let ctx: Vec<String> = zeno.accessible.iter().cloned().collect();
        statements.extend(derive_statements(&p, &zeno, &[ctx]).unwrap());
        (statements, facts)
    }

    #[test]
    fn ursula_derives_the_parity() {
        let p = ghz_fr_protocol();
        let agents = superobserver_agents(&p);
        let ursula = agents.iter().find(|a| a.name == "Ursula").unwrap();
        let ctx = superobserver_context(&p, ursula);
        assert_eq!(ctx, vec!["U", "B", "C"]);
        let statements = derive_statements(&p, ursula, &[ctx]).unwrap();
        assert_eq!(statements.len(), 1);
        let s = &statements[0];
        assert_eq!(s.condition, Condition::OnGather);
        match &s.kind {
            ConstraintKind::Parity { vars, rhs } => {
                assert_eq!(vars, &vec!["U".to_string(), "B".into(), "C".into()]);
                assert_eq!(*rhs, 1);
            }
            other => panic!("expected parity, got {other:?}"),
        }
        assert_eq!(s.render(Some("U")), "b ⊕ c = 1 ⊕ u");
    }

    #[test]
    fn zeno_derives_the_recorded_parity() {
        let p = ghz_fr_protocol();
        let zeno = external_agent(&p, "Zeno");
        assert_eq!(
            zeno.accessible,
            ["U", "V", "W"].iter().map(|s| s.to_string()).collect()
        );
        let ctx: Vec<String> = zeno.accessible.iter().cloned().collect();
        let statements = derive_statements(&p, &zeno, &[ctx]).unwrap();
        assert_eq!(statements.len(), 1);
        assert_eq!(statements[0].condition, Condition::Unconditional);
        match &statements[0].kind {
            ConstraintKind::Parity { rhs, .. } => assert_eq!(*rhs, 0),
            other => panic!("expected parity, got {other:?}"),
        }
    }

    #[test]
    fn fr_ursula_derives_a_forbidden_set() {
        let p = fr_protocol();
        let agents = superobserver_agents(&p);
        let ursula = agents.iter().find(|a| a.name == "Ursula").unwrap();
        let ctx = superobserver_context(&p, ursula);
        assert_eq!(ctx, vec!["U", "B"]);
        let statements = derive_statements(&p, ursula, &[ctx]).unwrap();
        assert_eq!(statements.len(), 1);
        match &statements[0].kind {
            ConstraintKind::Forbidden { excluded, .. } => {
                assert_eq!(excluded, &vec![vec![0, 0]]);
            }
            other => panic!("expected forbidden set, got {other:?}"),
        }
    }

    #[test]
    fn truth_run_is_unsat_with_four_parity_core() {
        let (statements, facts) = ghz_statements();
        let verdict = check_consistency(&statements, &[], &AssumptionSet::truth(), &facts).unwrap();
        let Verdict::Unsat { certificate } = verdict else {
            panic!("expected UNSAT");
        };
        assert_eq!(certificate.len(), 4);
        let check = gf2_sum_check(&certificate).unwrap();
        assert!(check.lhs_cancels);
        assert_eq!(check.rhs_sum, 1);
    }

    #[test]
    fn dropping_born_compatibility_restores_consistency() {
        let (statements, facts) = ghz_statements();
        let weakened = AssumptionSet {
            born_compat_aoe: false,
            ..AssumptionSet::truth()
        };
        let verdict = check_consistency(&statements, &[], &weakened, &facts).unwrap();
        assert!(verdict.is_sat());
    }

    #[test]
    fn agreement_run_is_unsat_and_needs_the_equalities() {
        let p = ghz_fr_protocol();
        let report = run_nogo(&p, NogoVariant::Agreement).unwrap();
        assert!(!report.verdict.is_sat());
        assert!(report.expected_verdict_reproduced);
        assert_eq!(report.equalities.len(), 6);
        let rendered: Vec<String> = report.equalities.iter().map(|e| e.to_string()).collect();
        for expect in [
            "f_Ursula(C) = f_Valentina(C)",
            "f_Ursula(B) = f_Wigner(B)",
            "f_Valentina(A) = f_Wigner(A)",
            "f_Ursula(U) = f_Zeno(U)",
            "f_Valentina(V) = f_Zeno(V)",
            "f_Wigner(W) = f_Zeno(W)",
        ] {
            assert!(rendered.contains(&expect.to_string()), "missing {expect}");
        }

        // Removing classical agreement flips the verdict.
        let weakened = AssumptionSet {
            classical_agreement: false,
            ..AssumptionSet::agreement()
        };
        let report = run_nogo_with(&p, NogoVariant::Agreement, weakened).unwrap();
        assert!(report.verdict.is_sat());

        // Removing Born compatibility flips it too.
        let weakened = AssumptionSet {
            born_compat_persk: false,
            ..AssumptionSet::agreement()
        };
        let report = run_nogo_with(&p, NogoVariant::Agreement, weakened).unwrap();
        assert!(report.verdict.is_sat());
    }

    #[test]
    fn practicality_run_is_sat_with_only_the_recorded_parity() {
        let p = ghz_fr_protocol();
        let report = run_nogo(&p, NogoVariant::Practicality).unwrap();
        let Verdict::Sat { model, .. } = &report.verdict else {
            panic!("expected SAT");
        };
        // Only u ⊕ v ⊕ w = 0 is active, so the model satisfies it.
        let parity = ["U", "V", "W"]
            .iter()
            .map(|m| {
                model[&VarKey {
                    agent: None,
                    measurement: m.to_string(),
                }]
            })
            .fold(0u8, |acc, b| acc ^ b);
        assert_eq!(parity, 0);
        assert!(report.expected_verdict_reproduced);
        assert_eq!(report.resolutions.len(), 3);
        for r in &report.resolutions {
            assert!(!r.condition.is_empty());
            assert!(!r.caveat.is_empty());
            assert!(!r.scope.is_empty());
        }
    }

    #[test]
    fn fr_practicality_is_sat() {
        let p = fr_protocol();
        let report = run_nogo(&p, NogoVariant::Practicality).unwrap();
        assert!(report.verdict.is_sat());
        // Ursula's resolution unrolls into the three chained conditionals.
        let ursula: Vec<&RenderedStatement> = report
            .resolutions
            .iter()
            .filter(|r| r.speaker == "Ursula")
            .collect();
        assert_eq!(ursula.len(), 3);
        assert!(ursula[0].claim.contains("b = 1"));
        assert!(ursula[1].claim.contains("a = 1"));
        assert!(ursula[2].claim.contains("w = fail"));
    }

    #[test]
    fn ask_steps_activate_gathered_statements_under_practicality() {
        // Ursula asks Bob and Charlie before any supermeasurement happens:
        // her conditional statement is realised and becomes active.
        let base = ghz_fr_protocol();
        let mut steps: Vec<Step> = base
            .steps()
            .iter()
            .filter(|s| matches!(s, Step::FriendMeasure { .. }))
            .cloned()
            .collect();
        steps.push(Step::Ask {
            asker: "Ursula".into(),
            lab: "L_B".into(),
        });
        steps.push(Step::Ask {
            asker: "Ursula".into(),
            lab: "L_C".into(),
        });
        steps.extend(
            base.steps()
                .iter()
                .filter(|s| matches!(s, Step::SuperMeasure { .. }))
                .cloned(),
        );
        let protocol =
            Protocol::new(base.registers().to_vec(), base.initial().clone(), steps).unwrap();
        let facts = ProtocolFacts::from_protocol(&protocol);
        assert!(facts.asks.contains(&("Ursula".into(), "B".into())));

        let ursula = superobserver_agents(&protocol)
            .into_iter()
            .find(|a| a.name == "Ursula")
            .unwrap();
        let ctx = superobserver_context(&protocol, &ursula);
        let statements = derive_statements(&protocol, &ursula, &[ctx]).unwrap();
        assert!(facts.gathered(&statements[0]));

        // Active now: Ursula's parity plus the recorded u⊕v⊕w = 0. Still SAT.
        let report = run_nogo(&protocol, NogoVariant::Practicality).unwrap();
        assert!(report.verdict.is_sat());
    }

    #[test]
    fn communicate_requires_flag_and_classical_agents() {
        let p = ghz_fr_protocol();
        let agents = superobserver_agents(&p);
        let err = communicate(&agents[0], &agents[1], &[], &AssumptionSet::truth()).unwrap_err();
        assert_eq!(err, ReasoningError::CommunicationDisabled);

        let quantum = Agent {
            name: "Bob".into(),
            classical: false,
            accessible: BTreeSet::new(),
        };
        let err = communicate(&agents[0], &quantum, &[], &AssumptionSet::agreement()).unwrap_err();
        assert_eq!(err, ReasoningError::NotClassical("Bob".into()));

        // Self-communication adds no constraints.
        let (_, eq) =
            communicate(&agents[0], &agents[0], &[], &AssumptionSet::agreement()).unwrap();
        assert!(eq.is_empty());
    }

    #[test]
    fn fr_chain_reproduces_the_reasoning() {
        let p = fr_protocol();
        let report = fr_chain(&p, 0, 0).unwrap();
        assert!((report.postselect_probability - 1.0 / 12.0).abs() < 1e-12);
        assert_eq!(report.links.len(), 3);
        assert_eq!(report.links[0].forced, ("B".to_string(), 1));
        assert_eq!(report.links[1].forced, ("A".to_string(), 1));
        assert_eq!(report.links[2].forced, ("W".to_string(), 1));
        assert!(report.contradiction.is_some());
    }

    #[test]
    fn fr_chain_with_fail_terminates_open() {
        let p = fr_protocol();
        let report = fr_chain(&p, 1, 0).unwrap();
        assert!(report.links.is_empty());
        assert!(report.contradiction.is_none());
    }

    #[test]
    fn fr_chain_rejects_impossible_postselection() {
        let p = fr_protocol();
        // Outcome 2 is a completed-basis extra with probability zero.
        let err = fr_chain(&p, 2, 0).unwrap_err();
        assert!(matches!(
            err,
            ReasoningError::Scenario(ScenarioError::ImpossiblePostSelection { .. })
        ));
        let err = fr_chain(&p, 7, 0).unwrap_err();
        assert!(matches!(
            err,
            ReasoningError::Scenario(ScenarioError::UnknownOutcome { .. })
        ));
    }

    #[test]
    fn specker_triangle_unsat_for_all_even_triples() {
        let p = ghz_fr_protocol();
        for (u, v, w) in [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)] {
            let report = specker_triangle(&p, u, v, w).unwrap();
            assert_eq!(report.parities.len(), 3);
            assert!(!report.verdict.is_sat(), "triple ({u},{v},{w})");
        }
    }

    #[test]
    fn specker_triangle_rejects_odd_triples() {
        let p = ghz_fr_protocol();
        let err = specker_triangle(&p, 1, 0, 0).unwrap_err();
        assert_eq!(err, ReasoningError::UnsupportedTriple(vec![1, 0, 0]));
    }

    #[test]
    fn specker_substitution_for_zero_triple() {
        let p = ghz_fr_protocol();
        let report = specker_triangle(&p, 0, 0, 0).unwrap();
        for s in &report.parities {
            match &s.kind {
                ConstraintKind::Parity { vars, rhs } => {
                    assert_eq!(vars.len(), 2);
                    assert_eq!(*rhs, 1);
                }
                other => panic!("expected parity, got {other:?}"),
            }
        }
        // (1,1,0): b⊕c = 0, a⊕c = 0, a⊕b = 1.
        let report = specker_triangle(&p, 1, 1, 0).unwrap();
        let rhs_by_owner: BTreeMap<&str, u8> = report
            .parities
            .iter()
            .map(|s| match &s.kind {
                ConstraintKind::Parity { rhs, .. } => (s.owner.as_str(), *rhs),
                other => panic!("expected parity, got {other:?}"),
            })
            .collect();
        assert_eq!(rhs_by_owner["Ursula"], 0);
        assert_eq!(rhs_by_owner["Valentina"], 0);
        assert_eq!(rhs_by_owner["Wigner"], 1);
    }

    #[test]
    fn agents_without_on_gather_statements_render_nothing() {
        let p = ghz_fr_protocol();
        let zeno = external_agent(&p, "Zeno");
        let rendered = render_resolution_statements(&p, &zeno).unwrap();
        assert!(rendered.is_empty());
    }

    #[test]
    fn observed_statement_pins_a_value() {
        let s = Statement::observed("Ursula", "U", 0);
        match &s.kind {
            ConstraintKind::Forbidden { excluded, .. } => assert_eq!(excluded, &vec![vec![1]]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
