//! Declarative extended Wigner's friend protocols and their execution.
//!
//! A protocol is an ordered list of steps over system registers `S_i` and lab
//! registers `L_i`: friends measure systems inside sealed labs (modelled
//! unitarily), superobservers measure system+lab pairs in entangled bases, and
//! `Ask` steps record that an agent learned a lab's outcome classically.
//!
//! Joint outcome distributions are perspectival: querying a variable set
//! builds the sub-protocol containing the friend unitaries plus only the
//! supermeasurements for the queried super variables. Other supermeasurements
//! are omitted, matching the fact that an agent's Born-rule application does
//! not depend on measurements by superobservers elsewhere.

use crate::qsim::{
    complete_basis, friend_unitary, Complex, OrthonormalBasis, OutcomeLabel, QsimError,
    StateVector, Unitary,
};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("register `{0}` is not declared")]
    UnknownRegister(String),
    #[error("measurement name `{0}` is not unique")]
    DuplicateMeasurement(String),
    #[error("unknown measurement `{0}`")]
    UnknownMeasurement(String),
    #[error("lab `{0}` is targeted by more than one friend measurement")]
    LabReused(String),
    #[error("supermeasurement `{name}` does not target the system+lab pair of a prior friend measurement")]
    DanglingSuperMeasure { name: String },
    #[error("ask on lab `{0}` after a supermeasurement on that lab (memory no longer classical)")]
    AskAfterSuperMeasure(String),
    #[error(
        "context contains friend measurement `{friend}` together with supermeasurement \
         `{superm}` on the same lab `{lab}`; these outcomes can never be stored together"
    )]
    ContextViolation {
        friend: String,
        superm: String,
        lab: String,
    },
    #[error("step index {0} out of range")]
    StepOutOfRange(usize),
    #[error("bell scenario is not of (n,2,2) shape: {0}")]
    BadBellShape(String),
    #[error("post-selected event has probability {probability:.3e}, cannot post-select")]
    ImpossiblePostSelection { probability: f64 },
    #[error("unknown outcome value {value} for measurement `{measurement}`")]
    UnknownOutcome { measurement: String, value: u8 },
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasurementKind {
    Friend,
    Super,
}

/// Identity of one measurement in a protocol (`A`, `B`, `U`, …).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementId {
    pub name: String,
    pub kind: MeasurementKind,
    pub agent: String,
}

#[derive(Clone, Debug)]
pub enum Step {
    FriendMeasure {
        name: String,
        agent: String,
        system: String,
        lab: String,
        basis: OrthonormalBasis,
    },
    SuperMeasure {
        name: String,
        agent: String,
        system: String,
        lab: String,
        basis: OrthonormalBasis,
    },
    Ask {
        asker: String,
        lab: String,
    },
}

impl Step {
    pub fn measurement_name(&self) -> Option<&str> {
        match self {
            Step::FriendMeasure { name, .. } | Step::SuperMeasure { name, .. } => Some(name),
            Step::Ask { .. } => None,
        }
    }
}

/// Ordered protocol over declared registers with a validated step list.
#[derive(Clone, Debug)]
pub struct Protocol {
    registers: Vec<String>,
    initial: StateVector,
    steps: Vec<Step>,
}

impl Protocol {
    /// `registers` is the full declaration order (systems and labs);
    /// `initial` covers exactly the system registers; labs start in |0⟩.
    pub fn new(registers: Vec<String>, initial: StateVector, steps: Vec<Step>) -> Result<Self> {
        for r in initial.registers() {
            if !registers.contains(r) {
                return Err(ScenarioError::UnknownRegister(r.clone()));
            }
        }
        let protocol = Protocol {
            registers,
            initial,
            steps,
        };
        protocol.validate()?;
        Ok(protocol)
    }

    fn validate(&self) -> Result<()> {
        let mut names: Vec<&str> = Vec::new();
        let mut measured_labs: Vec<&str> = Vec::new();
        let mut friend_pairs: Vec<(&str, &str)> = Vec::new();
        let mut supermeasured_labs: Vec<&str> = Vec::new();
        for step in &self.steps {
            if let Some(name) = step.measurement_name() {
                if names.contains(&name) {
                    return Err(ScenarioError::DuplicateMeasurement(name.to_string()));
                }
                names.push(name);
            }
            match step {
                Step::FriendMeasure {
                    system, lab, basis, ..
                } => {
                    self.check_register(system)?;
                    self.check_register(lab)?;
                    if basis.dim() != 2 {
                        return Err(QsimError::DimensionMismatch {
                            expected: 2,
                            got: basis.dim(),
                        }
                        .into());
                    }
                    if measured_labs.contains(&lab.as_str()) {
                        return Err(ScenarioError::LabReused(lab.clone()));
                    }
                    measured_labs.push(lab);
                    friend_pairs.push((system, lab));
                }
                Step::SuperMeasure {
                    name,
                    system,
                    lab,
                    basis,
                    ..
                } => {
                    self.check_register(system)?;
                    self.check_register(lab)?;
                    if basis.dim() != 4 {
                        return Err(QsimError::DimensionMismatch {
                            expected: 4,
                            got: basis.dim(),
                        }
                        .into());
                    }
                    if !friend_pairs.contains(&(system.as_str(), lab.as_str())) {
                        return Err(ScenarioError::DanglingSuperMeasure { name: name.clone() });
                    }
                    supermeasured_labs.push(lab);
                }
                Step::Ask { lab, .. } => {
                    self.check_register(lab)?;
                    if supermeasured_labs.contains(&lab.as_str()) {
                        return Err(ScenarioError::AskAfterSuperMeasure(lab.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_register(&self, r: &str) -> Result<()> {
        if self.registers.iter().any(|x| x == r) {
            Ok(())
        } else {
            Err(ScenarioError::UnknownRegister(r.to_string()))
        }
    }

    pub fn registers(&self) -> &[String] {
        &self.registers
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    /// All measurements in step order.
    pub fn measurements(&self) -> Vec<MeasurementId> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::FriendMeasure { name, agent, .. } => Some(MeasurementId {
                    name: name.clone(),
                    kind: MeasurementKind::Friend,
                    agent: agent.clone(),
                }),
                Step::SuperMeasure { name, agent, .. } => Some(MeasurementId {
                    name: name.clone(),
                    kind: MeasurementKind::Super,
                    agent: agent.clone(),
                }),
                Step::Ask { .. } => None,
            })
            .collect()
    }

    pub fn find_step(&self, measurement: &str) -> Result<&Step> {
        self.steps
            .iter()
            .find(|s| s.measurement_name() == Some(measurement))
            .ok_or_else(|| ScenarioError::UnknownMeasurement(measurement.to_string()))
    }

    /// Labs whose outcome some agent asked for classically, with the asker.
    pub fn asked_labs(&self) -> Vec<(String, String)> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Ask { asker, lab } => Some((asker.clone(), lab.clone())),
                _ => None,
            })
            .collect()
    }

    /// Full initial state: `initial` on the system registers, |0⟩ on labs,
    /// laid out in declaration order.
    fn full_initial(&self) -> StateVector {
        let n = self.registers.len();
        let sys = self.initial.registers();
        let sys_positions: Vec<usize> = sys
            .iter()
            .map(|r| self.registers.iter().position(|x| x == r).unwrap())
            .collect();
        let mut amps = vec![Complex::new(0.0, 0.0); 1 << n];
        for (sub, amp) in self.initial.amps().iter().enumerate() {
            let mut idx = 0usize;
            for (j, pos) in sys_positions.iter().enumerate() {
                if sub >> (sys.len() - 1 - j) & 1 == 1 {
                    idx |= 1 << (n - 1 - pos);
                }
            }
            amps[idx] = *amp;
        }
        StateVector::new(self.registers.clone(), amps).expect("initial state is normalized")
    }

    /// Apply the protocol's unitary dynamics: friend measurements act as their
    /// friend unitaries, supermeasurements are deferred to distribution
    /// queries, and `Ask` steps only mark classical records.
    pub fn run(&self, upto_step: Option<usize>) -> Result<StateVector> {
        let limit = upto_step.unwrap_or(self.steps.len());
        if limit > self.steps.len() {
            return Err(ScenarioError::StepOutOfRange(limit));
        }
        let mut state = self.full_initial();
        for step in &self.steps[..limit] {
            if let Step::FriendMeasure {
                system, lab, basis, ..
            } = step
            {
                let u = friend_unitary(basis)?;
                state = state.apply_unitary(&u, &[system, lab])?;
            }
        }
        Ok(state)
    }

    /// Check that a variable set is gatherable: no friend measurement may be
    /// combined with the supermeasurement on its own lab.
    pub fn validate_context(&self, variables: &[&str]) -> Result<()> {
        for v in variables {
            self.find_step(v)?;
        }
        for f in variables {
            if let Step::FriendMeasure { name, lab, .. } = self.find_step(f)? {
                for s in variables {
                    if let Step::SuperMeasure {
                        name: sname,
                        lab: slab,
                        ..
                    } = self.find_step(s)?
                    {
                        if slab == lab {
                            return Err(ScenarioError::ContextViolation {
                                friend: name.clone(),
                                superm: sname.clone(),
                                lab: lab.clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Joint Born distribution over a gatherable variable set. Friend
    /// variables are read from their lab record in the computational basis;
    /// super variables use their supermeasurement basis.
    pub fn joint_distribution(&self, variables: &[&str]) -> Result<JointDistribution> {
        self.validate_context(variables)?;
        let state = self.run(None)?;
        let mut parts: Vec<(Vec<String>, OrthonormalBasis)> = Vec::new();
        for v in variables {
            match self.find_step(v)? {
                Step::FriendMeasure { lab, .. } => {
                    parts.push((vec![lab.clone()], OrthonormalBasis::z()));
                }
                Step::SuperMeasure {
                    system, lab, basis, ..
                } => {
                    parts.push((vec![system.clone(), lab.clone()], basis.clone()));
                }
                Step::Ask { .. } => unreachable!("asks have no measurement name"),
            }
        }
        joint_born(
            &state,
            variables.iter().map(|v| v.to_string()).collect(),
            &parts,
        )
    }
}

/// Joint outcome distribution over named variables, in lexicographic outcome
/// order per variable list order.
#[derive(Clone, Debug, Serialize)]
pub struct JointDistribution {
    pub variables: Vec<String>,
    pub labels: Vec<Vec<OutcomeLabel>>,
    pub probabilities: IndexMap<Vec<u8>, f64>,
}

impl JointDistribution {
    pub fn probability(&self, outcome: &[u8]) -> f64 {
        self.probabilities.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.values().sum()
    }

    /// Outcomes with probability above `eps`.
    pub fn support(&self, eps: f64) -> Vec<Vec<u8>> {
        self.probabilities
            .iter()
            .filter(|(_, &p)| p > eps)
            .map(|(o, _)| o.clone())
            .collect()
    }

    /// Marginal over a subset of the variables (by name).
    pub fn marginal(&self, keep: &[&str]) -> JointDistribution {
        let positions: Vec<usize> = keep
            .iter()
            .map(|k| {
                self.variables
                    .iter()
                    .position(|v| v == k)
                    .expect("marginal variable present")
            })
            .collect();
        let mut probabilities: IndexMap<Vec<u8>, f64> = IndexMap::new();
        for (outcome, p) in &self.probabilities {
            let key: Vec<u8> = positions.iter().map(|&i| outcome[i]).collect();
            *probabilities.entry(key).or_insert(0.0) += p;
        }
        probabilities.sort_keys();
        JointDistribution {
            variables: keep.iter().map(|k| k.to_string()).collect(),
            labels: positions.iter().map(|&i| self.labels[i].clone()).collect(),
            probabilities,
        }
    }
}

/// Compute the joint Born distribution of commuting projective measurements
/// given as (target registers, basis) pairs over disjoint registers.
pub fn joint_born(
    state: &StateVector,
    variables: Vec<String>,
    parts: &[(Vec<String>, OrthonormalBasis)],
) -> Result<JointDistribution> {
    let mut probabilities: IndexMap<Vec<u8>, f64> = IndexMap::new();
    let mut labels = Vec::new();
    for (_, basis) in parts {
        labels.push(basis.labels().to_vec());
    }
    let mut outcome = Vec::with_capacity(parts.len());
    joint_born_rec(state, parts, 0, &mut outcome, &mut probabilities)?;
    probabilities.sort_keys();
    Ok(JointDistribution {
        variables,
        labels,
        probabilities,
    })
}

fn joint_born_rec(
    state: &StateVector,
    parts: &[(Vec<String>, OrthonormalBasis)],
    depth: usize,
    outcome: &mut Vec<u8>,
    out: &mut IndexMap<Vec<u8>, f64>,
) -> Result<()> {
    if depth == parts.len() {
        out.insert(outcome.clone(), state.norm().powi(2));
        return Ok(());
    }
    let (targets, basis) = &parts[depth];
    let target_refs: Vec<&str> = targets.iter().map(String::as_str).collect();
    for (vector, label) in basis.vectors().iter().zip(basis.labels()) {
        let projected = state.project_raw(vector, &target_refs)?;
        outcome.push(label.value);
        joint_born_rec(&projected, parts, depth + 1, outcome, out)?;
        outcome.pop();
    }
    Ok(())
}

/// Supermeasurement basis from a friend basis and a superobserver setting:
/// `{ U_friend (|b⟩ ⊗ |0⟩) : b ∈ setting }`, completed to a full basis. The
/// setting's outcome labels carry over; completion outcomes are fresh ints.
pub fn super_basis(
    friend_basis: &OrthonormalBasis,
    setting: &OrthonormalBasis,
) -> Result<OrthonormalBasis> {
    let u = friend_unitary(friend_basis)?;
    let mut vectors = Vec::new();
    for b in setting.vectors() {
        // |b⟩ ⊗ |0⟩ then the friend unitary.
        let embedded = vec![b[0], Complex::new(0.0, 0.0), b[1], Complex::new(0.0, 0.0)];
        vectors.push(mat_vec(&u, &embedded));
    }
    Ok(complete_basis(vectors, setting.labels().to_vec())?)
}

fn mat_vec(u: &Unitary, v: &[Complex]) -> Vec<Complex> {
    (0..u.dim())
        .map(|r| (0..u.dim()).map(|c| u.entry(r, c) * v[c]).sum())
        .collect()
}

/// The ok/fail supermeasurement basis of the two-party protocol:
/// ok = (|00⟩ − |11⟩)/√2 ↦ 0, fail = (|00⟩ + |11⟩)/√2 ↦ 1.
pub fn ok_fail_basis() -> OrthonormalBasis {
    super_basis(&OrthonormalBasis::z(), &OrthonormalBasis::x().swapped())
        .expect("ok/fail basis is orthonormal")
        .with_names(&["ok", "fail"])
}

/// The yes/no supermeasurement basis of the three-party protocol:
/// yes = U_Y(|+⟩|0⟩) ↦ 0, no = U_Y(|−⟩|0⟩) ↦ 1.
pub fn yes_no_basis() -> OrthonormalBasis {
    super_basis(&OrthonormalBasis::y(), &OrthonormalBasis::x())
        .expect("yes/no basis is orthonormal")
        .with_names(&["yes", "no"])
}

/// Two-party protocol: shared state (|00⟩+|10⟩+|11⟩)/√3, computational-basis
/// friend measurements A and B, ok/fail supermeasurements U and W.
pub fn fr_protocol() -> Protocol {
    let initial = StateVector::from_reals(vec!["S_A", "S_B"], &[1.0, 0.0, 1.0, 1.0]).unwrap();
    let okfail = ok_fail_basis();
    Protocol::new(
        ["S_A", "L_A", "S_B", "L_B"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        initial,
        vec![
            friend_step("A", "Alice", "S_A", "L_A", OrthonormalBasis::z()),
            friend_step("B", "Bob", "S_B", "L_B", OrthonormalBasis::z()),
            super_step("U", "Ursula", "S_A", "L_A", okfail.clone()),
            super_step("W", "Wigner", "S_B", "L_B", okfail),
        ],
    )
    .expect("canonical protocol is valid")
}

/// Three-party protocol: GHZ initial state, Y-basis friend measurements
/// A, B, C, yes/no supermeasurements U, V, W.
pub fn ghz_fr_protocol() -> Protocol {
    let initial = StateVector::from_reals(
        vec!["S_A", "S_B", "S_C"],
        &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    )
    .unwrap();
    let yesno = yes_no_basis();
    Protocol::new(
        ["S_A", "L_A", "S_B", "L_B", "S_C", "L_C"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        initial,
        vec![
            friend_step("A", "Alice", "S_A", "L_A", OrthonormalBasis::y()),
            friend_step("B", "Bob", "S_B", "L_B", OrthonormalBasis::y()),
            friend_step("C", "Charlie", "S_C", "L_C", OrthonormalBasis::y()),
            super_step("U", "Ursula", "S_A", "L_A", yesno.clone()),
            super_step("V", "Valentina", "S_B", "L_B", yesno.clone()),
            super_step("W", "Wigner", "S_C", "L_C", yesno),
        ],
    )
    .expect("canonical protocol is valid")
}

fn friend_step(name: &str, agent: &str, system: &str, lab: &str, basis: OrthonormalBasis) -> Step {
    Step::FriendMeasure {
        name: name.to_string(),
        agent: agent.to_string(),
        system: system.to_string(),
        lab: lab.to_string(),
        basis,
    }
}

fn super_step(name: &str, agent: &str, system: &str, lab: &str, basis: OrthonormalBasis) -> Step {
    Step::SuperMeasure {
        name: name.to_string(),
        agent: agent.to_string(),
        system: system.to_string(),
        lab: lab.to_string(),
        basis,
    }
}

/// One labelled measurement setting of a Bell party.
#[derive(Clone, Debug)]
pub struct BellSetting {
    pub name: String,
    pub basis: OrthonormalBasis,
}

#[derive(Clone, Debug)]
pub struct BellParty {
    pub name: String,
    pub settings: Vec<BellSetting>,
}

/// An (n,2,2) Bell scenario: n parties, two dichotomic settings each, sharing
/// one system register per party.
#[derive(Clone, Debug)]
pub struct BellScenario {
    pub parties: Vec<BellParty>,
    pub shared_state: StateVector,
    /// Declared maximal contexts (measurement names, one setting per party);
    /// `None` means every combination.
    pub contexts: Option<Vec<Vec<String>>>,
}

impl BellScenario {
    pub fn validate(&self) -> Result<()> {
        if self.parties.is_empty() {
            return Err(ScenarioError::BadBellShape("no parties".into()));
        }
        if self.shared_state.registers().len() != self.parties.len() {
            return Err(ScenarioError::BadBellShape(format!(
                "state has {} registers for {} parties",
                self.shared_state.registers().len(),
                self.parties.len()
            )));
        }
        for p in &self.parties {
            if p.settings.len() != 2 {
                return Err(ScenarioError::BadBellShape(format!(
                    "party {} has {} settings",
                    p.name,
                    p.settings.len()
                )));
            }
            for s in &p.settings {
                if s.basis.dim() != 2 {
                    return Err(ScenarioError::BadBellShape(format!(
                        "setting {} is not dichotomic",
                        s.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// All contexts (one setting per party), or the declared subset.
    pub fn context_names(&self) -> Vec<Vec<String>> {
        if let Some(contexts) = &self.contexts {
            return contexts.clone();
        }
        let mut out = vec![Vec::new()];
        for p in &self.parties {
            let mut next = Vec::new();
            for ctx in &out {
                for s in &p.settings {
                    let mut c = ctx.clone();
                    c.push(s.name.clone());
                    next.push(c);
                }
            }
            out = next;
        }
        out
    }

    fn setting(&self, name: &str) -> Result<(usize, &BellSetting)> {
        for (i, p) in self.parties.iter().enumerate() {
            for s in &p.settings {
                if s.name == name {
                    return Ok((i, s));
                }
            }
        }
        Err(ScenarioError::UnknownMeasurement(name.to_string()))
    }

    /// Direct Born statistics for one context measured on the shared state.
    pub fn joint_distribution(&self, context: &[String]) -> Result<JointDistribution> {
        self.validate()?;
        let mut parts = Vec::new();
        for name in context {
            let (party_idx, setting) = self.setting(name)?;
            let register = self.shared_state.registers()[party_idx].clone();
            parts.push((vec![register], setting.basis.clone()));
        }
        joint_born(&self.shared_state, context.to_vec(), &parts)
    }
}

/// Result of compiling a Bell scenario to a protocol: per party, setting-0
/// becomes the friend measurement and setting-1 the supermeasurement.
#[derive(Clone, Debug)]
pub struct CompiledEwfs {
    pub protocol: Protocol,
    /// Bell context (setting names) → protocol variable names. The names
    /// coincide; the pairing records which variables realise which context.
    pub context_map: Vec<(Vec<String>, Vec<String>)>,
}

/// Map an (n,2,2) Bell scenario onto an extended Wigner's friend protocol.
pub fn compile_bell_to_ewfs(bell: &BellScenario) -> Result<CompiledEwfs> {
    bell.validate()?;
    let mut registers = Vec::new();
    let mut steps = Vec::new();
    let mut system_names = Vec::new();
    for party in &bell.parties {
        let system = format!("S_{}", party.name);
        let lab = format!("L_{}", party.name);
        registers.push(system.clone());
        registers.push(lab.clone());
        system_names.push(system.clone());
        let friend_basis = &party.settings[0].basis;
        steps.push(friend_step(
            &party.settings[0].name,
            &format!("friend_{}", party.name),
            &system,
            &lab,
            friend_basis.clone(),
        ));
        steps.push(super_step(
            &party.settings[1].name,
            &format!("super_{}", party.name),
            &system,
            &lab,
            super_basis(friend_basis, &party.settings[1].basis)?,
        ));
    }
    // Re-register the shared state over the S_* names.
    let initial = StateVector::new(system_names, bell.shared_state.amps().to_vec())?;
    // Friend steps must all precede supermeasurements so that each
    // supermeasurement targets an already-measured lab pair in step order.
    steps.sort_by_key(|s| matches!(s, Step::SuperMeasure { .. }));
    let protocol = Protocol::new(registers, initial, steps)?;
    let context_map = bell
        .context_names()
        .into_iter()
        .map(|ctx| (ctx.clone(), ctx))
        .collect();
    Ok(CompiledEwfs {
        protocol,
        context_map,
    })
}

/// Per-context deviation between the compiled protocol's statistics and the
/// direct Bell statistics: the largest per-entry difference over dichotomic
/// outcomes, plus any mass on completion outcomes.
pub fn compiled_deviation(
    bell: &BellScenario,
    compiled: &CompiledEwfs,
) -> Result<Vec<(Vec<String>, f64)>> {
    let mut out = Vec::new();
    for (bell_context, variables) in &compiled.context_map {
        let direct = bell.joint_distribution(bell_context)?;
        let refs: Vec<&str> = variables.iter().map(String::as_str).collect();
        let protocol_dist = compiled.protocol.joint_distribution(&refs)?;
        let mut deviation = 0.0f64;
        for (outcome, p) in &protocol_dist.probabilities {
            if outcome.iter().any(|&v| v > 1) {
                deviation = deviation.max(*p);
            } else {
                deviation = deviation.max((p - direct.probability(outcome)).abs());
            }
        }
        for (outcome, p) in &direct.probabilities {
            deviation = deviation.max((p - protocol_dist.probability(outcome)).abs());
        }
        out.push((bell_context.clone(), deviation));
    }
    Ok(out)
}

fn setting(name: &str, basis: OrthonormalBasis) -> BellSetting {
    BellSetting {
        name: name.to_string(),
        basis,
    }
}

fn party(name: &str, settings: Vec<BellSetting>) -> BellParty {
    BellParty {
        name: name.to_string(),
        settings,
    }
}

/// The (2,2,2) scenario underlying the two-party paradox: shared state
/// (|00⟩+|10⟩+|11⟩)/√3 with a computational setting and an X setting per
/// party. The X settings carry the ok-first labelling (|−⟩ ↦ 0) so that the
/// table matches the supermeasurement outcomes of the compiled protocol.
pub fn hardy_bell() -> BellScenario {
    BellScenario {
        parties: vec![
            party(
                "A",
                vec![
                    setting("A", OrthonormalBasis::z()),
                    setting(
                        "U",
                        OrthonormalBasis::x().swapped().with_names(&["ok", "fail"]),
                    ),
                ],
            ),
            party(
                "B",
                vec![
                    setting("B", OrthonormalBasis::z()),
                    setting(
                        "W",
                        OrthonormalBasis::x().swapped().with_names(&["ok", "fail"]),
                    ),
                ],
            ),
        ],
        shared_state: StateVector::from_reals(vec!["q_A", "q_B"], &[1.0, 0.0, 1.0, 1.0]).unwrap(),
        contexts: None,
    }
}

/// The (3,2,2) scenario of the three-party parity argument: GHZ state, X and
/// Y settings per party, restricted to the contexts XXX, XYY, YXY, YYX.
/// Setting 0 is the Y measurement (performed by the friend after compilation).
pub fn ghz_bell() -> BellScenario {
    let names = ["A", "B", "C"];
    let parties = names
        .iter()
        .map(|n| {
            party(
                n,
                vec![
                    setting(&format!("Y_{n}"), OrthonormalBasis::y()),
                    setting(&format!("X_{n}"), OrthonormalBasis::x()),
                ],
            )
        })
        .collect();
    let contexts = vec![
        vec!["X_A".into(), "X_B".into(), "X_C".into()],
        vec!["X_A".into(), "Y_B".into(), "Y_C".into()],
        vec!["Y_A".into(), "X_B".into(), "Y_C".into()],
        vec!["Y_A".into(), "Y_B".into(), "X_C".into()],
    ];
    BellScenario {
        parties,
        shared_state: StateVector::from_reals(
            vec!["q_A", "q_B", "q_C"],
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        )
        .unwrap(),
        contexts: Some(contexts),
    }
}

/// Singlet state at the maximal-violation settings: A measures Z or X, B
/// measures along (Z±X)/√2.
pub fn chsh_bell() -> BellScenario {
    use std::f64::consts::FRAC_PI_4;
    BellScenario {
        parties: vec![
            party(
                "A",
                vec![
                    setting("A0", OrthonormalBasis::z()),
                    setting("A1", OrthonormalBasis::x()),
                ],
            ),
            party(
                "B",
                vec![
                    setting("B0", OrthonormalBasis::xz_plane(FRAC_PI_4)),
                    setting("B1", OrthonormalBasis::xz_plane(-FRAC_PI_4)),
                ],
            ),
        ],
        shared_state: StateVector::from_reals(vec!["q_A", "q_B"], &[0.0, 1.0, -1.0, 0.0]).unwrap(),
        contexts: None,
    }
}

/// Built-in Bell scenarios by name.
pub fn builtin_bell(name: &str) -> Option<BellScenario> {
    match name {
        "hardy" => Some(hardy_bell()),
        "ghz" => Some(ghz_bell()),
        "chsh" => Some(chsh_bell()),
        "product" => Some(product_bell()),
        _ => None,
    }
}

/// Built-in protocols by name.
pub fn builtin_protocol(name: &str) -> Option<Protocol> {
    match name {
        "fr" => Some(fr_protocol()),
        "ghz-fr" => Some(ghz_fr_protocol()),
        _ => None,
    }
}

/// Separable reference point: |00⟩ with Z and X settings per party.
pub fn product_bell() -> BellScenario {
    BellScenario {
        parties: vec![
            party(
                "A",
                vec![
                    setting("A0", OrthonormalBasis::z()),
                    setting("A1", OrthonormalBasis::x()),
                ],
            ),
            party(
                "B",
                vec![
                    setting("B0", OrthonormalBasis::z()),
                    setting("B1", OrthonormalBasis::x()),
                ],
            ),
        ],
        shared_state: StateVector::from_reals(vec!["q_A", "q_B"], &[1.0, 0.0, 0.0, 0.0]).unwrap(),
        contexts: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THIRD: f64 = 1.0 / 3.0;

    #[test]
    fn fr_state_after_friend_measurements() {
        // Amplitudes land on |0000⟩, |1100⟩, |1111⟩ in S_A L_A S_B L_B order.
        let p = fr_protocol();
        let state = p.run(Some(2)).unwrap();
        let amp = 3.0f64.sqrt().recip();
        for (i, a) in state.amps().iter().enumerate() {
            let expect = if i == 0 || i == 12 || i == 15 {
                amp
            } else {
                0.0
            };
            assert!(
                (a - Complex::new(expect, 0.0)).norm() < 1e-12,
                "amplitude {i} was {a}"
            );
        }
        // Running past the supermeasurements changes nothing.
        let full = p.run(None).unwrap();
        assert!(full.max_amp_diff(&state) < 1e-15);
        assert!((full.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_protocol_keeps_initial_state() {
        let p = fr_protocol();
        let state = p.run(Some(0)).unwrap();
        let amp = 3.0f64.sqrt().recip();
        // ψ^{t=1}: |0000⟩, |1000⟩, |1010⟩.
        for (i, a) in state.amps().iter().enumerate() {
            let expect = if i == 0 || i == 8 || i == 10 {
                amp
            } else {
                0.0
            };
            assert!((a - Complex::new(expect, 0.0)).norm() < 1e-12, "amp {i}");
        }
    }

    #[test]
    fn fr_post_selection_probability_is_one_twelfth() {
        let p = fr_protocol();
        let dist = p.joint_distribution(&["U", "W"]).unwrap();
        assert!((dist.probability(&[0, 0]) - 1.0 / 12.0).abs() < 1e-12);
        assert!((dist.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fr_context_ab_support() {
        let p = fr_protocol();
        let dist = p.joint_distribution(&["A", "B"]).unwrap();
        assert!((dist.probability(&[0, 0]) - THIRD).abs() < 1e-12);
        assert!(dist.probability(&[0, 1]) < 1e-12);
        assert!((dist.probability(&[1, 0]) - THIRD).abs() < 1e-12);
        assert!((dist.probability(&[1, 1]) - THIRD).abs() < 1e-12);
    }

    #[test]
    fn modified_fr_zero_amplitude_predictions() {
        let p = fr_protocol();
        let state = p.run(None).unwrap();
        let okfail = ok_fail_basis();
        let ok = okfail.vector_for(0).unwrap().to_vec();
        let e00 = [
            Complex::new(1.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
        ];
        let e11 = [
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(1.0, 0.0),
        ];
        // (u = ok, b = 0), (a = 1, w = ok) and (a = 0, b = 1) never occur.
        let (p1, _) = state.project(&ok, &["S_A", "L_A"]).unwrap();
        let after_ok = state.project(&ok, &["S_A", "L_A"]).unwrap().1.unwrap();
        let (p_b0, _) = after_ok.project(&e00, &["S_B", "L_B"]).unwrap();
        assert!(p1 * p_b0 < 1e-12);

        let (pa1, post) = state.project(&e11, &["S_A", "L_A"]).unwrap();
        let p_w_ok = post
            .map(|s| s.project(&ok, &["S_B", "L_B"]).unwrap().0)
            .unwrap_or(0.0);
        assert!(pa1 * p_w_ok < 1e-12);

        let (pa0, post) = state.project(&e00, &["S_A", "L_A"]).unwrap();
        let p_b1 = post
            .map(|s| s.project(&e11, &["S_B", "L_B"]).unwrap().0)
            .unwrap_or(0.0);
        assert!(pa0 * p_b1 < 1e-12);
    }

    #[test]
    fn ghz_fr_supermeasurement_parity() {
        let p = ghz_fr_protocol();
        let dist = p.joint_distribution(&["U", "V", "W"]).unwrap();
        for (outcome, prob) in &dist.probabilities {
            if outcome.iter().any(|&v| v > 1) {
                assert!(*prob < 1e-9, "extra outcome {outcome:?} has mass {prob}");
                continue;
            }
            let parity = outcome.iter().fold(0u8, |acc, &v| acc ^ v);
            if parity == 0 {
                assert!((prob - 0.25).abs() < 1e-12, "{outcome:?} → {prob}");
            } else {
                assert!(*prob < 1e-12, "{outcome:?} → {prob}");
            }
        }
    }

    #[test]
    fn ghz_fr_ursula_context_parity() {
        // Support of (u, b, c) is exactly b ⊕ c = 1 ⊕ u, uniform at 1/4.
        let p = ghz_fr_protocol();
        let dist = p.joint_distribution(&["U", "B", "C"]).unwrap();
        for (outcome, prob) in &dist.probabilities {
            if outcome.iter().any(|&v| v > 1) {
                assert!(*prob < 1e-9);
                continue;
            }
            let (u, b, c) = (outcome[0], outcome[1], outcome[2]);
            if b ^ c == 1 ^ u {
                assert!((prob - 0.25).abs() < 1e-12, "{outcome:?} → {prob}");
            } else {
                assert!(*prob < 1e-12, "{outcome:?} → {prob}");
            }
        }
        assert!((dist.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ghz_fr_single_variable_is_uniform() {
        let p = ghz_fr_protocol();
        let dist = p.joint_distribution(&["U"]).unwrap();
        assert!((dist.probability(&[0]) - 0.5).abs() < 1e-12);
        assert!((dist.probability(&[1]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn context_validation_rejects_friend_with_own_supermeasurement() {
        let p = ghz_fr_protocol();
        let err = p.validate_context(&["B", "V"]).unwrap_err();
        assert!(matches!(err, ScenarioError::ContextViolation { .. }));
        assert!(p.validate_context(&["U", "B", "C"]).is_ok());
        assert!(p.validate_context(&["U", "V", "W"]).is_ok());
        assert!(matches!(
            p.validate_context(&["U", "Q"]).unwrap_err(),
            ScenarioError::UnknownMeasurement(_)
        ));
    }

    #[test]
    fn ghz_state_norm_preserved_through_protocol() {
        let p = ghz_fr_protocol();
        let state = p.run(None).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn okfail_pair_measurement_gives_one_twelfth() {
        // Direct ok/fail ⊗ ok/fail measurement of the evolved state.
        let p = fr_protocol();
        let state = p.run(None).unwrap();
        let pair = ok_fail_basis().product(&ok_fail_basis());
        let dist = state
            .measure_distribution(&pair, &["S_A", "L_A", "S_B", "L_B"])
            .unwrap();
        let p_ok_ok = dist
            .iter()
            .find(|(label, _)| label.name == "ok,ok")
            .map(|(_, p)| *p)
            .unwrap();
        assert!((p_ok_ok - 1.0 / 12.0).abs() < 1e-12);
        let total: f64 = dist.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn completed_okfail_vectors_never_fire_on_the_fr_state() {
        let p = fr_protocol();
        let state = p.run(None).unwrap();
        let basis = ok_fail_basis();
        assert_eq!(basis.dim(), 4);
        for label in [2u8, 3] {
            let vector = basis.vector_for(label).unwrap().to_vec();
            let (prob, _) = state.project(&vector, &["S_A", "L_A"]).unwrap();
            assert!(prob < 1e-12, "extra outcome {label} has probability {prob}");
            let (prob, _) = state.project(&vector, &["S_B", "L_B"]).unwrap();
            assert!(prob < 1e-12);
        }
    }

    #[test]
    fn ghz_fr_initial_state_layout() {
        // ψ before any measurement: |000000⟩ and |101010⟩ at 1/√2.
        let p = ghz_fr_protocol();
        let state = p.run(Some(0)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (i, a) in state.amps().iter().enumerate() {
            let expect = if i == 0 || i == 0b101010 { h } else { 0.0 };
            assert!((a - Complex::new(expect, 0.0)).norm() < 1e-12, "amp {i}");
        }
        // After the friend unitaries the state is (U_A⊗U_B⊗U_C)ψ.
        let evolved = p.run(Some(3)).unwrap();
        assert!((evolved.norm() - 1.0).abs() < 1e-12);
        assert!(evolved.max_amp_diff(&p.run(None).unwrap()) < 1e-15);
    }

    #[test]
    fn extra_supermeasurement_outcomes_carry_no_mass() {
        for (protocol, contexts) in [
            (fr_protocol(), vec![vec!["U", "W"]]),
            (
                ghz_fr_protocol(),
                vec![vec!["U", "V", "W"], vec!["U", "B", "C"]],
            ),
        ] {
            for context in contexts {
                let dist = protocol.joint_distribution(&context).unwrap();
                let extra_mass: f64 = dist
                    .probabilities
                    .iter()
                    .filter(|(o, _)| o.iter().any(|&v| v > 1))
                    .map(|(_, p)| p)
                    .sum();
                assert!(extra_mass < 1e-9, "context {context:?}: {extra_mass:.3e}");
            }
        }
    }

    #[test]
    fn ask_after_supermeasure_is_rejected() {
        let mut steps: Vec<Step> = fr_protocol().steps().to_vec();
        steps.push(Step::Ask {
            asker: "Zeno".into(),
            lab: "L_A".into(),
        });
        let err = Protocol::new(
            fr_protocol().registers().to_vec(),
            fr_protocol().initial().clone(),
            steps,
        )
        .unwrap_err();
        assert_eq!(err, ScenarioError::AskAfterSuperMeasure("L_A".into()));
    }

    #[test]
    fn structural_protocol_invariants_are_enforced() {
        let base = fr_protocol();
        // A supermeasurement must target a previously measured pair.
        let supers_only: Vec<Step> = base
            .steps()
            .iter()
            .filter(|s| matches!(s, Step::SuperMeasure { .. }))
            .cloned()
            .collect();
        let err = Protocol::new(
            base.registers().to_vec(),
            base.initial().clone(),
            supers_only,
        )
        .unwrap_err();
        assert!(matches!(err, ScenarioError::DanglingSuperMeasure { .. }));

        // A lab holds at most one friend measurement record.
        let mut steps = base.steps().to_vec();
        steps.insert(
            1,
            friend_step("A2", "Alice2", "S_A", "L_A", OrthonormalBasis::x()),
        );
        let err =
            Protocol::new(base.registers().to_vec(), base.initial().clone(), steps).unwrap_err();
        assert_eq!(err, ScenarioError::LabReused("L_A".into()));

        // Measurement names must be unique.
        let mut steps = base.steps().to_vec();
        steps.push(friend_step(
            "A",
            "Alice",
            "S_B",
            "L_B",
            OrthonormalBasis::x(),
        ));
        let err =
            Protocol::new(base.registers().to_vec(), base.initial().clone(), steps).unwrap_err();
        assert!(matches!(
            err,
            ScenarioError::LabReused(_) | ScenarioError::DuplicateMeasurement(_)
        ));
    }

    #[test]
    fn single_party_compilation_matches_x_statistics() {
        // State |0⟩ with settings {Z, X}: the compiled supermeasurement sees
        // outcome 0 with probability 1/2.
        let bell = BellScenario {
            parties: vec![BellParty {
                name: "A".into(),
                settings: vec![
                    BellSetting {
                        name: "A".into(),
                        basis: OrthonormalBasis::z(),
                    },
                    BellSetting {
                        name: "U".into(),
                        basis: OrthonormalBasis::x(),
                    },
                ],
            }],
            shared_state: StateVector::from_reals(vec!["q0"], &[1.0, 0.0]).unwrap(),
            contexts: None,
        };
        let compiled = compile_bell_to_ewfs(&bell).unwrap();
        let dist = compiled.protocol.joint_distribution(&["U"]).unwrap();
        assert!((dist.probability(&[0]) - 0.5).abs() < 1e-12);
        assert!((dist.probability(&[1]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chsh_and_product_compile_equivalently() {
        for bell in [chsh_bell(), product_bell()] {
            let compiled = compile_bell_to_ewfs(&bell).unwrap();
            let deviations = compiled_deviation(&bell, &compiled).unwrap();
            for (context, d) in deviations {
                assert!(d < 1e-12, "context {context:?} deviates by {d:.3e}");
            }
        }
    }

    #[test]
    fn marginals_of_shared_variables_agree() {
        let p = ghz_fr_protocol();
        let ubc = p.joint_distribution(&["U", "B", "C"]).unwrap();
        let uvw = p.joint_distribution(&["U", "V", "W"]).unwrap();
        let m1 = ubc.marginal(&["U"]);
        let m2 = uvw.marginal(&["U"]);
        for (o, p1) in &m1.probabilities {
            assert!((p1 - m2.probability(o)).abs() < 1e-10);
        }
    }

    #[test]
    fn subset_distribution_equals_marginal() {
        let p = ghz_fr_protocol();
        let ubc = p.joint_distribution(&["U", "B", "C"]).unwrap();
        let ub = p.joint_distribution(&["U", "B"]).unwrap();
        let marg = ubc.marginal(&["U", "B"]);
        for (o, prob) in &ub.probabilities {
            assert!((prob - marg.probability(o)).abs() < 1e-10);
        }
    }
}
