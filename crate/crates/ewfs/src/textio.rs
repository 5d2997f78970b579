//! Plain-text protocol and Bell scenario files.
//!
//! The grammar is line oriented; `#` starts a comment. A protocol file:
//!
//! ```text
//! protocol
//! registers S_A L_A S_B L_B
//! state hardy_fr
//! friend A Alice S_A L_A Z
//! super U Ursula S_A L_A okfail
//! ask Zeno L_B
//! context A B
//! ```
//!
//! A Bell scenario file:
//!
//! ```text
//! bell
//! state 1 0 1 1
//! party A A:Z U:X~
//! party B B:Z W:X~
//! contexts A,B A,W U,B U,W
//! ```
//!
//! Single-qubit bases are `Z`, `X`, `Y` (a trailing `~` swaps the outcome
//! labelling), `xz(theta)` for a basis in the X–Z plane, or
//! `custom(a,b;c,d)` with complex entries like `0.5-0.5i`. Supermeasurement
//! bases are `okfail`, `yesno`, `from:<basis>` (built from the lab's friend
//! basis), or `custom4(v0;v1)`. Printing uses shortest round-trip floats, so
//! parse∘print is the identity on values.

use crate::qsim::{Complex, OrthonormalBasis, OutcomeLabel, StateVector};
use crate::scenario::{
    ok_fail_basis, super_basis, yes_no_basis, BellParty, BellScenario, BellSetting, Protocol,
    ScenarioError, Step,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextIoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

pub type Result<T> = std::result::Result<T, TextIoError>;

fn err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(TextIoError::Parse {
        line,
        message: message.into(),
    })
}

/// A protocol plus its declared gatherable contexts.
#[derive(Clone, Debug)]
pub struct ProtocolFile {
    pub protocol: Protocol,
    pub contexts: Vec<Vec<String>>,
}

/// Named initial states.
fn named_state(name: &str, registers: Vec<String>) -> Option<StateVector> {
    match name {
        "hardy_fr" => StateVector::from_reals(registers, &[1.0, 0.0, 1.0, 1.0]).ok(),
        "ghz" => StateVector::from_reals(registers, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).ok(),
        _ => None,
    }
}

fn format_complex(c: Complex) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("{}{}i", c.re, c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

fn parse_complex(line: usize, token: &str) -> Result<Complex> {
    let t = token.trim();
    if let Some(body) = t.strip_suffix('i') {
        // Pure imaginary or re±im i. Find the split sign after position 0,
        // skipping exponent signs.
        let bytes = body.as_bytes();
        let mut split = None;
        for i in (1..bytes.len()).rev() {
            let c = bytes[i] as char;
            if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
                split = Some(i);
                break;
            }
        }
        match split {
            Some(i) => {
                let re: f64 = body[..i]
                    .parse()
                    .map_err(|_| bad_complex(line, token))
                    .map_err(take)?;
                let im: f64 = body[i..]
                    .parse()
                    .map_err(|_| bad_complex(line, token))
                    .map_err(take)?;
                Ok(Complex::new(re, im))
            }
            None => {
                let im: f64 = if body.is_empty() || body == "+" {
                    1.0
                } else if body == "-" {
                    -1.0
                } else {
                    body.parse()
                        .map_err(|_| bad_complex(line, token))
                        .map_err(take)?
                };
                Ok(Complex::new(0.0, im))
            }
        }
    } else {
        let re: f64 = t
            .parse()
            .map_err(|_| bad_complex(line, token))
            .map_err(take)?;
        Ok(Complex::new(re, 0.0))
    }
}

fn bad_complex(line: usize, token: &str) -> TextIoError {
    TextIoError::Parse {
        line,
        message: format!("cannot parse complex number `{token}`"),
    }
}

fn take(e: TextIoError) -> TextIoError {
    e
}

fn close_to(a: &[Vec<Complex>], b: &[Vec<Complex>]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.iter().zip(y).all(|(p, q)| (p - q).norm() < 1e-14))
}

/// Outcome display names as a `[name0,name1]` suffix when they differ from
/// the plain digits.
fn names_suffix(basis: &OrthonormalBasis) -> String {
    let default = basis.labels().iter().all(|l| l.name == l.value.to_string());
    if default {
        String::new()
    } else {
        let names: Vec<&str> = basis.labels().iter().map(|l| l.name.as_str()).collect();
        format!("[{}]", names.join(","))
    }
}

fn split_names_suffix(token: &str) -> (&str, Option<Vec<&str>>) {
    match token.split_once('[') {
        Some((head, tail)) => match tail.strip_suffix(']') {
            Some(names) => (head, Some(names.split(',').collect())),
            None => (token, None),
        },
        None => (token, None),
    }
}

fn format_single_qubit_basis(basis: &OrthonormalBasis) -> String {
    for (name, reference) in [
        ("Z", OrthonormalBasis::z()),
        ("X", OrthonormalBasis::x()),
        ("Y", OrthonormalBasis::y()),
        ("Z~", OrthonormalBasis::z().swapped()),
        ("X~", OrthonormalBasis::x().swapped()),
        ("Y~", OrthonormalBasis::y().swapped()),
    ] {
        if close_to(basis.vectors(), reference.vectors()) {
            return format!("{name}{}", names_suffix(basis));
        }
    }
    let vectors: Vec<String> = basis
        .vectors()
        .iter()
        .map(|v| {
            v.iter()
                .map(|c| format_complex(*c))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    format!("custom({}){}", vectors.join(";"), names_suffix(basis))
}

fn parse_single_qubit_basis(line: usize, token: &str) -> Result<OrthonormalBasis> {
    let (token, names) = split_names_suffix(token);
    let basis = parse_single_qubit_basis_bare(line, token)?;
    Ok(match names {
        Some(names) => basis.with_names(&names),
        None => basis,
    })
}

fn parse_single_qubit_basis_bare(line: usize, token: &str) -> Result<OrthonormalBasis> {
    match token {
        "Z" => return Ok(OrthonormalBasis::z()),
        "X" => return Ok(OrthonormalBasis::x()),
        "Y" => return Ok(OrthonormalBasis::y()),
        "Z~" => return Ok(OrthonormalBasis::z().swapped()),
        "X~" => return Ok(OrthonormalBasis::x().swapped()),
        "Y~" => return Ok(OrthonormalBasis::y().swapped()),
        _ => {}
    }
    if let Some(body) = token.strip_prefix("xz(").and_then(|t| t.strip_suffix(')')) {
        let theta: f64 = body
            .parse()
            .map_err(|_| bad_complex(line, token))
            .map_err(take)?;
        return Ok(OrthonormalBasis::xz_plane(theta));
    }
    if let Some(body) = token
        .strip_prefix("custom(")
        .and_then(|t| t.strip_suffix(')'))
    {
        let vectors = parse_vector_list(line, body, 2)?;
        if vectors.len() != 2 {
            return err(line, "custom basis needs exactly two vectors");
        }
        return Ok(OrthonormalBasis::new(
            vectors,
            vec![OutcomeLabel::bit(0), OutcomeLabel::bit(1)],
        )
        .map_err(ScenarioError::from)?);
    }
    err(line, format!("unknown basis `{token}`"))
}

fn parse_vector_list(line: usize, body: &str, dim: usize) -> Result<Vec<Vec<Complex>>> {
    let mut vectors = Vec::new();
    for group in body.split(';') {
        let comps: Vec<&str> = group.split(',').collect();
        if comps.len() != dim {
            return err(line, format!("vector needs {dim} components"));
        }
        let mut v = Vec::with_capacity(dim);
        for c in comps {
            v.push(parse_complex(line, c)?);
        }
        vectors.push(v);
    }
    Ok(vectors)
}

fn format_super_basis(basis: &OrthonormalBasis) -> String {
    for (name, reference) in [("okfail", ok_fail_basis()), ("yesno", yes_no_basis())] {
        if close_to(basis.vectors(), reference.vectors()) && basis.labels() == reference.labels() {
            return name.to_string();
        }
    }
    let vectors: Vec<String> = basis
        .vectors()
        .iter()
        .map(|v| {
            v.iter()
                .map(|c| format_complex(*c))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    format!("custom4({}){}", vectors.join(";"), names_suffix(basis))
}

fn parse_super_basis(
    line: usize,
    token: &str,
    friend_basis: Option<&OrthonormalBasis>,
) -> Result<OrthonormalBasis> {
    match token {
        "okfail" => return Ok(ok_fail_basis()),
        "yesno" => return Ok(yes_no_basis()),
        _ => {}
    }
    let (token, names) = split_names_suffix(token);
    let apply_names = |basis: OrthonormalBasis| match &names {
        Some(names) => basis.with_names(names),
        None => basis,
    };
    if let Some(setting) = token.strip_prefix("from:") {
        let Some(friend_basis) = friend_basis else {
            return err(
                line,
                "`from:` supermeasurement requires a prior friend step on this lab",
            );
        };
        let setting = parse_single_qubit_basis(line, setting)?;
        return Ok(apply_names(super_basis(friend_basis, &setting)?));
    }
    if let Some(body) = token
        .strip_prefix("custom4(")
        .and_then(|t| t.strip_suffix(')'))
    {
        let vectors = parse_vector_list(line, body, 4)?;
        let labels: Vec<OutcomeLabel> = (0..vectors.len() as u8).map(OutcomeLabel::bit).collect();
        if vectors.len() == 4 {
            return Ok(apply_names(
                OrthonormalBasis::new(vectors, labels).map_err(ScenarioError::from)?,
            ));
        }
        if vectors.len() == 2 {
            return Ok(apply_names(
                crate::qsim::complete_basis(vectors, labels).map_err(ScenarioError::from)?,
            ));
        }
        return err(line, "custom4 basis needs two or four vectors");
    }
    err(line, format!("unknown supermeasurement basis `{token}`"))
}

pub fn print_protocol(file: &ProtocolFile) -> String {
    let protocol = &file.protocol;
    let mut out = String::from("protocol\n");
    out.push_str(&format!("registers {}\n", protocol.registers().join(" ")));
    let state = protocol.initial();
    let named = [("hardy_fr", 4usize), ("ghz", 8)]
        .iter()
        .find_map(|(name, len)| {
            if state.amps().len() != *len {
                return None;
            }
            let reference = named_state(name, state.registers().to_vec())?;
            (state.max_amp_diff(&reference) < 1e-14).then(|| name.to_string())
        });
    match named {
        Some(name) => out.push_str(&format!("state {name}\n")),
        None => {
            let amps: Vec<String> = state.amps().iter().map(|c| format_complex(*c)).collect();
            out.push_str(&format!("state amps {}\n", amps.join(" ")));
        }
    }
    for step in protocol.steps() {
        match step {
            Step::FriendMeasure {
                name,
                agent,
                system,
                lab,
                basis,
            } => out.push_str(&format!(
                "friend {name} {agent} {system} {lab} {}\n",
                format_single_qubit_basis(basis)
            )),
            Step::SuperMeasure {
                name,
                agent,
                system,
                lab,
                basis,
            } => out.push_str(&format!(
                "super {name} {agent} {system} {lab} {}\n",
                format_super_basis(basis)
            )),
            Step::Ask { asker, lab } => out.push_str(&format!("ask {asker} {lab}\n")),
        }
    }
    for context in &file.contexts {
        out.push_str(&format!("context {}\n", context.join(" ")));
    }
    out
}

pub fn parse_protocol(text: &str) -> Result<ProtocolFile> {
    let mut registers: Vec<String> = Vec::new();
    let mut state: Option<StateVector> = None;
    let mut state_tokens: Option<(usize, Vec<String>)> = None;
    let mut steps: Vec<Step> = Vec::new();
    let mut contexts: Vec<Vec<String>> = Vec::new();
    let mut friend_bases: Vec<(String, OrthonormalBasis)> = Vec::new();
    let mut seen_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "protocol" => seen_header = true,
            "registers" => {
                registers = tokens[1..].iter().map(|t| t.to_string()).collect();
                if registers.is_empty() {
                    return err(line, "no registers declared");
                }
            }
            "state" => {
                if tokens.len() < 2 {
                    return err(line, "state needs a name or amplitude list");
                }
                if tokens[1] == "amps" {
                    state_tokens =
                        Some((line, tokens[2..].iter().map(|t| t.to_string()).collect()));
                } else {
                    state_tokens = Some((line, vec![tokens[1].to_string()]));
                }
            }
            "friend" => {
                if tokens.len() != 6 {
                    return err(line, "friend needs: name agent system lab basis");
                }
                let basis = parse_single_qubit_basis(line, tokens[5])?;
                friend_bases.push((tokens[4].to_string(), basis.clone()));
                steps.push(Step::FriendMeasure {
                    name: tokens[1].to_string(),
                    agent: tokens[2].to_string(),
                    system: tokens[3].to_string(),
                    lab: tokens[4].to_string(),
                    basis,
                });
            }
            "super" => {
                if tokens.len() != 6 {
                    return err(line, "super needs: name agent system lab basis");
                }
                let friend_basis = friend_bases
                    .iter()
                    .find(|(lab, _)| lab == tokens[4])
                    .map(|(_, b)| b);
                let basis = parse_super_basis(line, tokens[5], friend_basis)?;
                steps.push(Step::SuperMeasure {
                    name: tokens[1].to_string(),
                    agent: tokens[2].to_string(),
                    system: tokens[3].to_string(),
                    lab: tokens[4].to_string(),
                    basis,
                });
            }
            "ask" => {
                if tokens.len() != 3 {
                    return err(line, "ask needs: agent lab");
                }
                steps.push(Step::Ask {
                    asker: tokens[1].to_string(),
                    lab: tokens[2].to_string(),
                });
            }
            "context" => {
                contexts.push(tokens[1..].iter().map(|t| t.to_string()).collect());
            }
            other => return err(line, format!("unknown directive `{other}`")),
        }
    }
    if !seen_header {
        return err(0, "missing `protocol` header");
    }
    // Resolve the state once registers are known: system registers are those
    // that appear as `system` in friend steps, in declaration order.
    let system_registers: Vec<String> = registers
        .iter()
        .filter(|r| {
            steps.iter().any(|s| match s {
                Step::FriendMeasure { system, .. } => system == *r,
                _ => false,
            })
        })
        .cloned()
        .collect();
    if let Some((line, tokens)) = state_tokens {
        if tokens.len() == 1 && named_state(&tokens[0], system_registers.clone()).is_some() {
            state = named_state(&tokens[0], system_registers.clone());
        } else {
            let mut amps = Vec::new();
            for t in &tokens {
                amps.push(parse_complex(line, t)?);
            }
            state = Some(
                StateVector::new(system_registers.clone(), amps).map_err(ScenarioError::from)?,
            );
        }
    }
    let Some(state) = state else {
        return err(0, "missing `state` line");
    };
    let protocol = Protocol::new(registers, state, steps)?;
    for context in &contexts {
        let refs: Vec<&str> = context.iter().map(String::as_str).collect();
        protocol.validate_context(&refs)?;
    }
    Ok(ProtocolFile { protocol, contexts })
}

pub fn print_bell(bell: &BellScenario) -> String {
    let mut out = String::from("bell\n");
    let amps: Vec<String> = bell
        .shared_state
        .amps()
        .iter()
        .map(|c| format_complex(*c))
        .collect();
    out.push_str(&format!("state {}\n", amps.join(" ")));
    for party in &bell.parties {
        let settings: Vec<String> = party
            .settings
            .iter()
            .map(|s| format!("{}:{}", s.name, format_single_qubit_basis(&s.basis)))
            .collect();
        out.push_str(&format!("party {} {}\n", party.name, settings.join(" ")));
    }
    if let Some(contexts) = &bell.contexts {
        let groups: Vec<String> = contexts.iter().map(|c| c.join(",")).collect();
        out.push_str(&format!("contexts {}\n", groups.join(" ")));
    }
    out
}

pub fn parse_bell(text: &str) -> Result<BellScenario> {
    let mut state_tokens: Option<(usize, Vec<String>)> = None;
    let mut parties: Vec<BellParty> = Vec::new();
    let mut contexts: Option<Vec<Vec<String>>> = None;
    let mut seen_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "bell" => seen_header = true,
            "state" => {
                state_tokens = Some((line, tokens[1..].iter().map(|t| t.to_string()).collect()))
            }
            "party" => {
                if tokens.len() < 3 {
                    return err(line, "party needs: name setting:basis ...");
                }
                let mut settings = Vec::new();
                for spec in &tokens[2..] {
                    let Some((name, basis)) = spec.split_once(':') else {
                        return err(line, format!("setting `{spec}` must be name:basis"));
                    };
                    settings.push(BellSetting {
                        name: name.to_string(),
                        basis: parse_single_qubit_basis(line, basis)?,
                    });
                }
                parties.push(BellParty {
                    name: tokens[1].to_string(),
                    settings,
                });
            }
            "contexts" => {
                contexts = Some(
                    tokens[1..]
                        .iter()
                        .map(|g| g.split(',').map(|m| m.to_string()).collect())
                        .collect(),
                );
            }
            other => return err(line, format!("unknown directive `{other}`")),
        }
    }
    if !seen_header {
        return err(0, "missing `bell` header");
    }
    let Some((line, tokens)) = state_tokens else {
        return err(0, "missing `state` line");
    };
    let registers: Vec<String> = parties.iter().map(|p| format!("q_{}", p.name)).collect();
    let mut amps = Vec::new();
    for t in &tokens {
        amps.push(parse_complex(line, t)?);
    }
    let shared_state = StateVector::new(registers, amps).map_err(ScenarioError::from)?;
    let bell = BellScenario {
        parties,
        shared_state,
        contexts,
    };
    bell.validate()?;
    Ok(bell)
}
