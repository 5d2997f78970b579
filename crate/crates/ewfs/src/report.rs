//! Serialisable result payloads shared by the command-line tool and the
//! browser demo, plus their plain-text renderings.

use crate::contextuality::{Classification, LpOutcome};
use crate::empirical::{possibilistic, EmpiricalModel};
use crate::rational::{format_rational, snap_probability};
use crate::reasoning::{FrChainReport, ModifiedFrReport, NogoReport, RenderedStatement, Verdict};
use crate::scenario::JointDistribution;
use crate::POSSIBILISTIC_EPS;
use serde::Serialize;

/// A possibility/probability table in the row-per-context layout.
#[derive(Clone, Debug, Serialize)]
pub struct TableReport {
    pub measurements: Vec<String>,
    pub rows: Vec<ContextRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContextRow {
    pub context: Vec<String>,
    pub cells: Vec<OutcomeCell>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutcomeCell {
    pub outcome: Vec<u8>,
    pub possible: bool,
    pub probability: f64,
    /// Exact fraction when the probability snaps to a small rational.
    pub fraction: Option<String>,
}

pub fn table_report(model: &EmpiricalModel) -> TableReport {
    let pm = possibilistic(model, POSSIBILISTIC_EPS);
    let rows = model
        .spec
        .contexts
        .iter()
        .enumerate()
        .map(|(c, context)| {
            let cells = model
                .spec
                .context_outcomes(context)
                .into_iter()
                .map(|outcome| {
                    let probability = model.probability(c, &outcome);
                    OutcomeCell {
                        possible: pm.supports[c].contains(&outcome),
                        fraction: snap_probability(probability)
                            .ok()
                            .map(|r| format_rational(&r)),
                        probability,
                        outcome,
                    }
                })
                .collect();
            ContextRow {
                context: context.clone(),
                cells,
            }
        })
        .collect();
    TableReport {
        measurements: model.spec.measurements.clone(),
        rows,
    }
}

/// Paper-style grid: one row per context, one column per joint outcome;
/// cells are 0/1 possibilities or exact fractions.
pub fn render_table(report: &TableReport, probabilities: bool) -> String {
    let mut out = String::new();
    let header: Vec<String> = report
        .rows
        .first()
        .map(|row| {
            row.cells
                .iter()
                .map(|c| {
                    c.outcome
                        .iter()
                        .map(u8::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect()
        })
        .unwrap_or_default();
    let label_width = report
        .rows
        .iter()
        .map(|r| r.context.join(",").len())
        .max()
        .unwrap_or(0)
        .max(8);
    let min_cell = if probabilities { 8 } else { 4 };
    let cell_width = header
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max(min_cell);
    out.push_str(&format!("{:label_width$} |", "context"));
    for h in &header {
        out.push_str(&format!(" {h:>cell_width$}"));
    }
    out.push('\n');
    out.push_str(&"-".repeat(label_width + 2 + header.len() * (cell_width + 1)));
    out.push('\n');
    for row in &report.rows {
        out.push_str(&format!("{:label_width$} |", row.context.join(",")));
        for cell in &row.cells {
            let rendered = if probabilities {
                cell.fraction
                    .clone()
                    .unwrap_or_else(|| format!("{:.6}", cell.probability))
            } else if cell.possible {
                "1".to_string()
            } else {
                "0".to_string()
            };
            out.push_str(&format!(" {rendered:>cell_width$}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub level: String,
    pub consistent_global_count: usize,
    pub witness: Option<WitnessReport>,
    pub lp: Option<LpReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub context: Vec<String>,
    pub section: Vec<(String, u8)>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", content = "weights")]
pub enum LpReport {
    #[serde(rename = "feasible")]
    Feasible(Vec<MixtureTerm>),
    #[serde(rename = "infeasible")]
    Infeasible,
}

#[derive(Clone, Debug, Serialize)]
pub struct MixtureTerm {
    pub assignment: Vec<(String, u8)>,
    pub weight: String,
}

pub fn classification_report(class: &Classification) -> ClassificationReport {
    ClassificationReport {
        level: class.level.to_string(),
        consistent_global_count: class.consistent_global_count,
        witness: class.logical_witness.as_ref().map(|w| WitnessReport {
            context: w.context.clone(),
            section: w.section.iter().map(|(m, &v)| (m.clone(), v)).collect(),
        }),
        lp: class.lp.as_ref().map(|lp| match lp {
            LpOutcome::Infeasible => LpReport::Infeasible,
            LpOutcome::Feasible(weights) => LpReport::Feasible(
                weights
                    .iter()
                    .map(|(g, w)| MixtureTerm {
                        assignment: g.0.iter().map(|(m, &v)| (m.clone(), v)).collect(),
                        weight: format_rational(w),
                    })
                    .collect(),
            ),
        }),
    }
}

pub fn render_classification(report: &ClassificationReport) -> String {
    let mut out = format!("level: {}\n", report.level);
    out.push_str(&format!(
        "consistent global assignments: {}\n",
        report.consistent_global_count
    ));
    if let Some(w) = &report.witness {
        let section = w
            .section
            .iter()
            .map(|(m, v)| format!("{m}↦{v}"))
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!(
            "witness: possible section {{{section}}} of context {{{}}} extends to no global assignment\n",
            w.context.join(",")
        ));
    }
    match &report.lp {
        Some(LpReport::Infeasible) => {
            out.push_str("exact feasibility: no distribution over global assignments reproduces the tables\n");
        }
        Some(LpReport::Feasible(weights)) => {
            out.push_str("deterministic mixture:\n");
            for term in weights {
                let assignment = term
                    .assignment
                    .iter()
                    .map(|(m, v)| format!("{m}↦{v}"))
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push_str(&format!("  {} × {{{assignment}}}\n", term.weight));
            }
        }
        None => {}
    }
    out
}

fn verdict_lines(verdict: &Verdict, out: &mut String) {
    match verdict {
        Verdict::Sat { model, model_count } => {
            out.push_str(&format!("verdict: SAT ({model_count} models)\n"));
            if !model.is_empty() {
                let rendered = model
                    .iter()
                    .map(|(k, v)| format!("{k} = {v}"))
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push_str(&format!("model: {rendered}\n"));
            }
        }
        Verdict::Unsat { certificate } => {
            out.push_str("verdict: UNSAT\n");
            out.push_str("minimal inconsistent core:\n");
            for item in certificate {
                out.push_str(&format!("  - {item}\n"));
            }
        }
    }
}

/// Markdown-ish rendering of a no-go pipeline run.
pub fn render_nogo(report: &NogoReport) -> String {
    let mut out = format!("# no-go run: {}\n", report.variant);
    let mut flags = Vec::new();
    let a = &report.assumptions;
    if a.aoe {
        flags.push("AOE");
    }
    if a.born_compat_aoe {
        flags.push("BornCompat[AOE]");
    }
    if a.personal_knowledge {
        flags.push("PersonalKnowledge");
    }
    if a.classical_agreement {
        flags.push("ClassicalAgreement");
    }
    if a.born_compat_persk {
        flags.push("BornCompat[PersonalKnowledge]");
    }
    if a.born_practicality {
        flags.push("BornPracticality");
    }
    out.push_str(&format!("assumptions: {}\n", flags.join(", ")));
    out.push_str("statements:\n");
    for s in &report.statements {
        let cond = match s.condition {
            crate::reasoning::Condition::Unconditional => "",
            crate::reasoning::Condition::OnGather => " [on gather]",
        };
        out.push_str(&format!("  - {s}{cond}\n"));
    }
    if !report.equalities.is_empty() {
        out.push_str("overlap equalities:\n");
        for e in &report.equalities {
            out.push_str(&format!("  - {e}\n"));
        }
    }
    verdict_lines(&report.verdict, &mut out);
    if let Some(check) = &report.gf2_check {
        out.push_str(&format!(
            "GF(2) sum of certificate: left-hand sides cancel = {}, right-hand sides sum to {} (0 = 1)\n",
            check.lhs_cancels, check.rhs_sum
        ));
    }
    if !report.resolutions.is_empty() {
        out.push_str("resolution statements:\n");
        for r in &report.resolutions {
            out.push_str(&format!("  - {}\n", r.text));
        }
    }
    out.push_str(&format!(
        "expected verdict reproduced: {}\n",
        report.expected_verdict_reproduced
    ));
    out
}

pub fn render_resolutions(statements: &[RenderedStatement]) -> String {
    statements
        .iter()
        .map(|r| format!("- {}", r.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Dual labelling: `ok (0)` when a display name exists, plain digit otherwise.
fn named_outcome(name: &str, value: u8) -> String {
    if name == value.to_string() {
        name.to_string()
    } else {
        format!("{name} ({value})")
    }
}

pub fn render_fr_chain(report: &FrChainReport) -> String {
    let mut out = String::new();
    let postselect = report
        .postselect
        .iter()
        .zip(&report.postselect_names)
        .map(|((m, v), name)| {
            format!("{} = {}", crate::reasoning::symbol(m), named_outcome(name, *v))
        })
        .collect::<Vec<_>>()
        .join(", ");
    out.push_str(&format!(
        "post-selection: {postselect} (probability {:.12})\n",
        report.postselect_probability
    ));
    if report.links.is_empty() {
        out.push_str("chain: no forced value; both outcomes remain possible\n");
    } else {
        out.push_str("chain:\n");
        for link in &report.links {
            out.push_str(&format!(
                "  {} = {} ⇒ {} = {}   [context {{{}}}]\n",
                crate::reasoning::symbol(&link.given.0),
                named_outcome(&link.given_name, link.given.1),
                crate::reasoning::symbol(&link.forced.0),
                named_outcome(&link.forced_name, link.forced.1),
                link.context.join(",")
            ));
        }
    }
    match &report.contradiction {
        Some(c) => out.push_str(&format!("contradiction: {c}\n")),
        None => out.push_str("no contradiction derivable\n"),
    }
    out
}

pub fn render_modified_fr(report: &ModifiedFrReport) -> String {
    let mut out = String::new();
    for p in &report.predictions {
        out.push_str(&format!(
            "- {} (projection probability {:.3e})\n",
            p.text, p.probability
        ));
    }
    let postselect = report
        .postselect
        .iter()
        .zip(&report.postselect_names)
        .map(|((m, v), name)| {
            format!("{} = {}", crate::reasoning::symbol(m), named_outcome(name, *v))
        })
        .collect::<Vec<_>>()
        .join(", ");
    out.push_str(&format!("given {postselect}:\n"));
    verdict_lines(&report.verdict, &mut out);
    out
}

/// Serialisable view of a joint distribution.
#[derive(Clone, Debug, Serialize)]
pub struct DistributionReport {
    pub variables: Vec<String>,
    pub entries: Vec<(Vec<u8>, f64)>,
}

impl From<&JointDistribution> for DistributionReport {
    fn from(d: &JointDistribution) -> Self {
        DistributionReport {
            variables: d.variables.clone(),
            entries: d
                .probabilities
                .iter()
                .map(|(o, &p)| (o.clone(), p))
                .collect(),
        }
    }
}
