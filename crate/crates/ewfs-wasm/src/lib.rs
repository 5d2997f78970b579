//! Browser bindings for the simulator: each function returns a JSON payload
//! rendered by the static page in `www/`.

use ewfs::contextuality::classify;
use ewfs::empirical::model_from_bell;
use ewfs::reasoning::{self, AssumptionSet, NogoVariant};
use ewfs::report::{classification_report, table_report};
use ewfs::scenario::{builtin_bell, builtin_protocol};
use wasm_bindgen::prelude::*;

fn json<T: serde::Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn tables_impl(model: &str) -> Result<String, String> {
    let bell = builtin_bell(model).ok_or_else(|| format!("unknown model `{model}`"))?;
    let em = model_from_bell(&bell).map_err(|e| e.to_string())?;
    json(&table_report(&em))
}

fn classify_impl(model: &str) -> Result<String, String> {
    let bell = builtin_bell(model).ok_or_else(|| format!("unknown model `{model}`"))?;
    let em = model_from_bell(&bell).map_err(|e| e.to_string())?;
    let class = classify(&em).map_err(|e| e.to_string())?;
    json(&classification_report(&class))
}

fn nogo_impl(
    protocol: &str,
    aoe: bool,
    born_compat_aoe: bool,
    personal_knowledge: bool,
    classical_agreement: bool,
    born_compat_persk: bool,
    born_practicality: bool,
) -> Result<String, String> {
    let p = builtin_protocol(protocol).ok_or_else(|| format!("unknown protocol `{protocol}`"))?;
    let assumptions = AssumptionSet {
        aoe,
        born_compat_aoe: born_compat_aoe && aoe,
        personal_knowledge,
        classical_agreement,
        born_compat_persk: born_compat_persk && personal_knowledge,
        born_practicality,
    };
    let variant = if born_practicality {
        NogoVariant::Practicality
    } else if personal_knowledge {
        NogoVariant::Agreement
    } else {
        NogoVariant::Truth
    };
    let report = reasoning::run_nogo_with(&p, variant, assumptions).map_err(|e| e.to_string())?;
    json(&report)
}

fn fr_chain_impl(u: u8, w: u8) -> Result<String, String> {
    let p = builtin_protocol("fr").expect("built-in protocol");
    let report = reasoning::fr_chain(&p, u, w).map_err(|e| e.to_string())?;
    json(&report)
}

fn specker_impl(u: u8, v: u8, w: u8) -> Result<String, String> {
    let p = builtin_protocol("ghz-fr").expect("built-in protocol");
    let report = reasoning::specker_triangle(&p, u, v, w).map_err(|e| e.to_string())?;
    json(&report)
}

/// Support/probability table of a built-in model (`hardy`, `ghz`, `chsh`,
/// `product`) as JSON.
#[wasm_bindgen]
pub fn tables(model: &str) -> Result<String, JsError> {
    tables_impl(model).map_err(|e| JsError::new(&e))
}

/// Hierarchy classification of a built-in model as JSON.
#[wasm_bindgen]
pub fn classify_model(model: &str) -> Result<String, JsError> {
    classify_impl(model).map_err(|e| JsError::new(&e))
}

/// Run the derive→communicate→check pipeline with explicit assumption
/// toggles on a built-in protocol (`fr`, `ghz-fr`) and return the report.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn nogo(
    protocol: &str,
    aoe: bool,
    born_compat_aoe: bool,
    personal_knowledge: bool,
    classical_agreement: bool,
    born_compat_persk: bool,
    born_practicality: bool,
) -> Result<String, JsError> {
    nogo_impl(
        protocol,
        aoe,
        born_compat_aoe,
        personal_knowledge,
        classical_agreement,
        born_compat_persk,
        born_practicality,
    )
    .map_err(|e| JsError::new(&e))
}

/// Post-selected reasoning chain of the two-party protocol.
#[wasm_bindgen]
pub fn fr_chain(u: u8, w: u8) -> Result<String, JsError> {
    fr_chain_impl(u, w).map_err(|e| JsError::new(&e))
}

/// Pairwise parity constraints from post-selecting the three
/// supermeasurement outcomes.
#[wasm_bindgen]
pub fn specker(u: u8, v: u8, w: u8) -> Result<String, JsError> {
    specker_impl(u, v, w).map_err(|e| JsError::new(&e))
}
