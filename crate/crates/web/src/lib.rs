//! Browser bindings: every call takes a network document as JSON and
//! returns a JSON report string.

use finnet::analytics::{increased_liquidity, threat_index};
use finnet::bailout::{greedy_injections, optimal_injections_lp};
use finnet::clearing::greatest_clearing;
use finnet::document::{clearing_report, plan_report, profile_report, vector_report};
use finnet::games::{br_dynamics, play, utilities, Dynamics};
use finnet::scenarios::{describe, Params};
use finnet::{parse_network, NamedNetwork, PolicySpec, Rational, Scalar, StrategyProfile};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const DYNAMICS_STEPS: usize = 500;

fn load(doc: &str) -> Result<NamedNetwork<Rational>, String> {
    parse_network(doc).map_err(|e| e.to_string())
}

fn render(result: Result<Value, String>) -> Result<String, JsValue> {
    result.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

/// Network document of a named scenario with default parameters.
pub fn scenario_json(name: &str) -> Result<Value, String> {
    let d = describe::<Rational>(name, &Params::new()).map_err(|e| e.to_string())?;
    serde_json::to_value(NamedNetwork::with_default_ids(d.network).to_document()).map_err(|e| e.to_string())
}

/// Greatest clearing plus threat indices.
pub fn clear_json(doc: &str) -> Result<Value, String> {
    let named = load(doc)?;
    let clearing = greatest_clearing(&named.network).map_err(|e| e.to_string())?;
    let mut report = clearing_report(&named, &clearing);
    report["threat"] = threat_index(&named.network, &clearing).map_or(Value::Null, |mu| vector_report(&named, &mu));
    report["float_liquidity"] = json!(clearing.liquidity.to_f64());
    Ok(report)
}

/// Greedy and LP-optimal injections side by side.
pub fn compare_json(doc: &str, budget: &str) -> Result<Value, String> {
    let named = load(doc)?;
    let net = &named.network;
    let budget = Rational::parse_amount(budget).map_err(|e| e.to_string())?;
    let before = greatest_clearing(net).map_err(|e| e.to_string())?;
    let greedy = greedy_injections(net, &budget).map_err(|e| e.to_string())?;
    let greedy_gain = increased_liquidity(&before, &greedy.clearing).map_err(|e| e.to_string())?;
    let mut report = json!({
        "liquidity_before": before.liquidity.to_canonical(),
        "greedy": {
            "plan": plan_report(&named, &greedy.plan),
            "increased_liquidity": greedy_gain.to_canonical(),
            "clearing": clearing_report(&named, &greedy.clearing),
        },
    });
    match optimal_injections_lp(net, &budget) {
        Ok((plan, clearing)) => {
            let gain = increased_liquidity(&before, &clearing).map_err(|e| e.to_string())?;
            report["optimal"] = json!({
                "plan": plan_report(&named, &plan),
                "increased_liquidity": gain.to_canonical(),
                "clearing": clearing_report(&named, &clearing),
            });
            if gain > Rational::zero() {
                report["ratio"] = json!((greedy_gain / gain).to_canonical());
            }
        }
        Err(e) => report["optimal"] = json!({"error": e.to_string()}),
    }
    Ok(report)
}

/// Best-response dynamics from keep-all under `policy` (`none`, `greedy:M`, `optimal:M`).
pub fn dynamics_json(doc: &str, policy: &str) -> Result<Value, String> {
    let named = load(doc)?;
    let net = &named.network;
    let policy = PolicySpec::<Rational>::parse(policy).map_err(|e| e.to_string())?;
    let entry = |p: &StrategyProfile| -> Result<Value, String> {
        let clearing = play(net, p, &policy).map_err(|e| e.to_string())?;
        let u = utilities(net, p, &policy).map_err(|e| e.to_string())?;
        Ok(json!({
            "removed": profile_report(&named, p),
            "utilities": vector_report(&named, &u),
            "liquidity": clearing.liquidity.to_canonical(),
        }))
    };
    let start = StrategyProfile::keep_all(net.len());
    let result = br_dynamics(net, &start, &policy, DYNAMICS_STEPS).map_err(|e| e.to_string())?;
    Ok(match result {
        Dynamics::Equilibrium(p) => json!({"outcome": "equilibrium", "states": [entry(&p)?]}),
        Dynamics::Cycle(states) => {
            json!({"outcome": "cycle", "states": states.iter().map(&entry).collect::<Result<Vec<_>, _>>()?})
        }
        Dynamics::Truncated(p) => json!({"outcome": "truncated", "states": [entry(&p)?]}),
    })
}

#[wasm_bindgen]
pub fn scenario(name: &str) -> Result<String, JsValue> {
    render(scenario_json(name))
}

#[wasm_bindgen]
pub fn clear(doc: &str) -> Result<String, JsValue> {
    render(clear_json(doc))
}

#[wasm_bindgen]
pub fn compare_injections(doc: &str, budget: &str) -> Result<String, JsValue> {
    render(compare_json(doc, budget))
}

#[wasm_bindgen]
pub fn game_dynamics(doc: &str, policy: &str) -> Result<String, JsValue> {
    render(dynamics_json(doc, policy))
}
