//! JSON network documents and report fragments.
//!
//! ```json
//! {
//!   "banks": [{"id": "v1", "external": "0"}, {"id": "v2", "external": "6/5"}],
//!   "liabilities": [{"from": "v2", "to": "v1", "amount": "6"}],
//!   "default_costs": {"alpha": "1", "beta": "1"}
//! }
//! ```
//!
//! Amounts are strings (`"8/9"`, `"2.2"`) or JSON numbers. Repeated
//! `(from, to)` pairs are summed, and missing default costs mean
//! `alpha = beta = 1`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::clearing::ClearingResult;
use crate::error::{Error, Result};
use crate::network::{Edge, FinancialNetwork, InjectionPlan, StrategyProfile};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amount {
    Text(String),
    Number(serde_json::Number),
}

impl Amount {
    fn parse<S: Scalar>(&self, field: &str) -> Result<S> {
        let text = match self {
            Amount::Text(t) => t.clone(),
            Amount::Number(n) => n.to_string(),
        };
        let value = S::parse_amount(&text).map_err(|_| Error::Document(format!("{field}: cannot parse {text:?}")))?;
        if value.is_negative_tol() {
            return Err(Error::Document(format!("{field}: negative amount {text}")));
        }
        Ok(value)
    }

    fn of<S: Scalar>(value: &S) -> Self {
        Amount::Text(value.to_canonical())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankEntry {
    pub id: String,
    pub external: Amount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiabilityEntry {
    pub from: String,
    pub to: String,
    pub amount: Amount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefaultCosts {
    pub alpha: Amount,
    pub beta: Amount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub banks: Vec<BankEntry>,
    #[serde(default)]
    pub liabilities: Vec<LiabilityEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_costs: Option<DefaultCosts>,
}

/// A network together with the identifiers of its banks.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedNetwork<S> {
    pub ids: Vec<String>,
    pub network: FinancialNetwork<S>,
}

impl<S: Scalar> NamedNetwork<S> {
    /// Banks named `v1..vn`.
    pub fn with_default_ids(network: FinancialNetwork<S>) -> Self {
        let ids = (1..=network.len()).map(|i| format!("v{i}")).collect();
        Self { ids, network }
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.ids.iter().position(|x| x == id).ok_or_else(|| Error::Document(format!("unknown bank id {id:?}")))
    }

    pub fn id(&self, bank: usize) -> &str {
        &self.ids[bank]
    }

    pub fn to_document(&self) -> NetworkDocument {
        let net = &self.network;
        let banks = (0..net.len())
            .map(|i| BankEntry { id: self.ids[i].clone(), external: Amount::of(net.external(i)) })
            .collect();
        let liabilities = net
            .edges()
            .into_iter()
            .map(|e| LiabilityEntry {
                from: self.ids[e.borrower].clone(),
                to: self.ids[e.lender].clone(),
                amount: Amount::of(net.liability(e.borrower, e.lender)),
            })
            .collect();
        let default_costs = Some(DefaultCosts { alpha: Amount::of(net.alpha()), beta: Amount::of(net.beta()) });
        NetworkDocument { banks, liabilities, default_costs }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("documents always serialize")
    }
}

pub fn parse_document<S: Scalar>(doc: &NetworkDocument) -> Result<NamedNetwork<S>> {
    let mut index = HashMap::new();
    for (i, bank) in doc.banks.iter().enumerate() {
        if index.insert(bank.id.clone(), i).is_some() {
            return Err(Error::Document(format!("duplicate bank id {:?}", bank.id)));
        }
    }
    let lookup = |id: &str, field: &str| {
        index.get(id).copied().ok_or_else(|| Error::Document(format!("{field}: unknown bank id {id:?}")))
    };
    let externals = doc
        .banks
        .iter()
        .enumerate()
        .map(|(i, b)| b.external.parse(&format!("banks[{i}].external")))
        .collect::<Result<Vec<S>>>()?;
    let mut edges = Vec::with_capacity(doc.liabilities.len());
    for (k, l) in doc.liabilities.iter().enumerate() {
        let from = lookup(&l.from, &format!("liabilities[{k}].from"))?;
        let to = lookup(&l.to, &format!("liabilities[{k}].to"))?;
        if from == to {
            return Err(Error::Document(format!("liabilities[{k}]: bank {:?} owes itself", l.from)));
        }
        edges.push((from, to, l.amount.parse(&format!("liabilities[{k}].amount"))?));
    }
    let (alpha, beta) = match &doc.default_costs {
        Some(c) => (c.alpha.parse("default_costs.alpha")?, c.beta.parse("default_costs.beta")?),
        None => (S::one(), S::one()),
    };
    let network = FinancialNetwork::from_edges(externals, edges, alpha, beta)?;
    Ok(NamedNetwork { ids: doc.banks.iter().map(|b| b.id.clone()).collect(), network })
}

/// Parses a JSON network document.
pub fn parse_network<S: Scalar>(text: &str) -> Result<NamedNetwork<S>> {
    let doc: NetworkDocument = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    parse_document(&doc)
}

fn amounts<S: Scalar>(values: &[S]) -> Vec<String> {
    values.iter().map(Scalar::to_canonical).collect()
}

/// Payments (nonzero entries), assets, defaults and liquidity.
pub fn clearing_report<S: Scalar>(named: &NamedNetwork<S>, clearing: &ClearingResult<S>) -> Value {
    let mut payments = Vec::new();
    for (i, row) in clearing.payments.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            if named.network.has_edge(i, j) {
                payments.push(json!({"from": named.id(i), "to": named.id(j), "amount": p.to_canonical()}));
            }
        }
    }
    let assets: serde_json::Map<String, Value> =
        clearing.assets.iter().enumerate().map(|(i, a)| (named.id(i).to_string(), json!(a.to_canonical()))).collect();
    json!({
        "payments": payments,
        "assets": assets,
        "defaults": clearing.defaults.iter().map(|&i| named.id(i)).collect::<Vec<_>>(),
        "liquidity": clearing.liquidity.to_canonical(),
    })
}

pub fn vector_report<S: Scalar>(named: &NamedNetwork<S>, values: &[S]) -> Value {
    let map: serde_json::Map<String, Value> =
        amounts(values).into_iter().enumerate().map(|(i, v)| (named.id(i).to_string(), json!(v))).collect();
    Value::Object(map)
}

pub fn plan_report<S: Scalar>(named: &NamedNetwork<S>, plan: &InjectionPlan<S>) -> Value {
    let transfers: Vec<Value> =
        plan.transfers.iter().map(|(b, a)| json!({"bank": named.id(*b), "amount": a.to_canonical()})).collect();
    json!({"budget": plan.budget.to_canonical(), "spent": plan.total().to_canonical(), "transfers": transfers})
}

pub fn edges_report<S: Scalar>(named: &NamedNetwork<S>, edges: &[Edge]) -> Value {
    Value::Array(edges.iter().map(|e| json!({"from": named.id(e.borrower), "to": named.id(e.lender)})).collect())
}

/// A profile as its list of removed edges.
pub fn profile_report<S: Scalar>(named: &NamedNetwork<S>, profile: &StrategyProfile) -> Value {
    edges_report(named, &profile.removed_edges())
}

/// Parses `"v4>v1,v4>v2"` (borrower `>` lender, by id) into a profile;
/// the empty string and `keep-all` mean no removals.
pub fn parse_profile<S: Scalar>(named: &NamedNetwork<S>, text: &str) -> Result<StrategyProfile> {
    let text = text.trim();
    let mut edges = Vec::new();
    if !text.is_empty() && text != "keep-all" {
        for part in text.split(',') {
            let (from, to) = part
                .split_once('>')
                .ok_or_else(|| Error::InvalidInput(format!("expected borrower>lender, got {part:?}")))?;
            edges.push(Edge::new(named.index_of(from.trim())?, named.index_of(to.trim())?));
        }
    }
    let profile = StrategyProfile::from_edges(named.network.len(), &edges)?;
    profile.validate_for(&named.network)?;
    Ok(profile)
}
