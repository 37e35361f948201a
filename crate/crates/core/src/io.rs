//! JSON documents for behaviors, experiment collections, correlation sets,
//! models, certificates, states and measurement setups.
//!
//! Parties, settings and `omega` indices in keys are 1-based; outcomes are
//! 0-based positions in flat row-major tables. Exact numbers are strings
//! such as `"1/3"` (integers may be bare); float numbers are JSON numbers.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::error::{input, Error, Result};
use crate::lhv::{BellCertificate, LhvModel};
use crate::locality::ExperimentCollection;
use crate::quantum::{ComplexMatrix, DensityOperator, MeasurementSetup, Povm, C64};
use crate::scalar::{format_rational, parse_rational, rational_from_f64, Rational, Scalar};
use crate::scenario::{
    fmt_tuple, validate_behavior, Behavior, CorrelationKey, CorrelationSet, Scenario,
    ValidationIssue, ValidationReport,
};

/// Number representation of a document.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NumberMode {
    Exact,
    Float,
}

impl NumberMode {
    pub fn name(self) -> &'static str {
        match self {
            NumberMode::Exact => "exact",
            NumberMode::Float => "float",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(NumberMode::Exact),
            "float" => Ok(NumberMode::Float),
            other => input(format!("unknown mode {:?} (expected \"exact\" or \"float\")", other)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadOptions {
    /// Float tolerance attached to float-mode objects.
    pub eps: f64,
    /// Convert the document to this mode after parsing.
    pub mode: Option<NumberMode>,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            eps: crate::scalar::DEFAULT_EPSILON,
            mode: None,
        }
    }
}

/// Scalars with a JSON rendering.
pub trait JsonScalar: Scalar {
    fn to_json(&self) -> Value;
}

impl JsonScalar for f64 {
    fn to_json(&self) -> Value {
        json!(self)
    }
}

impl JsonScalar for Rational {
    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }
}

fn numbers<T: JsonScalar>(v: &[T]) -> Value {
    Value::Array(v.iter().map(JsonScalar::to_json).collect())
}

/// A parsed number before the document's mode is settled.
#[derive(Clone, Debug)]
enum Entry {
    Exact(Rational),
    Float(f64),
    Integer(i64),
}

impl Entry {
    fn parse(v: &Value, what: &str) -> Result<Entry> {
        match v {
            Value::String(s) => parse_rational(s)
                .map(Entry::Exact)
                .ok_or_else(|| Error::Input(format!("{}: cannot parse {:?} as a rational", what, s))),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Entry::Integer(i))
                } else {
                    Ok(Entry::Float(n.as_f64().expect("finite JSON number")))
                }
            }
            other => input(format!("{}: expected a number, found {}", what, other)),
        }
    }

    fn to_exact(&self) -> Result<Rational> {
        match self {
            Entry::Exact(r) => Ok(r.clone()),
            Entry::Integer(i) => Ok(Rational::from_ratio(*i, 1)),
            Entry::Float(x) => rational_from_f64(*x).ok_or_else(|| Error::Input(format!("non-finite number {}", x))),
        }
    }

    fn to_float(&self) -> f64 {
        match self {
            Entry::Exact(r) => r.to_f64(),
            Entry::Integer(i) => *i as f64,
            Entry::Float(x) => *x,
        }
    }
}

/// Settles the mode: a declared mode must agree with the entries, an
/// undeclared one is inferred; strings and fractional numbers never mix.
/// The optional override then converts.
fn settle_mode<'a>(
    declared: Option<NumberMode>,
    entries: impl Iterator<Item = &'a Entry>,
    requested: Option<NumberMode>,
) -> Result<NumberMode> {
    let (mut strings, mut floats) = (false, false);
    for e in entries {
        match e {
            Entry::Exact(_) => strings = true,
            Entry::Float(_) => floats = true,
            Entry::Integer(_) => {}
        }
    }
    if strings && floats {
        return input("document mixes rational strings and floating-point numbers");
    }
    let native = match declared {
        Some(NumberMode::Exact) if floats => {
            return input("mode is \"exact\" but the document contains floating-point numbers")
        }
        Some(NumberMode::Float) if strings => {
            return input("mode is \"float\" but the document contains rational strings")
        }
        Some(m) => m,
        None if strings => NumberMode::Exact,
        None => NumberMode::Float,
    };
    Ok(requested.unwrap_or(native))
}

fn declared_mode(doc: &Map<String, Value>) -> Result<Option<NumberMode>> {
    match doc.get("mode") {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => NumberMode::parse(s).map(Some),
        Some(other) => input(format!("\"mode\" must be a string, found {}", other)),
    }
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::Input(format!("{} must be a JSON object", what)))
}

fn field<'a>(doc: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    doc.get(key).ok_or_else(|| Error::Input(format!("missing field \"{}\"", key)))
}

fn as_count(v: &Value, what: &str) -> Result<usize> {
    match v.as_u64() {
        Some(n) if n >= 1 => Ok(n as usize),
        _ => input(format!("{} must be a positive integer, found {}", what, v)),
    }
}

/// Parses a comma-separated list of 1-based indices into 0-based ones.
fn parse_indices(key: &str, len: usize, what: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = key.split(',').map(str::trim).collect();
    if parts.len() != len {
        return input(format!("{} key {:?} needs {} comma-separated indices", what, key, len));
    }
    parts
        .iter()
        .map(|p| match p.parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i - 1),
            _ => input(format!("{} key {:?}: indices are 1-based positive integers", what, key)),
        })
        .collect()
}

fn index_key(indices: &[usize]) -> String {
    indices.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn read_settings(doc: &Map<String, Value>, parties: usize) -> Result<Vec<usize>> {
    match field(doc, "settings")? {
        Value::Array(a) => {
            if a.len() != parties {
                return input(format!("\"settings\" lists {} parties, \"parties\" is {}", a.len(), parties));
            }
            a.iter().map(|v| as_count(v, "setting count")).collect()
        }
        v => Ok(vec![as_count(v, "\"settings\"")?; parties]),
    }
}

fn read_scenario(doc: &Map<String, Value>) -> Result<Scenario> {
    let parties = as_count(field(doc, "parties")?, "\"parties\"")?;
    let settings = read_settings(doc, parties)?;
    let outcomes = match field(doc, "outcomes")? {
        Value::Object(map) => {
            let mut table: Vec<Vec<Option<usize>>> = settings.iter().map(|&s| vec![None; s]).collect();
            for (key, v) in map {
                let ix = parse_indices(key, 2, "outcomes")?;
                let (n, s) = (ix[0], ix[1]);
                if n >= parties || s >= settings[n] {
                    return input(format!("outcomes key {:?} is outside the scenario", key));
                }
                table[n][s] = Some(as_count(v, &format!("outcome count {:?}", key))?);
            }
            table
                .into_iter()
                .enumerate()
                .map(|(n, row)| {
                    row.into_iter()
                        .enumerate()
                        .map(|(s, k)| k.ok_or_else(|| Error::Input(format!("missing outcome count for \"{},{}\"", n + 1, s + 1))))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
        }
        v => {
            let k = as_count(v, "\"outcomes\"")?;
            settings.iter().map(|&s| vec![k; s]).collect()
        }
    };
    let mut scenario = Scenario::new(outcomes)?;
    if let Some(labels) = doc.get("labels") {
        for (key, v) in as_object(labels, "\"labels\"")? {
            let ix = parse_indices(key, 2, "labels")?;
            let names = v
                .as_array()
                .and_then(|a| a.iter().map(|x| x.as_str().map(String::from)).collect::<Option<Vec<_>>>())
                .ok_or_else(|| Error::Input(format!("labels {:?} must be a list of strings", key)))?;
            scenario = scenario.with_labels(ix[0], ix[1], names)?;
        }
    }
    Ok(scenario)
}

/// Either arithmetic mode.
#[derive(Clone, Debug, PartialEq)]
pub enum Any<E, F> {
    Exact(E),
    Float(F),
}

pub type AnyBehavior = Any<Behavior<Rational>, Behavior<f64>>;
pub type AnyCollection = Any<ExperimentCollection<Rational>, ExperimentCollection<f64>>;
pub type AnyCorrelations = Any<CorrelationSet<Rational>, CorrelationSet<f64>>;
pub type AnyModel = Any<LhvModel<Rational>, LhvModel<f64>>;

impl<E, F> Any<E, F> {
    pub fn mode(&self) -> NumberMode {
        match self {
            Any::Exact(_) => NumberMode::Exact,
            Any::Float(_) => NumberMode::Float,
        }
    }
}

/// A behavior document with its header parsed and tables kept raw, so
/// structural gaps can be reported instead of aborting.
#[derive(Clone, Debug)]
pub struct BehaviorDocument {
    pub scenario: Scenario,
    pub mode: NumberMode,
    pub context: Option<String>,
    tables: Vec<Option<Vec<Entry>>>,
}

impl BehaviorDocument {
    pub fn parse(v: &Value, opts: &ReadOptions) -> Result<Self> {
        let doc = as_object(v, "behavior document")?;
        let scenario = read_scenario(doc)?;
        let tables_v = as_object(field(doc, "tables")?, "\"tables\"")?;
        let n = scenario.num_parties();
        let mut tables: Vec<Option<Vec<Entry>>> = vec![None; scenario.num_setting_tuples()];
        for (key, raw) in tables_v {
            let tuple = parse_indices(key, n, "tables")?;
            scenario
                .check_setting_tuple(&tuple)
                .map_err(|_| Error::Input(format!("table key {:?} is outside the scenario", key)))?;
            let arr = raw
                .as_array()
                .ok_or_else(|| Error::Input(format!("table {:?} must be an array", key)))?;
            let entries = arr
                .iter()
                .map(|x| Entry::parse(x, &format!("table {:?}", key)))
                .collect::<Result<Vec<_>>>()?;
            tables[scenario.setting_index(&tuple)?] = Some(entries);
        }
        let mode = settle_mode(declared_mode(doc)?, tables.iter().flatten().flatten(), opts.mode)?;
        let context = match doc.get("context") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(other) => return input(format!("\"context\" must be a string, found {}", other)),
        };
        Ok(BehaviorDocument {
            scenario,
            mode,
            context,
            tables,
        })
    }

    /// Missing tables and tables of the wrong size.
    pub fn structural_issues(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        for (tuple, table) in self.scenario.setting_tuples().into_iter().zip(&self.tables) {
            let expected: usize = self.scenario.outcome_dims(&tuple).iter().product();
            match table {
                None => issues.push(ValidationIssue::MissingTable { settings: tuple }),
                Some(t) if t.len() != expected => issues.push(ValidationIssue::WrongLength {
                    settings: tuple,
                    expected,
                    found: t.len(),
                }),
                Some(_) => {}
            }
        }
        issues
    }

    pub fn into_behavior(self, eps: f64) -> Result<AnyBehavior> {
        if let Some(issue) = self.structural_issues().first() {
            return input(issue.to_string());
        }
        let tables = self.tables.into_iter().map(|t| t.expect("checked"));
        Ok(match self.mode {
            NumberMode::Exact => Any::Exact(Behavior::new(
                self.scenario,
                tables.map(|t| t.iter().map(Entry::to_exact).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?,
                0.0,
            )?),
            NumberMode::Float => Any::Float(Behavior::new(
                self.scenario,
                tables.map(|t| t.iter().map(Entry::to_float).collect()).collect(),
                eps,
            )?),
        })
    }
}

pub fn read_behavior(v: &Value, opts: &ReadOptions) -> Result<AnyBehavior> {
    BehaviorDocument::parse(v, opts)?.into_behavior(opts.eps)
}

/// Structural and probabilistic validation of a behavior document. The
/// behavior is returned when the document is structurally complete.
pub fn validate_document(v: &Value, opts: &ReadOptions) -> Result<(Option<AnyBehavior>, ValidationReport)> {
    let doc = BehaviorDocument::parse(v, opts)?;
    let issues = doc.structural_issues();
    if !issues.is_empty() {
        return Ok((None, ValidationReport { issues }));
    }
    let b = doc.into_behavior(opts.eps)?;
    let report = match &b {
        Any::Exact(b) => validate_behavior(b),
        Any::Float(b) => validate_behavior(b),
    };
    Ok((Some(b), report))
}

fn scenario_header(scenario: &Scenario) -> Map<String, Value> {
    let mut doc = Map::new();
    doc.insert("parties".into(), json!(scenario.num_parties()));
    doc.insert("settings".into(), json!(scenario.settings()));
    let mut outcomes = Map::new();
    let mut labels = Map::new();
    for (n, row) in scenario.outcome_table().iter().enumerate() {
        for (s, k) in row.iter().enumerate() {
            outcomes.insert(index_key(&[n, s]), json!(k));
            if let Some(l) = scenario.labels(n, s) {
                labels.insert(index_key(&[n, s]), json!(l));
            }
        }
    }
    doc.insert("outcomes".into(), Value::Object(outcomes));
    if !labels.is_empty() {
        doc.insert("labels".into(), Value::Object(labels));
    }
    doc
}

fn mode_of<T: Scalar>() -> &'static str {
    if T::EXACT {
        "exact"
    } else {
        "float"
    }
}

pub fn behavior_to_json<T: JsonScalar>(b: &Behavior<T>, context: Option<&str>) -> Value {
    let mut doc = scenario_header(b.scenario());
    let mut tables = Map::new();
    for (t, table) in b.scenario().setting_tuples().iter().zip(b.tables()) {
        tables.insert(index_key(t), numbers(table));
    }
    doc.insert("tables".into(), Value::Object(tables));
    doc.insert("mode".into(), json!(mode_of::<T>()));
    if let Some(c) = context {
        doc.insert("context".into(), json!(c));
    }
    Value::Object(doc)
}

/// A collection is a JSON array of behavior documents (or an object with an
/// `"experiments"` array). Missing context labels default to `E1`, `E2`, ….
pub fn read_collection(v: &Value, opts: &ReadOptions) -> Result<AnyCollection> {
    let items = match v {
        Value::Array(a) => a,
        Value::Object(o) => field(o, "experiments")?
            .as_array()
            .ok_or_else(|| Error::Input("\"experiments\" must be an array".into()))?,
        _ => return input("collection must be an array of behavior documents"),
    };
    if items.is_empty() {
        return input("collection is empty");
    }
    let docs = items
        .iter()
        .map(|x| BehaviorDocument::parse(x, opts))
        .collect::<Result<Vec<_>>>()?;
    let mode = docs[0].mode;
    if docs.iter().any(|d| d.mode != mode) {
        return input("experiments use different arithmetic modes");
    }
    let labels: Vec<String> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| d.context.clone().unwrap_or_else(|| format!("E{}", i + 1)))
        .collect();
    let behaviors = docs
        .into_iter()
        .map(|d| d.into_behavior(opts.eps))
        .collect::<Result<Vec<_>>>()?;
    Ok(match mode {
        NumberMode::Exact => Any::Exact(ExperimentCollection::new(
            behaviors.into_iter().map(|b| match b {
                Any::Exact(b) => b,
                Any::Float(_) => unreachable!("mode checked"),
            }).collect(),
            labels,
        )?),
        NumberMode::Float => Any::Float(ExperimentCollection::new(
            behaviors.into_iter().map(|b| match b {
                Any::Float(b) => b,
                Any::Exact(_) => unreachable!("mode checked"),
            }).collect(),
            labels,
        )?),
    })
}

pub fn collection_to_json<T: JsonScalar>(c: &ExperimentCollection<T>) -> Value {
    Value::Array(
        c.experiments()
            .iter()
            .zip(c.contexts())
            .map(|(b, l)| behavior_to_json(b, Some(l)))
            .collect(),
    )
}

fn parse_correlation_key(key: &str, parties: usize) -> Result<CorrelationKey> {
    let (sites, settings) = key
        .split_once('|')
        .ok_or_else(|| Error::Input(format!("correlation key {:?} must look like \"1,2|1,2\"", key)))?;
    let count = sites.split(',').count();
    let sites = parse_indices(sites, count, "correlation")?;
    let settings = parse_indices(settings, count, "correlation")?;
    if sites.windows(2).any(|w| w[0] >= w[1]) || sites.iter().any(|&s| s >= parties) {
        return input(format!("correlation key {:?}: sites must be increasing and in range", key));
    }
    Ok(CorrelationKey::new(sites, settings))
}

/// `{"parties", "settings", "means": {"sites|settings": value}, "mode"}`;
/// every setting has two outcomes.
pub fn read_correlations(v: &Value, opts: &ReadOptions) -> Result<AnyCorrelations> {
    let doc = as_object(v, "correlation document")?;
    let parties = as_count(field(doc, "parties")?, "\"parties\"")?;
    let settings = read_settings(doc, parties)?;
    let scenario = Scenario::new(settings.iter().map(|&s| vec![2; s]).collect())?;
    let mut raw = Vec::new();
    for (key, value) in as_object(field(doc, "means")?, "\"means\"")? {
        raw.push((parse_correlation_key(key, parties)?, Entry::parse(value, &format!("mean {:?}", key))?));
    }
    let mode = settle_mode(declared_mode(doc)?, raw.iter().map(|(_, e)| e), opts.mode)?;
    Ok(match mode {
        NumberMode::Exact => {
            let means = raw.into_iter().map(|(k, e)| Ok((k, e.to_exact()?))).collect::<Result<BTreeMap<_, _>>>()?;
            Any::Exact(CorrelationSet::new(scenario, means, 0.0)?)
        }
        NumberMode::Float => {
            let means = raw.into_iter().map(|(k, e)| (k, e.to_float())).collect();
            Any::Float(CorrelationSet::new(scenario, means, opts.eps)?)
        }
    })
}

pub fn correlations_to_json<T: JsonScalar>(c: &CorrelationSet<T>) -> Value {
    let mut means = Map::new();
    for (k, v) in c.means() {
        means.insert(k.to_string(), v.to_json());
    }
    json!({
        "parties": c.scenario().num_parties(),
        "settings": c.scenario().settings(),
        "means": means,
        "mode": mode_of::<T>(),
    })
}

pub fn model_to_json<T: JsonScalar>(m: &LhvModel<T>) -> Value {
    let mut responses = Map::new();
    for (n, party) in m.responses().iter().enumerate() {
        for (s, per_omega) in party.iter().enumerate() {
            for (w, dist) in per_omega.iter().enumerate() {
                responses.insert(index_key(&[n, s, w]), numbers(dist));
            }
        }
    }
    json!({
        "omega": m.omega(),
        "weights": numbers(m.weights()),
        "responses": responses,
        "mode": mode_of::<T>(),
    })
}

/// `{"omega": [labels], "weights": [...], "responses": {"n,s,omega": [dist]}}`
/// with `omega` a 1-based position in the label list.
pub fn read_model(v: &Value, opts: &ReadOptions) -> Result<AnyModel> {
    let doc = as_object(v, "model document")?;
    let omega: Vec<String> = field(doc, "omega")?
        .as_array()
        .and_then(|a| a.iter().map(|x| x.as_str().map(String::from)).collect())
        .ok_or_else(|| Error::Input("\"omega\" must be a list of strings".into()))?;
    let weights = field(doc, "weights")?
        .as_array()
        .ok_or_else(|| Error::Input("\"weights\" must be an array".into()))?
        .iter()
        .map(|x| Entry::parse(x, "weights"))
        .collect::<Result<Vec<_>>>()?;
    let mut cells: BTreeMap<(usize, usize, usize), Vec<Entry>> = BTreeMap::new();
    for (key, value) in as_object(field(doc, "responses")?, "\"responses\"")? {
        let ix = parse_indices(key, 3, "responses")?;
        if ix[2] >= omega.len() {
            return input(format!("responses key {:?} refers to an unknown omega", key));
        }
        let dist = value
            .as_array()
            .ok_or_else(|| Error::Input(format!("response {:?} must be an array", key)))?
            .iter()
            .map(|x| Entry::parse(x, &format!("response {:?}", key)))
            .collect::<Result<Vec<_>>>()?;
        cells.insert((ix[0], ix[1], ix[2]), dist);
    }
    let parties = cells.keys().map(|k| k.0 + 1).max().unwrap_or(0);
    let mut shaped: Vec<Vec<Vec<Vec<Entry>>>> = Vec::with_capacity(parties);
    for n in 0..parties {
        let settings = cells.keys().filter(|k| k.0 == n).map(|k| k.1 + 1).max().unwrap_or(0);
        let mut party = Vec::with_capacity(settings);
        for s in 0..settings {
            let mut per_omega = Vec::with_capacity(omega.len());
            for w in 0..omega.len() {
                per_omega.push(cells.remove(&(n, s, w)).ok_or_else(|| {
                    Error::Input(format!("missing response \"{}\"", index_key(&[n, s, w])))
                })?);
            }
            party.push(per_omega);
        }
        shaped.push(party);
    }
    let all = weights.iter().chain(shaped.iter().flatten().flatten().flatten());
    let mode = settle_mode(declared_mode(doc)?, all, opts.mode)?;
    Ok(match mode {
        NumberMode::Exact => {
            let conv = |v: &[Entry]| v.iter().map(Entry::to_exact).collect::<Result<Vec<_>>>();
            let responses = shaped
                .iter()
                .map(|p| p.iter().map(|s| s.iter().map(|d| conv(d)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            Any::Exact(LhvModel::new(omega, conv(&weights)?, responses, 0.0)?)
        }
        NumberMode::Float => {
            let conv = |v: &[Entry]| v.iter().map(Entry::to_float).collect::<Vec<_>>();
            let responses = shaped
                .iter()
                .map(|p| p.iter().map(|s| s.iter().map(|d| conv(d)).collect()).collect())
                .collect();
            Any::Float(LhvModel::new(omega, conv(&weights), responses, opts.eps)?)
        }
    })
}

pub fn certificate_to_json<T: JsonScalar>(c: &BellCertificate<T>) -> Value {
    let mut coefficients = Map::new();
    for (t, row) in c.scenario().setting_tuples().iter().zip(&c.coefficients) {
        coefficients.insert(index_key(t), numbers(row));
    }
    let mut doc = json!({
        "coefficients": coefficients,
        "bound": c.bound.to_json(),
        "value": c.value.to_json(),
        "margin": c.margin.to_json(),
        "inequality": c.describe(),
    });
    if let Ok((constant, form)) = c.correlator_form() {
        let mut terms = Map::new();
        for (k, v) in form {
            if !v.is_zero() {
                terms.insert(k.to_string(), v.to_json());
            }
        }
        doc["correlator_form"] = json!({ "constant": constant.to_json(), "coefficients": terms });
        if let Ok(full) = c.full_correlator_coefficients() {
            doc["full_correlators"] = numbers(&full);
        }
    }
    doc
}

fn read_complex(v: &Value) -> Result<C64> {
    match v {
        Value::Number(n) => Ok(C64::new(n.as_f64().expect("finite"), 0.0)),
        Value::Array(a) if a.len() == 2 => match (a[0].as_f64(), a[1].as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => input(format!("complex entry {} must be [re, im] numbers", v)),
        },
        _ => input(format!("complex entry {} must be [re, im] or a number", v)),
    }
}

pub fn read_matrix(v: &Value) -> Result<ComplexMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Input("matrix must be an array of rows".into()))?
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::Input("matrix row must be an array".into()))?
                .iter()
                .map(read_complex)
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ComplexMatrix::from_rows(rows)
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(|z| json!([z.re, z.im])).collect()))
            .collect(),
    )
}

/// `{"dims": [d1, ...], "matrix": [[[re, im], ...], ...]}`.
pub fn read_state(v: &Value, eps: f64) -> Result<DensityOperator> {
    let doc = as_object(v, "state document")?;
    let dims = field(doc, "dims")?
        .as_array()
        .ok_or_else(|| Error::Input("\"dims\" must be an array".into()))?
        .iter()
        .map(|d| as_count(d, "subsystem dimension"))
        .collect::<Result<Vec<_>>>()?;
    DensityOperator::new(dims, read_matrix(field(doc, "matrix")?)?, eps)
}

pub fn state_to_json(rho: &DensityOperator) -> Value {
    json!({ "dims": rho.dims(), "matrix": matrix_to_json(rho.matrix()) })
}

/// `{"povms": {"n,s": [effect matrices]}}`; settings of each party must be
/// numbered contiguously from 1.
pub fn read_setup(v: &Value, eps: f64) -> Result<MeasurementSetup> {
    let doc = as_object(v, "setup document")?;
    let mut cells: BTreeMap<(usize, usize), Povm> = BTreeMap::new();
    for (key, value) in as_object(field(doc, "povms")?, "\"povms\"")? {
        let ix = parse_indices(key, 2, "povms")?;
        let effects = value
            .as_array()
            .ok_or_else(|| Error::Input(format!("POVM {:?} must be a list of matrices", key)))?
            .iter()
            .map(read_matrix)
            .collect::<Result<Vec<_>>>()?;
        let povm = Povm::new(effects, eps).map_err(|e| Error::Input(format!("POVM {:?}: {}", key, e)))?;
        cells.insert((ix[0], ix[1]), povm);
    }
    let parties = cells.keys().map(|k| k.0 + 1).max().unwrap_or(0);
    if let Some(expected) = doc.get("parties") {
        if as_count(expected, "\"parties\"")? != parties {
            return input(format!("\"parties\" is {} but POVMs cover {}", expected, parties));
        }
    }
    let mut povms = Vec::with_capacity(parties);
    for n in 0..parties {
        let settings = cells.keys().filter(|k| k.0 == n).map(|k| k.1 + 1).max().unwrap_or(0);
        let mut row = Vec::with_capacity(settings);
        for s in 0..settings {
            row.push(cells.remove(&(n, s)).ok_or_else(|| {
                Error::Input(format!("missing POVM \"{}\"", index_key(&[n, s])))
            })?);
        }
        povms.push(row);
    }
    MeasurementSetup::new(povms)
}

pub fn setup_to_json(setup: &MeasurementSetup) -> Value {
    let mut povms = Map::new();
    for (n, party) in setup.povms().iter().enumerate() {
        for (s, p) in party.iter().enumerate() {
            povms.insert(index_key(&[n, s]), Value::Array(p.effects().iter().map(matrix_to_json).collect()));
        }
    }
    json!({ "parties": setup.povms().len(), "povms": povms })
}

/// Renders a setting tuple for reports, e.g. `(1,2)`.
pub fn tuple_label(t: &[usize]) -> String {
    fmt_tuple(t)
}
