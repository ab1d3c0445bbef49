use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use super::{ErrorKind, Scenario, ScenarioError, ScenarioErrors};
use crate::controller::SharingRules;
use crate::crrm::{CellConfig, CrrmParams, ExternalInterferer, Faults};
use crate::radio::PropagationParams;
use crate::spectrum::{BandPlan, Channel, GeoZone, OperatorId};
use crate::traffic::TrafficProfile;

const REQUIRED: &[&str] = &[
    "schema",
    "name",
    "seed",
    "horizon_tti",
    "channels",
    "zones",
    "operators",
    "cells",
];

/// Parses and validates a scenario document, reporting every error found
/// rather than stopping at the first.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioErrors> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        let mut err = ScenarioError::new(ErrorKind::SyntaxError, "", e.to_string());
        err.line = Some(e.line());
        ScenarioErrors(vec![err])
    })?;
    let Value::Object(obj) = root else {
        return Err(ScenarioErrors(vec![ScenarioError::new(
            ErrorKind::SchemaError,
            "",
            "top level must be an object",
        )]));
    };

    let mut errs = Vec::new();
    check_shape(&obj, &mut errs);
    if !errs.is_empty() {
        return Err(ScenarioErrors(errs));
    }
    let scenario: Scenario = serde_json::from_value(Value::Object(obj))
        .map_err(|e| ScenarioErrors(vec![ScenarioError::new(ErrorKind::SchemaError, "", e.to_string())]))?;
    let errs = scenario.validate();
    if errs.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioErrors(errs))
    }
}

fn check_shape(obj: &Map<String, Value>, errs: &mut Vec<ScenarioError>) {
    for key in REQUIRED {
        if !obj.contains_key(*key) {
            errs.push(ScenarioError::new(
                ErrorKind::SchemaError,
                *key,
                "missing required field",
            ));
        }
    }
    for (key, v) in obj {
        match key.as_str() {
            "schema" | "name" | "description" => one::<String>(key, v, errs),
            "seed" | "horizon_tti" => one::<u64>(key, v, errs),
            "tti_ms" => one::<f64>(key, v, errs),
            "band_plan" => one::<Option<BandPlan>>(key, v, errs),
            "channels" => many::<Channel>(key, v, errs),
            "zones" => many::<GeoZone>(key, v, errs),
            "operators" => many::<OperatorId>(key, v, errs),
            "cells" => many::<CellConfig>(key, v, errs),
            "repositories" => many::<super::RepositoryConfig>(key, v, errs),
            "controller" => controller(v, errs),
            "grant_requests" => many::<super::GrantRequest>(key, v, errs),
            "activations" => many::<super::ActivationEvent>(key, v, errs),
            "propagation" => one::<PropagationParams>(key, v, errs),
            "traffic" => many::<TrafficProfile>(key, v, errs),
            "crrm" => one::<CrrmParams>(key, v, errs),
            "interferers" => many::<ExternalInterferer>(key, v, errs),
            "faults" => one::<Faults>(key, v, errs),
            _ => errs.push(ScenarioError::new(ErrorKind::SchemaError, key.clone(), "unknown field")),
        }
    }
}

fn one<T: DeserializeOwned>(path: &str, v: &Value, errs: &mut Vec<ScenarioError>) {
    if let Err(e) = T::deserialize(v) {
        errs.push(ScenarioError::new(ErrorKind::SchemaError, path, e.to_string()));
    }
}

fn many<T: DeserializeOwned>(path: &str, v: &Value, errs: &mut Vec<ScenarioError>) {
    match v.as_array() {
        None => errs.push(ScenarioError::new(ErrorKind::SchemaError, path, "expected an array")),
        Some(items) => {
            for (i, item) in items.iter().enumerate() {
                one::<T>(&format!("{path}[{i}]"), item, errs);
            }
        }
    }
}

fn controller(v: &Value, errs: &mut Vec<ScenarioError>) {
    let Some(obj) = v.as_object() else {
        errs.push(ScenarioError::new(
            ErrorKind::SchemaError,
            "controller",
            "expected an object",
        ));
        return;
    };
    for (key, v) in obj {
        let path = format!("controller.{key}");
        match key.as_str() {
            "id" => one::<String>(&path, v, errs),
            "crrm_latency_tti" => one::<u64>(&path, v, errs),
            "rules" => one::<SharingRules>(&path, v, errs),
            _ => errs.push(ScenarioError::new(ErrorKind::SchemaError, path, "unknown field")),
        }
    }
}
