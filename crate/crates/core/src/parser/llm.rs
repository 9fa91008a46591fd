//! Optional completion-service backend.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{
    Conversation, MissionSpec, Patrol, PlaceRef, PoiRequirement, Preference, RangeClass, Speaker,
};

pub const SYSTEM_PROMPT: &str = "You extract UAV mission parameters from a pilot conversation. \
Reply with exactly one fenced ```json block holding only the fields that the conversation sets: \
range_class (short|medium|long), start_ref, end_ref, poi_requirements (list of categories), \
patrol {center_ref, radius_m, target}, fleet_size, preference (balanced|cheapest|fastest|shortest), \
constraints {max_duration_s, max_leg_km}. Later turns override earlier ones.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub base_url: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    pub timeout_ms: u64,
}

impl LlmConfig {
    /// Reads NELV_LLM_URL, NELV_LLM_KEY, NELV_LLM_MODEL and
    /// NELV_LLM_TIMEOUT_MS. None when no URL is configured.
    pub fn from_env() -> Option<Self> {
        let base_url = std::env::var("NELV_LLM_URL")
            .ok()
            .filter(|s| !s.is_empty())?;
        Some(Self {
            base_url,
            api_key: std::env::var("NELV_LLM_KEY").ok().filter(|s| !s.is_empty()),
            model: std::env::var("NELV_LLM_MODEL").unwrap_or_else(|_| "default".into()),
            timeout_ms: std::env::var("NELV_LLM_TIMEOUT_MS")
                .ok()
                .and_then(|s| s.parse().ok())
                .unwrap_or(10_000),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmOutcome {
    pub spec: MissionSpec,
    /// Set when the backend failed and the draft came back unchanged.
    pub degraded: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
enum LlmError {
    #[error("request failed: {0}")]
    Transport(String),
    #[error("bad response: {0}")]
    Response(String),
}

fn request_body(conv: &Conversation, model: &str) -> Value {
    let mut messages = vec![json!({"role": "system", "content": SYSTEM_PROMPT})];
    for t in conv.turns() {
        let role = match t.speaker {
            Speaker::Pilot => "user",
            Speaker::System => "assistant",
        };
        messages.push(json!({"role": role, "content": t.text}));
    }
    json!({"model": model, "messages": messages, "temperature": 0})
}

fn call(conv: &Conversation, cfg: &LlmConfig) -> Result<String, LlmError> {
    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_millis(cfg.timeout_ms))
        .build();
    let url = format!("{}/chat/completions", cfg.base_url.trim_end_matches('/'));
    let mut req = agent.post(&url);
    if let Some(key) = &cfg.api_key {
        req = req.set("Authorization", &format!("Bearer {key}"));
    }
    let resp = req
        .set("Content-Type", "application/json")
        .send_string(&request_body(conv, &cfg.model).to_string())
        .map_err(|e| LlmError::Transport(e.to_string()))?;
    let text = resp
        .into_string()
        .map_err(|e| LlmError::Response(e.to_string()))?;
    let body: Value = serde_json::from_str(&text).map_err(|e| LlmError::Response(e.to_string()))?;
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::Response("no message content".into()))
}

/// Contents of the first fenced block, with an optional language tag.
fn fenced_block(text: &str) -> Option<&str> {
    let start = text.find("```")? + 3;
    let rest = &text[start..];
    let body_start = rest.find('\n')? + 1;
    let end = rest[body_start..].find("```")?;
    Some(&rest[body_start..body_start + end])
}

fn bad(key: &str) -> LlmError {
    LlmError::Response(format!("invalid value for {key}"))
}

fn as_f64(v: &Value, key: &str) -> Result<f64, LlmError> {
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| bad(key))
}

fn as_text(v: &Value, key: &str) -> Result<String, LlmError> {
    v.as_str()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .ok_or_else(|| bad(key))
}

fn merge(
    draft: &MissionSpec,
    fields: &Map<String, Value>,
    warnings: &mut Vec<String>,
) -> Result<MissionSpec, LlmError> {
    let mut spec = draft.clone();
    for (key, v) in fields {
        if v.is_null() {
            continue;
        }
        match key.as_str() {
            "range_class" => {
                spec.range_class =
                    Some(serde_json::from_value::<RangeClass>(v.clone()).map_err(|_| bad(key))?)
            }
            "start_ref" => spec.start_ref = Some(PlaceRef::new(as_text(v, key)?)),
            "end_ref" => spec.end_ref = Some(PlaceRef::new(as_text(v, key)?)),
            "fleet_size" => {
                spec.fleet_size = v
                    .as_u64()
                    .filter(|n| *n >= 1 && *n <= u32::MAX as u64)
                    .ok_or_else(|| bad(key))? as u32
            }
            "preference" => {
                spec.preference = as_text(v, key)?
                    .parse::<Preference>()
                    .map_err(|_| bad(key))?
            }
            "poi_requirements" => {
                let list = v.as_array().ok_or_else(|| bad(key))?;
                let mut reqs = Vec::new();
                for item in list {
                    let category = match item {
                        Value::String(s) => s.clone(),
                        Value::Object(o) => {
                            as_text(o.get("category").unwrap_or(&Value::Null), key)?
                        }
                        _ => return Err(bad(key)),
                    };
                    let category = category.trim().to_lowercase();
                    if !reqs.iter().any(|r: &PoiRequirement| r.category == category) {
                        reqs.push(PoiRequirement { category, count: 1 });
                    }
                }
                spec.poi_requirements = reqs;
            }
            "patrol" => {
                let o = v.as_object().ok_or_else(|| bad(key))?;
                let get = |k: &str| o.get(k).unwrap_or(&Value::Null);
                let radius_m = as_f64(get("radius_m"), "patrol.radius_m")?;
                if radius_m <= 0.0 {
                    return Err(bad("patrol.radius_m"));
                }
                spec.patrol = Some(Patrol {
                    center_ref: PlaceRef::new(as_text(get("center_ref"), "patrol.center_ref")?),
                    radius_m,
                    target: as_text(get("target"), "patrol.target")?.to_lowercase(),
                });
                if spec.range_class.is_none() {
                    spec.range_class = Some(RangeClass::Short);
                }
            }
            "constraints" => {
                let o = v.as_object().ok_or_else(|| bad(key))?;
                for (ck, cv) in o {
                    let slot = match ck.as_str() {
                        "max_duration_s" => &mut spec.constraints.max_duration_s,
                        "max_leg_km" => &mut spec.constraints.max_leg_km,
                        "max_total_km" => &mut spec.constraints.max_total_km,
                        "max_cost" => &mut spec.constraints.max_cost,
                        other => {
                            let w = format!("ignoring unknown constraint {other:?}");
                            log::warn!("{w}");
                            warnings.push(w);
                            continue;
                        }
                    };
                    *slot = if cv.is_null() {
                        None
                    } else {
                        Some(as_f64(cv, ck)?)
                    };
                }
            }
            other => {
                let w = format!("ignoring unknown field {other:?}");
                log::warn!("{w}");
                warnings.push(w);
            }
        }
    }
    Ok(spec)
}

/// Asks the completion service to refine `draft`. Any failure returns the
/// draft unchanged with `degraded` set.
pub fn llm_refine(conv: &Conversation, draft: &MissionSpec, cfg: &LlmConfig) -> LlmOutcome {
    let mut warnings = Vec::new();
    let result = call(conv, cfg).and_then(|content| {
        let block =
            fenced_block(&content).ok_or_else(|| LlmError::Response("no fenced block".into()))?;
        let fields: Map<String, Value> =
            serde_json::from_str(block).map_err(|e| LlmError::Response(e.to_string()))?;
        merge(draft, &fields, &mut warnings)
    });
    match result {
        Ok(spec) => LlmOutcome {
            spec,
            degraded: false,
            warnings,
        },
        Err(e) => {
            log::warn!("completion backend unavailable, keeping rule-based result: {e}");
            warnings.push(e.to_string());
            LlmOutcome {
                spec: draft.clone(),
                degraded: true,
                warnings,
            }
        }
    }
}
