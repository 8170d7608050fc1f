use serde_json::{json, Value};

use super::knowledge::Role;
use crate::{Error, Result};

/// Where a message goes. Price announcements in the iterative protocol are broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Destination {
    To(Role),
    Transmitters,
}

impl Destination {
    pub fn id(&self) -> &'static str {
        match self {
            Destination::To(r) => r.id(),
            Destination::Transmitters => "transmitters",
        }
    }

    pub fn includes(&self, role: Role) -> bool {
        match self {
            Destination::To(r) => *r == role,
            Destination::Transmitters => matches!(role, Role::Transmitter(_)),
        }
    }

    fn from_id(id: &str) -> Option<Destination> {
        if id == "transmitters" {
            Some(Destination::Transmitters)
        } else {
            Role::from_id(id).map(Destination::To)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MessageKind {
    PriceAnnouncement { beta: f64 },
    /// The sender's demand at the last announced price.
    DemandReport { x_own: f64, x_other: f64 },
    Terminate { beta_final: f64 },
}

impl MessageKind {
    fn name(&self) -> &'static str {
        match self {
            MessageKind::PriceAnnouncement { .. } => "price_announcement",
            MessageKind::DemandReport { .. } => "demand_report",
            MessageKind::Terminate { .. } => "terminate",
        }
    }

    fn payload(&self) -> Value {
        match self {
            MessageKind::PriceAnnouncement { beta } => json!({ "beta": beta }),
            MessageKind::DemandReport { x_own, x_other } => json!({ "x_own": x_own, "x_other": x_other }),
            MessageKind::Terminate { beta_final } => json!({ "beta_final": beta_final }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub iteration: usize,
    pub from: Role,
    pub to: Destination,
    pub kind: MessageKind,
}

fn field(payload: &Value, name: &str) -> Result<f64> {
    payload
        .get(name)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Parse(format!("payload field {name} missing or not a number")))
}

impl Message {
    pub fn to_json(&self) -> Value {
        json!({
            "iter": self.iteration,
            "kind": self.kind.name(),
            "from": self.from.id(),
            "to": self.to.id(),
            "payload": self.kind.payload(),
        })
    }

    /// The JSON-lines form, with fields in the order `iter, kind, from, to, payload`.
    pub fn to_json_line(&self) -> String {
        format!(
            "{{\"iter\":{},\"kind\":\"{}\",\"from\":\"{}\",\"to\":\"{}\",\"payload\":{}}}",
            self.iteration,
            self.kind.name(),
            self.from.id(),
            self.to.id(),
            self.kind.payload()
        )
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let text = |name: &str| {
            v.get(name)
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse(format!("message field {name} missing")))
        };
        let iteration = v
            .get("iter")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("message field iter missing".into()))? as usize;
        let from = Role::from_id(text("from")?)
            .ok_or_else(|| Error::Parse(format!("unknown sender {}", text("from").unwrap_or(""))))?;
        let to = Destination::from_id(text("to")?)
            .ok_or_else(|| Error::Parse(format!("unknown receiver {}", text("to").unwrap_or(""))))?;
        let payload = v.get("payload").cloned().unwrap_or(Value::Null);
        let kind = match text("kind")? {
            "price_announcement" => MessageKind::PriceAnnouncement { beta: field(&payload, "beta")? },
            "demand_report" => MessageKind::DemandReport {
                x_own: field(&payload, "x_own")?,
                x_other: field(&payload, "x_other")?,
            },
            "terminate" => MessageKind::Terminate {
                beta_final: field(&payload, "beta_final")?,
            },
            other => return Err(Error::Parse(format!("unknown message kind {other}"))),
        };
        Ok(Message { iteration, from, to, kind })
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&v)
    }
}

/// One message per line, each terminated by LF.
pub fn to_jsonl(log: &[Message]) -> String {
    log.iter().map(|m| m.to_json_line() + "\n").collect()
}

/// Parses a message log; blank lines and lines carrying a `meta` object are skipped.
pub fn from_jsonl(text: &str) -> Result<Vec<Message>> {
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: Value = serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
        if v.get("meta").is_some() {
            continue;
        }
        out.push(Message::from_json(&v)?);
    }
    Ok(out)
}
