//! Evaluation and blur-sweep reports, as plain text or one JSON document.

use std::fmt::Write;

use serde::Serialize;
use texscat_core::retrieval::RetrievalRate;
use texscat_core::{FeatureDb, SignatureConfig};

use crate::error::AppResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub method: String,
    pub scales: usize,
    pub rotations: usize,
    pub order: usize,
    pub normalized: bool,
    pub epsilon_rel: f64,
    pub fingerprint: String,
}

impl From<&SignatureConfig> for ConfigEcho {
    fn from(c: &SignatureConfig) -> Self {
        Self {
            method: c.method.name().into(),
            scales: c.scales,
            rotations: c.rotations,
            order: c.order,
            normalized: c.normalized,
            epsilon_rel: c.epsilon_rel,
            fingerprint: format!("{:016x}", c.fingerprint()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRate {
    pub class: String,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub config: ConfigEcho,
    pub records: usize,
    pub classes: usize,
    pub overall: f64,
    pub per_class: Vec<ClassRate>,
}

fn class_rates(rate: &RetrievalRate) -> Vec<ClassRate> {
    rate.per_class
        .iter()
        .map(|(class, &rate)| ClassRate {
            class: class.clone(),
            rate,
        })
        .collect()
}

impl EvaluationReport {
    pub fn from_db(db: &FeatureDb) -> AppResult<Self> {
        let rate = db.retrieval_rate()?;
        Ok(Self {
            config: db.config().into(),
            records: db.len(),
            classes: rate.per_class.len(),
            overall: rate.overall,
            per_class: class_rates(&rate),
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        echo(&mut s, &self.config);
        let _ = writeln!(s, "records   {} in {} classes", self.records, self.classes);
        let _ = writeln!(s, "overall   {:.2}%", 100.0 * self.overall);
        let width = self.per_class.iter().map(|c| c.class.len()).max().unwrap_or(0).max(5);
        let _ = writeln!(s, "\n{:<width$}  rate", "class");
        for c in &self.per_class {
            let _ = writeln!(s, "{:<width$}  {:6.2}%", c.class, 100.0 * c.rate);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn echo(s: &mut String, c: &ConfigEcho) {
    let _ = writeln!(s, "method    {}", c.method);
    let _ = writeln!(
        s,
        "config    J={} L={} M={} normalized={} epsilon_rel={:e} fingerprint={}",
        c.scales, c.rotations, c.order, c.normalized, c.epsilon_rel, c.fingerprint
    );
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub overall: f64,
    pub per_class: Vec<ClassRate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub config: ConfigEcho,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn new(config: &SignatureConfig, rates: &[(f64, RetrievalRate)]) -> Self {
        Self {
            config: config.into(),
            rows: rates
                .iter()
                .map(|(sigma, r)| SweepRow {
                    sigma: *sigma,
                    overall: r.overall,
                    per_class: class_rates(r),
                })
                .collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        echo(&mut s, &self.config);
        let _ = writeln!(s, "\n sigma    rate");
        for r in &self.rows {
            let _ = writeln!(s, "{:6.2}  {:6.2}%", r.sigma, 100.0 * r.overall);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
