//! Long-format records and their JSON and CSV renderings.

use serde::Serialize;

pub const CSV_HEADER: [&str; 11] = [
    "command",
    "master_seed",
    "constants",
    "input",
    "quantity",
    "value",
    "ci_low",
    "ci_high",
    "bound_value",
    "formula_id",
    "valid",
];

/// One output row.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Record {
    pub input: String,
    pub quantity: String,
    pub value: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub bound_value: Option<f64>,
    pub formula_id: Option<String>,
    pub valid: Option<bool>,
}

impl Record {
    pub fn new(input: impl Into<String>, quantity: impl Into<String>, value: f64) -> Self {
        Record {
            input: input.into(),
            quantity: quantity.into(),
            value: Some(value),
            ..Default::default()
        }
    }

    pub fn ci(mut self, lo: f64, hi: f64) -> Self {
        self.ci_low = Some(lo);
        self.ci_high = Some(hi);
        self
    }

    pub fn bound(mut self, value: f64, id: impl Into<String>) -> Self {
        self.bound_value = Some(value);
        self.formula_id = Some(id.into());
        self
    }

    pub fn formula(mut self, id: impl Into<String>, valid: bool) -> Self {
        self.formula_id = Some(id.into());
        self.valid = Some(valid);
        self
    }
}

/// Everything a command produces.
#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub command: String,
    pub master_seed: u64,
    pub constants: serde_json::Value,
    pub config: serde_json::Value,
    pub passed: bool,
    pub records: Vec<Record>,
    pub details: serde_json::Value,
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

impl Artifact {
    pub fn constants_label(&self) -> String {
        let c = &self.constants;
        format!(
            "c_g={};{}",
            c["c_g"],
            c["provenance"].as_str().unwrap_or("configured")
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    /// CSV with a header row; the first data row echoes the configuration.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        let seed = self.master_seed.to_string();
        let constants = self.constants_label();
        let echo = Record {
            input: self.config.to_string(),
            quantity: "config".into(),
            ..Default::default()
        };
        for r in std::iter::once(&echo).chain(&self.records) {
            w.write_record([
                self.command.as_str(),
                &seed,
                &constants,
                &r.input,
                &r.quantity,
                &num(r.value),
                &num(r.ci_low),
                &num(r.ci_high),
                &num(r.bound_value),
                r.formula_id.as_deref().unwrap_or(""),
                &r.valid.map(|v| v.to_string()).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_escapes_and_echoes_config() {
        let a = Artifact {
            command: "x".into(),
            master_seed: 3,
            constants: serde_json::json!({"c_g": 0.5, "provenance": "configured"}),
            config: serde_json::json!({"a": [1, 2]}),
            passed: true,
            records: vec![Record::new("m=1", "q", 0.1).ci(0.0, 0.2)],
            details: serde_json::Value::Null,
        };
        let csv = a.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains("\"{\"\"a\"\":[1,2]}\""));
        assert_eq!(lines[2], "x,3,c_g=0.5;configured,m=1,q,0.1,0.0,0.2,,,");
    }
}
