//! Bias reports, chain-check records and the reference value table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::error::Result;
use crate::games::{c_game, chsh, from_classical, h_game, t_game, tensor_games};
use crate::heuristics::{me_lower, omega_c_lower_from, omega_lower, OptimizerConfig};
use crate::relaxations::{beta_nc, beta_os, beta_sdp, h_n_closed_forms, h_n_closed_forms_f64};
use crate::strategies::{bias, h1_me_strategy};

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// 12-significant-digit text form used in every output format.
pub fn fmt12(x: f64) -> String {
    format!("{}", round12(x))
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(round12(x)).map(Value::Number).unwrap_or(Value::Null)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainCheck {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub hard: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeValue {
    pub d: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntangledValue {
    pub da: usize,
    pub db: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BiasReport {
    pub game: String,
    pub n: usize,
    pub trace_norm: f64,
    pub omega_lower: Option<f64>,
    pub omega_c_lower: Option<f64>,
    pub me_lower: Vec<MeValue>,
    pub entangled_lower: Option<EntangledValue>,
    pub beta_sdp: Option<f64>,
    pub beta_nc: Option<f64>,
    pub beta_os: Option<f64>,
    pub chains: Vec<ChainCheck>,
    pub seed: u64,
    pub restarts: usize,
    pub tol: f64,
    /// Seconds per quantity; left out of serialized output unless asked for.
    pub runtimes: BTreeMap<String, f64>,
}

impl BiasReport {
    pub fn hard_failures(&self) -> Vec<&ChainCheck> {
        self.chains.iter().filter(|c| c.hard && !c.pass).collect()
    }

    pub fn to_json(&self, with_runtimes: bool) -> Value {
        let mut m = Map::new();
        m.insert("format".into(), json!("xorq-report-v1"));
        m.insert("game".into(), json!(self.game));
        m.insert("n".into(), json!(self.n));
        m.insert("trace_norm".into(), num(self.trace_norm));
        let opt = |x: Option<f64>| x.map(num).unwrap_or(Value::Null);
        m.insert("omega_lower".into(), opt(self.omega_lower));
        m.insert("omega_c_lower".into(), opt(self.omega_c_lower));
        m.insert(
            "me_lower".into(),
            Value::Array(self.me_lower.iter().map(|v| json!({"d": v.d, "value": num(v.value)})).collect()),
        );
        m.insert(
            "entangled_lower".into(),
            self.entangled_lower
                .as_ref()
                .map(|e| json!({"dA": e.da, "dB": e.db, "value": num(e.value)}))
                .unwrap_or(Value::Null),
        );
        m.insert("beta_sdp".into(), opt(self.beta_sdp));
        m.insert("beta_nc".into(), opt(self.beta_nc));
        m.insert("beta_os".into(), opt(self.beta_os));
        m.insert(
            "chains".into(),
            Value::Array(
                self.chains
                    .iter()
                    .map(|c| json!({"label": c.label, "lhs": num(c.lhs), "rhs": num(c.rhs), "hard": c.hard, "pass": c.pass}))
                    .collect(),
            ),
        );
        m.insert("config".into(), json!({"seed": self.seed, "restarts": self.restarts, "tol": num(self.tol)}));
        if with_runtimes {
            let rt: Map<String, Value> = self.runtimes.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
            m.insert("runtimes".into(), Value::Object(rt));
        }
        Value::Object(m)
    }

    fn rows(&self) -> Vec<(String, String)> {
        let mut rows = vec![("game".to_string(), self.game.clone()), ("trace_norm".into(), fmt12(self.trace_norm))];
        let mut opt = |k: &str, v: Option<f64>| {
            if let Some(v) = v {
                rows.push((k.to_string(), fmt12(v)));
            }
        };
        opt("omega_lower", self.omega_lower);
        opt("omega_c_lower", self.omega_c_lower);
        for m in &self.me_lower {
            rows.push((format!("me_lower[d={}]", m.d), fmt12(m.value)));
        }
        if let Some(e) = &self.entangled_lower {
            rows.push((format!("entangled_lower[{}x{}]", e.da, e.db), fmt12(e.value)));
        }
        let mut opt = |k: &str, v: Option<f64>| {
            if let Some(v) = v {
                rows.push((k.to_string(), fmt12(v)));
            }
        };
        opt("beta_sdp", self.beta_sdp);
        opt("beta_nc", self.beta_nc);
        opt("beta_os", self.beta_os);
        for c in &self.chains {
            let tag = match (c.hard, c.pass) {
                (true, true) => "pass",
                (true, false) => "FAIL",
                (false, true) => "holds",
                (false, false) => "violated (diagnostic)",
            };
            rows.push((format!("chain {}", c.label), format!("{} <= {} {tag}", fmt12(c.lhs), fmt12(c.rhs))));
        }
        rows
    }

    pub fn to_text(&self, with_runtimes: bool) -> String {
        let mut out = String::new();
        for (k, v) in self.rows() {
            let _ = writeln!(out, "{k}: {v}");
        }
        let _ = writeln!(out, "config: seed={} restarts={} tol={}", self.seed, self.restarts, fmt12(self.tol));
        if with_runtimes {
            for (k, v) in &self.runtimes {
                let _ = writeln!(out, "runtime {k}: {}", fmt12(*v));
            }
        }
        out
    }

    pub fn to_csv(&self, with_runtimes: bool) -> String {
        let mut out = String::from("quantity,value\n");
        for (k, v) in self.rows() {
            let _ = writeln!(out, "{},{}", csv_field(&k), csv_field(&v));
        }
        if with_runtimes {
            for (k, v) in &self.runtimes {
                let _ = writeln!(out, "{},{}", csv_field(&format!("runtime {k}")), fmt12(*v));
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Equal,
    AtLeast,
    AtMost,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Equal => "=",
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub game: String,
    pub quantity: String,
    pub relation: Relation,
    pub computed: f64,
    pub expected: f64,
    pub tol: f64,
    pub pass: bool,
}

impl TableRow {
    pub fn new(game: &str, quantity: &str, relation: Relation, computed: f64, expected: f64, tol: f64) -> Self {
        let pass = match relation {
            Relation::Equal => (computed - expected).abs() <= tol,
            Relation::AtLeast => computed >= expected - tol,
            Relation::AtMost => computed <= expected + tol,
        };
        TableRow { game: game.into(), quantity: quantity.into(), relation, computed, expected, tol, pass }
    }
}

/// Reference values for CHSH, T₁..T₄, H₁, C₂..C₄ and the H₂ closed forms.
pub fn reference_table(cfg: &OptimizerConfig, tol: f64) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    let r2 = 0.5f64.sqrt();

    let g = from_classical(&chsh());
    rows.push(TableRow::new("chsh", "beta_sdp", Relation::Equal, beta_sdp(&chsh(), tol)?.value, r2, 1e-4));
    let om = omega_lower(&g, cfg)?;
    rows.push(TableRow::new("chsh", "omega_lower", Relation::Equal, om.value, 0.5, 1e-6));
    let oc = omega_c_lower_from(&g, cfg, &om.strategy)?;
    rows.push(TableRow::new("chsh", "omega_c_lower", Relation::Equal, oc.value, r2, 1e-3));

    for n in 1..=4usize {
        let g = t_game(n)?;
        let name = format!("t{n}");
        let target = 1.0 / (n as f64).sqrt();
        rows.push(TableRow::new(&name, "beta_nc", Relation::Equal, beta_nc(&g, tol)?.value, target, 1e-4));
        rows.push(TableRow::new(&name, "omega_lower", Relation::Equal, omega_lower(&g, cfg)?.value, target, 1e-3));
        rows.push(TableRow::new(&name, "beta_os", Relation::Equal, beta_os(&g, tol)?.value, 1.0, 1e-3));
        let me = me_lower(&g, n, cfg)?;
        rows.push(TableRow::new(&name, &format!("me_lower[d={n}]"), Relation::AtMost, me.value, target, 1e-4));
    }

    let g = h_game(1)?;
    rows.push(TableRow::new("h1", "beta_nc", Relation::Equal, beta_nc(&g, tol)?.value, 0.6, 1e-4));
    rows.push(TableRow::new("h1", "beta_os", Relation::Equal, beta_os(&g, tol)?.value, 0.6, 1e-4));
    let om = omega_lower(&g, cfg)?;
    rows.push(TableRow::new("h1", "omega_lower", Relation::Equal, om.value, 0.4, 1e-3));
    let oc = omega_c_lower_from(&g, cfg, &om.strategy)?;
    rows.push(TableRow::new("h1", "omega_c_lower", Relation::Equal, oc.value, 0.4, 1e-3));
    rows.push(TableRow::new("h1", "me_lower[d=3]", Relation::AtLeast, me_lower(&g, 3, cfg)?.value, 5.0 / 9.0, 1e-3));
    rows.push(TableRow::new("h1", "explicit me strategy", Relation::Equal, bias(&g, &h1_me_strategy())?, 5.0 / 9.0, 1e-9));

    for n in 2..=4usize {
        let g = c_game(n)?;
        let name = format!("c{n}");
        rows.push(TableRow::new(&name, "beta_os", Relation::Equal, beta_os(&g, tol)?.value, 1.0 / n as f64, 1e-4));
        let sq = tensor_games(&g, &g);
        let v = omega_lower(&sq, cfg)?.value;
        rows.push(TableRow::new(&format!("{name}x{name}"), "omega_lower", Relation::AtLeast, v, 1.0 / (2 * n) as f64, 1e-3));
    }

    let (o, b) = h_n_closed_forms(2)?;
    let (of, bf) = h_n_closed_forms_f64(2)?;
    let exact = |x: &num_rational::BigRational, p: i64, q: i64| *x == num_rational::BigRational::new(p.into(), q.into());
    let mut row = TableRow::new("h2", "omega (closed form)", Relation::Equal, of, 2.0 / 7.0, 0.0);
    row.pass = exact(&o, 2, 7);
    rows.push(row);
    let mut row = TableRow::new("h2", "beta_nc (closed form)", Relation::Equal, bf, 10.0 / 21.0, 0.0);
    row.pass = exact(&b, 10, 21);
    rows.push(row);
    Ok(rows)
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("game,quantity,relation,computed,expected,tol,pass\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&r.game),
            csv_field(&r.quantity),
            r.relation.symbol(),
            fmt12(r.computed),
            fmt12(r.expected),
            fmt12(r.tol),
            if r.pass { "pass" } else { "fail" }
        );
    }
    out
}

pub fn table_json(rows: &[TableRow]) -> Value {
    json!({
        "format": "xorq-table-v1",
        "rows": rows.iter().map(|r| json!({
            "game": r.game,
            "quantity": r.quantity,
            "relation": r.relation.symbol(),
            "computed": num(r.computed),
            "expected": num(r.expected),
            "tol": num(r.tol),
            "pass": r.pass,
        })).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(0.5f64.sqrt()), "0.707106781187");
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(-1.0), "-1");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
    }

    #[test]
    fn json_is_sorted_and_stable() {
        let r = BiasReport { game: "x".into(), n: 2, trace_norm: 1.0, tol: 1e-6, ..Default::default() };
        let a = serde_json::to_string(&r.to_json(false)).unwrap();
        assert!(a.find("\"beta_nc\"").unwrap() < a.find("\"trace_norm\"").unwrap());
        assert!(!a.contains("runtimes"));
        assert_eq!(a, serde_json::to_string(&r.to_json(false)).unwrap());
    }

    #[test]
    fn relation_rows() {
        assert!(TableRow::new("g", "q", Relation::AtLeast, 0.5, 0.55, 0.1).pass);
        assert!(!TableRow::new("g", "q", Relation::AtMost, 0.7, 0.55, 0.1).pass);
        assert!(TableRow::new("g", "q", Relation::Equal, 0.55, 0.55, 0.0).pass);
    }
}
