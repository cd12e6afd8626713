//! Solver-agnostic mixed-integer conic models.
//!
//! A [`ModelIR`] holds named variables, sparse linear rows, second-order cone
//! rows `‖(e_1, …, e_m)‖₂ ≤ e_0` over affine expressions, a linear objective
//! to minimise and a metadata block. Builders for the location formulations
//! live in [`build`], text formats in [`text`].

pub mod build;
pub mod text;

use std::collections::HashMap;
use std::fmt;

use crate::error::{OmpnError, Result};
use crate::geometry::NormSpec;
use crate::instance::SelfService;

pub use build::{apply_strengthening, export_model, lift_solution, ExportOptions, Strengthening};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    ThreeIndex,
    TwoIndex,
    KSum,
    Bep,
    MilpBlock,
}

impl Formulation {
    pub const ALL: [Formulation; 5] = [
        Formulation::ThreeIndex,
        Formulation::TwoIndex,
        Formulation::KSum,
        Formulation::Bep,
        Formulation::MilpBlock,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Formulation::ThreeIndex => "3I",
            Formulation::TwoIndex => "2I",
            Formulation::KSum => "OT",
            Formulation::Bep => "BEP",
            Formulation::MilpBlock => "MILP_block",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Formulation::ALL
            .into_iter()
            .find(|f| f.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| OmpnError::UnsupportedModel(format!("unknown formulation `{s}` (3I, 2I, OT, BEP, MILP_block)")))
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(&self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "<=" => Some(Sense::Le),
            ">=" => Some(Sense::Ge),
            "=" => Some(Sense::Eq),
            _ => None,
        }
    }
}

/// `Σ coef · var + constant`, terms ordered by variable index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: usize) -> Self {
        Affine {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    /// Merges duplicate variables, drops zero coefficients and sorts.
    pub fn normalized(mut self) -> Self {
        self.terms = normalize_terms(self.terms);
        self
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * values[v]).sum::<f64>()
    }
}

pub(crate) fn normalize_terms(mut terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    terms.sort_by_key(|t| t.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (v, c) in terms {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += c,
            _ => out.push((v, c)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocRow {
    pub name: String,
    pub entries: Vec<Affine>,
    pub bound: Affine,
}

/// Provenance and strengthening flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub formulation: Formulation,
    pub n: usize,
    pub p: usize,
    pub dim: usize,
    pub instance_hash: String,
    pub distance_norm: String,
    pub ball_norm: String,
    pub self_service: SelfService,
    /// Upper bound used for fixing, when strengthened.
    pub upper_bound: Option<f64>,
    pub position_rule: bool,
    pub suffix_rule: bool,
    pub valid_equations: bool,
    pub fixed_variables: usize,
}

impl ModelMeta {
    pub(crate) fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("formulation", self.formulation.id().to_string()),
            ("n", self.n.to_string()),
            ("p", self.p.to_string()),
            ("dim", self.dim.to_string()),
            ("instance_hash", self.instance_hash.clone()),
            ("distance_norm", self.distance_norm.clone()),
            ("ball_norm", self.ball_norm.clone()),
            ("self_service", self.self_service.as_str().to_string()),
            ("upper_bound", self.upper_bound.map_or_else(|| "none".to_string(), fmt_real)),
            ("position_rule", self.position_rule.to_string()),
            ("suffix_rule", self.suffix_rule.to_string()),
            ("valid_equations", self.valid_equations.to_string()),
            ("fixed_variables", self.fixed_variables.to_string()),
        ]
    }

    pub(crate) fn from_pairs(pairs: &HashMap<String, String>) -> std::result::Result<Self, String> {
        let get = |k: &str| {
            pairs
                .get(k)
                .map(String::as_str)
                .ok_or_else(|| format!("META is missing `{k}`"))
        };
        let num = |k: &str| -> std::result::Result<usize, String> {
            get(k)?.parse().map_err(|_| format!("META `{k}` is not an integer"))
        };
        let flag = |k: &str| -> std::result::Result<bool, String> {
            get(k)?.parse().map_err(|_| format!("META `{k}` is not a boolean"))
        };
        let ub = match get("upper_bound")? {
            "none" => None,
            s => Some(parse_real(s).ok_or_else(|| "META `upper_bound` is not a number".to_string())?),
        };
        Ok(ModelMeta {
            formulation: Formulation::parse(get("formulation")?).map_err(|e| e.to_string())?,
            n: num("n")?,
            p: num("p")?,
            dim: num("dim")?,
            instance_hash: get("instance_hash")?.to_string(),
            distance_norm: get("distance_norm")?.to_string(),
            ball_norm: get("ball_norm")?.to_string(),
            self_service: SelfService::parse(get("self_service")?).map_err(|e| e.to_string())?,
            upper_bound: ub,
            position_rule: flag("position_rule")?,
            suffix_rule: flag("suffix_rule")?,
            valid_equations: flag("valid_equations")?,
            fixed_variables: num("fixed_variables")?,
        })
    }
}

pub(crate) fn norm_label(norm: NormSpec) -> String {
    norm.to_string()
}

/// Shortest round-tripping decimal, `inf`/`-inf` for infinities.
pub(crate) fn fmt_real(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

pub(crate) fn parse_real(s: &str) -> Option<f64> {
    match s {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse::<f64>().ok().filter(|x| x.is_finite()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelIR {
    pub variables: Vec<Variable>,
    pub linear: Vec<LinearRow>,
    pub soc: Vec<SocRow>,
    pub objective: Vec<(usize, f64)>,
    pub meta: ModelMeta,
}

/// Row counts by kind, for audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelCounts {
    pub variables: usize,
    pub binaries: usize,
    pub linear: usize,
    pub soc: usize,
}

/// Outcome of checking a point against a model.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCheck {
    pub objective: f64,
    /// Names of violated bounds and rows with the amount of violation.
    pub violations: Vec<(String, f64)>,
}

impl PointCheck {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl ModelIR {
    pub fn counts(&self) -> ModelCounts {
        ModelCounts {
            variables: self.variables.len(),
            binaries: self.variables.iter().filter(|v| v.kind == VarKind::Binary).count(),
            linear: self.linear.len(),
            soc: self.soc.len(),
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn name_index(&self) -> HashMap<&str, usize> {
        self.variables.iter().enumerate().map(|(k, v)| (v.name.as_str(), k)).collect()
    }

    /// Rows whose name starts with `prefix`.
    pub fn rows_named(&self, prefix: &str) -> usize {
        self.linear.iter().filter(|r| r.name.starts_with(prefix)).count()
            + self.soc.iter().filter(|r| r.name.starts_with(prefix)).count()
    }

    /// Structural checks: indices in range, finite data, non-empty objective,
    /// names unique.
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(OmpnError::UnsupportedModel(detail));
        if self.objective.is_empty() {
            return bad("empty objective".into());
        }
        let nv = self.variables.len();
        let mut seen = HashMap::new();
        for (k, v) in self.variables.iter().enumerate() {
            if v.name.is_empty() || v.name.contains(char::is_whitespace) {
                return bad(format!("variable {k} has an invalid name `{}`", v.name));
            }
            if seen.insert(v.name.as_str(), k).is_some() {
                return bad(format!("duplicate variable `{}`", v.name));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return bad(format!("variable `{}` has bounds [{}, {}]", v.name, v.lower, v.upper));
            }
        }
        let check = |terms: &[(usize, f64)], what: &str| -> Result<()> {
            for &(v, c) in terms {
                if v >= nv || !c.is_finite() {
                    return Err(OmpnError::UnsupportedModel(format!(
                        "{what} references variable {v} with coefficient {c}"
                    )));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for r in &self.linear {
            check(&r.terms, &r.name)?;
            if !r.rhs.is_finite() {
                return bad(format!("row `{}` has rhs {}", r.name, r.rhs));
            }
        }
        for r in &self.soc {
            for e in r.entries.iter().chain(std::iter::once(&r.bound)) {
                check(&e.terms, &r.name)?;
                if !e.constant.is_finite() {
                    return bad(format!("row `{}` has a non-finite constant", r.name));
                }
            }
        }
        Ok(())
    }

    /// Objective value and every violation above `tol · (1 + |scale|)`.
    pub fn check_point(&self, values: &[f64], tol: f64) -> PointCheck {
        let mut violations = Vec::new();
        let slack = |scale: f64| tol * (1.0 + scale.abs());
        for (v, &x) in self.variables.iter().zip(values) {
            let amount = (v.lower - x).max(x - v.upper);
            if amount > slack(x) {
                violations.push((format!("bounds of {}", v.name), amount));
            }
            if v.kind == VarKind::Binary && (x - x.round()).abs() > tol {
                violations.push((format!("integrality of {}", v.name), (x - x.round()).abs()));
            }
        }
        for r in &self.linear {
            let lhs: f64 = r.terms.iter().map(|&(v, c)| c * values[v]).sum();
            let amount = match r.sense {
                Sense::Le => lhs - r.rhs,
                Sense::Ge => r.rhs - lhs,
                Sense::Eq => (lhs - r.rhs).abs(),
            };
            if amount > slack(r.rhs.abs().max(lhs.abs())) {
                violations.push((r.name.clone(), amount));
            }
        }
        for r in &self.soc {
            let norm = r.entries.iter().map(|e| e.eval(values).powi(2)).sum::<f64>().sqrt();
            let bound = r.bound.eval(values);
            if norm - bound > slack(bound.abs().max(norm)) {
                violations.push((r.name.clone(), norm - bound));
            }
        }
        let objective = self.objective.iter().map(|&(v, c)| c * values[v]).sum();
        PointCheck { objective, violations }
    }
}
