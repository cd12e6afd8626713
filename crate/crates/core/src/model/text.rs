//! Text formats for [`ModelIR`].
//!
//! `conic_text` (any model):
//!
//! ```text
//! OMPN-MODEL 1
//! META
//! formulation BEP
//! ...
//! VARIABLES
//! x_0_0 binary 0 1
//! abar_0_0 continuous -inf inf
//! LINEAR
//! open_count: 1 x_0_0 + 1 x_1_1 = 2
//! SOC
//! ball_0: norm2 [ 3 + -1 abar_0_0 , 1 + -1 abar_0_1 ] <= 0.5
//! OBJECTIVE
//! minimize 1 u_0 + 1 v_0
//! END
//! ```
//!
//! Affine expressions start with their constant; an empty linear left-hand
//! side is written `0`. `lp_text` is the CPLEX LP dialect with the META block
//! as `\` comments and every variable listed under `Bounds`, and only carries
//! models without cone rows.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{OmpnError, Result};

use super::{fmt_real, parse_real, Affine, LinearRow, ModelIR, ModelMeta, Sense, SocRow, VarKind, Variable};

const CONIC_HEADER: &str = "OMPN-MODEL 1";
const LP_HEADER: &str = "\\ OMPN-MODEL 1";
const LP_TERMS_PER_LINE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    ConicText,
    LpText,
}

impl ModelFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "conic_text" | "conic" => Ok(ModelFormat::ConicText),
            "lp_text" | "lp" => Ok(ModelFormat::LpText),
            _ => Err(OmpnError::validation("format", format!("`{s}` is not conic_text or lp_text"))),
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            ModelFormat::ConicText => "conic.txt",
            ModelFormat::LpText => "lp.txt",
        }
    }
}

pub fn to_text(model: &ModelIR, format: ModelFormat) -> Result<String> {
    model.validate()?;
    match format {
        ModelFormat::ConicText => Ok(conic_text(model)),
        ModelFormat::LpText => {
            if !model.soc.is_empty() {
                return Err(OmpnError::UnsupportedModel(format!(
                    "lp_text cannot carry the {} cone rows of a {} model; use conic_text",
                    model.soc.len(),
                    model.meta.formulation
                )));
            }
            Ok(lp_text(model))
        }
    }
}

pub fn write_model(model: &ModelIR, path: &Path, format: ModelFormat) -> Result<()> {
    let text = to_text(model, format)?;
    std::fs::write(path, text).map_err(|e| OmpnError::io(path, e))
}

pub fn read_model(path: &Path) -> Result<ModelIR> {
    let text = std::fs::read_to_string(path).map_err(|e| OmpnError::io(path, e))?;
    from_text(&text)
}

/// Parses either format, recognised by its first line.
pub fn from_text(text: &str) -> Result<ModelIR> {
    let first = text.lines().next().unwrap_or("");
    let model = if first == CONIC_HEADER {
        parse_conic(text)?
    } else if first == LP_HEADER {
        parse_lp(text)?
    } else {
        return Err(parse_err(1, format!("expected `{CONIC_HEADER}` or `{LP_HEADER}`")));
    };
    model.validate()?;
    Ok(model)
}

fn parse_err(line: usize, detail: impl Into<String>) -> OmpnError {
    OmpnError::Parse {
        line,
        column: 1,
        detail: detail.into(),
    }
}

fn kind_name(kind: VarKind) -> &'static str {
    match kind {
        VarKind::Continuous => "continuous",
        VarKind::Binary => "binary",
    }
}

fn write_terms(out: &mut String, model: &ModelIR, terms: &[(usize, f64)]) {
    if terms.is_empty() {
        out.push('0');
    }
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 {
            out.push_str(" + ");
        }
        let _ = write!(out, "{} {}", fmt_real(c), model.variables[v].name);
    }
}

fn write_affine(out: &mut String, model: &ModelIR, e: &Affine) {
    out.push_str(&fmt_real(e.constant));
    for &(v, c) in &e.terms {
        let _ = write!(out, " + {} {}", fmt_real(c), model.variables[v].name);
    }
}

fn conic_text(model: &ModelIR) -> String {
    let mut out = String::new();
    out.push_str(CONIC_HEADER);
    out.push_str("\nMETA\n");
    for (k, v) in model.meta.pairs() {
        let _ = writeln!(out, "{k} {v}");
    }
    out.push_str("VARIABLES\n");
    for v in &model.variables {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            v.name,
            kind_name(v.kind),
            fmt_real(v.lower),
            fmt_real(v.upper)
        );
    }
    out.push_str("LINEAR\n");
    for r in &model.linear {
        let _ = write!(out, "{}: ", r.name);
        write_terms(&mut out, model, &r.terms);
        let _ = writeln!(out, " {} {}", r.sense.symbol(), fmt_real(r.rhs));
    }
    out.push_str("SOC\n");
    for r in &model.soc {
        let _ = write!(out, "{}: norm2 [ ", r.name);
        for (k, e) in r.entries.iter().enumerate() {
            if k > 0 {
                out.push_str(" , ");
            }
            write_affine(&mut out, model, e);
        }
        out.push_str(" ] <= ");
        write_affine(&mut out, model, &r.bound);
        out.push('\n');
    }
    out.push_str("OBJECTIVE\nminimize ");
    write_terms(&mut out, model, &model.objective);
    out.push_str("\nEND\n");
    out
}

struct Names<'a> {
    index: HashMap<&'a str, usize>,
}

impl Names<'_> {
    fn get(&self, name: &str, line: usize) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| parse_err(line, format!("undeclared variable `{name}`")))
    }
}

fn real(tok: &str, line: usize) -> Result<f64> {
    parse_real(tok).ok_or_else(|| parse_err(line, format!("`{tok}` is not a number")))
}

/// `c v + c v + ...` or `0`.
fn parse_terms(tokens: &[&str], names: &Names<'_>, line: usize) -> Result<Vec<(usize, f64)>> {
    if tokens == ["0"] {
        return Ok(Vec::new());
    }
    let mut terms = Vec::new();
    for (k, chunk) in tokens.split(|t| *t == "+").enumerate() {
        match chunk {
            [c, v] => terms.push((names.get(v, line)?, real(c, line)?)),
            _ => return Err(parse_err(line, format!("malformed term {k}"))),
        }
    }
    Ok(terms)
}

/// `c0 + c v + ...`.
fn parse_affine(tokens: &[&str], names: &Names<'_>, line: usize) -> Result<Affine> {
    let (first, rest) = tokens.split_first().ok_or_else(|| parse_err(line, "empty expression"))?;
    let constant = real(first, line)?;
    let terms = match rest {
        [] => Vec::new(),
        ["+", tail @ ..] => parse_terms(tail, names, line)?,
        _ => return Err(parse_err(line, "expected `+` after the constant")),
    };
    Ok(Affine { terms, constant })
}

fn parse_conic(text: &str) -> Result<ModelIR> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        Head,
        Meta,
        Vars,
        Linear,
        Soc,
        Objective,
        End,
    }
    let mut section = Section::Head;
    let mut meta = HashMap::new();
    let mut variables: Vec<Variable> = Vec::new();
    let mut linear_lines = Vec::new();
    let mut soc_lines = Vec::new();
    let mut objective_line = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let next = match raw {
            "META" => Some(Section::Meta),
            "VARIABLES" => Some(Section::Vars),
            "LINEAR" => Some(Section::Linear),
            "SOC" => Some(Section::Soc),
            "OBJECTIVE" => Some(Section::Objective),
            "END" => Some(Section::End),
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            continue;
        }
        match section {
            Section::Head if line == 1 => {}
            Section::Meta => {
                let (key, value) = raw.split_once(' ').ok_or_else(|| parse_err(line, "expected `key value`"))?;
                meta.insert(key.to_string(), value.to_string());
            }
            Section::Vars => {
                let tok: Vec<&str> = raw.split_whitespace().collect();
                let [name, kind, lo, hi] = tok[..] else {
                    return Err(parse_err(line, "expected `name kind lower upper`"));
                };
                let kind = match kind {
                    "continuous" => VarKind::Continuous,
                    "binary" => VarKind::Binary,
                    _ => return Err(parse_err(line, format!("unknown variable kind `{kind}`"))),
                };
                variables.push(Variable {
                    name: name.to_string(),
                    kind,
                    lower: real(lo, line)?,
                    upper: real(hi, line)?,
                });
            }
            Section::Linear => linear_lines.push((line, raw)),
            Section::Soc => soc_lines.push((line, raw)),
            Section::Objective if objective_line.is_none() => objective_line = Some((line, raw)),
            _ => return Err(parse_err(line, format!("unexpected line `{raw}`"))),
        }
    }
    if section != Section::End {
        return Err(parse_err(text.lines().count(), "missing END"));
    }
    let names = Names {
        index: variables.iter().enumerate().map(|(k, v)| (v.name.as_str(), k)).collect(),
    };
    let mut linear = Vec::with_capacity(linear_lines.len());
    for (line, raw) in linear_lines {
        let (name, body) = raw.split_once(": ").ok_or_else(|| parse_err(line, "expected `name: ...`"))?;
        let tok: Vec<&str> = body.split_whitespace().collect();
        let [lhs @ .., sense, rhs] = &tok[..] else {
            return Err(parse_err(line, "expected `terms sense rhs`"));
        };
        let sense = Sense::parse(sense).ok_or_else(|| parse_err(line, format!("unknown sense `{sense}`")))?;
        linear.push(LinearRow {
            name: name.to_string(),
            terms: parse_terms(lhs, &names, line)?,
            sense,
            rhs: real(rhs, line)?,
        });
    }
    let mut soc = Vec::with_capacity(soc_lines.len());
    for (line, raw) in soc_lines {
        let (name, body) = raw
            .split_once(": norm2 [ ")
            .ok_or_else(|| parse_err(line, "expected `name: norm2 [ ...`"))?;
        let (inside, bound) = body
            .split_once(" ] <= ")
            .ok_or_else(|| parse_err(line, "expected `] <= bound`"))?;
        let entries = inside
            .split(" , ")
            .map(|e| parse_affine(&e.split_whitespace().collect::<Vec<_>>(), &names, line))
            .collect::<Result<Vec<_>>>()?;
        let bound = parse_affine(&bound.split_whitespace().collect::<Vec<_>>(), &names, line)?;
        soc.push(SocRow {
            name: name.to_string(),
            entries,
            bound,
        });
    }
    let (line, raw) = objective_line.ok_or_else(|| parse_err(text.lines().count(), "missing objective"))?;
    let body = raw
        .strip_prefix("minimize ")
        .ok_or_else(|| parse_err(line, "expected `minimize ...`"))?;
    let objective = parse_terms(&body.split_whitespace().collect::<Vec<_>>(), &names, line)?;
    let meta = ModelMeta::from_pairs(&meta).map_err(|e| parse_err(2, e))?;
    Ok(ModelIR {
        variables,
        linear,
        soc,
        objective,
        meta,
    })
}

fn lp_terms(out: &mut String, model: &ModelIR, terms: &[(usize, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0");
    }
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 && k % LP_TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let sign = if c.is_sign_negative() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", fmt_real(c.abs()), model.variables[v].name);
    }
}

fn lp_text(model: &ModelIR) -> String {
    let mut out = String::new();
    out.push_str(LP_HEADER);
    out.push('\n');
    for (k, v) in model.meta.pairs() {
        let _ = writeln!(out, "\\ {k} {v}");
    }
    out.push_str("Minimize\n obj:");
    lp_terms(&mut out, model, &model.objective);
    out.push_str("\nSubject To\n");
    for r in &model.linear {
        let _ = write!(out, " {}:", r.name);
        lp_terms(&mut out, model, &r.terms);
        let _ = writeln!(out, " {} {}", r.sense.symbol(), fmt_real(r.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        let hi = if v.upper == f64::INFINITY {
            "+inf".to_string()
        } else {
            fmt_real(v.upper)
        };
        let _ = writeln!(out, " {} <= {} <= {}", fmt_real(v.lower), v.name, hi);
    }
    out.push_str("Binaries\n");
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

/// `± c v ± c v ...` or `0`.
fn parse_lp_terms(tokens: &[&str], names: &Names<'_>, line: usize) -> Result<Vec<(usize, f64)>> {
    if tokens == ["0"] {
        return Ok(Vec::new());
    }
    if !tokens.len().is_multiple_of(3) {
        return Err(parse_err(line, "expected `± coefficient name` triples"));
    }
    tokens
        .chunks(3)
        .map(|t| {
            let c = real(t[1], line)?;
            let c = match t[0] {
                "+" => c,
                "-" => -c,
                s => return Err(parse_err(line, format!("expected a sign, found `{s}`"))),
            };
            Ok((names.get(t[2], line)?, c))
        })
        .collect()
}

fn parse_lp(text: &str) -> Result<ModelIR> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        Head,
        Objective,
        Rows,
        Bounds,
        Binaries,
        End,
    }
    let mut section = Section::Head;
    let mut meta = HashMap::new();
    // Statements are joined across continuation lines.
    let mut objective: Option<(usize, String)> = None;
    let mut rows: Vec<(usize, String)> = Vec::new();
    let mut variables: Vec<Variable> = Vec::new();
    let mut binaries = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if let Some(comment) = raw.strip_prefix("\\ ") {
            if line > 1 {
                let (key, value) = comment
                    .split_once(' ')
                    .ok_or_else(|| parse_err(line, "expected `\\ key value`"))?;
                meta.insert(key.to_string(), value.to_string());
            }
            continue;
        }
        let next = match raw {
            "Minimize" => Some(Section::Objective),
            "Subject To" => Some(Section::Rows),
            "Bounds" => Some(Section::Bounds),
            "Binaries" => Some(Section::Binaries),
            "End" => Some(Section::End),
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            continue;
        }
        let continuation = raw.starts_with("  ");
        match section {
            Section::Objective => match (&mut objective, continuation) {
                (Some((_, body)), true) => body.push_str(raw),
                (None, false) => objective = Some((line, raw.to_string())),
                _ => return Err(parse_err(line, "unexpected objective line")),
            },
            Section::Rows => match (rows.last_mut(), continuation) {
                (Some((_, body)), true) => body.push_str(raw),
                (_, false) => rows.push((line, raw.to_string())),
                _ => return Err(parse_err(line, "continuation before any row")),
            },
            Section::Bounds => {
                let tok: Vec<&str> = raw.split_whitespace().collect();
                let [lo, "<=", name, "<=", hi] = tok[..] else {
                    return Err(parse_err(line, "expected `lower <= name <= upper`"));
                };
                variables.push(Variable {
                    name: name.to_string(),
                    kind: VarKind::Continuous,
                    lower: real(lo, line)?,
                    upper: real(hi, line)?,
                });
            }
            Section::Binaries => binaries.push((line, raw.trim().to_string())),
            _ => return Err(parse_err(line, format!("unexpected line `{raw}`"))),
        }
    }
    if section != Section::End {
        return Err(parse_err(text.lines().count(), "missing End"));
    }
    let index: HashMap<String, usize> = variables.iter().enumerate().map(|(k, v)| (v.name.clone(), k)).collect();
    for (line, name) in binaries {
        let k = *index
            .get(&name)
            .ok_or_else(|| parse_err(line, format!("undeclared binary `{name}`")))?;
        variables[k].kind = VarKind::Binary;
    }
    let names = Names {
        index: variables.iter().enumerate().map(|(k, v)| (v.name.as_str(), k)).collect(),
    };
    let (line, body) = objective.ok_or_else(|| parse_err(1, "missing objective"))?;
    let body = body
        .trim()
        .strip_prefix("obj:")
        .ok_or_else(|| parse_err(line, "expected `obj:`"))?;
    let objective = parse_lp_terms(&body.split_whitespace().collect::<Vec<_>>(), &names, line)?;
    let mut linear = Vec::with_capacity(rows.len());
    for (line, body) in rows {
        let (name, rest) = body
            .trim()
            .split_once(':')
            .ok_or_else(|| parse_err(line, "expected `name:`"))?;
        let tok: Vec<&str> = rest.split_whitespace().collect();
        let [lhs @ .., sense, rhs] = &tok[..] else {
            return Err(parse_err(line, "expected `terms sense rhs`"));
        };
        let sense = Sense::parse(sense).ok_or_else(|| parse_err(line, format!("unknown sense `{sense}`")))?;
        linear.push(LinearRow {
            name: name.to_string(),
            terms: parse_lp_terms(lhs, &names, line)?,
            sense,
            rhs: real(rhs, line)?,
        });
    }
    let meta = ModelMeta::from_pairs(&meta).map_err(|e| parse_err(1, e))?;
    Ok(ModelIR {
        variables,
        linear,
        soc: Vec::new(),
        objective,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NormSpec;
    use crate::instance::example_3_5;
    use crate::model::{export_model, ExportOptions, Formulation};

    #[test]
    fn conic_round_trip_and_determinism() {
        let inst = example_3_5();
        for f in [Formulation::ThreeIndex, Formulation::Bep] {
            let m = export_model(&inst, f, &ExportOptions::default()).unwrap();
            let a = to_text(&m, ModelFormat::ConicText).unwrap();
            assert_eq!(a, to_text(&m, ModelFormat::ConicText).unwrap());
            assert_eq!(from_text(&a).unwrap(), m);
        }
    }

    #[test]
    fn lp_round_trip() {
        let inst = example_3_5().with_norms(NormSpec::LINF, NormSpec::LINF);
        let m = export_model(&inst, Formulation::MilpBlock, &ExportOptions::default()).unwrap();
        let a = to_text(&m, ModelFormat::LpText).unwrap();
        assert_eq!(from_text(&a).unwrap(), m);
        assert!(a.lines().all(|l| l.len() < 510));
    }

    #[test]
    fn rejects_bad_models() {
        let inst = example_3_5();
        let mut m = export_model(&inst, Formulation::Bep, &ExportOptions::default()).unwrap();
        assert!(to_text(&m, ModelFormat::LpText).is_err());
        m.objective.clear();
        assert!(matches!(
            to_text(&m, ModelFormat::ConicText),
            Err(OmpnError::UnsupportedModel(_))
        ));
        assert!(from_text("hello\n").is_err());
    }
}
