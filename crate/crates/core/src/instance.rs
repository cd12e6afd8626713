//! Problem data: sites, their ball neighborhoods, set-up costs, `p` and the
//! ordered-median weights. Files are `.ompn.json` with every real written as
//! a shortest-round-trip decimal string.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{OmpnError, Result};
use crate::geometry::{Neighborhood, NormSpec};
use crate::om::{make_lambda, LambdaPreset, LambdaVector};
use crate::rng::{rng_from_seed, uniform};

const US49_JSON: &str = include_str!("../../../data/us49.ompn.json");
const EXAMPLE_3_5_JSON: &str = include_str!("../../../data/example_3_5.ompn.json");

/// Distance charged to a customer whose own site is open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SelfService {
    /// The customer is served at zero distance.
    #[default]
    Zero,
    /// The customer travels to the placed facility like any other.
    Travel,
}

impl SelfService {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelfService::Zero => "zero",
            SelfService::Travel => "travel",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(SelfService::Zero),
            "travel" => Ok(SelfService::Travel),
            other => Err(OmpnError::validation(
                "self_service",
                format!("`{other}` is not `zero` or `travel`"),
            )),
        }
    }
}

/// Which set-up costs accompany a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetupConvention {
    Zero,
    /// `f_j = r_j`.
    Radius,
}

/// How the weights were specified; kept so files round-trip.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSpec {
    Preset(LambdaPreset),
    Explicit,
}

/// Radius ranges of the random scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioSpec {
    id: u8,
}

impl ScenarioSpec {
    pub fn new(id: u8) -> Result<Self> {
        if (1..=4).contains(&id) {
            Ok(ScenarioSpec { id })
        } else {
            Err(OmpnError::OutOfRange {
                name: "scenario",
                detail: format!("{id} is not in 1..=4"),
            })
        }
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn radius_range(&self) -> (f64, f64) {
        let lo = 5.0 * (self.id - 1) as f64;
        (lo, lo + 5.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    name: String,
    labels: Option<Vec<String>>,
    points: Vec<Vec<f64>>,
    radii: Vec<f64>,
    ball_norm: NormSpec,
    distance_norm: NormSpec,
    setup_costs: Vec<f64>,
    p: usize,
    lambda: LambdaVector,
    lambda_spec: LambdaSpec,
    self_service: SelfService,
}

fn check_reals(field: &str, values: &[f64], nonneg: bool) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(OmpnError::validation(format!("{field}[{i}]"), "not a finite number"));
        }
        if nonneg && v < 0.0 {
            return Err(OmpnError::validation(format!("{field}[{i}]"), format!("{v} is negative")));
        }
    }
    Ok(())
}

impl Instance {
    /// Validated constructor; `p` must satisfy `1 ≤ p < n`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        points: Vec<Vec<f64>>,
        radii: Vec<f64>,
        ball_norm: NormSpec,
        distance_norm: NormSpec,
        setup_costs: Vec<f64>,
        p: usize,
        lambda_spec: LambdaSpec,
        lambda: Option<LambdaVector>,
    ) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(OmpnError::validation("points", format!("need at least 2 sites, got {n}")));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(OmpnError::validation("dim", "must be at least 1"));
        }
        for (i, pt) in points.iter().enumerate() {
            if pt.len() != dim {
                return Err(OmpnError::validation(
                    format!("points[{i}]"),
                    format!("has {} coordinates, expected {dim}", pt.len()),
                ));
            }
            check_reals(&format!("points[{i}]"), pt, false)?;
        }
        if radii.len() != n {
            return Err(OmpnError::validation(
                "radii",
                format!("has {} entries, expected {n}", radii.len()),
            ));
        }
        check_reals("radii", &radii, true)?;
        if setup_costs.len() != n {
            return Err(OmpnError::validation(
                "setup_costs",
                format!("has {} entries, expected {n}", setup_costs.len()),
            ));
        }
        check_reals("setup_costs", &setup_costs, true)?;
        if p == 0 || p >= n {
            return Err(OmpnError::validation("p", format!("{p} is not in 1..{n}")));
        }
        let lambda = match (&lambda_spec, lambda) {
            (LambdaSpec::Preset(preset), _) => {
                make_lambda(*preset, n).map_err(|e| OmpnError::validation("lambda", e.to_string()))?
            }
            (LambdaSpec::Explicit, Some(l)) => l,
            (LambdaSpec::Explicit, None) => {
                return Err(OmpnError::validation("lambda", "explicit weights missing"));
            }
        };
        if lambda.len() != n {
            return Err(OmpnError::validation(
                "lambda",
                format!("has {} weights, expected {n}", lambda.len()),
            ));
        }
        Ok(Instance {
            name: name.into(),
            labels: None,
            points,
            radii,
            ball_norm,
            distance_norm,
            setup_costs,
            p,
            lambda,
            lambda_spec,
            self_service: SelfService::Zero,
        })
    }

    /// Euclidean instance with `f_j = r_j` and a preset weight vector.
    pub fn euclidean(
        name: impl Into<String>,
        points: Vec<Vec<f64>>,
        radii: Vec<f64>,
        p: usize,
        preset: LambdaPreset,
    ) -> Result<Self> {
        let setup = radii.clone();
        Instance::new(
            name,
            points,
            radii,
            NormSpec::L2,
            NormSpec::L2,
            setup,
            p,
            LambdaSpec::Preset(preset),
            None,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of site `j`, or its zero-based index.
    pub fn label(&self, j: usize) -> String {
        match &self.labels {
            Some(l) => l[j].clone(),
            None => j.to_string(),
        }
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn radius(&self, j: usize) -> f64 {
        self.radii[j]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn neighborhood(&self, j: usize) -> Neighborhood {
        Neighborhood::new(self.points[j].clone(), self.radii[j], self.ball_norm)
    }

    pub fn ball_norm(&self) -> NormSpec {
        self.ball_norm
    }

    pub fn distance_norm(&self) -> NormSpec {
        self.distance_norm
    }

    pub fn setup_cost(&self, j: usize) -> f64 {
        self.setup_costs[j]
    }

    pub fn setup_costs(&self) -> &[f64] {
        &self.setup_costs
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn lambda(&self) -> &LambdaVector {
        &self.lambda
    }

    pub fn lambda_spec(&self) -> &LambdaSpec {
        &self.lambda_spec
    }

    pub fn self_service(&self) -> SelfService {
        self.self_service
    }

    pub fn with_p(mut self, p: usize) -> Result<Self> {
        if p == 0 || p >= self.n() {
            return Err(OmpnError::validation("p", format!("{p} is not in 1..{}", self.n())));
        }
        self.p = p;
        Ok(self)
    }

    pub fn with_preset(mut self, preset: LambdaPreset) -> Result<Self> {
        self.lambda = make_lambda(preset, self.n()).map_err(|e| OmpnError::validation("lambda", e.to_string()))?;
        self.lambda_spec = LambdaSpec::Preset(preset);
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: LambdaVector) -> Result<Self> {
        if lambda.len() != self.n() {
            return Err(OmpnError::validation(
                "lambda",
                format!("has {} weights, expected {}", lambda.len(), self.n()),
            ));
        }
        self.lambda = lambda;
        self.lambda_spec = LambdaSpec::Explicit;
        Ok(self)
    }

    pub fn with_radii(mut self, radii: Vec<f64>) -> Result<Self> {
        if radii.len() != self.n() {
            return Err(OmpnError::validation(
                "radii",
                format!("has {} entries, expected {}", radii.len(), self.n()),
            ));
        }
        check_reals("radii", &radii, true)?;
        self.radii = radii;
        Ok(self)
    }

    pub fn with_setup_costs(mut self, setup: Vec<f64>) -> Result<Self> {
        if setup.len() != self.n() {
            return Err(OmpnError::validation(
                "setup_costs",
                format!("has {} entries, expected {}", setup.len(), self.n()),
            ));
        }
        check_reals("setup_costs", &setup, true)?;
        self.setup_costs = setup;
        Ok(self)
    }

    pub fn with_norms(mut self, ball_norm: NormSpec, distance_norm: NormSpec) -> Self {
        self.ball_norm = ball_norm;
        self.distance_norm = distance_norm;
        self
    }

    pub fn with_self_service(mut self, mode: SelfService) -> Self {
        self.self_service = mode;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(OmpnError::validation(
                "labels",
                format!("has {} entries, expected {}", labels.len(), self.n()),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Same instance with every radius zero (the discrete special case).
    pub fn degenerate(&self) -> Self {
        let mut out = self.clone();
        out.radii = vec![0.0; self.n()];
        out
    }

    /// Pairwise center distances in the travel norm, row-major.
    pub fn center_distances(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    out[i * n + j] = crate::geometry::dist(self.distance_norm, &self.points[i], &self.points[j]);
                }
            }
        }
        out
    }

    /// SHA-256 of the canonical file text, lowercase hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json_string(&self) -> String {
        let lambda = match &self.lambda_spec {
            LambdaSpec::Preset(p) => {
                let mut obj = serde_json::Map::new();
                obj.insert("preset".into(), Value::String(p.name().into()));
                match p {
                    LambdaPreset::Kcentrum { k } => {
                        obj.insert("params".into(), serde_json::json!({ "K": k }));
                    }
                    LambdaPreset::Centdian { alpha } => {
                        obj.insert("params".into(), serde_json::json!({ "alpha": real(*alpha) }));
                    }
                    _ => {}
                }
                Value::Object(obj)
            }
            LambdaSpec::Explicit => Value::Array(self.lambda.weights().iter().map(|&w| Value::String(real(w))).collect()),
        };
        let file = InstanceFile {
            name: &self.name,
            dim: self.dim(),
            labels: self.labels.as_deref(),
            points: self.points.iter().map(|p| p.iter().map(|&x| real(x)).collect()).collect(),
            radii: self.radii.iter().map(|&x| real(x)).collect(),
            ball_norm: self.ball_norm.to_string(),
            distance_norm: self.distance_norm.to_string(),
            setup_costs: self.setup_costs.iter().map(|&x| real(x)).collect(),
            p: self.p,
            lambda,
            self_service: self.self_service.as_str(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("instance serializes");
        text.push('\n');
        text
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text).map_err(|e| OmpnError::Parse {
            line: e.line(),
            column: e.column(),
            detail: e.to_string(),
        })?;
        let obj = root
            .as_object()
            .ok_or_else(|| OmpnError::validation("<root>", "expected a JSON object"))?;
        let get = |k: &str| obj.get(k).ok_or_else(|| OmpnError::validation(k, "missing"));

        let name = match obj.get("name") {
            Some(v) => v
                .as_str()
                .ok_or_else(|| OmpnError::validation("name", "expected a string"))?
                .to_string(),
            None => String::new(),
        };
        let dim = get("dim")?
            .as_u64()
            .ok_or_else(|| OmpnError::validation("dim", "expected a positive integer"))? as usize;
        let points_v = get("points")?
            .as_array()
            .ok_or_else(|| OmpnError::validation("points", "expected an array"))?;
        let mut points = Vec::with_capacity(points_v.len());
        for (i, row) in points_v.iter().enumerate() {
            let field = format!("points[{i}]");
            let coords = parse_reals(&field, row)?;
            if coords.len() != dim {
                return Err(OmpnError::validation(
                    field,
                    format!("has {} coordinates, expected dim {dim}", coords.len()),
                ));
            }
            points.push(coords);
        }
        let radii = parse_reals("radii", get("radii")?)?;
        let ball_norm = parse_norm("ball_norm", get("ball_norm")?)?;
        let distance_norm = parse_norm("distance_norm", get("distance_norm")?)?;
        let setup_costs = match obj.get("setup_costs") {
            Some(v) => parse_reals("setup_costs", v)?,
            None => vec![0.0; points.len()],
        };
        let p = get("p")?
            .as_u64()
            .ok_or_else(|| OmpnError::validation("p", "expected a nonnegative integer"))? as usize;
        let (lambda_spec, lambda) = parse_lambda(get("lambda")?, points.len())?;
        let mut inst = Instance::new(
            name,
            points,
            radii,
            ball_norm,
            distance_norm,
            setup_costs,
            p,
            lambda_spec,
            lambda,
        )?;
        if let Some(v) = obj.get("self_service") {
            let s = v
                .as_str()
                .ok_or_else(|| OmpnError::validation("self_service", "expected a string"))?;
            inst.self_service = SelfService::parse(s)?;
        }
        if let Some(v) = obj.get("labels") {
            let arr = v
                .as_array()
                .ok_or_else(|| OmpnError::validation("labels", "expected an array"))?;
            let labels = arr
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    l.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| OmpnError::validation(format!("labels[{i}]"), "expected a string"))
                })
                .collect::<Result<Vec<_>>>()?;
            inst = inst.with_labels(labels)?;
        }
        Ok(inst)
    }
}

#[derive(Serialize)]
struct InstanceFile<'a> {
    name: &'a str,
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<&'a [String]>,
    points: Vec<Vec<String>>,
    radii: Vec<String>,
    ball_norm: String,
    distance_norm: String,
    setup_costs: Vec<String>,
    p: usize,
    lambda: Value,
    self_service: &'a str,
}

/// Shortest decimal that parses back to the same `f64`.
pub(crate) fn real(x: f64) -> String {
    format!("{x}")
}

fn parse_real(field: &str, v: &Value) -> Result<f64> {
    let x = match v {
        Value::String(s) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| OmpnError::validation(field, format!("`{s}` is not a decimal number")))?,
        Value::Number(n) => n.as_f64().ok_or_else(|| OmpnError::validation(field, "not representable"))?,
        _ => return Err(OmpnError::validation(field, "expected a decimal string")),
    };
    if !x.is_finite() {
        return Err(OmpnError::validation(field, "not a finite number"));
    }
    Ok(x)
}

fn parse_reals(field: &str, v: &Value) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| OmpnError::validation(field, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| parse_real(&format!("{field}[{i}]"), x))
        .collect()
}

fn parse_norm(field: &str, v: &Value) -> Result<NormSpec> {
    let s = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(OmpnError::validation(field, "expected a norm string")),
    };
    s.parse::<NormSpec>()
        .map_err(|_| OmpnError::validation(field, format!("`{s}` is not `1`, `2`, `inf` or `r/s`")))
}

fn parse_lambda(v: &Value, n: usize) -> Result<(LambdaSpec, Option<LambdaVector>)> {
    match v {
        Value::Array(_) => {
            let w = parse_reals("lambda", v)?;
            let l = LambdaVector::new(w).map_err(|e| OmpnError::validation("lambda", e.to_string()))?;
            Ok((LambdaSpec::Explicit, Some(l)))
        }
        Value::Object(obj) => {
            let name = obj
                .get("preset")
                .and_then(Value::as_str)
                .ok_or_else(|| OmpnError::validation("lambda.preset", "missing"))?;
            let params = obj.get("params");
            let k = match params.and_then(|p| p.get("K")) {
                Some(k) => Some(
                    k.as_u64()
                        .ok_or_else(|| OmpnError::validation("lambda.params.K", "expected an integer"))?
                        as usize,
                ),
                None => None,
            };
            let alpha = match params.and_then(|p| p.get("alpha")) {
                Some(a) => Some(parse_real("lambda.params.alpha", a)?),
                None => None,
            };
            let preset =
                preset_with_defaults(name, k, alpha, n).map_err(|e| OmpnError::validation("lambda.preset", e.to_string()))?;
            Ok((LambdaSpec::Preset(preset), None))
        }
        _ => Err(OmpnError::validation("lambda", "expected an array or {preset, params}")),
    }
}

/// Preset by name; `K` defaults to `⌊n/2⌋` and `α` to `0.5`.
pub fn preset_with_defaults(name: &str, k: Option<usize>, alpha: Option<f64>, n: usize) -> Result<LambdaPreset> {
    let k = k.or(Some((n / 2).max(1)));
    let alpha = alpha.or(Some(0.5));
    LambdaPreset::from_name(name, k, alpha)
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| OmpnError::io(path, e))?;
    Instance::from_json_str(&text)
}

pub fn save_instance(instance: &Instance, path: &Path) -> Result<()> {
    std::fs::write(path, instance.to_json_string()).map_err(|e| OmpnError::io(path, e))
}

/// Uniform sites in `[0,100]^d`, radii uniform in the scenario range,
/// `f_j = r_j`, Euclidean norms. All coordinates are drawn (row-major)
/// before the radii.
pub fn generate_random(
    n: usize,
    dim: usize,
    scenario: ScenarioSpec,
    p: usize,
    preset: LambdaPreset,
    seed: u64,
) -> Result<Instance> {
    if !(2..=3).contains(&dim) {
        return Err(OmpnError::OutOfRange {
            name: "dim",
            detail: format!("{dim} is not 2 or 3"),
        });
    }
    if n < 2 {
        return Err(OmpnError::OutOfRange {
            name: "n",
            detail: format!("{n} is below 2"),
        });
    }
    let mut rng = rng_from_seed(seed);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| uniform(&mut rng, 0.0, 100.0)).collect())
        .collect();
    let (lo, hi) = scenario.radius_range();
    let radii: Vec<f64> = (0..n).map(|_| uniform(&mut rng, lo, hi)).collect();
    let name = format!("random-n{n}-d{dim}-s{}-seed{seed}", scenario.id());
    Instance::euclidean(name, points, radii, p, preset)
}

/// The 49 US sites with base radii scaled by `scale` and `f_j = r_j`.
pub fn builtin_us49(scale: u32, p: usize, preset: LambdaPreset) -> Result<Instance> {
    if !(1..=3).contains(&scale) {
        return Err(OmpnError::OutOfRange {
            name: "scale",
            detail: format!("{scale} is not in 1..=3"),
        });
    }
    let base = Instance::from_json_str(US49_JSON)?;
    let s = scale as f64;
    let radii: Vec<f64> = base.radii.iter().map(|r| r * s).collect();
    base.with_setup_costs(radii.clone())?
        .with_radii(radii)?
        .with_preset(preset)?
        .with_p(p)
        .map(|i| i.with_name(format!("us49-s{scale}")))
}

/// The five-site worked example: median weights, `p = 2`, no set-up cost,
/// open sites' own customers travel to the placed facility.
pub fn example_3_5() -> Instance {
    Instance::from_json_str(EXAMPLE_3_5_JSON).expect("bundled example parses")
}

/// The five-site example under an explicit cost convention.
pub fn example_3_5_with(setup: SetupConvention, self_service: SelfService) -> Instance {
    let base = example_3_5();
    let costs = match setup {
        SetupConvention::Zero => vec![0.0; base.n()],
        SetupConvention::Radius => base.radii.clone(),
    };
    base.with_setup_costs(costs)
        .expect("five costs")
        .with_self_service(self_service)
}

/// Resolves `example_3_5` and `us49_s{1,2,3}_p{N}_{median,center,kcentrum,centdian}`.
pub fn builtin_by_name(name: &str) -> Option<Result<Instance>> {
    if name == "example_3_5" {
        return Some(Ok(example_3_5()));
    }
    let rest = name.strip_prefix("us49_s")?;
    let mut parts = rest.split('_');
    let scale: u32 = parts.next()?.parse().ok()?;
    let p: usize = parts.next()?.strip_prefix('p')?.parse().ok()?;
    let preset_name = parts.next()?;
    if parts.next().is_some() {
        return None;
    }
    let preset = match preset_with_defaults(preset_name, None, None, 49) {
        Ok(p) => p,
        Err(e) => return Some(Err(e)),
    };
    Some(builtin_us49(scale, p, preset))
}
