//! Run reports and their independent re-check.

use serde::{Deserialize, Serialize};

use crate::alloc::service_distance;
use crate::error::{OmpnError, Result};
use crate::exact::Solution;
use crate::instance::Instance;
use crate::om::evaluate_om;

pub const REPORT_FORMAT: &str = "ompn-run 1";

/// Solver settings echoed into a report. Thread counts are deliberately
/// absent: they never change the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub starts: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub it_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub randomized: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subset_cap: Option<f64>,
}

/// Field order is the serialization order and is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub instance: String,
    pub instance_hash: String,
    pub solver: String,
    pub seed: u64,
    pub params: ParamsEcho,
    pub objective: f64,
    pub om_value: f64,
    pub setup_value: f64,
    pub open: Vec<usize>,
    pub labels: Vec<String>,
    pub placements: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub distances: Vec<f64>,
    pub proof: String,
    pub subsets_evaluated: u64,
    pub subsets_pruned: u64,
    pub iterations: u64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_s: Option<f64>,
}

impl RunReport {
    pub fn new(instance: &Instance, solver: &str, seed: u64, params: ParamsEcho, sol: &Solution, timings: bool) -> Self {
        let a = &sol.alloc;
        RunReport {
            format: REPORT_FORMAT.into(),
            instance: instance.name().into(),
            instance_hash: instance.hash(),
            solver: solver.into(),
            seed,
            params,
            objective: sol.objective,
            om_value: a.om_value,
            setup_value: a.setup_value,
            open: sol.open.clone(),
            labels: sol.open.iter().map(|&j| instance.label(j)).collect(),
            placements: a.placement.locations.clone(),
            assignment: a.assignment.assign.clone(),
            distances: a.distances.clone(),
            proof: match sol.proof {
                crate::exact::Proof::Exact => "exact".into(),
                crate::exact::Proof::Heuristic => "heuristic".into(),
            },
            subsets_evaluated: sol.stats.subsets_evaluated,
            subsets_pruned: sol.stats.subsets_pruned,
            iterations: sol.stats.iterations,
            converged: a.converged,
            wall_time_s: timings.then_some(sol.stats.wall_time),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| OmpnError::Parse {
            line: e.line(),
            column: e.column(),
            detail: e.to_string(),
        })
    }

    /// One-paragraph summary for terminals.
    pub fn summary(&self) -> String {
        format!(
            "{} on {}: objective {:.4} (ordered median {:.4} + set-up {:.4})\n  open: {}\n  {} open sets evaluated, {} pruned, {} iterations, proof {}",
            self.solver,
            self.instance,
            self.objective,
            self.om_value,
            self.setup_value,
            self.labels.join(" "),
            self.subsets_evaluated,
            self.subsets_pruned,
            self.iterations,
            self.proof,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Recomputes every claim of a report from the instance alone. Later checks
/// are skipped once the structure is broken.
pub fn evaluate_report(instance: &Instance, report: &RunReport) -> Vec<Check> {
    let n = instance.n();
    let mut out = Vec::new();
    let hash = instance.hash();
    out.push(check(
        "instance_hash",
        report.instance_hash == hash,
        if report.instance_hash == hash {
            "matches".to_string()
        } else {
            format!("report {} vs instance {hash}", report.instance_hash)
        },
    ));

    let open = &report.open;
    let ascending = open.windows(2).all(|w| w[0] < w[1]);
    let in_range = open.iter().all(|&j| j < n);
    let ok = open.len() == instance.p() && ascending && in_range;
    out.push(check(
        "open_set",
        ok,
        format!(
            "{} sites (p = {}), ascending {ascending}, in range {in_range}",
            open.len(),
            instance.p()
        ),
    ));
    let shaped = report.placements.len() == open.len() && report.placements.iter().all(|l| l.len() == instance.dim());
    out.push(check(
        "placement_shape",
        shaped,
        format!("{} locations of dimension {}", report.placements.len(), instance.dim()),
    ));
    let assigned = report.assignment.len() == n && report.distances.len() == n;
    out.push(check(
        "assignment_shape",
        assigned,
        format!("{} assignments for {n} customers", report.assignment.len()),
    ));
    if !(ok && shaped && assigned) {
        return out;
    }

    for (slot, &j) in open.iter().enumerate() {
        let nb = instance.neighborhood(j);
        let excess = nb.violation(&report.placements[slot]);
        let tol = 1e-9 * nb.radius.max(1.0);
        out.push(check(
            format!("placement_in_ball[{}]", instance.label(j)),
            excess <= tol,
            format!("norm excess {excess:.3e} over radius {}", nb.radius),
        ));
    }

    let stray: Vec<usize> = (0..n)
        .filter(|&i| open.binary_search(&report.assignment[i]).is_err())
        .collect();
    out.push(check(
        "assignment_to_open",
        stray.is_empty(),
        format!("customers served by closed sites: {stray:?}"),
    ));
    let selfish: Vec<usize> = open.iter().copied().filter(|&j| report.assignment[j] != j).collect();
    out.push(check(
        "open_sites_serve_themselves",
        selfish.is_empty(),
        format!("open sites served elsewhere: {selfish:?}"),
    ));
    if !stray.is_empty() {
        return out;
    }

    let distances: Vec<f64> = (0..n)
        .map(|i| {
            let j = report.assignment[i];
            let slot = open.binary_search(&j).expect("checked above");
            service_distance(instance, i, j, &report.placements[slot])
        })
        .collect();
    let worst = (0..n).map(|i| (distances[i] - report.distances[i]).abs()).fold(0.0, f64::max);
    let same = (0..n).all(|i| close(distances[i], report.distances[i], 1e-9));
    out.push(check("distances", same, format!("largest deviation {worst:.3e}")));

    let om = evaluate_om(instance.lambda(), &distances).unwrap_or(f64::NAN);
    let setup: f64 = open.iter().map(|&j| instance.setup_cost(j)).sum();
    let total = om + setup;
    out.push(check(
        "om_value",
        close(om, report.om_value, 1e-9),
        format!("recomputed {om:.10}, reported {:.10}", report.om_value),
    ));
    out.push(check(
        "setup_value",
        close(setup, report.setup_value, 1e-9),
        format!("recomputed {setup:.10}, reported {:.10}", report.setup_value),
    ));
    out.push(check(
        "objective",
        close(total, report.objective, 1e-9),
        format!("recomputed {total:.10}, reported {:.10}", report.objective),
    ));
    out
}
