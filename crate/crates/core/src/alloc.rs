//! Costing a fixed open set `J`: place each open facility inside its ball,
//! assign every customer, and minimize the ordered median plus set-up cost.
//!
//! The joint problem is nonconvex in the assignment but convex for a fixed
//! assignment. `alloc_multistart` alternates closest assignment with a
//! projected-subgradient location step; `alloc_exact_enum` enumerates every
//! assignment and solves each convex piece.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{OmpnError, Result};
use crate::geometry::{check_projectable, dist, norm_subgradient_into, project_in_place, BoundsMatrix};
use crate::instance::{Instance, SelfService};
use crate::om::{om_subgradient_buf, om_unchecked};
use crate::rng::{derive_seed, hash_indices, rng_from_seed, uniform, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct AllocParams {
    /// Multistart count; the first start is the warm start or the centers.
    pub starts: usize,
    /// Subgradient iteration budget per location step.
    pub max_iters: usize,
    /// Iterations without relative improvement `tol` before the step halves.
    pub stall_iters: usize,
    pub tol: f64,
    /// The location step stops once the step length falls below
    /// `step_tol` times the initial step.
    pub step_tol: f64,
    /// Assign/locate rounds per start.
    pub max_rounds: usize,
    /// Largest assignment count `alloc_exact_enum` accepts.
    pub enum_cap: f64,
    pub seed: u64,
}

impl Default for AllocParams {
    fn default() -> Self {
        AllocParams {
            starts: 20,
            max_iters: 5000,
            stall_iters: 200,
            tol: 1e-9,
            step_tol: 1e-6,
            max_rounds: 50,
            enum_cap: 1e6,
            seed: 0,
        }
    }
}

/// Serving facility (a site index in `J`) of every customer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Assignment {
    pub assign: Vec<usize>,
}

/// Facility locations, aligned with the ascending open set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Placement {
    pub open: Vec<usize>,
    pub locations: Vec<Vec<f64>>,
}

impl Placement {
    /// Every open facility at its site.
    pub fn centers(instance: &Instance, open: &[usize]) -> Self {
        Placement {
            open: open.to_vec(),
            locations: open.iter().map(|&j| instance.point(j).to_vec()).collect(),
        }
    }

    pub fn location(&self, j: usize) -> Option<&[f64]> {
        self.open.iter().position(|&o| o == j).map(|s| self.locations[s].as_slice())
    }

    fn flat(&self) -> Vec<f64> {
        self.locations.iter().flatten().copied().collect()
    }

    fn from_flat(open: &[usize], flat: &[f64], dim: usize) -> Self {
        Placement {
            open: open.to_vec(),
            locations: flat.chunks(dim).map(<[f64]>::to_vec).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocSolution {
    pub open: Vec<usize>,
    pub assignment: Assignment,
    pub placement: Placement,
    pub distances: Vec<f64>,
    pub om_value: f64,
    pub setup_value: f64,
    pub total: f64,
    pub starts_used: usize,
    pub converged: bool,
}

/// Result of one convex location step.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedSolve {
    pub placement: Placement,
    pub om_value: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FixStatus {
    Free,
    ForcedZero,
    ForcedOne,
}

/// Assignment fixings for one open set; rows are customers, columns follow
/// the ascending open set. At most one `ForcedOne` per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FixingTable {
    pub open: Vec<usize>,
    status: Vec<FixStatus>,
}

impl FixingTable {
    pub fn status(&self, i: usize, j: usize) -> FixStatus {
        let p = self.open.len();
        match self.open.iter().position(|&o| o == j) {
            Some(s) => self.status[i * p + s],
            None => FixStatus::ForcedZero,
        }
    }

    fn slot_status(&self, i: usize, s: usize) -> FixStatus {
        self.status[i * self.open.len() + s]
    }

    /// Share of customer/facility pairs no longer free.
    pub fn fixed_fraction(&self) -> f64 {
        let fixed = self.status.iter().filter(|&&s| s != FixStatus::Free).count();
        fixed as f64 / self.status.len() as f64
    }

    /// Slots customer `i` may still use.
    fn options(&self, i: usize) -> Vec<usize> {
        let p = self.open.len();
        if let Some(s) = (0..p).find(|&s| self.slot_status(i, s) == FixStatus::ForcedOne) {
            return vec![s];
        }
        (0..p).filter(|&s| self.slot_status(i, s) == FixStatus::Free).collect()
    }
}

/// Sorted, deduplicated, range-checked copy of `open`.
pub(crate) fn normalize_open(instance: &Instance, open: &[usize]) -> Result<Vec<usize>> {
    if open.is_empty() {
        return Err(OmpnError::EmptyOpenSet);
    }
    let mut out = open.to_vec();
    out.sort_unstable();
    out.dedup();
    if out.len() != open.len() {
        return Err(OmpnError::validation("open set", "repeated facility"));
    }
    if let Some(&bad) = out.iter().find(|&&j| j >= instance.n()) {
        return Err(OmpnError::validation("open set", format!("facility {bad} out of range")));
    }
    if out.iter().any(|&j| instance.radius(j) > 0.0) {
        check_projectable(instance.ball_norm())?;
    }
    Ok(out)
}

/// Travel distance of customer `i` to facility `j` placed at `loc`.
pub fn service_distance(instance: &Instance, i: usize, j: usize, loc: &[f64]) -> f64 {
    if i == j && instance.self_service() == SelfService::Zero {
        0.0
    } else {
        dist(instance.distance_norm(), instance.point(i), loc)
    }
}

/// Bounds on the distance customer `i` pays when served by open site `j`.
pub fn service_bounds(instance: &Instance, bounds: &BoundsMatrix, i: usize, j: usize) -> (f64, f64) {
    if i == j && instance.self_service() == SelfService::Zero {
        (0.0, 0.0)
    } else {
        (bounds.dhat(i, j), bounds.dmax(i, j))
    }
}

/// Closest open facility for every customer; open sites serve themselves and
/// ties go to the lower site index.
pub fn assign_closest(placement: &Placement, instance: &Instance) -> Result<Assignment> {
    if placement.open.is_empty() {
        return Err(OmpnError::EmptyOpenSet);
    }
    let slots = closest_slots(instance, &placement.open, &placement.flat());
    Ok(Assignment {
        assign: slots.iter().map(|&s| placement.open[s]).collect(),
    })
}

fn closest_slots(instance: &Instance, open: &[usize], flat: &[f64]) -> Vec<usize> {
    let d = instance.dim();
    let nu = instance.distance_norm();
    (0..instance.n())
        .map(|i| {
            if let Some(s) = open.iter().position(|&j| j == i) {
                return s;
            }
            let a = instance.point(i);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for s in 0..open.len() {
                let v = dist(nu, a, &flat[s * d..(s + 1) * d]);
                if v < best_d {
                    best_d = v;
                    best = s;
                }
            }
            best
        })
        .collect()
}

fn slot_distances(instance: &Instance, open: &[usize], slots: &[usize], flat: &[f64], out: &mut [f64]) {
    let d = instance.dim();
    for (i, &s) in slots.iter().enumerate() {
        out[i] = service_distance(instance, i, open[s], &flat[s * d..(s + 1) * d]);
    }
}

fn slots_of(open: &[usize], assignment: &Assignment) -> Result<Vec<usize>> {
    assignment
        .assign
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let s = open
                .iter()
                .position(|&o| o == j)
                .ok_or_else(|| OmpnError::validation(format!("assignment[{i}]"), format!("{j} is not open")))?;
            if let Some(own) = open.iter().position(|&o| o == i) {
                if own != s {
                    return Err(OmpnError::validation(
                        format!("assignment[{i}]"),
                        "an open site serves itself",
                    ));
                }
            }
            Ok(s)
        })
        .collect()
}

/// Minimizes the ordered median over placements for a fixed assignment by
/// projected subgradient steps of length `α/√t`; `α` starts at the diameter
/// of the largest open ball and halves, restarting from the best iterate,
/// whenever `stall_iters` steps pass without relative gain `tol`.
pub fn solve_fixed_assignment(
    assignment: &Assignment,
    instance: &Instance,
    open: &[usize],
    params: &AllocParams,
) -> Result<FixedSolve> {
    let open = normalize_open(instance, open)?;
    if assignment.assign.len() != instance.n() {
        return Err(OmpnError::DimensionMismatch {
            expected: instance.n(),
            got: assignment.assign.len(),
        });
    }
    let slots = slots_of(&open, assignment)?;
    let start = Placement::centers(instance, &open).flat();
    Ok(locate(instance, &open, &slots, &start, params))
}

fn locate(instance: &Instance, open: &[usize], slots: &[usize], start: &[f64], params: &AllocParams) -> FixedSolve {
    let n = instance.n();
    let d = instance.dim();
    let p = open.len();
    let weights = instance.lambda().weights();
    let nu = instance.distance_norm();
    let tau = instance.ball_norm();
    let zero_self = instance.self_service() == SelfService::Zero;

    let mut loc = start.to_vec();
    let mut dists = vec![0.0; n];
    let mut gd = vec![0.0; n];
    let mut perm = Vec::with_capacity(n);
    let mut grad = vec![0.0; p * d];
    let mut diff = vec![0.0; d];
    let mut ng = vec![0.0; d];

    let alpha0 = 2.0 * open.iter().map(|&j| instance.radius(j)).fold(0.0, f64::max);
    let mut best = f64::INFINITY;
    let mut best_loc = loc.clone();
    let mut reference = f64::INFINITY;
    let mut stall = 0;
    let mut alpha = alpha0;
    let mut epoch_t = 0usize;
    let mut converged = alpha0 == 0.0;
    let mut iterations = 0;

    loop {
        slot_distances(instance, open, slots, &loc, &mut dists);
        let value = om_subgradient_buf(weights, &dists, &mut gd, &mut perm);
        if value < best {
            best = value;
            best_loc.copy_from_slice(&loc);
        }
        if converged || iterations >= params.max_iters {
            break;
        }
        iterations += 1;
        if best < reference - params.tol * (1.0 + reference.abs()) {
            reference = best;
            stall = 0;
        } else {
            stall += 1;
        }
        if stall >= params.stall_iters {
            alpha *= 0.5;
            if alpha < params.step_tol * alpha0 {
                converged = true;
                break;
            }
            loc.copy_from_slice(&best_loc);
            epoch_t = 0;
            stall = 0;
            reference = best;
            continue;
        }

        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..n {
            let w = gd[i];
            let s = slots[i];
            if w == 0.0 || (zero_self && open[s] == i) {
                continue;
            }
            let a = instance.point(i);
            for k in 0..d {
                diff[k] = a[k] - loc[s * d + k];
            }
            norm_subgradient_into(nu, &diff, &mut ng);
            for k in 0..d {
                grad[s * d + k] -= w * ng[k];
            }
        }
        let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gn == 0.0 {
            converged = true;
            break;
        }
        epoch_t += 1;
        let step = alpha / (epoch_t as f64).sqrt() / gn;
        for s in 0..p {
            let j = open[s];
            let r = instance.radius(j);
            let x = &mut loc[s * d..(s + 1) * d];
            if r == 0.0 {
                x.copy_from_slice(instance.point(j));
                continue;
            }
            for k in 0..d {
                x[k] -= step * grad[s * d + k];
            }
            project_in_place(x, instance.point(j), r, tau).expect("projectable norm checked");
        }
    }
    FixedSolve {
        placement: Placement::from_flat(open, &best_loc, d),
        om_value: best,
        converged,
        iterations,
    }
}

/// Objective breakdown of a complete configuration.
pub fn evaluate_configuration(instance: &Instance, placement: &Placement, assignment: &Assignment) -> Result<AllocSolution> {
    let open = normalize_open(instance, &placement.open)?;
    if open != placement.open {
        return Err(OmpnError::validation("placement.open", "must be ascending"));
    }
    if placement.locations.len() != open.len() {
        return Err(OmpnError::validation("placement.locations", "one location per open facility"));
    }
    for (s, l) in placement.locations.iter().enumerate() {
        if l.len() != instance.dim() {
            return Err(OmpnError::validation(
                format!("placement.locations[{s}]"),
                format!("has {} coordinates, expected {}", l.len(), instance.dim()),
            ));
        }
    }
    if assignment.assign.len() != instance.n() {
        return Err(OmpnError::DimensionMismatch {
            expected: instance.n(),
            got: assignment.assign.len(),
        });
    }
    let slots = slots_of(&open, assignment)?;
    Ok(build_solution(instance, &open, &slots, &placement.flat(), 0, true))
}

fn build_solution(
    instance: &Instance,
    open: &[usize],
    slots: &[usize],
    flat: &[f64],
    starts: usize,
    converged: bool,
) -> AllocSolution {
    let mut distances = vec![0.0; instance.n()];
    slot_distances(instance, open, slots, flat, &mut distances);
    let om_value = om_unchecked(instance.lambda().weights(), &distances);
    let setup_value: f64 = open.iter().map(|&j| instance.setup_cost(j)).sum();
    AllocSolution {
        open: open.to_vec(),
        assignment: Assignment {
            assign: slots.iter().map(|&s| open[s]).collect(),
        },
        placement: Placement::from_flat(open, flat, instance.dim()),
        distances,
        om_value,
        setup_value,
        total: om_value + setup_value,
        starts_used: starts,
        converged,
    }
}

/// Uniform point of the ball by rejection from its bounding box.
fn random_in_ball(rng: &mut Rng, instance: &Instance, j: usize, out: &mut [f64]) {
    let c = instance.point(j);
    let r = instance.radius(j);
    if r == 0.0 {
        out.copy_from_slice(c);
        return;
    }
    loop {
        for (o, &ck) in out.iter_mut().zip(c) {
            *o = uniform(rng, ck - r, ck + r);
        }
        if dist(instance.ball_norm(), out, c) <= r {
            return;
        }
    }
}

/// Best of `params.starts` alternating assign/locate runs.
pub fn alloc_multistart(open: &[usize], instance: &Instance, params: &AllocParams) -> Result<AllocSolution> {
    alloc_multistart_from(open, instance, params, None)
}

/// As `alloc_multistart`, with the first start at `warm` when given.
pub fn alloc_multistart_from(
    open: &[usize],
    instance: &Instance,
    params: &AllocParams,
    warm: Option<&Placement>,
) -> Result<AllocSolution> {
    let open = normalize_open(instance, open)?;
    let d = instance.dim();
    let p = open.len();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut best: Option<AllocSolution> = None;
    let mut all_converged = true;
    let set_seed = derive_seed(params.seed, &[hash_indices(&open)]);
    let starts = params.starts.max(1);

    let consider = |cand: AllocSolution, best: &mut Option<AllocSolution>| {
        if best.as_ref().is_none_or(|b| cand.total < b.total) {
            *best = Some(cand);
        }
    };

    for start in 0..starts {
        let mut loc = match (start, warm) {
            (0, Some(w)) if w.open == open => w.flat(),
            (0, _) => Placement::centers(instance, &open).flat(),
            _ => {
                let mut rng = rng_from_seed(derive_seed(set_seed, &[start as u64]));
                let mut flat = vec![0.0; p * d];
                for (s, &j) in open.iter().enumerate() {
                    random_in_ball(&mut rng, instance, j, &mut flat[s * d..(s + 1) * d]);
                }
                flat
            }
        };
        let mut slots = closest_slots(instance, &open, &loc);
        consider(build_solution(instance, &open, &slots, &loc, 0, true), &mut best);
        for _ in 0..params.max_rounds {
            if !seen.insert(slots.clone()) {
                break;
            }
            let fs = locate(instance, &open, &slots, &loc, params);
            all_converged &= fs.converged;
            loc = fs.placement.flat();
            let next = closest_slots(instance, &open, &loc);
            consider(build_solution(instance, &open, &next, &loc, 0, true), &mut best);
            if next == slots {
                break;
            }
            slots = next;
        }
    }
    let mut out = best.expect("at least one start");
    out.starts_used = starts;
    out.converged = all_converged;
    Ok(out)
}

/// `p^(n−p)`, the number of assignments of the closed sites.
pub fn assignment_count(instance: &Instance, p: usize) -> f64 {
    (p as f64).powi((instance.n() - p) as i32)
}

/// Global optimum over all assignments, each solved as a convex problem.
pub fn alloc_exact_enum(open: &[usize], instance: &Instance, params: &AllocParams) -> Result<AllocSolution> {
    let count = assignment_count(instance, open.len());
    if count > params.enum_cap {
        return Err(OmpnError::CapExceeded {
            what: "assignments",
            count,
            cap: params.enum_cap,
        });
    }
    let bounds = BoundsMatrix::compute(instance);
    Ok(alloc_exact_enum_with(open, instance, params, &bounds, None, f64::INFINITY)?.expect("no cutoff"))
}

/// Exact enumeration restricted by `fixing`, skipping every assignment whose
/// bound-based cost already reaches `cutoff`. `None` when nothing beats it.
pub fn alloc_exact_enum_with(
    open: &[usize],
    instance: &Instance,
    params: &AllocParams,
    bounds: &BoundsMatrix,
    fixing: Option<&FixingTable>,
    cutoff: f64,
) -> Result<Option<AllocSolution>> {
    let open = normalize_open(instance, open)?;
    let n = instance.n();
    let p = open.len();
    let weights = instance.lambda().weights();
    let setup: f64 = open.iter().map(|&j| instance.setup_cost(j)).sum();

    let options: Vec<Vec<usize>> = (0..n)
        .map(|i| match open.iter().position(|&j| j == i) {
            Some(s) => vec![s],
            None => match fixing {
                Some(f) if f.open == open => f.options(i),
                _ => (0..p).collect(),
            },
        })
        .collect();
    if options.iter().any(Vec::is_empty) {
        return Err(OmpnError::validation("fixing", "a customer has no admissible facility"));
    }
    let lows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            options[i]
                .iter()
                .map(|&s| service_bounds(instance, bounds, i, open[s]).0)
                .collect()
        })
        .collect();

    let centers = Placement::centers(instance, &open).flat();
    let mut digits = vec![0usize; n];
    let mut slots: Vec<usize> = (0..n).map(|i| options[i][0]).collect();
    let mut low = vec![0.0; n];
    let mut best: Option<AllocSolution> = None;
    let mut best_total = cutoff;
    let mut all_converged = true;
    let mut evaluated = 0usize;
    loop {
        for i in 0..n {
            low[i] = lows[i][digits[i]];
        }
        let bound = om_unchecked(weights, &low) + setup;
        if bound < best_total - 1e-12 {
            let fs = locate(instance, &open, &slots, &centers, params);
            all_converged &= fs.converged;
            evaluated += 1;
            let flat = fs.placement.flat();
            let fixed = build_solution(instance, &open, &slots, &flat, 0, true);
            let closest = build_solution(instance, &open, &closest_slots(instance, &open, &flat), &flat, 0, true);
            let cand = if closest.total < fixed.total { closest } else { fixed };
            if cand.total < best_total {
                best_total = cand.total;
                best = Some(cand);
            }
        }
        // odometer over admissible slots, last customer fastest
        let mut i = n;
        loop {
            if i == 0 {
                let _ = evaluated;
                return Ok(best.map(|mut b| {
                    b.converged = all_converged;
                    b
                }));
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < options[i].len() {
                slots[i] = options[i][digits[i]];
                break;
            }
            digits[i] = 0;
            slots[i] = options[i][0];
        }
    }
}

/// Assignment fixings implied by the distance bounds alone.
pub fn fix_assignments(open: &[usize], instance: &Instance, bounds: &BoundsMatrix) -> Result<FixingTable> {
    let open = normalize_open(instance, open)?;
    let n = instance.n();
    let p = open.len();
    let mut status = vec![FixStatus::Free; n * p];
    for i in 0..n {
        let row = &mut status[i * p..(i + 1) * p];
        if let Some(own) = open.iter().position(|&j| j == i) {
            row.iter_mut().for_each(|s| *s = FixStatus::ForcedZero);
            row[own] = FixStatus::ForcedOne;
            continue;
        }
        let b: Vec<(f64, f64)> = open.iter().map(|&j| service_bounds(instance, bounds, i, j)).collect();
        for s in 0..p {
            if (0..p).any(|k| k != s && b[k].1 < b[s].0) {
                row[s] = FixStatus::ForcedZero;
            }
        }
        let forced_one = (0..p).find(|&s| {
            let others = (0..p).filter(|&k| k != s).map(|k| b[k].0).fold(f64::INFINITY, f64::min);
            others > b[s].1
        });
        let survivors: Vec<usize> = (0..p).filter(|&s| row[s] == FixStatus::Free).collect();
        let one = forced_one.or(if survivors.len() == 1 { Some(survivors[0]) } else { None });
        if let Some(s) = one {
            row.iter_mut().for_each(|x| *x = FixStatus::ForcedZero);
            row[s] = FixStatus::ForcedOne;
        }
    }
    Ok(FixingTable { open, status })
}
