//! Exact search over open sets, the fixed-matrix discrete solver, and the
//! bound-based position table.
//!
//! Open sets are visited in lexicographic order in fixed-size chunks. Every
//! set of a chunk is pruned or evaluated against the incumbent as it stood
//! when the chunk began, and the chunk is reduced in index order, so the
//! outcome does not depend on the thread count.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::alloc::{
    alloc_exact_enum_with, alloc_multistart, assignment_count, fix_assignments, normalize_open, service_bounds, AllocParams,
    AllocSolution,
};
use crate::error::{OmpnError, Result};
use crate::geometry::BoundsMatrix;
use crate::heuristics::{initial_solution, HeuristicParams};
use crate::instance::Instance;
use crate::om::{om_unchecked, om_with, sorted_order_into, LambdaVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Proof {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub subsets_evaluated: u64,
    pub subsets_pruned: u64,
    pub iterations: u64,
    /// Incumbent objective after each accepted improvement.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
    /// Seconds; never part of serialized reports unless asked for.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub open: Vec<usize>,
    pub alloc: AllocSolution,
    pub objective: f64,
    pub proof: Proof,
    pub stats: SolveStats,
}

impl Solution {
    pub(crate) fn from_alloc(alloc: AllocSolution, proof: Proof, stats: SolveStats) -> Self {
        Solution {
            open: alloc.open.clone(),
            objective: alloc.total,
            alloc,
            proof,
            stats,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactParams {
    /// Largest `C(n,p)` accepted.
    pub subset_cap: f64,
    pub alloc: AllocParams,
    /// Skip open sets whose lower bound reaches the incumbent.
    pub prune: bool,
    /// Seed the incumbent with the bound-blend heuristic start.
    pub seed_incumbent: bool,
    /// Open sets per synchronized chunk.
    pub chunk: usize,
}

impl Default for ExactParams {
    fn default() -> Self {
        ExactParams {
            subset_cap: 1e7,
            alloc: AllocParams::default(),
            prune: true,
            seed_incumbent: true,
            chunk: 64,
        }
    }
}

/// `C(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Advances `c` to the next `k`-subset of `0..n` in lexicographic order.
pub(crate) fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for t in i + 1..k {
                c[t] = c[t - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn per_customer(instance: &Instance, bounds: &BoundsMatrix, open: &[usize], pick: impl Fn((f64, f64)) -> f64) -> Vec<f64> {
    (0..instance.n())
        .map(|i| {
            if open.contains(&i) {
                pick(service_bounds(instance, bounds, i, i))
            } else {
                open.iter()
                    .map(|&j| pick(service_bounds(instance, bounds, i, j)))
                    .fold(f64::INFINITY, f64::min)
            }
        })
        .collect()
}

/// Ordered median of the per-customer smallest lower bounds, plus set-up.
pub fn lower_bound_j(open: &[usize], instance: &Instance, bounds: &BoundsMatrix) -> f64 {
    let low = per_customer(instance, bounds, open, |b| b.0);
    om_unchecked(instance.lambda().weights(), &low) + open.iter().map(|&j| instance.setup_cost(j)).sum::<f64>()
}

/// Ordered median of the per-customer smallest upper bounds, plus set-up;
/// the cost of any placement with closest assignment is at most this.
pub fn upper_bound_j(open: &[usize], instance: &Instance, bounds: &BoundsMatrix) -> f64 {
    let high = per_customer(instance, bounds, open, |b| b.1);
    om_unchecked(instance.lambda().weights(), &high) + open.iter().map(|&j| instance.setup_cost(j)).sum::<f64>()
}

enum Outcome {
    Pruned,
    Beaten,
    Solved(AllocSolution),
}

/// Best open set by exhaustive enumeration with lower-bound pruning.
///
/// Each surviving set is costed exactly when `p^(n−p)` fits the assignment
/// cap and by multistart otherwise; the proof is `Exact` only in the former
/// case.
pub fn solve_exact(instance: &Instance, params: &ExactParams) -> Result<Solution> {
    let started = std::time::Instant::now();
    let n = instance.n();
    let p = instance.p();
    let subsets = binomial(n, p);
    if subsets > params.subset_cap {
        return Err(OmpnError::CapExceeded {
            what: "open sets",
            count: subsets,
            cap: params.subset_cap,
        });
    }
    let bounds = BoundsMatrix::compute(instance);
    let exact_alloc = assignment_count(instance, p) <= params.alloc.enum_cap;
    let mut stats = SolveStats::default();

    let mut best: Option<AllocSolution> = None;
    if params.seed_incumbent {
        let hp = HeuristicParams {
            alloc: params.alloc.clone(),
            ..HeuristicParams::default()
        };
        best = Some(initial_solution(instance, &hp)?.alloc);
    }

    let mut comb: Vec<usize> = (0..p).collect();
    let mut exhausted = false;
    let chunk_len = params.chunk.max(1);
    while !exhausted {
        let mut chunk = Vec::with_capacity(chunk_len);
        while chunk.len() < chunk_len {
            chunk.push(comb.clone());
            if !next_combination(&mut comb, n) {
                exhausted = true;
                break;
            }
        }
        let ub = best.as_ref().map_or(f64::INFINITY, |b| b.total);
        let outcomes: Vec<Result<Outcome>> = chunk
            .par_iter()
            .map(|open| {
                let cutoff = if params.prune { ub } else { f64::INFINITY };
                if params.prune && lower_bound_j(open, instance, &bounds) >= ub - 1e-12 {
                    return Ok(Outcome::Pruned);
                }
                if exact_alloc {
                    let fixing = fix_assignments(open, instance, &bounds)?;
                    Ok(
                        match alloc_exact_enum_with(open, instance, &params.alloc, &bounds, Some(&fixing), cutoff)? {
                            Some(s) => Outcome::Solved(s),
                            None => Outcome::Beaten,
                        },
                    )
                } else {
                    alloc_multistart(open, instance, &params.alloc).map(Outcome::Solved)
                }
            })
            .collect();
        for outcome in outcomes {
            match outcome? {
                Outcome::Pruned => stats.subsets_pruned += 1,
                Outcome::Beaten => stats.subsets_evaluated += 1,
                Outcome::Solved(s) => {
                    stats.subsets_evaluated += 1;
                    if best.as_ref().is_none_or(|b| s.total < b.total) {
                        best = Some(s);
                    }
                }
            }
        }
    }
    stats.wall_time = started.elapsed().as_secs_f64();
    let proof = if exact_alloc { Proof::Exact } else { Proof::Heuristic };
    Ok(Solution::from_alloc(best.expect("at least one open set"), proof, stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DompMode {
    ExactEnum,
    SwapHeuristic,
}

/// Fixed-cost discrete problem: `cost[i*n + j]` is the price of serving `i`
/// from `j`, open sites pay their diagonal entry.
#[derive(Debug, Clone)]
pub struct DompProblem<'a> {
    pub n: usize,
    pub cost: &'a [f64],
    pub lambda: &'a LambdaVector,
    pub p: usize,
    pub setup: &'a [f64],
    /// Sites that may not open.
    pub forbidden: &'a [usize],
}

impl DompProblem<'_> {
    /// Ordered median of closest costs plus set-up, for a sorted open set.
    pub fn score(&self, open: &[usize]) -> f64 {
        let d = self.closest_costs(open);
        om_unchecked(self.lambda.weights(), &d) + open.iter().map(|&j| self.setup[j]).sum::<f64>()
    }

    fn closest_costs(&self, open: &[usize]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                if open.binary_search(&i).is_ok() {
                    self.cost[i * n + i]
                } else {
                    open.iter().map(|&j| self.cost[i * n + j]).fold(f64::INFINITY, f64::min)
                }
            })
            .collect()
    }

    /// Score, then the nonincreasing cost vector; orders open sets of equal
    /// score so local search can leave plateaus.
    fn key(&self, open: &[usize]) -> (f64, Vec<f64>) {
        let mut d = self.closest_costs(open);
        let score = om_unchecked(self.lambda.weights(), &d) + open.iter().map(|&j| self.setup[j]).sum::<f64>();
        d.sort_unstable_by(|a, b| b.total_cmp(a));
        (score, d)
    }

    fn validate(&self) -> Result<()> {
        if self.cost.len() != self.n * self.n {
            return Err(OmpnError::DimensionMismatch {
                expected: self.n * self.n,
                got: self.cost.len(),
            });
        }
        if self.lambda.len() != self.n || self.setup.len() != self.n {
            return Err(OmpnError::DimensionMismatch {
                expected: self.n,
                got: self.lambda.len().min(self.setup.len()),
            });
        }
        if let Some(k) = self.cost.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(OmpnError::validation(format!("cost[{k}]"), "must be finite and nonnegative"));
        }
        let allowed = self.n - self.forbidden.iter().filter(|&&f| f < self.n).count();
        if self.p == 0 || self.p > allowed {
            return Err(OmpnError::validation("p", format!("{} is not in 1..={allowed}", self.p)));
        }
        Ok(())
    }
}

/// Best open set of the discrete problem: full enumeration or a greedy start
/// improved by first-improvement swaps.
pub fn solve_domp_matrix(problem: &DompProblem<'_>, mode: DompMode, cap: f64) -> Result<(Vec<usize>, f64)> {
    problem.validate()?;
    let n = problem.n;
    let allowed: Vec<usize> = (0..n).filter(|j| !problem.forbidden.contains(j)).collect();
    match mode {
        DompMode::ExactEnum => {
            let count = binomial(allowed.len(), problem.p);
            if count > cap {
                return Err(OmpnError::CapExceeded {
                    what: "open sets",
                    count,
                    cap,
                });
            }
            Ok(enumerate_domp(problem, &allowed))
        }
        DompMode::SwapHeuristic => Ok(swap_domp(problem, &allowed)),
    }
}

/// Greedy build followed by first-improvement swaps.
fn swap_domp(problem: &DompProblem<'_>, allowed: &[usize]) -> (Vec<usize>, f64) {
    let mut open: Vec<usize> = Vec::with_capacity(problem.p);
    while open.len() < problem.p {
        let (mut pick, mut pick_score) = (usize::MAX, f64::INFINITY);
        for &c in allowed {
            if open.contains(&c) {
                continue;
            }
            let mut trial = open.clone();
            trial.push(c);
            trial.sort_unstable();
            let s = problem.score(&trial);
            if s < pick_score {
                pick_score = s;
                pick = c;
            }
        }
        open.push(pick);
        open.sort_unstable();
    }
    let mut key = problem.key(&open);
    'sweep: loop {
        for out_pos in 0..open.len() {
            for &c in allowed {
                if open.binary_search(&c).is_ok() {
                    continue;
                }
                let mut trial = open.clone();
                trial[out_pos] = c;
                trial.sort_unstable();
                let cand = problem.key(&trial);
                if improves(&cand, &key) {
                    open = trial;
                    key = cand;
                    continue 'sweep;
                }
            }
        }
        break;
    }
    (open, key.0)
}

/// Depth-first walk over open sets in lexicographic order, one parallel task
/// per first site. A branch is cut when the ordered median of per-customer
/// cheapest still-reachable costs plus the set-up spent so far exceeds the
/// shared incumbent (seeded by the swap heuristic) or reaches the branch's
/// own best. Ties are never cut across branches, so the result equals the
/// first minimizer of a full enumeration.
fn enumerate_domp(problem: &DompProblem<'_>, allowed: &[usize]) -> (Vec<usize>, f64) {
    let n = problem.n;
    let m = allowed.len();
    let mut suffix = vec![f64::INFINITY; (m + 1) * n];
    for k in (0..m).rev() {
        let j = allowed[k];
        for i in 0..n {
            let c = if i == j { f64::INFINITY } else { problem.cost[i * n + j] };
            suffix[k * n + i] = suffix[(k + 1) * n + i].min(c);
        }
    }
    let mut diag_min = vec![f64::INFINITY; m + 1];
    let mut later = vec![usize::MAX; n];
    for k in (0..m).rev() {
        let j = allowed[k];
        diag_min[k] = diag_min[k + 1].min(problem.cost[j * n + j]);
        later[j] = k;
    }
    // `cheapest[k*(p+1) + r]`: smallest total set-up of `r` sites in `allowed[k..]`.
    let p = problem.p;
    let mut cheapest = vec![f64::INFINITY; (m + 1) * (p + 1)];
    for k in 0..=m {
        let mut tail: Vec<f64> = allowed[k..].iter().map(|&j| problem.setup[j]).collect();
        tail.sort_unstable_by(f64::total_cmp);
        let mut acc = 0.0;
        cheapest[k * (p + 1)] = 0.0;
        for (r, f) in tail.iter().take(p).enumerate() {
            acc += f;
            cheapest[k * (p + 1) + r + 1] = acc;
        }
    }
    let seed = swap_domp(problem, allowed);
    // Non-negative floats order like their bit patterns.
    let shared = AtomicU64::new(seed.1.max(0.0).to_bits());
    let branches: Vec<(Vec<usize>, f64)> = (0..=m - problem.p)
        .into_par_iter()
        .map(|k| {
            let mut walk = DompWalk {
                problem,
                allowed,
                suffix: &suffix,
                diag_min: &diag_min,
                position: &later,
                eligible: Vec::with_capacity(n),
                cheapest: &cheapest,
                shared: &shared,
                stack: vec![vec![f64::INFINITY; n]; problem.p + 1],
                in_set: vec![false; n],
                chosen: Vec::with_capacity(problem.p),
                bound: vec![0.0; n],
                perm: Vec::with_capacity(n),
                best: f64::INFINITY,
                best_set: Vec::new(),
            };
            walk.visit(0, k, k, 0.0);
            (walk.best_set, walk.best)
        })
        .collect();
    let mut out = seed;
    let mut found: Option<(Vec<usize>, f64)> = None;
    for (set, value) in branches {
        if !set.is_empty() && found.as_ref().is_none_or(|f| value < f.1) {
            found = Some((set, value));
        }
    }
    if let Some(f) = found {
        if f.1 <= out.1 {
            out = f;
        }
    }
    out.1 = problem.score(&out.0);
    out
}

struct DompWalk<'p, 'a> {
    problem: &'p DompProblem<'a>,
    allowed: &'p [usize],
    /// `suffix[k*n + i]`: cheapest cost of `i` over `allowed[k..]` minus `i`.
    suffix: &'p [f64],
    /// Smallest self-service cost over `allowed[k..]`.
    diag_min: &'p [f64],
    /// Slot of each site in `allowed`, `usize::MAX` if forbidden.
    position: &'p [usize],
    eligible: Vec<usize>,
    cheapest: &'p [f64],
    shared: &'p AtomicU64,
    /// `stack[d][i]`: cost of `i` under the first `d` chosen sites.
    stack: Vec<Vec<f64>>,
    in_set: Vec<bool>,
    chosen: Vec<usize>,
    bound: Vec<f64>,
    perm: Vec<usize>,
    best: f64,
    best_set: Vec<usize>,
}

impl DompWalk<'_, '_> {
    /// Completes the set with each candidate in `allowed[from..=to]`. The
    /// parent's order is reused: untouched customers stay sorted, the few
    /// that move closer are sorted apart and merged in, and the weighted sum
    /// stops once it cannot beat the incumbent.
    fn last_site(&mut self, from: usize, to: usize, setup: f64) {
        let prob = self.problem;
        let n = prob.n;
        let weights = prob.lambda.weights();
        let depth = prob.p - 1;
        let parent = &self.stack[depth];
        sorted_order_into(parent, &mut self.perm);
        let mut moved: Vec<f64> = Vec::with_capacity(n);
        let mut is_moved = vec![false; n];
        for k in from..=to {
            let j = self.allowed[k];
            moved.clear();
            for i in 0..n {
                let c = if self.in_set[i] {
                    continue;
                } else if i == j {
                    prob.cost[j * n + j]
                } else {
                    let c = prob.cost[i * n + j];
                    if c >= parent[i] {
                        continue;
                    }
                    c
                };
                is_moved[i] = true;
                moved.push(c);
            }
            moved.sort_unstable_by(|a, b| b.total_cmp(a));
            let spent = setup + prob.setup[j];
            let limit = self.best.min(f64::from_bits(self.shared.load(Ordering::Relaxed)));
            let strict = self.best;
            let mut om = 0.0;
            let mut value = spent;
            let (mut a, mut b) = (0, 0);
            let mut cut = false;
            for &w in weights {
                while a < n && is_moved[self.perm[a]] {
                    a += 1;
                }
                let take_moved = b < moved.len() && (a == n || moved[b] > parent[self.perm[a]]);
                let d = if take_moved {
                    b += 1;
                    moved[b - 1]
                } else {
                    a += 1;
                    parent[self.perm[a - 1]]
                };
                om += w * d;
                value = om + spent;
                if value >= strict || value > limit {
                    cut = true;
                    break;
                }
            }
            for i in 0..n {
                is_moved[i] = false;
            }
            if !cut {
                self.best = value;
                self.best_set = self.chosen.clone();
                self.best_set.push(j);
                self.shared.fetch_min(value.max(0.0).to_bits(), Ordering::Relaxed);
            }
        }
    }

    fn visit(&mut self, depth: usize, from: usize, to: usize, setup: f64) {
        let prob = self.problem;
        let (n, p) = (prob.n, prob.p);
        let weights = prob.lambda.weights();
        if depth + 1 == p {
            self.last_site(from, to, setup);
            return;
        }
        for k in from..=to {
            let j = self.allowed[k];
            {
                let (lo, hi) = self.stack.split_at_mut(depth + 1);
                let (parent, child) = (&lo[depth], &mut hi[0]);
                for i in 0..n {
                    child[i] = if self.in_set[i] {
                        parent[i]
                    } else if i == j {
                        prob.cost[j * n + j]
                    } else {
                        parent[i].min(prob.cost[i * n + j])
                    };
                }
            }
            let spent = setup + prob.setup[j];
            self.in_set[j] = true;
            if depth + 1 < p {
                let child = &self.stack[depth + 1];
                let reach = &self.suffix[(k + 1) * n..(k + 2) * n];
                self.eligible.clear();
                for i in 0..n {
                    self.bound[i] = if self.in_set[i] { child[i] } else { child[i].min(reach[i]) };
                    if self.position[i] != usize::MAX && self.position[i] > k {
                        self.eligible.push(i);
                    }
                }
                // At most `left` more customers can switch to self-service;
                // lowering the largest eligible entries is the weakest case.
                let left = p - depth - 1;
                let floor = self.diag_min[k + 1];
                let bound = &mut self.bound;
                if self.eligible.len() > left {
                    self.eligible
                        .select_nth_unstable_by(left, |&a, &b| bound[b].total_cmp(&bound[a]));
                }
                for &i in self.eligible.iter().take(left) {
                    bound[i] = bound[i].min(floor);
                }
                let rest = self.cheapest[(k + 1) * (p + 1) + p - depth - 1];
                let lb = om_with(weights, &self.bound, &mut self.perm) + spent + rest;
                if lb >= self.best || lb > f64::from_bits(self.shared.load(Ordering::Relaxed)) {
                    self.in_set[j] = false;
                    continue;
                }
            }
            self.chosen.push(j);
            let last = self.allowed.len() - (p - depth - 1);
            self.visit(depth + 1, k + 1, last, spent);
            self.chosen.pop();
            self.in_set[j] = false;
        }
    }
}

/// Strictly better score, or an equal score with a lexicographically smaller
/// sorted cost vector.
fn improves(cand: &(f64, Vec<f64>), cur: &(f64, Vec<f64>)) -> bool {
    let tol = 1e-12 * (1.0 + cur.0.abs());
    if cand.0 < cur.0 - tol {
        return true;
    }
    if cand.0 > cur.0 + tol {
        return false;
    }
    for (a, b) in cand.1.iter().zip(&cur.1) {
        if a < &(b - 1e-12 * (1.0 + b.abs())) {
            return true;
        }
        if a > &(b + 1e-12 * (1.0 + b.abs())) {
            return false;
        }
    }
    false
}

/// For each customer, the first sorted position (one-based) it cannot hold
/// while served by another site, given any solution of cost at most `ub`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionTable {
    pub first_excluded: Vec<Option<usize>>,
    /// Customers whose bound already exceeds `ub / λ₁`: any solution within
    /// `ub` must open them, or `ub` is below the optimum.
    pub flagged: Vec<usize>,
}

impl PositionTable {
    pub fn eliminated(&self) -> usize {
        self.first_excluded.iter().flatten().count()
    }
}

/// If `min_{j≠i} d̂_ij · Σ_{l≤m} λ_l > ub` then a customer served by another
/// site sits strictly above position `m`.
pub fn position_elimination(instance: &Instance, bounds: &BoundsMatrix, ub: f64) -> PositionTable {
    let n = instance.n();
    let lambda = instance.lambda();
    let mut first_excluded = vec![None; n];
    let mut flagged = Vec::new();
    if !ub.is_finite() {
        return PositionTable { first_excluded, flagged };
    }
    for (i, slot) in first_excluded.iter_mut().enumerate() {
        let nearest = (0..n)
            .filter(|&j| j != i)
            .map(|j| bounds.dhat(i, j))
            .fold(f64::INFINITY, f64::min);
        let m = (1..=n).find(|&m| {
            let s = lambda.prefix_sum(m);
            s > 0.0 && nearest * s > ub
        });
        if m == Some(1) {
            flagged.push(i);
        }
        *slot = m;
    }
    PositionTable { first_excluded, flagged }
}

/// Checks `open` against the instance and returns its sorted copy.
pub fn checked_open_set(instance: &Instance, open: &[usize]) -> Result<Vec<usize>> {
    let out = normalize_open(instance, open)?;
    if out.len() != instance.p() {
        return Err(OmpnError::validation(
            "open set",
            format!("has {} sites, expected p = {}", out.len(), instance.p()),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NormSpec;
    use crate::instance::{example_3_5, LambdaSpec};
    use crate::om::{make_lambda, LambdaPreset};

    fn pts(points: &[[f64; 2]], radii: &[f64], p: usize, preset: LambdaPreset) -> Instance {
        Instance::new(
            "t",
            points.iter().map(|q| q.to_vec()).collect(),
            radii.to_vec(),
            NormSpec::L2,
            NormSpec::L2,
            vec![0.0; points.len()],
            p,
            LambdaSpec::Preset(preset),
            None,
        )
        .unwrap()
    }

    #[test]
    fn combinations_in_order() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while next_combination(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(binomial(49, 2), 1176.0);
        assert_eq!(binomial(5, 0), 1.0);
    }

    #[test]
    fn domp_three_points() {
        let inst = pts(&[[0.0, 0.0], [10.0, 0.0], [5.0, 5.0]], &[0.0; 3], 2, LambdaPreset::Median);
        let cost = inst.center_distances();
        let lambda = make_lambda(LambdaPreset::Median, 3).unwrap();
        let setup = [0.0; 3];
        let prob = DompProblem {
            n: 3,
            cost: &cost,
            lambda: &lambda,
            p: 2,
            setup: &setup,
            forbidden: &[],
        };
        for mode in [DompMode::ExactEnum, DompMode::SwapHeuristic] {
            let (_, v) = solve_domp_matrix(&prob, mode, 1e6).unwrap();
            assert!((v - 50f64.sqrt()).abs() < 1e-12);
        }
        let center = make_lambda(LambdaPreset::Center, 3).unwrap();
        let one = DompProblem {
            p: 1,
            lambda: &center,
            ..prob.clone()
        };
        let (j, v) = solve_domp_matrix(&one, DompMode::ExactEnum, 1e6).unwrap();
        assert_eq!(j, vec![2]);
        assert!((v - 50f64.sqrt()).abs() < 1e-12);
        let forbid = DompProblem {
            forbidden: &[2],
            ..one.clone()
        };
        let (j, v) = solve_domp_matrix(&forbid, DompMode::ExactEnum, 1e6).unwrap();
        assert_eq!((j, v), (vec![0], 10.0));
        assert!(matches!(
            solve_domp_matrix(&prob, DompMode::ExactEnum, 2.0),
            Err(OmpnError::CapExceeded { .. })
        ));
    }

    #[test]
    fn pruned_search_matches_brute_force() {
        use crate::rng::{rng_from_seed, uniform};
        let mut rng = rng_from_seed(11);
        let n = 9;
        for trial in 0..60 {
            let mut cost: Vec<f64> = (0..n * n).map(|_| uniform(&mut rng, 0.0, 10.0).round()).collect();
            for i in 0..n {
                cost[i * n + i] = if trial % 2 == 0 { 0.0 } else { uniform(&mut rng, 0.0, 3.0) };
            }
            let setup: Vec<f64> = (0..n)
                .map(|_| if trial % 3 == 0 { 0.0 } else { uniform(&mut rng, 0.0, 4.0) })
                .collect();
            let mut weights: Vec<f64> = (0..n).map(|_| uniform(&mut rng, 0.0, 1.0).round()).collect();
            weights[0] = 1.0;
            weights.sort_unstable_by(|a, b| b.total_cmp(a));
            let lambda = LambdaVector::new(weights).unwrap();
            let forbidden: Vec<usize> = if trial % 4 == 1 { vec![trial % n] } else { vec![] };
            let p = 1 + trial % 4;
            let prob = DompProblem {
                n,
                cost: &cost,
                lambda: &lambda,
                p,
                setup: &setup,
                forbidden: &forbidden,
            };
            let allowed: Vec<usize> = (0..n).filter(|j| !forbidden.contains(j)).collect();
            let mut idx: Vec<usize> = (0..p).collect();
            let mut best: (Vec<usize>, f64) = (vec![], f64::INFINITY);
            loop {
                let open: Vec<usize> = idx.iter().map(|&k| allowed[k]).collect();
                let v = prob.score(&open);
                if v < best.1 {
                    best = (open, v);
                }
                if !next_combination(&mut idx, allowed.len()) {
                    break;
                }
            }
            assert_eq!(
                solve_domp_matrix(&prob, DompMode::ExactEnum, 1e6).unwrap(),
                best,
                "trial {trial}"
            );
        }
    }

    #[test]
    fn domp_p_equals_n_minus_one() {
        let inst = pts(
            &[[0.0, 0.0], [1.0, 0.0], [5.0, 0.0], [5.0, 3.0]],
            &[0.0; 4],
            3,
            LambdaPreset::Median,
        );
        let cost = inst.center_distances();
        let lambda = inst.lambda().clone();
        let setup = [0.0; 4];
        let prob = DompProblem {
            n: 4,
            cost: &cost,
            lambda: &lambda,
            p: 3,
            setup: &setup,
            forbidden: &[],
        };
        let (_, v) = solve_domp_matrix(&prob, DompMode::ExactEnum, 1e6).unwrap();
        let expected = (0..4)
            .map(|i| {
                (0..4)
                    .filter(|&j| j != i)
                    .map(|j| cost[i * 4 + j])
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(v, expected);
    }

    #[test]
    fn lower_bound_examples() {
        let inst = pts(&[[0.0, 0.0], [10.0, 0.0], [5.0, 5.0]], &[0.0; 3], 2, LambdaPreset::Median);
        let b = BoundsMatrix::compute(&inst);
        assert_eq!(lower_bound_j(&[0, 1], &inst, &b), 50f64.sqrt());
        let far = Instance::new(
            "far",
            vec![vec![0.0, 0.0], vec![100.0, 0.0], vec![1.0, 0.0]],
            vec![0.5, 2.0, 0.5],
            NormSpec::L2,
            NormSpec::L2,
            vec![0.0, 3.0, 0.0],
            1,
            LambdaSpec::Preset(LambdaPreset::Center),
            None,
        )
        .unwrap();
        let b = BoundsMatrix::compute(&far);
        assert_eq!(lower_bound_j(&[1], &far, &b), (100.0 - 2.0) + 3.0);
    }

    #[test]
    fn example_3_5_optimum() {
        let s = solve_exact(&example_3_5(), &ExactParams::default()).unwrap();
        assert!((s.objective - 68.4751).abs() / 68.4751 < 1e-2, "{}", s.objective);
        assert_eq!(s.proof, Proof::Exact);
    }

    #[test]
    fn degenerate_matches_domp() {
        let inst = crate::instance::generate_random(
            7,
            2,
            crate::instance::ScenarioSpec::new(1).unwrap(),
            2,
            LambdaPreset::Centdian { alpha: 0.5 },
            3,
        )
        .unwrap()
        .degenerate();
        let s = solve_exact(&inst, &ExactParams::default()).unwrap();
        let cost = inst.center_distances();
        let prob = DompProblem {
            n: 7,
            cost: &cost,
            lambda: inst.lambda(),
            p: 2,
            setup: inst.setup_costs(),
            forbidden: &[],
        };
        let (_, v) = solve_domp_matrix(&prob, DompMode::ExactEnum, 1e6).unwrap();
        assert!((s.objective - v).abs() <= 1e-12);
    }

    #[test]
    fn position_table_examples() {
        let inst = pts(
            &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [50.0, 50.0]],
            &[0.0; 4],
            2,
            LambdaPreset::Median,
        );
        let b = BoundsMatrix::compute(&inst);
        let none = position_elimination(&inst, &b, 1e9);
        assert_eq!(none.eliminated(), 0);
        // remote site: nearest bound ≈ 69.3, so 2·69.3 > 100 while 69.3 < 100
        let t = position_elimination(&inst, &b, 100.0);
        assert_eq!(t.first_excluded[3], Some(2));
        assert!(t.flagged.is_empty());
        let flagged = position_elimination(&inst, &b, 50.0);
        assert_eq!(flagged.flagged, vec![3]);
    }
}
