//! Local-search heuristics over open sets.
//!
//! * `initial_solution`: discrete solve on a blend of the distance bounds,
//!   then the open set is costed.
//! * `heuristic1`: swap one open facility at a time for its best closed
//!   replacement, accepting the first improving swap of each sweep.
//! * `heuristic2`: alternate a discrete solve at the current facility
//!   positions with a relocation of the chosen set, then repeat with each
//!   first-phase facility forbidden.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::alloc::{alloc_multistart, alloc_multistart_from, service_distance, AllocParams, AllocSolution, Placement};
use crate::error::{OmpnError, Result};
use crate::exact::{binomial, lower_bound_j, solve_domp_matrix, DompMode, DompProblem, Proof, Solution, SolveStats};
use crate::geometry::BoundsMatrix;
use crate::instance::{Instance, SelfService};
use crate::rng::{index_below, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicParams {
    /// Sweep budget of `heuristic1`.
    pub it_max: usize,
    /// Consecutive sweeps without improvement before `heuristic1` stops.
    pub no_improve_max: usize,
    /// Pick one random open facility per sweep instead of all of them.
    pub randomized: bool,
    /// Weight of the lower bound in the starting cost matrix.
    pub theta: f64,
    /// Stabilization tolerance of `heuristic2`.
    pub eps: f64,
    /// Alternation budget per `heuristic2` phase.
    pub max_alternations: usize,
    /// Largest `C(n,p)` solved by full enumeration in the discrete steps.
    pub domp_cap: f64,
    /// Multistart count and seed live here.
    pub alloc: AllocParams,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            it_max: 50,
            no_improve_max: 2,
            randomized: false,
            theta: 0.5,
            eps: 1e-6,
            max_alternations: 50,
            domp_cap: 1e7,
            alloc: AllocParams::default(),
        }
    }
}

impl HeuristicParams {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(OmpnError::OutOfRange {
                name: "theta",
                detail: format!("{} is not in [0, 1]", self.theta),
            });
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(OmpnError::OutOfRange {
                name: "eps",
                detail: format!("{} is not positive", self.eps),
            });
        }
        Ok(())
    }

    fn domp_mode(&self, n: usize, p: usize) -> DompMode {
        if binomial(n, p) <= self.domp_cap {
            DompMode::ExactEnum
        } else {
            DompMode::SwapHeuristic
        }
    }
}

fn solve_domp(instance: &Instance, cost: &[f64], forbidden: &[usize], params: &HeuristicParams) -> Result<(Vec<usize>, f64)> {
    let problem = DompProblem {
        n: instance.n(),
        cost,
        lambda: instance.lambda(),
        p: instance.p(),
        setup: instance.setup_costs(),
        forbidden,
    };
    let allowed = instance.n() - forbidden.len();
    solve_domp_matrix(&problem, params.domp_mode(allowed, instance.p()), params.domp_cap)
}

/// Discrete solve on `θ·d̂ + (1−θ)·D̂`, then the chosen set is costed.
pub fn initial_solution(instance: &Instance, params: &HeuristicParams) -> Result<Solution> {
    params.validate()?;
    let bounds = BoundsMatrix::compute(instance);
    let n = instance.n();
    let mut cost = bounds.blend(params.theta);
    if instance.self_service() == SelfService::Zero {
        for j in 0..n {
            cost[j * n + j] = 0.0;
        }
    }
    let (open, _) = solve_domp(instance, &cost, &[], params)?;
    let alloc = alloc_multistart(&open, instance, &params.alloc)?;
    let stats = SolveStats {
        subsets_evaluated: 1,
        trace: vec![alloc.total],
        ..SolveStats::default()
    };
    Ok(Solution::from_alloc(alloc, Proof::Heuristic, stats))
}

/// Costs of open sets already seen; values depend only on the set.
struct CostCache<'a> {
    instance: &'a Instance,
    params: &'a AllocParams,
    bounds: BoundsMatrix,
    seen: HashMap<Vec<usize>, AllocSolution>,
    evaluated: u64,
    pruned: u64,
}

impl<'a> CostCache<'a> {
    fn new(instance: &'a Instance, params: &'a AllocParams) -> Self {
        CostCache {
            instance,
            params,
            bounds: BoundsMatrix::compute(instance),
            seen: HashMap::new(),
            evaluated: 0,
            pruned: 0,
        }
    }

    /// Costs every candidate in parallel; candidates whose lower bound
    /// reaches `ub` come back as `None`.
    fn costs(&mut self, candidates: &[Vec<usize>], ub: f64) -> Result<Vec<Option<AllocSolution>>> {
        let fresh: Vec<&Vec<usize>> = candidates
            .iter()
            .filter(|c| !self.seen.contains_key(*c))
            .filter(|c| lower_bound_j(c, self.instance, &self.bounds) < ub - 1e-12)
            .collect();
        let solved: Vec<Result<AllocSolution>> = fresh
            .par_iter()
            .map(|c| alloc_multistart(c, self.instance, self.params))
            .collect();
        for (c, s) in fresh.into_iter().zip(solved) {
            self.seen.insert(c.clone(), s?);
            self.evaluated += 1;
        }
        Ok(candidates
            .iter()
            .map(|c| {
                let hit = self.seen.get(c).cloned();
                if hit.is_none() {
                    self.pruned += 1;
                }
                hit
            })
            .collect())
    }
}

/// Best swap of `j0` for a closed site; `current` when none beats it.
pub fn best_replacement(
    current: &AllocSolution,
    j0: usize,
    instance: &Instance,
    params: &HeuristicParams,
) -> Result<AllocSolution> {
    let mut cache = CostCache::new(instance, &params.alloc);
    best_replacement_cached(current, j0, &mut cache)
}

fn best_replacement_cached(current: &AllocSolution, j0: usize, cache: &mut CostCache<'_>) -> Result<AllocSolution> {
    if !current.open.contains(&j0) {
        return Err(OmpnError::validation("j0", format!("{j0} is not open")));
    }
    let candidates: Vec<Vec<usize>> = (0..cache.instance.n())
        .filter(|i| !current.open.contains(i))
        .map(|i| {
            let mut c: Vec<usize> = current.open.iter().copied().filter(|&j| j != j0).collect();
            c.push(i);
            c.sort_unstable();
            c
        })
        .collect();
    let costs = cache.costs(&candidates, current.total)?;
    let mut best = current.clone();
    for s in costs.into_iter().flatten() {
        if s.total < best.total {
            best = s;
        }
    }
    Ok(best)
}

/// Swap-based local search from `initial_solution`.
pub fn heuristic1(instance: &Instance, params: &HeuristicParams) -> Result<Solution> {
    let start = initial_solution(instance, params)?;
    heuristic1_from(instance, params, start)
}

/// Swap-based local search from a given solution.
pub fn heuristic1_from(instance: &Instance, params: &HeuristicParams, start: Solution) -> Result<Solution> {
    params.validate()?;
    let mut cache = CostCache::new(instance, &params.alloc);
    let mut incumbent = start.alloc;
    let mut trace = vec![incumbent.total];
    let mut rng = rng_from_seed(params.alloc.seed);
    let mut no_improve = 0;
    let mut it = 0;
    while it < params.it_max && no_improve < params.no_improve_max {
        it += 1;
        let order: Vec<usize> = if params.randomized {
            vec![incumbent.open[index_below(&mut rng, incumbent.open.len())]]
        } else {
            incumbent.open.clone()
        };
        let mut improved = false;
        for j0 in order {
            let cand = best_replacement_cached(&incumbent, j0, &mut cache)?;
            if cand.total < incumbent.total {
                incumbent = cand;
                trace.push(incumbent.total);
                improved = true;
                break;
            }
        }
        if improved {
            no_improve = 0;
        } else {
            no_improve += 1;
            if !params.randomized {
                // a deterministic sweep without improvement repeats verbatim
                break;
            }
        }
    }
    let stats = SolveStats {
        subsets_evaluated: cache.evaluated + start.stats.subsets_evaluated,
        subsets_pruned: cache.pruned,
        iterations: it as u64,
        trace,
        ..SolveStats::default()
    };
    Ok(Solution::from_alloc(incumbent, Proof::Heuristic, stats))
}

/// Service costs at the current facility positions.
fn position_costs(instance: &Instance, positions: &[Vec<f64>]) -> Vec<f64> {
    let n = instance.n();
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = service_distance(instance, i, j, &positions[j]);
        }
    }
    cost
}

struct Phase {
    best: AllocSolution,
    rounds: usize,
}

fn alternate(instance: &Instance, params: &HeuristicParams, forbidden: &[usize], trace: &mut Vec<f64>) -> Result<Phase> {
    let mut positions: Vec<Vec<f64>> = instance.points().to_vec();
    let mut best: Option<AllocSolution> = None;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let cost = position_costs(instance, &positions);
        let (open, f1) = solve_domp(instance, &cost, forbidden, params)?;
        let warm = Placement {
            open: open.clone(),
            locations: open.iter().map(|&j| positions[j].clone()).collect(),
        };
        let alloc = alloc_multistart_from(&open, instance, &params.alloc, Some(&warm))?;
        let f2 = alloc.total;
        for (s, &j) in alloc.open.iter().enumerate() {
            positions[j] = alloc.placement.locations[s].clone();
        }
        if best.as_ref().is_none_or(|b| alloc.total < b.total) {
            if trace.last().is_none_or(|&t| alloc.total < t) {
                trace.push(alloc.total);
            }
            best = Some(alloc);
        }
        if (f1 - f2).abs() <= params.eps || rounds >= params.max_alternations {
            break;
        }
    }
    Ok(Phase {
        best: best.expect("one round"),
        rounds,
    })
}

/// Location/allocation alternation, then one restart per first-phase
/// facility with that facility forbidden. The `initial_solution` result is
/// kept as a candidate, so the outcome never exceeds it.
pub fn heuristic2(instance: &Instance, params: &HeuristicParams) -> Result<Solution> {
    params.validate()?;
    let h0 = initial_solution(instance, params)?;
    let mut trace = vec![h0.objective];
    let first = alternate(instance, params, &[], &mut trace)?;
    let phase_open = first.best.open.clone();
    let mut best = if first.best.total < h0.alloc.total {
        first.best
    } else {
        h0.alloc
    };
    let mut rounds = first.rounds;
    let mut phases = 1u64;
    for &j0 in &phase_open {
        let phase = alternate(instance, params, &[j0], &mut Vec::new())?;
        rounds += phase.rounds;
        phases += 1;
        if phase.best.total < best.total {
            best = phase.best;
            trace.push(best.total);
        }
    }
    let stats = SolveStats {
        subsets_evaluated: phases,
        iterations: rounds as u64,
        trace,
        ..SolveStats::default()
    };
    Ok(Solution::from_alloc(best, Proof::Heuristic, stats))
}
