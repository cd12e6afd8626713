//! Formulation builders, bound-based strengthening and solution lifting.
//!
//! Variable names (positions `k` are zero-based, `k = 0` is the largest
//! distance):
//!
//! | name | meaning |
//! |------|---------|
//! | `x_i_j` | customer `i` served by site `j`; `x_j_j` opens `j` |
//! | `abar_j_l` | coordinate `l` of the facility placed for site `j` |
//! | `d_i_j` | distance from customer `i` to the facility of site `j` |
//! | `D_i` | distance paid by customer `i` |
//! | `w_i_j_k`, `theta_i_j_k` | three-index sorting variables and their products with `d_i_j` |
//! | `s_i_k`, `xi_k`, `theta_i_j` | two-index sorting variables |
//! | `t_k`, `z_i_k` | k-sum threshold and excess |
//! | `u_i`, `v_k` | assignment-dual variables |
//!
//! Norm rows `‖y‖ ≤ t` are tagged `dist_i_j` or `ball_j`; auxiliary variables
//! and rows carry the tag as prefix.

use std::collections::HashMap;

use crate::alloc::Placement;
use crate::error::{OmpnError, Result};
use crate::exact::position_elimination;
use crate::geometry::{norm_eval, BoundsMatrix, NormSpec};
use crate::instance::{Instance, SelfService};
use crate::om::{sorted_order, telescoping_weights};

use super::{norm_label, normalize_terms, Affine, Formulation, LinearRow, ModelIR, ModelMeta, Sense, SocRow, VarKind, Variable};

/// Fixing rules driven by an upper bound on the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Strengthening {
    pub upper_bound: f64,
    /// Sorted positions a customer cannot reach when served by another site.
    pub position_rule: bool,
    /// Literal suffix-sum rule on the largest distance bound. It can cut
    /// optimal solutions, so it is off unless asked for.
    pub suffix_rule: bool,
    /// `Σ_k w_j_j_k = x_j_j` in the three-index model.
    pub valid_equations: bool,
}

impl Strengthening {
    pub fn new(upper_bound: f64) -> Self {
        Strengthening {
            upper_bound,
            position_rule: true,
            suffix_rule: false,
            valid_equations: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExportOptions {
    pub strengthen: Option<Strengthening>,
    /// Extreme points of the dual unit ball of a block distance norm; they
    /// replace the instance's distance norm in the block model.
    pub block_dual_points: Option<Vec<Vec<f64>>>,
}

/// Lower and upper bounds on the distance each customer pays per site,
/// matching the distance rows of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBounds {
    n: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl PairBounds {
    pub fn new(instance: &Instance, options: &ExportOptions) -> Result<Self> {
        let n = instance.n();
        let zero_self = instance.self_service() == SelfService::Zero;
        let mut lo = vec![0.0; n * n];
        let mut hi = vec![0.0; n * n];
        match &options.block_dual_points {
            None => {
                let b = BoundsMatrix::compute(instance);
                for i in 0..n {
                    for j in 0..n {
                        if !(zero_self && i == j) {
                            lo[i * n + j] = b.dhat(i, j);
                            hi[i * n + j] = b.dmax(i, j);
                        }
                    }
                }
            }
            Some(points) => {
                check_dual_points(points, instance.dim())?;
                // A ball point x gives e·(a_i − x) = e·(a_i − a_j) + e·(a_j − x)
                // with |e·(a_j − x)| ≤ r_j ‖e‖_* for the dual of the ball norm.
                let reach = points.iter().map(|e| dual_of(instance.ball_norm(), e)).fold(0.0, f64::max);
                for i in 0..n {
                    for j in 0..n {
                        if zero_self && i == j {
                            continue;
                        }
                        let gap: Vec<f64> = instance.point(i).iter().zip(instance.point(j)).map(|(a, b)| a - b).collect();
                        let centre = support(points, &gap);
                        let r = instance.radius(j);
                        lo[i * n + j] = points
                            .iter()
                            .map(|e| dot(e, &gap) - r * dual_of(instance.ball_norm(), e))
                            .fold(0.0, f64::max);
                        hi[i * n + j] = centre + r * reach;
                    }
                }
            }
        }
        Ok(PairBounds { n, lo, hi })
    }

    pub fn lo(&self, i: usize, j: usize) -> f64 {
        self.lo[i * self.n + j]
    }

    /// The big-M of every indicator row on the pair.
    pub fn hi(&self, i: usize, j: usize) -> f64 {
        self.hi[i * self.n + j]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn support(points: &[Vec<f64>], y: &[f64]) -> f64 {
    points.iter().map(|e| dot(e, y)).fold(f64::NEG_INFINITY, f64::max)
}

/// Dual norm of a polyhedral ball norm.
fn dual_of(ball: NormSpec, e: &[f64]) -> f64 {
    if ball == NormSpec::L1 {
        norm_eval(NormSpec::LINF, e)
    } else {
        norm_eval(NormSpec::L1, e)
    }
}

fn check_dual_points(points: &[Vec<f64>], dim: usize) -> Result<()> {
    if points.is_empty() {
        return Err(OmpnError::UnsupportedModel(
            "block norm needs at least one dual extreme point".into(),
        ));
    }
    for (k, e) in points.iter().enumerate() {
        if e.len() != dim || e.iter().any(|c| !c.is_finite()) {
            return Err(OmpnError::UnsupportedModel(format!(
                "dual extreme point {k} must have {dim} finite coordinates"
            )));
        }
    }
    Ok(())
}

/// How a norm row `‖y‖ ≤ t` is written.
#[derive(Debug, Clone, PartialEq)]
enum NormRows {
    Conic(NormSpec),
    /// `e·y ≤ t` for every dual extreme point `e`.
    Dual(Vec<Vec<f64>>),
}

impl NormRows {
    fn polyhedral(norm: NormSpec, dim: usize) -> Self {
        let points = if norm == NormSpec::L1 {
            (0..1usize << dim)
                .map(|mask| (0..dim).map(|l| if mask >> l & 1 == 1 { -1.0 } else { 1.0 }).collect())
                .collect()
        } else {
            (0..dim)
                .flat_map(|l| {
                    [1.0, -1.0].map(|s| {
                        let mut e = vec![0.0; dim];
                        e[l] = s;
                        e
                    })
                })
                .collect()
        };
        NormRows::Dual(points)
    }

    fn value(&self, y: &[f64]) -> f64 {
        match self {
            NormRows::Conic(norm) => norm_eval(*norm, y),
            NormRows::Dual(points) => support(points, y).max(0.0),
        }
    }
}

/// Leaves of the geometric-mean tower for `|y|^r ≤ share^s · t^(r−s)`,
/// padded with copies of `|y|` up to a power of two.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Leaf {
    Share,
    Bound,
    Abs,
}

fn tower_leaves(num: u32, den: u32) -> Vec<Leaf> {
    let width = (num as usize).next_power_of_two();
    let mut leaves = vec![Leaf::Share; den as usize];
    leaves.extend(std::iter::repeat_n(Leaf::Bound, (num - den) as usize));
    leaves.extend(std::iter::repeat_n(Leaf::Abs, width - num as usize));
    leaves
}

struct Builder {
    vars: Vec<Variable>,
    linear: Vec<LinearRow>,
    soc: Vec<SocRow>,
    objective: Vec<(usize, f64)>,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> usize {
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        self.vars.len() - 1
    }

    fn cont(&mut self, name: String, lower: f64) -> usize {
        self.var(name, VarKind::Continuous, lower, f64::INFINITY)
    }

    fn binary(&mut self, name: String) -> usize {
        self.var(name, VarKind::Binary, 0.0, 1.0)
    }

    fn row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.linear.push(LinearRow {
            name,
            terms: normalize_terms(terms),
            sense,
            rhs,
        });
    }

    /// `expr (sense) 0`.
    fn affine_row(&mut self, name: String, expr: Affine, sense: Sense) {
        self.row(name, expr.terms, sense, -expr.constant);
    }

    fn cone(&mut self, name: String, entries: Vec<Affine>, bound: Affine) {
        self.soc.push(SocRow {
            name,
            entries: entries.into_iter().map(Affine::normalized).collect(),
            bound: bound.normalized(),
        });
    }

    /// `‖y‖ ≤ t`.
    fn norm_le(&mut self, tag: &str, y: &[Affine], t: &Affine, rows: &NormRows) {
        let diff = |a: &Affine, sign: f64, b: &Affine| {
            let mut terms = a.terms.clone();
            terms.extend(b.terms.iter().map(|&(v, c)| (v, sign * c)));
            Affine {
                terms,
                constant: a.constant + sign * b.constant,
            }
        };
        let scaled = |a: &Affine, s: f64| Affine {
            terms: a.terms.iter().map(|&(v, c)| (v, s * c)).collect(),
            constant: s * a.constant,
        };
        match rows {
            NormRows::Dual(points) => {
                for (k, e) in points.iter().enumerate() {
                    let mut lhs = Affine::default();
                    for (yl, &el) in y.iter().zip(e) {
                        lhs = diff(&lhs, el, yl);
                    }
                    self.affine_row(format!("{tag}_e{k}"), diff(t, -1.0, &lhs), Sense::Ge);
                }
            }
            NormRows::Conic(NormSpec::Infinity) => {
                for (l, yl) in y.iter().enumerate() {
                    self.affine_row(format!("{tag}_pos{l}"), diff(t, -1.0, yl), Sense::Ge);
                    self.affine_row(format!("{tag}_neg{l}"), diff(t, 1.0, yl), Sense::Ge);
                }
            }
            NormRows::Conic(NormSpec::Rational { num: 2, den: 1 }) => {
                self.cone(tag.to_string(), y.to_vec(), t.clone());
            }
            NormRows::Conic(NormSpec::Rational { num, den }) => {
                let abs: Vec<usize> = (0..y.len()).map(|l| self.cont(format!("{tag}_abs{l}"), 0.0)).collect();
                for (l, yl) in y.iter().enumerate() {
                    let a = Affine::var(abs[l]);
                    self.affine_row(format!("{tag}_pos{l}"), diff(&a, -1.0, yl), Sense::Ge);
                    self.affine_row(format!("{tag}_neg{l}"), diff(&a, 1.0, yl), Sense::Ge);
                }
                if (*num, *den) == (1, 1) {
                    let total = abs.iter().fold(t.clone(), |acc, &v| diff(&acc, -1.0, &Affine::var(v)));
                    self.affine_row(format!("{tag}_sum"), total, Sense::Ge);
                    return;
                }
                // |y_l|^τ ≤ share_l · t^(τ−1) and Σ share_l ≤ t.
                let share: Vec<usize> = (0..y.len()).map(|l| self.cont(format!("{tag}_share{l}"), 0.0)).collect();
                let total = share.iter().fold(t.clone(), |acc, &v| diff(&acc, -1.0, &Affine::var(v)));
                self.affine_row(format!("{tag}_sum"), total, Sense::Ge);
                let leaves = tower_leaves(*num, *den);
                for l in 0..y.len() {
                    let mut level: Vec<Affine> = leaves
                        .iter()
                        .map(|leaf| match leaf {
                            Leaf::Share => Affine::var(share[l]),
                            Leaf::Bound => t.clone(),
                            Leaf::Abs => Affine::var(abs[l]),
                        })
                        .collect();
                    let mut k = 0;
                    while level.len() > 1 {
                        let mut next = Vec::with_capacity(level.len() / 2);
                        for pair in level.chunks(2) {
                            // g² ≤ a·b  ⇔  ‖(2g, a − b)‖₂ ≤ a + b.
                            let g = self.cont(format!("{tag}_mean{l}_{k}"), 0.0);
                            self.cone(
                                format!("{tag}_cone{l}_{k}"),
                                vec![scaled(&Affine::var(g), 2.0), diff(&pair[0], -1.0, &pair[1])],
                                diff(&pair[0], 1.0, &pair[1]),
                            );
                            next.push(Affine::var(g));
                            k += 1;
                        }
                        level = next;
                    }
                    self.affine_row(
                        format!("{tag}_top{l}"),
                        diff(&level[0], -1.0, &Affine::var(abs[l])),
                        Sense::Ge,
                    );
                }
            }
        }
    }
}

/// Values of the auxiliary variables `norm_le` creates, given `y` and `t`.
fn norm_aux_values(tag: &str, y: &[f64], t: f64, rows: &NormRows, out: &mut HashMap<String, f64>) {
    let NormRows::Conic(NormSpec::Rational { num, den }) = *rows else {
        return;
    };
    if (num, den) == (2, 1) {
        return;
    }
    for (l, yl) in y.iter().enumerate() {
        out.insert(format!("{tag}_abs{l}"), yl.abs());
    }
    if (num, den) == (1, 1) {
        return;
    }
    let tau = num as f64 / den as f64;
    let leaves = tower_leaves(num, den);
    for (l, yl) in y.iter().enumerate() {
        let share = if t > 0.0 {
            yl.abs().powf(tau) / t.powf(tau - 1.0)
        } else {
            0.0
        };
        out.insert(format!("{tag}_share{l}"), share);
        let mut level: Vec<f64> = leaves
            .iter()
            .map(|leaf| match leaf {
                Leaf::Share => share,
                Leaf::Bound => t,
                Leaf::Abs => yl.abs(),
            })
            .collect();
        let mut k = 0;
        while level.len() > 1 {
            level = level
                .chunks(2)
                .map(|pair| {
                    let g = (pair[0] * pair[1]).sqrt();
                    out.insert(format!("{tag}_mean{l}_{k}"), g);
                    k += 1;
                    g
                })
                .collect();
        }
    }
}

struct Layout {
    n: usize,
    dim: usize,
    distance: NormRows,
    ball: NormRows,
}

impl Layout {
    fn new(instance: &Instance, formulation: Formulation, options: &ExportOptions) -> Result<Self> {
        let dim = instance.dim();
        let block = formulation == Formulation::MilpBlock;
        if options.block_dual_points.is_some() && !block {
            return Err(OmpnError::UnsupportedModel(
                "dual extreme points only apply to the MILP_block formulation".into(),
            ));
        }
        let polyhedral = |norm: NormSpec| -> Result<NormRows> {
            if norm.is_polyhedral() {
                Ok(NormRows::polyhedral(norm, dim))
            } else {
                Err(OmpnError::UnsupportedNorm {
                    norm: norm.to_string(),
                    context: "MILP_block (requires polyhedral norms)",
                })
            }
        };
        let (distance, ball) = if block {
            let distance = match &options.block_dual_points {
                Some(points) => {
                    check_dual_points(points, dim)?;
                    NormRows::Dual(points.clone())
                }
                None => polyhedral(instance.distance_norm())?,
            };
            (distance, polyhedral(instance.ball_norm())?)
        } else {
            (
                NormRows::Conic(instance.distance_norm()),
                NormRows::Conic(instance.ball_norm()),
            )
        };
        Ok(Layout {
            n: instance.n(),
            dim,
            distance,
            ball,
        })
    }

    /// Pairs with a distance row: all but the diagonal under zero
    /// self-service.
    fn has_distance(&self, instance: &Instance, i: usize, j: usize) -> bool {
        i != j || instance.self_service() == SelfService::Travel
    }
}

struct Common {
    /// `x_i_j` (row-major); only the diagonal in the three-index model.
    x: Vec<Option<usize>>,
    d: Vec<usize>,
}

fn build_common(b: &mut Builder, instance: &Instance, layout: &Layout, full_x: bool) -> Common {
    let (n, dim) = (layout.n, layout.dim);
    let mut x = vec![None; n * n];
    for i in 0..n {
        for j in 0..n {
            if full_x || i == j {
                x[i * n + j] = Some(b.binary(format!("x_{i}_{j}")));
            }
        }
    }
    let abar: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            (0..dim)
                .map(|l| b.var(format!("abar_{j}_{l}"), VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY))
                .collect()
        })
        .collect();
    let mut d = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let upper = if layout.has_distance(instance, i, j) {
                f64::INFINITY
            } else {
                0.0
            };
            d.push(b.var(format!("d_{i}_{j}"), VarKind::Continuous, 0.0, upper));
        }
    }
    // Placement rows.
    for (j, coords) in abar.iter().enumerate() {
        let y: Vec<Affine> = (0..dim)
            .map(|l| Affine {
                terms: vec![(coords[l], -1.0)],
                constant: instance.point(j)[l],
            })
            .collect();
        b.norm_le(&format!("ball_{j}"), &y, &Affine::constant(instance.radius(j)), &layout.ball);
    }
    // Distance rows.
    for i in 0..n {
        for (j, coords) in abar.iter().enumerate() {
            if !layout.has_distance(instance, i, j) {
                continue;
            }
            let y: Vec<Affine> = (0..dim)
                .map(|l| Affine {
                    terms: vec![(coords[l], -1.0)],
                    constant: instance.point(i)[l],
                })
                .collect();
            b.norm_le(&format!("dist_{i}_{j}"), &y, &Affine::var(d[i * n + j]), &layout.distance);
        }
    }
    // Assignment polytope.
    let diag: Vec<(usize, f64)> = (0..n).map(|j| (x[j * n + j].unwrap(), 1.0)).collect();
    b.row("open_count".into(), diag, Sense::Eq, instance.p() as f64);
    if full_x {
        for i in 0..n {
            let terms = (0..n).map(|j| (x[i * n + j].unwrap(), 1.0)).collect();
            b.row(format!("assign_{i}"), terms, Sense::Eq, 1.0);
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let terms = vec![(x[i * n + j].unwrap(), 1.0), (x[j * n + j].unwrap(), -1.0)];
                    b.row(format!("link_{i}_{j}"), terms, Sense::Le, 0.0);
                }
            }
        }
    }
    for j in 0..n {
        let xj = x[j * n + j].unwrap();
        if instance.setup_cost(j) != 0.0 {
            b.objective.push((xj, instance.setup_cost(j)));
        }
    }
    Common { x, d }
}

/// `D_i ≥ d_i_j − D̂_ij (1 − x_i_j)` for every pair.
fn serve_rows(b: &mut Builder, common: &Common, big: &PairBounds, n: usize) -> Vec<usize> {
    let served: Vec<usize> = (0..n).map(|i| b.cont(format!("D_{i}"), 0.0)).collect();
    for i in 0..n {
        for j in 0..n {
            let m = big.hi(i, j);
            let terms = vec![
                (served[i], 1.0),
                (common.d[i * n + j], -1.0),
                (common.x[i * n + j].unwrap(), -m),
            ];
            b.row(format!("serve_{i}_{j}"), terms, Sense::Ge, -m);
        }
    }
    served
}

/// Builds the requested formulation; applies strengthening when the options
/// carry an upper bound.
pub fn export_model(instance: &Instance, formulation: Formulation, options: &ExportOptions) -> Result<ModelIR> {
    let layout = Layout::new(instance, formulation, options)?;
    let big = PairBounds::new(instance, options)?;
    let n = layout.n;
    let lambda = instance.lambda().weights().to_vec();
    let mut b = Builder {
        vars: Vec::new(),
        linear: Vec::new(),
        soc: Vec::new(),
        objective: Vec::new(),
    };
    match formulation {
        Formulation::ThreeIndex => {
            let common = build_common(&mut b, instance, &layout, false);
            let mut w = vec![0; n * n * n];
            let mut theta = vec![0; n * n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        w[(i * n + j) * n + k] = b.binary(format!("w_{i}_{j}_{k}"));
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let v = b.cont(format!("theta_{i}_{j}_{k}"), 0.0);
                        theta[(i * n + j) * n + k] = v;
                        b.objective.push((v, lambda[k]));
                    }
                }
            }
            let at = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
            let w = &w;
            for i in 0..n {
                let terms = (0..n).flat_map(|j| (0..n).map(move |k| (w[at(i, j, k)], 1.0))).collect();
                b.row(format!("cust_{i}"), terms, Sense::Eq, 1.0);
            }
            for k in 0..n {
                let terms = (0..n).flat_map(|i| (0..n).map(move |j| (w[at(i, j, k)], 1.0))).collect();
                b.row(format!("slot_{k}"), terms, Sense::Eq, 1.0);
            }
            for i in 0..n {
                for j in 0..n {
                    let mut terms: Vec<(usize, f64)> = (0..n).map(|k| (w[at(i, j, k)], 1.0)).collect();
                    terms.push((common.x[j * n + j].unwrap(), -1.0));
                    b.row(format!("use_{i}_{j}"), terms, Sense::Le, 0.0);
                }
            }
            for k in 1..n {
                let mut terms = Vec::with_capacity(2 * n * n);
                for i in 0..n {
                    for j in 0..n {
                        terms.push((theta[at(i, j, k - 1)], 1.0));
                        terms.push((theta[at(i, j, k)], -1.0));
                    }
                }
                b.row(format!("sorted_{k}"), terms, Sense::Ge, 0.0);
            }
            for i in 0..n {
                for j in 0..n {
                    let m = big.hi(i, j);
                    for k in 0..n {
                        let terms = vec![(theta[at(i, j, k)], 1.0), (common.d[i * n + j], -1.0), (w[at(i, j, k)], -m)];
                        b.row(format!("lin_{i}_{j}_{k}"), terms, Sense::Ge, -m);
                    }
                }
            }
        }
        Formulation::TwoIndex => {
            let common = build_common(&mut b, instance, &layout, true);
            let s: Vec<usize> = (0..n * n).map(|q| b.binary(format!("s_{}_{}", q / n, q % n))).collect();
            let xi: Vec<usize> = (0..n).map(|k| b.cont(format!("xi_{k}"), 0.0)).collect();
            let theta: Vec<usize> = (0..n * n)
                .map(|q| b.cont(format!("theta_{}_{}", q / n, q % n), 0.0))
                .collect();
            for k in 0..n {
                b.objective.push((xi[k], lambda[k]));
            }
            for k in 0..n.saturating_sub(1) {
                b.row(format!("sorted_{k}"), vec![(xi[k], 1.0), (xi[k + 1], -1.0)], Sense::Ge, 0.0);
            }
            let mut total: Vec<(usize, f64)> = xi.iter().map(|&v| (v, 1.0)).collect();
            total.extend(theta.iter().map(|&v| (v, -1.0)));
            b.row("xi_total".into(), total, Sense::Eq, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let m = big.hi(i, j);
                    for k in 0..n {
                        let terms = vec![(xi[k], 1.0), (theta[i * n + j], -1.0), (s[i * n + k], -m)];
                        b.row(format!("xi_{i}_{j}_{k}"), terms, Sense::Ge, -m);
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let m = big.hi(i, j);
                    let terms = vec![
                        (theta[i * n + j], 1.0),
                        (common.d[i * n + j], -1.0),
                        (common.x[i * n + j].unwrap(), -m),
                    ];
                    b.row(format!("lin_{i}_{j}"), terms, Sense::Ge, -m);
                }
            }
            for k in 0..n {
                b.row(
                    format!("slot_{k}"),
                    (0..n).map(|i| (s[i * n + k], 1.0)).collect(),
                    Sense::Eq,
                    1.0,
                );
            }
            for i in 0..n {
                b.row(
                    format!("rank_{i}"),
                    (0..n).map(|k| (s[i * n + k], 1.0)).collect(),
                    Sense::Eq,
                    1.0,
                );
            }
        }
        Formulation::KSum => {
            let common = build_common(&mut b, instance, &layout, true);
            let served = serve_rows(&mut b, &common, &big, n);
            let deltas = telescoping_weights(instance.lambda()).deltas;
            let t: Vec<usize> = (0..n)
                .map(|k| b.var(format!("t_{k}"), VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY))
                .collect();
            let z: Vec<usize> = (0..n * n).map(|q| b.cont(format!("z_{}_{}", q / n, q % n), 0.0)).collect();
            for k in 0..n {
                b.objective.push((t[k], deltas[k] * (k + 1) as f64));
            }
            for i in 0..n {
                for k in 0..n {
                    b.objective.push((z[i * n + k], deltas[k]));
                    let terms = vec![(z[i * n + k], 1.0), (served[i], -1.0), (t[k], 1.0)];
                    b.row(format!("excess_{i}_{k}"), terms, Sense::Ge, 0.0);
                }
            }
        }
        Formulation::Bep | Formulation::MilpBlock => {
            let common = build_common(&mut b, instance, &layout, true);
            let served = serve_rows(&mut b, &common, &big, n);
            let free = |b: &mut Builder, name: String| b.var(name, VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY);
            let u: Vec<usize> = (0..n).map(|i| free(&mut b, format!("u_{i}"))).collect();
            let v: Vec<usize> = (0..n).map(|k| free(&mut b, format!("v_{k}"))).collect();
            for q in 0..n {
                b.objective.push((u[q], 1.0));
                b.objective.push((v[q], 1.0));
            }
            for i in 0..n {
                for k in 0..n {
                    let terms = vec![(u[i], 1.0), (v[k], 1.0), (served[i], -lambda[k])];
                    b.row(format!("order_{i}_{k}"), terms, Sense::Ge, 0.0);
                }
            }
        }
    }
    let model = ModelIR {
        variables: b.vars,
        linear: b.linear,
        soc: b.soc,
        objective: normalize_terms(b.objective),
        meta: ModelMeta {
            formulation,
            n,
            p: instance.p(),
            dim: layout.dim,
            instance_hash: instance.hash(),
            distance_norm: match &options.block_dual_points {
                Some(points) => format!("block:{}", points.len()),
                None => norm_label(instance.distance_norm()),
            },
            ball_norm: norm_label(instance.ball_norm()),
            self_service: instance.self_service(),
            upper_bound: None,
            position_rule: false,
            suffix_rule: false,
            valid_equations: false,
            fixed_variables: 0,
        },
    };
    let model = match &options.strengthen {
        Some(s) => apply_strengthening(model, instance, &big, s)?,
        None => model,
    };
    model.validate()?;
    Ok(model)
}

/// Tightens variable bounds using an upper bound on the optimum and, in the
/// three-index model, adds the valid equations. An infinite bound returns
/// the model unchanged.
///
/// Every formulation gets `D_i ≤ UB/λ₁` style caps and closes `x_i_j` when
/// `λ₁ · d̂_ij > UB`: any solution within `UB` has `λ₁ D_i ≤ UB`. The
/// three-index model also drops sorted positions via the position table.
pub fn apply_strengthening(mut model: ModelIR, instance: &Instance, big: &PairBounds, s: &Strengthening) -> Result<ModelIR> {
    let ub = s.upper_bound;
    if ub.is_nan() {
        return Err(OmpnError::OutOfRange {
            name: "upper_bound",
            detail: "NaN".into(),
        });
    }
    if !ub.is_finite() {
        return Ok(model);
    }
    let n = model.meta.n;
    if n != instance.n() {
        return Err(OmpnError::DimensionMismatch {
            expected: n,
            got: instance.n(),
        });
    }
    let lambda = instance.lambda();
    let lead = lambda.weights()[0];
    let index: HashMap<String, usize> = model.variables.iter().enumerate().map(|(k, v)| (v.name.clone(), k)).collect();
    let mut fixed = 0;
    let mut cap = |model: &mut ModelIR, name: &str, value: f64| {
        if let Some(&k) = index.get(name) {
            let var = &mut model.variables[k];
            let value = value.max(var.lower);
            if value < var.upper {
                if value == 0.0 && var.kind == VarKind::Binary {
                    fixed += 1;
                }
                var.upper = value;
            }
        }
    };
    match model.meta.formulation {
        Formulation::ThreeIndex => {
            if s.position_rule {
                let bounds = BoundsMatrix::compute(instance);
                let table = position_elimination(instance, &bounds, ub);
                for (i, first) in table.first_excluded.iter().enumerate() {
                    let Some(m) = *first else { continue };
                    for j in (0..n).filter(|&j| j != i) {
                        for k in m - 1..n {
                            cap(&mut model, &format!("w_{i}_{j}_{k}"), 0.0);
                        }
                    }
                }
            }
            if s.suffix_rule {
                for i in 0..n {
                    let far = (0..n).filter(|&j| j != i).map(|j| big.hi(i, j)).fold(f64::INFINITY, f64::min);
                    for k in 0..n {
                        let tail = lambda.suffix_sum(k + 1);
                        if tail > 0.0 && far > ub / tail {
                            for j in 0..n {
                                cap(&mut model, &format!("w_{i}_{j}_{k}"), 0.0);
                            }
                        }
                    }
                }
            }
            if s.valid_equations {
                for j in 0..n {
                    let mut terms: Vec<(usize, f64)> = (0..n).map(|k| (index[&format!("w_{j}_{j}_{k}")], 1.0)).collect();
                    terms.push((index[&format!("x_{j}_{j}")], -1.0));
                    model.linear.push(LinearRow {
                        name: format!("valid_{j}"),
                        terms: normalize_terms(terms),
                        sense: Sense::Eq,
                        rhs: 0.0,
                    });
                }
            }
        }
        formulation => {
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    if lead * big.lo(i, j) > ub {
                        cap(&mut model, &format!("x_{i}_{j}"), 0.0);
                    }
                }
            }
            if formulation == Formulation::TwoIndex {
                for k in 0..n {
                    let head = lambda.prefix_sum(k + 1);
                    if head > 0.0 {
                        cap(&mut model, &format!("xi_{k}"), ub / head);
                    }
                }
            } else {
                for i in 0..n {
                    cap(&mut model, &format!("D_{i}"), ub / lead);
                }
            }
        }
    }
    model.meta.upper_bound = Some(ub);
    model.meta.position_rule = s.position_rule;
    model.meta.suffix_rule = s.suffix_rule;
    model.meta.valid_equations = s.valid_equations && model.meta.formulation == Formulation::ThreeIndex;
    model.meta.fixed_variables = fixed;
    Ok(model)
}

/// Maps a solution (assignment and facility placements) to a point of the
/// model. Closed sites keep their facility at the site. The objective of the
/// point is the solution's cost under the model's distance rows.
pub fn lift_solution(
    model: &ModelIR,
    instance: &Instance,
    options: &ExportOptions,
    assign: &[usize],
    placement: &Placement,
) -> Result<Vec<f64>> {
    let formulation = model.meta.formulation;
    let layout = Layout::new(instance, formulation, options)?;
    let (n, dim) = (layout.n, layout.dim);
    if assign.len() != n {
        return Err(OmpnError::DimensionMismatch {
            expected: n,
            got: assign.len(),
        });
    }
    let open: Vec<bool> = (0..n).map(|j| placement.open.contains(&j)).collect();
    for (i, &j) in assign.iter().enumerate() {
        if j >= n || !open[j] || (open[i] && j != i) {
            return Err(OmpnError::UnsupportedModel(format!(
                "customer {i} is not served by an open site or itself"
            )));
        }
    }
    let loc: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            placement
                .location(j)
                .map_or_else(|| instance.point(j).to_vec(), <[f64]>::to_vec)
        })
        .collect();
    let mut out: HashMap<String, f64> = HashMap::new();
    let mut d = vec![0.0; n * n];
    for j in 0..n {
        for l in 0..dim {
            out.insert(format!("abar_{j}_{l}"), loc[j][l]);
        }
        let y: Vec<f64> = (0..dim).map(|l| instance.point(j)[l] - loc[j][l]).collect();
        norm_aux_values(&format!("ball_{j}"), &y, instance.radius(j), &layout.ball, &mut out);
    }
    for i in 0..n {
        for j in 0..n {
            if layout.has_distance(instance, i, j) {
                let y: Vec<f64> = (0..dim).map(|l| instance.point(i)[l] - loc[j][l]).collect();
                d[i * n + j] = layout.distance.value(&y);
                norm_aux_values(&format!("dist_{i}_{j}"), &y, d[i * n + j], &layout.distance, &mut out);
            }
            out.insert(format!("d_{i}_{j}"), d[i * n + j]);
            let x = if assign[i] == j { 1.0 } else { 0.0 };
            if formulation != Formulation::ThreeIndex || i == j {
                out.insert(format!("x_{i}_{j}"), if i == j { f64::from(open[j]) } else { x });
            }
        }
    }
    let paid: Vec<f64> = (0..n).map(|i| d[i * n + assign[i]]).collect();
    let order = sorted_order(&paid);
    let mut rank = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        rank[i] = k;
    }
    let sorted: Vec<f64> = order.iter().map(|&i| paid[i]).collect();
    let weights = instance.lambda().weights();
    match formulation {
        Formulation::ThreeIndex => {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let on = assign[i] == j && rank[i] == k;
                        out.insert(format!("w_{i}_{j}_{k}"), f64::from(on));
                        out.insert(format!("theta_{i}_{j}_{k}"), if on { d[i * n + j] } else { 0.0 });
                    }
                }
            }
        }
        Formulation::TwoIndex => {
            for i in 0..n {
                for k in 0..n {
                    out.insert(format!("s_{i}_{k}"), f64::from(rank[i] == k));
                }
                for j in 0..n {
                    out.insert(format!("theta_{i}_{j}"), if assign[i] == j { d[i * n + j] } else { 0.0 });
                }
            }
            for (k, v) in sorted.iter().enumerate() {
                out.insert(format!("xi_{k}"), *v);
            }
        }
        Formulation::KSum => {
            for i in 0..n {
                out.insert(format!("D_{i}"), paid[i]);
                for k in 0..n {
                    out.insert(format!("z_{i}_{k}"), (paid[i] - sorted[k]).max(0.0));
                }
            }
            for (k, v) in sorted.iter().enumerate() {
                out.insert(format!("t_{k}"), *v);
            }
        }
        Formulation::Bep | Formulation::MilpBlock => {
            // Optimal duals of the sorting assignment problem, built from the
            // k-sum decomposition of the weights.
            let deltas = telescoping_weights(instance.lambda()).deltas;
            for i in 0..n {
                out.insert(format!("D_{i}"), paid[i]);
                let u: f64 = (0..n).map(|q| deltas[q] * (paid[i] - sorted[q]).max(0.0)).sum();
                out.insert(format!("u_{i}"), u);
            }
            for k in 0..n {
                let v: f64 = (k..n).map(|q| deltas[q] * sorted[q]).sum();
                out.insert(format!("v_{k}"), v);
            }
            debug_assert_eq!(weights.len(), n);
        }
    }
    model
        .variables
        .iter()
        .map(|v| {
            out.get(&v.name)
                .copied()
                .ok_or_else(|| OmpnError::UnsupportedModel(format!("no lifted value for `{}`", v.name)))
        })
        .collect()
}
