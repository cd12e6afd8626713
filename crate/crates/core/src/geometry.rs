//! `ℓτ` norms, ball neighborhoods, Euclidean projections onto them and the
//! per-pair distance bounds `d̂ ≤ ‖a_i − ā_j‖_ν ≤ D̂` over `ā_j ∈ 𝒩_j`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{OmpnError, Result};
use crate::instance::Instance;

/// An `ℓτ` norm with rational `τ ≥ 1`, or the max norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormSpec {
    /// `τ = num / den`, stored reduced.
    Rational {
        num: u32,
        den: u32,
    },
    Infinity,
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl NormSpec {
    pub const L1: NormSpec = NormSpec::Rational { num: 1, den: 1 };
    pub const L2: NormSpec = NormSpec::Rational { num: 2, den: 1 };
    pub const LINF: NormSpec = NormSpec::Infinity;

    pub fn rational(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num < den {
            return Err(OmpnError::OutOfRange {
                name: "tau",
                detail: format!("{num}/{den} is not a rational >= 1"),
            });
        }
        let g = gcd(num, den);
        Ok(NormSpec::Rational {
            num: num / g,
            den: den / g,
        })
    }

    /// `τ` as a float (`f64::INFINITY` for the max norm).
    pub fn tau(&self) -> f64 {
        match *self {
            NormSpec::Rational { num, den } => num as f64 / den as f64,
            NormSpec::Infinity => f64::INFINITY,
        }
    }

    /// Polyhedral unit ball (`τ ∈ {1, ∞}`).
    pub fn is_polyhedral(&self) -> bool {
        matches!(self, NormSpec::Infinity | NormSpec::Rational { num: 1, den: 1 })
    }

    fn reciprocal(&self) -> f64 {
        match *self {
            NormSpec::Rational { num, den } => den as f64 / num as f64,
            NormSpec::Infinity => 0.0,
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NormSpec::Rational { num, den: 1 } => write!(f, "{num}"),
            NormSpec::Rational { num, den } => write!(f, "{num}/{den}"),
            NormSpec::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for NormSpec {
    type Err = OmpnError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || OmpnError::validation("norm", format!("`{s}` is not `1`, `2`, `inf` or `r/s`"));
        if s.eq_ignore_ascii_case("inf") {
            return Ok(NormSpec::Infinity);
        }
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
            None => (s.parse().map_err(|_| bad())?, 1),
        };
        NormSpec::rational(num, den).map_err(|_| bad())
    }
}

/// `‖v‖_τ`.
pub fn norm_eval(norm: NormSpec, v: &[f64]) -> f64 {
    match norm {
        NormSpec::Infinity => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        NormSpec::Rational { num: 1, den: 1 } => v.iter().map(|x| x.abs()).sum(),
        NormSpec::Rational { num: 2, den: 1 } => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        _ => {
            let tau = norm.tau();
            // scale by the max entry to keep powers in range
            let m = v.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
            if m == 0.0 {
                return 0.0;
            }
            m * v.iter().map(|x| (x.abs() / m).powf(tau)).sum::<f64>().powf(1.0 / tau)
        }
    }
}

/// `‖a − b‖_τ` without allocating.
pub(crate) fn dist(norm: NormSpec, a: &[f64], b: &[f64]) -> f64 {
    match norm {
        NormSpec::Rational { num: 2, den: 1 } => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        NormSpec::Rational { num: 1, den: 1 } => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        NormSpec::Infinity => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        _ => {
            let v: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            norm_eval(norm, &v)
        }
    }
}

/// A subgradient of `‖·‖_τ` at `v`; the zero vector at the origin.
pub fn norm_subgradient(norm: NormSpec, v: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; v.len()];
    norm_subgradient_into(norm, v, &mut g);
    g
}

pub(crate) fn norm_subgradient_into(norm: NormSpec, v: &[f64], g: &mut [f64]) {
    g.iter_mut().for_each(|x| *x = 0.0);
    let value = norm_eval(norm, v);
    if value == 0.0 {
        return;
    }
    match norm {
        NormSpec::Rational { num: 1, den: 1 } => {
            for (gk, &vk) in g.iter_mut().zip(v) {
                if vk != 0.0 {
                    *gk = vk.signum();
                }
            }
        }
        NormSpec::Infinity => {
            // lowest index among maximal coordinates
            let mut best = 0;
            for k in 1..v.len() {
                if v[k].abs() > v[best].abs() {
                    best = k;
                }
            }
            g[best] = v[best].signum();
        }
        NormSpec::Rational { num: 2, den: 1 } => {
            for (gk, &vk) in g.iter_mut().zip(v) {
                *gk = vk / value;
            }
        }
        _ => {
            let tau = norm.tau();
            for (gk, &vk) in g.iter_mut().zip(v) {
                *gk = vk.signum() * (vk.abs() / value).powf(tau - 1.0);
            }
        }
    }
}

/// The ball `{z : ‖z − center‖_τ ≤ radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub center: Vec<f64>,
    pub radius: f64,
    pub norm: NormSpec,
}

impl Neighborhood {
    pub fn new(center: Vec<f64>, radius: f64, norm: NormSpec) -> Self {
        Neighborhood { center, radius, norm }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        dist(self.norm, x, &self.center) <= self.radius + tol
    }

    /// `‖x − center‖_τ − radius`; nonpositive inside the ball.
    pub fn violation(&self, x: &[f64]) -> f64 {
        dist(self.norm, x, &self.center) - self.radius
    }
}

/// Euclidean projection onto a ball neighborhood (`τ ∈ {1, 2, ∞}`).
pub fn project_to_neighborhood(x: &[f64], nb: &Neighborhood) -> Result<Vec<f64>> {
    if x.len() != nb.center.len() {
        return Err(OmpnError::DimensionMismatch {
            expected: nb.center.len(),
            got: x.len(),
        });
    }
    let mut out = x.to_vec();
    project_in_place(&mut out, &nb.center, nb.radius, nb.norm)?;
    Ok(out)
}

pub(crate) fn check_projectable(norm: NormSpec) -> Result<()> {
    match norm {
        NormSpec::Infinity | NormSpec::Rational { num: 1 | 2, den: 1 } => Ok(()),
        other => Err(OmpnError::UnsupportedNorm {
            norm: other.to_string(),
            context: "projection onto a neighborhood",
        }),
    }
}

pub(crate) fn project_in_place(x: &mut [f64], center: &[f64], radius: f64, norm: NormSpec) -> Result<()> {
    check_projectable(norm)?;
    match norm {
        NormSpec::Rational { num: 2, den: 1 } => {
            let d = dist(norm, x, center);
            if d > radius {
                let s = radius / d;
                for (xk, ck) in x.iter_mut().zip(center) {
                    *xk = ck + (*xk - ck) * s;
                }
            }
        }
        NormSpec::Infinity => {
            for (xk, ck) in x.iter_mut().zip(center) {
                *xk = xk.clamp(ck - radius, ck + radius);
            }
        }
        _ => project_l1(x, center, radius),
    }
    Ok(())
}

/// Sorted-threshold projection onto the `ℓ1` ball.
fn project_l1(x: &mut [f64], center: &[f64], radius: f64) {
    let v: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
    let l1: f64 = v.iter().map(|a| a.abs()).sum();
    if l1 <= radius {
        return;
    }
    if radius <= 0.0 {
        x.copy_from_slice(center);
        return;
    }
    let mut u: Vec<f64> = v.iter().map(|a| a.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - radius) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for ((xk, ck), vk) in x.iter_mut().zip(center).zip(&v) {
        *xk = ck + vk.signum() * (vk.abs() - theta).max(0.0);
    }
}

/// Largest `‖z‖_to` over `‖z‖_from ≤ 1` in dimension `dim`.
fn equivalence_constant(from: NormSpec, to: NormSpec, dim: usize) -> f64 {
    let exponent = (to.reciprocal() - from.reciprocal()).max(0.0);
    (dim as f64).powf(exponent)
}

/// Bounds on `‖a_i − ā‖_ν` over `ā ∈ 𝒩_j`: `(d̂, D̂)`.
///
/// Exact for `ν = τ`, for box neighborhoods (`τ = ∞`), and for the max of any
/// `ν` over a cross-polytope (`τ = 1`, attained at a vertex). Other mixed
/// pairs fall back to norm-equivalence radii, which are conservative.
pub fn distance_bounds(a_i: &[f64], nb: &Neighborhood, nu: NormSpec) -> (f64, f64) {
    let center_dist = dist(nu, a_i, &nb.center);
    let r = nb.radius;
    if r == 0.0 {
        return (center_dist, center_dist);
    }
    if nu == nb.norm {
        return ((center_dist - r).max(0.0), center_dist + r);
    }
    let dim = a_i.len();
    let lower = match nb.norm {
        NormSpec::Infinity => {
            let gap: Vec<f64> = a_i
                .iter()
                .zip(&nb.center)
                .map(|(a, c)| ((a - c).abs() - r).max(0.0))
                .collect();
            norm_eval(nu, &gap)
        }
        NormSpec::Rational { num: 1, den: 1 } if nu == NormSpec::L2 => {
            let mut p = a_i.to_vec();
            project_l1(&mut p, &nb.center, r);
            dist(nu, a_i, &p)
        }
        _ => (center_dist - r * equivalence_constant(nb.norm, nu, dim)).max(0.0),
    };
    let upper = match nb.norm {
        NormSpec::Infinity if dim <= 16 => {
            let mut best: f64 = 0.0;
            let mut vertex = vec![0.0; dim];
            for mask in 0u32..(1 << dim) {
                for k in 0..dim {
                    let s = if mask & (1 << k) != 0 { 1.0 } else { -1.0 };
                    vertex[k] = nb.center[k] + s * r;
                }
                best = best.max(dist(nu, a_i, &vertex));
            }
            best
        }
        NormSpec::Rational { num: 1, den: 1 } => {
            let mut best: f64 = 0.0;
            let mut vertex = nb.center.clone();
            for k in 0..dim {
                for s in [-1.0, 1.0] {
                    vertex[k] = nb.center[k] + s * r;
                    best = best.max(dist(nu, a_i, &vertex));
                }
                vertex[k] = nb.center[k];
            }
            best
        }
        _ => center_dist + r * equivalence_constant(nb.norm, nu, dim),
    };
    (lower.min(center_dist), upper.max(center_dist))
}

/// Per-pair travel-distance bounds between customers and neighborhoods.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsMatrix {
    n: usize,
    dhat: Vec<f64>,
    dmax: Vec<f64>,
}

impl BoundsMatrix {
    pub fn compute(instance: &Instance) -> Self {
        let n = instance.n();
        let nu = instance.distance_norm();
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let a = instance.point(i);
                (0..n).map(|j| distance_bounds(a, &instance.neighborhood(j), nu)).unzip()
            })
            .collect();
        let mut dhat = Vec::with_capacity(n * n);
        let mut dmax = Vec::with_capacity(n * n);
        for (lo, hi) in rows {
            dhat.extend(lo);
            dmax.extend(hi);
        }
        BoundsMatrix { n, dhat, dmax }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Minimum distance from customer `i` to neighborhood `j`.
    pub fn dhat(&self, i: usize, j: usize) -> f64 {
        self.dhat[i * self.n + j]
    }

    /// Maximum distance from customer `i` to neighborhood `j`.
    pub fn dmax(&self, i: usize, j: usize) -> f64 {
        self.dmax[i * self.n + j]
    }

    /// Row-major `θ·d̂ + (1 − θ)·D̂`.
    pub fn blend(&self, theta: f64) -> Vec<f64> {
        self.dhat
            .iter()
            .zip(&self.dmax)
            .map(|(lo, hi)| theta * lo + (1.0 - theta) * hi)
            .collect()
    }
}
