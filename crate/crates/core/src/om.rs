//! Ordered median functions.
//!
//! For a nonincreasing, nonnegative weight vector `λ` the ordered median of a
//! distance vector `D` is `Σ_k λ_k D_(k)`, where `D_(1) ≥ D_(2) ≥ …` is `D`
//! sorted in nonincreasing order. Sorting is stable with ties resolved by
//! ascending customer index, which makes subgradients deterministic.

use serde::Serialize;

use crate::error::{OmpnError, Result};

/// Named weight families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaPreset {
    /// `(1, …, 1)`
    Median,
    /// `(1, 0, …, 0)`
    Center,
    /// `K` ones followed by zeros.
    Kcentrum { k: usize },
    /// `(1, 1-α, …, 1-α)`
    Centdian { alpha: f64 },
}

impl LambdaPreset {
    /// Parses `median`, `center`, `kcentrum` or `centdian`; the numeric
    /// parameter is read from `k` / `alpha` as appropriate.
    pub fn from_name(name: &str, k: Option<usize>, alpha: Option<f64>) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "median" | "m" => Ok(LambdaPreset::Median),
            "center" | "c" => Ok(LambdaPreset::Center),
            "kcentrum" | "k" => Ok(LambdaPreset::Kcentrum {
                k: k.ok_or(OmpnError::OutOfRange {
                    name: "K",
                    detail: "kcentrum requires K".into(),
                })?,
            }),
            "centdian" | "d" => Ok(LambdaPreset::Centdian {
                alpha: alpha.unwrap_or(0.5),
            }),
            other => Err(OmpnError::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LambdaPreset::Median => "median",
            LambdaPreset::Center => "center",
            LambdaPreset::Kcentrum { .. } => "kcentrum",
            LambdaPreset::Centdian { .. } => "centdian",
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            LambdaPreset::Median => "M",
            LambdaPreset::Center => "C",
            LambdaPreset::Kcentrum { .. } => "K",
            LambdaPreset::Centdian { .. } => "D",
        }
    }
}

/// Monotone nonincreasing, nonnegative ordered median weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LambdaVector {
    weights: Vec<f64>,
}

impl LambdaVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(OmpnError::InvalidLambda("empty weight vector".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(OmpnError::InvalidLambda(format!(
                    "weight {i} = {w} is not a finite nonnegative number"
                )));
            }
            if i > 0 && weights[i - 1] < w {
                return Err(OmpnError::InvalidLambda(format!(
                    "weights must be nonincreasing: λ[{}] = {} < λ[{i}] = {w}",
                    i - 1,
                    weights[i - 1]
                )));
            }
        }
        Ok(LambdaVector { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `λ_1 + … + λ_m` (first `m` weights).
    pub fn prefix_sum(&self, m: usize) -> f64 {
        self.weights[..m.min(self.len())].iter().sum()
    }

    /// `λ_k + … + λ_n` with `k` one-based.
    pub fn suffix_sum(&self, k: usize) -> f64 {
        self.weights[(k.max(1) - 1).min(self.len())..].iter().sum()
    }
}

/// Builds the weight vector of a preset family.
pub fn make_lambda(preset: LambdaPreset, n: usize) -> Result<LambdaVector> {
    if n == 0 {
        return Err(OmpnError::OutOfRange {
            name: "n",
            detail: "n must be at least 1".into(),
        });
    }
    let weights = match preset {
        LambdaPreset::Median => vec![1.0; n],
        LambdaPreset::Center => {
            let mut w = vec![0.0; n];
            w[0] = 1.0;
            w
        }
        LambdaPreset::Kcentrum { k } => {
            if k == 0 || k > n {
                return Err(OmpnError::OutOfRange {
                    name: "K",
                    detail: format!("K = {k} must lie in 1..={n}"),
                });
            }
            (0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect()
        }
        LambdaPreset::Centdian { alpha } => {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(OmpnError::OutOfRange {
                    name: "alpha",
                    detail: format!("alpha = {alpha} must lie in [0, 1]"),
                });
            }
            let mut w = vec![1.0 - alpha; n];
            w[0] = 1.0;
            w
        }
    };
    LambdaVector::new(weights)
}

/// A distance vector sorted in nonincreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedDistances {
    /// `values[k]` is the `(k+1)`-th largest distance.
    pub values: Vec<f64>,
    /// `perm[k]` is the customer occupying sorted position `k`.
    pub perm: Vec<usize>,
}

fn check_finite(distances: &[f64]) -> Result<()> {
    match distances.iter().position(|d| d.is_nan()) {
        Some(index) => Err(OmpnError::NanInput { index }),
        None => Ok(()),
    }
}

/// Sorts nonincreasingly; ties go to the smaller customer index first.
pub fn sort_distances(distances: &[f64]) -> Result<SortedDistances> {
    check_finite(distances)?;
    let perm = sorted_order(distances);
    let values = perm.iter().map(|&i| distances[i]).collect();
    Ok(SortedDistances { values, perm })
}

pub(crate) fn sorted_order(distances: &[f64]) -> Vec<usize> {
    let mut perm = Vec::with_capacity(distances.len());
    sorted_order_into(distances, &mut perm);
    perm
}

/// `(value desc, index asc)` is a total order, so an unstable sort is exact.
pub(crate) fn sorted_order_into(distances: &[f64], perm: &mut Vec<usize>) {
    perm.clear();
    perm.extend(0..distances.len());
    perm.sort_unstable_by(|&a, &b| distances[b].total_cmp(&distances[a]).then(a.cmp(&b)));
}

fn check_dims(lambda: &LambdaVector, distances: &[f64]) -> Result<()> {
    if lambda.len() != distances.len() {
        return Err(OmpnError::DimensionMismatch {
            expected: lambda.len(),
            got: distances.len(),
        });
    }
    check_finite(distances)
}

/// `Σ_k λ_k D_(k)`.
pub fn evaluate_om(lambda: &LambdaVector, distances: &[f64]) -> Result<f64> {
    check_dims(lambda, distances)?;
    Ok(om_unchecked(lambda.weights(), distances))
}

/// Hot-path evaluation without validation; `weights.len() == distances.len()`.
pub(crate) fn om_unchecked(weights: &[f64], distances: &[f64]) -> f64 {
    let perm = sorted_order(distances);
    perm.iter().zip(weights).map(|(&i, &w)| w * distances[i]).sum()
}

/// Sum of the `k` largest entries.
pub fn k_sum(distances: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > distances.len() {
        return Err(OmpnError::OutOfRange {
            name: "K",
            detail: format!("K = {k} must lie in 1..={}", distances.len()),
        });
    }
    let sorted = sort_distances(distances)?;
    Ok(sorted.values[..k].iter().sum())
}

/// `Δ_k = λ_k − λ_{k+1}` with `λ_{n+1} = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TelescopingWeights {
    pub deltas: Vec<f64>,
}

impl TelescopingWeights {
    /// Suffix sums of the deltas.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.deltas.len()];
        let mut acc = 0.0;
        for k in (0..self.deltas.len()).rev() {
            acc += self.deltas[k];
            out[k] = acc;
        }
        out
    }
}

pub fn telescoping_weights(lambda: &LambdaVector) -> TelescopingWeights {
    let w = lambda.weights();
    let deltas = (0..w.len()).map(|k| w[k] - w.get(k + 1).copied().unwrap_or(0.0)).collect();
    TelescopingWeights { deltas }
}

/// As `om_unchecked`, reusing `perm` as scratch.
pub(crate) fn om_with(weights: &[f64], distances: &[f64], perm: &mut Vec<usize>) -> f64 {
    sorted_order_into(distances, perm);
    perm.iter().zip(weights).map(|(&i, &w)| w * distances[i]).sum()
}

/// Subgradient of `D ↦ Σ_k λ_k D_(k)`: customer `i` receives the weight of the
/// position it occupies in the sorted order.
pub fn om_subgradient(lambda: &LambdaVector, distances: &[f64]) -> Result<Vec<f64>> {
    check_dims(lambda, distances)?;
    let mut g = vec![0.0; distances.len()];
    om_subgradient_into(lambda.weights(), distances, &mut g);
    Ok(g)
}

pub(crate) fn om_subgradient_into(weights: &[f64], distances: &[f64], out: &mut [f64]) -> f64 {
    let mut perm = Vec::with_capacity(distances.len());
    om_subgradient_buf(weights, distances, out, &mut perm)
}

/// As `om_subgradient_into`, reusing `perm` as scratch.
pub(crate) fn om_subgradient_buf(weights: &[f64], distances: &[f64], out: &mut [f64], perm: &mut Vec<usize>) -> f64 {
    sorted_order_into(distances, perm);
    let mut value = 0.0;
    for (k, &i) in perm.iter().enumerate() {
        out[i] = weights[k];
        value += weights[k] * distances[i];
    }
    value
}

/// Maximum of `Σ_i λ_i D_σ(i)` over all permutations `σ`, by enumeration.
pub fn om_via_permutation_oracle(lambda: &LambdaVector, distances: &[f64]) -> Result<f64> {
    const MAX_N: usize = 9;
    check_dims(lambda, distances)?;
    let n = distances.len();
    if n > MAX_N {
        return Err(OmpnError::OutOfRange {
            name: "n",
            detail: format!("permutation oracle supports n <= {MAX_N}, got {n}"),
        });
    }
    let w = lambda.weights();
    let mut sigma: Vec<usize> = (0..n).collect();
    let score = |s: &[usize]| -> f64 { s.iter().zip(w).map(|(&i, &l)| l * distances[i]).sum() };
    let mut best = score(&sigma);
    // Heap's algorithm, iterative form.
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                sigma.swap(0, i);
            } else {
                sigma.swap(c[i], i);
            }
            best = best.max(score(&sigma));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(w: &[f64]) -> LambdaVector {
        LambdaVector::new(w.to_vec()).unwrap()
    }

    #[test]
    fn presets() {
        assert_eq!(make_lambda(LambdaPreset::Center, 4).unwrap().weights(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            make_lambda(LambdaPreset::Kcentrum { k: 3 }, 5).unwrap().weights(),
            &[1.0, 1.0, 1.0, 0.0, 0.0]
        );
        assert_eq!(
            make_lambda(LambdaPreset::Centdian { alpha: 0.5 }, 3).unwrap().weights(),
            &[1.0, 0.5, 0.5]
        );
        assert_eq!(make_lambda(LambdaPreset::Median, 2).unwrap().weights(), &[1.0, 1.0]);
    }

    #[test]
    fn preset_errors() {
        assert!(make_lambda(LambdaPreset::Kcentrum { k: 0 }, 5).is_err());
        assert!(make_lambda(LambdaPreset::Kcentrum { k: 6 }, 5).is_err());
        assert!(make_lambda(LambdaPreset::Centdian { alpha: 1.5 }, 3).is_err());
        assert!(make_lambda(LambdaPreset::Median, 0).is_err());
        assert!(matches!(
            LambdaPreset::from_name("bogus", None, None),
            Err(OmpnError::UnknownPreset(_))
        ));
    }

    #[test]
    fn rejects_non_monotone_and_negative() {
        assert!(LambdaVector::new(vec![1.0, 2.0]).is_err());
        assert!(LambdaVector::new(vec![1.0, -0.5]).is_err());
        assert!(LambdaVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(evaluate_om(&lam(&[1., 1., 1.]), &[2., 5., 3.]).unwrap(), 10.0);
        assert_eq!(evaluate_om(&lam(&[1., 0., 0.]), &[2., 5., 3.]).unwrap(), 5.0);
        assert_eq!(evaluate_om(&lam(&[1., 1., 0.]), &[4., 1., 3.]).unwrap(), 7.0);
    }

    #[test]
    fn evaluate_errors() {
        assert!(matches!(
            evaluate_om(&lam(&[1., 1.]), &[1., 2., 3.]),
            Err(OmpnError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            evaluate_om(&lam(&[1., 1.]), &[1., f64::NAN]),
            Err(OmpnError::NanInput { index: 1 })
        ));
    }

    #[test]
    fn k_sum_examples() {
        assert_eq!(k_sum(&[4., 1., 3.], 2).unwrap(), 7.0);
        assert_eq!(k_sum(&[4., 1., 3.], 3).unwrap(), 8.0);
        assert_eq!(k_sum(&[5., 5., 5.], 1).unwrap(), 5.0);
        assert!(k_sum(&[1.0], 2).is_err());
        assert!(k_sum(&[1.0], 0).is_err());
    }

    #[test]
    fn telescoping_examples() {
        assert_eq!(telescoping_weights(&lam(&[3., 2., 1.])).deltas, vec![1., 1., 1.]);
        assert_eq!(telescoping_weights(&lam(&[1., 0., 0.])).deltas, vec![1., 0., 0.]);
        let t = telescoping_weights(&lam(&[1., 1., 1.]));
        assert_eq!(t.deltas, vec![0., 0., 1.]);
        assert_eq!(t.reconstruct(), vec![1., 1., 1.]);
    }

    #[test]
    fn subgradient_examples() {
        assert_eq!(om_subgradient(&lam(&[1., 0.]), &[3., 7.]).unwrap(), vec![0., 1.]);
        assert_eq!(om_subgradient(&lam(&[1., 1.]), &[3., 7.]).unwrap(), vec![1., 1.]);
        // tie between customers 0 and 1 goes to the lower index first
        assert_eq!(om_subgradient(&lam(&[2., 1., 0.]), &[5., 5., 1.]).unwrap(), vec![2., 1., 0.]);
    }

    #[test]
    fn permutation_oracle_examples() {
        assert_eq!(om_via_permutation_oracle(&lam(&[1., 0.]), &[3., 7.]).unwrap(), 7.0);
        assert_eq!(om_via_permutation_oracle(&lam(&[2., 1.]), &[3., 7.]).unwrap(), 17.0);
        assert_eq!(om_via_permutation_oracle(&lam(&[1., 1., 1.]), &[2., 5., 3.]).unwrap(), 10.0);
        assert!(om_via_permutation_oracle(&lam(&[1.0; 10]), &[1.0; 10]).is_err());
    }

    #[test]
    fn sorted_distances_tie_break() {
        let s = sort_distances(&[1.0, 3.0, 3.0, 0.5]).unwrap();
        assert_eq!(s.values, vec![3.0, 3.0, 1.0, 0.5]);
        assert_eq!(s.perm, vec![1, 2, 0, 3]);
    }

    #[test]
    fn prefix_and_suffix_sums() {
        let l = lam(&[1., 1., 1., 1.]);
        assert_eq!(l.prefix_sum(2), 2.0);
        // one-based k: λ_k + … + λ_n = n − k + 1 for the median
        for k in 1..=4 {
            assert_eq!(l.suffix_sum(k), (4 - k + 1) as f64);
        }
    }
}
