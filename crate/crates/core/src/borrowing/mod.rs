//! Borrowing weight engines.
//!
//! Every method is computed in two stages. A *similarity* matrix depends
//! only on the data and the priors (EB similarities `s_ij`, or the
//! unadjusted Jensen-Shannon `w*_ij`). The method's tuning parameters then
//! turn it into final weights. Tuning reuses the first stage across
//! candidates.

pub mod eb;
pub mod jsd;
pub mod optimize;

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

pub use eb::{geb_weights, peb_weight};
pub use jsd::{jsd_similarity, jsd_weight};

use crate::beta::{BasketData, BetaParams, PriorSpec, WeightMatrix};
use crate::error::{check_len, Error, Result};

/// Empirical-Bayes flavour of the similarity component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EbBase {
    /// Pairwise: each `s_ij` from baskets `i` and `j` alone.
    #[serde(rename = "PEB")]
    Pairwise,
    /// Global: `s_i.` jointly, treating all other baskets as pooled history.
    #[serde(rename = "GEB")]
    Global,
}

/// Weight engine and its tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Method {
    /// No borrowing.
    #[serde(rename = "IM")]
    Independent,
    /// Raw EB similarities used directly as weights.
    #[serde(rename = "PP")]
    PowerPrior { base: EbBase },
    /// `w_ij = min(a n_i / n_-i, 1) * s_ij * 1{|p_i - p_j| < delta}`.
    #[serde(rename = "LocalPP")]
    LocalPp { base: EbBase, a: f64, delta: f64 },
    /// Jensen-Shannon similarity with power `epsilon` and threshold `tau`.
    #[serde(rename = "JSD")]
    Jsd { epsilon: f64, tau: f64 },
}

impl Method {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Method::Independent | Method::PowerPrior { .. } => Ok(()),
            Method::LocalPp { a, delta, .. } => {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(Error::Invalid(format!("a must be nonnegative, got {a}")));
                }
                if !(0.0..=1.0).contains(&delta) {
                    return Err(Error::Invalid(format!("delta must lie in [0, 1], got {delta}")));
                }
                Ok(())
            }
            Method::Jsd { epsilon, tau } => {
                if !(epsilon >= 1.0 && epsilon.is_finite()) {
                    return Err(Error::Invalid(format!("epsilon must be >= 1, got {epsilon}")));
                }
                if !(0.0..=1.0).contains(&tau) {
                    return Err(Error::Invalid(format!("tau must lie in [0, 1], got {tau}")));
                }
                Ok(())
            }
        }
    }

    pub fn similarity_kind(&self) -> SimilarityKind {
        match *self {
            Method::Independent => SimilarityKind::None,
            Method::PowerPrior { base } | Method::LocalPp { base, .. } => match base {
                EbBase::Pairwise => SimilarityKind::Peb,
                EbBase::Global => SimilarityKind::Geb,
            },
            Method::Jsd { .. } => SimilarityKind::Jsd,
        }
    }

    /// Short label such as `local-PP-PEB(a=0.35,delta=0.4)`.
    pub fn label(&self) -> String {
        let base_name = |b: EbBase| match b {
            EbBase::Pairwise => "PEB",
            EbBase::Global => "GEB",
        };
        match *self {
            Method::Independent => "IM".to_string(),
            Method::PowerPrior { base } => format!("PP-{}", base_name(base)),
            Method::LocalPp { base, a, delta } => {
                format!("local-PP-{}(a={a},delta={delta})", base_name(base))
            }
            Method::Jsd { epsilon, tau } => format!("JSD(epsilon={epsilon},tau={tau})"),
        }
    }
}

/// What the first, parameter-free stage computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimilarityKind {
    None,
    Peb,
    Geb,
    Jsd,
}

/// Weight engine plus the per-basket initial priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorrowingConfig {
    pub method: Method,
    pub priors: Vec<PriorSpec>,
}

impl BorrowingConfig {
    pub fn new(method: Method, priors: Vec<PriorSpec>) -> Result<Self> {
        method.validate()?;
        if priors.is_empty() {
            return Err(Error::Invalid("at least one prior is required".into()));
        }
        Ok(BorrowingConfig { method, priors })
    }

    pub fn with_method(&self, method: Method) -> Result<Self> {
        BorrowingConfig::new(method, self.priors.clone())
    }
}

/// Three-component adjustment of a similarity matrix: cap by
/// `min(a n_i / n_-i, 1)`, scale by `s_ij`, and zero pairs whose observed
/// rates differ by `delta` or more. `n_-i` counts the active baskets only.
pub fn three_component_adjust(s: &WeightMatrix, data: &BasketData, a: f64, delta: f64) -> Result<WeightMatrix> {
    check_len("similarity matrix", s.dim(), data.len())?;
    Method::LocalPp {
        base: EbBase::Pairwise,
        a,
        delta,
    }
    .validate()?;
    let mut w = WeightMatrix::identity(data.len());
    for i in 0..data.len() {
        if !data.is_active(i) {
            continue;
        }
        let n_others = data.n_others(i);
        if n_others == 0 {
            continue;
        }
        let cap = (a * data.n()[i] as f64 / n_others as f64).min(1.0);
        let rate_i = data.rate(i);
        for j in data.active_others(i) {
            if (rate_i - data.rate(j)).abs() < delta {
                w.set(i, j, cap * s.get(i, j))?;
            }
        }
    }
    Ok(w)
}

type PairKey = (SimilarityKind, u32, u32, u32, u32, [u64; 4]);

/// Memo of pairwise similarities keyed by the two baskets' counts and
/// priors. Pairwise values depend on nothing else, and simulated trials
/// revisit the same few count pairs constantly.
#[derive(Debug, Default)]
pub struct SimilarityCache {
    map: RwLock<HashMap<PairKey, f64>>,
}

impl SimilarityCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_compute(&self, key: PairKey, compute: impl FnOnce() -> Result<f64>) -> Result<f64> {
        if let Some(v) = self.map.read().ok().and_then(|m| m.get(&key).copied()) {
            return Ok(v);
        }
        let v = compute()?;
        if let Ok(mut m) = self.map.write() {
            m.insert(key, v);
        }
        Ok(v)
    }
}

fn pair_similarity(
    kind: SimilarityKind,
    i: usize,
    j: usize,
    data: &BasketData,
    priors: &[PriorSpec],
    cache: Option<&SimilarityCache>,
) -> Result<f64> {
    let (y, n) = (data.y(), data.n());
    let compute = || match kind {
        SimilarityKind::Peb => peb_weight(y[i], n[i], y[j], n[j], priors[i]),
        SimilarityKind::Jsd => {
            let fi = BetaParams::from_counts(priors[i], y[i], n[i])?;
            let fj = BetaParams::from_counts(priors[j], y[j], n[j])?;
            jsd_similarity(&fi, &fj)
        }
        _ => unreachable!("only pairwise kinds are cached"),
    };
    match cache {
        Some(cache) => {
            let key = (
                kind,
                y[i],
                n[i],
                y[j],
                n[j],
                [
                    priors[i].b1.to_bits(),
                    priors[i].b2.to_bits(),
                    priors[j].b1.to_bits(),
                    priors[j].b2.to_bits(),
                ],
            );
            cache.get_or_compute(key, compute)
        }
        None => compute(),
    }
}

/// First stage: the parameter-free similarity matrix among active baskets.
/// Rows and columns of inactive baskets are zero off the diagonal.
pub fn similarity_matrix(
    kind: SimilarityKind,
    data: &BasketData,
    priors: &[PriorSpec],
    cache: Option<&SimilarityCache>,
) -> Result<WeightMatrix> {
    check_len("priors", priors.len(), data.len())?;
    let dim = data.len();
    let mut s = WeightMatrix::identity(dim);
    match kind {
        SimilarityKind::None => {}
        SimilarityKind::Peb | SimilarityKind::Jsd => {
            for i in (0..dim).filter(|&i| data.is_active(i)) {
                for j in data.active_others(i) {
                    if kind == SimilarityKind::Jsd && j < i {
                        let v = s.get(j, i);
                        s.set(i, j, v)?;
                        continue;
                    }
                    let v = pair_similarity(kind, i, j, data, priors, cache)?;
                    s.set(i, j, v)?;
                }
            }
        }
        SimilarityKind::Geb => {
            if dim >= 2 {
                for i in (0..dim).filter(|&i| data.is_active(i)) {
                    let row = geb_weights(i, data, priors)?;
                    for (j, v) in row.into_iter().enumerate() {
                        if j != i {
                            s.set(i, j, v)?;
                        }
                    }
                }
            }
        }
    }
    Ok(s)
}

/// Second stage: applies the method's tuning parameters to a similarity
/// matrix produced by [`similarity_matrix`] for the same method.
pub fn finalize_weights(method: &Method, similarity: &WeightMatrix, data: &BasketData) -> Result<WeightMatrix> {
    check_len("similarity matrix", similarity.dim(), data.len())?;
    match *method {
        Method::Independent => Ok(WeightMatrix::identity(data.len())),
        Method::PowerPrior { .. } => Ok(similarity.clone()),
        Method::LocalPp { a, delta, .. } => three_component_adjust(similarity, data, a, delta),
        Method::Jsd { epsilon, tau } => {
            WeightMatrix::from_fn(data.len(), |i, j| jsd::sharpen(similarity.get(i, j), epsilon, tau))
        }
    }
}

/// Full weight matrix for `config` on `data`.
pub fn build_weight_matrix(config: &BorrowingConfig, data: &BasketData) -> Result<WeightMatrix> {
    build_weight_matrix_cached(config, data, None)
}

pub fn build_weight_matrix_cached(
    config: &BorrowingConfig,
    data: &BasketData,
    cache: Option<&SimilarityCache>,
) -> Result<WeightMatrix> {
    config.method.validate()?;
    let s = similarity_matrix(config.method.similarity_kind(), data, &config.priors, cache)?;
    finalize_weights(&config.method, &s, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> (BasketData, Vec<PriorSpec>) {
        (
            BasketData::all_active(vec![2, 9, 11, 13, 20], vec![25; 5]).unwrap(),
            PriorSpec::shared(0.5, 0.5, 5).unwrap(),
        )
    }

    #[test]
    fn independent_is_identity() {
        let (data, priors) = example();
        let cfg = BorrowingConfig::new(Method::Independent, priors).unwrap();
        assert_eq!(build_weight_matrix(&cfg, &data).unwrap(), WeightMatrix::identity(5));
    }

    #[test]
    fn adjust_rows_of_global_example() {
        let (data, priors) = example();
        let s = similarity_matrix(SimilarityKind::Geb, &data, &priors, None).unwrap();
        let w = three_component_adjust(&s, &data, 1.0, 0.3).unwrap();
        let row2 = [0.25, 1.0, 0.25, 0.25, 0.0];
        let row1 = [1.0, 0.01, 0.0, 0.0, 0.0];
        for j in 0..5 {
            assert!((w.get(1, j) - row2[j]).abs() <= 0.01, "{:?}", w.row(1));
            assert!((w.get(0, j) - row1[j]).abs() <= 0.01, "{:?}", w.row(0));
        }
    }

    #[test]
    fn zero_a_or_zero_delta_means_no_borrowing() {
        let (data, _) = example();
        let s = WeightMatrix::from_fn(5, |_, _| 1.0).unwrap();
        assert!(three_component_adjust(&s, &data, 0.0, 0.4).unwrap().is_independent());
        assert!(three_component_adjust(&s, &data, 4.0, 0.0).unwrap().is_independent());
    }

    #[test]
    fn indicator_is_strict() {
        let data = BasketData::all_active(vec![2, 4], vec![10, 10]).unwrap();
        let s = WeightMatrix::from_fn(2, |_, _| 1.0).unwrap();
        // |0.2 - 0.4| = 0.2 exactly: not below the threshold.
        let w = three_component_adjust(&s, &data, 1.0, 0.2).unwrap();
        assert_eq!(w.get(0, 1), 0.0);
        let w = three_component_adjust(&s, &data, 1.0, 0.2000001).unwrap();
        assert_eq!(w.get(0, 1), 1.0);
    }

    #[test]
    fn inactive_baskets_neither_give_nor_take() {
        let data = BasketData::new(vec![5, 5, 1], vec![25, 25, 10], vec![true, true, false]).unwrap();
        let priors = PriorSpec::shared(0.15, 0.85, 3).unwrap();
        for method in [
            Method::PowerPrior { base: EbBase::Pairwise },
            Method::PowerPrior { base: EbBase::Global },
            Method::Jsd { epsilon: 1.0, tau: 0.0 },
        ] {
            let cfg = BorrowingConfig::new(method, priors.clone()).unwrap();
            let w = build_weight_matrix(&cfg, &data).unwrap();
            for k in 0..2 {
                assert_eq!(w.get(2, k), 0.0);
                assert_eq!(w.get(k, 2), 0.0);
            }
            assert!(w.get(0, 1) > 0.9, "{method:?}: {:?}", w.to_rows());
        }
    }

    #[test]
    fn cache_returns_identical_values() {
        let (data, priors) = example();
        let cache = SimilarityCache::new();
        for kind in [SimilarityKind::Peb, SimilarityKind::Jsd] {
            let plain = similarity_matrix(kind, &data, &priors, None).unwrap();
            let first = similarity_matrix(kind, &data, &priors, Some(&cache)).unwrap();
            let second = similarity_matrix(kind, &data, &priors, Some(&cache)).unwrap();
            assert_eq!(plain, first);
            assert_eq!(first, second);
        }
        assert!(!cache.is_empty());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let priors = PriorSpec::shared(1.0, 1.0, 2).unwrap();
        for m in [
            Method::LocalPp {
                base: EbBase::Pairwise,
                a: -1.0,
                delta: 0.3,
            },
            Method::LocalPp {
                base: EbBase::Pairwise,
                a: 1.0,
                delta: 1.3,
            },
            Method::Jsd { epsilon: 0.5, tau: 0.3 },
            Method::Jsd {
                epsilon: 2.0,
                tau: -0.3,
            },
        ] {
            assert!(BorrowingConfig::new(m, priors.clone()).is_err(), "{m:?}");
        }
    }
}
