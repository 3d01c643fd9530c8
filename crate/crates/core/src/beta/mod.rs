//! Beta-binomial building blocks: priors, basket counts, weight matrices and
//! the closed-form power-prior posterior.

pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Initial `Beta(b1, b2)` prior for one basket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub b1: f64,
    pub b2: f64,
}

impl PriorSpec {
    pub fn new(b1: f64, b2: f64) -> Result<Self> {
        if !(b1 > 0.0 && b1.is_finite() && b2 > 0.0 && b2.is_finite()) {
            return Err(Error::Invalid(format!(
                "prior shapes must be positive and finite, got ({b1}, {b2})"
            )));
        }
        Ok(PriorSpec { b1, b2 })
    }

    /// The same prior repeated for `baskets` baskets.
    pub fn shared(b1: f64, b2: f64, baskets: usize) -> Result<Vec<Self>> {
        let prior = PriorSpec::new(b1, b2)?;
        Ok(vec![prior; baskets])
    }
}

/// Shape pair of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    shape1: f64,
    shape2: f64,
}

impl BetaParams {
    pub fn new(shape1: f64, shape2: f64) -> Result<Self> {
        if !(shape1 > 0.0 && shape1.is_finite() && shape2 > 0.0 && shape2.is_finite()) {
            return Err(Error::Invalid(format!(
                "beta shapes must be positive and finite, got ({shape1}, {shape2})"
            )));
        }
        Ok(BetaParams { shape1, shape2 })
    }

    /// Posterior from a single basket with no borrowing.
    pub fn from_counts(prior: PriorSpec, y: u32, n: u32) -> Result<Self> {
        if y > n {
            return Err(Error::Invalid(format!("responses {y} exceed sample size {n}")));
        }
        BetaParams::new(prior.b1 + y as f64, prior.b2 + (n - y) as f64)
    }

    pub fn shape1(&self) -> f64 {
        self.shape1
    }

    pub fn shape2(&self) -> f64 {
        self.shape2
    }

    pub fn mean(&self) -> f64 {
        self.shape1 / (self.shape1 + self.shape2)
    }

    /// Effective sample size, the sum of the two shapes.
    pub fn ess(&self) -> f64 {
        self.shape1 + self.shape2
    }

    pub fn std_dev(&self) -> f64 {
        let s = self.shape1 + self.shape2;
        (self.shape1 * self.shape2 / (s * s * (s + 1.0))).sqrt()
    }

    /// Log density at `x` in (0, 1); `-inf` outside.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return f64::NEG_INFINITY;
        }
        (self.shape1 - 1.0) * x.ln() + (self.shape2 - 1.0) * (-x).ln_1p() - special::ln_beta(self.shape1, self.shape2)
    }
}

/// Responses, enrolment and final-analysis membership per basket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasketData {
    y: Vec<u32>,
    n: Vec<u32>,
    active: Vec<bool>,
}

impl BasketData {
    pub fn new(y: Vec<u32>, n: Vec<u32>, active: Vec<bool>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Invalid("basket data needs at least one basket".into()));
        }
        check_len("n", n.len(), y.len())?;
        check_len("active", active.len(), y.len())?;
        for (i, (&yi, &ni)) in y.iter().zip(&n).enumerate() {
            if ni == 0 {
                return Err(Error::Invalid(format!("basket {i}: sample size must be positive")));
            }
            if yi > ni {
                return Err(Error::Invalid(format!(
                    "basket {i}: responses {yi} exceed sample size {ni}"
                )));
            }
        }
        Ok(BasketData { y, n, active })
    }

    /// All baskets in the final-analysis set.
    pub fn all_active(y: Vec<u32>, n: Vec<u32>) -> Result<Self> {
        let active = vec![true; y.len()];
        BasketData::new(y, n, active)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[u32] {
        &self.y
    }

    pub fn n(&self) -> &[u32] {
        &self.n
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    /// Observed response rate `y_i / n_i`.
    pub fn rate(&self, i: usize) -> f64 {
        self.y[i] as f64 / self.n[i] as f64
    }

    /// Active baskets other than `i`.
    pub fn active_others(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&j| j != i && self.active[j])
    }

    /// Sample size of the active baskets other than `i`.
    pub fn n_others(&self, i: usize) -> u32 {
        self.active_others(i).map(|j| self.n[j]).sum()
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::Index {
                index: i,
                len: self.len(),
            })
        }
    }
}

/// Square matrix of borrowing weights with a unit diagonal; row `i` holds
/// the weights basket `i` applies to the other baskets.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    dim: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    /// No borrowing: ones on the diagonal, zeros elsewhere.
    pub fn identity(dim: usize) -> Self {
        let mut w = vec![0.0; dim * dim];
        for i in 0..dim {
            w[i * dim + i] = 1.0;
        }
        WeightMatrix { dim, w }
    }

    /// Builds a matrix from off-diagonal entries; the diagonal is set to 1
    /// regardless of what `f` returns there.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = WeightMatrix::identity(dim);
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    m.set(i, j, f(i, j))?;
                }
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for row in rows {
            check_len("weight matrix row", row.len(), dim)?;
        }
        for (i, row) in rows.iter().enumerate() {
            if row[i] != 1.0 {
                return Err(Error::Invalid(format!(
                    "weight matrix diagonal must be 1, row {i} has {}",
                    row[i]
                )));
            }
        }
        WeightMatrix::from_fn(dim, |i, j| rows[i][j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.dim + j]
    }

    /// Sets an off-diagonal weight, which must lie in [0, 1].
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i == j {
            return Err(Error::Invalid("diagonal weights are fixed at 1".into()));
        }
        if i >= self.dim || j >= self.dim {
            return Err(Error::Index {
                index: i.max(j),
                len: self.dim,
            });
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Invalid(format!("weight ({i},{j}) = {value} outside [0, 1]")));
        }
        self.w[i * self.dim + j] = value;
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// True when every off-diagonal weight is zero.
    pub fn is_independent(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0.0))
    }
}

impl Serialize for WeightMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WeightMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        WeightMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

fn check_positive(op: &'static str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            op,
            format!("{name} must be positive and finite, got {v}"),
        ))
    }
}

/// `ln Be(a, b)`.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    check_positive("log_beta", "a", a)?;
    check_positive("log_beta", "b", b)?;
    Ok(special::ln_beta(a, b))
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    check_positive("regularized_inc_beta", "a", a)?;
    check_positive("regularized_inc_beta", "b", b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain("regularized_inc_beta", format!("x = {x} outside [0, 1]")));
    }
    special::inc_beta_pair(x, a, b)
        .map(|(lower, _)| lower)
        .ok_or_else(|| Error::numeric("regularized_inc_beta", format!("no convergence at x={x}, a={a}, b={b}")))
}

/// Posterior probability that the response rate exceeds `p0`,
/// `1 - I_{p0}(shape1, shape2)`.
pub fn prob_exceed(params: &BetaParams, p0: f64) -> Result<f64> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::domain("prob_exceed", format!("p0 = {p0} outside (0, 1)")));
    }
    special::inc_beta_pair(p0, params.shape1, params.shape2)
        .map(|(_, upper)| upper)
        .ok_or_else(|| {
            Error::numeric(
                "prob_exceed",
                format!(
                    "incomplete beta did not converge for Beta({}, {}) at {p0}",
                    params.shape1, params.shape2
                ),
            )
        })
}

/// Closed-form power-prior posterior for basket `i`.
///
/// Only active baskets other than `i` contribute, each with its weight
/// `w_ij` applied to both responses and non-responses.
pub fn posterior_params(
    i: usize,
    data: &BasketData,
    priors: &[PriorSpec],
    weights: &WeightMatrix,
) -> Result<BetaParams> {
    data.check_index(i)?;
    check_len("priors", priors.len(), data.len())?;
    check_len("weight matrix", weights.dim(), data.len())?;
    let (y, n) = (data.y(), data.n());
    let mut borrowed_resp = 0.0;
    let mut borrowed_non = 0.0;
    for j in data.active_others(i) {
        let w = weights.get(i, j);
        borrowed_resp += w * y[j] as f64;
        borrowed_non += w * (n[j] - y[j]) as f64;
    }
    let prior = priors[i];
    BetaParams::new(
        prior.b1 + y[i] as f64 + borrowed_resp,
        prior.b2 + (n[i] - y[i]) as f64 + borrowed_non,
    )
}

/// Borrowed subjects relative to the basket's own sample size,
/// `sum_{k != i} w_ik n_k / n_i`, over the active baskets.
pub fn borrowing_factor(i: usize, data: &BasketData, weights: &WeightMatrix) -> Result<f64> {
    data.check_index(i)?;
    check_len("weight matrix", weights.dim(), data.len())?;
    let borrowed: f64 = data
        .active_others(i)
        .map(|k| weights.get(i, k) * data.n()[k] as f64)
        .sum();
    Ok(borrowed / data.n()[i] as f64)
}
