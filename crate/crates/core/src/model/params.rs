use crate::error::{Error, Result};
use crate::model::Grid;

/// Model constants together with the box geometry.
///
/// Construct with any values and call [`Params::validated`]; everything
/// downstream assumes the checks have passed.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    /// Chemotactic strength χ.
    pub chi: f64,
    /// Logistic growth rate r.
    pub r: f64,
    /// Logistic damping μ.
    pub mu: f64,
    /// Signal decay α.
    pub alpha: f64,
    /// Signal secretion β.
    pub beta: f64,
    /// Sensitivity exponent k in the weight v^{-k}.
    pub k: f64,
    /// Box edge lengths, one per axis.
    pub lengths: Vec<f64>,
    /// Cell counts, one per axis.
    pub cells: Vec<usize>,
}

impl Params {
    /// Checks the standing hypotheses and returns `self` unchanged.
    ///
    /// The error message names the first violated constraint.
    pub fn validated(self) -> Result<Self> {
        for (name, value) in [
            ("chi", self.chi),
            ("r", self.r),
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(format!(
                    "{name} must be positive (got {value})"
                )));
            }
        }
        if !(self.k > 0.0 && self.k < 1.0) {
            return Err(Error::validation(format!(
                "k must lie in (0,1) (got {})",
                self.k
            )));
        }
        Grid::new(&self.cells, &self.lengths)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn grid(&self) -> Grid {
        Grid::new(&self.cells, &self.lengths).expect("params were validated")
    }
}

/// Exponents of the monitored functionals
/// `y = ∫u^p + ∫u^p v^{-q}`, `h = y + ∫v^{p+1}` and `∫u^p |∇v|^p v^{-kp}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunctionalSpec {
    pub p: f64,
    pub q: f64,
    /// Whether `p > max{dim, 1/(1-k), 1/k}`, which is when the weighted
    /// gradient functional is evaluated.
    pub gradient_eligible: bool,
}

pub fn validate_functional_spec(p: f64, q: f64, params: &Params) -> Result<FunctionalSpec> {
    if !(p.is_finite() && p > 2.0) {
        return Err(Error::validation(format!("p must exceed 2 (got {p})")));
    }
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::validation(format!("q must be at least 1 (got {q})")));
    }
    if !(q < p - 1.0) {
        return Err(Error::validation(format!(
            "q must be below p-1 (got q = {q}, p-1 = {})",
            p - 1.0
        )));
    }
    let k = params.k;
    let bound = (params.dim() as f64).max(1.0 / (1.0 - k)).max(1.0 / k);
    Ok(FunctionalSpec {
        p,
        q,
        gradient_eligible: p > bound,
    })
}

/// Spatially homogeneous equilibrium `(r/μ, βr/(αμ))`.
pub fn steady_state(params: &Params) -> (f64, f64) {
    let u = params.r / params.mu;
    (u, params.beta * u / params.alpha)
}

#[cfg(test)]
pub(crate) fn test_params(chi: f64, r: f64, mu: f64, alpha: f64, beta: f64, k: f64, dim: usize) -> Params {
    Params {
        chi,
        r,
        mu,
        alpha,
        beta,
        k,
        lengths: vec![1.0; dim],
        cells: vec![8; dim],
    }
}
