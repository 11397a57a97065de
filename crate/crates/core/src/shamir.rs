//! (k, n) threshold sharing over a prime field.
//!
//! Center `j` always receives the evaluation at `x = j`. Shares of
//! different secrets add pointwise into shares of the sum, which is what the
//! collection centers rely on when they accumulate partial sums.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{poly_eval, FieldElement, FieldError, FieldPrime};

/// Smallest threshold accepted; `k = 1` would hand every vote to a single center.
pub const MIN_THRESHOLD: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShamirError {
    #[error("invalid threshold parameters: {0}")]
    InvalidParams(String),
    #[error("need at least {needed} shares, got {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("evaluation point x={0} appears more than once")]
    DuplicateX(u64),
    #[error("evaluation point x=0 would reveal the secret")]
    ZeroX,
    #[error("share vectors have different lengths ({left} vs {right})")]
    ShapeMismatch { left: usize, right: usize },
    #[error("share vectors disagree at position {position} (x={left} vs x={right})")]
    MismatchedX { position: usize, left: u64, right: u64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdParams {
    k: usize,
    n_cc: usize,
}

impl ThresholdParams {
    pub fn new(k: usize, n_cc: usize) -> Result<Self, ShamirError> {
        if k < MIN_THRESHOLD {
            return Err(ShamirError::InvalidParams(format!(
                "threshold k={k} is below the minimum of {MIN_THRESHOLD}"
            )));
        }
        if n_cc < k {
            return Err(ShamirError::InvalidParams(format!(
                "{n_cc} collection centers cannot satisfy threshold k={k}"
            )));
        }
        Ok(ThresholdParams { k, n_cc })
    }

    pub fn threshold(&self) -> usize {
        self.k
    }

    pub fn centers(&self) -> usize {
        self.n_cc
    }

    /// Evaluation points must be distinct and nonzero in the field.
    pub fn check_prime(&self, prime: FieldPrime) -> Result<(), ShamirError> {
        if self.n_cc as u64 >= prime.value() {
            return Err(ShamirError::InvalidParams(format!(
                "{} centers need a prime above {}, got {prime}",
                self.n_cc, self.n_cc
            )));
        }
        Ok(())
    }
}

/// A point `(x, f(x))` of a secret polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Share {
    pub x: u64,
    pub y: FieldElement,
}

impl Share {
    pub fn new(x: u64, y: FieldElement) -> Self {
        Share { x, y }
    }
}

/// Coefficients `[secret, r_1, …, r_{k-1}]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretPolynomial {
    coeffs: Vec<FieldElement>,
}

impl SecretPolynomial {
    /// Draws the `k - 1` higher coefficients uniformly from the field.
    pub fn random<R: Rng + ?Sized>(secret: FieldElement, k: usize, rng: &mut R) -> Self {
        let prime = secret.prime();
        let mut coeffs = Vec::with_capacity(k);
        coeffs.push(secret);
        coeffs.extend((1..k).map(|_| prime.element(rng.random_range(0..prime.value()))));
        SecretPolynomial { coeffs }
    }

    pub fn from_coeffs(coeffs: Vec<FieldElement>) -> Result<Self, ShamirError> {
        let first = coeffs.first().ok_or(FieldError::EmptyPolynomial)?;
        if let Some(other) = coeffs.iter().find(|c| c.prime() != first.prime()) {
            return Err(FieldError::MismatchedField {
                left: first.prime().value(),
                right: other.prime().value(),
            }
            .into());
        }
        Ok(SecretPolynomial { coeffs })
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn secret(&self) -> FieldElement {
        self.coeffs[0]
    }

    pub fn prime(&self) -> FieldPrime {
        self.coeffs[0].prime()
    }

    pub fn eval(&self, x: u64) -> FieldElement {
        poly_eval(&self.coeffs, self.prime().element(x)).expect("coefficients share one field")
    }

    /// Shares for centers `1..=n_cc`.
    pub fn shares(&self, n_cc: usize) -> Vec<Share> {
        (1..=n_cc as u64).map(|x| Share::new(x, self.eval(x))).collect()
    }
}

pub fn split<R: Rng + ?Sized>(
    secret: FieldElement,
    params: ThresholdParams,
    rng: &mut R,
) -> Result<Vec<Share>, ShamirError> {
    params.check_prime(secret.prime())?;
    Ok(SecretPolynomial::random(secret, params.threshold(), rng).shares(params.centers()))
}

/// Shares from caller-supplied coefficients, for reproducing fixed test vectors.
pub fn split_with_polynomial(
    poly: &SecretPolynomial,
    params: ThresholdParams,
) -> Result<Vec<Share>, ShamirError> {
    if poly.coeffs().len() != params.threshold() {
        return Err(ShamirError::InvalidParams(format!(
            "polynomial has {} coefficients, threshold is {}",
            poly.coeffs().len(),
            params.threshold()
        )));
    }
    params.check_prime(poly.prime())?;
    Ok(poly.shares(params.centers()))
}

fn check_points(shares: &[Share]) -> Result<FieldPrime, ShamirError> {
    let prime = shares
        .first()
        .map(|s| s.y.prime())
        .ok_or(ShamirError::InsufficientShares { needed: 1, got: 0 })?;
    let mut seen = HashSet::with_capacity(shares.len());
    for share in shares {
        if share.y.prime() != prime {
            return Err(FieldError::MismatchedField {
                left: prime.value(),
                right: share.y.prime().value(),
            }
            .into());
        }
        let x = share.x % prime.value();
        if x == 0 {
            return Err(ShamirError::ZeroX);
        }
        if !seen.insert(x) {
            return Err(ShamirError::DuplicateX(share.x));
        }
    }
    Ok(prime)
}

/// Lagrange basis values `L_i(0)` for the given evaluation points.
pub fn lagrange_weights_at_zero(xs: &[u64], prime: FieldPrime) -> Result<Vec<FieldElement>, ShamirError> {
    xs.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let xi = prime.element(xi);
            let mut num = prime.one();
            let mut den = prime.one();
            for (m, &xm) in xs.iter().enumerate() {
                if m == i {
                    continue;
                }
                let xm = prime.element(xm);
                num = num.try_mul(xm)?;
                den = den.try_mul(xm.try_sub(xi)?)?;
            }
            Ok(num.try_mul(den.inv()?)?)
        })
        .collect()
}

/// Recovers `f(0)` from the first `k` shares.
pub fn reconstruct(shares: &[Share], k: usize) -> Result<FieldElement, ShamirError> {
    let needed = k.max(MIN_THRESHOLD);
    if shares.len() < needed {
        return Err(ShamirError::InsufficientShares {
            needed,
            got: shares.len(),
        });
    }
    let prime = check_points(shares)?;
    let used = &shares[..needed];
    let xs: Vec<u64> = used.iter().map(|s| s.x).collect();
    let weights = lagrange_weights_at_zero(&xs, prime)?;
    used.iter()
        .zip(weights)
        .try_fold(prime.zero(), |acc, (share, w)| {
            Ok(acc.try_add(share.y.try_mul(w)?)?)
        })
}

/// The unique polynomial of degree below `shares.len()` through every point.
pub fn interpolate_poly(shares: &[Share]) -> Result<SecretPolynomial, ShamirError> {
    let prime = check_points(shares)?;
    let n = shares.len();
    let mut result = vec![prime.zero(); n];
    for (i, si) in shares.iter().enumerate() {
        let xi = prime.element(si.x);
        // basis numerator prod_{m != i} (x - x_m), built up coefficient by coefficient
        let mut basis = vec![prime.one()];
        let mut denom = prime.one();
        for (m, sm) in shares.iter().enumerate() {
            if m == i {
                continue;
            }
            let xm = prime.element(sm.x);
            let mut next = vec![prime.zero(); basis.len() + 1];
            for (d, &b) in basis.iter().enumerate() {
                next[d + 1] = next[d + 1].try_add(b)?;
                next[d] = next[d].try_add(b.try_mul(-xm)?)?;
            }
            basis = next;
            denom = denom.try_mul(xi.try_sub(xm)?)?;
        }
        let scale = si.y.try_mul(denom.inv()?)?;
        for (acc, b) in result.iter_mut().zip(basis) {
            *acc = acc.try_add(b.try_mul(scale)?)?;
        }
    }
    SecretPolynomial::from_coeffs(result)
}

/// Position-wise sum of two share vectors held by the same centers.
pub fn add_share_vectors(a: &[Share], b: &[Share]) -> Result<Vec<Share>, ShamirError> {
    if a.len() != b.len() {
        return Err(ShamirError::ShapeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(position, (l, r))| {
            if l.x != r.x {
                return Err(ShamirError::MismatchedX {
                    position,
                    left: l.x,
                    right: r.x,
                });
            }
            Ok(Share::new(l.x, l.y.try_add(r.y)?))
        })
        .collect()
}
