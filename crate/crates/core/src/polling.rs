//! Polling-station side: turn a candidate choice into one share per center.

use std::collections::VecDeque;

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::commissioner::{CommissionerError, ElectionConfig};
use crate::encoding::encode_vote;
use crate::shamir::{split_with_polynomial, SecretPolynomial, ShamirError, Share};

/// Where the non-constant polynomial coefficients come from.
#[derive(Debug)]
pub enum CoefficientSource {
    Random(Box<StdRng>),
    /// Pre-set coefficient rows `[r_1, …, r_{k-1}]`, consumed one per ballot.
    /// Only for reproducing known share tables; never secure.
    Fixed(VecDeque<Vec<u64>>),
}

impl CoefficientSource {
    pub fn from_os_rng() -> Self {
        CoefficientSource::Random(Box::new(StdRng::from_os_rng()))
    }

    pub fn seeded(seed: u64) -> Self {
        CoefficientSource::Random(Box::new(StdRng::seed_from_u64(seed)))
    }

    pub fn fixed<I>(rows: I) -> Self
    where
        I: IntoIterator<Item = Vec<u64>>,
    {
        CoefficientSource::Fixed(rows.into_iter().collect())
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, CoefficientSource::Fixed(_))
    }

    fn polynomial(&mut self, config: &ElectionConfig, secret: u64) -> Result<SecretPolynomial, ShamirError> {
        let prime = config.prime;
        let k = config.threshold();
        let secret = prime.element(secret);
        match self {
            CoefficientSource::Random(rng) => Ok(SecretPolynomial::random(secret, k, rng)),
            CoefficientSource::Fixed(rows) => {
                let row = rows
                    .pop_front()
                    .ok_or_else(|| ShamirError::InvalidParams("fixed coefficient rows exhausted".into()))?;
                if row.len() != k - 1 {
                    return Err(ShamirError::InvalidParams(format!(
                        "fixed coefficient row has {} entries, threshold {k} needs {}",
                        row.len(),
                        k - 1
                    )));
                }
                let coeffs = std::iter::once(secret)
                    .chain(row.into_iter().map(|c| prime.element(c)))
                    .collect();
                SecretPolynomial::from_coeffs(coeffs)
            }
        }
    }
}

/// Encodes and splits ballots for one election. The encoded value and the
/// polynomial never leave [`ShareGenerator::share_ballot`].
#[derive(Debug)]
pub struct ShareGenerator {
    config: ElectionConfig,
    source: CoefficientSource,
}

impl ShareGenerator {
    pub fn new(config: ElectionConfig, source: CoefficientSource) -> Self {
        ShareGenerator { config, source }
    }

    pub fn config(&self) -> &ElectionConfig {
        &self.config
    }

    pub fn is_fixed(&self) -> bool {
        self.source.is_fixed()
    }

    /// Shares `(j, f(j))` for `j = 1..=n_cc`.
    pub fn share_ballot(&mut self, candidate: usize) -> Result<Vec<Share>, CommissionerError> {
        let vote = encode_vote(candidate, self.config.layout, self.config.prime)?;
        let poly = self.source.polynomial(&self.config, vote.value().value())?;
        Ok(split_with_polynomial(&poly, self.config.params)?)
    }
}
