//! Election setup, center selection, tally reconstruction and consistency checks.

use std::collections::{BTreeSet, HashMap, HashSet};

use itertools::Itertools;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collection_center::{validate_election_id, CenterError, CenterId, PartialSum};
use crate::encoding::{BlockLayout, EncodingError, TallyCounts};
use crate::field::{next_prime_above, FieldElement, FieldError, FieldPrime};
use crate::shamir::{interpolate_poly, SecretPolynomial, ShamirError, Share, ThresholdParams};

/// Subsets examined by [`verify_consistency`] when no budget is given.
pub const DEFAULT_SUBSET_BUDGET: usize = 252;

#[derive(Debug, Error)]
pub enum CommissionerError {
    #[error("election needs at least one candidate")]
    NoCandidates,
    #[error("prime override {prime} must exceed 2^{width} and the center count {centers}")]
    PrimeTooSmall { prime: u64, width: u32, centers: usize },
    #[error("need {needed} collection centers, only {available} available")]
    NotEnoughCenters { needed: usize, available: usize },
    #[error("centers disagree on ballot count: {0:?}")]
    CountMismatch(Vec<(u64, u64)>),
    #[error("partial sum from unknown center x={0}")]
    UnknownCenter(u64),
    #[error("decoded {decoded} votes from only {ballots} ballots")]
    TallyExceedsBallots { decoded: u64, ballots: u64 },
    #[error("setup document: {0}")]
    Document(String),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Shamir(#[from] ShamirError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Center(#[from] CenterError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    #[serde(default)]
    pub symbol: String,
}

impl Candidate {
    pub fn new(name: impl Into<String>, symbol: impl Into<String>) -> Self {
        Candidate {
            name: name.into(),
            symbol: symbol.into(),
        }
    }
}

/// The setup document: what an operator writes to describe an election.
///
/// `prime` is optional on input. `block_width` and `total_width` are derived;
/// when present they must agree with the derivation, so a resolved config
/// written by [`ElectionConfig::to_toml`] reloads unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectionSetup {
    pub election_id: String,
    pub voter_bound: u64,
    pub threshold: usize,
    pub centers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prime: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_width: Option<u32>,
    pub candidates: Vec<Candidate>,
}

impl ElectionSetup {
    pub fn from_toml(text: &str) -> Result<Self, CommissionerError> {
        toml::from_str(text).map_err(|e| CommissionerError::Document(e.to_string()))
    }

    pub fn resolve(&self) -> Result<ElectionConfig, CommissionerError> {
        let config = setup_election(
            &self.election_id,
            self.candidates.clone(),
            self.voter_bound,
            self.threshold,
            self.centers,
            self.prime,
        )?;
        let derived = [
            ("block_width", self.block_width, config.layout.block_width()),
            ("total_width", self.total_width, config.layout.total_width()),
        ];
        for (key, given, actual) in derived {
            if let Some(given) = given.filter(|&g| g != actual) {
                return Err(CommissionerError::Document(format!(
                    "{key} = {given} does not match the derived value {actual}"
                )));
            }
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElectionConfig {
    pub election_id: String,
    pub candidates: Vec<Candidate>,
    pub params: ThresholdParams,
    pub layout: BlockLayout,
    pub prime: FieldPrime,
}

impl ElectionConfig {
    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    pub fn voter_bound(&self) -> u64 {
        self.layout.voter_bound()
    }

    pub fn threshold(&self) -> usize {
        self.params.threshold()
    }

    pub fn center_count(&self) -> usize {
        self.params.centers()
    }

    pub fn center_ids(&self) -> Vec<CenterId> {
        (1..=self.center_count() as u64)
            .map(|j| CenterId::new(j).expect("j >= 1"))
            .collect()
    }

    pub fn to_setup(&self) -> ElectionSetup {
        ElectionSetup {
            election_id: self.election_id.clone(),
            voter_bound: self.voter_bound(),
            threshold: self.threshold(),
            centers: self.center_count(),
            prime: Some(self.prime.value()),
            block_width: Some(self.layout.block_width()),
            total_width: Some(self.layout.total_width()),
            candidates: self.candidates.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_setup()).expect("setup document serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, CommissionerError> {
        ElectionSetup::from_toml(text)?.resolve()
    }
}

pub fn setup_election(
    election_id: &str,
    candidates: Vec<Candidate>,
    voter_bound: u64,
    threshold: usize,
    centers: usize,
    prime_override: Option<u64>,
) -> Result<ElectionConfig, CommissionerError> {
    validate_election_id(election_id)?;
    if candidates.is_empty() {
        return Err(CommissionerError::NoCandidates);
    }
    let layout = BlockLayout::new(candidates.len(), voter_bound)?;
    let params = ThresholdParams::new(threshold, centers)?;
    let floor = layout.capacity().max(centers as u64);
    let prime = match prime_override {
        Some(p) => {
            let prime = FieldPrime::new(p)?;
            if p <= floor {
                return Err(CommissionerError::PrimeTooSmall {
                    prime: p,
                    width: layout.total_width(),
                    centers,
                });
            }
            prime
        }
        None => next_prime_above(floor)?,
    };
    layout.check_prime(prime)?;
    params.check_prime(prime)?;
    Ok(ElectionConfig {
        election_id: election_id.to_owned(),
        candidates,
        params,
        layout,
        prime,
    })
}

/// Uniform random `k`-subset of `available`, returned in ascending order.
pub fn select_centers<R: Rng + ?Sized>(
    config: &ElectionConfig,
    available: &[CenterId],
    rng: &mut R,
) -> Result<Vec<CenterId>, CommissionerError> {
    let pool: Vec<CenterId> = available
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let k = config.threshold();
    if pool.len() < k {
        return Err(CommissionerError::NotEnoughCenters {
            needed: k,
            available: pool.len(),
        });
    }
    let mut chosen: Vec<CenterId> = index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    chosen.sort();
    Ok(chosen)
}

/// How the decoded counts rank the candidates (1-based indices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Standing {
    NoVotes,
    Winner {
        candidate: usize,
    },
    /// Several candidates share the top count; `leader` is the first of them
    /// in candidate order and is not a declared winner.
    Tie {
        leader: usize,
        tied: Vec<usize>,
    },
}

impl Standing {
    pub fn from_counts(counts: &[u64]) -> Self {
        let top = counts.iter().copied().max().unwrap_or(0);
        if top == 0 {
            return Standing::NoVotes;
        }
        let tied: Vec<usize> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == top)
            .map(|(i, _)| i + 1)
            .collect();
        match tied[..] {
            [candidate] => Standing::Winner { candidate },
            _ => Standing::Tie {
                leader: tied[0],
                tied,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TallyResult {
    pub constant_term: FieldElement,
    pub polynomial: SecretPolynomial,
    pub counts: TallyCounts,
    pub centers_used: Vec<CenterId>,
    pub total_ballots: u64,
    pub standing: Standing,
}

fn common_count(partial_sums: &[PartialSum]) -> Result<u64, CommissionerError> {
    let first = partial_sums.first().map(|p| p.count).unwrap_or(0);
    if partial_sums.iter().any(|p| p.count != first) {
        return Err(CommissionerError::CountMismatch(
            partial_sums.iter().map(|p| (p.x, p.count)).collect(),
        ));
    }
    Ok(first)
}

fn check_partial_sums(config: &ElectionConfig, partial_sums: &[PartialSum]) -> Result<(), CommissionerError> {
    for p in partial_sums {
        if p.x == 0 || p.x > config.center_count() as u64 {
            return Err(CommissionerError::UnknownCenter(p.x));
        }
        if p.sum.prime() != config.prime {
            return Err(FieldError::MismatchedField {
                left: config.prime.value(),
                right: p.sum.prime().value(),
            }
            .into());
        }
    }
    Ok(())
}

/// Interpolates the first `k` partial sums and decodes the constant term.
pub fn tally(config: &ElectionConfig, partial_sums: &[PartialSum]) -> Result<TallyResult, CommissionerError> {
    let k = config.threshold();
    if partial_sums.len() < k {
        return Err(ShamirError::InsufficientShares {
            needed: k,
            got: partial_sums.len(),
        }
        .into());
    }
    check_partial_sums(config, partial_sums)?;
    let total_ballots = common_count(partial_sums)?;
    let used = &partial_sums[..k];
    let points: Vec<Share> = used.iter().map(PartialSum::as_share).collect();
    let polynomial = interpolate_poly(&points)?;
    let constant_term = polynomial.secret();
    let counts = config.layout.decode(constant_term.value())?;
    if counts.total() > total_ballots {
        return Err(CommissionerError::TallyExceedsBallots {
            decoded: counts.total(),
            ballots: total_ballots,
        });
    }
    let standing = Standing::from_counts(counts.as_slice());
    Ok(TallyResult {
        constant_term,
        polynomial,
        counts,
        centers_used: used
            .iter()
            .map(|p| CenterId::new(p.x).expect("checked above"))
            .collect(),
        total_ballots,
        standing,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetReconstruction {
    pub centers: Vec<CenterId>,
    pub constant_term: FieldElement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    /// `C(n_cc, k)` for the centers supplied.
    pub subsets_possible: u128,
    pub subsets: Vec<SubsetReconstruction>,
    pub unanimous: bool,
    /// The constant term the honest subsets agree on, when it can be determined.
    pub consensus: Option<FieldElement>,
    pub consensus_counts: Option<TallyCounts>,
    pub disagreeing: Vec<Vec<CenterId>>,
    /// Centers whose removal leaves a consistent, decodable set of subsets.
    pub suspects: Vec<CenterId>,
    pub count_mismatch: bool,
}

impl VerificationReport {
    pub fn exhaustive(&self) -> bool {
        self.subsets.len() as u128 == self.subsets_possible
    }

    /// The single center blamed for the disagreement, if localization is unique.
    pub fn isolated(&self) -> Option<CenterId> {
        match self.suspects[..] {
            [only] if !self.unanimous => Some(only),
            _ => None,
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

/// A decoded constant is plausible if it fits the layout and accounts for every ballot.
fn plausible(config: &ElectionConfig, constant: FieldElement, ballots: Option<u64>) -> bool {
    match config.layout.decode(constant.value()) {
        Ok(counts) => ballots.is_none_or(|n| counts.total() == n),
        Err(_) => false,
    }
}

/// Reconstructs the constant term from many `k`-subsets and checks agreement.
///
/// With `subset_budget = None` the budget is [`DEFAULT_SUBSET_BUDGET`]. When
/// `C(n_cc, k)` fits the budget every subset is checked in lexicographic
/// order, otherwise a uniform sample of distinct subsets is drawn.
pub fn verify_consistency<R: Rng + ?Sized>(
    config: &ElectionConfig,
    partial_sums: &[PartialSum],
    subset_budget: Option<usize>,
    rng: &mut R,
) -> Result<VerificationReport, CommissionerError> {
    let k = config.threshold();
    if partial_sums.len() < k {
        return Err(ShamirError::InsufficientShares {
            needed: k,
            got: partial_sums.len(),
        }
        .into());
    }
    check_partial_sums(config, partial_sums)?;
    let n = partial_sums.len();
    let budget = subset_budget.unwrap_or(DEFAULT_SUBSET_BUDGET).max(1);
    let possible = binomial(n, k);

    let index_sets: Vec<Vec<usize>> = if possible <= budget as u128 {
        (0..n).combinations(k).collect()
    } else {
        let mut seen = HashSet::with_capacity(budget);
        while seen.len() < budget {
            let mut pick = index::sample(rng, n, k).into_vec();
            pick.sort_unstable();
            seen.insert(pick);
        }
        let mut sets: Vec<_> = seen.into_iter().collect();
        sets.sort();
        sets
    };

    let subsets = index_sets
        .iter()
        .map(|set| {
            let points: Vec<Share> = set.iter().map(|&i| partial_sums[i].as_share()).collect();
            let constant_term = crate::shamir::reconstruct(&points, k)?;
            Ok(SubsetReconstruction {
                centers: set
                    .iter()
                    .map(|&i| CenterId::new(partial_sums[i].x).expect("checked above"))
                    .collect(),
                constant_term,
            })
        })
        .collect::<Result<Vec<_>, CommissionerError>>()?;

    let ballots = common_count(partial_sums).ok();
    let unanimous = subsets.iter().map(|s| s.constant_term).all_equal();

    let mut suspects = Vec::new();
    let mut localized = None;
    if !unanimous {
        for p in partial_sums {
            let j = CenterId::new(p.x).expect("checked above");
            let (with, without): (Vec<_>, Vec<_>) = subsets.iter().partition(|s| s.centers.contains(&j));
            let Some(first) = without.first() else { continue };
            let value = first.constant_term;
            let rest_agree = without.iter().all(|s| s.constant_term == value);
            let all_implicated = with.iter().all(|s| s.constant_term != value);
            if rest_agree && all_implicated && plausible(config, value, ballots) {
                suspects.push(j);
                localized = Some(value);
            }
        }
    }

    let consensus = if unanimous {
        subsets.first().map(|s| s.constant_term)
    } else if suspects.len() == 1 {
        localized
    } else {
        None
    };
    let reference = consensus.or_else(|| {
        let mut freq: HashMap<FieldElement, usize> = HashMap::new();
        for s in &subsets {
            *freq.entry(s.constant_term).or_default() += 1;
        }
        // plurality, ties broken by first appearance
        subsets.iter().map(|s| s.constant_term).max_by_key(|v| {
            (
                freq[v],
                std::cmp::Reverse(subsets.iter().position(|s| s.constant_term == *v)),
            )
        })
    });
    let disagreeing = subsets
        .iter()
        .filter(|s| Some(s.constant_term) != reference)
        .map(|s| s.centers.clone())
        .collect();
    let consensus_counts = consensus.and_then(|c| config.layout.decode(c.value()).ok());

    Ok(VerificationReport {
        subsets_possible: possible,
        subsets,
        unanimous,
        consensus,
        consensus_counts,
        disagreeing,
        suspects,
        count_mismatch: ballots.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    const COLUMN_SUMS: [u64; 5] = [768, 1771, 3284, 5307, 7840];

    fn candidates(c: usize) -> Vec<Candidate> {
        (1..=c)
            .map(|i| Candidate::new(format!("Candidate{i}"), format!("S{i}")))
            .collect()
    }

    fn reference_config() -> ElectionConfig {
        setup_election("demo", candidates(3), 8, 3, 5, Some(9973)).unwrap()
    }

    fn sums(config: &ElectionConfig, pts: &[(u64, u64)], count: u64) -> Vec<PartialSum> {
        pts.iter()
            .map(|&(x, s)| PartialSum {
                x,
                sum: config.prime.element(s),
                count,
            })
            .collect()
    }

    fn table_sums(config: &ElectionConfig) -> Vec<PartialSum> {
        let pts: Vec<_> = (1..=5).zip(COLUMN_SUMS).collect();
        sums(config, &pts, 5)
    }

    #[test]
    fn setup_examples() {
        let config = setup_election("demo", candidates(3), 8, 3, 5, None).unwrap();
        assert_eq!(config.layout.block_width(), 4);
        assert_eq!(config.layout.total_width(), 12);
        assert_eq!(config.prime.value(), 4099);

        let minimal = setup_election("tiny", candidates(1), 1, 2, 2, None).unwrap();
        assert_eq!(minimal.layout.block_width(), 1);
        assert_eq!(minimal.prime.value(), 3);

        assert!(matches!(
            setup_election("wide", candidates(6), 1 << 60, 3, 5, None),
            Err(CommissionerError::Encoding(EncodingError::LayoutTooWide { .. }))
        ));
        assert!(matches!(
            setup_election("demo", candidates(3), 8, 1, 5, None),
            Err(CommissionerError::Shamir(ShamirError::InvalidParams(_)))
        ));
        assert!(matches!(
            setup_election("demo", candidates(3), 8, 3, 5, Some(4093)),
            Err(CommissionerError::PrimeTooSmall { .. })
        ));
        assert!(matches!(
            setup_election("demo", candidates(3), 8, 3, 5, Some(9975)),
            Err(CommissionerError::Field(FieldError::NotPrime(9975)))
        ));
        assert!(matches!(
            setup_election("demo", vec![], 8, 3, 5, None),
            Err(CommissionerError::NoCandidates)
        ));
        assert!(setup_election("bad id", candidates(3), 8, 3, 5, None).is_err());
    }

    #[test]
    fn default_prime_clears_the_center_count() {
        // 2^1 = 2 would leave no room for 5 distinct evaluation points
        let config = setup_election("tiny", candidates(1), 1, 3, 5, None).unwrap();
        assert_eq!(config.prime.value(), 7);
    }

    #[test]
    fn setup_document_round_trip() {
        let text = r#"
election_id = "demo"
voter_bound = 8
threshold = 3
centers = 5

[[candidates]]
name = "Candidate1"
symbol = "A"

[[candidates]]
name = "Candidate2"
symbol = "B"

[[candidates]]
name = "Candidate3"
"#;
        let config = ElectionConfig::from_toml(text).unwrap();
        assert_eq!(config.prime.value(), 4099);
        assert_eq!(config.candidates[2].symbol, "");
        let reloaded = ElectionConfig::from_toml(&config.to_toml()).unwrap();
        assert_eq!(reloaded, config);

        let tampered = config.to_toml().replace("block_width = 4", "block_width = 5");
        assert!(matches!(
            ElectionConfig::from_toml(&tampered),
            Err(CommissionerError::Document(_))
        ));
        assert!(ElectionConfig::from_toml("election_id = 3").is_err());
    }

    #[test]
    fn select_centers_examples() {
        let config = reference_config();
        let all = config.center_ids();
        let a = select_centers(&config, &all, &mut StdRng::seed_from_u64(11)).unwrap();
        let b = select_centers(&config, &all, &mut StdRng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(a.windows(2).all(|w| w[0] < w[1]));

        let full = setup_election("demo", candidates(3), 8, 5, 5, None).unwrap();
        assert_eq!(
            select_centers(&full, &all, &mut StdRng::seed_from_u64(1)).unwrap(),
            all
        );
        assert!(matches!(
            select_centers(&config, &all[..2], &mut StdRng::seed_from_u64(1)),
            Err(CommissionerError::NotEnoughCenters {
                needed: 3,
                available: 2
            })
        ));
    }

    #[test]
    fn select_centers_is_roughly_uniform() {
        let config = reference_config();
        let all = config.center_ids();
        let mut rng = StdRng::seed_from_u64(5);
        let mut freq: HashMap<Vec<CenterId>, usize> = HashMap::new();
        for _ in 0..10_000 {
            *freq
                .entry(select_centers(&config, &all, &mut rng).unwrap())
                .or_default() += 1;
        }
        assert_eq!(freq.len(), 10);
        // each of the 10 subsets expects 1000 hits
        assert!(freq.values().all(|&n| (850..1150).contains(&n)), "{freq:?}");
    }

    #[test]
    fn tally_examples() {
        let config = reference_config();
        let first_three = sums(&config, &[(1, 768), (2, 1771), (3, 3284)], 5);
        let result = tally(&config, &first_three).unwrap();
        let coeffs: Vec<u64> = result.polynomial.coeffs().iter().map(|c| c.value()).collect();
        assert_eq!(coeffs, [275, 238, 255]);
        assert_eq!(result.counts.as_slice(), &[3, 1, 1]);
        assert_eq!(result.total_ballots, 5);
        assert_eq!(result.standing, Standing::Winner { candidate: 1 });
        assert_eq!(
            result.centers_used.iter().map(|c| c.get()).collect::<Vec<_>>(),
            [1, 2, 3]
        );

        let zeros = sums(&config, &[(1, 0), (2, 0), (3, 0)], 0);
        let empty = tally(&config, &zeros).unwrap();
        assert_eq!(empty.counts.as_slice(), &[0, 0, 0]);
        assert_eq!(empty.standing, Standing::NoVotes);

        let alternate = sums(&config, &[(1, 768), (2, 1771), (4, 5307)], 5);
        assert_eq!(tally(&config, &alternate).unwrap().counts.as_slice(), &[3, 1, 1]);
    }

    #[test]
    fn tally_errors() {
        let config = reference_config();
        let mut lagging = sums(&config, &[(1, 768), (2, 1771), (3, 3284)], 5);
        lagging[2].count = 4;
        assert!(matches!(
            tally(&config, &lagging),
            Err(CommissionerError::CountMismatch(_))
        ));
        assert!(matches!(
            tally(&config, &sums(&config, &[(1, 768), (2, 1771)], 5)),
            Err(CommissionerError::Shamir(ShamirError::InsufficientShares { .. }))
        ));
        assert!(matches!(
            tally(&config, &sums(&config, &[(1, 768), (1, 768), (3, 3284)], 5)),
            Err(CommissionerError::Shamir(ShamirError::DuplicateX(1)))
        ));
        assert!(matches!(
            tally(&config, &sums(&config, &[(1, 768), (2, 1771), (6, 3284)], 5)),
            Err(CommissionerError::UnknownCenter(6))
        ));
        // +1 at center 3 shifts the constant by L_3(0) = 1, to 276 = [4, 1, 1]
        let corrupt = sums(&config, &[(1, 768), (2, 1771), (3, 3285)], 5);
        assert!(matches!(
            tally(&config, &corrupt),
            Err(CommissionerError::TallyExceedsBallots {
                decoded: 6,
                ballots: 5
            })
        ));
        let overflow = sums(&config, &[(1, 768), (2, 1771), (3, 3284 + 144)], 5);
        assert!(matches!(
            tally(&config, &overflow),
            Err(CommissionerError::Encoding(EncodingError::BlockOverflow { .. }))
        ));
    }

    #[test]
    fn standing_flags_ties() {
        assert_eq!(Standing::from_counts(&[0, 0]), Standing::NoVotes);
        assert_eq!(
            Standing::from_counts(&[1, 3, 2]),
            Standing::Winner { candidate: 2 }
        );
        assert_eq!(
            Standing::from_counts(&[2, 1, 2]),
            Standing::Tie {
                leader: 1,
                tied: vec![1, 3]
            }
        );
    }

    #[test]
    fn verify_clean_sums() {
        let config = reference_config();
        let report =
            verify_consistency(&config, &table_sums(&config), None, &mut StdRng::seed_from_u64(0)).unwrap();
        assert!(report.unanimous);
        assert!(report.exhaustive());
        assert_eq!(report.subsets.len(), 10);
        assert_eq!(report.consensus.unwrap().value(), 275);
        assert_eq!(report.consensus_counts.as_ref().unwrap().as_slice(), &[3, 1, 1]);
        assert!(report.disagreeing.is_empty());
        assert!(report.suspects.is_empty());
        assert_eq!(report.isolated(), None);
    }

    #[test]
    fn verify_isolates_corrupted_center() {
        let config = reference_config();
        let mut partial = table_sums(&config);
        partial[4].sum = partial[4].sum.try_add(config.prime.one()).unwrap();
        let report = verify_consistency(&config, &partial, None, &mut StdRng::seed_from_u64(0)).unwrap();
        assert!(!report.unanimous);
        let cc5 = CenterId::new(5).unwrap();
        assert_eq!(report.isolated(), Some(cc5));
        assert_eq!(report.consensus.unwrap().value(), 275);
        // C(4,2) = 6 subsets contain center 5
        assert_eq!(report.disagreeing.len(), 6);
        assert!(report.disagreeing.iter().all(|s| s.contains(&cc5)));
    }

    #[test]
    fn verify_with_threshold_equal_to_centers() {
        let config = setup_election("demo", candidates(3), 8, 3, 3, Some(9973)).unwrap();
        let report = verify_consistency(
            &config,
            &sums(&config, &[(1, 768), (2, 1771), (3, 3284)], 5),
            None,
            &mut StdRng::seed_from_u64(0),
        )
        .unwrap();
        assert!(report.unanimous);
        assert_eq!(report.subsets.len(), 1);
    }

    #[test]
    fn verify_samples_when_over_budget() {
        let config = setup_election("demo", candidates(3), 8, 3, 5, Some(9973)).unwrap();
        let report = verify_consistency(
            &config,
            &table_sums(&config),
            Some(4),
            &mut StdRng::seed_from_u64(3),
        )
        .unwrap();
        assert_eq!(report.subsets.len(), 4);
        assert!(!report.exhaustive());
        let distinct: HashSet<_> = report.subsets.iter().map(|s| s.centers.clone()).collect();
        assert_eq!(distinct.len(), 4);
        assert!(report.unanimous);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 3), 10);
        assert_eq!(binomial(7, 3), 35);
        assert_eq!(binomial(10, 5), 252);
        assert_eq!(binomial(3, 4), 0);
    }
}
