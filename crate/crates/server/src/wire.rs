//! JSON bodies exchanged with the service and with center nodes.
//!
//! Field elements and primes travel as decimal strings so that values near
//! 2^63 survive JSON parsers that use doubles.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use sharevote_core::commissioner::SubsetReconstruction;
use sharevote_core::{
    Candidate, CenterId, ElectionConfig, ElectionSetup, PartialSum, Standing, TallyResult, VerificationReport,
};

/// A `u64` written as a decimal string; numbers are also accepted on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decimal(pub u64);

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct DecimalVisitor;

        impl Visitor<'_> for DecimalVisitor {
            type Value = Decimal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an unsigned integer or a decimal string")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Decimal, E> {
                Ok(Decimal(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Decimal, E> {
                if v.is_empty() || !v.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(E::invalid_value(de::Unexpected::Str(v), &self));
                }
                v.parse().map(Decimal).map_err(E::custom)
            }
        }

        d.deserialize_any(DecimalVisitor)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupRequest {
    #[serde(default = "default_election_id")]
    pub election_id: String,
    pub candidates: Vec<Candidate>,
    pub voter_bound: u64,
    pub threshold: usize,
    pub centers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prime: Option<Decimal>,
}

fn default_election_id() -> String {
    "election".to_owned()
}

impl From<ElectionSetup> for SetupRequest {
    fn from(s: ElectionSetup) -> Self {
        SetupRequest {
            election_id: s.election_id,
            candidates: s.candidates,
            voter_bound: s.voter_bound,
            threshold: s.threshold,
            centers: s.centers,
            prime: s.prime.map(Decimal),
        }
    }
}

impl From<SetupRequest> for ElectionSetup {
    fn from(r: SetupRequest) -> Self {
        ElectionSetup {
            election_id: r.election_id,
            voter_bound: r.voter_bound,
            threshold: r.threshold,
            centers: r.centers,
            prime: r.prime.map(|p| p.0),
            block_width: None,
            total_width: None,
            candidates: r.candidates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub index: usize,
    pub name: String,
    pub symbol: String,
}

/// Public election parameters; what the voting panel renders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectionDescriptor {
    pub election_id: String,
    pub candidates: Vec<CandidateEntry>,
    pub candidate_count: usize,
    pub voter_bound: u64,
    pub threshold: usize,
    pub centers: usize,
    pub block_width: u32,
    pub total_width: u32,
    pub prime: Decimal,
}

impl From<&ElectionConfig> for ElectionDescriptor {
    fn from(c: &ElectionConfig) -> Self {
        ElectionDescriptor {
            election_id: c.election_id.clone(),
            candidates: c
                .candidates
                .iter()
                .enumerate()
                .map(|(i, cand)| CandidateEntry {
                    index: i + 1,
                    name: cand.name.clone(),
                    symbol: cand.symbol.clone(),
                })
                .collect(),
            candidate_count: c.candidate_count(),
            voter_bound: c.voter_bound(),
            threshold: c.threshold(),
            centers: c.center_count(),
            block_width: c.layout.block_width(),
            total_width: c.layout.total_width(),
            prime: Decimal(c.prime.value()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallotRequest {
    pub candidate_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallotAck {
    pub ballot_seq: u64,
    pub centers_acked: usize,
    /// Set when some centers have not stored their share yet; the server
    /// completes delivery before the next tally.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pending: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenterSummary {
    pub x: u64,
    pub partial_sum: Decimal,
    pub count: u64,
}

impl From<PartialSum> for CenterSummary {
    fn from(p: PartialSum) -> Self {
        CenterSummary {
            x: p.x,
            partial_sum: Decimal(p.sum.value()),
            count: p.count,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TallyRequest {
    #[serde(default)]
    pub centers: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyResponse {
    pub election_id: String,
    pub constant_term: Decimal,
    pub polynomial: Vec<Decimal>,
    pub candidates: Vec<String>,
    pub counts: Vec<u64>,
    pub centers_used: Vec<u64>,
    pub total_ballots: u64,
    pub standing: Standing,
}

impl TallyResponse {
    pub fn new(config: &ElectionConfig, result: &TallyResult) -> Self {
        TallyResponse {
            election_id: config.election_id.clone(),
            constant_term: Decimal(result.constant_term.value()),
            polynomial: result
                .polynomial
                .coeffs()
                .iter()
                .map(|c| Decimal(c.value()))
                .collect(),
            candidates: config.candidates.iter().map(|c| c.name.clone()).collect(),
            counts: result.counts.as_slice().to_vec(),
            centers_used: result.centers_used.iter().map(|c| c.get()).collect(),
            total_ballots: result.total_ballots,
            standing: result.standing.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetEntry {
    pub centers: Vec<u64>,
    pub constant_term: Decimal,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyResponse {
    pub unanimous: bool,
    pub subsets_possible: String,
    pub subsets_checked: usize,
    pub exhaustive: bool,
    pub consensus: Option<Decimal>,
    pub consensus_counts: Option<Vec<u64>>,
    pub subsets: Vec<SubsetEntry>,
    pub disagreeing: Vec<Vec<u64>>,
    pub suspects: Vec<u64>,
    pub isolated: Option<u64>,
    pub count_mismatch: bool,
    /// Centers that did not answer and were left out of the check.
    pub unreachable: Vec<u64>,
}

fn ids(centers: &[CenterId]) -> Vec<u64> {
    centers.iter().map(|c| c.get()).collect()
}

impl VerifyResponse {
    pub fn new(report: &VerificationReport, unreachable: Vec<u64>) -> Self {
        let disagreeing: Vec<Vec<u64>> = report.disagreeing.iter().map(|s| ids(s)).collect();
        let entry = |s: &SubsetReconstruction| {
            let centers = ids(&s.centers);
            SubsetEntry {
                agrees: !disagreeing.contains(&centers),
                centers,
                constant_term: Decimal(s.constant_term.value()),
            }
        };
        VerifyResponse {
            unanimous: report.unanimous,
            subsets_possible: report.subsets_possible.to_string(),
            subsets_checked: report.subsets.len(),
            exhaustive: report.exhaustive(),
            consensus: report.consensus.map(|c| Decimal(c.value())),
            consensus_counts: report.consensus_counts.as_ref().map(|c| c.as_slice().to_vec()),
            subsets: report.subsets.iter().map(entry).collect(),
            disagreeing,
            suspects: ids(&report.suspects),
            isolated: report.isolated().map(|c| c.get()),
            count_mismatch: report.count_mismatch,
            unreachable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

// Center-node protocol.

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterInit {
    pub election_id: String,
    pub center_id: u64,
    pub prime: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShareDelivery {
    pub ballot_seq: u64,
    pub x: u64,
    pub y: Decimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryOutcome {
    Accepted,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryReceipt {
    pub outcome: DeliveryOutcome,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenterHealth {
    pub center_id: Option<u64>,
}

// Fault injection, only routed when test hooks are enabled.

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptRequest {
    pub offset: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfflineRequest {
    pub offline: bool,
}
