//! The reference five-ballot election.
//!
//! Three candidates, blocks sized for eight voters, a (3, 5) threshold and
//! fixed polynomial coefficients, so every share is reproducible. The
//! prime is pinned to 9973: the default for a 12-bit layout (4099) is below
//! the column sums of centers 4 and 5, which would then print reduced.

use std::fmt::Write;

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::collection_center::{CenterId, CenterState, LogHeader, PartialSum};
use crate::commissioner::{
    setup_election, tally, verify_consistency, Candidate, CommissionerError, ElectionConfig, TallyResult,
    VerificationReport,
};
use crate::polling::{CoefficientSource, ShareGenerator};
use crate::shamir::Share;

pub const ELECTION_ID: &str = "reference";
pub const CANDIDATES: usize = 3;
pub const VOTER_BOUND: u64 = 8;
pub const THRESHOLD: usize = 3;
pub const CENTERS: usize = 5;
pub const PRIME: u64 = 9973;

/// Candidate chosen by each of the five voters.
pub const BALLOTS: [usize; 5] = [1, 3, 1, 2, 1];

/// `[r_1, r_2]` for each ballot's share polynomial.
pub const COEFFICIENTS: [[u64; 2]; 5] = [[46, 44], [21, 50], [13, 56], [63, 34], [95, 71]];

/// Centers whose partial sums feed the reported tally.
pub const TALLY_CENTERS: [u64; 3] = [1, 2, 3];

#[derive(Debug, Clone)]
pub struct WorkedExample {
    pub config: ElectionConfig,
    /// Encoded value of each ballot.
    pub secrets: Vec<u64>,
    /// `shares[i][j]` is share `j + 1` of ballot `i + 1`.
    pub shares: Vec<Vec<Share>>,
    pub partial_sums: Vec<PartialSum>,
    pub tally: TallyResult,
    pub verification: VerificationReport,
}

pub fn reference_config() -> Result<ElectionConfig, CommissionerError> {
    let candidates = (1..=CANDIDATES)
        .map(|i| Candidate::new(format!("Candidate{i}"), format!("symbol{i}")))
        .collect();
    setup_election(
        ELECTION_ID,
        candidates,
        VOTER_BOUND,
        THRESHOLD,
        CENTERS,
        Some(PRIME),
    )
}

pub fn run() -> Result<WorkedExample, CommissionerError> {
    let config = reference_config()?;
    let mut generator = ShareGenerator::new(
        config.clone(),
        CoefficientSource::fixed(COEFFICIENTS.iter().map(|row| row.to_vec())),
    );
    let mut centers = config
        .center_ids()
        .into_iter()
        .map(|id| Ok(CenterState::new(LogHeader::new(ELECTION_ID, id, config.prime)?)))
        .collect::<Result<Vec<_>, CommissionerError>>()?;

    let mut secrets = Vec::with_capacity(BALLOTS.len());
    let mut shares = Vec::with_capacity(BALLOTS.len());
    for (seq, &candidate) in (1u64..).zip(BALLOTS.iter()) {
        secrets.push(config.layout.ballot_value(candidate)?);
        let row = generator.share_ballot(candidate)?;
        for (center, share) in centers.iter_mut().zip(&row) {
            center.accept_share(seq, *share)?;
        }
        shares.push(row);
    }

    let partial_sums: Vec<PartialSum> = centers.iter().map(CenterState::report_partial_sum).collect();
    let chosen: Vec<PartialSum> = TALLY_CENTERS
        .iter()
        .map(|&x| partial_sums[x as usize - 1])
        .collect();
    let tally = tally(&config, &chosen)?;
    let verification = verify_consistency(&config, &partial_sums, None, &mut StdRng::seed_from_u64(0))?;

    Ok(WorkedExample {
        config,
        secrets,
        shares,
        partial_sums,
        tally,
        verification,
    })
}

impl WorkedExample {
    /// Ballot-by-center grid of `(x,y)` shares plus a column-sum row.
    pub fn share_grid(&self) -> String {
        let mut out = String::new();
        let ids: Vec<CenterId> = self.config.center_ids();
        let _ = write!(out, "{:<8}", "Ballot");
        for id in &ids {
            let _ = write!(out, " {:>10}", id.to_string());
        }
        out.push('\n');
        for (i, row) in self.shares.iter().enumerate() {
            let _ = write!(out, "{:<8}", format!("Voter{}", i + 1));
            for share in row {
                let _ = write!(out, " {:>10}", format!("({},{})", share.x, share.y));
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<8}", "Sum");
        for p in &self.partial_sums {
            let _ = write!(out, " {:>10}", p.sum.to_string());
        }
        out.push('\n');
        out
    }
}
