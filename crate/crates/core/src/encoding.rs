//! Bit-block ballot encoding.
//!
//! Each candidate owns a `w`-bit block of the encoded value, candidate 1 in
//! the least significant block. A ballot for candidate `j` is the integer
//! `2^((j-1)·w)`. Because `2^w > m`, summing at most `m` ballots never
//! carries from one block into the next, so the blocks of the sum are the
//! per-candidate counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElement, FieldPrime};

/// Widest layout whose encoded values stay in machine range.
pub const MAX_TOTAL_WIDTH: u32 = 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("layout needs {width} bits ({candidates} candidates x {block_width} bits), limit is 62")]
    LayoutTooWide {
        candidates: usize,
        block_width: u32,
        width: u64,
    },
    #[error("candidate count and voter bound must both be positive")]
    EmptyLayout,
    #[error("candidate {index} is outside 1..={candidates}")]
    CandidateOutOfRange { index: usize, candidates: usize },
    #[error("sum {sum} does not fit the {width}-bit layout")]
    SumOutOfRange { sum: u64, width: u32 },
    #[error("candidate {candidate} decodes to {count} votes, above the voter bound {bound}")]
    BlockOverflow {
        candidate: usize,
        count: u64,
        bound: u64,
    },
    #[error("prime {prime} does not exceed 2^{width}")]
    PrimeTooSmall { prime: u64, width: u32 },
}

/// Block geometry for `c` candidates and at most `m` voters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    candidates: usize,
    voter_bound: u64,
    block_width: u32,
}

impl BlockLayout {
    pub fn new(candidates: usize, voter_bound: u64) -> Result<Self, EncodingError> {
        if candidates == 0 || voter_bound == 0 {
            return Err(EncodingError::EmptyLayout);
        }
        let block_width = block_width_for(voter_bound);
        let width = candidates as u64 * block_width as u64;
        if width > MAX_TOTAL_WIDTH as u64 {
            return Err(EncodingError::LayoutTooWide {
                candidates,
                block_width,
                width,
            });
        }
        Ok(BlockLayout {
            candidates,
            voter_bound,
            block_width,
        })
    }

    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn voter_bound(&self) -> u64 {
        self.voter_bound
    }

    pub fn block_width(&self) -> u32 {
        self.block_width
    }

    pub fn total_width(&self) -> u32 {
        self.candidates as u32 * self.block_width
    }

    /// `2^total_width`, the exclusive upper bound of any valid tally.
    pub fn capacity(&self) -> u64 {
        1u64 << self.total_width()
    }

    fn block_mask(&self) -> u64 {
        (1u64 << self.block_width) - 1
    }

    fn block(&self, value: u64, candidate: usize) -> u64 {
        (value >> ((candidate - 1) as u32 * self.block_width)) & self.block_mask()
    }

    /// Integer encoding of one ballot for `candidate` (1-based).
    pub fn ballot_value(&self, candidate: usize) -> Result<u64, EncodingError> {
        if candidate == 0 || candidate > self.candidates {
            return Err(EncodingError::CandidateOutOfRange {
                index: candidate,
                candidates: self.candidates,
            });
        }
        Ok(1u64 << ((candidate - 1) as u32 * self.block_width))
    }

    /// Exactly one block equals 1 and every other block is 0.
    pub fn is_valid_ballot(&self, value: u64) -> bool {
        if value >= self.capacity() || !value.is_power_of_two() {
            return false;
        }
        value.trailing_zeros().is_multiple_of(self.block_width)
    }

    /// Splits a tally into per-candidate counts.
    pub fn decode(&self, sum: u64) -> Result<TallyCounts, EncodingError> {
        if sum >= self.capacity() {
            return Err(EncodingError::SumOutOfRange {
                sum,
                width: self.total_width(),
            });
        }
        let counts: Vec<u64> = (1..=self.candidates).map(|j| self.block(sum, j)).collect();
        if let Some((idx, &count)) = counts
            .iter()
            .enumerate()
            .find(|(_, &count)| count > self.voter_bound)
        {
            return Err(EncodingError::BlockOverflow {
                candidate: idx + 1,
                count,
                bound: self.voter_bound,
            });
        }
        Ok(TallyCounts(counts))
    }

    pub fn check_prime(&self, prime: FieldPrime) -> Result<(), EncodingError> {
        if prime.value() <= self.capacity() {
            return Err(EncodingError::PrimeTooSmall {
                prime: prime.value(),
                width: self.total_width(),
            });
        }
        Ok(())
    }
}

/// `1 + ceil(log2 m)` for `m >= 2`, and 1 for a single voter.
pub fn block_width_for(voter_bound: u64) -> u32 {
    match voter_bound {
        0 | 1 => 1,
        m => 1 + (u64::BITS - (m - 1).leading_zeros()),
    }
}

/// One ballot in field form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodedVote {
    value: FieldElement,
    layout: BlockLayout,
}

impl EncodedVote {
    /// Wraps an arbitrary value, valid or not. Use [`encode_vote`] to build ballots.
    pub fn from_raw(value: FieldElement, layout: BlockLayout) -> Self {
        EncodedVote { value, layout }
    }

    pub fn value(&self) -> FieldElement {
        self.value
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }
}

/// Per-candidate vote counts; index 0 is candidate 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TallyCounts(Vec<u64>);

impl TallyCounts {
    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.0
    }
}

impl From<Vec<u64>> for TallyCounts {
    fn from(counts: Vec<u64>) -> Self {
        TallyCounts(counts)
    }
}

pub fn make_layout(candidates: usize, voter_bound: u64) -> Result<BlockLayout, EncodingError> {
    BlockLayout::new(candidates, voter_bound)
}

pub fn encode_vote(
    candidate: usize,
    layout: BlockLayout,
    prime: FieldPrime,
) -> Result<EncodedVote, EncodingError> {
    layout.check_prime(prime)?;
    let value = layout.ballot_value(candidate)?;
    Ok(EncodedVote {
        value: prime.element(value),
        layout,
    })
}

pub fn decode_tally(sum: FieldElement, layout: BlockLayout) -> Result<TallyCounts, EncodingError> {
    layout.decode(sum.value())
}

pub fn validate_ballot(vote: &EncodedVote) -> bool {
    vote.layout.is_valid_ballot(vote.value.value())
}
