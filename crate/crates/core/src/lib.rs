//! Secret-shared election tallying.
//!
//! Ballots are encoded as one bit block per candidate, split into Shamir
//! shares over a prime field and handed to collection centers. Each center
//! only ever sums the shares it holds; the commissioner interpolates `k`
//! of those partial sums and decodes the blocks of the constant term into
//! per-candidate counts.

pub mod collection_center;
pub mod commissioner;
pub mod encoding;
pub mod field;
pub mod polling;
pub mod shamir;
pub mod worked_example;

pub use collection_center::{
    recover_state, AcceptOutcome, CenterError, CenterId, CenterState, CollectionCenter, LogHeader, PartialSum,
};
pub use commissioner::{
    select_centers, setup_election, tally, verify_consistency, Candidate, CommissionerError, ElectionConfig,
    ElectionSetup, Standing, TallyResult, VerificationReport,
};
pub use encoding::{
    decode_tally, encode_vote, make_layout, validate_ballot, BlockLayout, EncodedVote, TallyCounts,
};
pub use field::{next_prime_above, poly_eval, FieldElement, FieldError, FieldPrime};
pub use polling::{CoefficientSource, ShareGenerator};
pub use shamir::{
    add_share_vectors, interpolate_poly, reconstruct, split, SecretPolynomial, Share, ThresholdParams,
};
