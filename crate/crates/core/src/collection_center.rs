//! Collection-center nodes.
//!
//! A center receives share `j` of every ballot, appends it to a durable share
//! log and keeps the running partial sum of everything it has stored. The
//! partial sum is the only value a center ever reports.
//!
//! Share log format (UTF-8, `\n` line endings):
//!
//! ```text
//! sharevote-share-log v1 election_id=<id> center_id=<j> prime=<p>
//! <ballot_seq> <x> <y>
//! <ballot_seq> <x> <y>
//! ```
//!
//! All numbers are unsigned decimal without leading `+` or padding. A final
//! line lacking its `\n` is a write torn by a crash; it was never
//! acknowledged and is dropped on recovery.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldPrime};
use crate::shamir::Share;

pub const LOG_MAGIC: &str = "sharevote-share-log";
pub const LOG_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum CenterError {
    #[error("share for x={got} delivered to center {expected}")]
    WrongCenter { expected: u64, got: u64 },
    #[error("ballot {seq} replayed with a different share value")]
    ConflictingReplay { seq: u64 },
    #[error("share log record #{record} is corrupt: {reason}")]
    CorruptLog { record: usize, reason: String },
    #[error("share log header is corrupt: {0}")]
    CorruptHeader(String),
    #[error("share log belongs to {found}, expected {expected}")]
    HeaderMismatch { expected: String, found: String },
    #[error("invalid election id {0:?}: use 1-64 characters from [A-Za-z0-9._-]")]
    InvalidElectionId(String),
    #[error("center id must be at least 1")]
    ZeroCenterId,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("share log I/O failed: {0}")]
    Io(#[from] io::Error),
}

pub fn validate_election_id(id: &str) -> Result<(), CenterError> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'));
    if ok {
        Ok(())
    } else {
        Err(CenterError::InvalidElectionId(id.to_owned()))
    }
}

/// 1-based center index; equals the x-coordinate of the shares it stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CenterId(u64);

impl CenterId {
    pub fn new(j: u64) -> Result<Self, CenterError> {
        if j == 0 {
            Err(CenterError::ZeroCenterId)
        } else {
            Ok(CenterId(j))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl fmt::Display for CenterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CC{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogHeader {
    pub election_id: String,
    pub center: CenterId,
    pub prime: FieldPrime,
}

impl LogHeader {
    pub fn new(election_id: &str, center: CenterId, prime: FieldPrime) -> Result<Self, CenterError> {
        validate_election_id(election_id)?;
        Ok(LogHeader {
            election_id: election_id.to_owned(),
            center,
            prime,
        })
    }

    pub fn to_line(&self) -> String {
        format!(
            "{LOG_MAGIC} {LOG_VERSION} election_id={} center_id={} prime={}\n",
            self.election_id,
            self.center.get(),
            self.prime
        )
    }

    pub fn parse(line: &str) -> Result<Self, CenterError> {
        let bad = |why: &str| CenterError::CorruptHeader(format!("{why}: {line:?}"));
        let mut parts = line.split(' ');
        if parts.next() != Some(LOG_MAGIC) || parts.next() != Some(LOG_VERSION) {
            return Err(bad("unknown magic or version"));
        }
        let mut field = |key: &str| {
            parts
                .next()
                .and_then(|kv| kv.strip_prefix(key))
                .and_then(|kv| kv.strip_prefix('='))
                .ok_or_else(|| bad(&format!("missing {key}")))
        };
        let election_id = field("election_id")?.to_owned();
        let center = parse_decimal(field("center_id")?).ok_or_else(|| bad("bad center_id"))?;
        let prime = parse_decimal(field("prime")?).ok_or_else(|| bad("bad prime"))?;
        if parts.next().is_some() {
            return Err(bad("trailing fields"));
        }
        validate_election_id(&election_id)?;
        Ok(LogHeader {
            election_id,
            center: CenterId::new(center)?,
            prime: FieldPrime::new(prime)?,
        })
    }
}

impl fmt::Display for LogHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "election {} / {} / p={}",
            self.election_id, self.center, self.prime
        )
    }
}

/// Canonical unsigned decimal: digits only, no leading zeros except "0".
fn parse_decimal(s: &str) -> Option<u64> {
    let canonical =
        !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) && !(s.len() > 1 && s.starts_with('0'));
    if canonical {
        s.parse().ok()
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogRecord {
    pub ballot_seq: u64,
    pub y: FieldElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptOutcome {
    Accepted,
    /// The ballot was already stored; nothing changed.
    Duplicate,
}

/// What a center reveals: its evaluation point, partial sum and ballot count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartialSum {
    pub x: u64,
    pub sum: FieldElement,
    pub count: u64,
}

impl PartialSum {
    pub fn as_share(&self) -> Share {
        Share::new(self.x, self.sum)
    }
}

/// In-memory state of one center, rebuilt from its log on recovery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CenterState {
    header: LogHeader,
    share_log: Vec<LogRecord>,
    index: HashMap<u64, FieldElement>,
    partial_sum: FieldElement,
}

impl CenterState {
    pub fn new(header: LogHeader) -> Self {
        let partial_sum = header.prime.zero();
        CenterState {
            header,
            share_log: Vec::new(),
            index: HashMap::new(),
            partial_sum,
        }
    }

    pub fn header(&self) -> &LogHeader {
        &self.header
    }

    pub fn id(&self) -> CenterId {
        self.header.center
    }

    pub fn share_log(&self) -> &[LogRecord] {
        &self.share_log
    }

    pub fn partial_sum(&self) -> FieldElement {
        self.partial_sum
    }

    pub fn ballot_count(&self) -> u64 {
        self.share_log.len() as u64
    }

    pub fn last_seq(&self) -> Option<u64> {
        self.share_log.iter().map(|r| r.ballot_seq).max()
    }

    /// Validates a delivery without applying it.
    fn check(&self, ballot_seq: u64, share: &Share) -> Result<AcceptOutcome, CenterError> {
        if share.x != self.header.center.get() {
            return Err(CenterError::WrongCenter {
                expected: self.header.center.get(),
                got: share.x,
            });
        }
        if share.y.prime() != self.header.prime {
            return Err(FieldError::MismatchedField {
                left: self.header.prime.value(),
                right: share.y.prime().value(),
            }
            .into());
        }
        match self.index.get(&ballot_seq) {
            Some(stored) if *stored == share.y => Ok(AcceptOutcome::Duplicate),
            Some(_) => Err(CenterError::ConflictingReplay { seq: ballot_seq }),
            None => Ok(AcceptOutcome::Accepted),
        }
    }

    fn apply(&mut self, record: LogRecord) {
        self.partial_sum = self
            .partial_sum
            .try_add(record.y)
            .expect("checked against the center's prime");
        self.index.insert(record.ballot_seq, record.y);
        self.share_log.push(record);
    }

    /// Stores one share; a replay of an already stored ballot is a no-op.
    pub fn accept_share(&mut self, ballot_seq: u64, share: Share) -> Result<AcceptOutcome, CenterError> {
        let outcome = self.check(ballot_seq, &share)?;
        if outcome == AcceptOutcome::Accepted {
            self.apply(LogRecord {
                ballot_seq,
                y: share.y,
            });
        }
        Ok(outcome)
    }

    pub fn report_partial_sum(&self) -> PartialSum {
        PartialSum {
            x: self.header.center.get(),
            sum: self.partial_sum,
            count: self.ballot_count(),
        }
    }

    fn record_line(&self, record: &LogRecord) -> String {
        format!(
            "{} {} {}\n",
            record.ballot_seq,
            self.header.center.get(),
            record.y
        )
    }

    /// Full log text: header followed by every record in arrival order.
    pub fn to_log_string(&self) -> String {
        let mut out = self.header.to_line();
        for record in &self.share_log {
            out.push_str(&self.record_line(record));
        }
        out
    }

    /// Rebuilds a center by replaying a complete log.
    pub fn recover(log: &str) -> Result<Self, CenterError> {
        Ok(parse_log(log)?.state)
    }
}

/// Result of parsing a log that may end in a torn write.
#[derive(Debug)]
pub struct ParsedLog {
    pub state: CenterState,
    /// Byte length of the intact prefix.
    pub intact_len: usize,
    pub torn_tail: bool,
}

pub fn parse_log(log: &str) -> Result<ParsedLog, CenterError> {
    let (header_line, mut rest) = log
        .split_once('\n')
        .ok_or_else(|| CenterError::CorruptHeader("missing header line".into()))?;
    let header = LogHeader::parse(header_line)?;
    let mut state = CenterState::new(header);
    let mut intact_len = header_line.len() + 1;
    let mut record = 0;
    let mut torn_tail = false;
    while !rest.is_empty() {
        let Some((line, tail)) = rest.split_once('\n') else {
            torn_tail = true;
            break;
        };
        let corrupt = |reason: String| CenterError::CorruptLog { record, reason };
        let fields: Vec<&str> = line.split(' ').collect();
        let [seq, x, y] = fields[..] else {
            return Err(corrupt(format!("expected 3 fields, found {}", fields.len())));
        };
        let seq = parse_decimal(seq).ok_or_else(|| corrupt(format!("bad ballot_seq {seq:?}")))?;
        let x = parse_decimal(x).ok_or_else(|| corrupt(format!("bad x {x:?}")))?;
        let y = parse_decimal(y).ok_or_else(|| corrupt(format!("bad y {y:?}")))?;
        if y >= state.header.prime.value() {
            return Err(corrupt(format!(
                "y={y} is not reduced modulo {}",
                state.header.prime
            )));
        }
        if x != state.header.center.get() {
            return Err(corrupt(format!("x={x} in the log of {}", state.header.center)));
        }
        if state.index.contains_key(&seq) {
            return Err(corrupt(format!("ballot {seq} appears twice")));
        }
        state.apply(LogRecord {
            ballot_seq: seq,
            y: state.header.prime.element(y),
        });
        intact_len += line.len() + 1;
        rest = tail;
        record += 1;
    }
    Ok(ParsedLog {
        state,
        intact_len,
        torn_tail,
    })
}

/// Replays the share log at `path`, discarding a torn final record.
pub fn recover_state(path: &Path) -> Result<CenterState, CenterError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_log(&text)?.state)
}

/// A center whose state is mirrored to an append-only file.
///
/// Every accepted share is written and synced before `accept_share` returns,
/// so an acknowledgment implies the share survives a crash.
#[derive(Debug)]
pub struct CollectionCenter {
    state: CenterState,
    log: Option<(PathBuf, File)>,
}

impl CollectionCenter {
    pub fn in_memory(header: LogHeader) -> Self {
        CollectionCenter {
            state: CenterState::new(header),
            log: None,
        }
    }

    /// Opens the log at `path`, creating it if absent. An existing log must
    /// carry the same header.
    pub fn open(path: &Path, header: LogHeader) -> Result<Self, CenterError> {
        let existing = match std::fs::read_to_string(path) {
            Ok(text) => Some(text),
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        match existing {
            // a crash before the header was fully written leaves no records
            Some(text) if text.contains('\n') => {
                let center = Self::from_text(path, &text)?;
                if center.state.header != header {
                    return Err(CenterError::HeaderMismatch {
                        expected: header.to_string(),
                        found: center.state.header.to_string(),
                    });
                }
                Ok(center)
            }
            _ => Self::create(path, header),
        }
    }

    /// Recovers a center from an existing log, trusting its header.
    pub fn recover(path: &Path) -> Result<Self, CenterError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(path, &text)
    }

    fn create(path: &Path, header: LogHeader) -> Result<Self, CenterError> {
        let mut file = File::create(path)?;
        file.write_all(header.to_line().as_bytes())?;
        file.sync_all()?;
        Ok(CollectionCenter {
            state: CenterState::new(header),
            log: Some((path.to_owned(), file)),
        })
    }

    fn from_text(path: &Path, text: &str) -> Result<Self, CenterError> {
        let parsed = parse_log(text)?;
        let file = OpenOptions::new().append(true).open(path)?;
        if parsed.torn_tail {
            file.set_len(parsed.intact_len as u64)?;
            file.sync_all()?;
        }
        Ok(CollectionCenter {
            state: parsed.state,
            log: Some((path.to_owned(), file)),
        })
    }

    pub fn state(&self) -> &CenterState {
        &self.state
    }

    pub fn id(&self) -> CenterId {
        self.state.id()
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log.as_ref().map(|(p, _)| p.as_path())
    }

    pub fn accept_share(&mut self, ballot_seq: u64, share: Share) -> Result<AcceptOutcome, CenterError> {
        let outcome = self.state.check(ballot_seq, &share)?;
        if outcome == AcceptOutcome::Duplicate {
            return Ok(outcome);
        }
        let record = LogRecord {
            ballot_seq,
            y: share.y,
        };
        if let Some((_, file)) = self.log.as_mut() {
            let line = self.state.record_line(&record);
            let before = file.metadata()?.len();
            let written = file.write_all(line.as_bytes()).and_then(|_| file.sync_data());
            if let Err(e) = written {
                // roll the file back so a later append cannot follow a partial line
                let _ = file.set_len(before);
                return Err(e.into());
            }
        }
        self.state.apply(record);
        Ok(outcome)
    }

    pub fn report_partial_sum(&self) -> PartialSum {
        self.state.report_partial_sum()
    }
}
