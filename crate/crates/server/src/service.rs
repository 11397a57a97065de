//! The election service: polling station, center fan-out and commissioner.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use futures::future::join_all;
use rand::rngs::StdRng;
use rand::SeedableRng;
use tokio::sync::RwLock;

use sharevote_core::{
    select_centers, tally, verify_consistency, AcceptOutcome, CenterId, CoefficientSource, CommissionerError,
    ElectionConfig, ElectionSetup, LogHeader, PartialSum, Share, ShareGenerator,
};

use crate::api::ApiError;
use crate::center_client::{CenterClient, CenterClientError, LocalCenter, RemoteCenter};
use crate::wire::{BallotAck, CenterSummary, ElectionDescriptor, TallyResponse, VerifyResponse};

pub const CONFIG_FILE: &str = "election.toml";
pub const ACK_LOG: &str = "acks.log";

pub fn center_log_name(center: CenterId) -> String {
    format!("cc-{}.log", center.get())
}

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    /// Where the election document, share logs and ack log live. `None`
    /// keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    /// Base URLs of center nodes, center 1 first. Empty means in-process centers.
    pub remote_centers: Vec<String>,
    /// Fixed polynomial coefficient rows, one per ballot. Insecure: only for
    /// reproducing known share tables.
    pub coefficient_rows: Option<Vec<Vec<u64>>>,
    /// Seeds both the coefficient RNG and center selection.
    pub rng_seed: Option<u64>,
    pub test_hooks: bool,
    pub delivery_attempts: usize,
    pub retry_backoff: Duration,
    pub remote_timeout: Duration,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        ServiceOptions {
            data_dir: None,
            remote_centers: Vec::new(),
            coefficient_rows: None,
            rng_seed: None,
            test_hooks: false,
            delivery_attempts: 3,
            retry_backoff: Duration::from_millis(50),
            remote_timeout: Duration::from_secs(5),
        }
    }
}

#[derive(Debug, Default)]
struct Ledger {
    next_seq: u64,
    /// Ballots acknowledged or currently being delivered.
    reserved: u64,
    /// Shares still owed to centers for partially delivered ballots.
    pending: BTreeMap<u64, Vec<(usize, Share)>>,
}

struct Election {
    config: ElectionConfig,
    centers: Vec<Arc<dyn CenterClient>>,
    generator: Mutex<ShareGenerator>,
    ledger: Mutex<Ledger>,
    /// Votes hold it shared; tally and verify take it exclusively so they see
    /// a quiescent snapshot.
    ingest: RwLock<()>,
    corruption: Mutex<Vec<u64>>,
    acks: Option<Mutex<File>>,
}

pub struct ElectionService {
    options: ServiceOptions,
    election: RwLock<Option<Arc<Election>>>,
    rng: Mutex<StdRng>,
    /// Serializes setup so two concurrent requests cannot both create one.
    setup_lock: tokio::sync::Mutex<()>,
}

impl ElectionService {
    /// Creates the service, resuming the election stored in `data_dir` if any.
    pub async fn open(options: ServiceOptions) -> Result<Self, ApiError> {
        let rng = match options.rng_seed {
            Some(seed) => StdRng::seed_from_u64(seed ^ 0x5e1ec7),
            None => StdRng::from_os_rng(),
        };
        let service = ElectionService {
            options,
            election: RwLock::new(None),
            rng: Mutex::new(rng),
            setup_lock: tokio::sync::Mutex::new(()),
        };
        if let Some(dir) = &service.options.data_dir {
            let path = dir.join(CONFIG_FILE);
            if path.exists() {
                let text = fs::read_to_string(&path).map_err(ApiError::internal)?;
                let config = ElectionConfig::from_toml(&text)
                    .map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))?;
                let election = service.build(config).await?;
                *service.election.write().await = Some(Arc::new(election));
            }
        }
        Ok(service)
    }

    pub fn options(&self) -> &ServiceOptions {
        &self.options
    }

    pub async fn setup(&self, setup: ElectionSetup) -> Result<ElectionDescriptor, ApiError> {
        let _guard = self.setup_lock.lock().await;
        if self.election.read().await.is_some() {
            return Err(ApiError::conflict("an election is already active"));
        }
        let config = setup.resolve().map_err(ApiError::unprocessable)?;
        if !self.options.remote_centers.is_empty()
            && self.options.remote_centers.len() != config.center_count()
        {
            return Err(ApiError::unprocessable(format!(
                "{} center nodes configured but the election needs {}",
                self.options.remote_centers.len(),
                config.center_count()
            )));
        }
        if let Some(dir) = &self.options.data_dir {
            fs::create_dir_all(dir).map_err(ApiError::internal)?;
            let leftover = config
                .center_ids()
                .into_iter()
                .map(|id| dir.join(center_log_name(id)))
                .chain([dir.join(ACK_LOG)])
                .find(|p| p.exists());
            if let Some(p) = leftover {
                return Err(ApiError::conflict(format!(
                    "{} exists from an earlier election; use a fresh data directory",
                    p.display()
                )));
            }
        }
        let election = self.build(config).await?;
        if let Some(dir) = &self.options.data_dir {
            write_atomically(&dir.join(CONFIG_FILE), election.config.to_toml().as_bytes())
                .map_err(ApiError::internal)?;
        }
        let descriptor = ElectionDescriptor::from(&election.config);
        *self.election.write().await = Some(Arc::new(election));
        Ok(descriptor)
    }

    async fn build(&self, config: ElectionConfig) -> Result<Election, ApiError> {
        let dir = self.options.data_dir.as_deref();
        let mut centers: Vec<Arc<dyn CenterClient>> = Vec::with_capacity(config.center_count());
        for id in config.center_ids() {
            let header =
                LogHeader::new(&config.election_id, id, config.prime).map_err(ApiError::unprocessable)?;
            let client: Arc<dyn CenterClient> = match self.options.remote_centers.get(id.get() as usize - 1) {
                Some(url) => Arc::new(RemoteCenter::new(
                    id,
                    url,
                    config.prime,
                    self.options.remote_timeout,
                )),
                None => {
                    let path = dir.map(|d| d.join(center_log_name(id)));
                    Arc::new(LocalCenter::open(path.as_deref(), header.clone()).map_err(ApiError::internal)?)
                }
            };
            client.init(&header).await.map_err(ApiError::from_center)?;
            centers.push(client);
        }

        let mut ledger = Ledger::default();
        let summaries = join_all(centers.iter().map(|c| c.summary())).await;
        let mut last_seq = 0;
        for s in summaries.into_iter().flatten() {
            ledger.reserved = ledger.reserved.max(s.count);
        }
        for c in &centers {
            if let Some(local) = c.as_local() {
                last_seq = last_seq.max(local.last_seq().unwrap_or(0));
            }
        }
        let acks = match dir {
            Some(dir) => {
                let path = dir.join(ACK_LOG);
                if let Ok(text) = fs::read_to_string(&path) {
                    for line in text.lines() {
                        if let Some(seq) = line.split(' ').next().and_then(|s| s.parse::<u64>().ok()) {
                            last_seq = last_seq.max(seq);
                        }
                    }
                }
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&path)
                    .map_err(ApiError::internal)?;
                Some(Mutex::new(file))
            }
            None => None,
        };
        ledger.next_seq = last_seq + 1;

        let source = match (&self.options.coefficient_rows, self.options.rng_seed) {
            (Some(rows), _) => CoefficientSource::fixed(rows.clone()),
            (None, Some(seed)) => CoefficientSource::seeded(seed),
            (None, None) => CoefficientSource::from_os_rng(),
        };
        let n = centers.len();
        Ok(Election {
            generator: Mutex::new(ShareGenerator::new(config.clone(), source)),
            config,
            centers,
            ledger: Mutex::new(ledger),
            ingest: RwLock::new(()),
            corruption: Mutex::new(vec![0; n]),
            acks,
        })
    }

    async fn active(&self) -> Result<Arc<Election>, ApiError> {
        self.election
            .read()
            .await
            .clone()
            .ok_or_else(|| ApiError::not_found("no election is active"))
    }

    pub async fn config(&self) -> Option<ElectionConfig> {
        self.election.read().await.as_ref().map(|e| e.config.clone())
    }

    pub async fn descriptor(&self) -> Result<ElectionDescriptor, ApiError> {
        Ok(ElectionDescriptor::from(&self.active().await?.config))
    }

    pub async fn cast(&self, candidate_index: usize) -> Result<(BallotAck, bool), ApiError> {
        let election = self.active().await?;
        let config = &election.config;
        if candidate_index == 0 || candidate_index > config.candidate_count() {
            return Err(ApiError::unprocessable(format!(
                "candidate_index must be in 1..={}",
                config.candidate_count()
            )));
        }
        let _ingest = election.ingest.read().await;
        self.flush_pending(&election).await;

        let seq = {
            let mut ledger = election.ledger.lock().expect("ledger lock");
            if ledger.reserved >= config.voter_bound() {
                return Err(ApiError::conflict(format!(
                    "ballot limit of {} reached",
                    config.voter_bound()
                )));
            }
            ledger.reserved += 1;
            let seq = ledger.next_seq;
            ledger.next_seq += 1;
            seq
        };
        let release = || election.ledger.lock().expect("ledger lock").reserved -= 1;

        let health = join_all(election.centers.iter().map(|c| c.health())).await;
        if let Some(err) = health.into_iter().find_map(Result::err) {
            release();
            return Err(ApiError::unavailable(format!("ballot not recorded: {err}")));
        }

        let shares = {
            let mut generator = election.generator.lock().expect("generator lock");
            match generator.share_ballot(candidate_index) {
                Ok(shares) => shares,
                Err(e) => {
                    drop(generator);
                    release();
                    return Err(ApiError::internal(e));
                }
            }
        };

        let results = join_all(
            election
                .centers
                .iter()
                .zip(shares.iter().copied())
                .map(|(c, share)| self.deliver(c.as_ref(), seq, share)),
        )
        .await;
        let mut owed = Vec::new();
        let mut last_err = None;
        for ((i, share), result) in shares.into_iter().enumerate().zip(results) {
            if let Err(e) = result {
                owed.push((i, share));
                last_err = Some(e);
            }
        }
        let acked = election.centers.len() - owed.len();

        if acked == 0 {
            release();
            let err = last_err.expect("no center acknowledged");
            return Err(ApiError::unavailable(format!("ballot not recorded: {err}")));
        }
        let pending = !owed.is_empty();
        if pending {
            tracing::warn!(
                seq,
                owed = owed.len(),
                "ballot partially delivered; will roll forward"
            );
            election
                .ledger
                .lock()
                .expect("ledger lock")
                .pending
                .insert(seq, owed);
        }
        if let Some(acks) = &election.acks {
            let mut file = acks.lock().expect("ack log lock");
            writeln!(file, "{seq} {acked}").map_err(ApiError::internal)?;
        }
        Ok((
            BallotAck {
                ballot_seq: seq,
                centers_acked: acked,
                pending,
            },
            pending,
        ))
    }

    async fn deliver(
        &self,
        center: &dyn CenterClient,
        seq: u64,
        share: Share,
    ) -> Result<AcceptOutcome, CenterClientError> {
        let attempts = self.options.delivery_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            match center.deliver(seq, share).await {
                Err(CenterClientError::Unreachable(..)) if attempt < attempts => {
                    tokio::time::sleep(self.options.retry_backoff * attempt as u32).await;
                }
                other => return other,
            }
        }
    }

    /// Retries owed shares; returns how many ballots remain incomplete.
    async fn flush_pending(&self, election: &Election) -> usize {
        let owed: Vec<(u64, Vec<(usize, Share)>)> = {
            let ledger = election.ledger.lock().expect("ledger lock");
            ledger.pending.iter().map(|(s, v)| (*s, v.clone())).collect()
        };
        if owed.is_empty() {
            return 0;
        }
        for (seq, shares) in owed {
            let results = join_all(
                shares
                    .iter()
                    .map(|&(i, share)| self.deliver(election.centers[i].as_ref(), seq, share)),
            )
            .await;
            let still: Vec<(usize, Share)> = shares
                .into_iter()
                .zip(results)
                .filter(|(_, r)| r.is_err())
                .map(|(s, _)| s)
                .collect();
            let mut ledger = election.ledger.lock().expect("ledger lock");
            if still.is_empty() {
                ledger.pending.remove(&seq);
            } else {
                ledger.pending.insert(seq, still);
            }
        }
        election.ledger.lock().expect("ledger lock").pending.len()
    }

    pub async fn pending_ballots(&self) -> usize {
        match self.election.read().await.as_ref() {
            Some(e) => e.ledger.lock().expect("ledger lock").pending.len(),
            None => 0,
        }
    }

    fn center_index(election: &Election, j: u64) -> Result<usize, ApiError> {
        if j == 0 || j > election.centers.len() as u64 {
            return Err(ApiError::not_found(format!("no collection center {j}")));
        }
        Ok(j as usize - 1)
    }

    async fn summary_of(&self, election: &Election, index: usize) -> Result<PartialSum, CenterClientError> {
        let mut summary = election.centers[index].summary().await?;
        let offset = election.corruption.lock().expect("corruption lock")[index];
        if offset != 0 {
            summary.sum = summary
                .sum
                .try_add(election.config.prime.element(offset))
                .expect("same field");
        }
        Ok(summary)
    }

    pub async fn center_summary(&self, j: u64) -> Result<CenterSummary, ApiError> {
        let election = self.active().await?;
        let index = Self::center_index(&election, j)?;
        let summary = self
            .summary_of(&election, index)
            .await
            .map_err(ApiError::from_center)?;
        Ok(summary.into())
    }

    pub async fn tally(&self, centers: Option<Vec<u64>>) -> Result<TallyResponse, ApiError> {
        let election = self.active().await?;
        let config = &election.config;
        let k = config.threshold();
        let _barrier = election.ingest.write().await;
        let incomplete = self.flush_pending(&election).await;
        if incomplete > 0 {
            return Err(ApiError::unavailable(format!(
                "{incomplete} ballots are still being delivered; retry once all centers are reachable"
            )));
        }

        let chosen: Vec<usize> = match centers {
            Some(list) => {
                let mut seen = std::collections::HashSet::new();
                if list.len() < k || !list.iter().all(|j| seen.insert(*j)) {
                    return Err(ApiError::unprocessable(format!(
                        "need at least {k} distinct centers, got {list:?}"
                    )));
                }
                list.iter()
                    .map(|&j| {
                        Self::center_index(&election, j).map_err(|e| ApiError::unprocessable(e.message))
                    })
                    .collect::<Result<_, _>>()?
            }
            None => {
                let health = join_all(election.centers.iter().map(|c| c.health())).await;
                let reachable: Vec<CenterId> = election
                    .centers
                    .iter()
                    .zip(health)
                    .filter(|(_, h)| h.is_ok())
                    .map(|(c, _)| c.id())
                    .collect();
                let picked = {
                    let mut rng = self.rng.lock().expect("rng lock");
                    select_centers(config, &reachable, &mut *rng)
                };
                picked
                    .map_err(|e| ApiError::unavailable(e.to_string()))?
                    .into_iter()
                    .map(|id| id.get() as usize - 1)
                    .collect()
            }
        };

        let summaries = join_all(chosen.iter().map(|&i| self.summary_of(&election, i))).await;
        let sums = summaries
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(ApiError::from_center)?;
        let result = tally(config, &sums).map_err(ApiError::from_commissioner)?;
        Ok(TallyResponse::new(config, &result))
    }

    pub async fn verify(&self) -> Result<VerifyResponse, ApiError> {
        let election = self.active().await?;
        let _barrier = election.ingest.write().await;
        self.flush_pending(&election).await;
        let n = election.centers.len();
        let summaries = join_all((0..n).map(|i| self.summary_of(&election, i))).await;
        let mut sums = Vec::new();
        let mut unreachable = Vec::new();
        for (i, s) in summaries.into_iter().enumerate() {
            match s {
                Ok(s) => sums.push(s),
                Err(_) => unreachable.push(i as u64 + 1),
            }
        }
        let report = {
            let mut rng = self.rng.lock().expect("rng lock");
            verify_consistency(&election.config, &sums, None, &mut *rng)
        };
        let report = report.map_err(|e| match e {
            CommissionerError::Shamir(_) => {
                ApiError::unavailable(format!("only {} of {} centers reachable: {e}", sums.len(), n))
            }
            other => ApiError::from_commissioner(other),
        })?;
        Ok(VerifyResponse::new(&report, unreachable))
    }

    async fn local_center(&self, j: u64) -> Result<(Arc<Election>, usize), ApiError> {
        let election = self.active().await?;
        let index = Self::center_index(&election, j)?;
        Ok((election, index))
    }

    /// Test hook: every later summary from center `j` is shifted by `offset`.
    pub async fn corrupt_center(&self, j: u64, offset: u64) -> Result<(), ApiError> {
        let (election, index) = self.local_center(j).await?;
        election.corruption.lock().expect("corruption lock")[index] = offset % election.config.prime.value();
        Ok(())
    }

    pub async fn set_offline(&self, j: u64, offline: bool) -> Result<(), ApiError> {
        let (election, index) = self.local_center(j).await?;
        let local = election.centers[index]
            .as_local()
            .ok_or_else(|| ApiError::unprocessable("center runs as a separate node"))?;
        local.set_offline(offline);
        Ok(())
    }

    /// Test hook: drop center `j`'s memory and replay its share log.
    pub async fn restart_center(&self, j: u64) -> Result<(), ApiError> {
        let (election, index) = self.local_center(j).await?;
        let _barrier = election.ingest.write().await;
        let local = election.centers[index]
            .as_local()
            .ok_or_else(|| ApiError::unprocessable("center runs as a separate node"))?;
        local.restart().map_err(ApiError::internal)
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)
}
