//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;
use sharevote_core::collection_center::{CenterState, LogHeader};
use sharevote_core::worked_example::{self, BALLOTS};
use sharevote_core::{
    recover_state, setup_election, tally, verify_consistency, Candidate, CoefficientSource, CollectionCenter,
    ElectionConfig, FieldPrime, PartialSum, SecretPolynomial, Share, ShareGenerator,
};
use sharevote_server::service::{center_log_name, ACK_LOG, CONFIG_FILE};
use sharevote_server::ServiceOptions;

/// Reference share table: `GRID[voter][center] = y` at `x = center + 1`.
const GRID: [[u64; 5]; 5] = [
    [91, 269, 535, 889, 1331],
    [327, 498, 769, 1140, 1611],
    [70, 251, 544, 949, 1466],
    [113, 278, 511, 812, 1181],
    [167, 475, 925, 1517, 2251],
];
const SECRETS: [u64; 5] = [1, 256, 1, 16, 1];
const POLYNOMIAL: [u64; 3] = [275, 238, 255];
const COUNTS: [u64; 3] = [3, 1, 1];

const RANDOM_ELECTIONS: usize = 120;
const FAULT_TRIALS: usize = 50;
const CRASH_POINTS: usize = 20;

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .unwrap()
}

fn column_sums() -> Vec<u64> {
    (0..5).map(|j| GRID.iter().map(|row| row[j]).sum()).collect()
}

fn reference_election_reproduction() {
    let start = Instant::now();

    let run = worked_example::run().unwrap();
    let expected_sums = column_sums();
    assert_eq!(expected_sums, [768, 1771, 3284, 5307, 7840]);
    assert_eq!(run.secrets, SECRETS);
    for (row, expected) in run.shares.iter().zip(GRID) {
        let got: Vec<(u64, u64)> = row.iter().map(|s| (s.x, s.y.value())).collect();
        let want: Vec<(u64, u64)> = (1..).zip(expected).collect();
        assert_eq!(got, want);
    }
    let sums: Vec<u64> = run.partial_sums.iter().map(|p| p.sum.value()).collect();
    assert_eq!(sums, expected_sums);
    let poly: Vec<u64> = run.tally.polynomial.coeffs().iter().map(|c| c.value()).collect();
    assert_eq!(poly, POLYNOMIAL);
    assert_eq!(run.tally.counts.as_slice(), COUNTS);
    assert_eq!(
        format!("{:012b}", run.tally.constant_term.value()),
        "000100010011"
    );

    // the same election end to end over HTTP
    runtime().block_on(async {
        let server = spawn(fixed_coefficients()).await;
        let descriptor = server.setup(&reference_setup()).await;
        assert_eq!(
            (
                descriptor["block_width"].as_u64(),
                descriptor["total_width"].as_u64()
            ),
            (Some(4), Some(12))
        );
        for &b in &BALLOTS {
            server.vote_ok(b).await;
        }
        for (j, &sum) in (1u64..).zip(&expected_sums) {
            assert_eq!(dec(&server.summary(j).await["partial_sum"]), sum);
        }
        let result = server.tally_ok(Some(&[1, 2, 3])).await;
        assert_eq!(u64s(&result["polynomial"]), POLYNOMIAL);
        assert_eq!(u64s(&result["counts"]), COUNTS);
    });

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
}

fn random_config(rng: &mut StdRng) -> ElectionConfig {
    loop {
        let c = rng.random_range(1..=8);
        let m = rng.random_range(1..=100);
        let n_cc = rng.random_range(2..=7);
        let k = rng.random_range(2..=n_cc);
        let candidates = (1..=c).map(|i| Candidate::new(format!("c{i}"), "")).collect();
        // layouts wider than 62 bits are rejected at setup; draw again
        if let Ok(config) = setup_election("acceptance", candidates, m, k, n_cc, None) {
            return config;
        }
    }
}

fn random_ballots(config: &ElectionConfig, rng: &mut StdRng) -> Vec<usize> {
    let n = rng.random_range(0..=config.voter_bound());
    (0..n)
        .map(|_| rng.random_range(1..=config.candidate_count()))
        .collect()
}

fn histogram(c: usize, ballots: &[usize]) -> Vec<u64> {
    let mut h = vec![0; c];
    for &b in ballots {
        h[b - 1] += 1;
    }
    h
}

fn cast(config: &ElectionConfig, ballots: &[usize], seed: u64) -> Vec<PartialSum> {
    let mut generator = ShareGenerator::new(config.clone(), CoefficientSource::seeded(seed));
    let mut centers: Vec<CenterState> = config
        .center_ids()
        .into_iter()
        .map(|id| CenterState::new(LogHeader::new(&config.election_id, id, config.prime).unwrap()))
        .collect();
    for (seq, &b) in (1u64..).zip(ballots) {
        for (center, share) in centers.iter_mut().zip(generator.share_ballot(b).unwrap()) {
            center.accept_share(seq, share).unwrap();
        }
    }
    centers.iter().map(CenterState::report_partial_sum).collect()
}

fn homomorphic_tally() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xacce97);
    for trial in 0..RANDOM_ELECTIONS {
        let config = random_config(&mut rng);
        let ballots = random_ballots(&config, &mut rng);
        let sums = cast(&config, &ballots, trial as u64);
        let result = tally(&config, &sums).unwrap();
        assert_eq!(
            result.counts.as_slice(),
            histogram(config.candidate_count(), &ballots)
        );
    }

    for m in 1..=4u64 {
        let candidates = vec![Candidate::new("a", ""), Candidate::new("b", "")];
        let config = setup_election("grid", candidates, m, 2, 3, None).unwrap();
        for n in 0..=m as usize {
            for ballots in (0..n).map(|_| 1..=2usize).multi_cartesian_product() {
                let sums = cast(&config, &ballots, rng.random());
                for subset in sums.iter().copied().combinations(2) {
                    let result = tally(&config, &subset).unwrap();
                    assert_eq!(result.counts.as_slice(), histogram(2, &ballots));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
}

fn subset_invariance() {
    let mut rng = StdRng::seed_from_u64(0xacce97);
    for trial in 0..RANDOM_ELECTIONS {
        let config = random_config(&mut rng);
        let ballots = random_ballots(&config, &mut rng);
        let sums = cast(&config, &ballots, trial as u64);
        let expected = histogram(config.candidate_count(), &ballots);
        let mut constants = Vec::new();
        for subset in sums.iter().copied().combinations(config.threshold()) {
            let result = tally(&config, &subset).unwrap();
            assert_eq!(result.counts.as_slice(), expected);
            constants.push(result.constant_term);
        }
        assert!(constants.iter().all_equal());
        let report = verify_consistency(&config, &sums, None, &mut rng).unwrap();
        assert!(report.unanimous && report.exhaustive());
    }

    let mut rng = StdRng::seed_from_u64(0xfa017);
    let mut isolated = 0;
    let mut trials = 0;
    while trials < FAULT_TRIALS {
        let config = random_config(&mut rng);
        if config.center_count() < config.threshold() + 1 {
            continue;
        }
        trials += 1;
        let ballots = random_ballots(&config, &mut rng);
        let mut sums = cast(&config, &ballots, rng.random());
        let victim = rng.random_range(0..sums.len());
        let delta = config.prime.element(rng.random_range(1..config.prime.value()));
        sums[victim].sum = sums[victim].sum.try_add(delta).unwrap();
        let report = verify_consistency(&config, &sums, None, &mut rng).unwrap();
        if report.isolated().map(|c| c.get()) == Some(sums[victim].x) {
            isolated += 1;
        } else {
            eprintln!(
                "  trial {trials}: c={} m={} k={} n_cc={} p={} victim={} suspects={:?}",
                config.candidate_count(),
                config.voter_bound(),
                config.threshold(),
                config.center_count(),
                config.prime,
                sums[victim].x,
                report.suspects
            );
        }
    }
    assert_eq!(isolated, FAULT_TRIALS, "isolated {isolated}/{FAULT_TRIALS}");
}

fn perfect_secrecy() {
    let prime = FieldPrime::new(7).unwrap();
    for s in 0..7 {
        let mut per_x = vec![vec![0usize; 7]; 3];
        for r1 in 0..7 {
            let poly = SecretPolynomial::from_coeffs(vec![prime.element(s), prime.element(r1)]).unwrap();
            for share in poly.shares(3) {
                per_x[share.x as usize - 1][share.y.value() as usize] += 1;
            }
        }
        for (x, counts) in (1..).zip(&per_x) {
            assert_eq!(counts, &vec![1; 7], "secret {s}, x={x}");
        }
    }
}

fn durability() {
    let mut rng = StdRng::seed_from_u64(0xd00ab1e);
    let dir = tempfile::tempdir().unwrap();
    let candidates = (1..=4).map(|i| Candidate::new(format!("c{i}"), "")).collect();
    let config = setup_election("durable", candidates, 60, 3, 5, None).unwrap();
    let ballots: Vec<usize> = (0..60).map(|_| rng.random_range(1..=4)).collect();
    let mut generator = ShareGenerator::new(config.clone(), CoefficientSource::seeded(rng.random()));

    let paths: Vec<_> = config
        .center_ids()
        .iter()
        .map(|&id| dir.path().join(center_log_name(id)))
        .collect();
    let header =
        |i: usize| LogHeader::new(&config.election_id, config.center_ids()[i], config.prime).unwrap();
    let mut centers: Vec<CollectionCenter> = (0..5)
        .map(|i| CollectionCenter::open(&paths[i], header(i)).unwrap())
        .collect();
    let mut oracles: Vec<CenterState> = (0..5).map(|i| CenterState::new(header(i))).collect();

    let mut crash_at: Vec<usize> = (0..ballots.len()).collect();
    crash_at = rand::seq::index::sample(&mut rng, crash_at.len(), CRASH_POINTS)
        .into_iter()
        .map(|i| crash_at[i])
        .collect();
    crash_at.sort_unstable();

    for (i, (seq, &b)) in (1u64..).zip(&ballots).enumerate() {
        let shares = generator.share_ballot(b).unwrap();
        let crash = crash_at.contains(&i).then(|| rng.random_range(0..5));
        for (j, share) in shares.into_iter().enumerate() {
            if crash == Some(j) {
                kill_mid_write(&paths[j], seq, share, &mut rng);
                let recovered = recover_state(&paths[j]).unwrap();
                assert_eq!(
                    recovered.partial_sum(),
                    oracles[j].partial_sum(),
                    "center {} at seq {seq}",
                    j + 1
                );
                assert_eq!(&recovered, &oracles[j]);
                centers[j] = CollectionCenter::recover(&paths[j]).unwrap();
            }
            // the unacknowledged share is redelivered after recovery
            centers[j].accept_share(seq, share).unwrap();
            oracles[j].accept_share(seq, share).unwrap();
        }
    }
    drop(centers);

    let recovered: Vec<PartialSum> = paths
        .iter()
        .map(|p| recover_state(p).unwrap().report_partial_sum())
        .collect();
    let oracle: Vec<PartialSum> = oracles.iter().map(CenterState::report_partial_sum).collect();
    assert_eq!(recovered, oracle);
    let result = tally(&config, &recovered).unwrap();
    assert_eq!(result.counts.as_slice(), histogram(4, &ballots));
}

/// Simulates a crash during the append of `seq`: nothing, or a torn prefix of
/// the record, reaches the log before the process dies.
fn kill_mid_write(path: &Path, seq: u64, share: Share, rng: &mut StdRng) {
    let line = format!("{seq} {} {}\n", share.x, share.y.value());
    let cut = rng.random_range(0..line.len());
    let mut file = OpenOptions::new().append(true).open(path).unwrap();
    file.write_all(&line.as_bytes()[..cut]).unwrap();
}

fn anonymity_audit() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = StdRng::seed_from_u64(0xa11071);
    let (secrets_by_seq, candidates_by_seq, c) = runtime().block_on(async {
        let server = spawn(ServiceOptions {
            data_dir: Some(dir.path().to_owned()),
            ..ServiceOptions::default()
        })
        .await;
        let descriptor = server.setup(&setup_body(4, 50, 3, 5)).await;
        let w = descriptor["block_width"].as_u64().unwrap();
        let mut secrets = HashMap::new();
        let mut choices = HashMap::new();
        for _ in 0..50 {
            let candidate = rng.random_range(1..=4usize);
            let ack = server.vote_ok(candidate).await;
            let keys: Vec<&String> = ack.as_object().unwrap().keys().collect();
            assert_eq!(keys, ["ballot_seq", "centers_acked"]);
            let seq = ack["ballot_seq"].as_u64().unwrap();
            secrets.insert(seq, 1u64 << ((candidate as u64 - 1) * w));
            choices.insert(seq, candidate as u64);
        }
        let result = server.tally_ok(None).await;
        let mut expected = vec![0u64; 4];
        for &cand in choices.values() {
            expected[cand as usize - 1] += 1;
        }
        assert_eq!(u64s(&result["counts"]), expected);
        (secrets, choices, 4)
    });

    let mut files: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    let mut expected: Vec<String> = (1..=5)
        .map(|j| center_log_name(sharevote_core::CenterId::new(j).unwrap()))
        .chain([ACK_LOG.to_owned(), CONFIG_FILE.to_owned()])
        .collect();
    expected.sort();
    assert_eq!(files, expected, "unexpected artifacts");

    for name in &files {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(
            !text.contains("candidate_index"),
            "{name} names a candidate_index"
        );
        if name == CONFIG_FILE {
            let config = ElectionConfig::from_toml(&text).unwrap();
            assert_eq!(config.candidate_count(), c);
            continue;
        }
        let mut records = text.lines();
        if name != ACK_LOG {
            records.next();
        }
        for line in records {
            let fields: Vec<u64> = line.split(' ').map(|f| f.parse().unwrap()).collect();
            let seq = fields[0];
            assert!(
                secrets_by_seq.contains_key(&seq),
                "{name}: unknown seq in {line:?}"
            );
            if name == ACK_LOG {
                // sequence number and fan-out only
                assert_eq!(fields, [seq, 5], "{name}: {line:?}");
            } else {
                // sequence number, evaluation point, share value
                assert_eq!(fields.len(), 3, "{name}: {line:?}");
                let y = fields[2];
                assert_ne!(y, secrets_by_seq[&seq], "{name}: plaintext secret at seq {seq}");
                assert_ne!(y, candidates_by_seq[&seq], "{name}: candidate index at seq {seq}");
            }
        }
    }
}

fn main() {
    let criteria: [(&str, fn()); 6] = [
        ("reference election reproduction", reference_election_reproduction),
        ("homomorphic tally equals plaintext histogram", homomorphic_tally),
        ("subset invariance and fault isolation", subset_invariance),
        ("perfect secrecy enumeration over GF(7)", perfect_secrecy),
        ("durability across 20 crash points", durability),
        ("anonymity audit of persisted artifacts", anonymity_audit),
    ];
    let quiet: Box<dyn Fn(&panic::PanicHookInfo<'_>) + Sync + Send> = Box::new(|info| {
        eprintln!("  {info}");
    });
    panic::set_hook(quiet);

    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check));
        let verdict = if outcome.is_ok() { "PASS" } else { "FAIL" };
        if outcome.is_err() {
            failed += 1;
        }
        println!("{verdict} {name} ({:.2?})", start.elapsed());
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
