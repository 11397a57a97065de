//! Plain-text renderings of service responses.

use sharevote_core::Standing;
use sharevote_server::wire::{ElectionDescriptor, TallyResponse, VerifyResponse};

/// `candidate1=3 candidate2=1 …`, labelled by 1-based index.
pub fn count_line(counts: &[u64]) -> String {
    counts
        .iter()
        .enumerate()
        .map(|(i, n)| format!("candidate{}={n}", i + 1))
        .collect::<Vec<_>>()
        .join(" ")
}

fn name(names: &[String], index: usize) -> String {
    match names.get(index - 1) {
        Some(n) => format!("{n} (candidate{index})"),
        None => format!("candidate{index}"),
    }
}

pub fn standing(names: &[String], standing: &Standing) -> String {
    match standing {
        Standing::NoVotes => "no votes cast".to_owned(),
        Standing::Winner { candidate } => format!("winner: {}", name(names, *candidate)),
        Standing::Tie { tied, .. } => {
            let tied: Vec<String> = tied.iter().map(|&i| name(names, i)).collect();
            format!("tie between {}", tied.join(", "))
        }
    }
}

pub fn layout(d: &ElectionDescriptor) -> String {
    format!(
        "election {}: {} candidates, m={}, k={} of {} centers\nw={}, total={} bits\nprime={}",
        d.election_id,
        d.candidate_count,
        d.voter_bound,
        d.threshold,
        d.centers,
        d.block_width,
        d.total_width,
        d.prime
    )
}

pub fn tally(t: &TallyResponse) -> String {
    let centers: Vec<String> = t.centers_used.iter().map(u64::to_string).collect();
    let poly: Vec<String> = t.polynomial.iter().map(ToString::to_string).collect();
    format!(
        "{}\n{}\nballots: {}\ncenters used: {}\npolynomial: [{}]",
        count_line(&t.counts),
        standing(&t.candidates, &t.standing),
        t.total_ballots,
        centers.join(","),
        poly.join(", ")
    )
}

pub fn verify(v: &VerifyResponse) -> String {
    let mut lines = Vec::new();
    let scope = format!(
        "{} of {} subsets checked{}",
        v.subsets_checked,
        v.subsets_possible,
        if v.exhaustive { "" } else { " (sampled)" }
    );
    if v.unanimous {
        lines.push("unanimous".to_owned());
    } else {
        lines.push("inconsistent".to_owned());
        match (v.isolated, v.suspects.as_slice()) {
            (Some(j), _) => lines.push(format!("corrupt center: {j}")),
            (None, []) => lines.push("no single center explains the disagreement".to_owned()),
            (None, many) => {
                let ids: Vec<String> = many.iter().map(u64::to_string).collect();
                lines.push(format!(
                    "cannot isolate; any of centers {} could be corrupt",
                    ids.join(",")
                ));
            }
        }
    }
    lines.push(scope);
    if let Some(counts) = &v.consensus_counts {
        lines.push(format!("consensus: {}", count_line(counts)));
    }
    if v.count_mismatch {
        lines.push("warning: centers report different ballot counts".to_owned());
    }
    if !v.unreachable.is_empty() {
        let ids: Vec<String> = v.unreachable.iter().map(u64::to_string).collect();
        lines.push(format!("unreachable centers: {}", ids.join(",")));
    }
    lines.join("\n")
}
