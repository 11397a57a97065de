//! Replays the reference election and checks every intermediate value.

use std::fmt::Write;

use anyhow::{ensure, Result};
use serde_json::{json, Value};

use sharevote_core::worked_example::{self, WorkedExample, TALLY_CENTERS};

/// Reference shares: `SHARES[voter][center]` is `y` at `x = center + 1`.
pub const SHARES: [[u64; 5]; 5] = [
    [91, 269, 535, 889, 1331],
    [327, 498, 769, 1140, 1611],
    [70, 251, 544, 949, 1466],
    [113, 278, 511, 812, 1181],
    [167, 475, 925, 1517, 2251],
];
pub const SECRETS: [u64; 5] = [1, 256, 1, 16, 1];
pub const POLYNOMIAL: [u64; 3] = [275, 238, 255];
pub const COUNTS: [u64; 3] = [3, 1, 1];

fn column_sums() -> Vec<u64> {
    (0..5).map(|j| SHARES.iter().map(|row| row[j]).sum()).collect()
}

/// Runs the example and fails on the first value that differs from the reference.
pub fn run_checked() -> Result<WorkedExample> {
    let run = worked_example::run()?;
    ensure!(
        run.config.layout.block_width() == 4,
        "block width {}",
        run.config.layout.block_width()
    );
    ensure!(run.secrets == SECRETS, "secrets {:?}", run.secrets);
    for (i, (row, expected)) in run.shares.iter().zip(SHARES).enumerate() {
        for (j, (share, want)) in row.iter().zip(expected).enumerate() {
            ensure!(
                share.x == j as u64 + 1 && share.y.value() == want,
                "voter {} center {}: got ({},{}), expected ({},{want})",
                i + 1,
                j + 1,
                share.x,
                share.y,
                j + 1
            );
        }
    }
    let sums: Vec<u64> = run.partial_sums.iter().map(|p| p.sum.value()).collect();
    ensure!(sums == column_sums(), "column sums {sums:?}");
    let poly: Vec<u64> = run.tally.polynomial.coeffs().iter().map(|c| c.value()).collect();
    ensure!(poly == POLYNOMIAL, "polynomial {poly:?}");
    ensure!(
        run.tally.counts.as_slice() == COUNTS,
        "counts {:?}",
        run.tally.counts
    );
    ensure!(run.verification.unanimous, "centers disagree");
    Ok(run)
}

fn block_string(value: u64, width: u32, blocks: usize) -> String {
    (0..blocks)
        .rev()
        .map(|b| {
            format!(
                "{:0w$b}",
                (value >> (b as u32 * width)) & ((1 << width) - 1),
                w = width as usize
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render(run: &WorkedExample) -> String {
    let mut out = run.share_grid();
    let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out);
    let _ = writeln!(out, "secrets {}", join(&run.secrets));
    let poly: Vec<u64> = run.tally.polynomial.coeffs().iter().map(|c| c.value()).collect();
    let centers: Vec<String> = TALLY_CENTERS.iter().map(u64::to_string).collect();
    let _ = writeln!(
        out,
        "polynomial {} + {}x + {}x^2 from centers {}",
        poly[0],
        poly[1],
        poly[2],
        centers.join(",")
    );
    let layout = run.config.layout;
    let _ = writeln!(
        out,
        "constant {} = {}",
        run.tally.constant_term,
        block_string(
            run.tally.constant_term.value(),
            layout.block_width(),
            layout.candidates()
        )
    );
    let _ = writeln!(out, "{}", crate::render::count_line(run.tally.counts.as_slice()));
    let _ = writeln!(
        out,
        "verify: unanimous over {} subsets",
        run.verification.subsets.len()
    );
    let _ = writeln!(out, "all reference values reproduced");
    out
}

pub fn to_json(run: &WorkedExample) -> Value {
    json!({
        "secrets": run.secrets,
        "shares": run.shares.iter().map(|row| row.iter().map(|s| s.y.value()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "partial_sums": run.partial_sums.iter().map(|p| p.sum.value()).collect::<Vec<_>>(),
        "polynomial": run.tally.polynomial.coeffs().iter().map(|c| c.value()).collect::<Vec<_>>(),
        "counts": run.tally.counts.as_slice(),
        "centers_used": TALLY_CENTERS,
        "subsets_checked": run.verification.subsets.len(),
        "unanimous": run.verification.unanimous,
    })
}
