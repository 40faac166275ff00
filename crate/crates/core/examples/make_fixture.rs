//! Regenerates `fixtures/timelines.csv`: three synthetic messages, each
//! scanned every 900 s, whose per-interval like and repost increments come
//! from the reference-config simulator.

use agentflow::ingest::synthetic_timelines;
use agentflow::ModelParams;

pub const MESSAGES: usize = 3;
pub const INTERVALS: usize = 4000;
pub const SEED: u64 = 20_160_101;
pub const START: i64 = 1_451_606_400;

fn main() {
    let csv = synthetic_timelines(&ModelParams::reference(), MESSAGES, INTERVALS, SEED, START);
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/timelines.csv");
    std::fs::write(&path, csv).expect("write fixture");
    println!("wrote {}", path.display());
}
