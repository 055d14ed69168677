//! Regenerates demo/demo_corpus.jsonl: a small synthetic, linearly
//! separable transcript corpus for offline runs.
//!
//! Usage: cargo run -p advish-core --example generate_demo_corpus -- [path]

use advish_core::corpus::synthetic::{generate, SyntheticOpts};
use advish_core::corpus::write_jsonl;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "demo/demo_corpus.jsonl".to_string());
    let corpus = generate(40, 2024, SyntheticOpts { doc_len: 14 });
    write_jsonl(&corpus, std::path::Path::new(&path)).expect("write corpus");
    println!("wrote {} transcripts to {path}", corpus.len());
}
