//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

pub mod golden;

use radfault::lexicon::Lexicon;
use radfault::report::Report;
use radfault::splice::align_sentences;

pub type Pair = (Option<usize>, Option<usize>);

pub fn aligned_pairs(original: &Report, error: &Report) -> Vec<Pair> {
    align_sentences(Lexicon::builtin(), original, error).iter().map(|m| (m.original_index, m.error_index)).collect()
}
