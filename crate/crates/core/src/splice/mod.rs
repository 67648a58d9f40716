//! Sentence alignment between original and error reports, and per-sentence
//! labels and error classes.

pub mod align;
pub mod classify;
pub mod label;
pub mod neutral;
pub mod prompts;
pub mod pydict;
pub mod similarity;

pub use align::{align_sentences, align_texts, pair_score, MappingEntry};
pub use classify::{classify_added, classify_change, Classification};
pub use label::{label_mapping, Label, SentenceRecord};
pub use neutral::{screen_neutral, NeutralCues};
pub use prompts::{
    build_label_prompts, format_label_dict, format_mapping_dict, parse_label_response, parse_mapping_response,
    splice_reports, splice_with_llm, SpliceOutcome, SpliceParseError,
};
