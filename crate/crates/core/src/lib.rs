//! Synthetic error injection for radiology reports.

pub mod corpus;
pub mod dataset;
pub mod exec;
pub mod inject;
pub mod lexicon;
pub mod pipeline;
pub mod report;
pub mod review;
pub mod sampler;
pub mod splice;
pub mod stats;
pub mod tagger;
pub mod taxonomy;
