//! Three-error plan sampling and exact plan probabilities.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::tagger::{Tag, TagProfile, TagSet};
use crate::taxonomy::{Category, ErrorClass};

/// Tolerance for the normalized-weight sum check.
const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorPlan {
    pub content_addition: ErrorClass,
    pub linguistic: ErrorClass,
    pub context_slot: ErrorClass,
    pub context_fell_back: bool,
    pub seed: u64,
}

impl ErrorPlan {
    /// The three classes in prompt order: context, content, linguistic.
    pub fn classes(&self) -> [ErrorClass; 3] {
        [self.context_slot, self.content_addition, self.linguistic]
    }

    pub fn contains(&self, class: ErrorClass) -> bool {
        self.classes().contains(&class)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error("invalid tag profile: {0}")]
    InvalidProfile(String),
    #[error("plan is inconsistent with the report tags: {0}")]
    InconsistentPlan(String),
}

/// Stable per-report seed: first 8 bytes of sha256(run_seed || id).
pub fn derive_seed(run_seed: u64, report_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    h.update(report_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Seed for the n-th re-plan of a report.
pub fn attempt_seed(seed: u64, attempt: u32) -> u64 {
    if attempt == 0 {
        return seed;
    }
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(attempt.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn check_profile(profile: &TagProfile) -> Result<(), SampleError> {
    let mut total = 0.0;
    for s in &profile.tags {
        if !(0.0..=1.0).contains(&s.normalized_weight) || s.normalized_weight.is_nan() {
            return Err(SampleError::InvalidProfile(format!(
                "normalized weight of {} is {}",
                s.tag, s.normalized_weight
            )));
        }
        if s.absent && s.normalized_weight != 0.0 {
            return Err(SampleError::InvalidProfile(format!("absent tag {} has weight", s.tag)));
        }
        total += s.normalized_weight;
    }
    if profile.tags.len() != Tag::ALL.len() {
        return Err(SampleError::InvalidProfile("profile must list all four tags".into()));
    }
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(SampleError::InvalidProfile(format!("weights sum to {total}")));
    }
    Ok(())
}

/// Present tags that carry weight in the profile.
fn effective_tags(tags: &TagSet, profile: &TagProfile) -> Vec<Tag> {
    tags.iter().filter(|&t| profile.normalized_weight(t) > 0.0).collect()
}

/// Context-slot distribution for a report with the given tags. Falls back
/// to uniform over content-addition and linguistic classes when no
/// weighted tag is present.
pub fn context_distribution(
    tags: &TagSet,
    profile: &TagProfile,
) -> Result<(Vec<(ErrorClass, f64)>, bool), SampleError> {
    check_profile(profile)?;
    let present = effective_tags(tags, profile);
    if present.is_empty() {
        let pool: Vec<ErrorClass> = ErrorClass::CONTENT_ADDITION.into_iter().chain(ErrorClass::LINGUISTIC).collect();
        let p = 1.0 / pool.len() as f64;
        return Ok((pool.into_iter().map(|c| (c, p)).collect(), true));
    }
    let denom: f64 = present.iter().map(|&t| profile.normalized_weight(t) * f64::from(t.error_count())).sum();
    let dist = ErrorClass::CONTEXT_DEPENDENT
        .into_iter()
        .filter_map(|c| {
            let t = c.required_tag()?;
            present.contains(&t).then(|| (c, profile.normalized_weight(t) / denom))
        })
        .collect();
    Ok((dist, false))
}

/// Draws a plan. Content and linguistic slots are uniform over their
/// categories; the context slot follows `context_distribution`.
pub fn sample_plan(tags: &TagSet, profile: &TagProfile, seed: u64) -> Result<ErrorPlan, SampleError> {
    let (context, fell_back) = context_distribution(tags, profile)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let content_addition = ErrorClass::CONTENT_ADDITION[rng.gen_range(0..ErrorClass::CONTENT_ADDITION.len())];
    let linguistic = ErrorClass::LINGUISTIC[rng.gen_range(0..ErrorClass::LINGUISTIC.len())];
    let weights =
        WeightedIndex::new(context.iter().map(|(_, p)| *p)).map_err(|e| SampleError::InvalidProfile(e.to_string()))?;
    let context_slot = context[weights.sample(&mut rng)].0;
    Ok(ErrorPlan { content_addition, linguistic, context_slot, context_fell_back: fell_back, seed })
}

/// Exact probability of `plan` given the tags.
pub fn plan_probability(plan: &ErrorPlan, tags: &TagSet, profile: &TagProfile) -> Result<f64, SampleError> {
    if plan.content_addition.category() != Some(Category::ContentAddition) {
        return Err(SampleError::InconsistentPlan(format!(
            "{} is not a content-addition class",
            plan.content_addition
        )));
    }
    if plan.linguistic.category() != Some(Category::LinguisticQuality) {
        return Err(SampleError::InconsistentPlan(format!("{} is not a linguistic class", plan.linguistic)));
    }
    let (context, fell_back) = context_distribution(tags, profile)?;
    if fell_back != plan.context_fell_back {
        return Err(SampleError::InconsistentPlan(if plan.context_fell_back {
            "plan fell back although a weighted tag is present".into()
        } else {
            "plan uses a context class but no weighted tag is present".into()
        }));
    }
    let p_context =
        context.iter().find(|(c, _)| *c == plan.context_slot).map(|(_, p)| *p).ok_or_else(|| {
            SampleError::InconsistentPlan(format!("context slot {} is not available", plan.context_slot))
        })?;
    let p_content = 1.0 / ErrorClass::CONTENT_ADDITION.len() as f64;
    let p_linguistic = 1.0 / ErrorClass::LINGUISTIC.len() as f64;
    Ok(p_context * p_content * p_linguistic)
}

/// Every plan with non-zero probability, paired with that probability.
pub fn enumerate_plans(tags: &TagSet, profile: &TagProfile) -> Result<Vec<(ErrorPlan, f64)>, SampleError> {
    let (context, fell_back) = context_distribution(tags, profile)?;
    let mut out = Vec::new();
    for a in ErrorClass::CONTENT_ADDITION {
        for l in ErrorClass::LINGUISTIC {
            for &(c, _) in &context {
                let plan = ErrorPlan {
                    content_addition: a,
                    linguistic: l,
                    context_slot: c,
                    context_fell_back: fell_back,
                    seed: 0,
                };
                out.push((plan, plan_probability(&plan, tags, profile)?));
            }
        }
    }
    Ok(out)
}
