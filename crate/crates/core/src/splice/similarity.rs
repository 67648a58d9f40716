//! Token-level sentence similarity.

/// Pairs scoring at or above this similarity may be aligned.
pub const MATCH_THRESHOLD: f64 = 0.5;

/// Fixed-point scale used for alignment scores.
pub const SCORE_SCALE: f64 = 1_000_000.0;

/// Lowercased word tokens with edge punctuation removed. Hyphens and
/// slashes separate tokens.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| c.is_whitespace() || c == '-' || c == '/')
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn char_distance(a: &str, b: &str) -> usize {
    if a.is_ascii() && b.is_ascii() && b.len() < 64 {
        return ascii_distance(a.as_bytes(), b.as_bytes());
    }
    strsim::levenshtein(a, b)
}

fn ascii_distance(a: &[u8], b: &[u8]) -> usize {
    let mut row = [0usize; 64];
    for (j, r) in row.iter_mut().enumerate().take(b.len() + 1) {
        *r = j;
    }
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let next = (diag + usize::from(ca != cb)).min(row[j] + 1).min(row[j + 1] + 1);
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

/// 1 minus the normalized character edit distance.
pub fn token_similarity(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    let longest =
        if a.is_ascii() && b.is_ascii() { a.len().max(b.len()) } else { a.chars().count().max(b.chars().count()) };
    1.0 - char_distance(a, b) as f64 / longest as f64
}

/// `1 - token_similarity(a, b)` when that is below `limit`.
fn dissimilarity_below(a: &str, b: &str, limit: f64) -> Option<f64> {
    if a == b {
        return Some(0.0);
    }
    if !(a.is_ascii() && b.is_ascii() && b.len() < 64) {
        let d = 1.0 - token_similarity(a, b);
        return (d < limit).then_some(d);
    }
    let longest = a.len().max(b.len());
    let cap = (limit * longest as f64).ceil() as usize;
    if a.len().abs_diff(b.len()) >= cap {
        return None;
    }
    let d = ascii_distance(a.as_bytes(), b.as_bytes()) as f64 / longest as f64;
    (d < limit).then_some(d)
}

/// Soft token Levenshtein similarity: substitutions cost the token
/// dissimilarity, insertions and deletions cost one.
pub fn token_list_similarity(a: &[String], b: &[String]) -> f64 {
    similarity_at_least(a, b, 0.0).unwrap_or(0.0)
}

/// As [`token_list_similarity`], but gives up with None once the result is
/// certain to fall below `floor`.
pub fn similarity_at_least(a: &[String], b: &[String], floor: f64) -> Option<f64> {
    let (n, m) = (a.len(), b.len());
    if n == 0 && m == 0 {
        return Some(1.0);
    }
    let longest = n.max(m) as f64;
    let budget = (1.0 - floor) * longest + 1e-9;
    let mut prev: Vec<f64> = (0..=m).map(|j| j as f64).collect();
    let mut cur = vec![0.0; m + 1];
    for i in 1..=n {
        cur[0] = i as f64;
        let mut row_min = cur[0];
        for j in 1..=m {
            let gap = (prev[j] + 1.0).min(cur[j - 1] + 1.0);
            // A substitution never costs less than zero, so skip scoring
            // pairs that cannot beat a gap.
            cur[j] = if prev[j - 1] >= gap {
                gap
            } else {
                match dissimilarity_below(&a[i - 1], &b[j - 1], gap - prev[j - 1]) {
                    Some(d) => prev[j - 1] + d,
                    None => gap,
                }
            };
            row_min = row_min.min(cur[j]);
        }
        // Costs only grow along a path.
        if row_min > budget {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let sim = (1.0 - prev[m] / longest).clamp(0.0, 1.0);
    (sim >= floor).then_some(sim)
}

pub fn sentence_similarity(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    let (ta, tb) = (tokens(a), tokens(b));
    if ta.is_empty() && tb.is_empty() {
        return 0.0;
    }
    token_list_similarity(&ta, &tb)
}

/// Similarity as a fixed-point integer, so alignment ties are exact.
pub fn score(similarity: f64) -> i64 {
    (similarity * SCORE_SCALE).round() as i64
}

/// The differing middle of two token lists once the common prefix and
/// suffix are removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenDiff {
    pub removed: Vec<String>,
    pub inserted: Vec<String>,
}

pub fn token_diff(a: &[String], b: &[String]) -> TokenDiff {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let max_suffix = a.len().min(b.len()) - prefix;
    let suffix = a.iter().rev().zip(b.iter().rev()).take(max_suffix).take_while(|(x, y)| x == y).count();
    TokenDiff { removed: a[prefix..a.len() - suffix].to_vec(), inserted: b[prefix..b.len() - suffix].to_vec() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenization() {
        assert_eq!(
            tokens("Findings: A right-sided PICC line, 4.3 cm."),
            vec!["findings", "a", "right", "sided", "picc", "line", "4.3", "cm"]
        );
        assert_eq!(tokens("from ___."), vec!["from"]);
    }

    #[test]
    fn similarity_bounds() {
        assert_eq!(sentence_similarity("No pneumonia.", "No pneumonia."), 1.0);
        let typo =
            sentence_similarity("This has been seen on multiple images.", "This has been seen on muitiple images.");
        assert!(typo > 0.95 && typo < 1.0);
        let unrelated = sentence_similarity("Cardiac size is normal.", "Large bilateral pleural effusions are noted.");
        assert!(unrelated < MATCH_THRESHOLD);
    }

    #[test]
    fn ascii_distance_agrees_with_strsim() {
        for (a, b) in [("", "abc"), ("kitten", "sitting"), ("muitiple", "multiple"), ("same", "same"), ("ab", "")] {
            assert_eq!(char_distance(a, b), strsim::levenshtein(a, b), "{a} {b}");
        }
        assert_eq!(char_distance("größe", "grosse"), strsim::levenshtein("größe", "grosse"));
    }

    #[test]
    fn bounded_dissimilarity() {
        assert_eq!(dissimilarity_below("same", "same", 0.1), Some(0.0));
        assert_eq!(dissimilarity_below("a", "abcdef", 0.5), None);
        let d = dissimilarity_below("multiple", "muitiple", 1.0).unwrap();
        assert!((d - (1.0 - token_similarity("multiple", "muitiple"))).abs() < 1e-12);
    }

    #[test]
    fn early_exit_matches_full_computation() {
        let pairs = [
            ("There is no pneumothorax.", "There is a small pneumothorax."),
            ("Cardiac size is normal.", "Large bilateral pleural effusions are noted."),
            ("Heart size is normal.", "Heart size is mildly enlarged."),
        ];
        for (x, y) in pairs {
            let (a, b) = (tokens(x), tokens(y));
            let full = token_list_similarity(&a, &b);
            assert_eq!(similarity_at_least(&a, &b, MATCH_THRESHOLD), (full >= MATCH_THRESHOLD).then_some(full));
        }
    }

    #[test]
    fn diff_middle() {
        let a = tokens("which is stable");
        let b = tokens("which stable");
        let d = token_diff(&a, &b);
        assert_eq!(d.removed, vec!["is"]);
        assert!(d.inserted.is_empty());
        let d = token_diff(&tokens("a a"), &tokens("a"));
        assert_eq!((d.removed.len(), d.inserted.len()), (1, 0));
    }
}
