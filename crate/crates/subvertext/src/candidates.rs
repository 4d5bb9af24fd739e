//! Step 2: build the initial context-aware substitution set for an
//! important word by probing the masked LM once per window neighbor and
//! unioning the top-k lists.

use std::collections::HashSet;

use crate::backends::MaskedLmProvider;
use crate::text::TokenizedText;
use crate::types::AttackConfig;

/// True for fills worth keeping: single alphabetic words, allowing
/// interior apostrophes and hyphens. Sub-word fragments, punctuation, and
/// numerals are dropped.
fn is_clean_word(word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    if chars.is_empty() {
        return false;
    }
    if !chars[0].is_alphabetic() || !chars[chars.len() - 1].is_alphabetic() {
        return false;
    }
    chars
        .iter()
        .all(|c| c.is_alphabetic() || *c == '\'' || *c == '-')
}

/// Gather the union of top-k fills across every in-bounds neighbor
/// position within +/- `window_half` of `word_index`. The union is
/// duplicate-free, lowercased, ordered (probe position, then rank), and
/// never contains the original word.
pub fn generate_candidates(
    text: &TokenizedText,
    word_index: usize,
    cfg: &AttackConfig,
    mlm: &dyn MaskedLmProvider,
) -> Vec<String> {
    let original = text.word(word_index).to_lowercase();
    let lo = word_index.saturating_sub(cfg.window_half);
    let hi = (word_index + cfg.window_half).min(text.len().saturating_sub(1));
    let mut seen = HashSet::new();
    let mut union = Vec::new();
    for focus in lo..=hi {
        if focus == word_index {
            continue;
        }
        for fill in mlm.top_k_with_focus(text, word_index, focus, cfg.k) {
            let word = fill.trim().to_lowercase();
            if !is_clean_word(&word) || word == original {
                continue;
            }
            if seen.insert(word.clone()) {
                union.push(word);
            }
        }
    }
    union
}
