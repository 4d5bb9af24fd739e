//! Word-level tokenization and the sentence container the attack mutates.
//!
//! Tokenization is whitespace splitting with leading/trailing punctuation
//! peeled into separate tokens. Punctuation tokens are kept in the sequence
//! but flagged unattackable. Interior apostrophes and hyphens stay inside
//! the word, so contractions like "You'd" survive as one token.
//!
//! Detokenization joins tokens with single spaces except that punctuation
//! peeled from the end of a word re-attaches to the left and punctuation
//! peeled from the front re-attaches to the right. That is the whole
//! whitespace normalization contract: `detokenize` is a fixed point after
//! one tokenize/detokenize pass.

use crate::error::{Error, Result};

/// Reserved token substituted for a word when probing its importance.
pub const MASK_SYMBOL: &str = "[MASK-SLOT]";

/// Small function-word list used when stopword exclusion is enabled.
const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "an", "and", "any", "are", "as", "at", "be", "been", "but",
    "by", "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her",
    "his", "i", "if", "in", "into", "is", "it", "its", "me", "my", "no", "not", "of", "on", "or",
    "our", "she", "so", "that", "the", "their", "them", "then", "there", "they", "this", "to",
    "up", "was", "we", "were", "what", "when", "which", "who", "will", "with", "would", "you",
    "your",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.iter().any(|s| word.eq_ignore_ascii_case(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Punctuation,
}

/// How a token glues to its neighbors when the sentence is rebuilt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Attach {
    /// Spaced like an ordinary word (also used for standalone punctuation).
    Spaced,
    /// No space before this token ("location" + "!").
    Left,
    /// No space after this token (opening quotes and brackets).
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    text: String,
    kind: TokenKind,
    attach: Attach,
}

impl Token {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

/// Casing shape of a word, recorded at tokenize time and re-applied to
/// substitutions so "Nice" is replaced by "Fantastic", not "fantastic".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Casing {
    Lower,
    Title,
    Upper,
    Mixed,
}

fn casing_of(word: &str) -> Casing {
    let alpha: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    if alpha.is_empty() || alpha.iter().all(|c| c.is_lowercase()) {
        return Casing::Lower;
    }
    if alpha.len() > 1 && alpha.iter().all(|c| c.is_uppercase()) {
        return Casing::Upper;
    }
    let first_upper = alpha[0].is_uppercase();
    if first_upper && alpha[1..].iter().all(|c| c.is_lowercase()) {
        return Casing::Title;
    }
    if first_upper && alpha.len() == 1 {
        return Casing::Title;
    }
    Casing::Mixed
}

fn match_case(replacement: &str, casing: Casing) -> String {
    match casing {
        Casing::Lower => replacement.to_lowercase(),
        Casing::Upper => replacement.to_uppercase(),
        Casing::Title => {
            let lower = replacement.to_lowercase();
            let mut chars = lower.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars).collect(),
                None => lower,
            }
        }
        // No sensible pattern to transfer; keep the candidate as provided.
        Casing::Mixed => replacement.to_string(),
    }
}

/// An input sample as an ordered token sequence with substitution and
/// masking operations. Immutable: every edit returns a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedText {
    words: Vec<Token>,
    original_raw: String,
    case_map: Vec<Casing>,
}

/// Whitespace-and-punctuation word tokenization. Punctuation tokens are
/// retained but flagged unattackable. Fails on empty input.
pub fn tokenize(raw: &str) -> Result<TokenizedText> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(Error::EmptyText);
    }
    let mut tokens = Vec::new();
    for chunk in trimmed.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && !chars[start].is_alphanumeric() {
            start += 1;
        }
        while end > start && !chars[end - 1].is_alphanumeric() {
            end -= 1;
        }
        if start == end {
            // Chunk is pure punctuation; keep it spaced ("&", "--").
            tokens.push(Token {
                text: chunk.to_string(),
                kind: TokenKind::Punctuation,
                attach: Attach::Spaced,
            });
            continue;
        }
        for c in &chars[..start] {
            tokens.push(Token {
                text: c.to_string(),
                kind: TokenKind::Punctuation,
                attach: Attach::Right,
            });
        }
        tokens.push(Token {
            text: chars[start..end].iter().collect(),
            kind: TokenKind::Word,
            attach: Attach::Spaced,
        });
        for c in &chars[end..] {
            tokens.push(Token {
                text: c.to_string(),
                kind: TokenKind::Punctuation,
                attach: Attach::Left,
            });
        }
    }
    let case_map = tokens.iter().map(|t| casing_of(&t.text)).collect();
    Ok(TokenizedText {
        words: tokens,
        original_raw: raw.to_string(),
        case_map,
    })
}

impl TokenizedText {
    /// Total token count, punctuation included. This is the denominator of
    /// the perturbation percentage.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index].text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.words
    }

    pub fn original_raw(&self) -> &str {
        &self.original_raw
    }

    /// A word token may be masked or substituted; punctuation may not.
    pub fn is_attackable(&self, index: usize) -> bool {
        self.words[index].is_word()
    }

    pub fn attackable_indices(&self, exclude_stopwords: bool) -> Vec<usize> {
        (0..self.words.len())
            .filter(|&i| self.words[i].is_word())
            .filter(|&i| !exclude_stopwords || !is_stopword(&self.words[i].text))
            .collect()
    }

    /// Substitute `replacement` at `index`, matching the original word's
    /// casing (sentence-initial capitalization preserved).
    pub fn with_word(&self, index: usize, replacement: &str) -> TokenizedText {
        self.with_word_raw(index, &match_case(replacement, self.case_map[index]))
    }

    /// Substitute verbatim, without case matching. Used for mask symbols.
    pub fn with_word_raw(&self, index: usize, replacement: &str) -> TokenizedText {
        let mut out = self.clone();
        out.words[index].text = replacement.to_string();
        out
    }

    /// Apply several case-matched substitutions at once.
    pub fn with_words<'a, I>(&self, substitutions: I) -> TokenizedText
    where
        I: IntoIterator<Item = (usize, &'a str)>,
    {
        let mut out = self.clone();
        for (index, replacement) in substitutions {
            out.words[index].text = match_case(replacement, self.case_map[index]);
        }
        out
    }

    /// Rebuild the sentence under the documented whitespace normalization.
    pub fn detokenize(&self) -> String {
        let mut out = String::new();
        let mut glue_right = false;
        for tok in &self.words {
            if !out.is_empty() && !glue_right && tok.attach != Attach::Left {
                out.push(' ');
            }
            out.push_str(&tok.text);
            glue_right = tok.attach == Attach::Right;
        }
        out
    }

    /// Plain-space join of the tokens within `radius` of `center`, used by
    /// the windowed semantic-score variant for long documents.
    pub fn window_text(&self, center: usize, radius: usize) -> String {
        let lo = center.saturating_sub(radius);
        let hi = (center + radius).min(self.words.len().saturating_sub(1));
        self.words[lo..=hi]
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl std::fmt::Display for TokenizedText {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.detokenize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn whitespace_split() {
        let t = tokenize("Nice place to hang out").unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.tokens().iter().all(|t| t.is_word()));
    }

    #[test]
    fn contraction_kept_whole() {
        let t = tokenize("You'd better choose").unwrap();
        let words: Vec<&str> = t.tokens().iter().map(|t| t.text()).collect();
        assert_eq!(words, vec!["You'd", "better", "choose"]);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(tokenize(""), Err(Error::EmptyText)));
        assert!(matches!(tokenize("   "), Err(Error::EmptyText)));
    }

    // Golden tokenization of a movie-review sentence with a possessive,
    // a contraction, and trailing punctuation.
    #[test]
    fn golden_review_sentence() {
        let raw = "You'd better choose Paul Verhoeven's even if you have watched it.";
        let t = tokenize(raw).unwrap();
        let words: Vec<&str> = t.tokens().iter().map(|t| t.text()).collect();
        assert_eq!(
            words,
            vec![
                "You'd",
                "better",
                "choose",
                "Paul",
                "Verhoeven's",
                "even",
                "if",
                "you",
                "have",
                "watched",
                "it",
                "."
            ]
        );
        assert!(!t.is_attackable(11));
        assert_eq!(t.detokenize(), raw);
    }

    #[test]
    fn punctuation_flagged_unattackable() {
        let t = tokenize("Great location! Close to shops and theatre.").unwrap();
        assert_eq!(t.len(), 9);
        assert!(!t.is_attackable(2)); // "!"
        assert!(!t.is_attackable(8)); // "."
        assert_eq!(t.attackable_indices(false).len(), 7);
        assert_eq!(t.detokenize(), "Great location! Close to shops and theatre.");
    }

    #[test]
    fn standalone_punctuation_stays_spaced() {
        let t = tokenize("hang out & read").unwrap();
        assert_eq!(t.detokenize(), "hang out & read");
        assert!(!t.is_attackable(2));
    }

    #[test]
    fn quotes_reattach() {
        let t = tokenize("he said \"nice staff\" twice").unwrap();
        assert_eq!(t.detokenize(), "he said \"nice staff\" twice");
    }

    #[test]
    fn substitution_matches_case() {
        let t = tokenize("Nice place to hang out").unwrap();
        let sub = t.with_word(0, "fantastic");
        assert_eq!(sub.word(0), "Fantastic");
        let t2 = tokenize("GREAT movie here today").unwrap();
        assert_eq!(t2.with_word(0, "awful").word(0), "AWFUL");
    }

    #[test]
    fn mask_substitution_is_verbatim() {
        let t = tokenize("Nice place").unwrap();
        let masked = t.with_word_raw(0, MASK_SYMBOL);
        assert_eq!(masked.word(0), MASK_SYMBOL);
        assert_eq!(masked.detokenize(), "[MASK-SLOT] place");
    }

    #[test]
    fn stopword_exclusion_filters_ranking_pool() {
        let t = tokenize("the staff was great").unwrap();
        assert_eq!(t.attackable_indices(false), vec![0, 1, 2, 3]);
        assert_eq!(t.attackable_indices(true), vec![1, 3]);
    }

    #[test]
    fn multi_substitution() {
        let t = tokenize("the food was good and nice").unwrap();
        let sub = t.with_words([(2usize, "is"), (3usize, "bad")]);
        assert_eq!(sub.word(2), "is");
        assert_eq!(sub.word(3), "bad");
        assert_eq!(sub.word(5), "nice");
    }

    proptest! {
        // detokenize is a fixed point after one pass: the documented
        // whitespace normalization.
        #[test]
        fn detokenize_round_trips(raw in "[a-zA-Z.,!?' ]{1,60}") {
            if let Ok(t) = tokenize(&raw) {
                let once = t.detokenize();
                let again = tokenize(&once).unwrap().detokenize();
                prop_assert_eq!(once, again);
            }
        }

        #[test]
        fn substitute_then_read(raw in "[a-z]{1,8}( [a-z]{1,8}){0,6}", idx in 0usize..7) {
            let t = tokenize(&raw).unwrap();
            let idx = idx % t.len();
            let sub = t.with_word(idx, "zzz");
            prop_assert!(sub.word(idx).eq_ignore_ascii_case("zzz"));
        }
    }
}
