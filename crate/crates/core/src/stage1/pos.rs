//! Heuristic tokenizer and coarse part-of-speech tagger for task
//! descriptions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tag {
    Noun,
    Verb,
    Adj,
    Num,
    Func,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub text: String,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreprocessError {
    #[error("empty after cleaning")]
    EmptyAfterCleaning,
}

const CLOSED_CLASS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "each", "every", "all", "any", "some", "no", "of", "in", "on",
    "at", "to", "from", "by", "with", "without", "for", "into", "onto", "over", "under", "between", "among", "through",
    "within", "about", "after", "before", "and", "or", "but", "nor", "if", "then", "else", "whether", "than", "as",
    "is", "are", "was", "were", "be", "been", "being", "it", "its", "they", "them", "their", "we", "you", "your",
    "he", "she", "which", "who", "whom", "whose", "what", "where", "when", "how", "not", "do", "does", "did", "has",
    "have", "had", "can", "could", "will", "would", "should", "may", "might", "must", "shall", "there", "here",
    "given", "using", "only", "also", "such", "so", "up", "out", "one", "two",
];

const NOUNS: &[&str] = &[
    "maximum", "minimum", "string", "strings", "list", "lists", "number", "numbers", "array", "arrays", "element",
    "elements", "sum", "product", "word", "words", "character", "characters", "char", "chars", "tuple", "tuples",
    "dictionary", "dict", "value", "values", "key", "keys", "index", "indices", "length", "integer", "integers",
    "matrix", "sequence", "series", "set", "sets", "item", "items", "digit", "digits", "factorial", "fibonacci",
    "prime", "primes", "square", "squares", "cube", "average", "mean", "median", "area", "perimeter", "volume",
    "circle", "rectangle", "triangle", "sphere", "vowel", "vowels", "space", "spaces", "sentence", "substring",
    "palindrome", "year", "leap", "temperature", "celsius", "fahrenheit", "gcd", "lcm", "divisor", "divisors",
    "power", "root", "occurrence", "occurrences", "frequency", "position", "pair", "pairs", "difference", "count",
    "total", "result", "input", "output", "function", "file", "line", "lines", "case", "name", "names", "date",
    "binary", "decimal", "hexadecimal", "bit", "bits", "row", "rows", "column", "columns", "nth", "max", "min",
];

const VERBS: &[&str] = &[
    "reverse", "remove", "check", "convert", "add", "multiply", "divide", "subtract", "merge", "split", "replace",
    "calculate", "get", "swap", "rotate", "filter", "join", "concatenate", "flatten", "insert", "delete", "append",
    "extract", "determine", "test", "generate", "create", "make", "capitalize", "double", "repeat", "shift",
    "search", "match", "compare", "validate", "toggle", "increment", "decrement", "combine", "flip", "write",
];

const ADJECTIVES: &[&str] = &[
    "even", "odd", "first", "last", "unique", "duplicate", "positive", "negative", "empty", "sorted", "equal",
    "same", "common", "distinct", "consecutive", "perfect", "uppercase", "lowercase", "upper", "lower", "long",
    "short", "small", "large", "big", "new", "second", "third", "whole", "total", "valid",
];

/// Verbs that name a code operation directly.
const CODE_VERBS: &[&str] = &["return", "print", "sort", "find", "compute"];

/// Closed-class words down-weighted in the index. Exactly fifty.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "of", "in", "on", "at", "to", "from", "by", "with", "for",
    "into", "and", "or", "but", "if", "then", "than", "as", "is", "are", "was", "were", "be", "been", "it", "its",
    "they", "them", "their", "we", "you", "which", "who", "what", "where", "when", "how", "not", "do", "does", "has",
    "have", "can", "will",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(&word)
}

/// Lowercases and splits on anything that is not a letter or digit.
pub fn clean_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Lexicon, then suffixes, then digits, then code verbs.
pub fn tag_word(word: &str) -> Tag {
    if CLOSED_CLASS.contains(&word) {
        return Tag::Other;
    }
    if NOUNS.contains(&word) {
        return Tag::Noun;
    }
    if VERBS.contains(&word) {
        return Tag::Verb;
    }
    if ADJECTIVES.contains(&word) {
        return Tag::Adj;
    }
    let ends = |suffixes: &[&str]| suffixes.iter().any(|s| word.len() > s.len() + 1 && word.ends_with(s));
    if ends(&["ing", "ed", "ize"]) {
        return Tag::Verb;
    }
    if ends(&["tion", "ness", "ment"]) {
        return Tag::Noun;
    }
    if ends(&["est", "ous", "ive"]) {
        return Tag::Adj;
    }
    if word.chars().all(|c| c.is_ascii_digit()) {
        return Tag::Num;
    }
    if CODE_VERBS.contains(&word) {
        return Tag::Func;
    }
    Tag::Other
}

pub fn preprocess_text(text: &str) -> Result<Vec<TaggedToken>, PreprocessError> {
    let tokens = clean_tokens(text);
    if tokens.is_empty() {
        return Err(PreprocessError::EmptyAfterCleaning);
    }
    Ok(tokens
        .into_iter()
        .map(|text| TaggedToken {
            tag: tag_word(&text),
            text,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(s: &str) -> Vec<(String, Tag)> {
        preprocess_text(s).unwrap().into_iter().map(|t| (t.text, t.tag)).collect()
    }

    #[test]
    fn find_the_maximum() {
        assert_eq!(
            tags("find the maximum"),
            vec![("find".into(), Tag::Func), ("the".into(), Tag::Other), ("maximum".into(), Tag::Noun)]
        );
    }

    #[test]
    fn reverse_a_string() {
        assert_eq!(
            tags("reverse a string"),
            vec![("reverse".into(), Tag::Verb), ("a".into(), Tag::Other), ("string".into(), Tag::Noun)]
        );
    }

    #[test]
    fn suffixes_digits_and_fallback() {
        assert_eq!(tag_word("counting"), Tag::Verb);
        assert_eq!(tag_word("rotated"), Tag::Verb);
        assert_eq!(tag_word("normalize"), Tag::Verb);
        assert_eq!(tag_word("rotation"), Tag::Noun);
        assert_eq!(tag_word("largest"), Tag::Adj);
        assert_eq!(tag_word("numerous"), Tag::Adj);
        assert_eq!(tag_word("42"), Tag::Num);
        assert_eq!(tag_word("compute"), Tag::Func);
        assert_eq!(tag_word("zebra"), Tag::Other);
        // too short to carry a suffix
        assert_eq!(tag_word("red"), Tag::Other);
    }

    #[test]
    fn punctuation_dropped_and_case_folded() {
        assert_eq!(tags("Find, the MAXIMUM!"), tags("find the maximum"));
        assert_eq!(preprocess_text("   !!!   "), Err(PreprocessError::EmptyAfterCleaning));
        assert_eq!(
            preprocess_text("   !!!   ").unwrap_err().to_string(),
            "empty after cleaning"
        );
    }

    #[test]
    fn fifty_stopwords() {
        assert_eq!(STOPWORDS.len(), 50);
        let unique: std::collections::HashSet<_> = STOPWORDS.iter().collect();
        assert_eq!(unique.len(), 50);
    }
}
