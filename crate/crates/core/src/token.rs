//! Surface tokens and rendering.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use unicode_normalization::UnicodeNormalization;

/// A single surface token.
///
/// `glue` means the token attaches to the preceding text with no space,
/// which is how Korean particles such as `와` or `을` are written.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Token {
    pub text: String,
    pub glue: bool,
}

impl Token {
    pub fn new(text: impl Into<String>) -> Self {
        Token { text: text.into(), glue: false }
    }

    pub fn glued(text: impl Into<String>) -> Self {
        Token { text: text.into(), glue: true }
    }

    /// Parses the `^`-prefixed notation used in grammar and lexicon files.
    pub fn from_notation(raw: &str) -> Option<Self> {
        let (glue, body) = match raw.strip_prefix('^') {
            Some(rest) => (true, rest),
            None => (false, raw),
        };
        if body.is_empty() || body.chars().any(char::is_whitespace) {
            return None;
        }
        Some(Token { text: nfc(body), glue })
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.glue {
            f.write_str("^")?;
        }
        f.write_str(&self.text)
    }
}

/// An ordered token sequence. Empty means epsilon.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct TokenString(pub Vec<Token>);

impl TokenString {
    pub fn epsilon() -> Self {
        TokenString(Vec::new())
    }

    pub fn is_epsilon(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Splits whitespace-separated notation (`"아내 ^와"`) into tokens.
    /// Returns `None` if a piece is a bare `^`.
    pub fn from_notation(raw: &str) -> Option<Self> {
        raw.split_whitespace()
            .map(Token::from_notation)
            .collect::<Option<Vec<_>>>()
            .map(TokenString)
    }

    /// Space-separated `^` notation, the inverse of [`TokenString::from_notation`].
    pub fn notation(&self) -> String {
        let mut out = String::new();
        for (i, tok) in self.0.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&alloc::format!("{tok}"));
        }
        out
    }
}

impl From<Vec<Token>> for TokenString {
    fn from(tokens: Vec<Token>) -> Self {
        TokenString(tokens)
    }
}

pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// Joins tokens with single spaces, attaching glue-flagged tokens to the
/// preceding text. A glue flag on the first token is ignored.
pub fn render<'a, I>(tokens: I) -> String
where
    I: IntoIterator<Item = &'a Token>,
{
    let mut out = String::new();
    for tok in tokens {
        if !out.is_empty() && !tok.glue {
            out.push(' ');
        }
        out.push_str(&tok.text);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ts(raw: &str) -> Vec<Token> {
        TokenString::from_notation(raw).unwrap().0
    }

    #[test]
    fn glue_attaches_particles() {
        assert_eq!(render(&ts("아내 ^와 살고")), "아내와 살고");
        assert_eq!(render(&ts("이혼 ^을 하고 싶어요")), "이혼을 하고 싶어요");
        assert_eq!(render(&ts("hello world")), "hello world");
    }

    #[test]
    fn leading_glue_is_ignored() {
        assert_eq!(render(&ts("^와 살고")), "와 살고");
        assert_eq!(render(&vec![]), "");
    }

    #[test]
    fn bare_caret_is_rejected() {
        assert!(TokenString::from_notation("a ^ b").is_none());
    }

    #[test]
    fn notation_round_trips() {
        let t = TokenString::from_notation("이혼 ^을  하고").unwrap();
        assert_eq!(t.notation(), "이혼 ^을 하고");
        assert_eq!(TokenString::from_notation(&t.notation()).unwrap(), t);
    }

    #[test]
    fn tokens_are_nfc() {
        // U+1100 U+1161 (conjoining jamo) composes to U+AC00.
        let t = Token::from_notation("\u{1100}\u{1161}").unwrap();
        assert_eq!(t.text, "\u{AC00}");
    }
}
