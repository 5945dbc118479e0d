//! Rule-based tokenizer for French medical-note text.
//!
//! Notes are segmented on whitespace and character-class boundaries, and
//! every token that carries a digit is typed as either a quantitative
//! number (`Quant`), a code number (`Code`), or a unit (`Unit`). Glued
//! forms like `50-60mmHg` are split into a numeric lexeme and its unit.
//! The distinction matters downstream: quantitative numbers get blinded,
//! code numbers and units stay in the text verbatim.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lexical class of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    /// A quantitative numeric lexeme (scalar, range, sequence, or date).
    Quant,
    /// An alphanumeric medical code ("B1B2", "22q11") or a numeric form
    /// that matches no quantitative shape ("120/80").
    Code,
    Unit,
    Punct,
}

/// A text span with its lexical class. `span` holds byte offsets into the
/// source; `source[span.0..span.1] == text` always holds for output of
/// [`tokenize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub span: (usize, usize),
    pub kind: TokenKind,
}

impl Token {
    pub fn new(text: impl Into<String>, span: (usize, usize), kind: TokenKind) -> Self {
        Token { text: text.into(), span, kind }
    }
}

/// Parsed form of a quantitative numeric lexeme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NumericForm {
    Scalar(f64),
    /// `lo <= hi`; reversed input order is normalized.
    Range { lo: f64, hi: f64 },
    /// Three or more hyphen-joined values, order preserved ("8-9-9").
    Sequence(Vec<f64>),
    /// Day/month, both within calendar bounds.
    Date { day: u8, month: u8 },
}

/// A quantitative numeric value extracted from a token, with the adjacent
/// unit token text when one directly follows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericLexeme {
    pub raw: String,
    pub form: NumericForm,
    pub unit_hint: Option<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum NumericParseError {
    #[error("no quantitative numeric form matches {0:?}")]
    MalformedNumeric(String),
    #[error("token {0:?} is not a Quant token")]
    NotQuant(String),
}

/// Closed unit vocabulary. Configurable so deployments can extend it; the
/// default covers the units the class schema needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub units: Vec<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            units: ["%", "mmHg", "bpm", "mm", "cm", "kg", "Kg", "g", "mm2", "cm3", "min"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl TokenizerConfig {
    fn is_unit(&self, text: &str) -> bool {
        self.units.iter().any(|u| u == text)
    }
}

/// Segment `source` into tokens using the default unit vocabulary.
///
/// Total function: every non-whitespace character lands in exactly one
/// token, and unrecognizable characters fall back to `Word`.
pub fn tokenize(source: &str) -> Vec<Token> {
    tokenize_with(&TokenizerConfig::default(), source)
}

pub fn tokenize_with(cfg: &TokenizerConfig, source: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = source.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if is_chunk_char(c) {
            // Maximal run of alphanumerics plus connectors that have an
            // alphanumeric on both sides ("3.23", "50-60mmHg", "14/08").
            let start = i;
            let mut end = i + 1;
            while end < chars.len() {
                let ch = chars[end].1;
                if is_chunk_char(ch) {
                    end += 1;
                } else if is_connector(ch)
                    && end + 1 < chars.len()
                    && is_chunk_char(chars[end + 1].1)
                {
                    end += 2;
                } else {
                    break;
                }
            }
            let chunk_start = pos;
            let chunk_end = byte_end(&chars, end - 1, source);
            let chunk = &source[chunk_start..chunk_end];
            emit_chunk(cfg, chunk, chunk_start, &mut tokens);
            i = start + (end - start);
        } else {
            // Single-character token: known punctuation becomes Punct, the
            // percent sign is a unit, anything else is an opaque Word.
            let end = byte_end(&chars, i, source);
            let text = &source[pos..end];
            let kind = if c == '%' {
                TokenKind::Unit
            } else if is_punct_char(c) {
                TokenKind::Punct
            } else {
                TokenKind::Word
            };
            tokens.push(Token::new(text, (pos, end), kind));
            i += 1;
        }
    }
    tokens
}

fn byte_end(chars: &[(usize, char)], idx: usize, source: &str) -> usize {
    if idx + 1 < chars.len() {
        chars[idx + 1].0
    } else {
        source.len()
    }
}

fn is_chunk_char(c: char) -> bool {
    c.is_alphabetic() || c.is_ascii_digit()
}

fn is_connector(c: char) -> bool {
    matches!(c, '.' | ',' | '-' | '/')
}

fn is_punct_char(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c, '«' | '»' | '“' | '”' | '‘' | '’' | '…' | '–' | '—' | '→' | '←' | '°' | '±' | '·')
}

/// Emit the token(s) for one chunk, splitting glued unit suffixes.
fn emit_chunk(cfg: &TokenizerConfig, chunk: &str, start: usize, out: &mut Vec<Token>) {
    let has_digit = chunk.chars().any(|c| c.is_ascii_digit());
    if !has_digit {
        let kind = if cfg.is_unit(chunk) { TokenKind::Unit } else { TokenKind::Word };
        out.push(Token::new(chunk, (start, start + chunk.len()), kind));
        return;
    }
    if cfg.is_unit(chunk) {
        // Unit-with-exponent forms like "mm2", "cm3".
        out.push(Token::new(chunk, (start, start + chunk.len()), TokenKind::Unit));
        return;
    }
    // Leading numeric part followed by a unit suffix: "50-60mmHg", "65%".
    let prefix_len = numeric_prefix_len(chunk);
    if prefix_len > 0 && prefix_len < chunk.len() {
        let (num, rest) = chunk.split_at(prefix_len);
        if cfg.is_unit(rest) && parse_numeric_form(num).is_ok() {
            out.push(Token::new(num, (start, start + prefix_len), TokenKind::Quant));
            out.push(Token::new(
                rest,
                (start + prefix_len, start + chunk.len()),
                TokenKind::Unit,
            ));
            return;
        }
    }
    let kind = classify_number_kind(cfg, chunk, None, None);
    out.push(Token::new(chunk, (start, start + chunk.len()), kind));
}

/// Byte length of the maximal numeric run (digits plus digit-flanked
/// connectors) at the start of `chunk`.
fn numeric_prefix_len(chunk: &str) -> usize {
    let bytes = chunk.as_bytes();
    let mut len = 0;
    while len < bytes.len() {
        let b = bytes[len];
        if b.is_ascii_digit() {
            len += 1;
        } else if is_connector(b as char)
            && len > 0
            && bytes[len - 1].is_ascii_digit()
            && len + 1 < bytes.len()
            && bytes[len + 1].is_ascii_digit()
        {
            len += 1;
        } else {
            break;
        }
    }
    len
}

/// Type a digit-bearing token. Pure unit forms win, anything mixing letters
/// with digits is a code number, and the rest is quantitative when a
/// numeric form parses (falling back to `Code` so the kind set stays
/// exhaustive — "120/80" stays visible through blinding).
pub fn classify_number_kind(
    cfg: &TokenizerConfig,
    token_text: &str,
    _left_neighbor: Option<&str>,
    _right_neighbor: Option<&str>,
) -> TokenKind {
    debug_assert!(token_text.chars().any(|c| c.is_ascii_digit()));
    if cfg.is_unit(token_text) {
        return TokenKind::Unit;
    }
    if token_text.chars().any(|c| c.is_alphabetic()) {
        return TokenKind::Code;
    }
    if parse_numeric_form(token_text).is_ok() {
        TokenKind::Quant
    } else {
        TokenKind::Code
    }
}

/// Parse the quantitative form of a `Quant` token. The unit hint is left
/// empty; [`numeric_lexemes`] attaches it from the token stream.
pub fn parse_numeric(token: &Token) -> Result<NumericLexeme, NumericParseError> {
    if token.kind != TokenKind::Quant {
        return Err(NumericParseError::NotQuant(token.text.clone()));
    }
    let form = parse_numeric_form(&token.text)?;
    Ok(NumericLexeme { raw: token.text.clone(), form, unit_hint: None })
}

/// Parse a raw numeric string into its form.
///
/// `a-b` is a range (normalized so lo <= hi), `a-b-c[-d…]` a sequence,
/// `d/m` a date when both components fit calendar bounds, decimal comma is
/// accepted as decimal point, and everything else is a scalar or an error.
pub fn parse_numeric_form(raw: &str) -> Result<NumericForm, NumericParseError> {
    let malformed = || NumericParseError::MalformedNumeric(raw.to_string());
    if raw.contains('/') {
        let parts: Vec<&str> = raw.split('/').collect();
        if parts.len() == 2 {
            if let (Ok(day), Ok(month)) = (parts[0].parse::<u8>(), parts[1].parse::<u8>()) {
                if (1..=31).contains(&day) && (1..=12).contains(&month) {
                    return Ok(NumericForm::Date { day, month });
                }
            }
        }
        return Err(malformed());
    }
    if raw.contains('-') {
        let parts: Vec<f64> = raw
            .split('-')
            .map(parse_decimal)
            .collect::<Result<_, _>>()
            .map_err(|_| malformed())?;
        return match parts.len() {
            2 => {
                let (lo, hi) = if parts[0] <= parts[1] {
                    (parts[0], parts[1])
                } else {
                    (parts[1], parts[0])
                };
                Ok(NumericForm::Range { lo, hi })
            }
            n if n >= 3 => Ok(NumericForm::Sequence(parts)),
            _ => Err(malformed()),
        };
    }
    parse_decimal(raw).map(NumericForm::Scalar).map_err(|_| malformed())
}

/// Plain decimal with '.' or ',' as separator; digits required.
fn parse_decimal(s: &str) -> Result<f64, ()> {
    if s.is_empty() || !s.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
        return Err(());
    }
    let seps = s.chars().filter(|c| *c == '.' || *c == ',').count();
    if seps > 1 || !s.chars().any(|c| c.is_ascii_digit()) {
        return Err(());
    }
    s.replace(',', ".").parse::<f64>().map_err(|_| ())
}

/// Extract every quantitative lexeme from a token stream, attaching the
/// directly following unit token as the hint. Returns (token index, lexeme)
/// pairs in stream order.
pub fn numeric_lexemes(tokens: &[Token]) -> Vec<(usize, NumericLexeme)> {
    let mut out = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        if tok.kind != TokenKind::Quant {
            continue;
        }
        let mut lex = match parse_numeric(tok) {
            Ok(l) => l,
            // Tokenizer output never hits this; callers feeding hand-built
            // Quant tokens get the parse error surfaced at parse_numeric.
            Err(_) => continue,
        };
        if let Some(next) = tokens.get(i + 1) {
            if next.kind == TokenKind::Unit {
                lex.unit_hint = Some(next.text.clone());
            }
        }
        out.push((i, lex));
    }
    out
}
