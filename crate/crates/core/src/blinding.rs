//! The blind-dataset transform: every quantitative number is replaced by a
//! placeholder word so the classifier must read context instead of the
//! value itself. Code numbers and units pass through untouched, and the
//! alignment keeps enough information to restore the original stream and to
//! project per-token predictions back onto source values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::ClassLabel;
use crate::tokenizer::{parse_numeric, NumericLexeme, Token, TokenKind};

pub const DEFAULT_PLACEHOLDER: &str = "nombre";

/// One blinded position: which token was replaced, where it came from, and
/// the parsed value that used to sit there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentEntry {
    pub blinded_index: usize,
    pub original_span: (usize, usize),
    pub lexeme: NumericLexeme,
}

/// Token stream after blinding, plus the reversible alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindedText {
    pub tokens: Vec<Token>,
    pub alignment: Vec<AlignmentEntry>,
}

#[derive(Debug, Error, PartialEq)]
pub enum BlindingError {
    #[error("label count {labels} does not match token count {tokens}")]
    LengthMismatch { labels: usize, tokens: usize },
}

/// Replace each `Quant` token with `placeholder`. A range or sequence is a
/// single token and becomes a single placeholder. The placeholder token is
/// an ordinary `Word`, so blinding an already-blinded stream changes
/// nothing.
pub fn blind(tokens: &[Token], placeholder: &str) -> BlindedText {
    let mut out = Vec::with_capacity(tokens.len());
    let mut alignment = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        if tok.kind == TokenKind::Quant {
            let mut lexeme = parse_numeric(tok)
                .expect("tokenizer output guarantees Quant tokens parse");
            if let Some(next) = tokens.get(i + 1) {
                if next.kind == TokenKind::Unit {
                    lexeme.unit_hint = Some(next.text.clone());
                }
            }
            alignment.push(AlignmentEntry {
                blinded_index: i,
                original_span: tok.span,
                lexeme,
            });
            out.push(Token::new(placeholder, tok.span, TokenKind::Word));
        } else {
            out.push(tok.clone());
        }
    }
    BlindedText { tokens: out, alignment }
}

pub fn blind_default(tokens: &[Token]) -> BlindedText {
    blind(tokens, DEFAULT_PLACEHOLDER)
}

/// Restore the original token stream by substituting each aligned lexeme's
/// raw text back at its placeholder position.
pub fn unblind(blinded: &BlindedText) -> Vec<Token> {
    let mut tokens = blinded.tokens.clone();
    for entry in &blinded.alignment {
        let tok = &mut tokens[entry.blinded_index];
        tok.text = entry.lexeme.raw.clone();
        tok.kind = TokenKind::Quant;
        tok.span = entry.original_span;
    }
    tokens
}

/// Map per-token predictions back onto the source values: one row per
/// blinded position, carrying the label predicted there.
pub fn project_predictions(
    blinded: &BlindedText,
    labels: &[ClassLabel],
) -> Result<Vec<(NumericLexeme, ClassLabel, (usize, usize))>, BlindingError> {
    if labels.len() != blinded.tokens.len() {
        return Err(BlindingError::LengthMismatch {
            labels: labels.len(),
            tokens: blinded.tokens.len(),
        });
    }
    Ok(blinded
        .alignment
        .iter()
        .map(|e| (e.lexeme.clone(), labels[e.blinded_index], e.original_span))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::{tokenize, NumericForm};

    fn blinded_texts(b: &BlindedText) -> Vec<&str> {
        b.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn single_scalar() {
        let toks = tokenize("FC 120");
        let b = blind_default(&toks);
        assert_eq!(blinded_texts(&b), vec!["FC", "nombre"]);
        assert_eq!(b.alignment.len(), 1);
        assert_eq!(b.alignment[0].lexeme.form, NumericForm::Scalar(120.0));
    }

    #[test]
    fn weight_and_apgar_sentence() {
        let toks = tokenize("PN 3.23 Kg, APGAR 8-9-9.");
        let b = blind_default(&toks);
        assert_eq!(
            blinded_texts(&b),
            vec!["PN", "nombre", "Kg", ",", "APGAR", "nombre", "."]
        );
        assert_eq!(b.alignment.len(), 2);
        assert_eq!(b.alignment[0].lexeme.unit_hint.as_deref(), Some("Kg"));
        assert_eq!(b.alignment[1].lexeme.form, NumericForm::Sequence(vec![8.0, 9.0, 9.0]));
    }

    #[test]
    fn code_numbers_unaltered() {
        let toks = tokenize("délétion 22q11");
        let b = blind_default(&toks);
        assert_eq!(b.tokens, toks);
        assert!(b.alignment.is_empty());
    }

    #[test]
    fn idempotent() {
        let toks = tokenize("sat 80-85 % et FC 120 bpm");
        let once = blind_default(&toks);
        let twice = blind_default(&once.tokens);
        assert_eq!(once.tokens, twice.tokens);
        assert!(twice.alignment.is_empty());
    }

    #[test]
    fn reversible() {
        let toks = tokenize("Écho (14/08): gradient 50-60mmHg, sat 80-85 %.");
        let b = blind_default(&toks);
        assert_eq!(unblind(&b), toks);
    }

    #[test]
    fn length_preserved() {
        let toks = tokenize("APGAR 8-9-9 à 1 min");
        let b = blind_default(&toks);
        assert_eq!(b.tokens.len(), toks.len());
    }

    #[test]
    fn dates_are_blinded() {
        let toks = tokenize("écho du 14/08 normale");
        let b = blind_default(&toks);
        assert!(b.tokens.iter().any(|t| t.text == "nombre"));
        assert_eq!(b.alignment.len(), 1);
        assert_eq!(b.alignment[0].lexeme.form, NumericForm::Date { day: 14, month: 8 });
    }

    #[test]
    fn projection_rows() {
        let toks = tokenize("FC 120 et sat 98 %");
        let b = blind_default(&toks);
        let mut labels = vec![ClassLabel::O; b.tokens.len()];
        labels[b.alignment[0].blinded_index] = ClassLabel::FC;
        labels[b.alignment[1].blinded_index] = ClassLabel::SO2;
        let rows = project_predictions(&b, &labels).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].1, ClassLabel::FC);
        assert_eq!(rows[1].1, ClassLabel::SO2);
        assert_eq!(rows[1].0.unit_hint.as_deref(), Some("%"));
    }

    #[test]
    fn projection_empty_and_mismatch() {
        let toks = tokenize("aucune valeur ici");
        let b = blind_default(&toks);
        let rows = project_predictions(&b, &vec![ClassLabel::O; b.tokens.len()]).unwrap();
        assert!(rows.is_empty());
        let err = project_predictions(&b, &[]).unwrap_err();
        assert!(matches!(err, BlindingError::LengthMismatch { .. }));
    }
}
