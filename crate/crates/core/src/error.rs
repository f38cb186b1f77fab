use thiserror::Error;

use crate::structure::ConvertibilityVerdict;

/// Line/column position (1-based) inside a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl Position {
    /// Position of byte offset `offset` in `text`.
    pub fn of_offset(text: &str, offset: usize) -> Self {
        let offset = offset.min(text.len());
        let before = &text[..offset];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map(|i| before[i + 1..].chars().count()).unwrap_or(before.chars().count()) + 1;
        Position { line, column }
    }
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("syntax error at {position}: {message} (expected {expected})")]
    Syntax { position: Position, message: String, expected: String },

    #[error("malformed XML at {position}: {message}")]
    Xml { position: Position, message: String },

    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("unsupported element `{element}` (id `{id}`)")]
    UnsupportedElement { element: String, id: String },

    #[error("unknown POWL constructor `{name}` at {position}")]
    UnknownConstructor { name: String, position: Position },

    #[error("unresolved reference `{reference}` in {context}")]
    Resolution { reference: String, context: String },

    #[error("model cannot be converted: {0}")]
    NotConvertible(ConvertibilityVerdict),

    #[error("decoded model is not well-formed: {0}")]
    IllFormed(String),

    #[error("empty document")]
    Empty,

    #[error("strict mode: {0}")]
    Strict(String),
}

impl CodecError {
    pub fn syntax(text: &str, offset: usize, message: impl Into<String>, expected: impl Into<String>) -> Self {
        CodecError::Syntax {
            position: Position::of_offset(text, offset),
            message: message.into(),
            expected: expected.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_map_to_line_and_column() {
        let text = "ab\ncde\nf";
        assert_eq!(Position::of_offset(text, 0), Position { line: 1, column: 1 });
        assert_eq!(Position::of_offset(text, 4), Position { line: 2, column: 2 });
        assert_eq!(Position::of_offset(text, 7), Position { line: 3, column: 1 });
    }
}
