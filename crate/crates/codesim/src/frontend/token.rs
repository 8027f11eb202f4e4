use std::fmt;

/// Lexical category of a source token. Comments and whitespace never
/// produce tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Keyword,
    Identifier,
    IntLiteral,
    StringLiteral,
    BoolLiteral,
    Operator,
    Punctuation,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TokenKind::Keyword => "keyword",
            TokenKind::Identifier => "identifier",
            TokenKind::IntLiteral => "int-literal",
            TokenKind::StringLiteral => "string-literal",
            TokenKind::BoolLiteral => "bool-literal",
            TokenKind::Operator => "operator",
            TokenKind::Punctuation => "punctuation",
        };
        f.write_str(name)
    }
}

/// One lexical token. String literal lexemes keep their surrounding quotes;
/// no escape or case normalization is applied anywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceToken {
    pub kind: TokenKind,
    pub lexeme: String,
    /// 1-based line of the first character.
    pub line: u32,
    /// 1-based column of the first character.
    pub col: u32,
}

pub const KEYWORDS: &[&str] = &[
    "fn", "int", "bool", "str", "if", "else", "while", "do", "for", "switch",
    "case", "default", "return", "new", "print", "read",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}
