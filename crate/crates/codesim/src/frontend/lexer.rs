use super::token::{is_keyword, SourceToken, TokenKind};
use super::FrontendError;

struct Cursor<'a> {
    rest: &'a str,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.rest.chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.rest.chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.rest.chars().next()?;
        self.rest = &self.rest[c.len_utf8()..];
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

/// Tokenizes MiniJ source. `//` and `/* */` comments are skipped and produce
/// no tokens; block comments may span lines and do not nest.
pub fn lex(text: &str) -> Result<Vec<SourceToken>, FrontendError> {
    let mut cur = Cursor { rest: text, line: 1, col: 1 };
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek2() == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if c == '/' && cur.peek2() == Some('*') {
            let (line, col) = (cur.line, cur.col);
            cur.bump();
            cur.bump();
            let mut closed = false;
            while let Some(c) = cur.bump() {
                if c == '*' && cur.peek() == Some('/') {
                    cur.bump();
                    closed = true;
                    break;
                }
            }
            if !closed {
                return Err(FrontendError::Lex {
                    line,
                    col,
                    message: "unterminated block comment".into(),
                });
            }
            continue;
        }

        let (line, col) = (cur.line, cur.col);
        if c.is_ascii_digit() {
            let mut lexeme = String::new();
            while let Some(c) = cur.peek() {
                if !c.is_ascii_digit() {
                    break;
                }
                lexeme.push(c);
                cur.bump();
            }
            out.push(SourceToken { kind: TokenKind::IntLiteral, lexeme, line, col });
            continue;
        }
        if c == '_' || c.is_ascii_alphabetic() {
            let mut lexeme = String::new();
            while let Some(c) = cur.peek() {
                if c != '_' && !c.is_ascii_alphanumeric() {
                    break;
                }
                lexeme.push(c);
                cur.bump();
            }
            let kind = if lexeme == "true" || lexeme == "false" {
                TokenKind::BoolLiteral
            } else if is_keyword(&lexeme) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            out.push(SourceToken { kind, lexeme, line, col });
            continue;
        }
        if c == '"' {
            let mut lexeme = String::from('"');
            cur.bump();
            loop {
                match cur.peek() {
                    Some('"') => {
                        cur.bump();
                        lexeme.push('"');
                        break;
                    }
                    Some('\n') | None => {
                        return Err(FrontendError::Lex {
                            line,
                            col,
                            message: "unterminated string literal".into(),
                        });
                    }
                    Some(c) => {
                        lexeme.push(c);
                        cur.bump();
                    }
                }
            }
            out.push(SourceToken { kind: TokenKind::StringLiteral, lexeme, line, col });
            continue;
        }

        // Operators and punctuation, longest match first.
        let two: String = cur.rest.chars().take(2).collect();
        let two_op = matches!(
            two.as_str(),
            "&&" | "||" | "<=" | ">=" | "==" | "!=" | "+=" | "-=" | "*=" | "/=" | "%="
        );
        if two_op {
            cur.bump();
            cur.bump();
            out.push(SourceToken { kind: TokenKind::Operator, lexeme: two, line, col });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '%' | '<' | '>' | '=' | '!' => TokenKind::Operator,
            '(' | ')' | '{' | '}' | '[' | ']' | ',' | ';' | ':' => TokenKind::Punctuation,
            _ => {
                return Err(FrontendError::Lex {
                    line,
                    col,
                    message: format!("unexpected character {c:?}"),
                });
            }
        };
        cur.bump();
        out.push(SourceToken { kind, lexeme: c.to_string(), line, col });
    }
    Ok(out)
}

/// Removes `//` and `/* */` comments from raw source text, leaving all other
/// bytes in place. Used by the comment-strip attack so that surrounding
/// formatting survives.
pub fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while !rest.is_empty() {
        if let Some(pos) = rest.find("//").into_iter().chain(rest.find("/*")).min() {
            let (head, tail) = rest.split_at(pos);
            // A comment opener inside a string literal is not a comment.
            if head.bytes().filter(|&b| b == b'"').count() % 2 == 1 {
                let quote_end = tail.find('"').map(|i| pos + i + 1).unwrap_or(rest.len());
                out.push_str(&rest[..quote_end]);
                rest = &rest[quote_end..];
                continue;
            }
            out.push_str(head);
            if tail.starts_with("//") {
                let end = tail.find('\n').unwrap_or(tail.len());
                rest = &tail[end..];
            } else {
                let end = tail.find("*/").map(|i| i + 2).unwrap_or(tail.len());
                rest = &tail[end..];
            }
        } else {
            out.push_str(rest);
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexemes(text: &str) -> Vec<String> {
        lex(text).unwrap().into_iter().map(|t| t.lexeme).collect()
    }

    #[test]
    fn comments_produce_no_tokens() {
        let with = "int x = 1; // trailing\n/* block\nspanning */ x += 2;";
        let without = "int x = 1;\n x += 2;";
        assert_eq!(lexemes(with), lexemes(without));
    }

    #[test]
    fn maximal_munch_operators() {
        assert_eq!(lexemes("a<=b == c&&!d"), vec!["a", "<=", "b", "==", "c", "&&", "!", "d"]);
        assert_eq!(lexemes("x+=1"), vec!["x", "+=", "1"]);
        assert_eq!(lexemes("x + = 1"), vec!["x", "+", "=", "1"]);
    }

    #[test]
    fn string_lexeme_keeps_quotes() {
        let toks = lex("print(\"a b\");").unwrap();
        assert_eq!(toks[2].kind, TokenKind::StringLiteral);
        assert_eq!(toks[2].lexeme, "\"a b\"");
    }

    #[test]
    fn keywords_vs_identifiers() {
        let toks = lex("while whilex true").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Keyword);
        assert_eq!(toks[1].kind, TokenKind::Identifier);
        assert_eq!(toks[2].kind, TokenKind::BoolLiteral);
    }

    #[test]
    fn line_and_column_positions() {
        let toks = lex("int x;\n  x = 2;").unwrap();
        assert_eq!((toks[0].line, toks[0].col), (1, 1));
        assert_eq!((toks[3].line, toks[3].col), (2, 3));
        let mut pos: Vec<(u32, u32)> = toks.iter().map(|t| (t.line, t.col)).collect();
        let sorted = {
            let mut p = pos.clone();
            p.sort();
            p
        };
        pos.dedup();
        assert_eq!(pos, sorted, "positions must be strictly increasing");
    }

    #[test]
    fn unterminated_string_reports_start() {
        let err = lex("x = \"abc").unwrap_err();
        match err {
            FrontendError::Lex { line, col, .. } => assert_eq!((line, col), (1, 5)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unterminated_block_comment_is_an_error() {
        assert!(lex("/* no end").is_err());
    }

    #[test]
    fn strip_comments_preserves_other_text() {
        let text = "int a = 1; /* mid */ int b = 2; // tail\nint c = 3;";
        assert_eq!(strip_comments(text), "int a = 1;  int b = 2; \nint c = 3;");
    }

    #[test]
    fn strip_comments_ignores_openers_in_strings() {
        let text = "print(\"no // comment\"); // real";
        assert_eq!(strip_comments(text), "print(\"no // comment\"); ");
    }
}
