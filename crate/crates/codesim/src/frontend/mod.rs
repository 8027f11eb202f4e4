//! MiniJ frontend: lexer, recursive-descent parser, name resolution, and a
//! pretty-printer used both for normalization and for rewriting transformed
//! programs back to source.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod resolver;
pub mod token;

use std::path::Path;

pub use ast::Program;
pub use lexer::{lex, strip_comments};
pub use parser::parse;
pub use printer::{print_program, print_program_styled, PrintStyle};
pub use resolver::resolve;
pub use token::{SourceToken, TokenKind};

#[derive(Debug, thiserror::Error)]
pub enum FrontendError {
    #[error("lex error at {line}:{col}: {message}")]
    Lex { line: u32, col: u32, message: String },
    #[error("parse error at {line}:{col}: expected {expected}, found {found}")]
    Parse { line: u32, col: u32, expected: String, found: String },
    #[error("name error at {line}:{col}: `{name}` {message}")]
    Resolve { name: String, line: u32, col: u32, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A loaded and validated MiniJ compilation unit.
#[derive(Debug, Clone)]
pub struct SourceUnit {
    /// Raw text the unit was built from.
    pub text: String,
    pub tokens: Vec<SourceToken>,
    pub ast: Program,
    /// File name or synthetic label identifying where the unit came from.
    pub origin: String,
}

/// Builds a unit from in-memory text. The text is lexed, parsed, and
/// name-resolved; any failure is reported against `origin`.
pub fn load_str(text: &str, origin: &str) -> Result<SourceUnit, FrontendError> {
    let tokens = lex(text)?;
    let ast = parse(&tokens)?;
    resolve(&ast)?;
    Ok(SourceUnit {
        text: text.to_string(),
        tokens,
        ast,
        origin: origin.to_string(),
    })
}

/// Reads a `.mj` file and builds a unit from it.
pub fn load(path: &Path) -> Result<SourceUnit, FrontendError> {
    let text = std::fs::read_to_string(path).map_err(|source| FrontendError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let origin = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    load_str(&text, &origin)
}

#[cfg(test)]
mod tests {
    use super::ast::*;
    use super::*;
    use proptest::prelude::*;

    fn parse_ok(text: &str) -> Program {
        load_str(text, "test.mj").unwrap().ast
    }

    #[test]
    fn golden_while_program_shape() {
        let program = parse_ok("fn main() { int x = read(); while (x > 0) { x = x - 1; } }");
        assert_eq!(program.globals.len(), 0);
        assert_eq!(program.functions.len(), 1);
        let main = &program.functions[0];
        assert_eq!(main.name, "main");
        assert!(main.params.is_empty() && main.ret.is_none());
        let expected_body = Block {
            stmts: vec![
                Stmt::VarDecl {
                    ty: Type::Int,
                    name: "x".into(),
                    init: Some(Expr::Read { span: Span::default() }),
                    span: Span::default(),
                },
                Stmt::While {
                    cond: Expr::Binary {
                        op: BinOp::Gt,
                        lhs: Box::new(Expr::Var { name: "x".into(), span: Span::default() }),
                        rhs: Box::new(Expr::Int { value: 0, span: Span::default() }),
                        span: Span::default(),
                    },
                    body: Block {
                        stmts: vec![Stmt::Assign {
                            target: LValue::Var { name: "x".into(), span: Span::default() },
                            op: AssignOp::Set,
                            value: Expr::Binary {
                                op: BinOp::Sub,
                                lhs: Box::new(Expr::Var { name: "x".into(), span: Span::default() }),
                                rhs: Box::new(Expr::Int { value: 1, span: Span::default() }),
                                span: Span::default(),
                            },
                            span: Span::default(),
                        }],
                    },
                    span: Span::default(),
                },
            ],
        };
        assert_eq!(main.body, expected_body);
    }

    #[test]
    fn precedence_and_associativity() {
        let program = parse_ok("fn main() { int r = 1 + 2 * 3 - 4; bool b = 1 < 2 && true; }");
        let Stmt::VarDecl { init: Some(r), .. } = &program.functions[0].body.stmts[0] else {
            panic!()
        };
        // (1 + (2 * 3)) - 4
        let Expr::Binary { op: BinOp::Sub, lhs, .. } = r else { panic!("got {r:?}") };
        let Expr::Binary { op: BinOp::Add, rhs: mul, .. } = lhs.as_ref() else {
            panic!("got {lhs:?}")
        };
        assert!(matches!(mul.as_ref(), Expr::Binary { op: BinOp::Mul, .. }));
        let Stmt::VarDecl { init: Some(b), .. } = &program.functions[0].body.stmts[1] else {
            panic!()
        };
        let Expr::Binary { op: BinOp::And, lhs, .. } = b else { panic!("got {b:?}") };
        assert!(matches!(lhs.as_ref(), Expr::Binary { op: BinOp::Lt, .. }));
    }

    #[test]
    fn else_if_chains_nest_rightward() {
        let program =
            parse_ok("fn main() { int x = 1; if (x == 1) { } else if (x == 2) { } else { } }");
        let Stmt::If { els: Some(els), .. } = &program.functions[0].body.stmts[1] else {
            panic!()
        };
        let Stmt::If { els: Some(inner), .. } = els.as_ref() else { panic!("got {els:?}") };
        assert!(matches!(inner.as_ref(), Stmt::Block { .. }));
    }

    #[test]
    fn switch_with_negative_case_and_default() {
        let program = parse_ok(
            "fn main() { int x = read(); switch (x) { case -1: print(0); case 2: default: print(9); } }",
        );
        let Stmt::Switch { arms, default, .. } = &program.functions[0].body.stmts[1] else {
            panic!()
        };
        assert_eq!(arms[0].value, -1);
        assert!(arms[1].body.is_empty());
        assert_eq!(default.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn parse_errors_carry_position_and_expectation() {
        let err = load_str("fn main() { int = 5; }", "t.mj").unwrap_err();
        let FrontendError::Parse { line, col, expected, .. } = err else {
            panic!("got {err:?}")
        };
        assert_eq!((line, col), (1, 17));
        assert!(expected.contains("variable name"), "{expected}");
    }

    #[test]
    fn resolver_rejects_missing_main_and_bad_names() {
        assert!(matches!(
            load_str("fn helper() { }", "t.mj").unwrap_err(),
            FrontendError::Resolve { .. }
        ));
        assert!(load_str("fn main(int a) { }", "t.mj").is_err());
        assert!(load_str("fn main(): int { return 1; }", "t.mj").is_err());
        assert!(load_str("fn main() { x = 1; }", "t.mj").is_err());
        assert!(load_str("fn main() { int x; { int x; } }", "t.mj").is_err());
        assert!(load_str("fn main() { int x; int x; }", "t.mj").is_err());
        assert!(load_str("fn main() { print(y); }", "t.mj").is_err());
        assert!(load_str("fn main() { nope(); }", "t.mj").is_err());
    }

    #[test]
    fn decl_before_use_and_disjoint_reuse() {
        assert!(load_str("fn main() { x = 1; int x; }", "t.mj").is_err());
        assert!(load_str("fn main() { { int x = 1; } { int x = 2; } }", "t.mj").is_ok());
        // A local may shadow a global.
        assert!(load_str("int x = 1; fn main() { int x = 2; print(x); }", "t.mj").is_ok());
    }

    #[test]
    fn tokens_reserialize_to_equal_ast() {
        let text = "int g = 7;\nfn main() {\n  // note\n  int x = g * (2 + 1);\n  print(x);\n}\n";
        let unit = load_str(text, "t.mj").unwrap();
        let joined: Vec<String> = unit.tokens.iter().map(|t| t.lexeme.clone()).collect();
        let reparsed = load_str(&joined.join(" "), "t.mj").unwrap();
        assert_eq!(unit.ast, reparsed.ast);
    }

    #[test]
    fn print_parse_fixed_point() {
        let text = "int g = 5;\nfn dec(int v): int { return v - 1; }\nfn main() {\n  int x = read();\n  for (int i = 0; i < x; i += 1) {\n    switch (i % 3) {\n      case 0: print(i);\n      default: x = dec(x);\n    }\n  }\n  do { x -= 1; } while (x > 0 && !(x == g));\n  print(\"done\");\n}\n";
        let unit = load_str(text, "t.mj").unwrap();
        let printed = print_program(&unit.ast);
        let reparsed = load_str(&printed, "t.mj").unwrap();
        assert_eq!(unit.ast, reparsed.ast, "printed:\n{printed}");
        // Printing is a fixed point after one round.
        let printed_again = print_program(&reparsed.ast);
        assert_eq!(printed, printed_again);
    }

    #[test]
    fn printer_parenthesizes_by_structure() {
        let text = "fn main() { int r = (1 + 2) * 3; int s = 1 - (2 - 3); print(r + s); }";
        let unit = load_str(text, "t.mj").unwrap();
        let printed = print_program(&unit.ast);
        assert!(printed.contains("(1 + 2) * 3"), "{printed}");
        assert!(printed.contains("1 - (2 - 3)"), "{printed}");
    }

    proptest! {
        /// Injecting comments and extra whitespace between tokens never
        /// changes the token stream.
        #[test]
        fn comment_injection_is_token_invariant(seed in 0u64..1000) {
            let text = "int g = 2; fn main() { int x = read(); while (x > 0) { x = x - g; print(x); } }";
            let tokens = lex(text).unwrap();
            let mut noisy = String::new();
            let fills = [" ", "\n", "\t", " /* c */ ", " // line\n", "  "];
            let mut state = seed;
            for t in &tokens {
                noisy.push_str(&t.lexeme);
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                noisy.push_str(fills[(state >> 33) as usize % fills.len()]);
            }
            let relexed = lex(&noisy).unwrap();
            let a: Vec<_> = tokens.iter().map(|t| (t.kind, t.lexeme.clone())).collect();
            let b: Vec<_> = relexed.iter().map(|t| (t.kind, t.lexeme.clone())).collect();
            prop_assert_eq!(a, b);
        }
    }
}
