//! A line-oriented netlist language for circuits of BCT processes.
//!
//! ```text
//! system a = elem 2
//! system aa = a * a
//! state r : a = pure 1
//! effect e : aa = pure ((1,1);0)
//! circuit p = r | r ; e      # `|` is parallel, `;` sequential
//! eval p
//! ```
//!
//! Circuits evaluate in the theory itself and, box by box, through the
//! ontological model; the two must agree.

use std::fmt;

pub mod ast;
pub mod corpus;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod program;

pub use ast::CircuitAst;
pub use corpus::{random_closed_circuit, random_corpus};
pub use parser::parse;
pub use printer::pretty;
pub use program::{check, compile, Evaluation, Item, Program};

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        Self { line: span.line, col: span.col, message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, d) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_circuits_compile_and_agree() {
        for text in random_corpus(3, 40, 3) {
            let prog = compile(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            let ev = prog.evaluate("main").unwrap();
            assert!(ev.bct.as_scalar().is_some(), "not closed:\n{text}");
            assert!(ev.agree(), "{}\n{text}", ev.max_abs_dev);
        }
    }

    #[test]
    fn printing_round_trips() {
        for text in random_corpus(9, 20, 3) {
            let ast = parse(&text).unwrap();
            assert_eq!(pretty(&ast), text);
            assert_eq!(parse(&pretty(&ast)).unwrap(), ast);
        }
    }
}
