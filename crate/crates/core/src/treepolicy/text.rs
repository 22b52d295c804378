//! Single-line text form of a tree:
//! `node(f=<idx>, t=<value>, L=<subtree>, R=<subtree>)` or `leaf(a=<idx>)`.
//!
//! Finite thresholds are printed with 17 significant digits, which
//! round-trips every `f64` exactly; infinities print as `inf` / `-inf`.

use std::fmt;
use std::str::FromStr;

use super::TreePolicy;
use crate::error::Error;

const MAX_NESTING: usize = 64;

impl fmt::Display for TreePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreePolicy::Leaf { action } => write!(f, "leaf(a={action})"),
            TreePolicy::Node {
                feature,
                threshold,
                left,
                right,
            } => {
                write!(f, "node(f={feature}, t=")?;
                if threshold.is_infinite() {
                    f.write_str(if *threshold > 0.0 { "inf" } else { "-inf" })?;
                } else {
                    write!(f, "{threshold:.16e}")?;
                }
                write!(f, ", L={left}, R={right})")
            }
        }
    }
}

impl FromStr for TreePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let tree = p.tree(0)?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(tree)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: &str) -> Error {
        Error::TreeParse {
            pos: self.pos,
            message: message.to_owned(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, lit: &str) -> Result<(), Error> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            Ok(())
        } else {
            Err(self.err(&format!("expected {lit:?}")))
        }
    }

    fn token(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|&c| c != b',' && c != b')' && !c.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        // Token bytes stop at ASCII delimiters, so they stay valid UTF-8.
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn index(&mut self) -> Result<usize, Error> {
        let start = self.pos;
        let tok = self.token();
        if !tok.bytes().all(|c| c.is_ascii_digit()) {
            self.pos = start;
            return Err(self.err("expected a non-negative integer"));
        }
        tok.parse().map_err(|_| {
            self.pos = start;
            self.err("expected a non-negative integer")
        })
    }

    fn threshold(&mut self) -> Result<f64, Error> {
        let start = self.pos;
        let tok = self.token();
        match tok.parse::<f64>() {
            Ok(v) if !v.is_nan() => Ok(v),
            _ => {
                self.pos = start;
                Err(self.err("expected a threshold"))
            }
        }
    }

    fn tree(&mut self, nesting: usize) -> Result<TreePolicy, Error> {
        if nesting > MAX_NESTING {
            return Err(self.err("tree nested too deeply"));
        }
        self.skip_ws();
        if self.src[self.pos..].starts_with(b"leaf") {
            self.eat("leaf")?;
            self.eat("(")?;
            self.eat("a=")?;
            let action = self.index()?;
            self.eat(")")?;
            Ok(TreePolicy::Leaf { action })
        } else {
            self.eat("node")?;
            self.eat("(")?;
            self.eat("f=")?;
            let feature = self.index()?;
            self.eat(",")?;
            self.eat("t=")?;
            let threshold = self.threshold()?;
            self.eat(",")?;
            self.eat("L=")?;
            let left = self.tree(nesting + 1)?;
            self.eat(",")?;
            self.eat("R=")?;
            let right = self.tree(nesting + 1)?;
            self.eat(")")?;
            Ok(TreePolicy::node(feature, threshold, left, right))
        }
    }
}
