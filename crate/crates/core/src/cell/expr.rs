//! Cell notation and named presets.
//!
//! ```text
//! cell := "(" ("r" | "c") number ")"
//!       | "(" ("series" | "parallel") cell+ ")"
//! ```
//! Numbers take SI suffixes, e.g. `(series (r 560) (parallel (r 10k) (c 33n)))`.

use super::CellNetwork;
use crate::error::{Error, Result};
use crate::units::parse_si;

/// Resistor/capacitor pairs of the decade-box parallel RC test cells, measured at 10 080 Hz.
pub const DECADE_RC_CELLS: [(f64, f64); 9] = [
    (1e3, 10e-9),
    (1e3, 8.2e-9),
    (1e3, 6.74e-9),
    (1e3, 5.55e-9),
    (1e3, 4.3e-9),
    (10e3, 8.2e-9),
    (10e3, 6.74e-9),
    (10e3, 5.55e-9),
    (10e3, 4.4e-9),
];

/// 560 Ω in series with 10 kΩ ∥ 33 nF.
pub fn redox_dummy() -> CellNetwork {
    CellNetwork::series([
        CellNetwork::resistor(560.0),
        CellNetwork::parallel_rc(10e3, 33e-9),
    ])
}

/// Resolves a preset name: `R<value>` (e.g. `R1k`), `rc-table3-row1` … `row9`,
/// or `redox-dummy`.
pub fn preset(name: &str) -> Option<CellNetwork> {
    if name == "redox-dummy" {
        return Some(redox_dummy());
    }
    if let Some(row) = name.strip_prefix("rc-table3-row") {
        let idx: usize = row.parse().ok()?;
        let (r, c) = *DECADE_RC_CELLS.get(idx.checked_sub(1)?)?;
        return Some(CellNetwork::parallel_rc(r, c));
    }
    if let Some(value) = name.strip_prefix('R') {
        let r = parse_si(value).ok()?;
        if r > 0.0 {
            return Some(CellNetwork::resistor(r));
        }
    }
    None
}

pub fn preset_names() -> Vec<String> {
    let mut names = vec!["R<value>".to_string(), "redox-dummy".to_string()];
    names.extend((1..=9).map(|i| format!("rc-table3-row{i}")));
    names
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        let delim = ch == '(' || ch == ')' || ch.is_whitespace();
        if delim {
            if let Some(s) = start.take() {
                out.push(Token::Atom(&text[s..i]));
            }
            match ch {
                '(' => out.push(Token::Open),
                ')' => out.push(Token::Close),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token::Atom(&text[s..]));
    }
    out
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Option<&Token<'a>> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn cell(&mut self) -> Result<CellNetwork> {
        match self.next() {
            Some(Token::Open) => {}
            other => return Err(Error::invalid(format!("expected '(', found {other:?}"))),
        }
        let head = match self.next() {
            Some(Token::Atom(a)) => a.to_ascii_lowercase(),
            other => {
                return Err(Error::invalid(format!(
                    "expected element kind, found {other:?}"
                )))
            }
        };
        let node = match head.as_str() {
            "r" | "resistor" | "c" | "capacitor" => {
                let value = match self.next() {
                    Some(Token::Atom(a)) => parse_si(a)?,
                    other => {
                        return Err(Error::invalid(format!("expected value, found {other:?}")))
                    }
                };
                if head.starts_with('r') {
                    CellNetwork::Resistor(value)
                } else {
                    CellNetwork::Capacitor(value)
                }
            }
            "series" | "s" | "parallel" | "p" => {
                let mut children = Vec::new();
                while matches!(self.peek(), Some(Token::Open)) {
                    children.push(self.cell()?);
                }
                if head.starts_with('s') {
                    CellNetwork::Series(children)
                } else {
                    CellNetwork::Parallel(children)
                }
            }
            other => return Err(Error::invalid(format!("unknown element kind {other:?}"))),
        };
        match self.next() {
            Some(Token::Close) => Ok(node),
            other => Err(Error::invalid(format!("expected ')', found {other:?}"))),
        }
    }
}

/// Parses the s-expression cell notation.
pub fn parse_cell(text: &str) -> Result<CellNetwork> {
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
    };
    let cell = p.cell()?;
    if p.pos != p.tokens.len() {
        return Err(Error::invalid("trailing input after cell expression"));
    }
    cell.validate()?;
    Ok(cell)
}

/// Preset name or inline expression.
pub fn resolve_cell(spec: &str) -> Result<CellNetwork> {
    let spec = spec.trim();
    if spec.starts_with('(') {
        parse_cell(spec)
    } else {
        preset(spec).ok_or_else(|| {
            Error::invalid(format!(
                "unknown cell {spec:?}; presets: {}",
                preset_names().join(", ")
            ))
        })
    }
}
