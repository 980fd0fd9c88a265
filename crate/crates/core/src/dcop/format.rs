//! Line-oriented text format for instances.
//!
//! ```text
//! # comment
//! dcop <n> <q>
//! dom <i> <v1> <v2> ...
//! con <t> <k>
//! <|D_t| rows of |D_k| costs>
//! ```
//!
//! Agents are numbered from 0. Every `dom` line must precede the `con`
//! blocks that reference it.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use super::{CostMatrix, DcopError, DcopInstance, Value, MAX_AGENTS};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl ParseError {
    fn new(line: usize, msg: impl fmt::Display) -> Self {
        ParseError {
            line,
            msg: msg.to_string(),
        }
    }
}

pub fn serialize_instance(inst: &DcopInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dcop {} {}", inst.n(), inst.q());
    for (i, dom) in inst.domains().iter().enumerate() {
        let _ = write!(out, "dom {i}");
        for v in dom {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    for (&(t, k), m) in inst.constraints() {
        let _ = writeln!(out, "con {t} {k}");
        for r in 0..m.rows() {
            let row: Vec<String> = m.row(r).iter().map(u64::to_string).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

fn number<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, ParseError> {
    tok.parse()
        .map_err(|_| ParseError::new(line, format!("bad {what} '{tok}'")))
}

pub fn parse_instance(text: &str) -> Result<DcopInstance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(0, "empty document"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 3 || toks[0] != "dcop" {
        return Err(ParseError::new(hline, "expected header 'dcop <n> <q>'"));
    }
    let n: usize = number(toks[1], hline, "agent count")?;
    let q: u64 = number(toks[2], hline, "q")?;
    if n < 2 {
        return Err(ParseError::new(hline, DcopError::TooFewAgents(n)));
    }
    if n > MAX_AGENTS {
        return Err(ParseError::new(hline, DcopError::TooManyAgents(n)));
    }
    if q < 1 {
        return Err(ParseError::new(hline, DcopError::ZeroQ));
    }

    let mut domains: Vec<Option<Vec<Value>>> = vec![None; n];
    let mut cons = BTreeMap::new();
    let mut last_line = hline;

    while let Some((ln, line)) = lines.next() {
        last_line = ln;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("dom") => {
                let i: usize = number(toks.next().unwrap_or(""), ln, "agent index")?;
                if i >= n {
                    return Err(ParseError::new(ln, format!("agent {i} out of range")));
                }
                if domains[i].is_some() {
                    return Err(ParseError::new(ln, format!("domain of agent {i} given twice")));
                }
                let vals = toks
                    .map(|t| number::<Value>(t, ln, "domain value"))
                    .collect::<Result<Vec<_>, _>>()?;
                if vals.is_empty() {
                    return Err(ParseError::new(ln, DcopError::EmptyDomain(i)));
                }
                domains[i] = Some(vals);
            }
            Some("con") => {
                let t: usize = number(toks.next().unwrap_or(""), ln, "agent index")?;
                let k: usize = number(toks.next().unwrap_or(""), ln, "agent index")?;
                if toks.next().is_some() {
                    return Err(ParseError::new(ln, "trailing tokens after 'con t k'"));
                }
                if t >= k || k >= n {
                    return Err(ParseError::new(ln, DcopError::BadPair(t, k)));
                }
                if cons.contains_key(&(t, k)) {
                    return Err(ParseError::new(ln, format!("constraint ({t},{k}) given twice")));
                }
                let (rows, cols) = match (&domains[t], &domains[k]) {
                    (Some(a), Some(b)) => (a.len(), b.len()),
                    _ => {
                        return Err(ParseError::new(
                            ln,
                            format!("constraint ({t},{k}) precedes its domains"),
                        ))
                    }
                };
                let mut data = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    let (rl, row) = lines.next().ok_or_else(|| {
                        ParseError::new(ln, format!("constraint ({t},{k}) ends after {r} rows"))
                    })?;
                    last_line = rl;
                    let before = data.len();
                    for tok in row.split_whitespace() {
                        let c: u64 = number(tok, rl, "cost")?;
                        if c > q {
                            return Err(ParseError::new(
                                rl,
                                DcopError::CostAboveQ { t, k, cost: c, q },
                            ));
                        }
                        data.push(c);
                    }
                    if data.len() - before != cols {
                        return Err(ParseError::new(
                            rl,
                            format!("row has {} costs, expected {cols}", data.len() - before),
                        ));
                    }
                }
                let m = CostMatrix::new(rows, cols, data).map_err(|e| ParseError::new(ln, e))?;
                cons.insert((t, k), m);
            }
            Some(other) => {
                return Err(ParseError::new(ln, format!("unknown directive '{other}'")));
            }
            None => unreachable!("blank lines are filtered"),
        }
    }

    let domains = domains
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.ok_or_else(|| ParseError::new(last_line, format!("missing domain for agent {i}"))))
        .collect::<Result<Vec<_>, _>>()?;
    DcopInstance::new(q, domains, cons).map_err(|e| ParseError::new(last_line, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcop::gen_random;
    use proptest::prelude::*;

    const SMALL: &str = "\
# two agents
dcop 2 5
dom 0 1 2
dom 1 7 8 9
con 0 1
0 1 2
3 4 5
";

    #[test]
    fn parses_small_document() {
        let inst = parse_instance(SMALL).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.domain(1), &[7, 8, 9]);
        assert_eq!(inst.matrix(0, 1).unwrap().get(1, 2), 5);
        assert_eq!(parse_instance(&serialize_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn cost_above_q_rejected_with_line() {
        let doc = SMALL.replace("3 4 5", "3 4 6");
        let err = parse_instance(&doc).unwrap_err();
        assert_eq!(err.line, 7);
        assert!(err.msg.contains("above q"), "{err}");
    }

    #[test]
    fn wrong_shape_rejected() {
        let doc = SMALL.replace("3 4 5", "3 4");
        assert_eq!(parse_instance(&doc).unwrap_err().line, 7);
        let doc = SMALL.replace("3 4 5\n", "");
        assert!(parse_instance(&doc).is_err());
        let doc = SMALL.replace("0 1 2", "0 1 2 3");
        assert_eq!(parse_instance(&doc).unwrap_err().line, 6);
    }

    #[test]
    fn structural_errors() {
        assert_eq!(parse_instance("").unwrap_err().line, 0);
        assert_eq!(parse_instance("dcop 2\n").unwrap_err().line, 1);
        assert!(parse_instance("dcop 2 5\ndom 0 1\n").is_err());
        assert!(parse_instance("dcop 2 5\ndom 0 1\ndom 0 2\n").is_err());
        assert!(parse_instance("dcop 2 5\ndom 0 1\ndom 1 2\ncon 1 0\n0\n").is_err());
        assert!(parse_instance("dcop 2 5\ndom 0 1\ncon 0 1\n0\ndom 1 2\n").is_err());
        assert!(parse_instance("dcop 2 5\ndom 0 1 1\ndom 1 2\n").is_err());
        assert!(parse_instance("dcop 2 5\nfoo\n").is_err());
        assert!(parse_instance("dcop 99999999 5\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn round_trip(n in 2usize..8, d in 1usize..5, p in 0.5f64..=1.0, seed in any::<u64>()) {
            let inst = gen_random(n, d, p, 50, seed).unwrap();
            let text = serialize_instance(&inst);
            prop_assert_eq!(parse_instance(&text).unwrap(), inst);
        }
    }
}
