use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use super::{CompareError, CompareInput};

pub type Wire = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    Xor(Wire, Wire, Wire),
    And(Wire, Wire, Wire),
    Not(Wire, Wire),
}

impl Gate {
    pub fn output(&self) -> Wire {
        match *self {
            Gate::Xor(_, _, o) | Gate::And(_, _, o) | Gate::Not(_, o) => o,
        }
    }
}

/// Boolean circuit deciding the bound comparison.
///
/// Wires `p * ell .. (p + 1) * ell` carry party `p`'s input, least
/// significant bit first. Gates are listed in topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonCircuit {
    parties: usize,
    ell: u32,
    wires: usize,
    gates: Vec<Gate>,
    output: Wire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitStats {
    pub parties: usize,
    pub ell: u32,
    pub gates: usize,
    pub and_gates: usize,
    pub and_depth: usize,
}

struct Builder {
    wires: usize,
    gates: Vec<Gate>,
}

impl Builder {
    fn fresh(&mut self) -> Wire {
        self.wires += 1;
        self.wires - 1
    }

    fn xor(&mut self, a: Wire, b: Wire) -> Wire {
        let o = self.fresh();
        self.gates.push(Gate::Xor(a, b, o));
        o
    }

    fn and(&mut self, a: Wire, b: Wire) -> Wire {
        let o = self.fresh();
        self.gates.push(Gate::And(a, b, o));
        o
    }

    fn not(&mut self, a: Wire) -> Wire {
        let o = self.fresh();
        self.gates.push(Gate::Not(a, o));
        o
    }

    /// Ripple-carry addition modulo `2^len`; the final carry is dropped.
    fn add(&mut self, a: &[Wire], b: &[Wire]) -> Vec<Wire> {
        let len = a.len();
        let mut out = Vec::with_capacity(len);
        let mut carry: Option<Wire> = None;
        for i in 0..len {
            let last = i + 1 == len;
            match carry {
                None => {
                    out.push(self.xor(a[i], b[i]));
                    if !last {
                        carry = Some(self.and(a[i], b[i]));
                    }
                }
                Some(c) => {
                    let ac = self.xor(a[i], c);
                    let bc = self.xor(b[i], c);
                    out.push(self.xor(ac, b[i]));
                    if !last {
                        // maj(a, b, c) = ((a^c) & (b^c)) ^ c
                        let t = self.and(ac, bc);
                        carry = Some(self.xor(t, c));
                    }
                }
            }
        }
        out
    }

    /// Most significant bit of `x - 1 mod 2^len`.
    fn msb_of_decrement(&mut self, x: &[Wire]) -> Wire {
        let len = x.len();
        // borrow into bit 1 is NOT x_0
        let mut borrow = self.not(x[0]);
        for &xi in &x[1..len - 1] {
            let nx = self.not(xi);
            borrow = self.and(nx, borrow);
        }
        self.xor(x[len - 1], borrow)
    }
}

/// Builds the comparison circuit for `n` parties with `ell`-bit inputs:
/// `T = (x_1 + ... + x_n - 1) mod 2^ell`, output `NOT msb(T)`.
pub fn build_circuit(n: usize, ell: u32) -> Result<ComparisonCircuit, CompareError> {
    if n < 2 || ell < 2 || ell > 62 {
        return Err(CompareError::Params { n, ell });
    }
    let l = ell as usize;
    let mut b = Builder {
        wires: n * l,
        gates: Vec::new(),
    };
    let party = |p: usize| -> Vec<Wire> { (p * l..(p + 1) * l).collect() };
    let mut acc = party(0);
    for p in 1..n {
        acc = b.add(&acc, &party(p));
    }
    let msb = b.msb_of_decrement(&acc);
    let output = b.not(msb);
    Ok(ComparisonCircuit {
        parties: n,
        ell,
        wires: b.wires,
        gates: b.gates,
        output,
    })
}

impl ComparisonCircuit {
    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn wire_count(&self) -> usize {
        self.wires
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> Wire {
        self.output
    }

    pub fn input_wire(&self, party: usize, bit: usize) -> Wire {
        party * self.ell as usize + bit
    }

    pub fn and_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::And(..))).count()
    }

    /// AND depth of every wire.
    pub fn wire_depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.wires];
        for g in &self.gates {
            match *g {
                Gate::Xor(a, b, o) => depth[o] = depth[a].max(depth[b]),
                Gate::And(a, b, o) => depth[o] = depth[a].max(depth[b]) + 1,
                Gate::Not(a, o) => depth[o] = depth[a],
            }
        }
        depth
    }

    pub fn and_depth(&self) -> usize {
        self.wire_depths().into_iter().max().unwrap_or(0)
    }

    pub fn stats(&self) -> CircuitStats {
        CircuitStats {
            parties: self.parties,
            ell: self.ell,
            gates: self.gates.len(),
            and_gates: self.and_count(),
            and_depth: self.and_depth(),
        }
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        (self.parties, self.ell, self.wires, self.output).hash(&mut h);
        self.gates.hash(&mut h);
        h.finish()
    }

    /// Plaintext evaluation on the parties' inputs.
    pub fn evaluate(&self, inputs: &[CompareInput]) -> Result<bool, CompareError> {
        if inputs.len() != self.parties {
            return Err(CompareError::InputCount {
                expected: self.parties,
                got: inputs.len(),
            });
        }
        let l = self.ell as usize;
        let mut w = vec![false; self.wires];
        for (p, x) in inputs.iter().enumerate() {
            if x.0 >> l != 0 {
                return Err(CompareError::InputRange {
                    value: x.0,
                    modulus: 1 << l,
                });
            }
            for i in 0..l {
                w[p * l + i] = (x.0 >> i) & 1 == 1;
            }
        }
        for g in &self.gates {
            match *g {
                Gate::Xor(a, b, o) => w[o] = w[a] ^ w[b],
                Gate::And(a, b, o) => w[o] = w[a] & w[b],
                Gate::Not(a, o) => w[o] = !w[a],
            }
        }
        Ok(w[self.output])
    }

    /// Text dump: a header comment, then one gate per line as
    /// `AND|XOR|NOT in1 [in2] out`.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "# parties={} ell={} wires={} output={}\n",
            self.parties, self.ell, self.wires, self.output
        );
        for g in &self.gates {
            let _ = match *g {
                Gate::Xor(a, b, o) => writeln!(out, "XOR {a} {b} {o}"),
                Gate::And(a, b, o) => writeln!(out, "AND {a} {b} {o}"),
                Gate::Not(a, o) => writeln!(out, "NOT {a} {o}"),
            };
        }
        out
    }
}

/// Upper limit on wires accepted from a dump.
const MAX_DUMP_WIRES: usize = 1 << 22;

/// Parses the output of [`ComparisonCircuit::dump`]. Every gate must read
/// only wires that are inputs or outputs of earlier gates, and write a wire
/// exactly once.
pub fn parse_circuit_dump(text: &str) -> Result<ComparisonCircuit, CompareError> {
    let err = |line: usize, msg: String| CompareError::Dump { line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (hl, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| err(0, "empty dump".into()))?;
    let mut fields = [None::<usize>; 4];
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| err(hl, "missing header".into()))?;
    for tok in body.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| err(hl, format!("bad header field '{tok}'")))?;
        let slot = match k {
            "parties" => 0,
            "ell" => 1,
            "wires" => 2,
            "output" => 3,
            _ => return Err(err(hl, format!("unknown header field '{k}'"))),
        };
        fields[slot] = Some(v.parse().map_err(|_| err(hl, format!("bad number '{v}'")))?);
    }
    let [Some(parties), Some(ell), Some(wires), Some(output)] = fields else {
        return Err(err(hl, "header needs parties, ell, wires, output".into()));
    };
    if !(2..=62).contains(&ell) || parties < 2 {
        return Err(err(hl, format!("unsupported parties={parties} ell={ell}")));
    }
    let inputs = parties
        .checked_mul(ell)
        .filter(|&i| i <= wires && wires <= MAX_DUMP_WIRES)
        .ok_or_else(|| err(hl, "wire count out of range".into()))?;
    if output >= wires {
        return Err(err(hl, "output wire out of range".into()));
    }
    let mut defined = vec![false; wires];
    defined[..inputs].iter_mut().for_each(|d| *d = true);
    let mut gates = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let nums = toks[1..]
            .iter()
            .map(|t| t.parse::<usize>().map_err(|_| err(ln, format!("bad wire '{t}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        let gate = match (toks[0], nums.as_slice()) {
            ("XOR", &[a, b, o]) => Gate::Xor(a, b, o),
            ("AND", &[a, b, o]) => Gate::And(a, b, o),
            ("NOT", &[a, o]) => Gate::Not(a, o),
            _ => return Err(err(ln, format!("malformed gate '{line}'"))),
        };
        let ins: &[Wire] = match &gate {
            Gate::Xor(a, b, _) | Gate::And(a, b, _) => &[*a, *b],
            Gate::Not(a, _) => std::slice::from_ref(a),
        };
        for &w in ins {
            if w >= wires || !defined[w] {
                return Err(err(ln, format!("wire {w} read before it is driven")));
            }
        }
        let o = gate.output();
        if o >= wires || defined[o] {
            return Err(err(ln, format!("wire {o} driven twice or out of range")));
        }
        defined[o] = true;
        gates.push(gate);
    }
    if !defined[output] {
        return Err(err(hl, "output wire is never driven".into()));
    }
    Ok(ComparisonCircuit {
        parties,
        ell: ell as u32,
        wires,
        gates,
        output,
    })
}
