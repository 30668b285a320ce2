use super::{Ensemble, PublicKey, SecretKey, SignedMessage};
use crate::certify::NoiseModel;
use crate::circuit::{parse_lines, serialize, Circuit};
use crate::ecc::{parse_code, serialize_code};
use crate::error::{parse_err, Error, Result};
use crate::shadows::{parse_shadows, serialize_shadows, Rule};
use std::fmt::Write as _;

fn section(out: &mut String, head: &str, body: &str) {
    writeln!(out, "section {head} {}", body.lines().count()).unwrap();
    out.push_str(body);
}

struct Reader<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader { lines: text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect(), pos: 0 }
    }

    fn line_no(&self) -> usize {
        self.lines.get(self.pos).map_or(self.lines.len() + 1, |l| l.0)
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        let l = self.lines.get(self.pos).copied().ok_or_else(|| parse_err(self.line_no(), "unexpected end of file"))?;
        self.pos += 1;
        Ok(l)
    }

    fn done(&self) -> bool {
        self.lines[self.pos..].iter().all(|(_, l)| l.trim().is_empty())
    }

    fn field(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (ln, l) = self.next()?;
        let v = l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')).ok_or_else(|| parse_err(ln, format!("expected `{key}`")))?;
        Ok((ln, v.trim()))
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (ln, v) = self.field(key)?;
        v.parse().map_err(|_| parse_err(ln, format!("bad {key}: {v:?}")))
    }

    /// Section header tokens (after `section`) and its body lines.
    fn section(&mut self) -> Result<(usize, Vec<&'a str>, &[(usize, &'a str)])> {
        let (ln, l) = self.next()?;
        let mut tok: Vec<&str> = l.split_whitespace().collect();
        if tok.first() != Some(&"section") || tok.len() < 3 {
            return Err(parse_err(ln, "expected `section <name> ... <lines>`"));
        }
        let count: usize = tok.pop().unwrap().parse().map_err(|_| parse_err(ln, "bad section length"))?;
        if self.pos + count > self.lines.len() {
            return Err(parse_err(ln, "section runs past end of file"));
        }
        let body = &self.lines[self.pos..self.pos + count];
        self.pos += count;
        Ok((ln, tok[1..].to_vec(), body))
    }
}

fn join(body: &[(usize, &str)]) -> String {
    body.iter().map(|(_, l)| format!("{l}\n")).collect()
}

fn shift(e: Error, offset: usize) -> Error {
    match e {
        Error::Parse { line, msg } => Error::Parse { line: line + offset, msg },
        e => e,
    }
}

fn index(ln: usize, tok: &[&str], i: usize) -> Result<usize> {
    tok.get(i).and_then(|t| t.parse().ok()).ok_or_else(|| parse_err(ln, "bad section index"))
}

fn bit(ln: usize, s: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(parse_err(ln, format!("expected a bit, found {s:?}"))),
    }
}

fn circuit_body(body: &[(usize, &str)]) -> Result<Circuit> {
    let (c, used) = parse_lines(body)?;
    if used != body.len() {
        return Err(parse_err(body[used].0, "trailing lines in circuit section"));
    }
    c.validate()?;
    Ok(c)
}

fn expect_magic(r: &mut Reader, magic: &str) -> Result<()> {
    let (ln, l) = r.next()?;
    if l.trim() != magic {
        return Err(parse_err(ln, format!("expected {magic:?}")));
    }
    Ok(())
}

pub fn serialize_sk(sk: &SecretKey) -> String {
    let mut s = String::from("shadowsig-sk 1\n");
    writeln!(s, "ensemble {}", sk.ensemble.describe()).unwrap();
    writeln!(s, "seed {}", sk.master_seed).unwrap();
    writeln!(s, "positions {}", sk.circuits.len()).unwrap();
    if let Some(code) = &sk.code {
        section(&mut s, "code", &serialize_code(code));
    }
    for (j, pair) in sk.circuits.iter().enumerate() {
        for (b, c) in pair.iter().enumerate() {
            section(&mut s, &format!("circuit {j} {b}"), &serialize(c));
        }
    }
    s
}

pub fn parse_sk(text: &str) -> Result<SecretKey> {
    let mut r = Reader::new(text);
    expect_magic(&mut r, "shadowsig-sk 1")?;
    let (ln, e) = r.field("ensemble")?;
    let ensemble = Ensemble::parse(e).map_err(|e| parse_err(ln, e.to_string()))?;
    let master_seed = r.num("seed")?;
    let positions: usize = r.num("positions")?;
    let mut code = None;
    let mut circuits: Vec<[Option<Circuit>; 2]> = vec![[None, None]; positions];
    while !r.done() {
        let (ln, tok, body) = r.section()?;
        match tok.first().copied() {
            Some("code") => code = Some(parse_code(&join(body)).map_err(|e| shift(e, ln))?),
            Some("circuit") => {
                let (j, b) = (index(ln, &tok, 1)?, index(ln, &tok, 2)?);
                if j >= positions || b > 1 {
                    return Err(parse_err(ln, "circuit index out of range"));
                }
                circuits[j][b] = Some(circuit_body(body)?);
            }
            _ => return Err(parse_err(ln, "unknown section")),
        }
    }
    let circuits = circuits
        .into_iter()
        .map(|[a, b]| match (a, b) {
            (Some(a), Some(b)) => Ok([a, b]),
            _ => Err(parse_err(r.line_no(), "secret key is missing a circuit")),
        })
        .collect::<Result<_>>()?;
    Ok(SecretKey { ensemble, master_seed, code, circuits })
}

pub fn serialize_pk(pk: &PublicKey) -> String {
    let mut s = String::from("shadowsig-pk 1\n");
    writeln!(s, "n {}", pk.n).unwrap();
    writeln!(s, "m {}", pk.m).unwrap();
    writeln!(s, "rule {}", pk.rule.name()).unwrap();
    writeln!(s, "shots {}", pk.shots).unwrap();
    writeln!(s, "eps_hon {:?}", pk.eps_hon).unwrap();
    writeln!(s, "noise {}", pk.noise_model.name()).unwrap();
    writeln!(s, "positions {}", pk.shadows.len()).unwrap();
    if let Some(code) = &pk.code {
        section(&mut s, "code", &serialize_code(code));
    }
    for (j, pair) in pk.shadows.iter().enumerate() {
        for (b, set) in pair.iter().enumerate() {
            section(&mut s, &format!("shadows {j} {b}"), &serialize_shadows(set));
        }
    }
    s
}

pub fn parse_pk(text: &str) -> Result<PublicKey> {
    let mut r = Reader::new(text);
    expect_magic(&mut r, "shadowsig-pk 1")?;
    let n = r.num("n")?;
    let m = r.num("m")?;
    let (ln, rule) = r.field("rule")?;
    let rule = Rule::from_name(rule).ok_or_else(|| parse_err(ln, "unknown rule"))?;
    let shots = r.num("shots")?;
    let eps_hon = r.num("eps_hon")?;
    let (ln, noise) = r.field("noise")?;
    let noise_model = NoiseModel::from_name(noise).ok_or_else(|| parse_err(ln, "unknown noise model"))?;
    let positions: usize = r.num("positions")?;
    let mut code = None;
    let mut sets = vec![[None, None]; positions];
    while !r.done() {
        let (ln, tok, body) = r.section()?;
        match tok.first().copied() {
            Some("code") => code = Some(parse_code(&join(body)).map_err(|e| shift(e, ln))?),
            Some("shadows") => {
                let (j, b) = (index(ln, &tok, 1)?, index(ln, &tok, 2)?);
                if j >= positions || b > 1 {
                    return Err(parse_err(ln, "shadow index out of range"));
                }
                let set = parse_shadows(&join(body)).map_err(|e| shift(e, ln))?;
                if (set.n, set.m, set.rule, set.len()) != (n, m, rule, shots) {
                    return Err(parse_err(ln, "shadow set disagrees with the key parameters"));
                }
                sets[j][b] = Some(set);
            }
            _ => return Err(parse_err(ln, "unknown section")),
        }
    }
    let shadows = sets
        .into_iter()
        .map(|[a, b]| match (a, b) {
            (Some(a), Some(b)) => Ok([a, b]),
            _ => Err(parse_err(r.line_no(), "public key is missing a shadow set")),
        })
        .collect::<Result<_>>()?;
    Ok(PublicKey { n, m, rule, shots, eps_hon, noise_model, code, shadows })
}

pub fn serialize_sig(sig: &SignedMessage) -> String {
    let mut s = String::from("shadowsig-sig 1\n");
    match sig {
        SignedMessage::Single { bit, circuit } => {
            writeln!(s, "kind single {}", *bit as u8).unwrap();
            section(&mut s, "circuit 0", &serialize(circuit));
        }
        SignedMessage::Multi { codeword, circuits } => {
            let w: String = codeword.iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(s, "kind multi {w}").unwrap();
            for (j, c) in circuits.iter().enumerate() {
                section(&mut s, &format!("circuit {j}"), &serialize(c));
            }
        }
    }
    s
}

pub fn parse_sig(text: &str) -> Result<SignedMessage> {
    let mut r = Reader::new(text);
    expect_magic(&mut r, "shadowsig-sig 1")?;
    let (ln, kind) = r.field("kind")?;
    let tok: Vec<&str> = kind.split_whitespace().collect();
    let mut read_circuits = |count: usize| -> Result<Vec<Circuit>> {
        (0..count)
            .map(|j| {
                let (ln, tok, body) = r.section()?;
                if tok.first() != Some(&"circuit") || index(ln, &tok, 1)? != j {
                    return Err(parse_err(ln, format!("expected `section circuit {j}`")));
                }
                circuit_body(body)
            })
            .collect()
    };
    let sig = match tok.as_slice() {
        ["single", b] => {
            let bit = bit(ln, b)?;
            SignedMessage::Single { bit, circuit: read_circuits(1)?.remove(0) }
        }
        ["multi", w] => {
            let codeword = w.chars().map(|c| bit(ln, &c.to_string())).collect::<Result<Vec<_>>>()?;
            let circuits = read_circuits(codeword.len())?;
            SignedMessage::Multi { codeword, circuits }
        }
        _ => return Err(parse_err(ln, "expected `kind single <b>` or `kind multi <word>`")),
    };
    if !r.done() {
        return Err(parse_err(r.line_no(), "trailing content"));
    }
    Ok(sig)
}
