use super::{Circuit, EnsembleTag, Gate, GateLabel};
use crate::error::{parse_err, Result};
use crate::gates::{Mat, C64};
use std::fmt::Write;

const MAGIC: &str = "shadowsig-circuit 1";

fn label_token(l: &GateLabel) -> String {
    match l {
        GateLabel::Hadamard => "h".into(),
        GateLabel::ZpXhalf(q) => format!("zpxhalf {}", quarter_text(*q)),
        GateLabel::CZ => "cz".into(),
        GateLabel::Cnot => "cnot".into(),
        GateLabel::Swap => "swap".into(),
        GateLabel::Rxx(t) => format!("rxx {t:.16e}"),
        GateLabel::Rzz(t) => format!("rzz {t:.16e}"),
        GateLabel::Clifford1 => "clifford1".into(),
        GateLabel::Clifford2 => "clifford2".into(),
        GateLabel::HaarSU4 => "haar-su4".into(),
        GateLabel::Identity => "identity".into(),
        GateLabel::Custom => "custom".into(),
    }
}

fn quarter_text(q: i8) -> String {
    match q {
        0 => "0".into(),
        -4 => "-1".into(),
        q if q % 2 == 0 => format!("{}/2", q / 2),
        q => format!("{q}/4"),
    }
}

fn parse_quarter(s: &str) -> Option<i8> {
    (-4..=3).find(|&q| quarter_text(q) == s)
}

/// Canonical text form. Matrices are written only for labels that do not
/// determine their own unitary.
pub fn serialize(c: &Circuit) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "n {}", c.n).unwrap();
    writeln!(s, "ensemble {}", c.ensemble.name()).unwrap();
    writeln!(s, "seed {}", c.seed).unwrap();
    writeln!(s, "layers {}", c.layers.len()).unwrap();
    for g in c.gates() {
        let support: Vec<String> = g.support.iter().map(usize::to_string).collect();
        write!(s, "gate {} {} {}", g.layer, support.join(","), label_token(&g.label)).unwrap();
        if g.label.matrix().is_none() && g.label != GateLabel::Identity {
            s.push_str(" matrix");
            for z in g.unitary.transpose().iter() {
                write!(s, " {:.16e} {:.16e}", z.re, z.im).unwrap();
            }
        }
        s.push('\n');
    }
    s.push_str("end\n");
    s
}

pub fn parse(text: &str) -> Result<Circuit> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
    let (c, used) = parse_lines(&lines)?;
    if let Some((ln, l)) = lines[used..].iter().find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(*ln, format!("trailing content after end: {l:?}")));
    }
    Ok(c)
}

fn field<'a>(line: (usize, &'a str), key: &str) -> Result<&'a str> {
    let (ln, l) = line;
    l.strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| parse_err(ln, format!("expected field `{key}`, found {l:?}")))
}

fn num<T: std::str::FromStr>(ln: usize, what: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| parse_err(ln, format!("bad {what}: {s:?}")))
}

/// Parse one circuit from numbered lines; returns it with the count of lines consumed.
pub fn parse_lines(lines: &[(usize, &str)]) -> Result<(Circuit, usize)> {
    let at = |i: usize| -> Result<(usize, &str)> {
        lines.get(i).copied().ok_or_else(|| {
            parse_err(lines.last().map_or(0, |l| l.0), "unexpected end of circuit text")
        })
    };
    let (ln, magic) = at(0)?;
    if magic.trim() != MAGIC {
        return Err(parse_err(ln, format!("expected header {MAGIC:?}")));
    }
    let n: usize = num(at(1)?.0, "n", field(at(1)?, "n")?)?;
    let tag_s = field(at(2)?, "ensemble")?;
    let ensemble =
        EnsembleTag::from_name(tag_s.trim()).ok_or_else(|| parse_err(at(2).unwrap().0, "unknown ensemble tag"))?;
    let seed: u64 = num(at(3)?.0, "seed", field(at(3)?, "seed")?)?;
    let nl: usize = num(at(4)?.0, "layers", field(at(4)?, "layers")?)?;
    let mut c = Circuit::new(n, ensemble, seed);
    c.layers = vec![Vec::new(); nl];
    let mut i = 5;
    loop {
        let (ln, l) = at(i)?;
        i += 1;
        if l.trim() == "end" {
            break;
        }
        let rest = field((ln, l), "gate")?;
        let g = parse_gate(ln, rest)?;
        if g.layer >= nl {
            return Err(parse_err(ln, format!("layer {} beyond declared {nl}", g.layer)));
        }
        c.layers[g.layer].push(g);
    }
    c.validate().map_err(|e| parse_err(lines[0].0, e.to_string()))?;
    Ok((c, i))
}

fn parse_gate(ln: usize, rest: &str) -> Result<Gate> {
    let toks: Vec<&str> = rest.split_whitespace().collect();
    if toks.len() < 3 {
        return Err(parse_err(ln, "gate record needs layer, support and label"));
    }
    let layer: usize = num(ln, "layer", toks[0])?;
    let support = toks[1]
        .split(',')
        .map(|t| num::<usize>(ln, "support", t))
        .collect::<Result<Vec<_>>>()?;
    let mut params = &toks[3..];
    let label = match toks[2] {
        "h" => GateLabel::Hadamard,
        "cz" => GateLabel::CZ,
        "cnot" => GateLabel::Cnot,
        "swap" => GateLabel::Swap,
        "clifford1" => GateLabel::Clifford1,
        "clifford2" => GateLabel::Clifford2,
        "haar-su4" => GateLabel::HaarSU4,
        "identity" => GateLabel::Identity,
        "custom" => GateLabel::Custom,
        "zpxhalf" | "rxx" | "rzz" => {
            let p = params.first().ok_or_else(|| parse_err(ln, "missing gate parameter"))?;
            params = &params[1..];
            match toks[2] {
                "zpxhalf" => GateLabel::ZpXhalf(parse_quarter(p).ok_or_else(|| parse_err(ln, "bad exponent p"))?),
                "rxx" => GateLabel::Rxx(num(ln, "angle", p)?),
                _ => GateLabel::Rzz(num(ln, "angle", p)?),
            }
        }
        other => return Err(parse_err(ln, format!("unknown gate label {other:?}"))),
    };
    let dim = 1usize << support.len();
    let needs_matrix = label.matrix().is_none() && label != GateLabel::Identity;
    let mut gate = match (needs_matrix, params.first()) {
        (false, None) => Gate::new(label, support),
        (true, Some(&"matrix")) => {
            let vals = params[1..].iter().map(|t| num::<f64>(ln, "matrix entry", t)).collect::<Result<Vec<_>>>()?;
            if vals.len() != 2 * dim * dim {
                return Err(parse_err(ln, format!("matrix needs {} numbers, found {}", 2 * dim * dim, vals.len())));
            }
            let entries: Vec<C64> = vals.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
            Gate::with_matrix(label, support, Mat::from_row_slice(dim, dim, &entries))
        }
        (true, _) => return Err(parse_err(ln, "missing matrix for label")),
        (false, Some(t)) => return Err(parse_err(ln, format!("unexpected token {t:?}"))),
    };
    if label_dim_mismatch(&gate) {
        return Err(parse_err(ln, "label arity does not match support"));
    }
    gate.layer = layer;
    Ok(gate)
}

fn label_dim_mismatch(g: &Gate) -> bool {
    g.label.matrix().is_some_and(|m| m.nrows() != 1 << g.support.len())
}
