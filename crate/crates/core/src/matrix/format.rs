//! Line-oriented text format for conversion matrices.
//!
//! ```text
//! MWXE 1
//! level=<n> lambda=<x> lambda0=<x> pmax=<int> kmax=<int> eps_a=<x> eps_r=<x>
//! <p> <q> <kx> <ky> <kz> <R|I> <value>
//! ...
//! ```
//!
//! Entries are sorted by `(p, q, kx, ky, kz)` with the real store first;
//! every float is written as its shortest round-trip decimal, so reading a
//! written file reproduces the matrix exactly.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use thiserror::Error;

use super::{BuildSpec, ConversionMatrix, EntryKey};
use crate::series::{axis_of, oddity_zero, Axis, Tolerances, WaveletIndex};

pub const MAGIC: &str = "MWXE 1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

pub fn header_line(m: &ConversionMatrix) -> String {
    format!(
        "level={} lambda={:?} lambda0={:?} pmax={} kmax={} eps_a={:?} eps_r={:?}",
        m.level, m.lambda, m.lambda0, m.p_max, m.k_max, m.eps_a, m.eps_r
    )
}

pub fn write_matrix<W: Write>(m: &ConversionMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "{}", header_line(m))?;
    for (tag, store) in [('R', m.real_entries()), ('I', m.imag_entries())] {
        for (key, v) in store {
            writeln!(
                out,
                "{} {} {} {} {} {} {:?}",
                key.p, key.q, key.k.kx, key.k.ky, key.k.kz, tag, v
            )?;
        }
    }
    out.flush()
}

pub fn to_string(m: &ConversionMatrix) -> String {
    let mut buf = Vec::new();
    write_matrix(m, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

fn parse_header(line: &str, no: usize) -> Result<BuildSpec, FormatError> {
    let mut fields = HashMap::new();
    for tok in line.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(no, format!("expected key=value, got {tok:?}")))?;
        if fields.insert(k, v).is_some() {
            return Err(parse_err(no, format!("duplicate key {k:?}")));
        }
    }
    fn take<T: std::str::FromStr>(
        f: &HashMap<&str, &str>,
        key: &str,
        no: usize,
    ) -> Result<T, FormatError> {
        let raw = f
            .get(key)
            .ok_or_else(|| parse_err(no, format!("missing {key}")))?;
        raw.parse()
            .map_err(|_| parse_err(no, format!("bad value for {key}: {raw:?}")))
    }
    let spec = BuildSpec {
        level: take(&fields, "level", no)?,
        lambda: take(&fields, "lambda", no)?,
        lambda0: take(&fields, "lambda0", no)?,
        p_max: take(&fields, "pmax", no)?,
        k_max: take(&fields, "kmax", no)?,
        tol: Tolerances {
            eps_a: take(&fields, "eps_a", no)?,
            eps_r: take(&fields, "eps_r", no)?,
            ..Tolerances::default()
        },
        zero_rule: super::ZeroRule::Magnitude,
    };
    if fields.len() != 7 {
        return Err(parse_err(no, "unexpected header keys"));
    }
    Ok(spec)
}

fn parse_entry(
    line: &str,
    no: usize,
    spec: &BuildSpec,
) -> Result<(EntryKey, Axis, f64), FormatError> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 7 {
        return Err(parse_err(no, format!("expected 7 fields, got {}", toks.len())));
    }
    let int = |i: usize, name: &str| -> Result<u32, FormatError> {
        toks[i]
            .parse()
            .map_err(|_| parse_err(no, format!("bad {name}: {:?}", toks[i])))
    };
    let (p, q) = (int(0, "p")?, int(1, "q")?);
    let k = WaveletIndex::new(int(2, "kx")?, int(3, "ky")?, int(4, "kz")?);
    if p > spec.p_max || q > p || k.max_component() > spec.k_max {
        return Err(parse_err(no, "index outside header range"));
    }
    if oddity_zero(p, q as i32, k) {
        return Err(parse_err(no, "entry violates the oddity rule"));
    }
    let axis = match toks[5] {
        "R" => Axis::Real,
        "I" => Axis::Imaginary,
        other => return Err(parse_err(no, format!("bad part tag {other:?}"))),
    };
    if axis != axis_of(k) {
        return Err(parse_err(no, "part tag does not match k_y parity"));
    }
    let v: f64 = toks[6]
        .parse()
        .map_err(|_| parse_err(no, format!("bad value {:?}", toks[6])))?;
    Ok((EntryKey::new(p, q, k), axis, v))
}

pub fn read_matrix<R: BufRead>(input: R) -> Result<ConversionMatrix, FormatError> {
    let mut lines = input.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String), FormatError> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l?)),
            None => Err(parse_err(0, format!("missing {what}"))),
        }
    };
    let (no, magic) = next("magic line")?;
    if magic.trim_end() != MAGIC {
        return Err(parse_err(no, format!("bad magic {magic:?}")));
    }
    let (no, header) = next("header line")?;
    let spec = parse_header(&header, no)?;
    let mut real = Vec::new();
    let mut imag = Vec::new();
    let mut last: Option<(Axis, EntryKey)> = None;
    for (i, line) in lines {
        let line = line?;
        let no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (key, axis, v) = parse_entry(&line, no, &spec)?;
        if let Some(prev) = last {
            if (axis, key) <= prev {
                return Err(parse_err(no, "entries out of order or duplicated"));
            }
        }
        last = Some((axis, key));
        match axis {
            Axis::Real => real.push((key, v)),
            Axis::Imaginary => imag.push((key, v)),
        }
    }
    Ok(ConversionMatrix::from_parts(&spec, real, imag))
}

pub fn from_str(s: &str) -> Result<ConversionMatrix, FormatError> {
    read_matrix(s.as_bytes())
}
