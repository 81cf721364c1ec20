//! Plain-text instance format.
//!
//! ```text
//! # comment
//! mrf <V> <E> <L>
//! unary <i> <θ_i(0)> … <θ_i(L-1)>
//! edge <i> <j> table <L·L row-major values>
//! edge <i> <j> fn <w> <linear|quadratic|huber> [<δ>]
//! ```
//!
//! Functional pairwise terms stay symbolic. Values must be integers unless
//! a scale factor is given, in which case decimals are multiplied by it and
//! rounded to the nearest integer (the Huber threshold is never scaled).

use std::fmt::Write as _;

use crate::energy::{EnergyModel, PairwiseSpec, Regularizer};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("{what} must be a nonnegative integer, got {tok:?}")))
}

fn parse_value(tok: Option<&str>, line: usize, scale: Option<f64>) -> Result<i64> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing value"))?;
    match scale {
        None => tok
            .parse()
            .map_err(|_| parse_err(line, format!("non-integer value {tok:?}"))),
        Some(k) => {
            let x: f64 = tok
                .parse()
                .map_err(|_| parse_err(line, format!("invalid number {tok:?}")))?;
            let v = (x * k).round();
            if !v.is_finite() || v.abs() > i64::MAX as f64 / 4.0 {
                return Err(parse_err(line, format!("value {tok:?} out of range after scaling")));
            }
            Ok(v as i64)
        }
    }
}

/// Parses an instance. See the module documentation for the format.
pub fn parse_instance(text: &str, scale: Option<f64>) -> Result<EnergyModel> {
    if let Some(k) = scale {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {k}")));
        }
    }
    let mut header: Option<(usize, usize, usize)> = None;
    let mut unary: Vec<Option<Vec<i64>>> = Vec::new();
    let mut edges = Vec::new();
    let mut pairwise = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        let Some(keyword) = toks.next() else { continue };
        match (keyword, header) {
            ("mrf", None) => {
                let v = parse_usize(toks.next(), line, "vertex count")?;
                let e = parse_usize(toks.next(), line, "edge count")?;
                let l = parse_usize(toks.next(), line, "label count")?;
                if l < 2 {
                    return Err(parse_err(line, "at least 2 labels are required"));
                }
                header = Some((v, e, l));
                unary = vec![None; v];
            }
            ("mrf", Some(_)) => return Err(parse_err(line, "duplicate header")),
            (_, None) => return Err(parse_err(line, "expected header `mrf <V> <E> <L>`")),
            ("unary", Some((v, _, l))) => {
                let i = parse_usize(toks.next(), line, "vertex index")?;
                if i >= v {
                    return Err(parse_err(line, format!("vertex {i} out of range")));
                }
                if unary[i].is_some() {
                    return Err(parse_err(line, format!("duplicate unary for vertex {i}")));
                }
                let row = (0..l)
                    .map(|_| parse_value(toks.next(), line, scale))
                    .collect::<Result<Vec<_>>>()?;
                unary[i] = Some(row);
            }
            ("edge", Some((v, e, l))) => {
                if edges.len() == e {
                    return Err(parse_err(line, format!("more than {e} edges")));
                }
                let i = parse_usize(toks.next(), line, "vertex index")?;
                let j = parse_usize(toks.next(), line, "vertex index")?;
                if i >= v || j >= v {
                    return Err(parse_err(line, format!("edge ({i},{j}) out of range")));
                }
                if i == j {
                    return Err(parse_err(line, format!("self loop on vertex {i}")));
                }
                if edges.iter().any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i)) {
                    return Err(parse_err(line, format!("duplicate edge ({i},{j})")));
                }
                let spec = match toks.next() {
                    Some("table") => PairwiseSpec::Table(
                        (0..l * l)
                            .map(|_| parse_value(toks.next(), line, scale))
                            .collect::<Result<Vec<_>>>()?,
                    ),
                    Some("fn") => {
                        let weight = parse_value(toks.next(), line, scale)?;
                        let regularizer = match toks.next() {
                            Some("linear") => Regularizer::Linear,
                            Some("quadratic") => Regularizer::Quadratic,
                            Some("huber") => Regularizer::Huber {
                                delta: parse_value(toks.next(), line, None)?,
                            },
                            other => return Err(parse_err(line, format!("unknown regularizer {other:?}"))),
                        };
                        PairwiseSpec::Function { weight, regularizer }
                    }
                    other => return Err(parse_err(line, format!("expected `table` or `fn`, got {other:?}"))),
                };
                edges.push((i, j));
                pairwise.push(spec);
            }
            (other, Some(_)) => return Err(parse_err(line, format!("unknown keyword {other:?}"))),
        }
        if let Some(extra) = toks.next() {
            return Err(parse_err(line, format!("unexpected token {extra:?}")));
        }
    }
    let (v, e, _) = header.ok_or_else(|| parse_err(last_line.max(1), "missing header"))?;
    if let Some(i) = unary.iter().position(Option::is_none) {
        return Err(parse_err(last_line, format!("missing unary for vertex {i}")));
    }
    if edges.len() != e {
        return Err(parse_err(last_line, format!("expected {e} edges, found {}", edges.len())));
    }
    let l = header.map(|h| h.2).unwrap_or(2);
    let unary = unary.into_iter().map(|u| u.unwrap()).collect();
    EnergyModel::new(v, l, edges, unary, pairwise).map_err(|err| parse_err(last_line, err.to_string()))
}

/// Serializes a model; `parse_instance(write_instance(m), None)` returns `m`.
pub fn write_instance(model: &EnergyModel) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "mrf {} {} {}",
        model.num_vertices(),
        model.edges().len(),
        model.num_labels()
    );
    for i in 0..model.num_vertices() {
        let _ = write!(s, "unary {i}");
        for v in model.unary(i) {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    for (e, &(i, j)) in model.edges().iter().enumerate() {
        let _ = write!(s, "edge {i} {j}");
        match model.pairwise(e) {
            PairwiseSpec::Table(t) => {
                s.push_str(" table");
                for v in t {
                    let _ = write!(s, " {v}");
                }
            }
            PairwiseSpec::Function { weight, regularizer } => {
                let _ = write!(s, " fn {weight} {}", regularizer.name());
                if let Regularizer::Huber { delta } = regularizer {
                    let _ = write!(s, " {delta}");
                }
            }
        }
        s.push('\n');
    }
    s
}

/// Multiplies every potential by `k`, rounding to the nearest integer.
pub fn scale_model(model: &EnergyModel, k: f64) -> Result<EnergyModel> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {k}")));
    }
    let s = |v: i64| (v as f64 * k).round() as i64;
    let unary = (0..model.num_vertices())
        .map(|i| model.unary(i).iter().map(|&v| s(v)).collect())
        .collect();
    let pairwise = (0..model.edges().len())
        .map(|e| match model.pairwise(e) {
            PairwiseSpec::Table(t) => PairwiseSpec::Table(t.iter().map(|&v| s(v)).collect()),
            PairwiseSpec::Function { weight, regularizer } => PairwiseSpec::Function {
                weight: s(*weight),
                regularizer: *regularizer,
            },
        })
        .collect();
    EnergyModel::new(
        model.num_vertices(),
        model.num_labels(),
        model.edges().to_vec(),
        unary,
        pairwise,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let m = parse_instance("mrf 1 0 2\nunary 0 0 0\n", None).unwrap();
        assert_eq!((m.num_vertices(), m.num_labels(), m.edges().len()), (1, 2, 0));
    }

    #[test]
    fn functional_edge() {
        let text = "# two vertices\nmrf 2 1 3\nunary 0 0 0 0\nunary 1 0 0 0\nedge 0 1 fn 3 quadratic\n";
        let m = parse_instance(text, None).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let d = a as i64 - b as i64;
                assert_eq!(m.pairwise_value(0, a, b), 3 * d * d);
            }
        }
        assert!(matches!(m.pairwise(0), PairwiseSpec::Function { .. }));
    }

    #[test]
    fn table_edge() {
        let text = "mrf 2 1 2\nunary 0 1 2\nunary 1 3 4\nedge 0 1 table 0 1 1 0  # potts\n";
        let m = parse_instance(text, None).unwrap();
        assert_eq!(m.pairwise(0), &PairwiseSpec::Table(vec![0, 1, 1, 0]));
        assert_eq!(parse_instance(&write_instance(&m), None).unwrap(), m);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("mrf 1 0 1\n", 1),
            ("unary 0 1 2\n", 1),
            ("mrf 2 2 2\nunary 0 0 0\nunary 1 0 0\nedge 0 1 table 0 0 0 0\nedge 1 0 table 0 0 0 0\n", 5),
            ("mrf 1 0 2\nunary 0 0 1.5\n", 2),
            ("mrf 2 1 2\nunary 0 0 0\nunary 1 0 0\nedge 0 1 fn 1 cubic\n", 4),
            ("mrf 1 0 2\n\nunary 0 0 0 0\n", 3),
        ];
        for (text, want) in cases {
            match parse_instance(text, None) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn scaled_decimals() {
        let text = "mrf 2 1 3\nunary 0 0.5 1.26 0\nunary 1 0 0 0\nedge 0 1 fn 0.25 huber 2\n";
        let m = parse_instance(text, Some(10.0)).unwrap();
        assert_eq!(m.unary(0), &[5, 13, 0]);
        assert_eq!(
            m.pairwise(0),
            &PairwiseSpec::Function {
                weight: 3,
                regularizer: Regularizer::Huber { delta: 2 }
            }
        );
        let scaled = scale_model(&parse_instance("mrf 1 0 2\nunary 0 2 3\n", None).unwrap(), 1.5).unwrap();
        assert_eq!(scaled.unary(0), &[3, 5]);
    }
}
