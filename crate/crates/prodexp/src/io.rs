//! Line-oriented text formats. Field elements are decimal bit patterns, the
//! field is identified by its order q (a power of two), and blank lines are
//! insignificant everywhere.
//!
//! Matrix: a header `q rows cols`, then one line of elements per row.
//! Code: `code n k`, then the generator in the matrix format.
//! Cell set: `cells n D count`, then one D-tuple of coordinates per line.
//! Tuple: `tuple D n q`, then D code blocks.
//! Bundle: a code block, a check matrix block, then `ltc Delta s_num s_den m`.

use crate::code::LinearCode;
use crate::field::Field;
use crate::grid::{CellSet, Grid};
use crate::ltc::{LtcBundle, LtcParams};
use crate::matrix::Mat;
use crate::product::CodeTuple;
use crate::{Error, Rat, Result};

struct Cursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Cursor<'a> {
        Cursor { lines: text.lines().enumerate() }
    }

    /// Next non-blank line with its 1-based number.
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (i, line) in self.lines.by_ref() {
            if !line.trim().is_empty() {
                return Ok((i + 1, line));
            }
        }
        Err(Error::Parse("unexpected end of input".into()))
    }

    fn finish(mut self) -> Result<()> {
        match self.next_line() {
            Ok((no, _)) => Err(at(no, "trailing content")),
            Err(_) => Ok(()),
        }
    }
}

fn at(line_no: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line_no}: {msg}"))
}

fn uint(tok: &str, line_no: usize) -> Result<u64> {
    tok.parse::<u64>().map_err(|_| at(line_no, format!("expected an integer, got {tok:?}")))
}

fn field_of_order(q: u64, line_no: usize) -> Result<Field> {
    if q < 2 || !q.is_power_of_two() {
        return Err(at(line_no, format!("field order {q} is not a power of two >= 2")));
    }
    Field::new(q.trailing_zeros()).map_err(|e| at(line_no, e))
}

/// Renders a rational as `p/q`, the form every certificate uses.
pub fn format_ratio(r: Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `p/q` or a bare integer `p`.
pub fn parse_ratio(text: &str) -> Result<Rat> {
    let s = text.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let p = num.parse::<u64>().map_err(|_| Error::Parse(format!("bad ratio {text:?}")))?;
    let q = den.parse::<u64>().map_err(|_| Error::Parse(format!("bad ratio {text:?}")))?;
    if q == 0 {
        return Err(Error::Parse(format!("zero denominator in {text:?}")));
    }
    Ok(Rat::new(p, q))
}

pub fn write_matrix(m: &Mat) -> String {
    let mut out = format!("{} {} {}\n", m.field().order(), m.rows(), m.cols());
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn parse_matrix_at(cur: &mut Cursor) -> Result<Mat> {
    let (no, header) = cur.next_line()?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(at(no, "matrix header must be `q rows cols`"));
    }
    let q = uint(toks[0], no)?;
    let field = field_of_order(q, no)?;
    let rows = uint(toks[1], no)? as usize;
    let cols = uint(toks[2], no)? as usize;
    if rows.saturating_mul(cols.max(1)) > 1 << 26 {
        return Err(at(no, "matrix too large"));
    }
    let mut data = Vec::with_capacity(rows);
    for _ in 0..rows {
        let (no, line) = cur.next_line()?;
        let row: Vec<u64> =
            line.split_whitespace().map(|t| uint(t, no)).collect::<Result<_>>()?;
        if row.len() != cols {
            return Err(at(no, format!("expected {cols} elements, got {}", row.len())));
        }
        if let Some(v) = row.iter().find(|&&v| u128::from(v) >= field.order()) {
            return Err(at(no, format!("element {v} outside the field of order {q}")));
        }
        data.push(row);
    }
    Mat::from_rows_with_cols(field, data, cols)
}

pub fn parse_matrix(text: &str) -> Result<Mat> {
    let mut cur = Cursor::new(text);
    let m = parse_matrix_at(&mut cur)?;
    cur.finish()?;
    Ok(m)
}

pub fn write_code(code: &LinearCode) -> String {
    format!("code {} {}\n{}", code.len(), code.dim(), write_matrix(code.generator()))
}

fn parse_code_at(cur: &mut Cursor) -> Result<LinearCode> {
    let (no, header) = cur.next_line()?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 3 || toks[0] != "code" {
        return Err(at(no, "code header must be `code n k`"));
    }
    let n = uint(toks[1], no)? as usize;
    let k = uint(toks[2], no)? as usize;
    let gen = parse_matrix_at(cur)?;
    if gen.rows() != k || gen.cols() != n {
        return Err(at(no, format!(
            "generator is {}x{} but the header claims k={k}, n={n}",
            gen.rows(),
            gen.cols()
        )));
    }
    let code = LinearCode::from_generator(gen)?;
    if code.dim() != k {
        return Err(at(no, "generator rows are linearly dependent"));
    }
    Ok(code)
}

pub fn parse_code(text: &str) -> Result<LinearCode> {
    let mut cur = Cursor::new(text);
    let c = parse_code_at(&mut cur)?;
    cur.finish()?;
    Ok(c)
}

pub fn write_cellset(set: &CellSet) -> String {
    let grid = set.grid();
    let mut out = format!("cells {} {} {}\n", grid.n(), grid.d(), set.len());
    for cell in set.iter() {
        let coords: Vec<String> = grid.coords(cell).iter().map(|c| c.to_string()).collect();
        out.push_str(&coords.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_cellset(text: &str) -> Result<CellSet> {
    let mut cur = Cursor::new(text);
    let (no, header) = cur.next_line()?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 4 || toks[0] != "cells" {
        return Err(at(no, "cell set header must be `cells n D count`"));
    }
    let n = uint(toks[1], no)? as usize;
    let d = uint(toks[2], no)? as usize;
    let count = uint(toks[3], no)? as usize;
    let grid = Grid::new(n, d)?;
    let mut set = CellSet::empty(grid);
    for _ in 0..count {
        let (no, line) = cur.next_line()?;
        let coords: Vec<u64> =
            line.split_whitespace().map(|t| uint(t, no)).collect::<Result<_>>()?;
        if coords.len() != d {
            return Err(at(no, format!("expected {d} coordinates, got {}", coords.len())));
        }
        if let Some(c) = coords.iter().find(|&&c| c >= n as u64) {
            return Err(at(no, format!("coordinate {c} outside [0, {n})")));
        }
        let coords: Vec<usize> = coords.into_iter().map(|c| c as usize).collect();
        if !set.insert(grid.index(&coords)) {
            return Err(at(no, "duplicate cell"));
        }
    }
    cur.finish()?;
    Ok(set)
}

pub fn write_tuple(tuple: &CodeTuple) -> String {
    let mut out = format!(
        "tuple {} {} {}\n",
        tuple.d(),
        tuple.n(),
        tuple.field().order()
    );
    for code in tuple.codes() {
        out.push_str(&write_code(code));
    }
    out
}

pub fn parse_tuple(text: &str) -> Result<CodeTuple> {
    let mut cur = Cursor::new(text);
    let (no, header) = cur.next_line()?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 4 || toks[0] != "tuple" {
        return Err(at(no, "tuple header must be `tuple D n q`"));
    }
    let d = uint(toks[1], no)? as usize;
    let n = uint(toks[2], no)? as usize;
    let q = uint(toks[3], no)?;
    let field = field_of_order(q, no)?;
    if d == 0 {
        return Err(at(no, "a tuple needs at least one direction"));
    }
    let mut codes = Vec::with_capacity(d);
    for _ in 0..d {
        let code = parse_code_at(&mut cur)?;
        if code.len() != n || code.field() != field {
            return Err(at(no, "component code disagrees with the tuple header"));
        }
        codes.push(code);
    }
    cur.finish()?;
    CodeTuple::new(codes)
}

pub fn write_bundle(bundle: &LtcBundle) -> String {
    format!(
        "{}{}ltc {} {} {} {}\n",
        write_code(&bundle.code),
        write_matrix(&bundle.parity),
        bundle.params.locality,
        bundle.params.s.numer(),
        bundle.params.s.denom(),
        bundle.params.m
    )
}

pub fn parse_bundle(text: &str) -> Result<LtcBundle> {
    let mut cur = Cursor::new(text);
    let code = parse_code_at(&mut cur)?;
    let parity = parse_matrix_at(&mut cur)?;
    let (no, line) = cur.next_line()?;
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "ltc" {
        return Err(at(no, "bundle trailer must be `ltc Delta s_num s_den m`"));
    }
    let locality = uint(toks[1], no)? as usize;
    let s_num = uint(toks[2], no)?;
    let s_den = uint(toks[3], no)?;
    if s_den == 0 {
        return Err(at(no, "zero soundness denominator"));
    }
    let m = uint(toks[4], no)? as usize;
    cur.finish()?;
    if parity.cols() != code.len() || parity.field() != code.field() {
        return Err(Error::Parse("check matrix does not match the code block".into()));
    }
    if m != parity.rows() {
        return Err(at(no, format!("trailer claims m={m}, matrix has {} rows", parity.rows())));
    }
    Ok(LtcBundle {
        params: LtcParams { locality, s: Rat::new(s_num, s_den), m, n: code.len() },
        code,
        parity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltc::tensor_extend;
    use crate::Caps;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn f2() -> Field {
        Field::new(1).unwrap()
    }

    #[test]
    fn matrix_round_trips() {
        let mut rng = ChaCha12Rng::seed_from_u64(70);
        for t in [1u32, 2, 4] {
            let field = Field::new(t).unwrap();
            for (r, c) in [(0usize, 3usize), (1, 1), (3, 4), (4, 2)] {
                let m = Mat::random_uniform(field, r, c, &mut rng);
                assert_eq!(parse_matrix(&write_matrix(&m)).unwrap(), m);
            }
        }
    }

    #[test]
    fn matrix_parse_rejections() {
        assert!(matches!(parse_matrix("3 1 1\n2\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("2 1 2\n0 1 1\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("2 1 2\n0 3\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("2 2 2\n0 1\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("2 1 2\n0 1\nextra\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("2 1\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn code_round_trips_and_rejects_bad_headers() {
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        for t in [1u32, 2] {
            let field = Field::new(t).unwrap();
            for k in 0..=3 {
                let code = LinearCode::random_code(field, 3, k, &mut rng).unwrap();
                assert_eq!(parse_code(&write_code(&code)).unwrap(), code);
            }
        }
        // Dependent rows cannot claim dimension 2.
        let text = "code 2 2\n2 2 2\n1 1\n1 1\n";
        assert!(matches!(parse_code(text), Err(Error::Parse(_))));
        let text = "code 3 1\n2 1 2\n1 1\n";
        assert!(matches!(parse_code(text), Err(Error::Parse(_))));
    }

    #[test]
    fn cellset_round_trips() {
        let grid = Grid::new(3, 2).unwrap();
        for indices in [vec![], vec![0usize, 4, 8], vec![1, 2, 3, 5]] {
            let set = CellSet::from_indices(grid, &indices);
            assert_eq!(parse_cellset(&write_cellset(&set)).unwrap(), set);
        }
        assert!(matches!(
            parse_cellset("cells 3 2 2\n0 0\n0 0\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(parse_cellset("cells 3 2 1\n0 3\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_cellset("cells 3 2 1\n0\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn tuple_round_trips() {
        let mut rng = ChaCha12Rng::seed_from_u64(72);
        let field = Field::new(2).unwrap();
        let tuple = CodeTuple::new(vec![
            LinearCode::random_code(field, 3, 2, &mut rng).unwrap(),
            LinearCode::random_code(field, 3, 1, &mut rng).unwrap(),
        ])
        .unwrap();
        let text = write_tuple(&tuple);
        assert_eq!(parse_tuple(&text).unwrap(), tuple);
        // A component of the wrong length is refused.
        let bad = text.replace("tuple 2 3 4", "tuple 2 4 4");
        assert!(matches!(parse_tuple(&bad), Err(Error::Parse(_))));
    }

    #[test]
    fn bundle_round_trips() {
        let caps = Caps::default();
        let code = LinearCode::rep_code(f2(), 2);
        let parity = code.parity().clone();
        let bundle = LtcBundle {
            code,
            parity,
            params: LtcParams { locality: 2, s: Rat::new(2, 1), m: 1, n: 2 },
        };
        for b in [bundle.clone(), tensor_extend(&bundle, 3, &caps).unwrap()] {
            let text = write_bundle(&b);
            let parsed = parse_bundle(&text).unwrap();
            assert_eq!(parsed, b);
            parsed.validate(&caps).unwrap();
        }
        let text = write_bundle(&bundle).replace("ltc 2 2 1 1", "ltc 2 2 1 5");
        assert!(matches!(parse_bundle(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn ratios_parse_both_ways() {
        assert_eq!(parse_ratio("3/4").unwrap(), Rat::new(3, 4));
        assert_eq!(parse_ratio(" 2 ").unwrap(), Rat::new(2, 1));
        assert_eq!(parse_ratio("0/5").unwrap(), Rat::new(0, 1));
        assert_eq!(format_ratio(Rat::new(6, 4)), "3/2");
        assert_eq!(format_ratio(Rat::new(2, 1)), "2/1");
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("-1/2").is_err());
        assert!(parse_ratio("x").is_err());
    }

    #[test]
    fn blank_lines_are_ignored_between_blocks() {
        let text = "\ncode 2 1\n\n2 1 2\n1 1\n\n2 1 2\n1 1\n\nltc 2 2 1 1\n\n";
        let bundle = parse_bundle(text).unwrap();
        assert_eq!(bundle.code, LinearCode::rep_code(f2(), 2));
        assert_eq!(bundle.params.s, Rat::new(2, 1));
    }
}
