//! Text renderings of a bi-capacity: the human-readable matrix and the
//! line-oriented file format.

use std::fmt::Write as _;

use thiserror::Error;

use super::{
    check_source_count, pair_count, subset_label, BiCapacity, LatticeError, Mode, SubsetPair, ValidationReport,
};

const MATRIX_TITLE: &str = "bi-capacity";
const FILE_MAGIC: &str = "bicap";
const MIN_SIGNIFICANT_DIGITS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("bad header: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{missing} of {expected} entries are missing")]
    Missing { missing: usize, expected: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("bi-capacity is not valid:\n{0}")]
    Invalid(ValidationReport),
}

fn line_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Line { line, message: message.into() }
}

/// Shortest exact decimal rendering of `v`, zero-padded to at least six
/// significant digits.
pub fn format_value(v: f64) -> String {
    let mut s = format!("{v}");
    if !v.is_finite() {
        return s;
    }
    let significant =
        s.trim_start_matches('-').chars().filter(|c| c.is_ascii_digit()).skip_while(|&c| c == '0').count();
    if significant < MIN_SIGNIFICANT_DIGITS {
        if !s.contains('.') {
            s.push('.');
        }
        let pad = if significant == 0 { MIN_SIGNIFICANT_DIGITS } else { MIN_SIGNIFICANT_DIGITS - significant };
        s.extend(std::iter::repeat_n('0', pad));
    }
    s
}

fn parse_header(line: &str, magic: &str) -> Result<(usize, Mode), FormatError> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some(magic) {
        return Err(FormatError::Header(format!("expected '{magic} m=<m> mode=<mode>', got '{line}'")));
    }
    let mut m = None;
    let mut mode = None;
    for field in fields {
        match field.split_once('=') {
            Some(("m", v)) => m = Some(v.parse::<usize>().map_err(|_| FormatError::Header(format!("bad m '{v}'")))?),
            Some(("mode", v)) => mode = Some(v.parse::<Mode>().map_err(FormatError::Header)?),
            _ => return Err(FormatError::Header(format!("unexpected field '{field}'"))),
        }
    }
    let m = m.ok_or_else(|| FormatError::Header("missing m=".into()))?;
    let mode = mode.ok_or_else(|| FormatError::Header("missing mode=".into()))?;
    check_source_count(m)?;
    Ok((m, mode))
}

fn finish(g: BiCapacity) -> Result<BiCapacity, FormatError> {
    let report = g.validate();
    if report.ok() {
        Ok(g)
    } else {
        Err(FormatError::Invalid(report))
    }
}

fn index_list(mask: u16) -> String {
    if mask == 0 {
        "-".to_string()
    } else {
        let idx: Vec<String> = (0..16).filter(|bit| mask & (1 << bit) != 0).map(|bit| (bit + 1).to_string()).collect();
        idx.join(",")
    }
}

fn parse_index_list(s: &str, m: usize, line: usize) -> Result<Vec<usize>, FormatError> {
    let s = s.trim();
    if s == "-" || s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let i: usize = t.trim().parse().map_err(|_| line_err(line, format!("bad source index '{t}'")))?;
            if i == 0 || i > m {
                return Err(line_err(line, format!("source index {i} outside 1..={m}")));
            }
            Ok(i)
        })
        .collect()
}

pub(super) fn to_file_text(g: &BiCapacity) -> String {
    let mut out = format!("{FILE_MAGIC} m={} mode={}\n", g.m(), g.mode());
    for pair in SubsetPair::all(g.m()) {
        let _ = writeln!(
            out,
            "A={};B={};{}",
            index_list(pair.a_mask()),
            index_list(pair.b_mask()),
            format_value(g.get(pair))
        );
    }
    out
}

pub(super) fn from_file_text(input: &str) -> Result<BiCapacity, FormatError> {
    let mut lines =
        input.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| FormatError::Header("empty input".into()))?;
    let (m, mode) = parse_header(header, FILE_MAGIC)?;
    let n = pair_count(m);
    let mut values: Vec<Option<f64>> = vec![None; n];
    for (line_no, line) in lines {
        let parts: Vec<&str> = line.split(';').collect();
        if parts.len() != 3 {
            return Err(line_err(line_no, "expected 'A=<list>;B=<list>;<value>'"));
        }
        let a = parts[0].trim().strip_prefix("A=").ok_or_else(|| line_err(line_no, "missing 'A='"))?;
        let b = parts[1].trim().strip_prefix("B=").ok_or_else(|| line_err(line_no, "missing 'B='"))?;
        let a = parse_index_list(a, m, line_no)?;
        let b = parse_index_list(b, m, line_no)?;
        let pair = SubsetPair::from_indices(&a, &b, m).map_err(|e| line_err(line_no, e.to_string()))?;
        let value: f64 =
            parts[2].trim().parse().map_err(|_| line_err(line_no, format!("bad value '{}'", parts[2].trim())))?;
        let slot = &mut values[pair.index()];
        if slot.is_some() {
            return Err(line_err(line_no, format!("duplicate entry for {pair}")));
        }
        *slot = Some(value);
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        return Err(FormatError::Missing { missing, expected: n });
    }
    let values = values.into_iter().map(|v| v.unwrap_or_default()).collect();
    finish(BiCapacity::from_values(m, mode, values)?)
}

struct Layout {
    label_width: usize,
    cell_width: usize,
}

impl Layout {
    fn new(m: usize) -> Self {
        let longest = subset_label(((1u32 << m) - 1) as u16).chars().count();
        Layout { label_width: longest.max(4), cell_width: (longest + 1).max(7) }
    }
}

pub(super) fn to_matrix_text(g: &BiCapacity) -> String {
    let m = g.m();
    let layout = Layout::new(m);
    let subsets = 1u16 << m;
    let mut out = format!("{MATRIX_TITLE} m={m} mode={}\n", g.mode());

    let mut header = format!("{:<w$}", "A\\B", w = layout.label_width);
    for b in 0..subsets {
        let _ = write!(header, "{:>w$}", subset_label(b), w = layout.cell_width);
    }
    out.push_str(header.trim_end());
    out.push('\n');

    for a in 0..subsets {
        let mut row = format!("{:<w$}", subset_label(a), w = layout.label_width);
        for b in 0..subsets {
            if a & b != 0 {
                row.push_str(&" ".repeat(layout.cell_width));
            } else {
                let pair = SubsetPair { a, b };
                let _ = write!(row, "{:>w$.2}", g.get(pair), w = layout.cell_width);
            }
        }
        out.push_str(row.trim_end());
        out.push('\n');
    }
    out
}

/// Parses the output of [`BiCapacity::to_matrix_text`] (values rounded to
/// two decimals) and validates the result.
pub fn parse_matrix_text(input: &str) -> Result<BiCapacity, FormatError> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (_, title) = lines.next().ok_or_else(|| FormatError::Header("empty input".into()))?;
    let (m, mode) = parse_header(title.trim(), MATRIX_TITLE)?;
    let layout = Layout::new(m);
    let subsets = 1u16 << m;

    let (header_no, header) = lines.next().ok_or_else(|| FormatError::Header("missing column header".into()))?;
    if !header.starts_with("A\\B") {
        return Err(line_err(header_no, "expected column header starting with 'A\\B'"));
    }

    let mut values = vec![0.0; pair_count(m)];
    for a in 0..subsets {
        let (line_no, row) = lines
            .next()
            .ok_or_else(|| FormatError::Missing { missing: (subsets - a) as usize, expected: subsets as usize })?;
        let chars: Vec<char> = row.chars().collect();
        let cell = |start: usize, width: usize| -> String {
            chars.iter().skip(start).take(width).collect::<String>().trim().to_string()
        };
        let label = cell(0, layout.label_width);
        if label != subset_label(a) {
            return Err(line_err(line_no, format!("expected row '{}', found '{label}'", subset_label(a))));
        }
        for b in 0..subsets {
            let text = cell(layout.label_width + b as usize * layout.cell_width, layout.cell_width);
            if a & b != 0 {
                if !text.is_empty() {
                    return Err(line_err(line_no, format!("overlapping cell ({a}, {b}) must be blank")));
                }
                continue;
            }
            let value: f64 = text.parse().map_err(|_| line_err(line_no, format!("bad cell '{text}'")))?;
            values[SubsetPair { a, b }.index()] = value;
        }
    }
    finish(BiCapacity::from_values(m, mode, values)?)
}
