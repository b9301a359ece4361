//! Text helpers: percentages, aligned tables, csv rows.

/// Signed fraction as percentage points with one decimal, never `-0.0`.
pub fn pct(v: f64) -> String {
    let s = format!("{:.1}%", v * 100.0);
    if s == "-0.0%" {
        "0.0%".into()
    } else {
        s
    }
}

/// Rate as a percentage, `n/a` when undefined.
pub fn rate(v: Option<f64>) -> String {
    v.map(pct).unwrap_or_else(|| "n/a".into())
}

/// Full-precision number for machine formats (shortest round-trip form).
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_row<S: AsRef<str>>(fields: &[S]) -> String {
    let mut line = fields.iter().map(|f| csv_field(f.as_ref())).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn numeric(cell: &str) -> bool {
    cell.is_empty() || cell == "n/a" || cell.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+')
}

/// Aligned text table; columns holding only numbers are right-aligned.
pub fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let width: Vec<usize> = (0..cols)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).chain([header[c].chars().count()]).max().unwrap_or(0))
        .collect();
    let right: Vec<bool> = (0..cols).map(|c| c > 0 && rows.iter().all(|r| numeric(&r[c]))).collect();
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (c, cell) in cells.iter().enumerate() {
            let pad = " ".repeat(width[c] - cell.chars().count());
            if c > 0 {
                s.push_str("  ");
            }
            if right[c] {
                s.push_str(&pad);
                s.push_str(cell);
            } else {
                s.push_str(cell);
                s.push_str(&pad);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    out.push_str(&line(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

/// `key  value` lines with keys padded to a common width.
pub fn pairs(rows: &[(String, String)]) -> String {
    let w = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_rounding() {
        assert_eq!(pct(0.021580187858300067), "2.2%");
        assert_eq!(pct(-0.007632383694933639), "-0.8%");
        assert_eq!(pct(-1e-18), "0.0%");
        assert_eq!(rate(None), "n/a");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_row(&["a", "b,c", "d\"e"]), "a,\"b,c\",\"d\"\"e\"\n");
    }
}
