//! One-column numeric data files.

use std::path::Path;

use crate::{CliError, CliResult};

/// Parse one finite number per line. Blank lines are skipped; the first
/// non-blank line is treated as a header if it is not a number.
pub fn parse_column(text: &str) -> CliResult<Vec<f64>> {
    let mut values = Vec::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields = line.split([',', ';', '\t']).count();
        if fields > 1 {
            return Err(CliError::Input(format!(
                "line {lineno}: expected one column, found {fields} fields"
            )));
        }
        let first = !seen_content;
        seen_content = true;
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(CliError::Input(format!("line {lineno}: value {v} is not finite")));
            }
            Err(_) if first => {}
            Err(_) => {
                return Err(CliError::Input(format!(
                    "line {lineno}: cannot parse `{line}` as a number"
                )));
            }
        }
    }
    Ok(values)
}

pub fn read_column(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_column(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_detected_once() {
        assert_eq!(parse_column("x\n1\n2.5\n\n3e0\n").unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(parse_column("1\n2\n").unwrap(), vec![1.0, 2.0]);
        let err = parse_column("x\n1\ny\n").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn rejects_extra_columns_and_nonfinite() {
        assert!(parse_column("1,2\n").unwrap_err().to_string().contains("line 1"));
        assert!(parse_column("1\nNaN\n").unwrap_err().to_string().contains("line 2"));
        assert!(parse_column("1\r\n2\r\n").is_ok());
    }
}
