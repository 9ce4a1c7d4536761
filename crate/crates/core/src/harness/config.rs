//! Flat `key = value` configuration files and Eb/N0 sweep strings.
//!
//! ```text
//! # comment
//! family = ar3a
//! ebn0 = 0.5:1.5:0.25
//! ```
//!
//! Keys are the long command-line flag names without the leading dashes.

use std::path::Path;

use crate::error::{Error, Result};

/// Parse `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; a key may appear only once.
pub fn parse_flat_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected 'key = value', got '{line}'"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("invalid key '{key}'"),
            });
        }
        if out.iter().any(|(k, _)| k == key) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("duplicate key '{key}'"),
            });
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

pub fn load_flat_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_flat_config(&text)
}

/// Parse an Eb/N0 sweep: `start:stop:step` (inclusive), a comma list, or a
/// single value.
pub fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        let v: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::param(format!("invalid number '{}' in sweep '{s}'", t.trim())))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::param(format!("non-finite value in sweep '{s}'")))
        }
    };
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [single] => single.split(',').map(num).collect::<Result<Vec<_>>>()?,
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(Error::param(format!("sweep '{s}' needs start <= stop and step > 0")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            if count > 100_000 {
                return Err(Error::param(format!("sweep '{s}' has too many points")));
            }
            // Round to suppress accumulated binary noise in the printed values.
            (0..count)
                .map(|k| ((a + k as f64 * step) * 1e9).round() / 1e9)
                .collect()
        }
        _ => return Err(Error::param(format!("invalid sweep '{s}'"))),
    };
    if values.is_empty() {
        return Err(Error::param("empty sweep"));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_config() {
        let cfg = parse_flat_config("# c\n\nfamily = ar3a\n ebn0=0:1:0.5 \nseed= 7\n").unwrap();
        assert_eq!(
            cfg,
            vec![
                ("family".into(), "ar3a".into()),
                ("ebn0".into(), "0:1:0.5".into()),
                ("seed".into(), "7".into())
            ]
        );
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        for (text, line) in [("a=1\nbogus\n", 2), ("a=1\n\na=2", 3), ("=3", 1), ("a b=3", 1)] {
            match parse_flat_config(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_flat_config(&dir.path().join("absent.conf")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn sweeps() {
        assert_eq!(parse_sweep("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_sweep("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_sweep("-1, 2.5").unwrap(), vec![-1.0, 2.5]);
        assert_eq!(parse_sweep("3").unwrap(), vec![3.0]);
        for bad in ["", "1:0:0.1", "0:1:0", "0:1", "a", "0:1:-1", "nan"] {
            assert!(parse_sweep(bad).is_err(), "{bad}");
        }
    }
}
