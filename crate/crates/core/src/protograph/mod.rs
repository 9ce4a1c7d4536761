//! Protograph base matrices and their lifted parity-check codes.
//!
//! A [`BaseMatrix`] stores the edge multiplicities `b[i][j]` between
//! protograph check node `i` and variable node `j`, plus one puncture flag
//! per variable node. The AR3A and AR4JA families share the same shape:
//! three check rows, `5 + 2n` columns and the second column punctured, which
//! gives design rate `(n + 1) / (n + 2)`.

mod encoder;
mod gf2;
mod lift;

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};

pub use encoder::Encoder;
pub use lift::{lift, LiftedCode, ParityCheckMatrix};

/// Protograph family a base matrix was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Ar3a,
    Ar4ja,
    Custom,
}

impl Family {
    /// Build the family member with extension index `n`.
    ///
    /// Returns `None` for [`Family::Custom`], which has no generator.
    pub fn build(self, n: usize) -> Option<BaseMatrix> {
        match self {
            Family::Ar3a => Some(build_ar3a(n)),
            Family::Ar4ja => Some(build_ar4ja(n)),
            Family::Custom => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Ar3a => "ar3a",
            Family::Ar4ja => "ar4ja",
            Family::Custom => "custom",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ar3a" => Ok(Family::Ar3a),
            "ar4ja" => Ok(Family::Ar4ja),
            "custom" => Ok(Family::Custom),
            other => Err(Error::param(format!("unknown code family '{other}'"))),
        }
    }
}

/// Integer edge-multiplicity matrix of a protograph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
    punctured: Vec<bool>,
    family: Family,
    extension: usize,
}

impl BaseMatrix {
    /// Build a custom base matrix from explicit rows and puncture flags.
    pub fn new(entries: Vec<Vec<u32>>, punctured: Vec<bool>) -> Result<Self> {
        let rows = entries.len();
        let cols = entries.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidBaseMatrix("empty matrix".into()));
        }
        if let Some(bad) = entries.iter().position(|r| r.len() != cols) {
            return Err(Error::InvalidBaseMatrix(format!(
                "row {bad} has {} entries, expected {cols}",
                entries[bad].len()
            )));
        }
        if punctured.len() != cols {
            return Err(Error::DimensionMismatch {
                expected: cols,
                actual: punctured.len(),
            });
        }
        let base = BaseMatrix {
            rows,
            cols,
            entries: entries.into_iter().flatten().collect(),
            punctured,
            family: Family::Custom,
            extension: 0,
        };
        base.validate()?;
        Ok(base)
    }

    fn validate(&self) -> Result<()> {
        if self.rows >= self.cols {
            return Err(Error::InvalidBaseMatrix(format!(
                "need fewer rows than columns, got {}x{}",
                self.rows, self.cols
            )));
        }
        if let Some(i) = (0..self.rows).find(|&i| self.row_weight(i) == 0) {
            return Err(Error::InvalidBaseMatrix(format!("row {i} has no edges")));
        }
        if let Some(j) = (0..self.cols).find(|&j| self.col_weight(j) == 0) {
            return Err(Error::InvalidBaseMatrix(format!("column {j} has no edges")));
        }
        Ok(())
    }

    fn family_member(family: Family, n: usize, rows: [Vec<u32>; 3]) -> Self {
        let cols = rows[0].len();
        let mut punctured = vec![false; cols];
        punctured[1] = true;
        BaseMatrix {
            rows: 3,
            cols,
            entries: rows.into_iter().flatten().collect(),
            punctured,
            family,
            extension: n,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Extension index `n` (0 for custom matrices).
    pub fn extension(&self) -> usize {
        self.extension
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_punctured(&self, j: usize) -> bool {
        self.punctured[j]
    }

    pub fn punctured(&self) -> &[bool] {
        &self.punctured
    }

    pub fn punctured_count(&self) -> usize {
        self.punctured.iter().filter(|&&p| p).count()
    }

    /// Sum of column `j` (protograph variable-node degree).
    pub fn col_weight(&self, j: usize) -> u32 {
        (0..self.rows).map(|i| self.get(i, j)).sum()
    }

    /// Sum of row `i` (protograph check-node degree).
    pub fn row_weight(&self, i: usize) -> u32 {
        self.row(i).iter().sum()
    }

    pub fn col_weights(&self) -> Vec<u32> {
        (0..self.cols).map(|j| self.col_weight(j)).collect()
    }

    pub fn edge_count(&self) -> u32 {
        self.entries.iter().sum()
    }

    pub fn max_entry(&self) -> u32 {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    /// Design rate `(N - M) / (N - #punctured)`.
    pub fn code_rate(&self) -> Result<Ratio<usize>> {
        code_rate(self)
    }

    /// Design rate as a float, for noise-variance arithmetic.
    pub fn rate_f64(&self) -> Result<f64> {
        let r = self.code_rate()?;
        Ok(*r.numer() as f64 / *r.denom() as f64)
    }

    /// Short label such as `ar3a-n3`.
    pub fn label(&self) -> String {
        match self.family {
            Family::Custom => format!("custom-{}x{}", self.rows, self.cols),
            f => format!("{f}-n{}", self.extension),
        }
    }

    /// Plain-text form: `"M N"`, then `M` rows of multiplicities, then one
    /// row of puncture flags (`1` = punctured).
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            out.push_str(&join_row(self.row(i).iter()));
            out.push('\n');
        }
        out.push_str(&join_row(self.punctured.iter().map(|&p| u32::from(p))));
        out.push('\n');
        out
    }

    /// Parse the format written by [`BaseMatrix::to_text`]. The result is
    /// always tagged [`Family::Custom`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (ln, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        let dims = parse_ints(ln, header)?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse {
                line: ln,
                msg: "header must be 'M N'".into(),
            });
        };
        let (rows, cols) = (rows as usize, cols as usize);

        let mut entries = Vec::with_capacity(rows);
        for _ in 0..rows {
            let (ln, line) = lines.next().ok_or(Error::Parse {
                line: ln,
                msg: "missing matrix row".into(),
            })?;
            let row = parse_ints(ln, line)?;
            if row.len() != cols {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {cols} entries, found {}", row.len()),
                });
            }
            entries.push(row);
        }
        let (ln, line) = lines.next().ok_or(Error::Parse {
            line: ln,
            msg: "missing puncture row".into(),
        })?;
        let flags = parse_ints(ln, line)?;
        if flags.len() != cols || flags.iter().any(|&f| f > 1) {
            return Err(Error::Parse {
                line: ln,
                msg: format!("puncture row must hold {cols} flags of 0 or 1"),
            });
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse {
                line: ln,
                msg: "trailing content".into(),
            });
        }
        BaseMatrix::new(entries, flags.into_iter().map(|f| f == 1).collect())
    }
}

fn join_row<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_ints(line: usize, s: &str) -> Result<Vec<u32>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<u32>().map_err(|e| Error::Parse {
                line,
                msg: format!("'{tok}': {e}"),
            })
        })
        .collect()
}

/// AR3A base matrix with extension index `n` (rate `(n+1)/(n+2)`).
pub fn build_ar3a(n: usize) -> BaseMatrix {
    let mut r1 = vec![1, 2, 1, 0, 0];
    let mut r2 = vec![0, 2, 1, 1, 1];
    let mut r3 = vec![0, 1, 2, 1, 1];
    for _ in 0..n {
        r1.extend([0, 0]);
        r2.extend([2, 1]);
        r3.extend([1, 2]);
    }
    BaseMatrix::family_member(Family::Ar3a, n, [r1, r2, r3])
}

/// AR4JA base matrix with extension index `n` (rate `(n+1)/(n+2)`).
pub fn build_ar4ja(n: usize) -> BaseMatrix {
    let mut r1 = vec![1, 2, 0, 0, 0];
    let mut r2 = vec![0, 3, 1, 1, 1];
    let mut r3 = vec![0, 1, 2, 2, 1];
    for _ in 0..n {
        r1.extend([0, 0]);
        r2.extend([3, 1]);
        r3.extend([1, 3]);
    }
    BaseMatrix::family_member(Family::Ar4ja, n, [r1, r2, r3])
}

/// Design rate `(N - M) / (N - #punctured)` as an exact fraction.
pub fn code_rate(base: &BaseMatrix) -> Result<Ratio<usize>> {
    let (m, n) = (base.rows(), base.cols());
    let sent = n.saturating_sub(base.punctured_count());
    if n <= m || sent == 0 {
        return Err(Error::InvalidBaseMatrix(format!(
            "rate undefined for {m}x{n} with {} punctured columns",
            base.punctured_count()
        )));
    }
    Ok(Ratio::new(n - m, sent))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar3a_n0_matches_published_matrix() {
        let b = build_ar3a(0);
        assert_eq!(b.row(0), &[1, 2, 1, 0, 0]);
        assert_eq!(b.row(1), &[0, 2, 1, 1, 1]);
        assert_eq!(b.row(2), &[0, 1, 2, 1, 1]);
        assert_eq!(b.punctured(), &[false, true, false, false, false]);
        assert_eq!(b.code_rate().unwrap(), Ratio::new(1, 2));
    }

    #[test]
    fn ar3a_n1_column_sums() {
        let b = build_ar3a(1);
        assert_eq!(b.col_weights(), vec![1, 5, 4, 2, 2, 3, 3]);
        assert_eq!(b.edge_count(), 20);
    }

    #[test]
    fn ar3a_n3_is_rate_four_fifths() {
        let b = build_ar3a(3);
        assert_eq!((b.rows(), b.cols()), (3, 11));
        assert_eq!(b.code_rate().unwrap(), Ratio::new(4, 5));
    }

    #[test]
    fn ar4ja_n0_matches_published_matrix() {
        let b = build_ar4ja(0);
        assert_eq!(b.row(0), &[1, 2, 0, 0, 0]);
        assert_eq!(b.row(1), &[0, 3, 1, 1, 1]);
        assert_eq!(b.row(2), &[0, 1, 2, 2, 1]);
        assert_eq!(b.code_rate().unwrap(), Ratio::new(1, 2));
    }

    #[test]
    fn ar4ja_n2_column_sums() {
        let b = build_ar4ja(2);
        assert_eq!((b.rows(), b.cols()), (3, 9));
        assert_eq!(b.col_weights(), vec![1, 6, 3, 3, 2, 4, 4, 4, 4]);
    }

    #[test]
    fn ar4ja_n6_is_rate_seven_eighths() {
        assert_eq!(build_ar4ja(6).code_rate().unwrap(), Ratio::new(7, 8));
    }

    #[test]
    fn family_rates_follow_extension_index() {
        for n in 0..=6 {
            for b in [build_ar3a(n), build_ar4ja(n)] {
                assert_eq!(b.code_rate().unwrap(), Ratio::new(n + 1, n + 2));
                assert_eq!(b.cols(), 5 + 2 * n);
                assert_eq!(b.punctured_count(), 1);
                assert!(b.max_entry() <= 3);
            }
        }
    }

    #[test]
    fn custom_without_puncturing_has_rate_two_fifths() {
        let b = BaseMatrix::new(
            vec![
                vec![1, 1, 1, 0, 0],
                vec![0, 1, 1, 1, 0],
                vec![1, 0, 0, 1, 1],
            ],
            vec![false; 5],
        )
        .unwrap();
        assert_eq!(b.code_rate().unwrap(), Ratio::new(2, 5));
        assert_eq!(b.family(), Family::Custom);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(BaseMatrix::new(vec![vec![1, 1], vec![1, 1]], vec![false; 2]).is_err());
        assert!(BaseMatrix::new(vec![vec![1, 0, 1]], vec![false; 2]).is_err());
        // empty column
        assert!(BaseMatrix::new(vec![vec![1, 0, 1]], vec![false; 3]).is_err());
        // empty row
        assert!(BaseMatrix::new(vec![vec![1, 1, 1], vec![0, 0, 0]], vec![false; 3]).is_err());
    }

    #[test]
    fn fully_punctured_rate_is_an_error() {
        let b = BaseMatrix::new(vec![vec![1, 1]], vec![true, true]).unwrap();
        assert!(code_rate(&b).is_err());
    }

    #[test]
    fn text_round_trip() {
        let b = build_ar4ja(2);
        let text = b.to_text();
        assert!(text.starts_with("3 9\n1 2 0 0 0 0 0 0 0\n"));
        let back = BaseMatrix::from_text(&text).unwrap();
        assert_eq!(back.punctured(), b.punctured());
        for i in 0..3 {
            assert_eq!(back.row(i), b.row(i));
        }
        assert_eq!(back.family(), Family::Custom);
    }

    #[test]
    fn text_parse_errors_carry_line_numbers() {
        let err = BaseMatrix::from_text("2 3\n1 1 1\n1 x 1\n0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = BaseMatrix::from_text("1 3\n1 1 1\n0 2 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}
