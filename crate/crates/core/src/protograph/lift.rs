//! Copy-and-permute lifting with circulant permutation blocks.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::encoder::Encoder;
use super::BaseMatrix;
use crate::error::{Error, Result};

/// Shift candidates drawn per edge before falling back to the least bad one.
const SHIFT_RETRIES: usize = 64;

/// Sparse binary parity-check matrix with both row and column adjacency.
///
/// Edges are numbered in check-major order; `col_edges` lists the edge ids
/// touching each variable node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    edge_var: Vec<u32>,
    col_ptr: Vec<usize>,
    col_edges: Vec<u32>,
}

impl ParityCheckMatrix {
    /// Build from `(row, col)` pairs. Duplicate pairs are rejected.
    pub fn from_pairs(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut sorted = pairs.to_vec();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::param(format!(
                "duplicate entry ({}, {}) in parity-check matrix",
                w[0].0, w[0].1
            )));
        }
        if let Some(&(r, c)) = sorted.iter().find(|&&(r, c)| r >= rows || c >= cols) {
            return Err(Error::param(format!(
                "entry ({r}, {c}) outside {rows}x{cols} matrix"
            )));
        }

        let mut row_ptr = vec![0usize; rows + 1];
        for &(r, _) in &sorted {
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let edge_var: Vec<u32> = sorted.iter().map(|&(_, c)| c as u32).collect();

        let mut col_ptr = vec![0usize; cols + 1];
        for &(_, c) in &sorted {
            col_ptr[c + 1] += 1;
        }
        for c in 0..cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        let mut fill = col_ptr.clone();
        let mut col_edges = vec![0u32; sorted.len()];
        for (e, &(_, c)) in sorted.iter().enumerate() {
            col_edges[fill[c]] = e as u32;
            fill[c] += 1;
        }

        Ok(ParityCheckMatrix {
            rows,
            cols,
            row_ptr,
            edge_var,
            col_ptr,
            col_edges,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.edge_var.len()
    }

    /// Edge-id range of check `r`.
    #[inline]
    pub fn row_edges(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    /// Variable nodes touched by check `r`.
    #[inline]
    pub fn row_vars(&self, r: usize) -> &[u32] {
        &self.edge_var[self.row_edges(r)]
    }

    /// Variable node at the end of edge `e`.
    #[inline]
    pub fn edge_var(&self, e: usize) -> usize {
        self.edge_var[e] as usize
    }

    /// Edge ids touching variable `c`.
    #[inline]
    pub fn col_edges(&self, c: usize) -> &[u32] {
        &self.col_edges[self.col_ptr[c]..self.col_ptr[c + 1]]
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn col_weight(&self, c: usize) -> usize {
        self.col_ptr[c + 1] - self.col_ptr[c]
    }

    /// Check for which rows the `row`'s parity is odd, in row order.
    pub fn syndrome(&self, bits: &[u8]) -> Vec<u8> {
        (0..self.rows)
            .map(|r| self.row_vars(r).iter().fold(0u8, |acc, &v| acc ^ (bits[v as usize] & 1)))
            .collect()
    }

    /// True when every parity check is satisfied by `bits`.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.cols
            && (0..self.rows).all(|r| {
                self.row_vars(r)
                    .iter()
                    .fold(0u8, |acc, &v| acc ^ (bits[v as usize] & 1))
                    == 0
            })
    }

    /// `(row, col)` pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| self.row_vars(r).iter().map(move |&c| (r, c as usize)))
    }

    /// Sparse triplet text: header `"rows cols nnz"`, then one zero-based
    /// `"row col"` pair per line.
    pub fn to_triplet_text(&self) -> String {
        let mut out = String::with_capacity(self.nnz() * 10 + 32);
        let _ = writeln!(out, "{} {} {}", self.rows, self.cols, self.nnz());
        for (r, c) in self.pairs() {
            let _ = writeln!(out, "{r} {c}");
        }
        out
    }

    pub fn from_triplet_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse = |line: usize, s: &str| -> Result<Vec<usize>> {
            s.split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|e| Error::Parse {
                        line,
                        msg: format!("'{t}': {e}"),
                    })
                })
                .collect()
        };
        let (ln, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        let [rows, cols, nnz] = parse(ln, header)?[..] else {
            return Err(Error::Parse {
                line: ln,
                msg: "header must be 'rows cols nnz'".into(),
            });
        };
        let mut pairs = Vec::with_capacity(nnz);
        for (ln, line) in lines {
            let [r, c] = parse(ln, line)?[..] else {
                return Err(Error::Parse {
                    line: ln,
                    msg: "expected 'row col'".into(),
                });
            };
            pairs.push((r, c));
        }
        if pairs.len() != nnz {
            return Err(Error::Parse {
                line: ln,
                msg: format!("header declares {nnz} entries, found {}", pairs.len()),
            });
        }
        Self::from_pairs(rows, cols, &pairs)
    }

    /// Number of length-4 cycles in the Tanner graph.
    pub fn four_cycle_count(&self) -> u64 {
        let mut shared = vec![0u32; self.cols];
        let mut touched = Vec::new();
        let mut total = 0u64;
        for v in 0..self.cols {
            for &e in self.col_edges(v) {
                let r = self.edge_row(e as usize);
                for &u in self.row_vars(r) {
                    let u = u as usize;
                    if u > v {
                        if shared[u] == 0 {
                            touched.push(u);
                        }
                        shared[u] += 1;
                    }
                }
            }
            for &u in &touched {
                let k = u64::from(shared[u]);
                total += k * (k - 1) / 2;
                shared[u] = 0;
            }
            touched.clear();
        }
        total
    }

    /// Check node owning edge `e`.
    pub fn edge_row(&self, e: usize) -> usize {
        self.row_ptr.partition_point(|&p| p <= e) - 1
    }
}

/// A lifted protograph code: parity-check matrix, transmit mask and encoder.
#[derive(Debug, Clone)]
pub struct LiftedCode {
    base: BaseMatrix,
    lifting: usize,
    seed: u64,
    shifts: Vec<Vec<Vec<usize>>>,
    h: ParityCheckMatrix,
    transmit: Vec<bool>,
    encoder: Encoder,
}

/// Circulant shift of one lifted edge inside bundle `(row, col)`.
#[derive(Debug, Clone, Copy)]
struct PlacedEdge {
    row: usize,
    col: usize,
    shift: usize,
}

/// Lift `base` by `z` with circulant permutation blocks.
///
/// Every bundle of `b[i][j]` parallel protograph edges becomes that many
/// distinct circulant shifts, so the lifted graph has no double edges. Shift
/// candidates that would close a 4-cycle are rejected; after
/// `SHIFT_RETRIES` failed draws the candidate closing the fewest cycles is
/// kept.
pub fn lift(base: &BaseMatrix, z: usize, seed: u64) -> Result<LiftedCode> {
    if z == 0 {
        return Err(Error::param("lifting factor must be at least 1"));
    }
    let max = base.max_entry();
    if max as usize > z {
        return Err(Error::LiftingInfeasible {
            multiplicity: max,
            lifting: z,
        });
    }

    let (m, n) = (base.rows(), base.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shifts = vec![vec![Vec::new(); n]; m];
    let mut placed: Vec<PlacedEdge> = Vec::with_capacity(base.edge_count() as usize);

    for i in 0..m {
        for j in 0..n {
            for _ in 0..base.get(i, j) {
                let used = &shifts[i][j];
                let mut free: Vec<usize> = (0..z).filter(|s| !used.contains(s)).collect();
                let mut best: Option<(usize, u64)> = None;
                for _ in 0..SHIFT_RETRIES.min(free.len()) {
                    let k = rng.random_range(0..free.len());
                    let shift = free.swap_remove(k);
                    let cand = PlacedEdge { row: i, col: j, shift };
                    let cycles = cycles_through(&placed, cand, z);
                    if best.is_none_or(|(_, c)| cycles < c) {
                        best = Some((shift, cycles));
                    }
                    if cycles == 0 {
                        break;
                    }
                }
                let (shift, _) = best.expect("bundle multiplicity checked against z");
                shifts[i][j].push(shift);
                placed.push(PlacedEdge { row: i, col: j, shift });
            }
        }
    }

    let mut pairs = Vec::with_capacity(placed.len() * z);
    for e in &placed {
        for r in 0..z {
            pairs.push((e.row * z + r, e.col * z + (r + e.shift) % z));
        }
    }
    let h = ParityCheckMatrix::from_pairs(m * z, n * z, &pairs)?;
    let transmit = (0..n * z).map(|c| !base.is_punctured(c / z)).collect();
    let encoder = Encoder::new(&h, base, z)?;

    Ok(LiftedCode {
        base: base.clone(),
        lifting: z,
        seed,
        shifts,
        h,
        transmit,
        encoder,
    })
}

/// Number of base-level 4-cycle patterns closed by adding `new` (each
/// pattern lifts to `z` cycles in the derived graph).
///
/// A lifted 4-cycle walks edges e1=(i1,j1,a), e2=(i2,j1,b), e3=(i2,j2,c),
/// e4=(i1,j2,e) and closes iff `a - b + c - e = 0 (mod z)`. Node
/// distinctness requires `i1 != i2 || a != b` and `j1 != j2 || b != c`.
fn cycles_through(placed: &[PlacedEdge], new: PlacedEdge, z: usize) -> u64 {
    let all = || placed.iter().copied().chain(std::iter::once(new));
    let zi = z as i64;
    let mut count = 0;
    for e2 in all().filter(|e| e.col == new.col) {
        if e2.row == new.row && e2.shift == new.shift {
            continue;
        }
        for e3 in all().filter(|e| e.row == e2.row) {
            if e3.col == new.col && e3.shift == e2.shift {
                continue;
            }
            for e4 in all().filter(|e| e.row == new.row && e.col == e3.col) {
                let sum = new.shift as i64 - e2.shift as i64 + e3.shift as i64 - e4.shift as i64;
                if sum.rem_euclid(zi) == 0 {
                    count += 1;
                }
            }
        }
    }
    count
}

impl LiftedCode {
    pub fn base(&self) -> &BaseMatrix {
        &self.base
    }

    pub fn lifting(&self) -> usize {
        self.lifting
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn h(&self) -> &ParityCheckMatrix {
        &self.h
    }

    /// Circulant shifts chosen for bundle `(i, j)`.
    pub fn shifts(&self, i: usize, j: usize) -> &[usize] {
        &self.shifts[i][j]
    }

    /// Full codeword length `N * Z` (before puncturing).
    pub fn block_len(&self) -> usize {
        self.base.cols() * self.lifting
    }

    /// Bits actually sent over the channel, `(N - #punctured) * Z`.
    pub fn transmitted_len(&self) -> usize {
        (self.base.cols() - self.base.punctured_count()) * self.lifting
    }

    /// Information length `(N - M) * Z`.
    pub fn info_len(&self) -> usize {
        (self.base.cols() - self.base.rows()) * self.lifting
    }

    pub fn punctured_len(&self) -> usize {
        self.base.punctured_count() * self.lifting
    }

    /// `true` where the lifted column is sent over the channel.
    pub fn transmit_mask(&self) -> &[bool] {
        &self.transmit
    }

    /// Protograph column a lifted column was copied from.
    pub fn proto_col(&self, c: usize) -> usize {
        c / self.lifting
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    /// Codeword positions carrying the information bits, ascending.
    pub fn info_positions(&self) -> &[usize] {
        self.encoder.info_positions()
    }

    /// Systematically encode `info` (0/1 bytes, length `info_len`) into a
    /// full-length codeword.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        self.encoder.encode(info)
    }

    /// Read the information bits back out of a full-length word.
    pub fn extract_info(&self, word: &[u8]) -> Vec<u8> {
        self.encoder.info_positions().iter().map(|&p| word[p]).collect()
    }

    /// Hex SHA-256 over the base matrix, lifting factor and H triplets.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.base.to_text().as_bytes());
        hasher.update(self.lifting.to_le_bytes());
        for (r, c) in self.h.pairs() {
            hasher.update((r as u64).to_le_bytes());
            hasher.update((c as u64).to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protograph::{build_ar3a, build_ar4ja};

    #[test]
    fn lifting_by_one_reproduces_binary_base() {
        let base = BaseMatrix::new(
            vec![
                vec![1, 1, 0, 1, 1, 0, 0],
                vec![1, 0, 1, 1, 0, 1, 0],
                vec![0, 1, 1, 1, 0, 0, 1],
            ],
            vec![false; 7],
        )
        .unwrap();
        let code = lift(&base, 1, 7).unwrap();
        let mut dense = vec![vec![0u32; 7]; 3];
        for (r, c) in code.h().pairs() {
            dense[r][c] = 1;
        }
        for (i, row) in dense.iter().enumerate() {
            assert_eq!(row.as_slice(), base.row(i));
        }
    }

    #[test]
    fn ar4ja_n0_dimensions_at_z512() {
        let code = lift(&build_ar4ja(0), 512, 1).unwrap();
        assert_eq!((code.h().rows(), code.h().cols()), (1536, 2560));
        assert_eq!(code.info_len(), 1024);
        assert_eq!(code.transmitted_len(), 2048);
    }

    #[test]
    fn multiplicity_above_lifting_is_rejected() {
        let err = lift(&build_ar4ja(0), 2, 0).unwrap_err();
        assert!(matches!(
            err,
            Error::LiftingInfeasible {
                multiplicity: 3,
                lifting: 2
            }
        ));
        assert!(lift(&build_ar3a(0), 0, 0).is_err());
    }

    #[test]
    fn weights_match_protograph_sums() {
        let base = build_ar3a(2);
        let z = 16;
        let code = lift(&base, z, 99).unwrap();
        let h = code.h();
        for c in 0..h.cols() {
            assert_eq!(h.col_weight(c) as u32, base.col_weight(c / z));
        }
        for r in 0..h.rows() {
            assert_eq!(h.row_weight(r) as u32, base.row_weight(r / z));
        }
    }

    #[test]
    fn bundles_use_distinct_shifts() {
        let base = build_ar4ja(3);
        let code = lift(&base, 8, 3).unwrap();
        for i in 0..base.rows() {
            for j in 0..base.cols() {
                let s = code.shifts(i, j);
                assert_eq!(s.len(), base.get(i, j) as usize);
                let mut d = s.to_vec();
                d.sort_unstable();
                d.dedup();
                assert_eq!(d.len(), s.len());
            }
        }
    }

    #[test]
    fn girth_conditioning_at_moderate_lifting() {
        let code = lift(&build_ar3a(3), 128, 5).unwrap();
        assert_eq!(code.h().four_cycle_count(), 0);
    }

    #[test]
    fn cycle_predictor_agrees_with_direct_count() {
        // Tiny lifting leaves 4-cycles; the predicted pattern count times z
        // must equal the direct count in the derived graph.
        let base = build_ar3a(1);
        let z = 3;
        let code = lift(&base, z, 11).unwrap();
        let mut placed = Vec::new();
        let mut predicted = 0;
        for i in 0..base.rows() {
            for j in 0..base.cols() {
                for &shift in code.shifts(i, j) {
                    let e = PlacedEdge { row: i, col: j, shift };
                    predicted += cycles_through(&placed, e, z);
                    placed.push(e);
                }
            }
        }
        // With z odd no pattern maps onto itself under a half-turn shift, so
        // each one lifts to exactly z distinct cycles.
        assert!(predicted > 0);
        assert_eq!(predicted * z as u64, code.h().four_cycle_count());
    }

    #[test]
    fn deterministic_for_seed() {
        let a = lift(&build_ar3a(1), 32, 42).unwrap();
        let b = lift(&build_ar3a(1), 32, 42).unwrap();
        let c = lift(&build_ar3a(1), 32, 43).unwrap();
        assert_eq!(a.h(), b.h());
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn triplet_text_round_trip() {
        let code = lift(&build_ar3a(0), 4, 1).unwrap();
        let text = code.h().to_triplet_text();
        assert!(text.starts_with("12 20 56\n"));
        let back = ParityCheckMatrix::from_triplet_text(&text).unwrap();
        assert_eq!(&back, code.h());
    }

    #[test]
    fn triplet_header_mismatch_is_an_error() {
        assert!(ParityCheckMatrix::from_triplet_text("2 2 3\n0 0\n1 1\n").is_err());
        assert!(ParityCheckMatrix::from_triplet_text("2 2 2\n0 0\n0 0\n").is_err());
    }
}
