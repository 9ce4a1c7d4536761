//! Dense GF(2) rows packed into `u64` words.

#[derive(Debug, Clone)]
pub(crate) struct BitMatrix {
    rows: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        BitMatrix {
            rows,
            words,
            data: vec![0; rows * words],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] ^= 1 << (c % 64);
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = self.words;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * w);
        head[lo * w..(lo + 1) * w].swap_with_slice(&mut tail[..w]);
    }

    /// `row[dst] ^= row[src]`
    pub fn xor_row_into(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let w = self.words;
        if src < dst {
            let (head, tail) = self.data.split_at_mut(dst * w);
            for (d, s) in tail[..w].iter_mut().zip(&head[src * w..(src + 1) * w]) {
                *d ^= *s;
            }
        } else {
            let (head, tail) = self.data.split_at_mut(src * w);
            for (d, s) in head[dst * w..(dst + 1) * w].iter_mut().zip(&tail[..w]) {
                *d ^= *s;
            }
        }
    }

    /// Gauss-Jordan elimination visiting candidate pivot columns in `order`.
    ///
    /// On return the first `pivots.len()` rows are in reduced form: row `r`
    /// has a one in column `pivots[r]` and zeros in every other pivot column.
    pub fn reduce(&mut self, order: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut pivots = Vec::new();
        for col in order {
            let rank = pivots.len();
            if rank == self.rows {
                break;
            }
            let Some(found) = (rank..self.rows).find(|&r| self.get(r, col)) else {
                continue;
            };
            self.swap_rows(rank, found);
            for r in 0..self.rows {
                if r != rank && self.get(r, col) {
                    self.xor_row_into(rank, r);
                }
            }
            pivots.push(col);
        }
        pivots
    }
}

/// Pack a 0/1 byte slice into words, bit `k` of the input at bit `k % 64`
/// of word `k / 64`.
pub(crate) fn pack_bits(bits: impl ExactSizeIterator<Item = bool>) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (k, b) in bits.enumerate() {
        if b {
            out[k / 64] |= 1 << (k % 64);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_finds_rank_and_pivots() {
        // rows: 110, 011, 101 -> rank 2 over GF(2)
        let mut m = BitMatrix::zeros(3, 3);
        for (r, c) in [(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 2)] {
            m.flip(r, c);
        }
        let piv = m.reduce(0..3);
        assert_eq!(piv, vec![0, 1]);
        assert!(m.get(0, 0) && !m.get(0, 1) && m.get(0, 2));
        assert!(!m.get(1, 0) && m.get(1, 1) && m.get(1, 2));
        assert!((0..3).all(|c| !m.get(2, c)));
    }

    #[test]
    fn swap_and_xor_across_word_boundary() {
        let mut m = BitMatrix::zeros(2, 130);
        m.flip(0, 129);
        m.flip(1, 3);
        m.swap_rows(0, 1);
        assert!(m.get(1, 129) && m.get(0, 3));
        m.xor_row_into(1, 0);
        assert!(m.get(0, 129) && m.get(0, 3));
    }

    #[test]
    fn pack_bits_layout() {
        let bits: Vec<bool> = (0..70).map(|k| k == 0 || k == 65).collect();
        assert_eq!(pack_bits(bits.into_iter()), vec![1, 2]);
    }
}
