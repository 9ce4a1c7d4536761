//! Systematic encoder from a reduced form of H.

use super::gf2::{pack_bits, BitMatrix};
use super::{BaseMatrix, ParityCheckMatrix};
use crate::error::{Error, Result};

/// Encoder derived from a Gauss-Jordan reduction of the parity-check matrix.
///
/// Pivot columns are searched in the order: punctured protograph columns
/// first, then the remaining columns left to right. Pivot columns carry
/// parity; the lowest-indexed `(N - M) * Z` non-pivot columns carry the
/// information bits in ascending order. If H is rank deficient the surplus
/// free columns are frozen to zero.
#[derive(Debug, Clone)]
pub struct Encoder {
    info_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    frozen_positions: Vec<usize>,
    /// One packed row per parity bit over the information index space.
    parity_rows: Vec<u64>,
    words: usize,
    block_len: usize,
}

impl Encoder {
    pub(crate) fn new(h: &ParityCheckMatrix, base: &BaseMatrix, z: usize) -> Result<Self> {
        let mut dense = BitMatrix::zeros(h.rows(), h.cols());
        for (r, c) in h.pairs() {
            dense.flip(r, c);
        }
        let order = (0..h.cols())
            .filter(|&c| base.is_punctured(c / z))
            .chain((0..h.cols()).filter(|&c| !base.is_punctured(c / z)));
        let pivots = dense.reduce(order);

        let k = (base.cols() - base.rows()) * z;
        let mut is_pivot = vec![false; h.cols()];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..h.cols()).filter(|&c| !is_pivot[c]).collect();
        if free.len() < k {
            return Err(Error::param(format!(
                "parity-check matrix leaves {} free columns, need {k}",
                free.len()
            )));
        }
        let (info, frozen) = free.split_at(k);

        let words = k.div_ceil(64);
        let mut parity_rows = Vec::with_capacity(pivots.len() * words);
        for r in 0..pivots.len() {
            parity_rows.extend(pack_bits(info.iter().map(|&c| dense.get(r, c))));
        }
        if k == 0 {
            parity_rows.clear();
        }

        Ok(Encoder {
            info_positions: info.to_vec(),
            parity_positions: pivots,
            frozen_positions: frozen.to_vec(),
            parity_rows,
            words,
            block_len: h.cols(),
        })
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn parity_positions(&self) -> &[usize] {
        &self.parity_positions
    }

    /// Free columns pinned to zero because H is rank deficient.
    pub fn frozen_positions(&self) -> &[usize] {
        &self.frozen_positions
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.info_positions.len() {
            return Err(Error::DimensionMismatch {
                expected: self.info_positions.len(),
                actual: info.len(),
            });
        }
        let mut word = vec![0u8; self.block_len];
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            word[pos] = b & 1;
        }
        if self.words == 0 {
            return Ok(word);
        }
        let packed = pack_bits(info.iter().map(|&b| b & 1 == 1));
        for (row, &pos) in self
            .parity_rows
            .chunks_exact(self.words)
            .zip(&self.parity_positions)
        {
            let ones: u32 = row
                .iter()
                .zip(&packed)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            word[pos] = (ones & 1) as u8;
        }
        Ok(word)
    }
}

#[cfg(test)]
mod tests {
    use crate::protograph::{build_ar3a, build_ar4ja, lift, BaseMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_base() -> BaseMatrix {
        BaseMatrix::new(
            vec![
                vec![1, 1, 1, 0, 0],
                vec![0, 1, 1, 1, 0],
                vec![1, 1, 0, 1, 1],
            ],
            vec![false, true, false, false, false],
        )
        .unwrap()
    }

    #[test]
    fn zero_info_gives_zero_codeword() {
        let code = lift(&build_ar3a(1), 8, 3).unwrap();
        let word = code.encode(&vec![0; code.info_len()]).unwrap();
        assert!(word.iter().all(|&b| b == 0));
    }

    #[test]
    fn matches_brute_force_solution() {
        // Enumerate all 2^10 words of a 6x10 code and check that, for every
        // info word, the encoder returns the unique codeword agreeing with it
        // on the info positions (frozen positions are zero).
        let code = lift(&small_base(), 2, 9).unwrap();
        let n = code.block_len();
        let codewords: Vec<Vec<u8>> = (0u32..1 << n)
            .map(|w| (0..n).map(|k| ((w >> k) & 1) as u8).collect::<Vec<u8>>())
            .filter(|w| code.h().is_codeword(w))
            .collect();
        let enc = code.encoder();
        for info_word in 0u32..1 << code.info_len() {
            let info: Vec<u8> = (0..code.info_len())
                .map(|k| ((info_word >> k) & 1) as u8)
                .collect();
            let matches: Vec<&Vec<u8>> = codewords
                .iter()
                .filter(|c| {
                    enc.info_positions().iter().zip(&info).all(|(&p, &b)| c[p] == b)
                        && enc.frozen_positions().iter().all(|&p| c[p] == 0)
                })
                .collect();
            assert_eq!(matches.len(), 1);
            assert_eq!(&code.encode(&info).unwrap(), matches[0]);
        }
    }

    #[test]
    fn random_words_satisfy_parity_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for base in [build_ar3a(3), build_ar4ja(2)] {
            let code = lift(&base, 32, 17).unwrap();
            for _ in 0..1000 {
                let info: Vec<u8> = (0..code.info_len()).map(|_| rng.random_range(0..2)).collect();
                let word = code.encode(&info).unwrap();
                assert!(code.h().is_codeword(&word));
                assert_eq!(code.extract_info(&word), info);
            }
        }
    }

    #[test]
    fn wrong_info_length_is_rejected() {
        let code = lift(&build_ar3a(0), 4, 0).unwrap();
        assert!(code.encode(&[0; 3]).is_err());
    }
}
