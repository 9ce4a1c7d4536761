//! Fading realizations and the channel-LLR variances they induce.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::channel::{Nakagami, NakagamiParams, RelayGeometry};
use crate::error::{Error, Result};
use crate::protograph::BaseMatrix;

/// Power gains `gamma = |h|^2` of all three links for `Q` independent
/// realizations of every protograph column.
///
/// Gains are stored column-major (`j * q + k`). Per `(j, k)` the draw order
/// is S-R, S-D, R-D, so EF and DF ensembles built from one seed share their
/// fading.
#[derive(Debug, Clone)]
pub struct FadingEnsemble {
    q: usize,
    cols: usize,
    sr: Vec<f64>,
    sd: Vec<f64>,
    rd: Vec<f64>,
}

impl FadingEnsemble {
    pub fn sample(
        cols: usize,
        q: usize,
        params: NakagamiParams,
        geometry: RelayGeometry,
        seed: u64,
    ) -> Result<Self> {
        if q == 0 {
            return Err(Error::param("ensemble needs at least one realization"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fading = Nakagami::new(params);
        let (sr_gain, rd_gain) = (geometry.mean_gain_sr(), geometry.mean_gain_rd());
        let mut ens = FadingEnsemble {
            q,
            cols,
            sr: Vec::with_capacity(cols * q),
            sd: Vec::with_capacity(cols * q),
            rd: Vec::with_capacity(cols * q),
        };
        for _ in 0..cols * q {
            ens.sr.push(fading.sample(&mut rng).powi(2) * sr_gain);
            ens.sd.push(fading.sample(&mut rng).powi(2));
            ens.rd.push(fading.sample(&mut rng).powi(2) * rd_gain);
        }
        Ok(ens)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Gains seen by an LLR of the given kind.
    pub fn gains(&self, link: LinkKind) -> Vec<f64> {
        match link {
            LinkKind::Mrc => self.sd.iter().zip(&self.rd).map(|(a, b)| a + b).collect(),
            LinkKind::SourceRelay => self.sr.clone(),
            LinkKind::SourceDestination => self.sd.clone(),
        }
    }
}

/// Which received signal an LLR ensemble describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// Destination after MRC of both slots, `gamma_SD + gamma_RD`.
    Mrc,
    /// Relay receiver, `gamma_SR`.
    SourceRelay,
    /// Destination with the relay silent, `gamma_SD`.
    SourceDestination,
}

/// Per-realization channel-LLR variances `4 R P_j lambda[q][j] Eb/N0`.
///
/// Only the gains `lambda` are stored; variances scale linearly with Eb/N0,
/// so one ensemble serves every point of a sweep or bisection.
#[derive(Debug, Clone)]
pub struct ChannelVarianceEnsemble {
    q: usize,
    cols: usize,
    rate: f64,
    transmitted: Vec<bool>,
    gains: Vec<f64>,
}

impl ChannelVarianceEnsemble {
    /// Build from column-major gains (`gains[j * q + k]`).
    pub fn from_gains(base: &BaseMatrix, q: usize, gains: Vec<f64>) -> Result<Self> {
        if q == 0 {
            return Err(Error::param("ensemble needs at least one realization"));
        }
        if gains.len() != base.cols() * q {
            return Err(Error::DimensionMismatch {
                expected: base.cols() * q,
                actual: gains.len(),
            });
        }
        if gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::param("gains must be finite and non-negative"));
        }
        Ok(ChannelVarianceEnsemble {
            q,
            cols: base.cols(),
            rate: base.rate_f64()?,
            transmitted: base.punctured().iter().map(|p| !p).collect(),
            gains,
        })
    }

    pub fn from_fading(base: &BaseMatrix, fading: &FadingEnsemble, link: LinkKind) -> Result<Self> {
        if fading.cols() != base.cols() {
            return Err(Error::DimensionMismatch {
                expected: base.cols(),
                actual: fading.cols(),
            });
        }
        Self::from_gains(base, fading.q(), fading.gains(link))
    }

    /// Every realization with the same gain, e.g. `lambda = 2` for plain
    /// BPSK-AWGN without relaying.
    pub fn constant(base: &BaseMatrix, lambda: f64) -> Result<Self> {
        Self::from_gains(base, 1, vec![lambda; base.cols()])
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn is_transmitted(&self, j: usize) -> bool {
        self.transmitted[j]
    }

    pub fn column_gains(&self, j: usize) -> &[f64] {
        &self.gains[j * self.q..(j + 1) * self.q]
    }

    /// Multiply every gain by `factor` (e.g. to idealise a link).
    pub fn scale_gains(&mut self, factor: f64) {
        self.gains.iter_mut().for_each(|g| *g *= factor);
    }

    /// `4 R P_j Eb/N0`: the variance per unit gain in column `j`.
    pub fn variance_scale(&self, j: usize, ebn0_linear: f64) -> f64 {
        crate::channel::channel_llr_variance(1.0, self.rate, ebn0_linear, self.transmitted[j])
    }

    /// Variance of realization `k` in column `j`.
    pub fn variance(&self, k: usize, j: usize, ebn0_linear: f64) -> f64 {
        self.variance_scale(j, ebn0_linear) * self.gains[j * self.q + k]
    }

    /// Variances of realization `k` for all columns.
    pub fn realization(&self, k: usize, ebn0_linear: f64) -> Vec<f64> {
        (0..self.cols).map(|j| self.variance(k, j, ebn0_linear)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::db_to_linear;
    use crate::protograph::build_ar3a;

    fn fading(m: f64, q: usize) -> FadingEnsemble {
        FadingEnsemble::sample(
            5,
            q,
            NakagamiParams::new(m).unwrap(),
            RelayGeometry::new(0.4).unwrap(),
            9,
        )
        .unwrap()
    }

    #[test]
    fn punctured_column_has_zero_variance() {
        let base = build_ar3a(0);
        let ens = ChannelVarianceEnsemble::from_fading(&base, &fading(1.0, 100), LinkKind::Mrc).unwrap();
        for k in 0..100 {
            assert_eq!(ens.variance(k, 1, 10.0), 0.0);
            assert!(ens.variance(k, 0, 10.0) > 0.0);
        }
    }

    #[test]
    fn mrc_gain_is_sum_of_links() {
        let f = fading(2.0, 50);
        let mrc = f.gains(LinkKind::Mrc);
        let sd = f.gains(LinkKind::SourceDestination);
        for (k, g) in mrc.iter().enumerate() {
            assert!(g > &sd[k]);
        }
        let mean_mrc = mrc.iter().sum::<f64>() / mrc.len() as f64;
        assert!(mean_mrc > 2.5 && mean_mrc < 5.0);
    }

    #[test]
    fn variance_matches_substitution() {
        let base = build_ar3a(3);
        let ens = ChannelVarianceEnsemble::constant(&base, 1.0).unwrap();
        assert!((ens.variance(0, 0, 1.0) - 3.2).abs() < 1e-12);
        let v = ens.variance(0, 4, db_to_linear(2.0));
        assert!((v - 3.2 * db_to_linear(2.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        let base = build_ar3a(0);
        assert!(ChannelVarianceEnsemble::from_gains(&base, 2, vec![1.0; 9]).is_err());
        assert!(ChannelVarianceEnsemble::from_gains(&base, 0, vec![]).is_err());
        assert!(ChannelVarianceEnsemble::from_gains(&base, 1, vec![-1.0; 5]).is_err());
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let a = fading(3.0, 10).gains(LinkKind::Mrc);
        let b = fading(3.0, 10).gains(LinkKind::Mrc);
        assert_eq!(a, b);
    }
}
