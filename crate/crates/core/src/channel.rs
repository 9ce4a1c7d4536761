//! Two-hop half-duplex relay channel with per-bit Nakagami-m fading.
//!
//! Link amplitudes are `h_SD = a_SD`, `h_SR = a_SR / d` and
//! `h_RD = a_RD / (1 - d)` with `a` Nakagami-m of unit mean-square. Fading
//! is redrawn independently for every bit on every link. All three links see
//! real AWGN of the same per-dimension variance `sigma^2 = 1 / (R * Eb/N0)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Relaying protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Error-free relaying: the relay always forwards the true codeword.
    Ef,
    /// Decode-and-forward: the relay forwards only blocks it decoded.
    Df,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Ef => "ef",
            Protocol::Df => "df",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ef" => Ok(Protocol::Ef),
            "df" => Ok(Protocol::Df),
            other => Err(Error::param(format!("unknown protocol '{other}'"))),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Nakagami-m fading depth with `Omega = E[a^2] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiParams {
    m: f64,
}

impl NakagamiParams {
    pub fn new(m: f64) -> Result<Self> {
        if !m.is_finite() || m < 0.5 {
            return Err(Error::param(format!("Nakagami depth must be >= 0.5, got {m}")));
        }
        Ok(NakagamiParams { m })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn omega(&self) -> f64 {
        1.0
    }

    /// Distribution of the power gain `a^2`: Gamma(shape m, scale 1/m).
    pub fn power_distribution(&self) -> Gamma<f64> {
        Gamma::new(self.m, self.omega() / self.m).expect("validated shape and scale")
    }

    /// Closed-form `E[a] = Gamma(m + 1/2) / (Gamma(m) sqrt(m / Omega))`.
    pub fn mean_amplitude(&self) -> f64 {
        let m = self.m;
        (libm::lgamma(m + 0.5) - libm::lgamma(m)).exp() / (m / self.omega()).sqrt()
    }
}

/// Draws Nakagami-m amplitudes as the square root of a Gamma variate.
#[derive(Debug, Clone, Copy)]
pub struct Nakagami {
    power: Gamma<f64>,
}

impl Nakagami {
    pub fn new(params: NakagamiParams) -> Self {
        Nakagami {
            power: params.power_distribution(),
        }
    }
}

impl Distribution<f64> for Nakagami {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.power.sample(rng).sqrt()
    }
}

/// Draw one Nakagami-m amplitude.
pub fn sample_nakagami<R: Rng + ?Sized>(params: NakagamiParams, rng: &mut R) -> f64 {
    Nakagami::new(params).sample(rng)
}

/// Collinear S-R-D placement with `|SD| = 1`, `|SR| = d`, `|RD| = 1 - d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayGeometry {
    d: f64,
}

impl RelayGeometry {
    pub fn new(d: f64) -> Result<Self> {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::param(format!("relay distance must lie in (0, 1), got {d}")));
        }
        Ok(RelayGeometry { d })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn sr_scale(&self) -> f64 {
        1.0 / self.d
    }

    pub fn rd_scale(&self) -> f64 {
        1.0 / (1.0 - self.d)
    }

    /// `E[gamma_SR] = 1 / d^2`
    pub fn mean_gain_sr(&self) -> f64 {
        self.sr_scale().powi(2)
    }

    /// `E[gamma_RD] = 1 / (1 - d)^2`
    pub fn mean_gain_rd(&self) -> f64 {
        self.rd_scale().powi(2)
    }
}

/// Noise level for a given design rate and Eb/N0.
///
/// The relay hop reuses the symbol energy, so `Eb' = Eb / 2` and
/// `sigma^2 = 1 / (2 R Eb'/N0) = 1 / (R Eb/N0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    rate: f64,
    ebn0: f64,
}

impl NoiseModel {
    pub fn new(rate: f64, ebn0_db: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::param(format!("code rate must lie in (0, 1], got {rate}")));
        }
        if !ebn0_db.is_finite() {
            return Err(Error::param("Eb/N0 must be finite"));
        }
        Ok(NoiseModel {
            rate,
            ebn0: db_to_linear(ebn0_db),
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn ebn0_linear(&self) -> f64 {
        self.ebn0
    }

    pub fn ebn0_db(&self) -> f64 {
        linear_to_db(self.ebn0)
    }

    pub fn sigma2(&self) -> f64 {
        1.0 / (self.rate * self.ebn0)
    }
}

/// Fading coefficients and noise samples for one block of transmitted bits.
///
/// Per bit the draw order is `h_SR, h_SD, h_RD, n_SR, n_SD, n_RD`, so the
/// same RNG stream yields the same channel whatever is later transmitted on
/// it.
#[derive(Debug, Clone, Default)]
pub struct BlockChannel {
    pub h_sr: Vec<f64>,
    pub h_sd: Vec<f64>,
    pub h_rd: Vec<f64>,
    pub n_sr: Vec<f64>,
    pub n_sd: Vec<f64>,
    pub n_rd: Vec<f64>,
}

impl BlockChannel {
    pub fn sample<R: Rng + ?Sized>(
        len: usize,
        geometry: RelayGeometry,
        params: NakagamiParams,
        sigma2: f64,
        rng: &mut R,
    ) -> Self {
        let mut ch = BlockChannel::default();
        ch.resample(len, geometry, params, sigma2, rng);
        ch
    }

    /// Refill in place, reusing allocations.
    pub fn resample<R: Rng + ?Sized>(
        &mut self,
        len: usize,
        geometry: RelayGeometry,
        params: NakagamiParams,
        sigma2: f64,
        rng: &mut R,
    ) {
        let fading = Nakagami::new(params);
        let sigma = sigma2.sqrt();
        for v in [
            &mut self.h_sr,
            &mut self.h_sd,
            &mut self.h_rd,
            &mut self.n_sr,
            &mut self.n_sd,
            &mut self.n_rd,
        ] {
            v.clear();
            v.reserve(len);
        }
        for _ in 0..len {
            self.h_sr.push(fading.sample(rng) * geometry.sr_scale());
            self.h_sd.push(fading.sample(rng));
            self.h_rd.push(fading.sample(rng) * geometry.rd_scale());
            let n: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            self.n_sr.push(sigma * n[0]);
            self.n_sd.push(sigma * n[1]);
            self.n_rd.push(sigma * n[2]);
        }
    }

    pub fn len(&self) -> usize {
        self.h_sd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_sd.is_empty()
    }

    /// Drop the S-R noise (genie relay link).
    pub fn silence_sr_noise(&mut self) {
        self.n_sr.iter_mut().for_each(|n| *n = 0.0);
    }

    /// `r_R1 = h_SR x + n_SR`
    pub fn relay_rx(&self, x: &[f64]) -> Vec<f64> {
        combine(x, &self.h_sr, &self.n_sr)
    }

    /// `r_D1 = h_SD x + n_SD`
    pub fn direct_rx(&self, x: &[f64]) -> Vec<f64> {
        combine(x, &self.h_sd, &self.n_sd)
    }

    /// `r_D2 = h_RD x_hat + n_RD`
    pub fn relayed_rx(&self, x_hat: &[f64]) -> Vec<f64> {
        combine(x_hat, &self.h_rd, &self.n_rd)
    }
}

fn combine(x: &[f64], h: &[f64], n: &[f64]) -> Vec<f64> {
    x.iter().zip(h).zip(n).map(|((x, h), n)| h * x + n).collect()
}

/// Received signals of one block.
#[derive(Debug, Clone)]
pub struct ReceivedSignals {
    pub r_r1: Vec<f64>,
    pub r_d1: Vec<f64>,
    pub r_d2: Vec<f64>,
    pub channel: BlockChannel,
}

/// Send BPSK symbols `x` (source) and `x_hat` (relay) over the three links.
///
/// Only transmitted (non-punctured) symbols should be passed in.
pub fn transmit_links<R: Rng + ?Sized>(
    x: &[f64],
    x_hat: &[f64],
    geometry: RelayGeometry,
    params: NakagamiParams,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<ReceivedSignals> {
    if x.len() != x_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: x_hat.len(),
        });
    }
    let channel = BlockChannel::sample(x.len(), geometry, params, noise.sigma2(), rng);
    Ok(ReceivedSignals {
        r_r1: channel.relay_rx(x),
        r_d1: channel.direct_rx(x),
        r_d2: channel.relayed_rx(x_hat),
        channel,
    })
}

/// Precomputed `2 / sigma^2` LLR scaling.
#[derive(Debug, Clone, Copy)]
pub struct LlrScale {
    factor: f64,
}

impl LlrScale {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::param(format!("noise variance must be positive, got {sigma2}")));
        }
        Ok(LlrScale {
            factor: 2.0 / sigma2,
        })
    }

    /// `2 h r / sigma^2`
    #[inline]
    pub fn single(&self, r: f64, h: f64) -> f64 {
        self.factor * h * r
    }

    /// MRC output `2 (h_SD r_D1 + h_RD r_D2) / sigma^2`.
    #[inline]
    pub fn mrc(&self, r_d1: f64, r_d2: f64, h_sd: f64, h_rd: f64) -> f64 {
        self.factor * (h_sd * r_d1 + h_rd * r_d2)
    }
}

/// Destination LLR after maximum-ratio combining of both time slots.
pub fn mrc_llr(r_d1: f64, r_d2: f64, h_sd: f64, h_rd: f64, sigma2: f64) -> Result<f64> {
    Ok(LlrScale::new(sigma2)?.mrc(r_d1, r_d2, h_sd, h_rd))
}

/// Single-link LLR `2 h r / sigma^2`.
pub fn single_link_llr(r: f64, h: f64, sigma2: f64) -> Result<f64> {
    Ok(LlrScale::new(sigma2)?.single(r, h))
}

/// Variance of a channel LLR with gain `lambda` (a single link's `gamma` or
/// the MRC sum `gamma_SD + gamma_RD`): `4 R P lambda Eb/N0`, zero for a
/// punctured node.
pub fn channel_llr_variance(lambda: f64, rate: f64, ebn0_linear: f64, transmitted: bool) -> f64 {
    if transmitted {
        4.0 * rate * lambda * ebn0_linear
    } else {
        0.0
    }
}
