//! Monte-Carlo simulation of the coded relay link.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{BlockChannel, LlrScale, NakagamiParams, NoiseModel, Protocol, RelayGeometry};
use crate::decoder::BpDecoder;
use crate::error::{Error, Result};
use crate::protograph::{lift, Family, LiftedCode};

/// Simulation settings for one Eb/N0 sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub family: Family,
    pub n: usize,
    /// Lifting factor.
    pub z: usize,
    /// Seed of the circulant lifting.
    pub lift_seed: u64,
    pub m: f64,
    pub d: f64,
    pub protocol: Protocol,
    pub ebn0_db: Vec<f64>,
    pub max_iter: usize,
    /// Stop a point after this many erroneous blocks ...
    pub min_error_blocks: u64,
    /// ... or after this many blocks, whichever comes first.
    pub max_blocks: u64,
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    /// Replace the S-R link by a noiseless one.
    pub genie_sr: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            family: Family::Ar3a,
            n: 3,
            z: 512,
            lift_seed: 1,
            m: 2.0,
            d: 0.4,
            protocol: Protocol::Ef,
            ebn0_db: vec![1.0],
            max_iter: 100,
            min_error_blocks: 100,
            max_blocks: 100_000,
            seed: 1,
            workers: 0,
            genie_sr: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ebn0_db.is_empty() {
            return Err(Error::param("Eb/N0 sweep is empty"));
        }
        if self.ebn0_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("Eb/N0 values must be finite"));
        }
        if self.min_error_blocks == 0 || self.max_blocks == 0 {
            return Err(Error::param("stop rule counts must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter must be at least 1"));
        }
        if self.z == 0 {
            return Err(Error::param("lifting factor must be positive"));
        }
        if self.family == Family::Custom {
            return Err(Error::param("simulation needs a named code family"));
        }
        NakagamiParams::new(self.m)?;
        RelayGeometry::new(self.d)?;
        Ok(())
    }

    /// Lift the configured code.
    pub fn build_code(&self) -> Result<LiftedCode> {
        self.validate()?;
        let base = self
            .family
            .build(self.n)
            .ok_or_else(|| Error::param("simulation needs a named code family"))?;
        lift(&base, self.z, self.lift_seed)
    }

    /// `key=value` pairs describing the configuration.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let sweep: Vec<String> = self.ebn0_db.iter().map(|x| x.to_string()).collect();
        vec![
            ("protocol", self.protocol.to_string()),
            ("family", self.family.to_string()),
            ("n", self.n.to_string()),
            ("z", self.z.to_string()),
            ("lift-seed", self.lift_seed.to_string()),
            ("m", self.m.to_string()),
            ("d", self.d.to_string()),
            ("ebn0", sweep.join(",")),
            ("max-iter", self.max_iter.to_string()),
            ("min-error-blocks", self.min_error_blocks.to_string()),
            ("max-blocks", self.max_blocks.to_string()),
            ("seed", self.seed.to_string()),
            ("workers", self.workers.to_string()),
            ("genie-sr", self.genie_sr.to_string()),
        ]
    }
}

/// Tallies of one simulated Eb/N0 point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimBerPoint {
    pub ebn0_db: f64,
    pub blocks: u64,
    pub block_errors: u64,
    /// Information bits sent (`blocks * K`).
    pub info_bits: u64,
    pub bit_errors: u64,
    /// Blocks the relay failed to decode (DF).
    pub relay_failures: u64,
    /// Blocks the relay accepted although they were wrong (DF).
    pub relay_undetected: u64,
    /// Destination decoder iterations summed over blocks.
    pub decoder_iterations: u64,
    pub wall_seconds: f64,
}

impl SimBerPoint {
    fn empty(ebn0_db: f64) -> Self {
        SimBerPoint {
            ebn0_db,
            blocks: 0,
            block_errors: 0,
            info_bits: 0,
            bit_errors: 0,
            relay_failures: 0,
            relay_undetected: 0,
            decoder_iterations: 0,
            wall_seconds: 0.0,
        }
    }

    pub fn ber(&self) -> f64 {
        ratio(self.bit_errors, self.info_bits)
    }

    pub fn bler(&self) -> f64 {
        ratio(self.block_errors, self.blocks)
    }

    pub fn relay_failure_rate(&self) -> f64 {
        ratio(self.relay_failures, self.blocks)
    }

    fn add(&mut self, b: &BlockOutcome, k: u64) {
        self.blocks += 1;
        self.info_bits += k;
        self.bit_errors += b.bit_errors;
        self.block_errors += u64::from(b.bit_errors > 0);
        self.relay_failures += u64::from(b.relay_failed);
        self.relay_undetected += u64::from(b.relay_undetected);
        self.decoder_iterations += b.iterations as u64;
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct BlockOutcome {
    bit_errors: u64,
    relay_failed: bool,
    relay_undetected: bool,
    iterations: usize,
}

/// Everything fixed across the blocks of one Eb/N0 point.
struct PointContext<'a> {
    code: &'a LiftedCode,
    decoder: BpDecoder<'a>,
    transmitted: Vec<usize>,
    protocol: Protocol,
    genie_sr: bool,
    params: NakagamiParams,
    geometry: RelayGeometry,
    sigma2: f64,
    scale: LlrScale,
    max_iter: usize,
    seed: u64,
}

impl PointContext<'_> {
    /// Simulate block `index` on its own RNG stream. Per block the stream
    /// yields the information bits first, then the channel, so every
    /// Eb/N0 point and both protocols see the same data and fading.
    fn run_block(&self, index: u64) -> Result<BlockOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);

        let k = self.code.info_len();
        let info: Vec<u8> = (0..k).map(|_| u8::from(rng.random::<bool>())).collect();
        let word = self.code.encode(&info)?;
        let x: Vec<f64> = self.transmitted.iter().map(|&p| bpsk(word[p])).collect();

        let mut ch = BlockChannel::sample(x.len(), self.geometry, self.params, self.sigma2, &mut rng);
        if self.genie_sr {
            ch.silence_sr_noise();
        }
        let full = self.code.block_len();
        let mut outcome = BlockOutcome::default();

        let relay_word = match self.protocol {
            Protocol::Ef => Some(word.clone()),
            Protocol::Df => {
                let r = ch.relay_rx(&x);
                let mut llr = vec![0.0; full];
                for (t, &p) in self.transmitted.iter().enumerate() {
                    llr[p] = self.scale.single(r[t], ch.h_sr[t]);
                }
                let dec = self.decoder.decode(&llr, self.max_iter)?;
                if dec.syndrome_ok {
                    let reencoded = self.code.encode(&self.code.extract_info(&dec.hard))?;
                    outcome.relay_undetected = reencoded != word;
                    Some(reencoded)
                } else {
                    outcome.relay_failed = true;
                    None
                }
            }
        };

        let r_d1 = ch.direct_rx(&x);
        let mut llr = vec![0.0; full];
        match &relay_word {
            Some(rw) => {
                let x_hat: Vec<f64> = self.transmitted.iter().map(|&p| bpsk(rw[p])).collect();
                let r_d2 = ch.relayed_rx(&x_hat);
                for (t, &p) in self.transmitted.iter().enumerate() {
                    llr[p] = self.scale.mrc(r_d1[t], r_d2[t], ch.h_sd[t], ch.h_rd[t]);
                }
            }
            None => {
                for (t, &p) in self.transmitted.iter().enumerate() {
                    llr[p] = self.scale.single(r_d1[t], ch.h_sd[t]);
                }
            }
        }
        let dec = self.decoder.decode(&llr, self.max_iter)?;
        outcome.iterations = dec.iterations;
        outcome.bit_errors = self
            .code
            .info_positions()
            .iter()
            .filter(|&&p| dec.hard[p] != word[p])
            .count() as u64;
        Ok(outcome)
    }
}

#[inline]
fn bpsk(bit: u8) -> f64 {
    1.0 - 2.0 * f64::from(bit)
}

/// Blocks dispatched per parallel round. Results do not depend on it: the
/// stop rule is applied in block order and later blocks are discarded.
const ROUND_BLOCKS: u64 = 32;

/// Simulate one Eb/N0 point with `code` until the stop rule is met.
///
/// Block `b` always uses RNG stream `b` of `config.seed`, so the tallies
/// depend only on the seed, never on the worker count.
pub fn simulate_point(code: &LiftedCode, config: &SimConfig, ebn0_db: f64) -> Result<SimBerPoint> {
    config.validate()?;
    let rate = code.base().rate_f64()?;
    let sigma2 = NoiseModel::new(rate, ebn0_db)?.sigma2();
    let ctx = PointContext {
        code,
        decoder: BpDecoder::new(code.h()),
        transmitted: (0..code.block_len()).filter(|&p| code.transmit_mask()[p]).collect(),
        protocol: config.protocol,
        genie_sr: config.genie_sr,
        params: NakagamiParams::new(config.m)?,
        geometry: RelayGeometry::new(config.d)?,
        sigma2,
        scale: LlrScale::new(sigma2)?,
        max_iter: config.max_iter,
        seed: config.seed,
    };
    let k = code.info_len() as u64;
    let start = Instant::now();
    let run = || -> Result<SimBerPoint> {
        let mut point = SimBerPoint::empty(ebn0_db);
        let mut next = 0u64;
        while next < config.max_blocks {
            let end = (next + ROUND_BLOCKS).min(config.max_blocks);
            let outcomes: Vec<Result<BlockOutcome>> =
                (next..end).into_par_iter().map(|b| ctx.run_block(b)).collect();
            for o in outcomes {
                point.add(&o?, k);
                if point.block_errors >= config.min_error_blocks {
                    return Ok(point);
                }
            }
            next = end;
        }
        Ok(point)
    };
    let mut point = if config.workers == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::param(format!("cannot start {} workers: {e}", config.workers)))?
            .install(run)?
    };
    point.wall_seconds = start.elapsed().as_secs_f64();
    Ok(point)
}

/// Result of a full sweep, with what is needed to reproduce it.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: SimConfig,
    pub code_fingerprint: String,
    pub info_len: usize,
    pub block_len: usize,
    pub transmitted_len: usize,
    pub points: Vec<SimBerPoint>,
}

pub const SIM_CSV_HEADER: &str = "protocol,family,n,z,m,d,ebn0_db,blocks,block_errors,info_bits,bit_errors,ber,bler,relay_failures,relay_failure_rate,relay_undetected,avg_iterations";

impl Experiment {
    /// CSV with a `#`-prefixed reproducibility header. Wall-clock times are
    /// left out so that reruns are byte-identical.
    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        out.push_str("# protorelay simulate\n");
        out.push_str(&format!("# seed={}\n", c.seed));
        out.push_str(&format!(
            "# code={}-n{} z={} N={} K={} transmitted={} sha256={}\n",
            c.family, c.n, c.z, self.block_len, self.info_len, self.transmitted_len, self.code_fingerprint
        ));
        for (key, value) in c.echo() {
            out.push_str(&format!("# {key}={value}\n"));
        }
        out.push_str(SIM_CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{:.6e},{:.6e},{},{:.6e},{},{:.3}\n",
                c.protocol,
                c.family,
                c.n,
                c.z,
                c.m,
                c.d,
                p.ebn0_db,
                p.blocks,
                p.block_errors,
                p.info_bits,
                p.bit_errors,
                p.ber(),
                p.bler(),
                p.relay_failures,
                p.relay_failure_rate(),
                p.relay_undetected,
                ratio(p.decoder_iterations, p.blocks)
            ));
        }
        out
    }
}

/// Lift the code and simulate every point of the sweep in order.
pub fn run_experiment(config: &SimConfig) -> Result<Experiment> {
    let code = config.build_code()?;
    run_experiment_with_code(&code, config)
}

/// [`run_experiment`] on an already lifted code.
pub fn run_experiment_with_code(code: &LiftedCode, config: &SimConfig) -> Result<Experiment> {
    config.validate()?;
    let points = config
        .ebn0_db
        .iter()
        .map(|&db| simulate_point(code, config, db))
        .collect::<Result<Vec<_>>>()?;
    Ok(Experiment {
        config: config.clone(),
        code_fingerprint: code.fingerprint(),
        info_len: code.info_len(),
        block_len: code.block_len(),
        transmitted_len: code.transmitted_len(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(protocol: Protocol) -> SimConfig {
        SimConfig {
            n: 1,
            z: 32,
            protocol,
            ebn0_db: vec![0.0, 1.0, 2.0],
            max_iter: 40,
            min_error_blocks: 15,
            max_blocks: 400,
            seed: 11,
            ..SimConfig::default()
        }
    }

    fn tallies(p: &SimBerPoint) -> (u64, u64, u64, u64, u64) {
        (p.blocks, p.block_errors, p.bit_errors, p.info_bits, p.decoder_iterations)
    }

    #[test]
    fn genie_df_matches_ef_exactly() {
        let ef = run_experiment(&small(Protocol::Ef)).unwrap();
        let df = run_experiment(&SimConfig {
            genie_sr: true,
            ..small(Protocol::Df)
        })
        .unwrap();
        for (a, b) in ef.points.iter().zip(&df.points) {
            assert_eq!(tallies(a), tallies(b));
            assert_eq!(b.relay_failures, 0);
            assert_eq!(b.relay_undetected, 0);
        }
    }

    #[test]
    fn reruns_give_identical_csv() {
        let cfg = small(Protocol::Df);
        let a = run_experiment(&cfg).unwrap().to_csv();
        let b = run_experiment(&cfg).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.contains("# seed=11\n"));
        assert!(a.contains("sha256="));
        let rows: Vec<&str> = a.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], SIM_CSV_HEADER);
        assert_eq!(rows.len(), 4);
        for r in &rows[1..] {
            assert_eq!(r.split(',').count(), SIM_CSV_HEADER.split(',').count());
        }
    }

    #[test]
    fn worker_count_does_not_change_tallies() {
        let cfg = small(Protocol::Df);
        let code = cfg.build_code().unwrap();
        let runs: Vec<Vec<SimBerPoint>> = [1, 2, 5]
            .iter()
            .map(|&w| {
                run_experiment_with_code(&code, &SimConfig { workers: w, ..cfg.clone() })
                    .unwrap()
                    .points
            })
            .collect();
        for r in &runs[1..] {
            for (a, b) in runs[0].iter().zip(r) {
                assert_eq!(tallies(a), tallies(b));
                assert_eq!(a.relay_failures, b.relay_failures);
            }
        }
    }

    #[test]
    fn conservation_and_stop_rule() {
        let cfg = small(Protocol::Df);
        let exp = run_experiment(&cfg).unwrap();
        for p in &exp.points {
            assert_eq!(p.info_bits, p.blocks * exp.info_len as u64);
            assert!(p.block_errors >= cfg.min_error_blocks || p.blocks == cfg.max_blocks);
            assert!(p.block_errors <= cfg.min_error_blocks);
            assert!((0.0..=1.0).contains(&p.relay_failure_rate()));
            assert!(p.bit_errors >= p.block_errors);
        }
    }

    #[test]
    fn relay_failures_fall_with_snr() {
        let cfg = SimConfig {
            ebn0_db: vec![-1.0, 0.0, 1.0, 2.0],
            min_error_blocks: u64::MAX,
            max_blocks: 200,
            ..small(Protocol::Df)
        };
        let exp = run_experiment(&cfg).unwrap();
        for w in exp.points.windows(2) {
            assert!(w[1].relay_failures <= w[0].relay_failures);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let ok = small(Protocol::Ef);
        let bad = [
            SimConfig { ebn0_db: vec![], ..ok.clone() },
            SimConfig { min_error_blocks: 0, ..ok.clone() },
            SimConfig { max_blocks: 0, ..ok.clone() },
            SimConfig { d: 1.0, ..ok.clone() },
            SimConfig { m: 0.2, ..ok.clone() },
            SimConfig { max_iter: 0, ..ok.clone() },
            SimConfig { family: Family::Custom, ..ok.clone() },
        ];
        for cfg in bad {
            assert!(run_experiment(&cfg).is_err(), "{cfg:?}");
        }
    }
}
