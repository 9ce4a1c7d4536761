//! Self-check suite behind the `validate` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::sim::{simulate_point, SimConfig};
use crate::channel::{LlrScale, Nakagami, NakagamiParams, Protocol, RelayGeometry};
use crate::decoder::BpDecoder;
use crate::pexit::{
    j_fun, j_inv, run_pexit, threshold_search, ChannelVarianceEnsemble, FadingEnsemble, LinkKind,
    PexitOptions, ThresholdOptions,
};
use crate::protograph::{build_ar3a, lift, Family};

/// Published EF thresholds (dB) at `d = 0.4`: family, n, m, value.
pub const REFERENCE_THRESHOLDS: [(Family, usize, f64, f64); 4] = [
    (Family::Ar3a, 0, 1.0, -1.345),
    (Family::Ar3a, 3, 2.0, 0.575),
    (Family::Ar4ja, 3, 2.0, 0.722),
    (Family::Ar4ja, 0, 4.0, -1.895),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    /// Fading realizations for the threshold spot checks.
    pub q: usize,
    /// Allowed deviation from [`REFERENCE_THRESHOLDS`].
    pub threshold_tol_db: f64,
    /// Skip the threshold spot checks.
    pub skip_thresholds: bool,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            q: 10_000,
            threshold_tol_db: 0.10,
            skip_thresholds: false,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Run every check; each result reports pass/fail with a short detail.
pub fn run_suite(opts: &ValidateOptions) -> Vec<CheckResult> {
    let mut out = vec![
        check_j_quadrature(),
        check_j_round_trip(),
        check_j_inv_constants(),
        check_nakagami_moments(opts.seed),
        check_llr_consistency(opts.seed),
        check_codec_soundness(opts.seed),
        check_pexit_monotone(opts.seed),
        check_worker_independence(opts.seed),
    ];
    if !opts.skip_thresholds {
        out.extend(check_thresholds(opts));
    }
    out
}

fn check_j_quadrature() -> CheckResult {
    // Independent oracle: fine trapezoid rule on the Gaussian-LLR integral.
    let oracle = |sigma: f64| -> f64 {
        let s2 = sigma * sigma;
        let (lo, hi) = (s2 / 2.0 - 12.0 * sigma, s2 / 2.0 + 12.0 * sigma);
        let n = 40_000;
        let h = (hi - lo) / n as f64;
        let f = |l: f64| {
            let pdf = (-(l - s2 / 2.0).powi(2) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
            pdf * (-l).exp().ln_1p() / std::f64::consts::LN_2
        };
        let mut acc = 0.5 * (f(lo) + f(hi));
        for k in 1..n {
            acc += f(lo + k as f64 * h);
        }
        1.0 - acc * h
    };
    let worst = [0.1, 0.5, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&s| (j_fun(s).unwrap_or(f64::NAN) - oracle(s)).abs())
        .fold(0.0, f64::max);
    CheckResult::new("J quadrature accuracy", worst <= 1e-6, format!("max error {worst:.2e}"))
}

fn check_j_round_trip() -> CheckResult {
    let worst = (1..=99)
        .map(|k| {
            let i = k as f64 / 100.0;
            (j_fun(j_inv(i).unwrap_or(f64::NAN)).unwrap_or(f64::NAN) - i).abs()
        })
        .fold(0.0, f64::max);
    CheckResult::new("J/J^-1 round trip", worst <= 0.01, format!("max |J(J^-1(I)) - I| = {worst:.4}"))
}

fn check_j_inv_constants() -> CheckResult {
    let a = j_inv(0.3).unwrap_or(f64::NAN);
    let b = j_inv(0.5).unwrap_or(f64::NAN);
    let ok = (a - 1.4431).abs() < 5e-5 && (b - 2.0376).abs() < 5e-5;
    CheckResult::new("J^-1 branch values", ok, format!("J^-1(0.3) = {a:.5}, J^-1(0.5) = {b:.5}"))
}

fn check_nakagami_moments(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 200_000;
    let mut ok = true;
    let mut detail = String::new();
    for m in [0.5, 1.0, 2.0, 4.0] {
        let fading = Nakagami::new(NakagamiParams::new(m).unwrap());
        let (mut s2, mut s4) = (0.0, 0.0);
        for _ in 0..n {
            let p = fading.sample(&mut rng).powi(2);
            s2 += p;
            s4 += p * p;
        }
        let (e2, e4) = (s2 / n as f64, s4 / n as f64);
        // E[a^2] = 1 and E[a^4] = 1 + 1/m.
        let good = (e2 - 1.0).abs() < 0.02 && (e4 - (1.0 + 1.0 / m)).abs() < 0.05 * (1.0 + 1.0 / m);
        ok &= good;
        detail.push_str(&format!("m={m}: E[a^2]={e2:.3} E[a^4]={e4:.3}; "));
    }
    // m = 1 is Rayleigh: P(a^2 > 1) = 1/e.
    let fading = Nakagami::new(NakagamiParams::new(1.0).unwrap());
    let tail = (0..n).filter(|_| fading.sample(&mut rng).powi(2) > 1.0).count() as f64 / n as f64;
    ok &= (tail - (-1.0f64).exp()).abs() < 0.005;
    detail.push_str(&format!("Rayleigh P(a^2>1)={tail:.4}"));
    CheckResult::new("Nakagami moments", ok, detail)
}

fn check_llr_consistency(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11);
    let sigma2 = 0.8;
    let scale = LlrScale::new(sigma2).unwrap();
    let n = 200_000;
    let mut ok = true;
    let mut detail = String::new();
    for (h_sd, h_rd) in [(1.0, 0.0), (0.7, 1.3)] {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let n1: f64 = StandardNormal.sample(&mut rng);
            let n2: f64 = StandardNormal.sample(&mut rng);
            let sd = sigma2.sqrt();
            let l = scale.mrc(h_sd + sd * n1, h_rd + sd * n2, h_sd, h_rd);
            s += l;
            s2 += l * l;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        let rel = (mean - var / 2.0).abs() / (var / 2.0);
        ok &= rel < 0.02;
        detail.push_str(&format!("h=({h_sd},{h_rd}): mean={mean:.3} var/2={:.3}; ", var / 2.0));
    }
    CheckResult::new("channel LLR consistency", ok, detail)
}

fn check_codec_soundness(seed: u64) -> CheckResult {
    let code = match lift(&build_ar3a(1), 32, seed) {
        Ok(c) => c,
        Err(e) => return CheckResult::new("encoder/decoder soundness", false, e.to_string()),
    };
    let decoder = BpDecoder::new(code.h());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x22);
    let blocks = 2000;
    let mut bad = 0;
    for _ in 0..blocks {
        let info: Vec<u8> = (0..code.info_len()).map(|_| u8::from(rng.random::<bool>())).collect();
        let word = code.encode(&info).unwrap();
        if !code.h().is_codeword(&word) || code.extract_info(&word) != info {
            bad += 1;
            continue;
        }
        let llr: Vec<f64> = word
            .iter()
            .zip(code.transmit_mask())
            .map(|(&b, &t)| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                if t { 5.8 * (1.0 - 2.0 * f64::from(b)) + 11.6f64.sqrt() * noise } else { 0.0 }
            })
            .collect();
        let dec = decoder.decode(&llr, 50).unwrap();
        if dec.syndrome_ok != code.h().is_codeword(&dec.hard) {
            bad += 1;
        }
    }
    CheckResult::new(
        "encoder/decoder soundness",
        bad == 0,
        format!("{bad} violations in {blocks} blocks"),
    )
}

fn check_pexit_monotone(seed: u64) -> CheckResult {
    let base = build_ar3a(2);
    let ens = FadingEnsemble::sample(
        base.cols(),
        500,
        NakagamiParams::new(2.0).unwrap(),
        RelayGeometry::new(0.4).unwrap(),
        seed,
    )
    .and_then(|f| ChannelVarianceEnsemble::from_fading(&base, &f, LinkKind::Mrc));
    let Ok(ens) = ens else {
        return CheckResult::new("PEXIT MI monotonicity", false, "ensemble construction failed");
    };
    let mut worst = 0.0f64;
    for db in [-1.0, 0.0, 0.5, 2.0] {
        let run = run_pexit(&base, &ens, db, PexitOptions::fixed(80));
        for w in run.min_app_trace.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
    }
    CheckResult::new("PEXIT MI monotonicity", worst <= 1e-12, format!("largest decrease {worst:.2e}"))
}

fn check_worker_independence(seed: u64) -> CheckResult {
    let mut cfg = SimConfig {
        n: 1,
        z: 32,
        protocol: Protocol::Df,
        ebn0_db: vec![1.0],
        min_error_blocks: 20,
        max_blocks: 300,
        max_iter: 30,
        seed,
        workers: 1,
        ..SimConfig::default()
    };
    let run = |cfg: &SimConfig| cfg.build_code().and_then(|c| simulate_point(&c, cfg, 1.0));
    let a = run(&cfg);
    cfg.workers = 3;
    let b = run(&cfg);
    match (a, b) {
        (Ok(a), Ok(b)) => {
            let same = (a.blocks, a.block_errors, a.bit_errors, a.relay_failures)
                == (b.blocks, b.block_errors, b.bit_errors, b.relay_failures);
            CheckResult::new(
                "determinism across worker counts",
                same,
                format!("{} blocks, {} bit errors vs {} blocks, {} bit errors", a.blocks, a.bit_errors, b.blocks, b.bit_errors),
            )
        }
        (a, b) => CheckResult::new("determinism across worker counts", false, format!("{a:?} / {b:?}")),
    }
}

fn check_thresholds(opts: &ValidateOptions) -> Vec<CheckResult> {
    let topts = ThresholdOptions {
        q: opts.q,
        seed: opts.seed,
        ..ThresholdOptions::default()
    };
    REFERENCE_THRESHOLDS
        .iter()
        .map(|&(family, n, m, reference)| {
            let name = format!("threshold {family} n={n} m={m}");
            let base = family.build(n).expect("named family");
            match threshold_search(&base, m, 0.4, &topts) {
                Ok(r) => {
                    let dev = r.threshold_db - reference;
                    CheckResult::new(
                        name,
                        dev.abs() <= opts.threshold_tol_db,
                        format!("{:.3} dB vs {reference:.3} dB (Q={})", r.threshold_db, opts.q),
                    )
                }
                Err(e) => CheckResult::new(name, false, e.to_string()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_checks_pass() {
        let opts = ValidateOptions {
            skip_thresholds: true,
            ..ValidateOptions::default()
        };
        for c in run_suite(&opts) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
