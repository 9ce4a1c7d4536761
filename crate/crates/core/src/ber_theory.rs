//! Gaussian-approximation BER of protograph codes over the fading relay
//! channel, for EF and DF relaying.
//!
//! The fading-averaged PEXIT recursion runs for a fixed number of iterations;
//! each node's averaged APP MI is mapped to a BER through the consistent
//! Gaussian LLR it corresponds to (mean = variance / 2).

use std::f64::consts::SQRT_2;

use crate::channel::{NakagamiParams, Protocol, RelayGeometry};
use crate::error::{Error, Result};
use crate::pexit::{
    j_inv_saturating, run_pexit, ChannelVarianceEnsemble, FadingEnsemble, LinkKind, PexitOptions,
};
use crate::protograph::BaseMatrix;

pub const BER_THEORY_CSV_HEADER: &str = "protocol,family,n,m,d,ebn0_db,ber_theory,tmax,Q";

/// BER of a bit whose APP LLR is consistent Gaussian with MI `mi`:
/// `0.5 * erfc(J^-1(mi) / (2 sqrt 2))`. `mi = 1` maps to 0.
pub fn node_ber_from_app_mi(mi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mi) {
        return Err(Error::param(format!("APP MI must lie in [0, 1], got {mi}")));
    }
    if mi == 1.0 {
        return Ok(0.0);
    }
    Ok(0.5 * libm::erfc(j_inv_saturating(mi) / (2.0 * SQRT_2)))
}

/// Combine per-node relay, S-D-only and EF error probabilities:
/// `P_DF = P_SR * P_SD + (1 - P_SR) * P_D`.
pub fn df_node_ber(p_sr: f64, p_sd: f64, p_d: f64) -> f64 {
    p_sr * p_sd + (1.0 - p_sr) * p_d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryOptions {
    /// Fixed number of PEXIT iterations (no early stop).
    pub t_max: usize,
    /// Fading realizations per protograph column.
    pub q: usize,
    pub seed: u64,
    /// Multiplier applied to the S-R power gains. Large values emulate a
    /// perfect relay link.
    pub sr_gain_scale: f64,
}

impl Default for TheoryOptions {
    fn default() -> Self {
        TheoryOptions {
            t_max: 100,
            q: 100_000,
            seed: 1,
            sr_gain_scale: 1.0,
        }
    }
}

impl TheoryOptions {
    fn validate(&self) -> Result<()> {
        if self.t_max == 0 || self.q == 0 {
            return Err(Error::param("T_max and Q must be positive"));
        }
        if !(self.sr_gain_scale.is_finite() && self.sr_gain_scale > 0.0) {
            return Err(Error::param("S-R gain scale must be positive"));
        }
        Ok(())
    }
}

/// One point of a theoretical BER curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalBerPoint {
    pub protocol: Protocol,
    pub m: f64,
    pub d: f64,
    pub ebn0_db: f64,
    /// BER of every protograph column after `iterations` iterations.
    pub node_ber: Vec<f64>,
    /// Mean of `node_ber` over all columns, punctured ones included.
    pub avg_ber: f64,
    /// Mean of `node_ber` over the information columns.
    pub info_ber: f64,
    /// Averaged BER after each iteration `1..=iterations`.
    pub ber_trace: Vec<f64>,
    pub iterations: usize,
    pub q: usize,
}

impl TheoreticalBerPoint {
    pub fn csv_row(&self, base: &BaseMatrix) -> String {
        format!(
            "{},{},{},{},{},{},{:.6e},{},{}",
            self.protocol,
            base.family(),
            base.extension(),
            self.m,
            self.d,
            self.ebn0_db,
            self.avg_ber,
            self.iterations,
            self.q
        )
    }
}

/// Columns whose lifted copies carry the information bits: the last
/// `N - M` columns, where the systematic encoder places them for both
/// AR3A and AR4JA.
pub fn info_columns(base: &BaseMatrix) -> std::ops::Range<usize> {
    base.rows()..base.cols()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn node_bers(app: &[f64]) -> Vec<f64> {
    app.iter()
        .map(|&mi| node_ber_from_app_mi(mi.clamp(0.0, 1.0)).expect("clamped MI"))
        .collect()
}

/// Per-iteration per-node BER of one link ensemble at one Eb/N0.
fn ber_per_iteration(
    base: &BaseMatrix,
    ens: &ChannelVarianceEnsemble,
    ebn0_db: f64,
    t_max: usize,
) -> Vec<Vec<f64>> {
    run_pexit(base, ens, ebn0_db, PexitOptions::fixed(t_max))
        .app_trace
        .iter()
        .map(|app| node_bers(app))
        .collect()
}

fn point_from_trace(
    base: &BaseMatrix,
    protocol: Protocol,
    m: f64,
    d: f64,
    ebn0_db: f64,
    q: usize,
    trace: Vec<Vec<f64>>,
) -> TheoreticalBerPoint {
    let ber_trace = trace.iter().map(|b| mean(b)).collect();
    let node_ber = trace.last().cloned().unwrap_or_default();
    let info_ber = mean(&node_ber[info_columns(base)]);
    TheoreticalBerPoint {
        protocol,
        m,
        d,
        ebn0_db,
        avg_ber: mean(&node_ber),
        info_ber,
        node_ber,
        ber_trace,
        iterations: trace.len(),
        q,
    }
}

fn check_sweep(ebn0_db: &[f64]) -> Result<()> {
    if ebn0_db.is_empty() {
        return Err(Error::param("Eb/N0 list is empty"));
    }
    if ebn0_db.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("Eb/N0 values must be finite"));
    }
    Ok(())
}

/// Link ensembles of one code, fading depth and geometry, drawn once and
/// reused for every Eb/N0 evaluated.
#[derive(Debug, Clone)]
pub struct BerModel<'a> {
    base: &'a BaseMatrix,
    protocol: Protocol,
    m: f64,
    d: f64,
    opts: TheoryOptions,
    mrc: ChannelVarianceEnsemble,
    /// S-R and S-D ensembles, DF only.
    relay: Option<(ChannelVarianceEnsemble, ChannelVarianceEnsemble)>,
}

impl<'a> BerModel<'a> {
    pub fn new(
        protocol: Protocol,
        base: &'a BaseMatrix,
        m: f64,
        d: f64,
        opts: &TheoryOptions,
    ) -> Result<Self> {
        opts.validate()?;
        let fading = FadingEnsemble::sample(
            base.cols(),
            opts.q,
            NakagamiParams::new(m)?,
            RelayGeometry::new(d)?,
            opts.seed,
        )?;
        let mrc = ChannelVarianceEnsemble::from_fading(base, &fading, LinkKind::Mrc)?;
        let relay = match protocol {
            Protocol::Ef => None,
            Protocol::Df => {
                let mut sr =
                    ChannelVarianceEnsemble::from_fading(base, &fading, LinkKind::SourceRelay)?;
                sr.scale_gains(opts.sr_gain_scale);
                let sd = ChannelVarianceEnsemble::from_fading(
                    base,
                    &fading,
                    LinkKind::SourceDestination,
                )?;
                Some((sr, sd))
            }
        };
        Ok(BerModel {
            base,
            protocol,
            m,
            d,
            opts: *opts,
            mrc,
            relay,
        })
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    /// Curve point at `ebn0_db`; for DF also the final per-node components.
    pub fn point_with_components(
        &self,
        ebn0_db: f64,
    ) -> Result<(TheoreticalBerPoint, Option<DfComponents>)> {
        if !ebn0_db.is_finite() {
            return Err(Error::param("Eb/N0 values must be finite"));
        }
        let t_max = self.opts.t_max;
        let t_d = ber_per_iteration(self.base, &self.mrc, ebn0_db, t_max);
        let Some((sr, sd)) = &self.relay else {
            let p = point_from_trace(self.base, self.protocol, self.m, self.d, ebn0_db, self.opts.q, t_d);
            return Ok((p, None));
        };
        let t_sr = ber_per_iteration(self.base, sr, ebn0_db, t_max);
        let t_sd = ber_per_iteration(self.base, sd, ebn0_db, t_max);
        let trace: Vec<Vec<f64>> = t_sr
            .iter()
            .zip(&t_sd)
            .zip(&t_d)
            .map(|((a, b), c)| {
                a.iter()
                    .zip(b)
                    .zip(c)
                    .map(|((&p_sr, &p_sd), &p_d)| df_node_ber(p_sr, p_sd, p_d))
                    .collect()
            })
            .collect();
        let components = DfComponents {
            p_sr: t_sr.last().cloned().unwrap_or_default(),
            p_sd: t_sd.last().cloned().unwrap_or_default(),
            p_d: t_d.last().cloned().unwrap_or_default(),
        };
        let p = point_from_trace(self.base, self.protocol, self.m, self.d, ebn0_db, self.opts.q, trace);
        Ok((p, Some(components)))
    }

    pub fn point(&self, ebn0_db: f64) -> Result<TheoreticalBerPoint> {
        Ok(self.point_with_components(ebn0_db)?.0)
    }

    pub fn curve(&self, ebn0_db: &[f64]) -> Result<Vec<TheoreticalBerPoint>> {
        check_sweep(ebn0_db)?;
        ebn0_db.iter().map(|&db| self.point(db)).collect()
    }

    /// Smallest Eb/N0 in `[lo_db, hi_db]` at which the averaged BER is at
    /// most `target`, located by bisection to within `tol_db`.
    ///
    /// Returns `None` if the BER is still above `target` at `hi_db`, and
    /// `lo_db` if it is already below at `lo_db`.
    pub fn crossing_db(&self, target: f64, lo_db: f64, hi_db: f64, tol_db: f64) -> Result<Option<f64>> {
        if !(tol_db > 0.0 && lo_db < hi_db && target > 0.0) {
            return Err(Error::param("crossing search needs lo < hi, tol > 0, target > 0"));
        }
        let below = |db: f64| -> Result<bool> { Ok(self.point(db)?.avg_ber <= target) };
        if !below(hi_db)? {
            return Ok(None);
        }
        if below(lo_db)? {
            return Ok(Some(lo_db));
        }
        let (mut bad, mut good) = (lo_db, hi_db);
        while good - bad > tol_db {
            let mid = 0.5 * (bad + good);
            if below(mid)? {
                good = mid;
            } else {
                bad = mid;
            }
        }
        Ok(Some(0.5 * (bad + good)))
    }
}

/// Theoretical EF BER curve: MRC of the S-D and R-D copies at the
/// destination. One fading ensemble serves every Eb/N0 point.
pub fn ef_ber_curve(
    base: &BaseMatrix,
    m: f64,
    d: f64,
    ebn0_db: &[f64],
    opts: &TheoryOptions,
) -> Result<Vec<TheoreticalBerPoint>> {
    check_sweep(ebn0_db)?;
    BerModel::new(Protocol::Ef, base, m, d, opts)?.curve(ebn0_db)
}

/// Per-node BER components of the DF combination at one Eb/N0.
#[derive(Debug, Clone, PartialEq)]
pub struct DfComponents {
    pub p_sr: Vec<f64>,
    pub p_sd: Vec<f64>,
    pub p_d: Vec<f64>,
}

/// Theoretical DF BER curve. Relay decoding (S-R link), S-D-only decoding
/// and MRC decoding are analysed on the same fading ensemble as
/// [`ef_ber_curve`] with the same seed, and combined node by node with
/// [`df_node_ber`] after every iteration.
///
/// The combination treats relay bit errors as independent of destination
/// decoding, per node.
pub fn df_ber_curve(
    base: &BaseMatrix,
    m: f64,
    d: f64,
    ebn0_db: &[f64],
    opts: &TheoryOptions,
) -> Result<Vec<TheoreticalBerPoint>> {
    check_sweep(ebn0_db)?;
    BerModel::new(Protocol::Df, base, m, d, opts)?.curve(ebn0_db)
}

/// Either protocol's curve.
pub fn ber_curve(
    protocol: Protocol,
    base: &BaseMatrix,
    m: f64,
    d: f64,
    ebn0_db: &[f64],
    opts: &TheoryOptions,
) -> Result<Vec<TheoreticalBerPoint>> {
    check_sweep(ebn0_db)?;
    BerModel::new(protocol, base, m, d, opts)?.curve(ebn0_db)
}

/// First Eb/N0 at which a curve of `(ebn0_db, ber)` pairs, sorted by Eb/N0,
/// drops to `target`, interpolating linearly in `log10(BER)`.
///
/// Returns `None` if the curve never reaches `target`, or already starts at
/// or below it.
pub fn crossing_db(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    let lt = target.log10();
    curve.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 > target && y1 <= target {
            if y1 <= 0.0 {
                return Some(x1);
            }
            let (l0, l1) = (y0.log10(), y1.log10());
            Some(x0 + (x1 - x0) * (l0 - lt) / (l0 - l1))
        } else {
            None
        }
    })
}
