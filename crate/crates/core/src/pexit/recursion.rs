//! Protograph EXIT recursion, single-realization and fading-averaged.
//!
//! MI arrays are `M x N`, row-major, with entries where `b[i][j] = 0` held
//! at zero and never read.

use rayon::prelude::*;

use super::ensemble::ChannelVarianceEnsemble;
use super::jfun::{j_inv_saturating, JTable};
use crate::channel::db_to_linear;
use crate::protograph::BaseMatrix;

/// APP MI every node must reach for the recursion to count as converged.
pub const CONVERGENCE_MI: f64 = 1.0 - 1e-6;

/// Largest change of any a-priori MI below which the recursion is at a
/// fixed point.
const STALL_DELTA: f64 = 1e-14;

/// Summation block for the average over realizations.
const SUM_BLOCK: usize = 1024;

/// Mutual-information state of the protograph edges after `iteration`
/// iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct MiState {
    pub rows: usize,
    pub cols: usize,
    pub i_av: Vec<f64>,
    pub i_ev: Vec<f64>,
    pub i_ac: Vec<f64>,
    pub i_ec: Vec<f64>,
    pub i_app: Vec<f64>,
    pub iteration: usize,
}

impl MiState {
    pub fn new(base: &BaseMatrix) -> Self {
        let (m, n) = (base.rows(), base.cols());
        MiState {
            rows: m,
            cols: n,
            i_av: vec![0.0; m * n],
            i_ev: vec![0.0; m * n],
            i_ac: vec![0.0; m * n],
            i_ec: vec![0.0; m * n],
            i_app: vec![0.0; n],
            iteration: 0,
        }
    }

    pub fn min_app(&self) -> f64 {
        self.i_app.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `sigma^2 = J^-1(I)^2` for every edge of column `j`, and their
/// multiplicity-weighted sum.
fn column_sigma2(base: &BaseMatrix, i_av: &[f64], j: usize, out: &mut Vec<(usize, f64)>) -> f64 {
    out.clear();
    let n = base.cols();
    let mut total = 0.0;
    for i in 0..base.rows() {
        let b = base.get(i, j);
        if b > 0 {
            let s2 = j_inv_saturating(i_av[i * n + j]).powi(2);
            total += f64::from(b) * s2;
            out.push((i, s2));
        }
    }
    total
}

/// Variable-node update for one channel realization:
/// `I_Ev(i,j) = J(sqrt(sum_s b[s][j] J^-1(I_Av(s,j))^2 - J^-1(I_Av(i,j))^2 + var_ch[j]))`.
pub fn pexit_vn_update(base: &BaseMatrix, i_av: &[f64], var_ch: &[f64]) -> Vec<f64> {
    let table = JTable::global();
    let n = base.cols();
    let mut out = vec![0.0; base.rows() * n];
    let mut sig = Vec::new();
    for j in 0..n {
        let total = column_sigma2(base, i_av, j, &mut sig);
        for &(i, s2) in &sig {
            out[i * n + j] = table.j_of_var((total - s2).max(0.0) + var_ch[j]);
        }
    }
    out
}

/// Check-node update:
/// `I_Ec(i,j) = 1 - J(sqrt(sum_s b[i][s] J^-1(1 - I_Ac(i,s))^2 - J^-1(1 - I_Ac(i,j))^2))`.
pub fn pexit_cn_update(base: &BaseMatrix, i_ac: &[f64]) -> Vec<f64> {
    let table = JTable::global();
    let n = base.cols();
    let mut out = vec![0.0; base.rows() * n];
    for i in 0..base.rows() {
        let mut total = 0.0;
        for j in 0..n {
            let b = base.get(i, j);
            if b > 0 {
                total += f64::from(b) * j_inv_saturating(1.0 - i_ac[i * n + j]).powi(2);
            }
        }
        for j in 0..n {
            if base.get(i, j) > 0 {
                let own = j_inv_saturating(1.0 - i_ac[i * n + j]).powi(2);
                out[i * n + j] = 1.0 - table.j_of_var((total - own).max(0.0));
            }
        }
    }
    out
}

/// A-posteriori MI for one channel realization:
/// `I_app(j) = J(sqrt(sum_s b[s][j] J^-1(I_Av(s,j))^2 + var_ch[j]))`.
pub fn app_mi(base: &BaseMatrix, i_av: &[f64], var_ch: &[f64]) -> Vec<f64> {
    let table = JTable::global();
    let mut sig = Vec::new();
    (0..base.cols())
        .map(|j| table.j_of_var(column_sigma2(base, i_av, j, &mut sig) + var_ch[j]))
        .collect()
}

/// Fading-averaged VN and APP update for one column: extrinsic MI per edge
/// (when `with_edges`) and APP MI are computed for every realization and
/// averaged over `Q`.
fn averaged_column(
    base: &BaseMatrix,
    i_av: &[f64],
    ens: &ChannelVarianceEnsemble,
    ebn0: f64,
    j: usize,
    with_edges: bool,
) -> (Vec<(usize, f64)>, f64) {
    let table = JTable::global();
    let mut sig = Vec::new();
    let total = column_sigma2(base, i_av, j, &mut sig);
    if !with_edges {
        sig.clear();
    }
    let ext: Vec<f64> = sig.iter().map(|&(_, s2)| (total - s2).max(0.0)).collect();
    let scale = ens.variance_scale(j, ebn0);

    if scale == 0.0 {
        let edges = sig
            .iter()
            .zip(&ext)
            .map(|(&(i, _), &e)| (i, table.j_of_var(e)))
            .collect();
        return (edges, table.j_of_var(total));
    }

    let q = ens.q();
    let mut ext_sum = vec![0.0; ext.len()];
    let mut app_sum = 0.0;
    let mut ext_block = vec![0.0; ext.len()];
    for chunk in ens.column_gains(j).chunks(SUM_BLOCK) {
        ext_block.iter_mut().for_each(|v| *v = 0.0);
        let mut app_block = 0.0;
        for &g in chunk {
            let v = scale * g;
            for (acc, &e) in ext_block.iter_mut().zip(&ext) {
                *acc += table.j_of_var(e + v);
            }
            app_block += table.j_of_var(total + v);
        }
        for (s, b) in ext_sum.iter_mut().zip(&ext_block) {
            *s += b;
        }
        app_sum += app_block;
    }
    let inv_q = 1.0 / q as f64;
    let edges = sig
        .iter()
        .zip(&ext_sum)
        .map(|(&(i, _), &s)| (i, (s * inv_q).clamp(0.0, 1.0)))
        .collect();
    (edges, (app_sum * inv_q).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PexitOptions {
    pub max_iter: usize,
    /// Stop once every APP MI reaches [`CONVERGENCE_MI`], or when the state
    /// stops moving. When false exactly `max_iter` iterations run.
    pub early_stop: bool,
    /// Keep the APP MI vector of every iteration.
    pub record_app: bool,
}

impl PexitOptions {
    /// Threshold mode: up to `t_max_p` iterations with early stopping.
    pub fn threshold(t_max_p: usize) -> Self {
        PexitOptions {
            max_iter: t_max_p,
            early_stop: true,
            record_app: false,
        }
    }

    /// BER mode: exactly `t_max` iterations, APP MI recorded per iteration.
    pub fn fixed(t_max: usize) -> Self {
        PexitOptions {
            max_iter: t_max,
            early_stop: false,
            record_app: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PexitRun {
    pub converged: bool,
    pub iterations: usize,
    /// `min_j I_app(j)` after each iteration.
    pub min_app_trace: Vec<f64>,
    /// Full APP MI vectors per iteration, when requested.
    pub app_trace: Vec<Vec<f64>>,
    pub state: MiState,
}

/// Run the fading-averaged recursion at `ebn0_db` with the options' stopping
/// rule.
pub fn run_pexit(
    base: &BaseMatrix,
    ens: &ChannelVarianceEnsemble,
    ebn0_db: f64,
    opts: PexitOptions,
) -> PexitRun {
    let ebn0 = db_to_linear(ebn0_db);
    let n = base.cols();
    let mut state = MiState::new(base);
    let mut min_app_trace = Vec::with_capacity(opts.max_iter);
    let mut app_trace = Vec::new();
    let mut converged = false;

    for t in 1..=opts.max_iter {
        // VN half-iteration, averaged over realizations.
        let columns: Vec<(Vec<(usize, f64)>, f64)> = (0..n)
            .into_par_iter()
            .map(|j| averaged_column(base, &state.i_av, ens, ebn0, j, true))
            .collect();
        for (j, (edges, _)) in columns.iter().enumerate() {
            for &(i, v) in edges {
                state.i_ev[i * n + j] = v;
            }
        }

        // CN half-iteration.
        state.i_ac.copy_from_slice(&state.i_ev);
        state.i_ec = pexit_cn_update(base, &state.i_ac);
        let delta = state
            .i_ec
            .iter()
            .zip(&state.i_av)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        state.i_av.copy_from_slice(&state.i_ec);
        state.iteration = t;

        // APP MI with the refreshed a-priori messages.
        let apps: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| averaged_column(base, &state.i_av, ens, ebn0, j, false).1)
            .collect();
        state.i_app = apps;

        let min_app = state.min_app();
        min_app_trace.push(min_app);
        if opts.record_app {
            app_trace.push(state.i_app.clone());
        }
        if min_app >= CONVERGENCE_MI {
            converged = true;
            if opts.early_stop {
                break;
            }
        }
        if opts.early_stop && delta <= STALL_DELTA {
            break;
        }
    }

    PexitRun {
        converged,
        iterations: state.iteration,
        min_app_trace,
        app_trace,
        state,
    }
}

/// Threshold-mode recursion: up to `t_max_p` iterations, converged iff every
/// APP MI reaches `1 - 1e-6`.
pub fn run_modified_pexit(
    base: &BaseMatrix,
    ens: &ChannelVarianceEnsemble,
    ebn0_db: f64,
    t_max_p: usize,
) -> PexitRun {
    run_pexit(base, ens, ebn0_db, PexitOptions::threshold(t_max_p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{NakagamiParams, RelayGeometry};
    use crate::pexit::{j_fun, FadingEnsemble, LinkKind};
    use crate::protograph::{build_ar3a, build_ar4ja};
    use proptest::prelude::*;

    fn mrc_ensemble(base: &BaseMatrix, m: f64, q: usize, seed: u64) -> ChannelVarianceEnsemble {
        let fading = FadingEnsemble::sample(
            base.cols(),
            q,
            NakagamiParams::new(m).unwrap(),
            RelayGeometry::new(0.4).unwrap(),
            seed,
        )
        .unwrap();
        ChannelVarianceEnsemble::from_fading(base, &fading, LinkKind::Mrc).unwrap()
    }

    fn edges(base: &BaseMatrix) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..base.rows())
            .flat_map(move |i| (0..base.cols()).map(move |j| (i, j)))
            .filter(|&(i, j)| base.get(i, j) > 0)
    }

    #[test]
    fn vn_update_without_information_is_zero() {
        let base = build_ar4ja(1);
        let zeros = vec![0.0; base.rows() * base.cols()];
        let out = pexit_vn_update(&base, &zeros, &vec![0.0; base.cols()]);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vn_update_channel_only() {
        let base = build_ar4ja(1);
        let n = base.cols();
        let zeros = vec![0.0; base.rows() * n];
        let var: Vec<f64> = (0..n).map(|j| 0.5 + j as f64).collect();
        let out = pexit_vn_update(&base, &zeros, &var);
        for (i, j) in edges(&base) {
            let want = j_fun(var[j].sqrt()).unwrap();
            assert!((out[i * n + j] - want).abs() < 1e-8);
        }
    }

    #[test]
    fn vn_update_excludes_own_edge() {
        // Column 3 has a single edge to row 1.
        let base = BaseMatrix::new(
            vec![vec![1, 1, 1, 0], vec![1, 1, 0, 1], vec![1, 0, 1, 1]],
            vec![false; 4],
        )
        .unwrap();
        let var = vec![1.0, 2.0, 3.0, 4.0];
        let mut state = vec![0.0; 12];
        let a = pexit_vn_update(&base, &state, &var)[4 + 3];
        state[4 + 3] = 0.9;
        let b = pexit_vn_update(&base, &state, &var)[4 + 3];
        assert_eq!(a, b);
        assert!((a - j_fun(2.0).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn cn_update_perfect_inputs() {
        let base = build_ar3a(2);
        let ones = vec![1.0; base.rows() * base.cols()];
        let out = pexit_cn_update(&base, &ones);
        for (i, j) in edges(&base) {
            assert!((out[i * base.cols() + j] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cn_update_zero_input_blocks_others() {
        let base = build_ar3a(0);
        let n = base.cols();
        let mut state = vec![0.999; base.rows() * n];
        // Row 0 = [1 2 0 0 0]: zero MI on edge (0,0) silences edge (0,1).
        state[0] = 0.0;
        let out = pexit_cn_update(&base, &state);
        assert!(out[1] < 1e-12);
        assert!(out[0] > 0.9);
    }

    #[test]
    fn cn_degree_two_row_passes_through() {
        let base = BaseMatrix::new(vec![vec![1, 1, 0], vec![0, 1, 1]], vec![false; 3]).unwrap();
        for &ia in &[0.05, 0.2, 0.5, 0.8, 0.95] {
            let state = vec![ia, 0.3, 0.0, 0.0, 0.6, 0.7];
            let out = pexit_cn_update(&base, &state);
            // The J^-1 approximation limits agreement to its round-trip error.
            assert!((out[1] - ia).abs() < 0.01, "{ia}: {}", out[1]);
            assert!((out[0] - 0.3).abs() < 0.01);
        }
    }

    #[test]
    fn app_dominates_extrinsic() {
        let base = build_ar4ja(2);
        let n = base.cols();
        let state: Vec<f64> = (0..base.rows() * n).map(|k| (k % 7) as f64 / 8.0).collect();
        let var: Vec<f64> = (0..n).map(|j| if base.is_punctured(j) { 0.0 } else { 1.5 }).collect();
        let ev = pexit_vn_update(&base, &state, &var);
        let app = app_mi(&base, &state, &var);
        for (i, j) in edges(&base) {
            assert!(app[j] >= ev[i * n + j] - 1e-12);
        }
        assert_eq!(app_mi(&base, &vec![0.0; base.rows() * n], &vec![0.0; n]), vec![0.0; n]);
    }

    #[test]
    fn min_app_is_monotone_in_iterations() {
        let base = build_ar3a(1);
        let ens = mrc_ensemble(&base, 2.0, 500, 3);
        for &db in &[-1.0, 0.0, 0.3, 1.5] {
            let run = run_pexit(&base, &ens, db, PexitOptions::fixed(60));
            assert_eq!(run.min_app_trace.len(), 60);
            for w in run.min_app_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "{db} dB: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn far_above_and_below_threshold() {
        let base = build_ar3a(0);
        let ens = mrc_ensemble(&base, 1.0, 2000, 1);
        assert!(run_modified_pexit(&base, &ens, -1.3 + 3.0, 500).converged);
        assert!(!run_modified_pexit(&base, &ens, -1.3 - 3.0, 500).converged);
    }

    #[test]
    fn ar3a_rate_half_rayleigh_brackets_table_value() {
        let base = build_ar3a(0);
        let ens = mrc_ensemble(&base, 1.0, 10_000, 1);
        assert!(run_modified_pexit(&base, &ens, -1.3, 500).converged);
        assert!(!run_modified_pexit(&base, &ens, -1.4, 500).converged);
    }

    #[test]
    fn independent_of_worker_count() {
        let base = build_ar4ja(1);
        let ens = mrc_ensemble(&base, 3.0, 3000, 5);
        let run_with = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_pexit(&base, &ens, 0.0, PexitOptions::fixed(40)))
        };
        let (a, b) = (run_with(1), run_with(4));
        assert_eq!(a.state, b.state);
        assert_eq!(a.app_trace, b.app_trace);
    }

    #[test]
    fn message_exchange_invariant() {
        let base = build_ar3a(1);
        let ens = mrc_ensemble(&base, 2.0, 200, 2);
        let run = run_pexit(&base, &ens, 0.5, PexitOptions::fixed(5));
        assert_eq!(run.state.i_av, run.state.i_ec);
        assert_eq!(run.state.iteration, 5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn mi_stays_in_unit_interval(
            n in 0usize..3,
            m in 0.5f64..5.0,
            db in -12.0f64..15.0,
            seed in any::<u64>(),
        ) {
            let base = build_ar4ja(n);
            let ens = mrc_ensemble(&base, m, 64, seed);
            let run = run_pexit(&base, &ens, db, PexitOptions::fixed(20));
            let s = &run.state;
            for v in s.i_av.iter().chain(&s.i_ev).chain(&s.i_ac).chain(&s.i_ec).chain(&s.i_app) {
                prop_assert!(v.is_finite() && (0.0..=1.0).contains(v));
            }
        }
    }
}
