//! Mutual-information transfer analysis of protograph codes over fading
//! relay channels.

mod ensemble;
mod jfun;
mod recursion;
mod threshold;

pub use ensemble::{ChannelVarianceEnsemble, FadingEnsemble, LinkKind};
pub use jfun::{j_fun, j_inv, j_inv_saturating, JTable, MI_CEILING};
pub use recursion::{
    app_mi, pexit_cn_update, pexit_vn_update, run_modified_pexit, run_pexit, MiState, PexitOptions,
    PexitRun, CONVERGENCE_MI,
};
pub use threshold::{bisect, threshold_search, ThresholdOptions, ThresholdResult, THRESHOLD_CSV_HEADER};
