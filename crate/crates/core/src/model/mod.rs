//! Standardisation, univariate F-value selection, and elastic-net regression.

mod elastic_net;
mod select;
mod standardize;

pub use elastic_net::{
    fit_elastic_net, fit_elastic_net_traced, kkt_violations, objective, soft_threshold,
    ElasticNetModel, ElasticNetParams,
};
pub use select::{f_value, f_values, select_top_k, select_top_k_table, SelectorState};
pub use standardize::{apply_standardizer, fit_standardizer, Standardizer};
