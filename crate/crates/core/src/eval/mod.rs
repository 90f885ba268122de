//! Regression metrics and significance testing across run distributions.

mod anova;
mod metrics;
mod quadrature;
mod tukey;

pub use anova::{anova_oneway, AnovaResult};
pub use metrics::{ccc, ccc_by_severity, pearson, r2, rmse, MetricReport};
pub use quadrature::GaussLegendre;
pub use tukey::{
    normal_cdf, studentized_range_cdf, tukey_hsd, PairwiseComparison, SignificanceReport,
    StudentizedRange,
};
