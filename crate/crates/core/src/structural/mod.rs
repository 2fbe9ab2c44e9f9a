//! Structural component models: trend, seasonal, and stochastic-cycle
//! blocks assembled into a state-space form, fitted by maximum likelihood
//! (EM warm-up plus simplex refinement), and compared by AIC/BIC.

mod blocks;
mod diagnostics;
mod em;
mod fit;
mod select;
mod spec;

pub use blocks::{
    build_ar_block, build_cycle_block, build_seasonal_block, build_trend_block, assemble_model,
    Block, ComponentKind, ComponentLayout, ModelLayout, StructuralModel,
};
pub use diagnostics::{jarque_bera, ljung_box, ResidualDiagnostics};
pub use em::{em_variances, EmOutcome};
pub use fit::{fit_mle, ComponentPath, DecompositionResult, FitConfig};
pub use select::{select_model, Criterion, RankedFit, SelectionOutcome};
pub use spec::{
    ArSpec, ArValues, ComponentSpec, ComponentValues, CycleSpec, CycleValues, Param,
    SeasonalSpec, SeasonalValues, SeasonalVariant, TrendOrder, TrendSpec, TrendValues,
};
