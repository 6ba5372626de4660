//! The iterated gain-based stochastic filter bank: per-mixand prediction,
//! square-root zeroth update, ADP-scheduled iterated-gain updates, mixand
//! weight recursion and the bank estimate.

mod bank;
mod ops;
mod run;
mod schedule;

pub use bank::{
    bank_estimate, igsf_bank_step, init_bank, reweight, update_mixand, weight_update,
    zeroth_bank_step, BankConfig, FilterBank, IterationForm, Mixand, MixandInit, MixandUpdate,
    StepReport,
};
pub use ops::{
    anomalies_iter, gain_iter, gain_iter_regularized, gain_sqrt, gain_zeroth, mapped_anomaly,
    measurement_anomaly_pred, mixand_log_likelihood, prediction_anomaly, sample_mean,
    spread_correction, update_iter, update_zeroth, EpsilonMode,
};
pub use run::{
    mixand_streams, run_filter, IgsfBank, MixtureSummary, SequentialFilter, SingleIgsf, Trajectory,
    ZerothBank, IGSF_FAMILY,
};
pub use schedule::{adp_value, AdpSchedule, ScheduleKind};
