//! Multidimensional modulo-hysteresis: a self-reset sampling model for bandlimited fields on
//! lattices, band-wise fold detection with finite-difference filters, and a line-by-line
//! higher-order-difference baseline for ideal-modulo samples.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); `*64` / `*32` aliases name the
//! concrete instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` also rejects NaN

pub mod encoder;
pub mod error;
pub mod filters;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod recovery;
pub mod scalar;
pub mod usf;

pub use encoder::{
    encode_1d, encode_md, event_active, ideal_modulo, residual_at, residual_field, BandLedger,
    Encode1d, EncodeOptions, EncodeResult, Event1d, FoldEvent, FoldLedger, HysteresisParams,
    Precondition,
};
pub use error::{Error, Result};
pub use filters::{
    apply_psi_bb, apply_psi_bb_at, apply_psi_bm, band_index, boundary_axis, finite_diff, neighbors,
    BandGeometry, BandLines, FiniteDiffKernel,
};
pub use grid::{BoxIter, GridSpec, SampleField};
pub use lattice::{
    diagnostics, eval_signal, nyquist_ok, sample_on_lattice, sinc, BandlimitedSignal, Bandwidth,
    DomainBox, Lattice, SignalDiagnostics,
};
pub use recovery::{
    compute_bounds, detect_folds, propagate_m, reconstruct, score_recovery, BoundReport, Condition,
    ConditionReport, DetectedFold, DetectionConfig, DetectionResult, LevelEstimator,
    ReconstructionResult, Score,
};
pub use scalar::{lit, Real};
pub use usf::{usf_recover_field, usf_recover_line, UsfConfig};

pub type Lattice64 = Lattice<f64>;
pub type Lattice32 = Lattice<f32>;
pub type Bandwidth64 = Bandwidth<f64>;
pub type Bandwidth32 = Bandwidth<f32>;
pub type Signal64 = BandlimitedSignal<f64>;
pub type Signal32 = BandlimitedSignal<f32>;
pub type Field64 = SampleField<f64>;
pub type Field32 = SampleField<f32>;
pub type Params64 = HysteresisParams<f64>;
pub type Params32 = HysteresisParams<f32>;
pub type Ledger64 = FoldLedger<f64>;
pub type Ledger32 = FoldLedger<f32>;
pub type DetectionConfig64 = DetectionConfig<f64>;
pub type DetectionConfig32 = DetectionConfig<f32>;
