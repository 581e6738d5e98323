//! Thermodynamic-formalism toolkit for non-uniformly expanding circle maps.
//!
//! The crate estimates topological pressure on collections of orbit
//! segments, splits segments into a good part with uniform backward
//! contraction and a bad suffix, glues good segments into shadowing orbits,
//! and checks Bowen-type regularity on the natural extension and on an
//! affine solenoid attractor. A discretized transfer operator provides an
//! independent route to the pressure and the equilibrium state.
//!
//! All numerics are generic over [`Real`] (implemented for `f32` and `f64`);
//! the `*F64` / `*F32` aliases below fix the scalar for everyday use.

// `!(x > 0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomposition;
pub mod error;
pub mod extension;
pub mod maps;
pub mod orbit;
pub mod pressure;
pub mod scalar;
pub mod solenoid;
pub mod specification;
pub mod transfer;

pub use error::{Error, Result};
pub use scalar::Real;

pub use decomposition::{Classification, Decomposition, DecompositionConfig, ObstructionSample};
pub use extension::{BowenReport, BranchPolicy, ExtPoint, ExtPotential, ExtensionConfig, LiftMode};
pub use maps::{HolderData, MapKind, MapSystem, Potential, StateSpace};
pub use orbit::{Collection, OrbitSegment};
pub use pressure::{CtReport, GapReport, PressureEstimate};
pub use solenoid::{AttractorPoint, SolenoidSystem, TorusPotential};
pub use specification::{ExtGluingPlan, GluingPlan};
pub use transfer::{EigenData, OperatorGrid};

pub type MapSystemF64 = MapSystem<f64>;
pub type MapSystemF32 = MapSystem<f32>;
pub type PotentialF64 = Potential<f64>;
pub type PotentialF32 = Potential<f32>;
pub type CollectionF64 = Collection<f64>;
pub type DecompositionConfigF64 = DecompositionConfig<f64>;
pub type PressureEstimateF64 = PressureEstimate<f64>;
pub type PressureEstimateF32 = PressureEstimate<f32>;
pub type GapReportF64 = GapReport<f64>;
pub type GluingPlanF64 = GluingPlan<f64>;
pub type ExtPointF64 = ExtPoint<f64>;
pub type ExtensionConfigF64 = ExtensionConfig<f64>;
pub type EigenDataF64 = EigenData<f64>;
pub type EigenDataF32 = EigenData<f32>;
pub type SolenoidSystemF64 = SolenoidSystem<f64>;
