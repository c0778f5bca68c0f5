//! Elastic curve flows on Riemannian manifolds.

pub mod ambient;
pub mod curve;
pub mod diagnostics;
pub mod discrete;
pub mod energy;
pub mod error;
pub mod flow;
pub mod snapshot;
pub mod vector;
pub mod verify;

pub use ambient::{AmbientKind, AmbientModel, Point, ProfileFunction};
pub use curve::{CurveGeometry, DiscreteCurve, Field, Measure};
pub use energy::{ElasticParams, CURVATURE_FLOOR};
pub use error::{Error, Result};
pub use flow::{EscapePredicate, FlowConfig, FlowSample, FlowState, FlowTrajectory, Outcome, Stepper};
pub use vector::Vector;
