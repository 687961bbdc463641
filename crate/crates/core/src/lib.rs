//! Flags, adapted frames, Popp extensions and distortion quantities for
//! subRiemannian manifolds given by polynomial vector fields on `ℝⁿ`.
//!
//! Everything is evaluated at rational points. Brackets, flags, structure
//! constants and the inverse Popp blocks are exact; eigenvalues and densities
//! are `f64`.

pub mod adapted;
pub mod catalog;
pub mod distortion;
pub mod error;
pub mod exactalg;
pub mod maps;
pub mod popp;
pub mod random;
pub mod srmanifold;

pub use adapted::{build_adapted_frame, structure_constants, AdaptedFrame, StructureConstants};
pub use distortion::{analyze_pair, step2_refined_bounds, verify_bounds, BoundCheck, BoundReport, DistortionReport};
pub use error::{Error, ParseError, Result};
pub use exactalg::{ExactMatrix, FloatMatrix, Polynomial, Rational};
pub use maps::{
    check_theorem_relations, contact_defect, heisenberg_dairbekov, popp_pullback_check, pullback_metric, pushforward, qr_constants,
    MapSpec, QRReport,
};
pub use popp::{popp_density, popp_extension, verify_frame_law, LocalStructure, PoppExtension};
pub use srmanifold::{check_equiregular, compute_flag, lie_bracket, BracketWord, FlagReport, ManifoldSpec, VectorField};
