//! Numerical differential geometry on discretized path and loop groups.
//!
//! The crate models based paths and loops in the compact matrix groups
//! SU(n), SO(n) and Sp(n) on a uniform θ-grid, evaluates the named
//! differential forms of loop-group / Chern-Simons 2-gerbe geometry
//! (Maurer-Cartan forms, the central-extension curvature R, the basic
//! gerbe connection data ε and B, the crossed-module form ρ, the
//! 2-gerbe data α, β_A, -CS(A)), and verifies the identities relating
//! them to quantified tolerances.
//!
//! Conventions: differential forms are evaluated in the Kobayashi-Nomizu
//! normalization, i.e. `(α∧β)(X,Y) = ½(α(X)β(Y) − α(Y)β(X))` and the
//! exterior derivative of a k-form carries a `1/(k+1)` factor. The
//! normalized Cartan-Killing pairing is the basic inner product divided
//! by 4π. Tangents to path and loop spaces are always stored in the left
//! representation: the tangent at `p` is `θ ↦ p(θ)·X(θ)` and only the
//! coefficient grid `X` is stored.

pub mod catalog;
pub mod checks;
pub mod error;
pub mod forms;
pub mod gerbe;
pub mod lie;
pub mod pathspace;

pub use error::CoreError;
pub use forms::{
    FaceLevel, FaceMapTable, FormEvaluator, MapRegistry, Point, PointComponent, SmoothMap, Space,
    SpaceFactor, Tangent, TangentComponent, Value, ValueKind,
};
pub use lie::{AlgebraElement, Family, GroupElement, GroupSpec};
pub use pathspace::{GridKind, GridSpec, LoopFamily, FamilyTangent, PathTangent, SampledLoop, SampledPath};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
