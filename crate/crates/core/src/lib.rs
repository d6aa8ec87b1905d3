//! Fictitious-domain finite elements for the Poisson–Dirichlet problem on
//! level-set geometries.
//!
//! The unknown is sought in product form `u_h = φh w_h` on a structured
//! triangulation of a bounding box, so the Dirichlet condition holds on the
//! discrete zero level set by construction. Coercivity and conditioning on
//! cut meshes are restored by a ghost penalty on cut triangles and their
//! facets.

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod fem;
pub mod levelset;
pub mod linalg;
pub mod mesh;

pub use analysis::{compute_errors, estimated_orders, ErrorReport, ProductSolution};
pub use assembly::{assemble_system, SparseSystem};
pub use error::{PhiFemError, Result};
pub use levelset::{ActiveDomain, AnalyticField, LevelSetField, TriangleStatus};
pub use mesh::{BackgroundMesh, BoundingBox, Point};
