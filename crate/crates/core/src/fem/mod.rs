//! Reference-element machinery: Lagrange bases, quadrature and dof numbering.

pub mod basis;
pub mod dofmap;
pub mod quadrature;

pub use basis::{node_count, ElementGeometry, ReferenceElement, Tabulation};
pub use dofmap::DofMap;
pub use quadrature::{edge_quadrature, triangle_quadrature, EdgeQuadrature, QuadratureRule, TriangleQuadrature};
