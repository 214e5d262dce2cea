//! Density-based clustering for directional data on the unit hypersphere.

pub mod bandwidth;
pub mod classify;
pub mod density;
pub mod error;
pub mod harness;
pub mod hdr;
pub mod kmeans;
pub mod labeling;
pub mod pipeline;
pub mod special;
pub mod sphere;
pub mod tree;

pub use density::{integrate_density, sample_vmf, DensityModel, Sample, VmfParams};
pub use error::{Error, Result};
pub use labeling::{adjusted_rand_index, Labeling};
pub use sphere::{geodesic_distance, geodesic_points, normalize, UnitVector};
