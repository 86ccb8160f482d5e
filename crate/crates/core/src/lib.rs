pub mod certificate;
pub mod error;
pub mod geometry;
pub mod group;
pub mod integrate;
pub mod model;
pub mod ode;
pub mod polynomial;
pub mod profile;
pub mod report;
pub mod spectral;

pub use error::{EcsError, Result};
