//! Command-line plumbing: file formats, the simulation catalog, JSON exports
//! and the HTTP backend.

pub mod export;
pub mod io;
pub mod scenario;
pub mod serve;
