//! Tool-augmented agent harness for multi-part physics theory problems:
//! problems and rubrics, the action language, model access, tools, the
//! manager loop, and scoring.

pub mod agent;
pub mod dsl;
pub mod gateway;
pub mod points;
pub mod problem;
pub mod scoring;
pub mod tools;

pub use points::Centipoints;
