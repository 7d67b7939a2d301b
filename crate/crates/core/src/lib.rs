pub mod catalog;
pub mod diagonal;
pub mod error;
pub mod extension;
pub mod matrix;
pub mod product;
pub mod report;
pub mod scenario;
pub mod sequence;
pub mod tolerance;
pub mod words;
