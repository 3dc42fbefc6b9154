pub mod benchmark;
pub mod plan;
pub mod scan;
pub mod simulate;
