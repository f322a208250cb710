pub mod analyze;
pub mod augment;
pub mod bws;
pub mod compile;
pub mod evaluate;
pub mod extract;
pub mod generate;
