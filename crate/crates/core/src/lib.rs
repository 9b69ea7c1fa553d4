pub mod audit;
pub mod dsl;
pub mod extract;
pub mod facts;
pub mod partition;
pub mod report;
pub mod tagdb;
pub mod upg;
