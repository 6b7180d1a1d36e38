pub mod bps;
pub mod cli;
pub mod cohring;
pub mod corr;
pub mod error;
mod expr;
pub mod glue;
pub mod linalg;
pub mod numeric;
pub mod poly;
pub mod ratfun;
pub mod series;
