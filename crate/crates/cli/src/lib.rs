//! Command-line front end for the `totalcost` solvers.

pub mod bench;
pub mod modelfile;
pub mod scenarios;
pub mod solve;
pub mod tracefile;
