pub mod benders;
pub mod cuts;
pub mod diagram;
pub mod model;
pub mod smwds;
pub mod solver;

#[cfg(test)]
mod testutil;
