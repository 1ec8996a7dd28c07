pub mod grid;
pub mod pf;
pub mod io;
pub mod assets;
pub mod scenario;
pub mod nn;
pub mod surrogate;
pub mod plot;
pub mod repro;
pub mod cli;
