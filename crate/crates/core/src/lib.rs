pub mod cli;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod kernel;
pub mod lie;
pub mod linalg;
pub mod ode;
pub mod quantization;
pub mod quantum_space;
pub mod spectra;
