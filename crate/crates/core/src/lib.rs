pub mod classical_opt;
pub mod cli;
pub mod hqnn;
pub mod optim;
pub mod quenc;
pub mod statevector;
pub mod tensornet;
