pub mod heralding;
pub mod jsa;
pub mod multiplex;
pub mod poling;
pub mod purity;
