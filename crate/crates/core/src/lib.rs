pub mod error;
pub mod scalars;
pub mod series;
pub mod fock;
pub mod dual;
pub mod deform;
pub mod verify;
pub mod cli;
pub mod suite;
