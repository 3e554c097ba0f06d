pub mod acw;
pub mod autonomous;
pub mod descriptor;
mod dop853;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod forcing;
pub mod integrate;
pub mod phi;
pub mod potentials;
pub mod quadrature;
pub mod roots;
