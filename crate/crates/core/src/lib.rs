pub mod arith;
pub mod driver;
pub mod f4gb;
pub mod monomial;
pub mod poly;
pub mod reconstruct;
pub mod verify;
