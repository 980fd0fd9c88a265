pub mod audit;
pub mod baseline;
pub mod compare;
pub mod crypto;
pub mod dcop;
pub mod engine;
pub mod ordering;
pub mod simnet;
