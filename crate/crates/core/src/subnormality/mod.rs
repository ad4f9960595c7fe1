//! Families of probability measures, the consistency condition, the product
//! extension and certification of subnormality.

pub mod cc;
pub mod certify;
pub mod extension;
pub mod family;
pub mod solver;
