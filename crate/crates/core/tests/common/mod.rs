#![allow(dead_code)]

pub mod corpus;
pub mod dataset;
pub mod oracle;
pub mod soak;
pub mod training;
