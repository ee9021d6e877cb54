pub mod engine;
pub mod evalharness;
pub mod extraction;
pub mod grpo;
pub mod lang;
pub mod scoring;
pub mod service;
