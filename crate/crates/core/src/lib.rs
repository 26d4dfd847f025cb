//! Subjective well-being indices from short social-media posts.
//!
//! The pipeline runs corpus ingestion, keyword-driven training candidate
//! selection, human annotation, aggregated category-proportion estimation,
//! daily index construction and a maximum-likelihood structural equation
//! model relating the index to economic covariates.

pub mod annotation;
pub mod corpus;
pub mod dimension;
pub mod estimator;
pub mod fixtures;
pub mod index;
pub mod rng;
pub mod sem;

pub use dimension::{Category, Dimension, Label};
