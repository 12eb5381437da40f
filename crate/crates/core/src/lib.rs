//! Predicting whether a locally reported disaster will reach global news
//! coverage within 24 hours.
//!
//! The crate covers the whole batch pipeline: curating local disaster
//! sources, extracting topic, scope, impact, location and rarity features
//! from short reports, labelling reports by distant supervision against
//! wire headlines, and training a linear SVM over the result.

pub mod curation;
pub mod error;
pub mod geo;
pub mod impact;
pub mod labeling;
pub mod linear;
pub mod model;
pub mod numeric;
pub mod pipeline;
pub mod rarity;
pub mod records;
pub mod scope;
pub mod synthetic;
pub mod taxonomy;
pub mod textvec;

pub use error::{Error, Result};
