//! Match-outcome modelling and starting-eleven selection for football
//! squads.

pub mod analytics;
pub mod domain;
pub mod error;
pub mod features;
pub mod ingestion;
pub mod model;
pub mod optimizer;
pub mod pipeline;
pub mod skills;
pub mod synth;

pub use error::{Error, Result};
