pub mod brachistochrone;
pub mod effective3;
pub mod error;
pub mod linalg;
pub mod noise_mc;
pub mod propagator;
pub mod rng;
pub mod speed_search;
pub mod spin_model;

pub use error::{Error, Result};
