//! Numerical laboratory for composition operators on Hardy-Orlicz and
//! weighted Bergman-Orlicz spaces of the unit ball.

pub mod carleson;
pub mod concave;
pub mod criteria;
pub mod error;
pub mod geometry;
pub mod luxemburg;
pub mod orlicz;
pub mod rng;
pub mod stats;
pub mod symbol;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}
