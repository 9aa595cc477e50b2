//! Unit handling, number formatting and the run manifest.

use clap::ValueEnum;
use dispersionlab::numkit::NATS_PER_BIT;
use serde::{Deserialize, Serialize};

use crate::commands::Resolved;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Bits,
    Nats,
}

impl Units {
    pub fn label(self) -> &'static str {
        match self {
            Units::Bits => "bits",
            Units::Nats => "nats",
        }
    }

    /// Converts an information quantity from nats.
    pub fn scale(self, x: f64) -> f64 {
        match self {
            Units::Bits => x / NATS_PER_BIT,
            Units::Nats => x,
        }
    }

    /// Converts a variance of information from nats squared.
    pub fn scale_var(self, v: f64) -> f64 {
        match self {
            Units::Bits => v / (NATS_PER_BIT * NATS_PER_BIT),
            Units::Nats => v,
        }
    }

    pub fn to_nats(self, x: f64) -> f64 {
        match self {
            Units::Bits => x * NATS_PER_BIT,
            Units::Nats => x,
        }
    }
}

/// Twelve significant digits, plain notation for moderate magnitudes.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

/// CSV text: `#` comment lines, a header row and data rows, LF endings.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(comments: &[String], header: &[&str]) -> Self {
        let mut text = String::new();
        for c in comments {
            text.push_str("# ");
            text.push_str(c);
            text.push('\n');
        }
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Everything needed to regenerate an output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub toolkit_version: String,
    pub seed: Option<u64>,
    pub output: String,
    pub duration_secs: f64,
    pub config: Resolved,
}
