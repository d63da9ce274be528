use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of measured channels per record.
pub const CHANNELS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    V,
    I,
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "delta")]
    Delta,
    P,
    Q,
}

impl Channel {
    pub const ALL: [Channel; CHANNELS] = [
        Channel::V,
        Channel::I,
        Channel::Theta,
        Channel::Delta,
        Channel::P,
        Channel::Q,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::V => "V",
            Channel::I => "I",
            Channel::Theta => "theta",
            Channel::Delta => "delta",
            Channel::P => "P",
            Channel::Q => "Q",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One timestamped bus measurement. Angles in radians; magnitudes and
/// powers normally in per-unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub timestamp: i64,
    pub v: f64,
    pub i: f64,
    pub theta: f64,
    pub delta: f64,
    pub p: f64,
    pub q: f64,
}

impl MeasurementRecord {
    pub fn from_values(timestamp: i64, values: [f64; CHANNELS]) -> Self {
        let [v, i, theta, delta, p, q] = values;
        Self {
            timestamp,
            v,
            i,
            theta,
            delta,
            p,
            q,
        }
    }

    pub fn values(&self) -> [f64; CHANNELS] {
        [self.v, self.i, self.theta, self.delta, self.p, self.q]
    }

    pub fn get(&self, channel: Channel) -> f64 {
        self.values()[channel.index()]
    }

    pub fn set(&mut self, channel: Channel, value: f64) {
        match channel {
            Channel::V => self.v = value,
            Channel::I => self.i = value,
            Channel::Theta => self.theta = value,
            Channel::Delta => self.delta = value,
            Channel::P => self.p = value,
            Channel::Q => self.q = value,
        }
    }

    /// `P − V·I·cos(θ−δ)`
    pub fn active_residual(&self) -> f64 {
        self.p - self.v * self.i * (self.theta - self.delta).cos()
    }

    /// `Q − V·I·sin(θ−δ)`
    pub fn reactive_residual(&self) -> f64 {
        self.q - self.v * self.i * (self.theta - self.delta).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    pub records: Vec<MeasurementRecord>,
    /// Samples per unit time.
    pub sample_rate: f64,
    pub source: Source,
}

impl MeasurementSeries {
    /// Wraps records, checking that timestamps strictly increase.
    pub fn new(records: Vec<MeasurementRecord>, sample_rate: f64, source: Source) -> Result<Self> {
        if let Some(k) = records.windows(2).position(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(Error::Data(format!(
                "timestamps not strictly increasing at row {} (t={} after t={})",
                k + 1,
                records[k + 1].timestamp,
                records[k].timestamp
            )));
        }
        Ok(Self {
            records,
            sample_rate,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn channel(&self, channel: Channel) -> Vec<f64> {
        self.records.iter().map(|r| r.get(channel)).collect()
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        Self {
            records: self.records[range].to_vec(),
            sample_rate: self.sample_rate,
            source: self.source,
        }
    }
}
