//! Finite-grid evidence for limit statements.
//!
//! A quantity that should tend to zero is tabulated on an increasing grid.
//! The trend passes when the last conclusive value is at most half the
//! first, or is exactly zero.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrendVerdict {
    Pass,
    Fail,
    Inconclusive,
}

impl TrendVerdict {
    /// Pass only if every part passes; any failure fails.
    pub fn all<I: IntoIterator<Item = TrendVerdict>>(parts: I) -> TrendVerdict {
        let mut out = TrendVerdict::Pass;
        for v in parts {
            match v {
                TrendVerdict::Fail => return TrendVerdict::Fail,
                TrendVerdict::Inconclusive => out = TrendVerdict::Inconclusive,
                TrendVerdict::Pass => {}
            }
        }
        out
    }
}

impl fmt::Display for TrendVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrendVerdict::Pass => "Pass",
            TrendVerdict::Fail => "Fail",
            TrendVerdict::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub at: f64,
    pub value: f64,
    /// Monte Carlo standard error, when the value is estimated.
    pub stderr: Option<f64>,
    pub conclusive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub label: String,
    pub points: Vec<TrendPoint>,
    pub verdict: TrendVerdict,
}

impl TrendReport {
    pub fn new(label: impl Into<String>, points: Vec<TrendPoint>) -> Self {
        let good: Vec<f64> = points.iter().filter(|p| p.conclusive).map(|p| p.value).collect();
        let verdict = match (good.first(), good.last()) {
            (Some(&first), Some(&last)) if good.len() >= 2 => {
                if last == 0.0 || last <= first / 2.0 {
                    TrendVerdict::Pass
                } else {
                    TrendVerdict::Fail
                }
            }
            _ => TrendVerdict::Inconclusive,
        };
        Self {
            label: label.into(),
            points,
            verdict,
        }
    }

    /// Report over exactly known values.
    pub fn exact(label: impl Into<String>, grid: &[f64], values: &[f64]) -> Self {
        let points = grid
            .iter()
            .zip(values)
            .map(|(&at, &value)| TrendPoint {
                at,
                value,
                stderr: None,
                conclusive: value.is_finite(),
            })
            .collect();
        Self::new(label, points)
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}
