//! Empirical checks of the tail-class hypotheses.
//!
//! Limits in `x` are approximated by the infimum and supremum over the last
//! half of a dense geometric grid; nothing here certifies class membership,
//! the outputs are evidence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::MarginalSpec;
use crate::mc::{run_replications, Tally};
use crate::stream::{Role, StreamKey};
use crate::trend::{TrendPoint, TrendReport};

/// Sample tails are truncated where `x y` has fewer exceedances than this.
pub const MIN_EXCEEDANCES: usize = 50;
pub const MIN_TAIL_SAMPLES: usize = 1_000_000;
pub const DEFAULT_Y_GRID: [f64; 6] = [1.01, 1.1, 2.0, 4.0, 8.0, 16.0];

/// Sorted sample with its empirical tail.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTail {
    sorted: Vec<f64>,
}

impl EmpiricalTail {
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() < MIN_TAIL_SAMPLES {
            return Err(Error::InsufficientTailData(format!(
                "{} samples, need at least {MIN_TAIL_SAMPLES}",
                samples.len()
            )));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("samples contain NaN"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    /// `count` draws of `marginal` on the diagnostics substreams.
    pub fn simulate(marginal: &MarginalSpec, count: usize, key: &StreamKey) -> Result<Self> {
        marginal.validate()?;
        let mut out = Vec::with_capacity(count);
        for rep in 0..count as u64 {
            out.push(marginal.sample(&mut key.substream(Role::Diagnostics, rep))?);
        }
        Self::from_samples(out)
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Number of points strictly above `x`.
    pub fn exceedances(&self, x: f64) -> usize {
        self.sorted.len() - self.sorted.partition_point(|v| *v <= x)
    }

    pub fn tail(&self, x: f64) -> f64 {
        self.exceedances(x) as f64 / self.sorted.len() as f64
    }

    pub fn median(&self) -> f64 {
        self.sorted[self.sorted.len() / 2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TailSource {
    Closed(MarginalSpec),
    Samples(EmpiricalTail),
}

impl TailSource {
    /// Closed-form tail, or an error for laws that only simulate.
    pub fn closed(marginal: MarginalSpec) -> Result<Self> {
        marginal.validate()?;
        if !marginal.has_closed_form() {
            return Err(Error::NoClosedFormTail(marginal.to_string()));
        }
        Ok(TailSource::Closed(marginal))
    }

    /// A geometric grid over six decades starting at `max(1, median)`.
    pub fn default_x_grid(&self) -> Vec<f64> {
        let median = match self {
            TailSource::Closed(m) => m.inverse(0.5),
            TailSource::Samples(s) => s.median(),
        };
        geometric_grid(median.max(1.0), 6, 1000)
    }
}

/// `per_decade * decades + 1` points from `start` to `start * 10^decades`.
pub fn geometric_grid(start: f64, decades: u32, per_decade: u32) -> Vec<f64> {
    let n = decades * per_decade;
    (0..=n).map(|k| start * 10f64.powf(k as f64 / per_decade as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRatioCurve {
    pub y: f64,
    pub x_grid: Vec<f64>,
    /// `F(xy)/F(x)` per retained grid point; a vanished tail counts as 0.
    pub ratios: Vec<f64>,
    /// Infimum over the last half of the retained grid.
    pub inf_tail: f64,
    /// Supremum over the last half of the retained grid.
    pub sup_tail: f64,
    /// Grid points dropped for lack of exceedances.
    pub truncated: usize,
}

/// Tail ratio curve at a fixed `y > 1`.
pub fn empirical_tail_ratio(source: &TailSource, y: f64, x_grid: &[f64]) -> Result<TailRatioCurve> {
    if !(y > 1.0 && y.is_finite()) {
        return Err(Error::invalid(format!("y must exceed 1, got {y}")));
    }
    if x_grid.is_empty() || x_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("x_grid must be increasing and nonempty"));
    }
    let (kept, ratios): (Vec<f64>, Vec<f64>) = match source {
        TailSource::Closed(m) => x_grid
            .iter()
            .map(|&x| {
                let d = m.tail(x)?;
                Ok((x, if d == 0.0 { 0.0 } else { m.tail(x * y)? / d }))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
        TailSource::Samples(s) => x_grid
            .iter()
            .map_while(|&x| {
                let num = s.exceedances(x * y);
                (num >= MIN_EXCEEDANCES).then(|| (x, num as f64 / s.exceedances(x) as f64))
            })
            .unzip(),
    };
    if kept.len() < 4 {
        return Err(Error::InsufficientTailData(format!(
            "only {} grid points have {MIN_EXCEEDANCES} exceedances at y = {y}",
            kept.len()
        )));
    }
    let tail = &ratios[ratios.len() / 2..];
    let inf_tail = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let sup_tail = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(TailRatioCurve {
        y,
        truncated: x_grid.len() - kept.len(),
        x_grid: kept,
        ratios,
        inf_tail,
        sup_tail,
    })
}

/// Estimated tail indices with the curves they were read from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    /// Read at the largest `y`; infinite when the tail ratio vanishes.
    pub j_plus: f64,
    pub j_minus: f64,
    /// Infimum ratio at the smallest `y`.
    #[serde(rename = "L")]
    pub l: f64,
    pub l_at_y: f64,
    /// Infimum ratio at `y = 2` is positive.
    pub in_d: bool,
    /// Estimated `L >= 0.95`.
    pub in_c: bool,
    pub curves: Vec<TailRatioCurve>,
}

pub fn estimate_matuszewska(source: &TailSource, y_grid: &[f64], x_grid: &[f64]) -> Result<IndexEstimate> {
    if y_grid.is_empty() || y_grid[0] <= 1.0 || y_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("y_grid must be increasing inside (1, inf)"));
    }
    let y_max = *y_grid.last().expect("nonempty");
    if y_max < 16.0 {
        return Err(Error::invalid(format!("largest y must be at least 16, got {y_max}")));
    }
    let mut curves = y_grid
        .iter()
        .map(|&y| empirical_tail_ratio(source, y, x_grid))
        .collect::<Result<Vec<_>>>()?;
    let at_two = match curves.iter().find(|c| c.y == 2.0) {
        Some(c) => c.inf_tail,
        None => {
            let c = empirical_tail_ratio(source, 2.0, x_grid)?;
            let v = c.inf_tail;
            let at = curves.partition_point(|k| k.y < 2.0);
            curves.insert(at, c);
            v
        }
    };
    let last = curves.last().expect("nonempty");
    let ln_y = y_max.ln();
    let j_plus = -last.inf_tail.ln() / ln_y;
    let j_minus = -last.sup_tail.ln() / ln_y;
    let l = curves[0].inf_tail;
    Ok(IndexEstimate {
        j_plus,
        j_minus,
        l,
        l_at_y: curves[0].y,
        in_d: at_two > 0.0,
        in_c: l >= 0.95,
        curves,
    })
}

/// `F(-x) / F(x)` on an increasing grid from two tail functions.
pub fn left_tail_ratio_trend(x_grid: &[f64], left: impl Fn(f64) -> f64, right: impl Fn(f64) -> f64) -> Result<TrendReport> {
    check_increasing(x_grid)?;
    let values: Vec<f64> = x_grid.iter().map(|&x| left(x) / right(x)).collect();
    Ok(TrendReport::exact("F(-x) / F(x)", x_grid, &values))
}

fn check_increasing(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid.iter().any(|x| !(*x > 0.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("grid must be positive, increasing and have two points"));
    }
    Ok(())
}

/// Evidence for `F(-x) = o(F(x))`. Shifted laws are evaluated exactly;
/// net losses `Y - cZ` by conditional Monte Carlo on `samples` draws,
/// `F(-x) = E H((x + Y)/c)` and `F(x) = E G(x + cZ)`.
pub fn check_left_tail_negligible(spec: &MarginalSpec, x_grid: &[f64], samples: u64, key: &StreamKey) -> Result<TrendReport> {
    spec.validate()?;
    check_increasing(x_grid)?;
    match spec {
        MarginalSpec::Shifted { .. } => {
            let left = x_grid.iter().map(|&x| spec.cdf(-x)).collect::<Result<Vec<f64>>>()?;
            let values: Vec<f64> = x_grid.iter().zip(&left).map(|(&x, l)| l / spec.tail_closed(x)).collect();
            Ok(TrendReport::exact("F(-x) / F(x)", x_grid, &values))
        }
        MarginalSpec::NetLossEmpirical { base, companion, c } => {
            if samples < 1000 {
                return Err(Error::invalid(format!("need at least 10^3 samples, got {samples}")));
            }
            let k = x_grid.len();
            let tally = run_replications(
                samples,
                || Tally::new(2 * k),
                || (),
                |rep, _, acc: &mut Tally| {
                    let mut src = key.substream(Role::Diagnostics, rep);
                    let y = base.sample(&mut src)?;
                    let z = companion.sample(&mut src)?;
                    acc.reps += 1;
                    for (j, &x) in x_grid.iter().enumerate() {
                        acc.add(j, companion.tail_closed((x + y) / c));
                        acc.add(k + j, base.tail_closed(x + c * z));
                    }
                    Ok(())
                },
            )?;
            let points = x_grid
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    let (l, r) = (tally.mean(j), tally.mean(k + j));
                    let value = l / r;
                    // Delta method for a ratio of two means on common draws.
                    let rel = (tally.stderr(j) / l).hypot(tally.stderr(k + j) / r);
                    TrendPoint {
                        at: x,
                        value,
                        stderr: Some(if l == 0.0 { 0.0 } else { value * rel }),
                        conclusive: r > 0.0,
                    }
                })
                .collect();
            Ok(TrendReport::new("F(-x) / F(x)", points))
        }
        other => Err(Error::invalid(format!(
            "left-tail check needs a two-sided law (shifted or net_loss), got `{other}`"
        ))),
    }
}

/// `g_U(n) n F(n)` over `n_grid`; passes when it halves from end to end.
pub fn check_growth_condition(g_u: &BTreeMap<u64, f64>, marginal: &MarginalSpec, n_grid: &[u64]) -> Result<TrendReport> {
    marginal.validate()?;
    if !marginal.has_closed_form() {
        return Err(Error::NoClosedFormTail(marginal.to_string()));
    }
    if n_grid.len() < 2 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n_grid must be increasing with two points"));
    }
    let values = n_grid
        .iter()
        .map(|n| {
            let g = g_u
                .get(n)
                .ok_or_else(|| Error::invalid(format!("no g_U value for n = {n}")))?;
            Ok(g * *n as f64 * marginal.tail_closed(*n as f64))
        })
        .collect::<Result<Vec<f64>>>()?;
    let grid: Vec<f64> = n_grid.iter().map(|n| *n as f64).collect();
    Ok(TrendReport::exact("g_U(n) n F(n)", &grid, &values))
}
