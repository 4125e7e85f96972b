//! Dispatch of validated scenarios to the estimators.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ConditionCheck, ScenarioConfig, ScenarioKind, DEFAULT_SAMPLES};
use crate::counting::{check_counting_conditions, random_sum_entry, random_sum_ratio_scan, ConditionReport, LambdaCurve, RandomSumScanConfig};
use crate::dependence::{estimate_dominating_coefficients, DependenceSpec, DominatingEstimate};
use crate::deviation::{regime_of, uniform_ratio_scan, Method, RatioEntry, RatioReport, RatioScanConfig, TailEstimate, Verdict};
use crate::diagnostics::{check_growth_condition, check_left_tail_negligible, estimate_matuszewska, EmpiricalTail, IndexEstimate, TailSource};
use crate::error::{Error, Result};
use crate::marginals::{MarginalSpec, TailIndices};
use crate::risk::{check_random_time_condition, expected_lambda, reinsurance_tail_scan, ruin_scan, ReinsuranceReport, ReinsuranceScanConfig, RuinReport, TauSpec};
use crate::stream::StreamKey;
use crate::trend::{TrendReport, TrendVerdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinScenario {
    /// One run per horizon.
    pub runs: Vec<RuinReport>,
    /// `psi_hat / (lambda G(x))` for every run, judged like a ratio scan.
    pub ratios: RatioReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub marginal: MarginalSpec,
    /// Number of simulated points, or `None` for the closed-form tail.
    pub sample_points: Option<u64>,
    pub estimated: IndexEstimate,
    pub theoretical: Option<TailIndices>,
    pub left_tail: Option<TrendReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "report", rename_all = "snake_case")]
pub enum ConditionOutcome {
    Counting(ConditionReport),
    Trend(TrendReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioReport {
    DeviationScan { report: RatioReport },
    RandomSumScan { report: RatioReport, lambda: LambdaCurve },
    ReinsuranceScan { report: ReinsuranceReport },
    Ruin(RuinScenario),
    RandomTimeRuin(RuinScenario),
    Diagnostics(DiagnosticsReport),
    DominatingEstimate { estimates: Vec<DominatingEstimate> },
    ConditionCheck { check: ConditionCheck, outcome: ConditionOutcome },
}

impl ScenarioReport {
    pub fn verdict(&self) -> String {
        match self {
            ScenarioReport::DeviationScan { report } | ScenarioReport::RandomSumScan { report, .. } => report.verdict.to_string(),
            ScenarioReport::ReinsuranceScan { report } => report.report.verdict.to_string(),
            ScenarioReport::Ruin(r) | ScenarioReport::RandomTimeRuin(r) => {
                if r.runs.iter().any(|run| run.sandwich_violations > 0) {
                    Verdict::SandwichFail.to_string()
                } else {
                    r.ratios.verdict.to_string()
                }
            }
            ScenarioReport::Diagnostics(d) => diagnostics_verdict(d).to_string(),
            ScenarioReport::DominatingEstimate { estimates } => dominating_verdict(estimates).to_string(),
            ScenarioReport::ConditionCheck { outcome, .. } => match outcome {
                ConditionOutcome::Counting(c) => TrendVerdict::all([c.concentration_verdict, c.moment_verdict]).to_string(),
                ConditionOutcome::Trend(t) => t.verdict.to_string(),
            },
        }
    }
}

/// Estimated class membership agrees with the theoretical one, and the left
/// tail (when checked) is negligible.
fn diagnostics_verdict(d: &DiagnosticsReport) -> TrendVerdict {
    let class = match &d.theoretical {
        Some(t) if t.in_d == d.estimated.in_d && t.in_c == d.estimated.in_c => TrendVerdict::Pass,
        Some(_) => TrendVerdict::Fail,
        None => TrendVerdict::Inconclusive,
    };
    TrendVerdict::all([class].into_iter().chain(d.left_tail.as_ref().map(|t| t.verdict)))
}

/// Certified coefficients must cover the estimates within 3 standard
/// errors; without a certificate only detected growth is conclusive.
fn dominating_verdict(estimates: &[DominatingEstimate]) -> TrendVerdict {
    TrendVerdict::all(estimates.iter().map(|e| match e.certified {
        _ if e.growth_detected => TrendVerdict::Fail,
        Some((gu, gl)) => {
            let slack = 3.0 * e.stderr_max;
            if e.gu_hat <= gu + slack && e.gl_hat <= gl + slack {
                TrendVerdict::Pass
            } else {
                TrendVerdict::Fail
            }
        }
        None => TrendVerdict::Inconclusive,
    }))
}

/// Outcome of one scenario; errors are kept, not propagated.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub config: ScenarioConfig,
    pub result: std::result::Result<ScenarioReport, String>,
    pub wall_seconds: f64,
}

impl ScenarioOutcome {
    pub fn verdict(&self) -> String {
        match &self.result {
            Ok(r) => r.verdict(),
            Err(_) => "Error".to_string(),
        }
    }
}

fn need<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::invalid(format!("scenario field `{field}` is missing")))
}

/// Runs one scenario on the current rayon pool.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let key = StreamKey::new(cfg.seed, &cfg.id);
    let indep = DependenceSpec::independent();
    let dep = cfg.dependence.as_ref().unwrap_or(&indep);
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let tolerances = cfg.tolerances.unwrap_or_default();
    let gamma = cfg.gamma.unwrap_or(1.0);
    let lambda_reps = cfg.lambda_replications.unwrap_or(crate::counting::DEFAULT_LAMBDA_REPLICATIONS);
    let multipliers = || need(&cfg.x_multipliers, "x_multipliers").cloned();
    Ok(match cfg.kind {
        ScenarioKind::DeviationScan => {
            let config = RatioScanConfig {
                gamma,
                n_list: need(&cfg.n_list, "n_list")?.clone(),
                x_multipliers: multipliers()?,
                samples,
                method: cfg.method.unwrap_or(Method::CrudeMc),
                tolerances,
            };
            ScenarioReport::DeviationScan {
                report: uniform_ratio_scan(&config, need(&cfg.marginal, "marginal")?, dep, &key)?,
            }
        }
        ScenarioKind::RandomSumScan => {
            let config = RandomSumScanConfig {
                gamma,
                t_list: need(&cfg.t_list, "t_list")?.clone(),
                x_multipliers: multipliers()?,
                samples,
                lambda_replications: lambda_reps,
                tolerances,
            };
            let (report, lambda) = random_sum_ratio_scan(need(&cfg.counting, "counting")?, need(&cfg.marginal, "marginal")?, dep, &config, &key)?;
            ScenarioReport::RandomSumScan { report, lambda }
        }
        ScenarioKind::ReinsuranceScan => {
            let config = ReinsuranceScanConfig {
                gamma,
                t_list: need(&cfg.t_list, "t_list")?.clone(),
                x_multipliers: multipliers()?,
                samples,
                lambda_replications: lambda_reps,
                tolerances,
            };
            let (report, _) = reinsurance_tail_scan(need(&cfg.risk, "risk")?, *need(&cfg.functional, "functional")?, &config, &key)?;
            ScenarioReport::ReinsuranceScan { report }
        }
        ScenarioKind::Ruin => {
            let taus: Vec<TauSpec> = need(&cfg.t_list, "t_list")?.iter().map(|&t| TauSpec::Fixed { t }).collect();
            ScenarioReport::Ruin(ruin_scenario(cfg, &taus, samples, lambda_reps, gamma, &key)?)
        }
        ScenarioKind::RandomTimeRuin => {
            let tau = need(&cfg.tau, "tau")?.clone();
            ScenarioReport::RandomTimeRuin(ruin_scenario(cfg, &[tau], samples, lambda_reps, gamma, &key)?)
        }
        ScenarioKind::Diagnostics => ScenarioReport::Diagnostics(diagnostics(cfg, &key)?),
        ScenarioKind::DominatingEstimate => {
            let marginal = need(&cfg.marginal, "marginal")?;
            let xs = need(&cfg.x_list, "x_list")?;
            let estimates = need(&cfg.n_list, "n_list")?
                .iter()
                .map(|&n| {
                    let grid: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x; n as usize]).collect();
                    estimate_dominating_coefficients(dep, marginal, n as usize, &grid, samples, &key)
                })
                .collect::<Result<Vec<_>>>()?;
            ScenarioReport::DominatingEstimate { estimates }
        }
        ScenarioKind::ConditionCheck => {
            let check = *need(&cfg.check, "check")?;
            let outcome = match check {
                ConditionCheck::Counting => ConditionOutcome::Counting(check_counting_conditions(
                    need(&cfg.counting, "counting")?,
                    need(&cfg.t_list, "t_list")?,
                    need(&cfg.q_exponents, "q_exponents")?,
                    *need(&cfg.delta, "delta")?,
                    samples,
                    lambda_reps,
                    &key,
                )?),
                ConditionCheck::RandomTime => ConditionOutcome::Trend(check_random_time_condition(
                    need(&cfg.risk, "risk")?,
                    need(&cfg.tau, "tau")?,
                    need(&cfg.x_list, "x_list")?,
                    samples,
                    &key,
                )?),
                ConditionCheck::LeftTail => ConditionOutcome::Trend(check_left_tail_negligible(
                    need(&cfg.marginal, "marginal")?,
                    need(&cfg.x_list, "x_list")?,
                    samples,
                    &key,
                )?),
                ConditionCheck::Growth => {
                    let n_list = need(&cfg.n_list, "n_list")?;
                    let mut g_u = BTreeMap::new();
                    for &n in n_list {
                        let (gu, _) = dep.certified(n as usize).ok_or_else(|| {
                            Error::PreconditionViolated(format!("`{dep}` has no certified g_U at n = {n}"))
                        })?;
                        g_u.insert(n, gu);
                    }
                    ConditionOutcome::Trend(check_growth_condition(&g_u, need(&cfg.marginal, "marginal")?, n_list)?)
                }
            };
            ScenarioReport::ConditionCheck { check, outcome }
        }
    })
}

fn ruin_scenario(cfg: &ScenarioConfig, taus: &[TauSpec], samples: u64, lambda_reps: u64, gamma: f64, key: &StreamKey) -> Result<RuinScenario> {
    let model = need(&cfg.risk, "risk")?;
    let mut runs = Vec::new();
    let mut entries = Vec::new();
    for tau in taus {
        let xs = match &cfg.x_list {
            Some(xs) => xs.clone(),
            None => {
                let lambda = expected_lambda(model, tau, samples, lambda_reps, key)?.mean;
                need(&cfg.x_multipliers, "x_multipliers")?.iter().map(|m| m * gamma * lambda).collect()
            }
        };
        let run = ruin_scan(model, &xs, tau, samples, lambda_reps, key)?;
        for e in &run.estimates {
            let est = TailEstimate {
                p_hat: e.psi_hat,
                stderr: e.stderr,
                samples: e.samples,
                method: Method::CrudeMc,
                hits: e.hits,
            };
            let tail = model.claim.tail_closed(e.x);
            entries.push(match tau {
                TauSpec::Fixed { t } => random_sum_entry(*t, e.lambda, e.x, est, tail),
                _ => RatioEntry::new(None, None, e.lambda, e.x, est, tail),
            });
        }
        runs.push(run);
    }
    let ratios = RatioReport::assemble(entries, &model.claim, regime_of(&model.claim)?, cfg.tolerances.unwrap_or_default())?;
    Ok(RuinScenario { runs, ratios })
}

fn diagnostics(cfg: &ScenarioConfig, key: &StreamKey) -> Result<DiagnosticsReport> {
    let marginal = need(&cfg.marginal, "marginal")?;
    let source = match cfg.samples {
        Some(n) => TailSource::Samples(EmpiricalTail::simulate(marginal, n as usize, key)?),
        None => TailSource::closed(marginal.clone())?,
    };
    let y_grid = need(&cfg.y_grid, "y_grid")?;
    let estimated = estimate_matuszewska(&source, y_grid, &source.default_x_grid())?;
    let two_sided = matches!(marginal, MarginalSpec::Shifted { .. } | MarginalSpec::NetLossEmpirical { .. });
    let left_tail = match (&cfg.x_list, two_sided) {
        (Some(xs), true) => Some(check_left_tail_negligible(marginal, xs, cfg.samples.unwrap_or(DEFAULT_SAMPLES), key)?),
        _ => None,
    };
    Ok(DiagnosticsReport {
        marginal: marginal.clone(),
        sample_points: cfg.samples,
        estimated,
        theoretical: marginal.theoretical_indices().ok(),
        left_tail,
    })
}

/// Runs every scenario on a dedicated pool of `threads` workers. Results do
/// not depend on `threads`; a failing scenario is recorded and the rest run.
pub fn run_scenarios(configs: &[ScenarioConfig], threads: usize) -> Result<Vec<ScenarioOutcome>> {
    if threads == 0 {
        return Err(Error::invalid("threads must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(|| {
        configs
            .iter()
            .map(|cfg| {
                let start = Instant::now();
                let result = run_scenario(cfg).map_err(|e| e.to_string());
                ScenarioOutcome {
                    config: cfg.clone(),
                    result,
                    wall_seconds: start.elapsed().as_secs_f64(),
                }
            })
            .collect()
    }))
}
