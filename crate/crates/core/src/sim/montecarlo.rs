//! Seeded Monte Carlo campaigns and empirical CDFs.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sim::harness::run_scenario;
use crate::sim::metrics::headline;
use crate::sim::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub lo: f64,
    pub hi: f64,
}

impl std::str::FromStr for Sweep {
    type Err = Error;
    /// `key=lo:hi`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("sweep must look like key=lo:hi, got `{s}`"));
        let (key, range) = s.split_once('=').ok_or_else(bad)?;
        let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(bad());
        }
        Ok(Sweep {
            key: key.trim().to_string(),
            lo,
            hi,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSpec {
    pub base: Scenario,
    pub runs: usize,
    /// Run `i` uses seed `seed + i`.
    pub seed: u64,
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// The run finished but its metric event never happened.
    NoEvent,
    Aborted,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Ok => "ok",
            Outcome::NoEvent => "no_event",
            Outcome::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub seed: u64,
    pub outcome: Outcome,
    pub metric: Option<f64>,
    pub detail: String,
    /// Empirical CDF at this row's metric.
    pub cdf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub rows: Vec<McRow>,
}

/// Empirical quantile: the smallest sample whose CDF reaches `p`.
pub fn quantile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    Some(v[idx])
}

/// `(value, F(value))` steps of the empirical CDF, one per distinct value.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = f,
            _ => out.push((*x, f)),
        }
    }
    out
}

impl McSummary {
    pub fn metrics(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.metric).collect()
    }

    pub fn quantile(&self, p: f64) -> Option<f64> {
        quantile(&self.metrics(), p)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["seed", "outcome", "metric", "detail", "cdf"])?;
        for r in &self.rows {
            w.write_record([
                r.seed.to_string(),
                r.outcome.as_str().to_string(),
                r.metric.map_or(String::new(), |m| m.to_string()),
                r.detail.clone(),
                r.cdf.map_or(String::new(), |c| c.to_string()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl MonteCarloSpec {
    fn scenario_for(&self, i: usize) -> Result<Scenario> {
        let seed = self.seed.wrapping_add(i as u64);
        let mut s = self
            .base
            .with_override("scenario.seed", &seed.to_string())?;
        if let Some(sw) = &self.sweep {
            let frac = if self.runs > 1 {
                i as f64 / (self.runs - 1) as f64
            } else {
                0.0
            };
            s = s.with_override(&sw.key, &(sw.lo + (sw.hi - sw.lo) * frac).to_string())?;
        }
        Ok(s)
    }
}

pub fn run_montecarlo(spec: &MonteCarloSpec) -> Result<McSummary> {
    if spec.runs == 0 {
        return Err(Error::Domain("run count must be >= 1".into()));
    }
    // a bad sweep key is a spec error, not a per-run failure
    spec.scenario_for(0)?;

    let mut rows: Vec<McRow> = (0..spec.runs)
        .into_par_iter()
        .map(|i| {
            let seed = spec.seed.wrapping_add(i as u64);
            let result = spec
                .scenario_for(i)
                .and_then(|s| run_scenario(&s).map(|r| (s, r)));
            match result {
                Ok((s, run)) => {
                    let m = headline(&s, &run);
                    McRow {
                        seed,
                        outcome: if m.value.is_some() {
                            Outcome::Ok
                        } else {
                            Outcome::NoEvent
                        },
                        metric: m.value,
                        detail: m.detail,
                        cdf: None,
                    }
                }
                Err(e) => McRow {
                    seed,
                    outcome: Outcome::Aborted,
                    metric: None,
                    detail: e.to_string(),
                    cdf: None,
                },
            }
        })
        .collect();
    rows.sort_by_key(|r| r.seed);

    let cdf = empirical_cdf(&rows.iter().filter_map(|r| r.metric).collect::<Vec<_>>());
    for r in &mut rows {
        if let Some(m) = r.metric {
            let i = cdf.partition_point(|&(v, _)| v < m);
            r.cdf = Some(cdf[i].1);
        }
    }
    Ok(McSummary { rows })
}
