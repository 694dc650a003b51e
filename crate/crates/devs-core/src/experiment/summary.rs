//! Waiting-time summary statistics: count, mean, quartiles, max.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SummaryError {
    #[error("no observations")]
    Empty,
}

/// Five-number-style summary of recorded waits. Quartiles use linear
/// interpolation between order statistics (the "type 7" rule):
/// `h = (n−1)·p`, then interpolate between `x[⌊h⌋]` and `x[⌊h⌋+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitSummary {
    pub count: usize,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn summarize(waits: &[f64]) -> Result<WaitSummary, SummaryError> {
    if waits.is_empty() {
        return Err(SummaryError::Empty);
    }
    let mut sorted = waits.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("waits must not be NaN"));
    Ok(WaitSummary {
        count: sorted.len(),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: *sorted.last().expect("non-empty"),
    })
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl fmt::Display for WaitSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "count   {}", self.count)?;
        writeln!(f, "mean    {:.6}", self.mean)?;
        writeln!(f, "q1      {:.6}", self.q1)?;
        writeln!(f, "median  {:.6}", self.median)?;
        writeln!(f, "q3      {:.6}", self.q3)?;
        write!(f, "max     {:.6}", self.max)
    }
}
