use chrono::Datelike;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, EmailRecord};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub year: i32,
    pub window_months: u32,
    pub sample_size: usize,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.window_months == 0 || self.window_months > 12 {
            return Err(CorpusError::Plan(format!("window of {} months is outside 1..=12", self.window_months)));
        }
        if self.sample_size == 0 {
            return Err(CorpusError::Plan("sample size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SampleOutcome {
    /// First and last month (1-based, inclusive) of the chosen window.
    pub window: Option<(u32, u32)>,
    pub window_count: usize,
    pub month_counts: [usize; 12],
    pub sampled: Vec<EmailRecord>,
    pub warnings: Vec<String>,
}

/// Per-month message counts for one year; undated records are ignored.
pub fn month_counts(records: &[EmailRecord], year: i32) -> [usize; 12] {
    let mut counts = [0usize; 12];
    for d in records.iter().filter_map(|r| r.date) {
        if d.year() == year {
            counts[d.month0() as usize] += 1;
        }
    }
    counts
}

/// Earliest window of `width` consecutive months with the highest total.
pub(crate) fn best_window(counts: &[usize; 12], width: u32) -> (u32, usize) {
    let width = width as usize;
    (0..=12 - width)
        .map(|start| (start as u32 + 1, counts[start..start + width].iter().sum::<usize>()))
        .fold((1, 0), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Pick the busiest window of the year, then draw a seeded uniform sample
/// without replacement from it. Output keeps archive order.
pub fn sample_by_frequency(records: &[EmailRecord], plan: &SamplingPlan) -> Result<SampleOutcome, CorpusError> {
    plan.validate()?;
    let mut out = SampleOutcome { month_counts: month_counts(records, plan.year), ..Default::default() };

    let outside = records.iter().filter(|r| r.date.is_none_or(|d| d.year() != plan.year)).count();
    if outside > 0 {
        out.warnings.push(format!("{outside} records undated or outside {} were ignored", plan.year));
    }
    if out.month_counts.iter().all(|&c| c == 0) {
        out.warnings.push(format!("no records dated in {}", plan.year));
        return Ok(out);
    }

    let (start, total) = best_window(&out.month_counts, plan.window_months);
    let end = start + plan.window_months - 1;
    out.window = Some((start, end));
    out.window_count = total;

    let pool: Vec<&EmailRecord> = records
        .iter()
        .filter(|r| r.date.is_some_and(|d| d.year() == plan.year && (start..=end).contains(&d.month())))
        .collect();
    let amount = plan.sample_size.min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut picked = rand::seq::index::sample(&mut rng, pool.len(), amount).into_vec();
    picked.sort_unstable();
    out.sampled = picked.into_iter().map(|i| pool[i].clone()).collect();
    Ok(out)
}
