//! Timing and comparison counts of the full pipeline against problem size.

use std::time::Instant;

use super::instances::{derive_seed, random_table};
use super::pipeline::{run_pipeline, PipelineConfig};
use super::search::selection_bound;
use super::OptimizerError;

/// Table sizes of the data-point scaling run.
pub const TABLE4_SIZES: [usize; 12] =
    [3000, 5000, 10000, 20000, 30000, 40000, 50000, 60000, 70000, 80000, 90000, 100000];

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub mean_time_s: f64,
    pub mean_comparisons: f64,
    pub trials: usize,
    /// Largest `comparisons - (ceil(log2 k) + 1)` over the row's runs; never positive.
    pub worst_bound_slack: i64,
}

pub fn scaling_experiment(
    sizes: &[usize],
    trials: usize,
    seed: u64,
    cfg: &PipelineConfig,
) -> Result<Vec<ScalingRow>, OptimizerError> {
    if trials == 0 {
        return Err(OptimizerError::Validation("trials must be at least 1".into()));
    }
    if sizes.contains(&0) {
        return Err(OptimizerError::Validation("sizes must be positive".into()));
    }
    sizes
        .iter()
        .map(|&n| {
            let mut time = 0.0;
            let mut comparisons = 0u64;
            let mut worst = i64::MIN;
            for trial in 0..trials {
                let run_seed = derive_seed(seed, n as u64, trial as u64);
                let landscape = random_table(n, run_seed);
                let t = Instant::now();
                let report = run_pipeline(&landscape, cfg, run_seed)?;
                time += t.elapsed().as_secs_f64();
                comparisons += report.comparison_count;
                let slack = report.comparison_count as i64 - selection_bound(report.candidate_count) as i64;
                worst = worst.max(slack);
            }
            Ok(ScalingRow {
                n,
                mean_time_s: time / trials as f64,
                mean_comparisons: comparisons as f64 / trials as f64,
                trials,
                worst_bound_slack: worst,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_costs_at_most_one_comparison() {
        let rows = scaling_experiment(&[1], 3, 42, &PipelineConfig::default()).unwrap();
        assert!(rows[0].mean_comparisons <= 1.0);
    }

    #[test]
    fn repeated_runs_identical_counts() {
        let a = scaling_experiment(&[50, 500], 4, 9, &PipelineConfig::default()).unwrap();
        let b = scaling_experiment(&[50, 500], 4, 9, &PipelineConfig::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean_comparisons.to_bits(), y.mean_comparisons.to_bits());
            assert!(x.worst_bound_slack <= 0);
        }
    }

    #[test]
    fn argument_errors() {
        assert!(scaling_experiment(&[10], 0, 0, &PipelineConfig::default()).is_err());
        assert!(scaling_experiment(&[0], 1, 0, &PipelineConfig::default()).is_err());
    }
}
