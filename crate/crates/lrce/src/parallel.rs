//! Runs the firm panel over chunks of birth periods on the rayon pool.

use lrce_core::sim::{simulate_cohorts, PanelStats, SimConfig};
use lrce_core::Model;
use rayon::prelude::*;

/// Results are bit-identical to a serial run: every firm owns its RNG stream
/// and chunks are merged in birth order.
pub fn simulate_parallel(cfg: &SimConfig, model: &Model, chunk: u32) -> lrce_core::Result<PanelStats> {
    let chunk = chunk.max(1);
    let starts: Vec<u32> = (0..cfg.periods).step_by(chunk as usize).collect();
    let parts = starts
        .par_iter()
        .map(|&s| simulate_cohorts(cfg, model, s..(s + chunk).min(cfg.periods)))
        .collect::<lrce_core::Result<Vec<_>>>()?;
    let mut iter = parts.into_iter();
    let mut total = iter.next().expect("at least one period");
    for p in iter {
        total.merge(&p);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lrce_core::sim::simulate_panel;
    use lrce_core::{CostSpec, DemandSpec, EntrantSpec, KernelSpec, ModelPrimitives, SolverOptions};

    #[test]
    fn matches_the_serial_panel() {
        let prims = ModelPrimitives {
            type_low: 1.0,
            type_high: 3.0,
            cost: CostSpec::quadratic(1.0, 0.0, 1.0),
            demand: DemandSpec::linear(10.0, 1.0),
            kernel: KernelSpec::TruncatedNormal { persistence: 0.8, center: 2.0, sigma: 0.3 },
            entrants: EntrantSpec::Uniform,
            discount: 0.9,
            exit_prob: 0.1,
            entry_cost: 0.0,
        };
        let model = Model::new(prims, 21, SolverOptions::default()).unwrap();
        let cfg = SimConfig { entrants: 30, periods: 90, burn_in: 66, seed: 3, threshold: 2.4, price: 1.9 };
        let serial = simulate_panel(&cfg, &model).unwrap();
        for chunk in [1, 7, 90, 500] {
            let par = simulate_parallel(&cfg, &model, chunk).unwrap();
            assert_eq!(serial.histogram, par.histogram);
            assert_eq!(serial.alive, par.alive);
            assert_eq!(serial.npv_estimate(8).mean.to_bits(), par.npv_estimate(8).mean.to_bits());
        }
    }
}
