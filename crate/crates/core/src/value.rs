//! Firm values by value iteration.
//!
//! `V_m = π + ϱ w(m)⊙(K V_m)` forces exit above `m`; `V = π + ϱ max(K V, 0)`
//! lets the firm choose. Iteration stops once the sup-norm change is below
//! `tol (1-ϱ)`, so the distance to the fixed point is at most `tol`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::firm::PriceStatics;
use crate::grid::{DiscretizedModel, ThresholdBracket};
use crate::linalg::mat_vec;
use crate::numeric::sup_norm_diff;
use crate::primitives::CostSpec;

const MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValueTable {
    pub price: f64,
    /// Forced threshold, or `None` for optimal exit.
    pub threshold: Option<f64>,
    pub values: Vec<f64>,
    /// `(K v)_j`, the expected value of next period's type.
    pub continuation: Vec<f64>,
    /// Last sup-norm change of the iteration.
    pub last_step: f64,
    /// Bound on the distance to the fixed point, `ϱ step/(1-ϱ)`.
    pub error_bound: f64,
    pub iterations: usize,
}

fn check(varrho: f64, tol: f64) -> Result<()> {
    if !(0.0..1.0).contains(&varrho) {
        return Err(Error::InvalidArgument(format!("survival factor {varrho} must lie in [0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    Ok(())
}

fn iterate<F>(
    price: f64,
    threshold: Option<f64>,
    profits: &[f64],
    d: &DiscretizedModel,
    varrho: f64,
    tol: f64,
    stay: F,
) -> Result<ValueTable>
where
    F: Fn(usize, f64) -> f64,
{
    let g = d.cells();
    let mut v = profits.to_vec();
    let mut iterations = 0;
    loop {
        let cont = mat_vec(g, d.kernel(), &v);
        let next: Vec<f64> = (0..g).map(|j| profits[j] + varrho * stay(j, cont[j])).collect();
        let step = sup_norm_diff(&next, &v);
        v = next;
        iterations += 1;
        if step <= tol * (1.0 - varrho) || varrho == 0.0 {
            let continuation = mat_vec(g, d.kernel(), &v);
            return Ok(ValueTable {
                price,
                threshold,
                values: v,
                continuation,
                last_step: step,
                error_bound: if varrho == 0.0 { 0.0 } else { varrho * step / (1.0 - varrho) },
                iterations,
            });
        }
        if iterations >= MAX_SWEEPS {
            return Err(Error::NoConvergence { what: "value iteration", iterations });
        }
    }
}

/// `V_m(p,·)` for a forced threshold.
pub fn value_fixed_threshold(
    p: f64,
    m: f64,
    d: &DiscretizedModel,
    cost: &CostSpec,
    varrho: f64,
    tol: f64,
) -> Result<ValueTable> {
    check(varrho, tol)?;
    let stats = PriceStatics::new(p, d.midpoints(), cost, tol)?;
    let w = d.stay_weights(m);
    iterate(p, Some(m), &stats.profit, d, varrho, tol, |j, c| w[j] * c)
}

/// `V(p,·)` under optimal exit.
pub fn value_optimal(p: f64, d: &DiscretizedModel, cost: &CostSpec, varrho: f64, tol: f64) -> Result<ValueTable> {
    check(varrho, tol)?;
    let stats = PriceStatics::new(p, d.midpoints(), cost, tol)?;
    iterate(p, None, &stats.profit, d, varrho, tol, |_, c| c.max(0.0))
}

/// Threshold implied by the sign change of the continuation values.
///
/// The crossing is located by linear interpolation between the midpoints on
/// either side of it. Continuations that are nonnegative everywhere give
/// `θ_H`, nonpositive everywhere give `θ_L`.
pub fn optimal_threshold(vt: &ValueTable, d: &DiscretizedModel) -> Result<ThresholdBracket> {
    let c = &vt.continuation;
    let scale = c.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
    for j in 1..c.len() {
        if c[j] > c[j - 1] + 1e-10 * scale {
            return Err(Error::NonMonotoneContinuation { cell: j });
        }
    }
    if c.iter().all(|&x| x >= 0.0) {
        return Ok(d.bracket(d.high()));
    }
    if c.iter().all(|&x| x <= 0.0) {
        return Ok(d.bracket(d.low()));
    }
    let j = c.iter().rposition(|&x| x >= 0.0).unwrap_or(0);
    let mids = d.midpoints();
    let t = c[j] / (c[j] - c[j + 1]);
    let point = mids[j] + t * (mids[j + 1] - mids[j]);
    Ok(d.bracket(point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::fixtures::fixture_c;
    use alloc::vec;

    fn surrogate() -> (DiscretizedModel, CostSpec) {
        let d = DiscretizedModel::from_parts(0.0, 4.0, vec![1.0, 0.0, 0.0, 1.0], vec![0.5, 0.5]).unwrap();
        (d, CostSpec::quadratic(1.0, 0.0, 1.0))
    }

    #[test]
    fn myopic_values_are_profits() {
        let m = fixture_c();
        let d = DiscretizedModel::discretize(&m, 21).unwrap();
        let stats = PriceStatics::new(2.0, d.midpoints(), &m.cost, 1e-12).unwrap();
        let v = value_fixed_threshold(2.0, 2.5, &d, &m.cost, 0.0, 1e-12).unwrap();
        assert_eq!(v.values, stats.profit);
        let v = value_fixed_threshold(2.0, d.low(), &d, &m.cost, 0.81, 1e-12).unwrap();
        assert_eq!(v.values, stats.profit);
        let v = value_optimal(0.0, &d, &m.cost, 0.81, 1e-12).unwrap();
        let at_zero = PriceStatics::new(0.0, d.midpoints(), &m.cost, 1e-12).unwrap();
        assert_eq!(v.values, at_zero.profit);
    }

    #[test]
    fn surrogate_values_are_geometric_sums() {
        let (d, cost) = surrogate();
        let p = 1.8491497610279373;
        let forced = value_fixed_threshold(p, 2.0, &d, &cost, 0.45, 1e-13).unwrap();
        let pl = p * p / 2.0 - 1.0;
        let ph = p * p / 2.0 - 3.0;
        assert!((forced.values[0] - pl / 0.55).abs() < 1e-12);
        assert!((forced.values[1] - ph).abs() < 1e-12);
        assert!((forced.values[0] - 1.290323).abs() < 1e-6);
        let opt = value_optimal(p, &d, &cost, 0.45, 1e-13).unwrap();
        for (a, b) in opt.values.iter().zip(&forced.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_conventions() {
        let (d, cost) = surrogate();
        let high = value_optimal(10.0, &d, &cost, 0.45, 1e-12).unwrap();
        assert_eq!(optimal_threshold(&high, &d).unwrap().point, d.high());
        let low = value_optimal(0.5, &d, &cost, 0.45, 1e-12).unwrap();
        assert_eq!(optimal_threshold(&low, &d).unwrap().point, d.low());
    }

    #[test]
    fn increasing_continuation_is_rejected() {
        let (d, _) = surrogate();
        let vt = ValueTable {
            price: 1.0,
            threshold: None,
            values: vec![0.0, 1.0],
            continuation: vec![-1.0, 1.0],
            last_step: 0.0,
            error_bound: 0.0,
            iterations: 0,
        };
        assert!(matches!(optimal_threshold(&vt, &d), Err(Error::NonMonotoneContinuation { cell: 1 })));
    }

    #[test]
    fn forced_values_never_beat_optimal_values() {
        let m = fixture_c();
        let d = DiscretizedModel::discretize(&m, 41).unwrap();
        let opt = value_optimal(1.9, &d, &m.cost, 0.81, 1e-12).unwrap();
        for k in [0, 10, 20, 30, 41] {
            let forced = value_fixed_threshold(1.9, d.boundary(k), &d, &m.cost, 0.81, 1e-12).unwrap();
            for (f, o) in forced.values.iter().zip(&opt.values) {
                assert!(*f <= o + 1e-10);
            }
        }
        for w in opt.continuation.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }
}
