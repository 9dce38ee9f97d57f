//! Static profit maximization of a price-taking firm.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::bisect_increasing;
use crate::primitives::CostSpec;

const MAX_DOUBLINGS: usize = 1100;

/// Output and profit of one firm at one price.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FirmStatics {
    pub price: f64,
    pub theta: f64,
    pub quantity: f64,
    pub profit: f64,
}

/// `q(p,θ)`: zero when `p ≤ c'(0,θ)`, otherwise the root of `c'(q,θ) = p`.
pub fn optimal_quantity(p: f64, theta: f64, cost: &CostSpec, tol: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("negative price {p}")));
    }
    if p <= cost.marginal(0.0, theta) {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while cost.marginal(hi, theta) < p {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::BracketNotFound { what: "optimal quantity", limit: hi });
        }
    }
    let ftol = tol * p.max(1.0);
    Ok(bisect_increasing(0.0, hi, ftol, 0.0, |q| cost.marginal(q, theta) - p))
}

/// `π(p,θ) = p q(p,θ) - C(q(p,θ),θ)`.
pub fn profit(p: f64, theta: f64, cost: &CostSpec, tol: f64) -> Result<f64> {
    let q = optimal_quantity(p, theta, cost, tol)?;
    Ok(p * q - cost.total(q, theta))
}

pub fn firm_statics(p: f64, theta: f64, cost: &CostSpec, tol: f64) -> Result<FirmStatics> {
    let quantity = optimal_quantity(p, theta, cost, tol)?;
    Ok(FirmStatics { price: p, theta, quantity, profit: p * quantity - cost.total(quantity, theta) })
}

/// Per-cell quantities, costs and profits at one price.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceStatics {
    pub price: f64,
    pub quantity: Vec<f64>,
    pub cost: Vec<f64>,
    pub profit: Vec<f64>,
}

impl PriceStatics {
    pub fn new(p: f64, thetas: &[f64], cost: &CostSpec, tol: f64) -> Result<Self> {
        let mut quantity = Vec::with_capacity(thetas.len());
        let mut costs = Vec::with_capacity(thetas.len());
        let mut profit = Vec::with_capacity(thetas.len());
        for &t in thetas {
            let q = optimal_quantity(p, t, cost, tol)?;
            let c = cost.total(q, t);
            quantity.push(q);
            costs.push(c);
            profit.push(p * q - c);
        }
        Ok(Self { price: p, quantity, cost: costs, profit })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::VariableCost;

    fn quad(a: f64) -> CostSpec {
        CostSpec::quadratic(a, 0.0, 1.0)
    }

    #[test]
    fn quadratic_quantity_is_price_over_curvature() {
        let q = optimal_quantity(1.849150, 1.0, &quad(1.0), 1e-12).unwrap();
        assert!((q - 1.849150).abs() < 1e-10);
        assert!((optimal_quantity(3.0, 2.0, &quad(2.0), 1e-12).unwrap() - 1.5).abs() < 1e-11);
        assert_eq!(optimal_quantity(0.0, 2.0, &quad(1.0), 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn profits_match_closed_form() {
        let c = quad(1.0);
        let p = 1.849150;
        assert!((profit(p, 1.0, &c, 1e-12).unwrap() - (p * p / 2.0 - 1.0)).abs() < 1e-12);
        assert!((profit(p, 3.0, &c, 1e-12).unwrap() - (p * p / 2.0 - 3.0)).abs() < 1e-12);
        assert_eq!(profit(0.0, 2.0, &c, 1e-12).unwrap(), -2.0);
    }

    #[test]
    fn linear_term_creates_zero_output_region() {
        let c = CostSpec {
            variable: VariableCost::Quadratic { curvature: 1.0, curvature_slope: 0.0, linear: 0.5 },
            fixed: crate::primitives::FixedCost { intercept: 0.1, slope: 0.0 },
        };
        assert_eq!(optimal_quantity(0.4, 1.0, &c, 1e-12).unwrap(), 0.0);
        assert!((optimal_quantity(1.5, 1.0, &c, 1e-12).unwrap() - 1.0).abs() < 1e-11);
        assert_eq!(profit(0.4, 1.0, &c, 1e-12).unwrap(), -0.1);
    }

    #[test]
    fn power_cost_quantity() {
        let c = CostSpec {
            variable: VariableCost::Power { scale: 2.0, scale_slope: 0.0, exponent: 1.5 },
            fixed: crate::primitives::FixedCost::default(),
        };
        // c'(q) = 2 sqrt(q) = 3
        assert!((optimal_quantity(3.0, 1.0, &c, 1e-13).unwrap() - 2.25).abs() < 1e-10);
    }

    #[test]
    fn envelope_derivative_is_quantity() {
        let c = quad(1.3);
        let (p, t, e) = (2.2, 1.7, 1e-4);
        let d = (profit(p + e, t, &c, 1e-14).unwrap() - profit(p - e, t, &c, 1e-14).unwrap()) / (2.0 * e);
        let q = optimal_quantity(p, t, &c, 1e-14).unwrap();
        assert!((d - q).abs() < 1e-7);
    }
}
