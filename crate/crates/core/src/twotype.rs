//! Closed forms for two permanent cost types with quadratic variable cost
//! `a q²/2`, fixed costs `θ_L`, `θ_H`, half of the entrants of each type and
//! no entry cost.
//!
//! The low type stays forever (up to exogenous death), the high type exits
//! after one period. Entry pricing weights are `Λ_L = 1/(2(1-δ(1-ρ)))`,
//! `Λ_H = 1/2`; the cross-section per entrant is `(1/(2ρ), 1/2)`.

use alloc::format;

use crate::error::{Error, Result};
use crate::primitives::{CostSpec, DemandSpec, EntrantSpec, KernelSpec, ModelPrimitives};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TwoTypeModel {
    pub curvature: f64,
    pub theta_low: f64,
    pub theta_high: f64,
    pub discount: f64,
    pub exit_prob: f64,
    pub demand: DemandSpec,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleSolution {
    pub lambda_low: f64,
    pub lambda_high: f64,
    pub price: f64,
    /// Output of every producing firm, the minimum efficient scale of the weighted cost.
    pub firm_quantity: f64,
    pub quantity: f64,
    pub entrant_mass: f64,
    pub marginal_cost: f64,
    /// `AC^e(q, Λ)`, equal to the price at `q`.
    pub weighted_average_cost: f64,
    /// `AC*(q)`, per-unit cost of the average firm in the cross-section.
    pub average_firm_cost: f64,
    /// `π^e = (pᵉ - AC*(q)) q`.
    pub average_firm_profit: f64,
    /// `Λ_L π(pᵉ,θ_L) + Λ_H π(pᵉ,θ_H)`, zero up to rounding.
    pub entrant_npv: f64,
    pub planner_price: f64,
    pub planner_quantity: f64,
    pub planner_entrant_mass: f64,
}

impl TwoTypeModel {
    fn check(&self) -> Result<()> {
        if !(self.curvature > 0.0) {
            return Err(Error::InvalidArgument(format!("curvature {} must be positive", self.curvature)));
        }
        if !(self.theta_low >= 0.0 && self.theta_low <= self.theta_high) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= theta_L <= theta_H, got {} and {}",
                self.theta_low, self.theta_high
            )));
        }
        if !(self.exit_prob > 0.0 && self.exit_prob <= 1.0) {
            return Err(Error::InvalidArgument(format!("exit probability {} outside (0, 1]", self.exit_prob)));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::InvalidArgument(format!("discount {} outside [0, 1]", self.discount)));
        }
        Ok(())
    }

    /// Zero-profit price under weights `(wl, wh)`: `√(2a (wl θ_L + wh θ_H)/(wl + wh))`.
    fn zero_profit_price(&self, wl: f64, wh: f64) -> Result<f64> {
        let fixed = (wl * self.theta_low + wh * self.theta_high) / (wl + wh);
        if !(fixed > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "entrant value has no positive zero: weighted fixed cost is {fixed}"
            )));
        }
        Ok(libm::sqrt(2.0 * self.curvature * fixed))
    }

    fn average_cost(&self, q: f64, theta: f64) -> f64 {
        (0.5 * self.curvature * q * q + theta) / q
    }

    fn profit(&self, p: f64, theta: f64) -> f64 {
        p * p / (2.0 * self.curvature) - theta
    }

    /// The same industry as a two-cell model with the identity kernel: the
    /// type interval is widened by half the gap so the cell midpoints are
    /// `θ_L` and `θ_H`, and `g(θ) = θ`. Needs `θ_L < θ_H`. The identity kernel
    /// fails the full-support check, so the model must be built unvalidated.
    pub fn surrogate(&self) -> Result<ModelPrimitives> {
        self.check()?;
        let gap = self.theta_high - self.theta_low;
        if !(gap > 0.0) {
            return Err(Error::InvalidArgument("the two-cell surrogate needs theta_L < theta_H".into()));
        }
        Ok(ModelPrimitives {
            type_low: self.theta_low - 0.5 * gap,
            type_high: self.theta_high + 0.5 * gap,
            cost: CostSpec::quadratic(self.curvature, 0.0, 1.0),
            demand: self.demand.clone(),
            kernel: KernelSpec::Permanent,
            entrants: EntrantSpec::Uniform,
            discount: self.discount,
            exit_prob: self.exit_prob,
            entry_cost: 0.0,
        })
    }
}

pub fn solve_twotype(m: &TwoTypeModel) -> Result<OracleSolution> {
    m.check()?;
    let rho = m.exit_prob;
    let lambda_low = 1.0 / (2.0 * (1.0 - m.discount * (1.0 - rho)));
    let lambda_high = 0.5;
    let price = m.zero_profit_price(lambda_low, lambda_high)?;
    let q = price / m.curvature;
    let weighted_average_cost = (lambda_low * m.average_cost(q, m.theta_low)
        + lambda_high * m.average_cost(q, m.theta_high))
        / (lambda_low + lambda_high);
    let (mu_low, mu_high) = (1.0 / (2.0 * rho), 0.5);
    let average_firm_cost =
        (mu_low * m.average_cost(q, m.theta_low) + mu_high * m.average_cost(q, m.theta_high)) / (mu_low + mu_high);
    let quantity = m.demand.quantity(price);
    let entrant_mass = quantity / ((mu_low + mu_high) * q);

    let planner_price = m.zero_profit_price(mu_low, mu_high)?;
    let planner_quantity = m.demand.quantity(planner_price);
    let planner_entrant_mass = planner_quantity / ((mu_low + mu_high) * planner_price / m.curvature);

    Ok(OracleSolution {
        lambda_low,
        lambda_high,
        price,
        firm_quantity: q,
        quantity,
        entrant_mass,
        marginal_cost: m.curvature * q,
        weighted_average_cost,
        average_firm_cost,
        average_firm_profit: (price - average_firm_cost) * q,
        entrant_npv: lambda_low * m.profit(price, m.theta_low) + lambda_high * m.profit(price, m.theta_high),
        planner_price,
        planner_quantity,
        planner_entrant_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_a() -> TwoTypeModel {
        TwoTypeModel {
            curvature: 1.0,
            theta_low: 1.0,
            theta_high: 3.0,
            discount: 0.9,
            exit_prob: 0.5,
            demand: DemandSpec::linear(10.0, 1.0),
        }
    }

    #[test]
    fn fixture_a_closed_forms() {
        let s = solve_twotype(&fixture_a()).unwrap();
        assert!((s.lambda_low - 0.909090909090909).abs() < 1e-12);
        assert!((s.price - 1.8491497610279373).abs() < 1e-13);
        assert!((s.quantity - 8.150850238972062).abs() < 1e-12);
        assert!((s.entrant_mass - 2.9385938737022674).abs() < 1e-12);
        assert!((s.average_firm_profit - 0.0430107526881722).abs() < 1e-12);
        assert!((s.weighted_average_cost - s.price).abs() < 1e-14);
        assert!((s.marginal_cost - s.price).abs() < 1e-15);
        assert!(s.entrant_npv.abs() < 1e-14);
        assert!((s.planner_price - 1.8257418583505538).abs() < 1e-13);
        assert!((s.planner_quantity - 8.174258141649446).abs() < 1e-12);
    }

    #[test]
    fn equal_types_give_textbook_result() {
        for delta in [0.0, 0.5, 0.9, 1.0] {
            let m = TwoTypeModel { theta_low: 2.0, theta_high: 2.0, discount: delta, ..fixture_a() };
            let s = solve_twotype(&m).unwrap();
            assert!((s.price - 2.0).abs() < 1e-15);
            assert!(s.average_firm_profit.abs() < 1e-15);
        }
    }

    #[test]
    fn price_falls_with_patience_and_reaches_planner() {
        let mut last = f64::INFINITY;
        for delta in [0.0, 0.3, 0.6, 0.9, 0.99] {
            let s = solve_twotype(&TwoTypeModel { discount: delta, ..fixture_a() }).unwrap();
            assert!(s.price < last);
            assert!(s.average_firm_profit > 0.0);
            last = s.price;
        }
        let s = solve_twotype(&TwoTypeModel { discount: 1.0, ..fixture_a() }).unwrap();
        assert!((s.price - s.planner_price).abs() < 1e-15);
    }

    #[test]
    fn zero_fixed_costs_have_no_positive_price() {
        let m = TwoTypeModel { theta_low: 0.0, theta_high: 0.0, ..fixture_a() };
        assert!(solve_twotype(&m).is_err());
    }

    #[test]
    fn surrogate_places_midpoints_on_the_types() {
        let p = fixture_a().surrogate().unwrap();
        assert_eq!((p.type_low, p.type_high), (0.0, 4.0));
        assert!(TwoTypeModel { theta_high: 1.0, ..fixture_a() }.surrogate().is_err());
    }
}
