//! Steady-state surplus maximization and the comparison with the equilibrium.
//!
//! The planner values the future of a firm without discounting, so it runs
//! the equilibrium machinery with `δ = 1`: survival is the physical `1-ρ` in
//! both the pricing weights and the cross-section.

use crate::equilibrium::{solve_lrce, LrceSolution, Model, ThresholdKind};
use crate::error::Result;
use crate::grid::ThresholdBracket;
use crate::measure::{self, TypeMeasure};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlannerSolution {
    /// Common marginal cost of all producing firms.
    pub price: f64,
    pub threshold: ThresholdBracket,
    pub quantity: f64,
    pub entrant_mass: f64,
    pub measure: TypeMeasure,
    /// `AC̄(p*, Λ(m*,1))`, equal to `P^d(Q*)`.
    pub average_cost: f64,
    pub surplus: Surplus,
}

/// Flow surplus of a stationary allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Surplus {
    /// `∫_0^Q P^d`.
    pub consumer_benefit: f64,
    /// Production and fixed costs of the cross-section plus `nκ`.
    pub total_cost: f64,
    pub value: f64,
}

/// Surplus of producing at price `p` with `n` entrants per period and threshold `m`.
pub fn steady_state_surplus(model: &Model, p: f64, n: f64, m: f64) -> Result<Surplus> {
    let mu = measure::steady_state_measure(n, m, &model.grid, model.primitives.exit_prob)?;
    let agg = model.aggregates(p, &mu)?;
    let consumer_benefit = model.primitives.demand.consumer_integral(agg.q_bar);
    let total_cost = agg.c_bar - model.primitives.entry_cost + n * model.primitives.entry_cost;
    Ok(Surplus { consumer_benefit, total_cost, value: consumer_benefit - total_cost })
}

pub fn solve_planner(model: &Model) -> Result<PlannerSolution> {
    let undiscounted = model.with_discount(1.0);
    let s = solve_lrce(&undiscounted)?;
    let surplus = steady_state_surplus(model, s.price, s.entrant_mass, s.threshold.point)?;
    Ok(PlannerSolution {
        price: s.price,
        threshold: s.threshold,
        quantity: s.quantity,
        entrant_mass: s.entrant_mass,
        measure: s.physical_measure,
        average_cost: s.diagnostics.average_cost,
        surplus,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonReport {
    pub equilibrium: LrceSolution,
    pub planner: PlannerSolution,
    pub equilibrium_surplus: Surplus,
    /// `pᵉ - p*`.
    pub price_gap: f64,
    /// `Q* - Qᵉ`.
    pub quantity_gap: f64,
    /// `S* - Sᵉ`.
    pub surplus_gap: f64,
    /// Both thresholds are reported; their order is not predicted.
    pub equilibrium_threshold: f64,
    pub planner_threshold: f64,
    pub interior: bool,
    /// `q(pᵉ,θ) ≥ q(p*,θ)` in every cell.
    pub firm_output_higher: bool,
    /// With `δ < 1` and an interior threshold: `p* < pᵉ`, `Q* > Qᵉ`, higher
    /// firm output and higher surplus. With `δ = 1`: all gaps below `1e-8`.
    pub prediction_holds: bool,
}

pub fn compare(model: &Model) -> Result<ComparisonReport> {
    let eq = solve_lrce(model)?;
    let planner = solve_planner(model)?;
    let equilibrium_surplus = steady_state_surplus(model, eq.price, eq.entrant_mass, eq.threshold.point)?;
    let qe = model.statics(eq.price)?.quantity;
    let qp = model.statics(planner.price)?.quantity;
    let firm_output_higher = qe.iter().zip(&qp).all(|(a, b)| *a >= *b);
    let price_gap = eq.price - planner.price;
    let quantity_gap = planner.quantity - eq.quantity;
    let surplus_gap = planner.surplus.value - equilibrium_surplus.value;
    let interior = eq.diagnostics.threshold_kind == ThresholdKind::Interior;
    let prediction_holds = if model.primitives.discount >= 1.0 {
        price_gap.abs() < 1e-8 && quantity_gap.abs() < 1e-8 && surplus_gap.abs() < 1e-8
    } else if interior {
        price_gap > 0.0 && quantity_gap > 0.0 && firm_output_higher && surplus_gap >= 0.0
    } else {
        true
    };
    Ok(ComparisonReport {
        equilibrium_threshold: eq.threshold.point,
        planner_threshold: planner.threshold.point,
        equilibrium: eq,
        planner,
        equilibrium_surplus,
        price_gap,
        quantity_gap,
        surplus_gap,
        interior,
        firm_output_higher,
        prediction_holds,
    })
}
