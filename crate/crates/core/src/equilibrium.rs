//! Entry and exit schedules, the stationary equilibrium and long-run supply.
//!
//! For every threshold `m` the zero entry-profit price `p_E(m)` solves
//! `π̄(p, Λ(m,δ)) = κ`, and the exit residual is
//! `R(m) = π̄(p_E(m), Λ_X(m,δ))`, the continuation value of the marginal
//! type. The equilibrium threshold is the sign change of `R`; the price is
//! `p_E` there. Entry is priced with the perceived survival `δ(1-ρ)`, the
//! market clears with the physical cross-section built from `1-ρ`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::firm::{self, PriceStatics};
use crate::grid::{DiscretizedModel, ThresholdBracket};
use crate::measure::{self, aggregates_from, AggregateBundle, ResolventSweep, TypeMeasure};
use crate::numeric::{brent, golden_min, sup_norm_diff, NeumaierSum};
use crate::primitives::{validate_primitives, ModelPrimitives, ValidationReport};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SolverOptions {
    /// Relative tolerance of the firm's first-order condition.
    pub tolerance: f64,
    /// Absolute tolerance on prices found by root finding.
    pub price_tol: f64,
    /// Absolute tolerance on the located threshold.
    pub threshold_tol: f64,
    /// Sup-norm tolerance of value iteration.
    pub value_tol: f64,
    /// Exit residuals this small count as zero when scanning for sign changes.
    pub crossing_tol: f64,
    /// Prices above `price_cap_factor * v` are never searched.
    pub price_cap_factor: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            price_tol: 1e-14,
            threshold_tol: 1e-13,
            value_tol: 1e-12,
            crossing_tol: 1e-9,
            price_cap_factor: 1e6,
            max_iter: 200,
        }
    }
}

/// Primitives, their discretization and solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub primitives: ModelPrimitives,
    pub grid: DiscretizedModel,
    pub options: SolverOptions,
}

impl Model {
    /// Validates the primitives and discretizes them on `cells` cells.
    pub fn new(primitives: ModelPrimitives, cells: usize, options: SolverOptions) -> Result<Self> {
        let report = validate_primitives(&primitives, 1e-12)?;
        if let Some(fail) = report.failures().next() {
            return Err(Error::AssumptionViolated { check: fail.check.label(), detail: fail.detail.clone() });
        }
        Self::unvalidated(primitives, cells, options).map(|(m, _)| m)
    }

    /// Discretizes without enforcing the assumption checks; structural errors still fail.
    /// Returns the report so the caller can surface what was bypassed.
    pub fn unvalidated(
        primitives: ModelPrimitives,
        cells: usize,
        options: SolverOptions,
    ) -> Result<(Self, ValidationReport)> {
        let report = validate_primitives(&primitives, 1e-12)?;
        let grid = DiscretizedModel::discretize(&primitives, cells)?;
        Ok((Self { primitives, grid, options }, report))
    }

    pub fn with_grid(primitives: ModelPrimitives, grid: DiscretizedModel, options: SolverOptions) -> Self {
        Self { primitives, grid, options }
    }

    /// Same model with a different discount factor.
    pub fn with_discount(&self, discount: f64) -> Self {
        let mut m = self.clone();
        m.primitives.discount = discount;
        m
    }

    pub fn effective_survival(&self) -> f64 {
        self.primitives.effective_survival()
    }

    pub fn physical_survival(&self) -> f64 {
        self.primitives.physical_survival()
    }

    pub fn statics(&self, p: f64) -> Result<PriceStatics> {
        PriceStatics::new(p, self.grid.midpoints(), &self.primitives.cost, self.options.tolerance)
    }

    pub fn aggregates(&self, p: f64, eta: &TypeMeasure) -> Result<AggregateBundle> {
        Ok(aggregates_from(&self.statics(p)?, &eta.weights, self.primitives.entry_cost))
    }

    /// `π̄(p, λ)` without the entry cost.
    fn pi_bar(&self, p: f64, lambda: &[f64]) -> Result<f64> {
        let mut s = NeumaierSum::new();
        for (&t, &l) in self.grid.midpoints().iter().zip(lambda) {
            if l != 0.0 {
                s.add(l * firm::profit(p, t, &self.primitives.cost, self.options.tolerance)?);
            }
        }
        Ok(s.value())
    }

    /// Smallest price at which some cell carrying mass produces.
    fn production_floor(&self, lambda: &[f64]) -> f64 {
        self.grid
            .midpoints()
            .iter()
            .zip(lambda)
            .filter(|(_, &l)| l > 0.0)
            .map(|(&t, _)| self.primitives.cost.marginal(0.0, t).max(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// Root of `π̄(p, λ) = κ`, searched from the production floor upward.
    fn entry_price_for(&self, lambda: &[f64]) -> Result<f64> {
        let kappa = self.primitives.entry_cost;
        let lo = self.production_floor(lambda);
        if !lo.is_finite() {
            return Err(Error::InvalidArgument("entry measure carries no mass".into()));
        }
        if self.pi_bar(lo, lambda)? >= kappa {
            return Ok(lo);
        }
        let cap = self.options.price_cap_factor * self.primitives.demand.choke_price().max(1.0);
        let mut hi = self.primitives.demand.choke_price().max(2.0 * lo).max(1.0);
        while self.pi_bar(hi, lambda)? < kappa {
            hi *= 2.0;
            if hi > cap {
                return Err(Error::BracketNotFound { what: "entry price", limit: cap });
            }
        }
        brent("entry price", lo, hi, self.options.price_tol, self.options.max_iter, |p| {
            Ok(self.pi_bar(p, lambda)? - kappa)
        })
    }
}

/// `p_E(m)`.
pub fn entry_price(model: &Model, m: f64) -> Result<f64> {
    let lambda = measure::lambda_entry(m, model.effective_survival(), &model.grid)?;
    model.entry_price_for(&lambda.weights)
}

/// `R(m) = π̄(p_E(m), Λ_X(m,δ))`.
pub fn exit_residual(model: &Model, m: f64) -> Result<f64> {
    let p = entry_price(model, m)?;
    let seed = model.grid.kernel_at(m);
    let lx = measure::lambda_exit(m, model.effective_survival(), &model.grid, &seed)?;
    model.pi_bar(p, &lx.weights)
}

/// Entry price and exit residual at every cell boundary.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Schedules {
    pub discount: f64,
    pub boundaries: Vec<f64>,
    pub entry_price: Vec<f64>,
    pub exit_residual: Vec<f64>,
}

impl Schedules {
    pub fn min_entry_price(&self) -> (usize, f64) {
        self.entry_price
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (k, p)| if p < best.1 { (k, p) } else { best })
    }
}

/// Sweeps all `G+1` boundaries with one rank-one resolvent update per step.
pub fn schedules(model: &Model) -> Result<Schedules> {
    let d = &model.grid;
    let varrho = model.effective_survival();
    let mut sweep = ResolventSweep::new(d, varrho)?;
    let g = d.cells();
    let mut entry = Vec::with_capacity(g + 1);
    let mut residual = Vec::with_capacity(g + 1);
    for k in 0..=g {
        let lambda = sweep.solve(d.entrants())?;
        let p = model.entry_price_for(&lambda)?;
        let lx = sweep.solve(&d.kernel_at(d.boundary(k)))?;
        entry.push(p);
        residual.push(model.pi_bar(p, &lx)?);
        if k < g {
            sweep.advance()?;
        }
    }
    Ok(Schedules {
        discount: model.primitives.discount,
        boundaries: d.boundaries(),
        entry_price: entry,
        exit_residual: residual,
    })
}

/// Where the exit residual vanishes, with the boundary conventions applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ThresholdKind {
    /// The residual changes sign inside the type interval.
    Interior,
    /// Negative everywhere: even the lowest type exits.
    Lower,
    /// Nonnegative everywhere: nobody exits endogenously.
    Upper,
}

/// Stationary price and threshold, independent of demand.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupplyPoint {
    pub price: f64,
    pub threshold: f64,
    pub kind: ThresholdKind,
    pub sign_changes: usize,
    pub schedules: Schedules,
}

fn sign(r: f64, tol: f64) -> i8 {
    if r.abs() <= tol {
        0
    } else if r > 0.0 {
        1
    } else {
        -1
    }
}

/// Long-run supply price and threshold: the crossing of the exit residual
/// along the entry schedule.
pub fn stationary_point(model: &Model) -> Result<SupplyPoint> {
    let d = &model.grid;
    let sched = schedules(model)?;
    let tol = model.options.crossing_tol;
    let nonzero: Vec<(usize, i8)> = sched
        .exit_residual
        .iter()
        .enumerate()
        .map(|(k, &r)| (k, sign(r, tol)))
        .filter(|(_, s)| *s != 0)
        .collect();
    let changes: Vec<(usize, usize)> = nonzero
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| (w[0].0, w[1].0))
        .collect();
    if changes.len() > 1 {
        return Err(Error::MultipleCrossings { crossings: changes.len() });
    }
    let at_boundary = |k: usize, kind: ThresholdKind, sched: Schedules| SupplyPoint {
        price: sched.entry_price[k],
        threshold: d.boundary(k),
        kind,
        sign_changes: changes.len(),
        schedules: sched,
    };
    let g = d.cells();
    if nonzero.is_empty() {
        return Ok(at_boundary(g, ThresholdKind::Upper, sched));
    }
    let Some(&(a, b)) = changes.first() else {
        return Ok(if nonzero[0].1 < 0 {
            at_boundary(0, ThresholdKind::Lower, sched)
        } else {
            at_boundary(g, ThresholdKind::Upper, sched)
        });
    };
    if b > a + 1 {
        return Ok(at_boundary(a + 1, ThresholdKind::Interior, sched));
    }
    let varrho = model.effective_survival();
    let sweep = ResolventSweep::at(d, varrho, a)?;
    let base = d.boundary(a);
    let h = d.spacing();
    let residual_at = |t: f64| -> Result<(f64, f64)> {
        let lambda = sweep.fractional(d.entrants(), t)?;
        let p = model.entry_price_for(&lambda)?;
        let lx = sweep.fractional(&d.kernel_at(base + t * h), t)?;
        Ok((p, model.pi_bar(p, &lx)?))
    };
    let t = brent("exit threshold", 0.0, 1.0, model.options.threshold_tol / h, model.options.max_iter, |t| {
        residual_at(t).map(|r| r.1)
    })?;
    let (price, _) = residual_at(t)?;
    Ok(SupplyPoint {
        price,
        threshold: if t >= 1.0 { d.boundary(a + 1) } else { base + t * h },
        kind: ThresholdKind::Interior,
        sign_changes: 1,
        schedules: sched,
    })
}

/// Checks computed at the solution.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Diagnostics {
    /// `π̄(pᵉ, Λ(mᵉ,δ)) - κ`.
    pub entry_residual: f64,
    /// `π̄(pᵉ, Λ_X(mᵉ,δ))`.
    pub exit_residual: f64,
    pub threshold_kind: ThresholdKind,
    /// Interior: `|R| ≤ 1e-6`. At `θ_L`: `R ≤ 0`. At `θ_H`: `R ≥ 0`.
    pub exit_condition_holds: bool,
    /// `|Q^d(pᵉ) - q̄(pᵉ, μ)| / Q^d(pᵉ)`.
    pub market_clearing_gap: f64,
    pub min_schedule_price: f64,
    pub min_schedule_index: usize,
    /// `AC̄(pᵉ, Λ(mᵉ,δ))`, equal to `pᵉ` when entry profit is zero.
    pub average_cost: f64,
    /// `min_p AC̄(p, Λ(mᵉ,δ))` and its minimizer.
    pub min_average_cost: f64,
    pub min_average_cost_price: f64,
    /// Per-period profit net of entry costs, per firm of the physical cross-section.
    pub average_firm_profit: f64,
    /// `π̄(pᵉ, μ) - nᵉκ`.
    pub aggregate_profit: f64,
    /// `sup |Λ(mᵉ,δ) - Λ(mᵉ,1)|`; positive whenever `δ < 1` and some type stays.
    pub perceived_physical_gap: f64,
    pub sign_changes: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LrceSolution {
    pub price: f64,
    pub threshold: ThresholdBracket,
    pub entrant_mass: f64,
    pub quantity: f64,
    pub lambda_entry: TypeMeasure,
    pub lambda_exit: TypeMeasure,
    pub physical_measure: TypeMeasure,
    pub discount: f64,
    pub schedules: Schedules,
    pub diagnostics: Diagnostics,
}

/// Demand-side completion of a stationary point.
#[derive(Debug, Clone, PartialEq)]
pub struct Clearing {
    pub quantity: f64,
    pub entrant_mass: f64,
    pub physical: TypeMeasure,
}

/// Entrant mass and cross-section clearing the market at `(p, m)`.
pub fn market_clearing(model: &Model, p: f64, m: f64) -> Result<Clearing> {
    let demand = &model.primitives.demand;
    let quantity = demand.quantity(p);
    let per_entrant = measure::lambda_entry(m, model.physical_survival(), &model.grid)?;
    let q_bar = model.aggregates(p, &per_entrant)?.q_bar;
    if !(quantity > 0.0) || !(q_bar > 0.0) {
        return Err(Error::NoActiveEquilibrium { price: p, choke: demand.choke_price() });
    }
    let entrant_mass = quantity / q_bar;
    Ok(Clearing { quantity, entrant_mass, physical: per_entrant.scaled(entrant_mass) })
}

pub fn solve_lrce(model: &Model) -> Result<LrceSolution> {
    let point = stationary_point(model)?;
    finish(model, point)
}

fn finish(model: &Model, point: SupplyPoint) -> Result<LrceSolution> {
    let d = &model.grid;
    let m = point.threshold;
    let kappa = model.primitives.entry_cost;
    let varrho = model.effective_survival();
    let lambda = measure::lambda_entry(m, varrho, d)?;
    let p = model.entry_price_for(&lambda.weights)?;
    let lambda_x = measure::lambda_exit(m, varrho, d, &d.kernel_at(m))?;
    let clearing = market_clearing(model, p, m)?;

    let stats = model.statics(p)?;
    let entry = aggregates_from(&stats, &lambda.weights, kappa);
    let exit_residual = model.pi_bar(p, &lambda_x.weights)?;
    let phys = aggregates_from(&stats, &clearing.physical.weights, 0.0);
    let market_clearing_gap = (clearing.quantity - phys.q_bar).abs() / clearing.quantity;
    let aggregate_profit = phys.pi_bar - clearing.entrant_mass * kappa;
    let (min_k, min_p) = point.schedules.min_entry_price();

    let floor = model.production_floor(&lambda.weights);
    let (min_ac_price, min_ac) = golden_min(floor, 2.0 * p + 1.0, 1e-12, |q| {
        model.aggregates(q, &lambda).map(|b| b.ac_or_inf()).unwrap_or(f64::INFINITY)
    });
    let per_entrant = clearing.physical.scaled(1.0 / clearing.entrant_mass);
    let exit_condition_holds = match point.kind {
        ThresholdKind::Interior => exit_residual.abs() <= 1e-6,
        ThresholdKind::Lower => exit_residual <= model.options.crossing_tol,
        ThresholdKind::Upper => exit_residual >= -model.options.crossing_tol,
    };

    let diagnostics = Diagnostics {
        entry_residual: entry.pi_bar - kappa,
        exit_residual,
        threshold_kind: point.kind,
        exit_condition_holds,
        market_clearing_gap,
        min_schedule_price: min_p,
        min_schedule_index: min_k,
        average_cost: entry.ac_or_inf(),
        min_average_cost: min_ac,
        min_average_cost_price: min_ac_price,
        average_firm_profit: aggregate_profit / clearing.physical.mass(),
        aggregate_profit,
        perceived_physical_gap: sup_norm_diff(&lambda.weights, &per_entrant.weights),
        sign_changes: point.sign_changes,
    };
    Ok(LrceSolution {
        price: p,
        threshold: d.bracket(m),
        entrant_mass: clearing.entrant_mass,
        quantity: clearing.quantity,
        lambda_entry: lambda,
        lambda_exit: lambda_x,
        physical_measure: clearing.physical,
        discount: model.primitives.discount,
        schedules: point.schedules,
        diagnostics,
    })
}

/// Inverse long-run supply at aggregate quantity `q`: horizontal at the
/// minimized average weighted cost.
pub fn long_run_supply(model: &Model, q: f64) -> Result<f64> {
    Ok(long_run_supply_curve(model, &[q])?[0])
}

/// Inverse long-run supply at several quantities, solved once.
pub fn long_run_supply_curve(model: &Model, quantities: &[f64]) -> Result<Vec<f64>> {
    if let Some(q) = quantities.iter().find(|q| !(**q > 0.0)) {
        return Err(Error::InvalidArgument(format!("supply quantity {q} must be positive")));
    }
    let price = stationary_point(model)?.price;
    Ok(quantities.iter().map(|_| price).collect())
}

/// `Q^s(p; n, m) = q̄(p, μ(n,m))`.
pub fn aggregate_supply(p: f64, n: f64, m: f64, model: &Model) -> Result<f64> {
    let mu = measure::steady_state_measure(n, m, &model.grid, model.primitives.exit_prob)?;
    Ok(model.aggregates(p, &mu)?.q_bar)
}

/// `AC̄(p, Λ(b_k,δ))` on a product grid of prices and boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct AcSurface {
    pub prices: Vec<f64>,
    pub boundaries: Vec<f64>,
    /// Row `k` holds the curve for boundary `k`; infinite where nothing is produced.
    pub values: Vec<f64>,
    pub min_value: f64,
    pub min_price_index: usize,
    pub min_boundary_index: usize,
}

impl AcSurface {
    pub fn curve(&self, k: usize) -> &[f64] {
        let n = self.prices.len();
        &self.values[k * n..(k + 1) * n]
    }
}

pub fn ac_surface(model: &Model, prices: &[f64]) -> Result<AcSurface> {
    let d = &model.grid;
    let g = d.cells();
    let mut sweep = ResolventSweep::new(d, model.effective_survival())?;
    let mut lambdas = Vec::with_capacity(g + 1);
    for k in 0..=g {
        lambdas.push(sweep.solve(d.entrants())?);
        if k < g {
            sweep.advance()?;
        }
    }
    let np = prices.len();
    let mut values = alloc::vec![f64::INFINITY; (g + 1) * np];
    for (i, &p) in prices.iter().enumerate() {
        let stats = model.statics(p)?;
        for (k, l) in lambdas.iter().enumerate() {
            values[k * np + i] = aggregates_from(&stats, l, model.primitives.entry_cost).ac_or_inf();
        }
    }
    let (mut best, mut bi, mut bk) = (f64::INFINITY, 0, 0);
    for k in 0..=g {
        for i in 0..np {
            if values[k * np + i] < best {
                best = values[k * np + i];
                bi = i;
                bk = k;
            }
        }
    }
    Ok(AcSurface {
        prices: prices.to_vec(),
        boundaries: d.boundaries(),
        values,
        min_value: best,
        min_price_index: bi,
        min_boundary_index: bk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::fixtures::fixture_c;
    use crate::primitives::{CostSpec, DemandSpec};

    fn fixture_c_model(cells: usize) -> Model {
        Model::new(fixture_c(), cells, SolverOptions::default()).unwrap()
    }

    #[test]
    fn single_type_model_prices_at_minimum_average_cost() {
        let mut p = fixture_c();
        p.cost = CostSpec::quadratic(1.0, 2.0, 0.0);
        let model = Model::new(p, 41, SolverOptions::default()).unwrap();
        let s = solve_lrce(&model).unwrap();
        assert!((s.price - 2.0).abs() < 1e-8);
        assert!((s.quantity - 8.0).abs() < 1e-8);
        assert!(s.diagnostics.average_firm_profit.abs() < 1e-8);
        assert_eq!(s.diagnostics.threshold_kind, ThresholdKind::Upper);
    }

    #[test]
    fn entry_cost_raises_the_entry_price() {
        let model = fixture_c_model(41);
        let m = model.grid.boundary(20);
        let base = entry_price(&model, m).unwrap();
        let mut costly = model.clone();
        costly.primitives.entry_cost = 0.5;
        assert!(entry_price(&costly, m).unwrap() > base);
    }

    #[test]
    fn swept_schedules_match_direct_evaluation() {
        let model = fixture_c_model(30);
        let s = schedules(&model).unwrap();
        for k in [0, 7, 15, 30] {
            let m = model.grid.boundary(k);
            assert!((s.entry_price[k] - entry_price(&model, m).unwrap()).abs() < 1e-12);
            assert!((s.exit_residual[k] - exit_residual(&model, m).unwrap()).abs() < 1e-11);
        }
    }

    #[test]
    fn fixture_c_solution_satisfies_its_conditions() {
        let model = fixture_c_model(61);
        let s = solve_lrce(&model).unwrap();
        let dg = &s.diagnostics;
        assert_eq!(dg.threshold_kind, ThresholdKind::Interior);
        assert!(dg.entry_residual.abs() < 1e-10);
        assert!(dg.exit_residual.abs() < 1e-9);
        assert!(dg.market_clearing_gap < 1e-12);
        assert!((dg.average_cost - s.price).abs() < 1e-10);
        assert!((dg.min_average_cost - s.price).abs() < 1e-10);
        assert!(dg.perceived_physical_gap > 1e-3);
        assert_eq!(dg.sign_changes, 1);
        assert!(s.entrant_mass > 0.0 && s.quantity > 0.0);
    }

    #[test]
    fn low_choke_price_has_no_active_equilibrium() {
        let mut p = fixture_c();
        p.cost = CostSpec::quadratic(1.0, 2.0, 0.0);
        p.demand = DemandSpec::linear(1.5, 1.0);
        let (model, _) = Model::unvalidated(p, 21, SolverOptions::default()).unwrap();
        assert!(matches!(solve_lrce(&model), Err(Error::NoActiveEquilibrium { .. })));
    }

    #[test]
    fn supply_rejects_nonpositive_quantities() {
        let model = fixture_c_model(11);
        assert!(long_run_supply(&model, 0.0).is_err());
        let s = aggregate_supply(2.0, 0.0, 2.0, &model).unwrap();
        assert_eq!(s, 0.0);
        let one = aggregate_supply(2.0, 1.0, 2.0, &model).unwrap();
        let two = aggregate_supply(2.0, 2.0, 2.0, &model).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-12);
    }
}
