//! Model primitives: costs, demand, type transitions, entrant draws and the
//! timing parameters, together with the numerical assumption checks.
//!
//! The parametric families here are defaults. Everything downstream consumes
//! only `C`, `C'`, `Q^d`, the discretized kernel and the entrant weights.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::firm;
use crate::numeric::adaptive_simpson;

/// Output quantities at which the cost assumptions are sampled.
const Q_SAMPLES: [f64; 9] = [0.0, 1e-3, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 100.0];
/// Output at which marginal cost must exceed the demand choke price.
pub const Q_BIG: f64 = 1e6;
/// Number of type samples used by the checks.
const TYPE_SAMPLES: usize = 65;

/// Variable part of the cost function. Scale parameters may tilt with the type.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum VariableCost {
    /// `linear*q + (curvature + curvature_slope*θ) q²/2`.
    Quadratic {
        curvature: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        curvature_slope: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        linear: f64,
    },
    /// `(scale + scale_slope*θ) q^γ / γ` with `γ > 1`.
    Power {
        scale: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        scale_slope: f64,
        exponent: f64,
    },
}

impl VariableCost {
    pub fn quadratic(curvature: f64) -> Self {
        VariableCost::Quadratic { curvature, curvature_slope: 0.0, linear: 0.0 }
    }

    fn scale(&self, theta: f64) -> f64 {
        match *self {
            VariableCost::Quadratic { curvature, curvature_slope, .. } => curvature + curvature_slope * theta,
            VariableCost::Power { scale, scale_slope, .. } => scale + scale_slope * theta,
        }
    }

    pub fn value(&self, q: f64, theta: f64) -> f64 {
        let s = self.scale(theta);
        match *self {
            VariableCost::Quadratic { linear, .. } => linear * q + 0.5 * s * q * q,
            VariableCost::Power { exponent, .. } => s * libm::pow(q, exponent) / exponent,
        }
    }

    pub fn marginal(&self, q: f64, theta: f64) -> f64 {
        let s = self.scale(theta);
        match *self {
            VariableCost::Quadratic { linear, .. } => linear + s * q,
            VariableCost::Power { exponent, .. } => s * libm::pow(q, exponent - 1.0),
        }
    }

    pub fn second(&self, q: f64, theta: f64) -> f64 {
        let s = self.scale(theta);
        match *self {
            VariableCost::Quadratic { .. } => s,
            VariableCost::Power { exponent, .. } => s * (exponent - 1.0) * libm::pow(q, exponent - 2.0),
        }
    }
}

/// Fixed cost `g(θ) = intercept + slope*θ`, sunk each period the firm stays.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct FixedCost {
    #[cfg_attr(feature = "serde", serde(default))]
    pub intercept: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub slope: f64,
}

impl FixedCost {
    pub fn value(&self, theta: f64) -> f64 {
        self.intercept + self.slope * theta
    }
}

/// Total cost `C(q,θ) = variable(q,θ) + g(θ)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CostSpec {
    pub variable: VariableCost,
    pub fixed: FixedCost,
}

impl CostSpec {
    /// The canonical family `a q²/2 + g(θ)`.
    pub fn quadratic(curvature: f64, fixed_intercept: f64, fixed_slope: f64) -> Self {
        Self {
            variable: VariableCost::quadratic(curvature),
            fixed: FixedCost { intercept: fixed_intercept, slope: fixed_slope },
        }
    }

    pub fn total(&self, q: f64, theta: f64) -> f64 {
        self.variable.value(q, theta) + self.fixed.value(theta)
    }

    pub fn marginal(&self, q: f64, theta: f64) -> f64 {
        self.variable.marginal(q, theta)
    }

    pub fn second(&self, q: f64, theta: f64) -> f64 {
        self.variable.second(q, theta)
    }
}

/// Product demand with a finite choke price.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum DemandSpec {
    /// `Q = max(0, intercept - slope*p)`.
    Linear { intercept: f64, slope: f64 },
    /// `Q = scale (1 - p/choke)^exponent` below the choke price.
    Power { scale: f64, choke: f64, exponent: f64 },
}

impl DemandSpec {
    pub fn linear(intercept: f64, slope: f64) -> Self {
        DemandSpec::Linear { intercept, slope }
    }

    pub fn choke_price(&self) -> f64 {
        match *self {
            DemandSpec::Linear { intercept, slope } => intercept / slope,
            DemandSpec::Power { choke, .. } => choke,
        }
    }

    pub fn quantity(&self, p: f64) -> f64 {
        match *self {
            DemandSpec::Linear { intercept, slope } => (intercept - slope * p).max(0.0),
            DemandSpec::Power { scale, choke, exponent } => {
                if p >= choke {
                    0.0
                } else {
                    scale * libm::pow(1.0 - p.max(0.0) / choke, exponent)
                }
            }
        }
    }

    /// Inverse demand `P^d(Q)`, zero beyond the saturation quantity.
    pub fn inverse(&self, quantity: f64) -> f64 {
        match *self {
            DemandSpec::Linear { intercept, slope } => ((intercept - quantity) / slope).max(0.0),
            DemandSpec::Power { scale, choke, exponent } => {
                if quantity >= scale {
                    0.0
                } else {
                    choke * (1.0 - libm::pow(quantity.max(0.0) / scale, 1.0 / exponent))
                }
            }
        }
    }

    /// Gross consumer benefit `∫_0^Q P^d`.
    pub fn consumer_integral(&self, quantity: f64) -> f64 {
        match *self {
            DemandSpec::Linear { intercept, slope } => {
                let q = quantity.min(intercept);
                (intercept * q - 0.5 * q * q) / slope
            }
            DemandSpec::Power { .. } => adaptive_simpson(|x| self.inverse(x), 0.0, quantity, 1e-8),
        }
    }
}

/// Transition kernel `F(·|θ)` over types.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum KernelSpec {
    /// Normal with mean `persistence*θ + (1-persistence)*center`, truncated to the type interval.
    TruncatedNormal { persistence: f64, center: f64, sigma: f64 },
    /// Types never change. Violates full support; only for permanent-type surrogates.
    Permanent,
}

impl KernelSpec {
    pub fn mean(&self, theta: f64) -> f64 {
        match *self {
            KernelSpec::TruncatedNormal { persistence, center, sigma: _ } => {
                persistence * theta + (1.0 - persistence) * center
            }
            KernelSpec::Permanent => theta,
        }
    }

    /// Log of the untruncated density kernel at `next` given `current`, up to a constant.
    pub(crate) fn log_weight(&self, next: f64, current: f64) -> Option<f64> {
        match *self {
            KernelSpec::TruncatedNormal { sigma, .. } => {
                let z = (next - self.mean(current)) / sigma;
                Some(-0.5 * z * z)
            }
            KernelSpec::Permanent => None,
        }
    }

    /// Conditional density `f(next|current)` on `[low, high]`.
    pub fn density(&self, next: f64, current: f64, low: f64, high: f64) -> Option<f64> {
        match *self {
            KernelSpec::TruncatedNormal { sigma, .. } => {
                Some(truncated_normal_pdf(next, self.mean(current), sigma, low, high))
            }
            KernelSpec::Permanent => None,
        }
    }

    /// Conditional cdf `F(x|current)` on `[low, high]`.
    pub fn cdf(&self, x: f64, current: f64, low: f64, high: f64) -> f64 {
        match *self {
            KernelSpec::TruncatedNormal { sigma, .. } => {
                truncated_normal_cdf(x, self.mean(current), sigma, low, high)
            }
            KernelSpec::Permanent => {
                if x >= current {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Distribution of an entrant's first type.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum EntrantSpec {
    Uniform,
    TruncatedNormal { mean: f64, sigma: f64 },
}

impl EntrantSpec {
    pub fn density(&self, theta: f64, low: f64, high: f64) -> f64 {
        if theta < low || theta > high {
            return 0.0;
        }
        match *self {
            EntrantSpec::Uniform => 1.0 / (high - low),
            EntrantSpec::TruncatedNormal { mean, sigma } => truncated_normal_pdf(theta, mean, sigma, low, high),
        }
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

fn truncated_normal_pdf(x: f64, mean: f64, sigma: f64, low: f64, high: f64) -> f64 {
    if x < low || x > high {
        return 0.0;
    }
    let mass = normal_cdf((high - mean) / sigma) - normal_cdf((low - mean) / sigma);
    let z = (x - mean) / sigma;
    libm::exp(-0.5 * z * z) / (sigma * libm::sqrt(2.0 * core::f64::consts::PI) * mass)
}

fn truncated_normal_cdf(x: f64, mean: f64, sigma: f64, low: f64, high: f64) -> f64 {
    if x <= low {
        return 0.0;
    }
    if x >= high {
        return 1.0;
    }
    let lo = normal_cdf((low - mean) / sigma);
    let mass = normal_cdf((high - mean) / sigma) - lo;
    (normal_cdf((x - mean) / sigma) - lo) / mass
}

/// Everything that defines the industry.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ModelPrimitives {
    pub type_low: f64,
    pub type_high: f64,
    pub cost: CostSpec,
    pub demand: DemandSpec,
    pub kernel: KernelSpec,
    pub entrants: EntrantSpec,
    /// Discount factor δ.
    pub discount: f64,
    /// Exogenous exit probability ρ.
    pub exit_prob: f64,
    /// One-time entry cost κ.
    pub entry_cost: f64,
}

impl ModelPrimitives {
    /// Survival factor used by entrants when valuing the future, `δ(1-ρ)`.
    pub fn effective_survival(&self) -> f64 {
        self.discount * (1.0 - self.exit_prob)
    }

    /// Survival factor of the actual cross-section, `1-ρ`.
    pub fn physical_survival(&self) -> f64 {
        1.0 - self.exit_prob
    }
}

/// Identifiers of the individual model assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Check {
    Demand,
    CostShape,
    CostIncreasingInType,
    MarginalCostUnbounded,
    StochasticDominance,
    PositiveExitProbability,
    KernelFullSupport,
    EntrantDensity,
    ProfitableEntryAtChoke,
}

impl Check {
    pub fn label(&self) -> &'static str {
        match self {
            Check::Demand => "A1 demand continuous, decreasing below the choke price, zero above",
            Check::CostShape => "A2 C >= 0, C' >= 0, C'' > 0",
            Check::CostIncreasingInType => "A2 C(q,.) is increasing",
            Check::MarginalCostUnbounded => "A2 marginal cost unbounded",
            Check::StochasticDominance => "A3 transitions ordered by first-order stochastic dominance",
            Check::PositiveExitProbability => "A4 exogenous probability of exit is positive",
            Check::KernelFullSupport => "A5 transition density has full support",
            Check::EntrantDensity => "A5 entrant density positive and integrates to one",
            Check::ProfitableEntryAtChoke => "A6 pi(v, theta_H) > kappa",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckResult {
    pub check: Check,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn result(&self, check: Check) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == check)
    }
}

fn structural(check: &'static str, detail: String) -> Error {
    Error::Structural { check, detail }
}

fn check_structure(m: &ModelPrimitives) -> Result<()> {
    if !(m.type_low.is_finite() && m.type_high.is_finite() && m.type_low < m.type_high) {
        return Err(structural(
            "type interval",
            format!("need theta_L < theta_H, got [{}, {}]", m.type_low, m.type_high),
        ));
    }
    if !(m.exit_prob > 0.0 && m.exit_prob <= 1.0) {
        return Err(structural(
            Check::PositiveExitProbability.label(),
            format!("exit probability rho = {} must lie in (0, 1]", m.exit_prob),
        ));
    }
    if !(0.0..=1.0).contains(&m.discount) {
        return Err(structural("discount factor", format!("delta = {} must lie in [0, 1]", m.discount)));
    }
    if !(m.entry_cost >= 0.0 && m.entry_cost.is_finite()) {
        return Err(structural("entry cost", format!("kappa = {} must be finite and >= 0", m.entry_cost)));
    }
    if let KernelSpec::TruncatedNormal { sigma, persistence, center } = m.kernel {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(structural("kernel scale", format!("sigma = {sigma} must be positive")));
        }
        if !(persistence.is_finite() && center.is_finite()) {
            return Err(structural("kernel mean", String::from("persistence and center must be finite")));
        }
    }
    if let EntrantSpec::TruncatedNormal { sigma, mean } = m.entrants {
        if !(sigma > 0.0 && sigma.is_finite() && mean.is_finite()) {
            return Err(structural("entrant density", format!("sigma = {sigma} must be positive")));
        }
    }
    match m.demand {
        DemandSpec::Linear { intercept, slope } => {
            if !(intercept > 0.0 && slope > 0.0 && intercept.is_finite() && slope.is_finite()) {
                return Err(structural(
                    Check::Demand.label(),
                    format!("linear demand needs intercept > 0 and slope > 0, got {intercept}, {slope}"),
                ));
            }
        }
        DemandSpec::Power { scale, choke, exponent } => {
            if !(scale > 0.0 && choke > 0.0 && exponent > 0.0) {
                return Err(structural(
                    Check::Demand.label(),
                    String::from("power demand needs positive scale, choke and exponent"),
                ));
            }
        }
    }
    if let VariableCost::Power { exponent, .. } = m.cost.variable {
        if !(exponent > 1.0) {
            return Err(structural("variable cost", format!("power exponent {exponent} must exceed 1")));
        }
    }
    Ok(())
}

fn type_samples(m: &ModelPrimitives) -> Vec<f64> {
    let n = TYPE_SAMPLES - 1;
    (0..=n)
        .map(|k| m.type_low + (m.type_high - m.type_low) * k as f64 / n as f64)
        .collect()
}

/// Checks every model assumption numerically.
///
/// Structural problems (empty type interval, `ρ ≤ 0`, `σ ≤ 0`, parameters
/// outside their domains) return an error naming the violated requirement.
/// Otherwise the report lists each assumption with a witness.
pub fn validate_primitives(m: &ModelPrimitives, tol: f64) -> Result<ValidationReport> {
    check_structure(m)?;
    let thetas = type_samples(m);
    let interior = &thetas[1..thetas.len() - 1];
    let mut checks = Vec::new();

    // A1
    let v = m.demand.choke_price();
    let mut demand_ok = v > 0.0 && m.demand.quantity(v) == 0.0 && m.demand.quantity(2.0 * v) == 0.0;
    let mut witness = format!("choke price v = {v}");
    let mut prev = m.demand.quantity(0.0);
    for k in 1..64 {
        let p = v * k as f64 / 64.0;
        let q = m.demand.quantity(p);
        if !(q < prev) || !q.is_finite() {
            demand_ok = false;
            witness = format!("Q^d not strictly decreasing at p = {p}");
            break;
        }
        prev = q;
    }
    checks.push(CheckResult { check: Check::Demand, passed: demand_ok, detail: witness });

    // A2 shape
    let mut shape = (true, String::from("C >= 0, C' >= 0, C'' > 0 on all samples"));
    'shape: for &t in &thetas {
        for &q in &Q_SAMPLES {
            let (c, c1, c2) = (m.cost.total(q, t), m.cost.marginal(q, t), m.cost.second(q, t));
            if c < -tol || c1 < -tol || !(c2 > 0.0) {
                shape = (false, format!("at theta = {t}, q = {q}: C = {c}, C' = {c1}, C'' = {c2}"));
                break 'shape;
            }
        }
    }
    checks.push(CheckResult { check: Check::CostShape, passed: shape.0, detail: shape.1 });

    let mut increasing = (true, String::from("C(q, theta) nondecreasing in theta on all samples"));
    'inc: for w in thetas.windows(2) {
        for &q in &Q_SAMPLES {
            let (c0, c1) = (m.cost.total(q, w[0]), m.cost.total(q, w[1]));
            if c0 > c1 + tol {
                increasing = (
                    false,
                    format!("C({q}, {}) = {c0} > C({q}, {}) = {c1}", w[0], w[1]),
                );
                break 'inc;
            }
        }
    }
    checks.push(CheckResult { check: Check::CostIncreasingInType, passed: increasing.0, detail: increasing.1 });

    let min_mc = thetas
        .iter()
        .map(|&t| m.cost.marginal(Q_BIG, t))
        .fold(f64::INFINITY, f64::min);
    checks.push(CheckResult {
        check: Check::MarginalCostUnbounded,
        passed: min_mc > v,
        detail: format!("min over types of C'({Q_BIG:e}, theta) = {min_mc} vs choke price {v}"),
    });

    // A3
    let fosd = match m.kernel {
        KernelSpec::Permanent => (
            false,
            String::from("permanent types: F(.|theta) is a point mass, strict dominance fails at interior types"),
        ),
        KernelSpec::TruncatedNormal { .. } => {
            let mut out = (true, String::from("F(x|theta') < F(x|theta) for sampled theta < theta'"));
            'fosd: for w in thetas.windows(2) {
                for &x in interior {
                    let lo = m.kernel.cdf(x, w[0], m.type_low, m.type_high);
                    let hi = m.kernel.cdf(x, w[1], m.type_low, m.type_high);
                    let saturated = lo <= tol || hi >= 1.0 - tol;
                    if hi > lo + tol || (!saturated && !(hi < lo)) {
                        out = (false, format!("F({x}|{}) = {hi} vs F({x}|{}) = {lo}", w[1], w[0]));
                        break 'fosd;
                    }
                }
            }
            out
        }
    };
    checks.push(CheckResult { check: Check::StochasticDominance, passed: fosd.0, detail: fosd.1 });

    // A4, structurally guaranteed at this point
    checks.push(CheckResult {
        check: Check::PositiveExitProbability,
        passed: true,
        detail: format!("rho = {}", m.exit_prob),
    });

    // A5
    let support = match m.kernel {
        KernelSpec::Permanent => (false, String::from("permanent types have no transition density")),
        KernelSpec::TruncatedNormal { .. } => {
            let mut out = (true, String::from("f(theta'|theta) > 0 on sampled interior pairs"));
            'sup: for &t in &thetas {
                for &x in interior {
                    let f = m.kernel.density(x, t, m.type_low, m.type_high).unwrap_or(0.0);
                    if !(f > 0.0) || !f.is_finite() {
                        out = (false, format!("f({x}|{t}) = {f}"));
                        break 'sup;
                    }
                }
            }
            out
        }
    };
    checks.push(CheckResult { check: Check::KernelFullSupport, passed: support.0, detail: support.1 });

    let min_entrant = thetas
        .iter()
        .map(|&t| m.entrants.density(t, m.type_low, m.type_high))
        .fold(f64::INFINITY, f64::min);
    let integral = adaptive_simpson(
        |t| m.entrants.density(t, m.type_low, m.type_high),
        m.type_low,
        m.type_high,
        1e-10,
    );
    checks.push(CheckResult {
        check: Check::EntrantDensity,
        passed: min_entrant > 0.0 && (integral - 1.0).abs() <= 1e-6,
        detail: format!("min density {min_entrant}, integral {integral}"),
    });

    // A6
    let a6 = match firm::profit(v, m.type_high, &m.cost, 1e-12) {
        Ok(pi) => (pi > m.entry_cost, format!("pi(v, theta_H) = {pi} vs kappa = {}", m.entry_cost)),
        Err(e) => (false, format!("profit at the choke price failed: {e}")),
    };
    checks.push(CheckResult { check: Check::ProfitableEntryAtChoke, passed: a6.0, detail: a6.1 });

    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport { checks, passed })
}
