//! Measures over types, the truncated transition operator `Φ_m` and its
//! resolvent, and price-weighted aggregates.
//!
//! `Φ_m[η]_j = Σ_i w_i(m) η_i K_ij` moves the mass of stayers one period
//! forward. `Λ = (I - ϱΦ_m)^{-1} s` is the discounted occupation measure of
//! a cohort seeded by `s`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::firm::PriceStatics;
use crate::grid::DiscretizedModel;
use crate::linalg::DenseLu;
use crate::numeric::{dot, NeumaierSum};
use crate::primitives::CostSpec;

/// Bound on the sup-norm residual of every certified resolvent solve.
pub const RESIDUAL_BOUND: f64 = 1e-10;

/// Nonnegative mass per grid cell.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct TypeMeasure {
    pub weights: Vec<f64>,
}

impl TypeMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("measure weight {i} is {}", weights[i])));
        }
        Ok(Self { weights })
    }

    pub fn zero(cells: usize) -> Self {
        Self { weights: vec![0.0; cells] }
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().copied().collect::<NeumaierSum>().value()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { weights: self.weights.iter().map(|w| w * factor).collect() }
    }

    /// Probability weights; the zero measure stays zero.
    pub fn normalized(&self) -> Self {
        let m = self.mass();
        if m > 0.0 {
            self.scaled(1.0 / m)
        } else {
            self.clone()
        }
    }

    /// Mass divided by the cell width.
    pub fn density(&self, h: f64) -> Vec<f64> {
        self.weights.iter().map(|w| w / h).collect()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Weighted profit, quantity and cost of a measure at one price.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AggregateBundle {
    pub pi_bar: f64,
    pub q_bar: f64,
    /// Includes the entry cost once.
    pub c_bar: f64,
    /// `None` when nothing is produced (average cost is infinite).
    pub ac_bar: Option<f64>,
}

impl AggregateBundle {
    pub fn ac_or_inf(&self) -> f64 {
        self.ac_bar.unwrap_or(f64::INFINITY)
    }
}

/// `Φ_m[η]`.
pub fn apply_phi(eta: &TypeMeasure, m: f64, d: &DiscretizedModel) -> TypeMeasure {
    TypeMeasure { weights: phi(d, &d.stay_weights(m), &eta.weights) }
}

fn phi(d: &DiscretizedModel, w: &[f64], eta: &[f64]) -> Vec<f64> {
    let g = d.cells();
    let mut out = vec![0.0; g];
    for i in 0..g {
        let a = w[i] * eta[i];
        if a != 0.0 {
            for (o, k) in out.iter_mut().zip(d.kernel_row(i)) {
                *o += a * k;
            }
        }
    }
    out
}

/// `sup |λ - s - ϱΦ[λ]|`.
pub fn transition_residual(d: &DiscretizedModel, w: &[f64], varrho: f64, seed: &[f64], lambda: &[f64]) -> f64 {
    let moved = phi(d, w, lambda);
    lambda
        .iter()
        .zip(seed)
        .zip(&moved)
        .map(|((l, s), p)| (l - s - varrho * p).abs())
        .fold(0.0, f64::max)
}

fn check_varrho(varrho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&varrho) {
        return Err(Error::InvalidArgument(format!("survival factor {varrho} must lie in [0, 1)")));
    }
    Ok(())
}

/// Row-major `I - ϱ Kᵀ W`, acting on column vectors of cell masses.
fn resolvent_matrix(d: &DiscretizedModel, w: &[f64], varrho: f64) -> Vec<f64> {
    let g = d.cells();
    let k = d.kernel();
    let mut a = vec![0.0; g * g];
    for j in 0..g {
        for i in 0..g {
            a[j * g + i] = -varrho * w[i] * k[i * g + j];
        }
        a[j * g + j] += 1.0;
    }
    a
}

/// Solves `λ = s + ϱ Φ_m[λ]` by dense LU and certifies the residual.
pub fn resolvent_solve(d: &DiscretizedModel, m: f64, varrho: f64, seed: &[f64]) -> Result<TypeMeasure> {
    check_varrho(varrho)?;
    let w = d.stay_weights(m);
    let lu = DenseLu::factor(d.cells(), resolvent_matrix(d, &w, varrho))?;
    let lambda: Vec<f64> = lu.solve(seed).into_iter().map(|x| x.max(0.0)).collect();
    let residual = transition_residual(d, &w, varrho, seed, &lambda);
    if residual > RESIDUAL_BOUND {
        return Err(Error::ResidualTooLarge { what: "resolvent solve", residual });
    }
    Ok(TypeMeasure { weights: lambda })
}

/// `Λ(m,δ) = (I - ϱΦ_m)^{-1} ν̂`.
pub fn lambda_entry(m: f64, varrho: f64, d: &DiscretizedModel) -> Result<TypeMeasure> {
    resolvent_solve(d, m, varrho, d.entrants())
}

/// `Λ_X(m,δ) = (I - ϱΦ_m)^{-1} F̂(·|m)`, seeded by the row out of the marginal type.
pub fn lambda_exit(m: f64, varrho: f64, d: &DiscretizedModel, kernel_at_m: &[f64]) -> Result<TypeMeasure> {
    resolvent_solve(d, m, varrho, kernel_at_m)
}

/// Physical cross-section `μ(n,m) = n Λ(m, ϱ = 1-ρ)`.
pub fn steady_state_measure(n: f64, m: f64, d: &DiscretizedModel, exit_prob: f64) -> Result<TypeMeasure> {
    if !(n >= 0.0) {
        return Err(Error::InvalidArgument(format!("entrant mass {n} is negative")));
    }
    Ok(lambda_entry(m, 1.0 - exit_prob, d)?.scaled(n))
}

/// Truncated series `Σ_{j≤J} ϱ^j Φ_m^j[s]` and the bound `ϱ^{J+1} mass(s)/(1-ϱ)` on its tail.
pub fn neumann_series(d: &DiscretizedModel, m: f64, varrho: f64, seed: &[f64], terms: usize) -> (TypeMeasure, f64) {
    let w = d.stay_weights(m);
    let mut term = seed.to_vec();
    let mut sum = seed.to_vec();
    for _ in 0..terms {
        term = phi(d, &w, &term).into_iter().map(|x| varrho * x).collect();
        sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
    }
    let mass: f64 = seed.iter().sum();
    let tail = libm::pow(varrho, (terms + 1) as f64) * mass / (1.0 - varrho);
    (TypeMeasure { weights: sum }, tail)
}

/// Aggregates from precomputed per-cell statics.
pub fn aggregates_from(stats: &PriceStatics, eta: &[f64], kappa: f64) -> AggregateBundle {
    let pi_bar = dot(&stats.profit, eta);
    let q_bar = dot(&stats.quantity, eta);
    let c_bar = dot(&stats.cost, eta) + kappa;
    AggregateBundle { pi_bar, q_bar, c_bar, ac_bar: (q_bar > 0.0).then(|| c_bar / q_bar) }
}

/// `π̄`, `q̄`, `C̄` (with `κ`) and `AC̄ = C̄/q̄` of `η` at price `p`.
pub fn weighted_aggregates(
    p: f64,
    eta: &TypeMeasure,
    cost: &CostSpec,
    kappa: f64,
    d: &DiscretizedModel,
    tol: f64,
) -> Result<AggregateBundle> {
    let stats = PriceStatics::new(p, d.midpoints(), cost, tol)?;
    Ok(aggregates_from(&stats, &eta.weights, kappa))
}

/// Explicit resolvent `B_k = (I - ϱKᵀW_k)^{-1}` for the boundary thresholds
/// `b_0, b_1, …`, advanced by rank-one updates.
///
/// Moving from `b_k` to `b_{k+1}` adds cell `k` to the stay set, which
/// subtracts `u e_kᵀ` with `u = ϱ K[k,·]ᵀ`. Inside the cell the weight `t`
/// of cell `k` enters the same way, so fractional thresholds cost two
/// matrix-vector products.
#[derive(Debug, Clone)]
pub struct ResolventSweep<'a> {
    d: &'a DiscretizedModel,
    varrho: f64,
    k: usize,
    inv: Vec<f64>,
}

impl<'a> ResolventSweep<'a> {
    /// Starts at `b_0 = θ_L`, where nobody stays and `B_0 = I`.
    pub fn new(d: &'a DiscretizedModel, varrho: f64) -> Result<Self> {
        check_varrho(varrho)?;
        let g = d.cells();
        let mut inv = vec![0.0; g * g];
        for i in 0..g {
            inv[i * g + i] = 1.0;
        }
        Ok(Self { d, varrho, k: 0, inv })
    }

    /// Starts at boundary `b_k` by a dense inversion.
    pub fn at(d: &'a DiscretizedModel, varrho: f64, k: usize) -> Result<Self> {
        check_varrho(varrho)?;
        let mut s = Self { d, varrho, k, inv: Vec::new() };
        s.rebuild()?;
        Ok(s)
    }

    fn rebuild(&mut self) -> Result<()> {
        let w = self.d.stay_weights(self.d.boundary(self.k));
        let lu = DenseLu::factor(self.d.cells(), resolvent_matrix(self.d, &w, self.varrho))?;
        self.inv = lu.inverse();
        Ok(())
    }

    pub fn index(&self) -> usize {
        self.k
    }

    pub fn threshold(&self) -> f64 {
        self.d.boundary(self.k)
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        crate::linalg::mat_vec(self.d.cells(), &self.inv, x)
    }

    fn boundary_weights(&self) -> Vec<f64> {
        (0..self.d.cells()).map(|i| if i < self.k { 1.0 } else { 0.0 }).collect()
    }

    /// `B_k s`, certified against the boundary equation; rebuilds `B_k` once if it drifted.
    pub fn solve(&mut self, seed: &[f64]) -> Result<Vec<f64>> {
        let w = self.boundary_weights();
        let mut lambda = self.mul(seed);
        let mut residual = transition_residual(self.d, &w, self.varrho, seed, &lambda);
        if residual > RESIDUAL_BOUND {
            self.rebuild()?;
            lambda = self.mul(seed);
            residual = transition_residual(self.d, &w, self.varrho, seed, &lambda);
            if residual > RESIDUAL_BOUND {
                return Err(Error::ResidualTooLarge { what: "resolvent sweep", residual });
            }
        }
        Ok(lambda.into_iter().map(|x| x.max(0.0)).collect())
    }

    fn update_vector(&self) -> Vec<f64> {
        let row = self.d.kernel_row(self.k);
        let u: Vec<f64> = row.iter().map(|x| self.varrho * x).collect();
        self.mul(&u)
    }

    /// Resolvent applied to `seed` with cell `k` staying with weight `t ∈ [0,1]`.
    pub fn fractional(&self, seed: &[f64], t: f64) -> Result<Vec<f64>> {
        if self.k >= self.d.cells() {
            return Err(Error::InvalidArgument(String::from("no cell above the last boundary")));
        }
        let y = self.mul(seed);
        let z = self.update_vector();
        let k = self.k;
        let denom = 1.0 - t * z[k];
        if !(denom > 0.0) {
            return Err(Error::SingularSystem { pivot: k });
        }
        let c = t * y[k] / denom;
        Ok(y.iter().zip(&z).map(|(y, z)| (y + c * z).max(0.0)).collect())
    }

    /// Moves to `b_{k+1}`.
    pub fn advance(&mut self) -> Result<()> {
        let g = self.d.cells();
        if self.k >= g {
            return Err(Error::InvalidArgument(String::from("sweep is already at the upper boundary")));
        }
        let z = self.update_vector();
        let k = self.k;
        let denom = 1.0 - z[k];
        if !(denom > 0.0) {
            return Err(Error::SingularSystem { pivot: k });
        }
        let row_k: Vec<f64> = self.inv[k * g..(k + 1) * g].iter().map(|x| x / denom).collect();
        for r in 0..g {
            let zr = z[r];
            if zr != 0.0 {
                for (b, rk) in self.inv[r * g..(r + 1) * g].iter_mut().zip(&row_k) {
                    *b += zr * rk;
                }
            }
        }
        self.k += 1;
        Ok(())
    }
}
