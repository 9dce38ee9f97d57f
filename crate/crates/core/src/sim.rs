//! Firm-level Monte Carlo of the stationary industry at a fixed price and threshold.
//!
//! Every period `entrants` firms are born with types drawn from the entrant
//! weights. A firm produces, then stays with probability `w(m)` of its cell,
//! survives exogenous death with probability `1-ρ`, and draws next period's
//! type from its kernel row. Each firm owns a ChaCha8 stream keyed by its
//! birth period and index, so results do not depend on how firms are split
//! across workers. Cohort sums are merged in birth order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::Model;
use crate::error::{Error, Result};
use crate::measure::TypeMeasure;
use crate::numeric::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub entrants: u32,
    pub periods: u32,
    pub burn_in: u32,
    pub seed: u64,
    pub threshold: f64,
    pub price: f64,
}

/// `ceil(ln 0.001 / ln(1-ρ))`: periods until the initial cohort decays below 0.1%.
pub fn default_burn_in(exit_prob: f64) -> u32 {
    if exit_prob >= 1.0 {
        return 0;
    }
    libm::ceil(libm::log(0.001) / libm::log(1.0 - exit_prob)) as u32
}

impl SimConfig {
    fn check(&self) -> Result<()> {
        if self.entrants == 0 {
            return Err(Error::InvalidArgument("need at least one entrant per period".into()));
        }
        if self.periods <= self.burn_in {
            return Err(Error::InvalidArgument(format!(
                "periods {} must exceed burn-in {}",
                self.periods, self.burn_in
            )));
        }
        Ok(())
    }

    /// Firm-periods recorded after burn-in in steady state, roughly.
    pub fn window(&self) -> u32 {
        self.periods - self.burn_in
    }
}

/// Discounted lifetime profits of one birth cohort.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CohortStats {
    pub firms: u64,
    pub npv: NeumaierSum,
    pub npv_squared: NeumaierSum,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PanelStats {
    pub config: SimConfig,
    /// Firm-periods per cell over `[burn_in, periods)`.
    pub histogram: Vec<u64>,
    /// Firms present in each period.
    pub alive: Vec<u64>,
    /// Firms present in each period that continue into the next.
    pub stayers: Vec<u64>,
    /// Indexed by birth period.
    pub cohorts: Vec<CohortStats>,
}

/// Mean and batch-means standard error of the entrant NPV.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NpvEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub firms: u64,
    pub batches: usize,
}

impl PanelStats {
    fn empty(cfg: SimConfig, cells: usize) -> Self {
        let t = cfg.periods as usize;
        Self {
            config: cfg,
            histogram: vec![0; cells],
            alive: vec![0; t],
            stayers: vec![0; t],
            cohorts: vec![CohortStats::default(); t],
        }
    }

    /// Combines runs over disjoint sets of birth periods.
    pub fn merge(&mut self, other: &PanelStats) {
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
        for (a, b) in self.alive.iter_mut().zip(&other.alive) {
            *a += b;
        }
        for (a, b) in self.stayers.iter_mut().zip(&other.stayers) {
            *a += b;
        }
        for (a, b) in self.cohorts.iter_mut().zip(&other.cohorts) {
            if b.firms == 0 {
                continue;
            }
            if a.firms == 0 {
                *a = *b;
            } else {
                a.firms += b.firms;
                a.npv.merge(&b.npv);
                a.npv_squared.merge(&b.npv_squared);
            }
        }
    }

    pub fn firm_periods(&self) -> u64 {
        self.histogram.iter().sum()
    }

    fn window(&self) -> Range<usize> {
        self.config.burn_in as usize..self.config.periods as usize
    }

    pub fn mean_firm_count(&self) -> f64 {
        let w = &self.alive[self.window()];
        w.iter().sum::<u64>() as f64 / w.len() as f64
    }

    /// Share of firms present after burn-in that do not continue.
    pub fn exit_rate(&self) -> f64 {
        let r = self.window();
        let alive: u64 = self.alive[r.clone()].iter().sum();
        let stay: u64 = self.stayers[r].iter().sum();
        if alive == 0 {
            0.0
        } else {
            (alive - stay) as f64 / alive as f64
        }
    }

    pub fn empirical_shares(&self) -> Vec<f64> {
        let n = self.firm_periods() as f64;
        self.histogram.iter().map(|&c| if n > 0.0 { c as f64 / n } else { 0.0 }).collect()
    }

    /// Cohorts are grouped into up to `batches` contiguous batches by birth period.
    pub fn npv_estimate(&self, batches: usize) -> NpvEstimate {
        let mut total = NeumaierSum::new();
        let mut firms = 0u64;
        for c in &self.cohorts {
            total.merge(&c.npv);
            firms += c.firms;
        }
        let mean = if firms > 0 { total.value() / firms as f64 } else { 0.0 };
        let filled: Vec<&CohortStats> = self.cohorts.iter().filter(|c| c.firms > 0).collect();
        let nb = batches.min(filled.len()).max(1);
        let mut means = Vec::with_capacity(nb);
        for b in 0..nb {
            let lo = b * filled.len() / nb;
            let hi = (b + 1) * filled.len() / nb;
            let mut s = NeumaierSum::new();
            let mut n = 0u64;
            for c in &filled[lo..hi] {
                s.merge(&c.npv);
                n += c.firms;
            }
            if n > 0 {
                means.push(s.value() / n as f64);
            }
        }
        let k = means.len();
        let standard_error = if k > 1 {
            let mbar = means.iter().sum::<f64>() / k as f64;
            let var = means.iter().map(|m| (m - mbar) * (m - mbar)).sum::<f64>() / (k - 1) as f64;
            libm::sqrt(var / k as f64)
        } else {
            f64::INFINITY
        };
        NpvEstimate { mean, standard_error, firms, batches: k }
    }
}

/// Per-cell inputs shared by all firms.
struct Tables {
    entrant_cdf: Vec<f64>,
    row_cdf: Vec<f64>,
    stay: Vec<f64>,
    profit: Vec<f64>,
    discount: f64,
    exit_prob: f64,
    cells: usize,
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    // the last cell with positive weight absorbs rounding
    if let Some(last) = weights.iter().rposition(|&w| w > 0.0) {
        out[last..].iter_mut().for_each(|x| *x = f64::INFINITY);
    }
    out
}

fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl Tables {
    fn new(model: &Model, cfg: &SimConfig) -> Result<Self> {
        let d = &model.grid;
        let g = d.cells();
        let mut row_cdf = Vec::with_capacity(g * g);
        for i in 0..g {
            row_cdf.extend(cumulative(d.kernel_row(i)));
        }
        Ok(Self {
            entrant_cdf: cumulative(d.entrants()),
            row_cdf,
            stay: d.stay_weights(cfg.threshold),
            profit: model.statics(cfg.price)?.profit,
            discount: model.primitives.discount,
            exit_prob: model.primitives.exit_prob,
            cells: g,
        })
    }
}

/// Simulates the firms born in `births` only. Merge disjoint ranges to get a full panel.
pub fn simulate_cohorts(cfg: &SimConfig, model: &Model, births: Range<u32>) -> Result<PanelStats> {
    cfg.check()?;
    let tables = Tables::new(model, cfg)?;
    let mut stats = PanelStats::empty(*cfg, tables.cells);
    let (burn, horizon) = (cfg.burn_in as u64, cfg.periods as u64);
    for birth in births.start..births.end.min(cfg.periods) {
        let cohort = &mut stats.cohorts[birth as usize];
        for k in 0..cfg.entrants {
            let id = birth as u64 * cfg.entrants as u64 + k as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(id);
            let mut cell = draw(&tables.entrant_cdf, uniform(&mut rng));
            let mut t = birth as u64;
            let mut weight = 1.0;
            let mut npv = 0.0;
            loop {
                if t < horizon {
                    stats.alive[t as usize] += 1;
                    if t >= burn {
                        stats.histogram[cell] += 1;
                    }
                }
                npv += weight * tables.profit[cell];
                let stays = uniform(&mut rng) < tables.stay[cell];
                let survives = uniform(&mut rng) >= tables.exit_prob;
                let u = uniform(&mut rng);
                if !(stays && survives) {
                    break;
                }
                if t < horizon {
                    stats.stayers[t as usize] += 1;
                }
                let g = tables.cells;
                cell = draw(&tables.row_cdf[cell * g..(cell + 1) * g], u);
                t += 1;
                weight *= tables.discount;
            }
            cohort.firms += 1;
            cohort.npv.add(npv);
            cohort.npv_squared.add(npv * npv);
        }
    }
    Ok(stats)
}

pub fn simulate_panel(cfg: &SimConfig, model: &Model) -> Result<PanelStats> {
    simulate_cohorts(cfg, model, 0..cfg.periods)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerifyTolerances {
    /// Largest acceptable total-variation distance between the normalized cross-sections.
    pub tv_max: f64,
    /// Largest acceptable `|NPV - κ|` in standard errors.
    pub z_max: f64,
    pub batches: usize,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self { tv_max: 0.01, z_max: 3.0, batches: 32 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationReport {
    pub firm_periods: u64,
    pub total_variation: f64,
    pub tv_passed: bool,
    pub npv: NpvEstimate,
    pub entry_cost: f64,
    /// `(NPV - κ) / SE`.
    pub npv_z: f64,
    pub npv_passed: bool,
    /// Per-cell `(empirical - analytic) / sqrt(a(1-a)/N)` with `N` firm-periods.
    pub cell_z: Vec<f64>,
    pub passed: bool,
}

/// Compares a panel with the analytic cross-section and the free-entry condition.
pub fn verify_against_steady_state(
    stats: &PanelStats,
    analytic: &TypeMeasure,
    entry_cost: f64,
    tol: &VerifyTolerances,
) -> VerificationReport {
    let emp = stats.empirical_shares();
    let ana = analytic.normalized().weights;
    let n = stats.firm_periods() as f64;
    let total_variation = 0.5 * emp.iter().zip(&ana).map(|(e, a)| (e - a).abs()).sum::<f64>();
    let cell_z = emp
        .iter()
        .zip(&ana)
        .map(|(&e, &a)| {
            let var = a * (1.0 - a) / n;
            if var > 0.0 {
                (e - a) / libm::sqrt(var)
            } else if e == a {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let npv = stats.npv_estimate(tol.batches);
    let npv_z = if npv.standard_error > 0.0 {
        (npv.mean - entry_cost) / npv.standard_error
    } else if npv.mean == entry_cost {
        0.0
    } else {
        f64::INFINITY
    };
    let tv_passed = total_variation < tol.tv_max;
    let npv_passed = npv_z.abs() <= tol.z_max;
    VerificationReport {
        firm_periods: stats.firm_periods(),
        total_variation,
        tv_passed,
        npv,
        entry_cost,
        npv_z,
        npv_passed,
        cell_z,
        passed: tv_passed && npv_passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::SolverOptions;
    use crate::primitives::fixtures::fixture_c;

    fn small_model() -> Model {
        Model::new(fixture_c(), 21, SolverOptions::default()).unwrap()
    }

    fn cfg() -> SimConfig {
        SimConfig { entrants: 20, periods: 80, burn_in: 66, seed: 7, threshold: 2.4, price: 1.9 }
    }

    #[test]
    fn burn_in_default() {
        assert_eq!(default_burn_in(0.1), 66);
        assert_eq!(default_burn_in(0.5), 10);
        assert_eq!(default_burn_in(1.0), 0);
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let model = small_model();
        let a = simulate_panel(&cfg(), &model).unwrap();
        let b = simulate_panel(&cfg(), &model).unwrap();
        assert_eq!(a, b);
        let c = simulate_panel(&SimConfig { seed: 8, ..cfg() }, &model).unwrap();
        assert_ne!(a.histogram, c.histogram);
    }

    #[test]
    fn partitioning_does_not_change_results() {
        let model = small_model();
        let whole = simulate_panel(&cfg(), &model).unwrap();
        let mut parts = simulate_cohorts(&cfg(), &model, 50..80).unwrap();
        parts.merge(&simulate_cohorts(&cfg(), &model, 0..17).unwrap());
        parts.merge(&simulate_cohorts(&cfg(), &model, 17..50).unwrap());
        assert_eq!(whole, parts);
        assert_eq!(whole.npv_estimate(8), parts.npv_estimate(8));
    }

    #[test]
    fn bookkeeping_conserves_firms() {
        let s = simulate_panel(&cfg(), &small_model()).unwrap();
        for t in 0..79 {
            assert_eq!(s.alive[t + 1], s.stayers[t] + 20);
        }
        assert_eq!(s.alive[0], 20);
    }

    #[test]
    fn certain_death_means_one_period_lives() {
        let mut p = fixture_c();
        p.exit_prob = 1.0;
        let model = Model::new(p, 21, SolverOptions::default()).unwrap();
        let s = simulate_panel(&SimConfig { burn_in: 0, ..cfg() }, &model).unwrap();
        assert_eq!(s.mean_firm_count(), 20.0);
        assert_eq!(s.exit_rate(), 1.0);
        let low = SimConfig { threshold: 1.0, burn_in: 0, ..cfg() };
        let s = simulate_panel(&low, &small_model()).unwrap();
        assert_eq!(s.mean_firm_count(), 20.0);
    }

    #[test]
    fn config_is_checked() {
        let model = small_model();
        assert!(simulate_panel(&SimConfig { entrants: 0, ..cfg() }, &model).is_err());
        assert!(simulate_panel(&SimConfig { burn_in: 80, ..cfg() }, &model).is_err());
    }

    #[test]
    fn sampling_respects_zero_weights() {
        let cdf = cumulative(&[0.0, 1.0, 0.0]);
        for u in [0.0, 0.5, 0.999999] {
            assert_eq!(draw(&cdf, u), 1);
        }
        let cdf = cumulative(&[0.25, 0.75]);
        assert_eq!(draw(&cdf, 0.2), 0);
        assert_eq!(draw(&cdf, 0.25), 1);
    }
}
