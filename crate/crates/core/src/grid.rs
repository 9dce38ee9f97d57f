//! Midpoint-cell discretization of the type interval.
//!
//! Cell `i` covers `[b_i, b_{i+1})` with `b_k = θ_L + k h`. A threshold `m`
//! is any point of the type interval. Cells entirely below `m` stay, cells
//! above exit, and the cell containing `m` stays with weight `(m - b_i)/h`,
//! so at every boundary the weights are exactly the 0/1 indicator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::primitives::{KernelSpec, ModelPrimitives};

/// Threshold positions closer than this (in cells) to a boundary snap onto it.
const BOUNDARY_SNAP: f64 = 1e-9;
/// Slack allowed in the discrete dominance check.
const FOSD_SLACK: f64 = 1e-12;

/// How the transition row out of an arbitrary type (not a midpoint) is built.
#[derive(Debug, Clone, PartialEq)]
enum RowSource {
    /// Evaluate the continuous kernel at the exact type.
    Density(KernelSpec),
    /// Interpolate linearly between the rows of neighbouring midpoints.
    Interpolate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedModel {
    low: f64,
    high: f64,
    h: f64,
    midpoints: Vec<f64>,
    kernel: Vec<f64>,
    entrants: Vec<f64>,
    rows: RowSource,
}

/// Bracketing cell of a threshold, with the point estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdBracket {
    pub lower: f64,
    pub upper: f64,
    pub lower_index: usize,
    pub point: f64,
}

impl DiscretizedModel {
    /// Discretizes the kernel and entrant density on `cells` midpoint cells.
    pub fn discretize(m: &ModelPrimitives, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 cells, got {cells}")));
        }
        if !(m.type_low < m.type_high) {
            return Err(Error::InvalidArgument(format!(
                "empty type interval [{}, {}]",
                m.type_low, m.type_high
            )));
        }
        let h = (m.type_high - m.type_low) / cells as f64;
        let midpoints: Vec<f64> = (0..cells).map(|i| m.type_low + (i as f64 + 0.5) * h).collect();
        let mut kernel = vec![0.0; cells * cells];
        let rows = match m.kernel {
            KernelSpec::Permanent => {
                for i in 0..cells {
                    kernel[i * cells + i] = 1.0;
                }
                RowSource::Interpolate
            }
            KernelSpec::TruncatedNormal { .. } => {
                for (i, &t) in midpoints.iter().enumerate() {
                    let row = density_row(&m.kernel, t, &midpoints);
                    kernel[i * cells..(i + 1) * cells].copy_from_slice(&row);
                }
                RowSource::Density(m.kernel.clone())
            }
        };
        let mut entrants: Vec<f64> = midpoints
            .iter()
            .map(|&t| m.entrants.density(t, m.type_low, m.type_high) * h)
            .collect();
        normalize(&mut entrants)?;
        Self::from_parts_inner(m.type_low, m.type_high, kernel, entrants, rows)
    }

    /// Builds a model from an explicit row-stochastic matrix and entrant vector.
    /// Rows out of off-grid types are interpolated between neighbouring rows.
    pub fn from_parts(low: f64, high: f64, kernel: Vec<f64>, entrants: Vec<f64>) -> Result<Self> {
        Self::from_parts_inner(low, high, kernel, entrants, RowSource::Interpolate)
    }

    fn from_parts_inner(low: f64, high: f64, kernel: Vec<f64>, entrants: Vec<f64>, rows: RowSource) -> Result<Self> {
        let g = entrants.len();
        if g < 2 || kernel.len() != g * g {
            return Err(Error::InvalidArgument(format!(
                "kernel has {} entries for {g} cells",
                kernel.len()
            )));
        }
        if !(low < high) {
            return Err(Error::InvalidArgument(format!("empty type interval [{low}, {high}]")));
        }
        let h = (high - low) / g as f64;
        let check_row = |what: &str, row: &[f64]| -> Result<()> {
            if row.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("{what} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("{what} sums to {s}, not 1")));
            }
            Ok(())
        };
        for i in 0..g {
            check_row(&format!("kernel row {i}"), &kernel[i * g..(i + 1) * g])?;
        }
        check_row("entrant vector", &entrants)?;
        check_fosd(g, &kernel)?;
        Ok(Self {
            low,
            high,
            h,
            midpoints: (0..g).map(|i| low + (i as f64 + 0.5) * h).collect(),
            kernel,
            entrants,
            rows,
        })
    }

    pub fn cells(&self) -> usize {
        self.midpoints.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    /// Row-major `G×G` transition matrix.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn kernel_row(&self, i: usize) -> &[f64] {
        let g = self.cells();
        &self.kernel[i * g..(i + 1) * g]
    }

    pub fn entrants(&self) -> &[f64] {
        &self.entrants
    }

    pub fn boundary(&self, k: usize) -> f64 {
        if k == self.cells() {
            self.high
        } else {
            self.low + k as f64 * self.h
        }
    }

    pub fn boundaries(&self) -> Vec<f64> {
        (0..=self.cells()).map(|k| self.boundary(k)).collect()
    }

    /// Threshold position in cell units, clamped to `[0, G]` and snapped onto boundaries.
    pub fn cell_coordinate(&self, m: f64) -> f64 {
        let x = ((m - self.low) / self.h).clamp(0.0, self.cells() as f64);
        let r = libm::round(x);
        if (x - r).abs() < BOUNDARY_SNAP {
            r
        } else {
            x
        }
    }

    /// Stay weights `w_i(m)`.
    pub fn stay_weights(&self, m: f64) -> Vec<f64> {
        let x = self.cell_coordinate(m);
        (0..self.cells()).map(|i| (x - i as f64).clamp(0.0, 1.0)).collect()
    }

    pub fn bracket(&self, m: f64) -> ThresholdBracket {
        let x = self.cell_coordinate(m);
        let k = (libm::floor(x) as usize).min(self.cells() - 1);
        ThresholdBracket {
            lower: self.boundary(k),
            upper: self.boundary(k + 1),
            lower_index: k,
            point: if x == libm::round(x) { self.boundary(x as usize) } else { m },
        }
    }

    /// Discretized transition row out of type `m`, `F̂(·|m)`.
    pub fn kernel_at(&self, m: f64) -> Vec<f64> {
        match &self.rows {
            RowSource::Density(spec) => density_row(spec, m, &self.midpoints),
            RowSource::Interpolate => {
                let g = self.cells();
                let y = ((m - self.low) / self.h - 0.5).clamp(0.0, (g - 1) as f64);
                let i = (libm::floor(y) as usize).min(g - 2);
                let t = y - i as f64;
                let (a, b) = (self.kernel_row(i), self.kernel_row(i + 1));
                a.iter().zip(b).map(|(a, b)| (1.0 - t) * a + t * b).collect()
            }
        }
    }

    /// Index of the cell containing `theta`.
    pub fn cell_of(&self, theta: f64) -> usize {
        let x = libm::floor((theta - self.low) / self.h);
        if x <= 0.0 {
            0
        } else {
            (x as usize).min(self.cells() - 1)
        }
    }
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let s: f64 = v.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("cannot normalize weights with total {s}")));
    }
    v.iter_mut().for_each(|x| *x /= s);
    Ok(())
}

/// Log-sum-exp normalized density row, robust for very small scales.
fn density_row(spec: &KernelSpec, current: f64, midpoints: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = midpoints
        .iter()
        .map(|&x| spec.log_weight(x, current).unwrap_or(f64::NEG_INFINITY))
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut row: Vec<f64> = logs.iter().map(|&l| libm::exp(l - top)).collect();
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
    row
}

/// Weak dominance between consecutive rows implies it for every ordered pair.
fn check_fosd(g: usize, kernel: &[f64]) -> Result<()> {
    for i in 0..g - 1 {
        let (mut lo, mut hi) = (0.0, 0.0);
        for j in 0..g - 1 {
            lo += kernel[i * g + j];
            hi += kernel[(i + 1) * g + j];
            if hi > lo + FOSD_SLACK {
                return Err(Error::FosdViolation { row: i, next: i + 1, column: j, excess: hi - lo });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::fixtures::fixture_c;

    #[test]
    fn fixture_c_rows_are_stochastic() {
        let d = DiscretizedModel::discretize(&fixture_c(), 201).unwrap();
        assert!((d.spacing() - 2.0 / 201.0).abs() < 1e-15);
        for i in 0..d.cells() {
            let s: f64 = d.kernel_row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        let s: f64 = d.entrants().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_cells_on_unit_interval() {
        let d = DiscretizedModel::discretize(&fixture_c(), 2).unwrap();
        assert_eq!(d.midpoints(), &[1.5, 2.5]);
        assert_eq!(d.boundaries(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn tiny_scale_concentrates_rows_at_the_mean() {
        let mut m = fixture_c();
        m.kernel = KernelSpec::TruncatedNormal { persistence: 0.8, center: 2.0, sigma: 1e-3 };
        let d = DiscretizedModel::discretize(&m, 201).unwrap();
        for i in (0..201).step_by(17) {
            let row = d.kernel_row(i);
            let argmax = (0..201).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(argmax, d.cell_of(m.kernel.mean(d.midpoints()[i])));
        }
    }

    #[test]
    fn fosd_violation_names_rows() {
        let k = vec![0.2, 0.8, 0.9, 0.1];
        let err = DiscretizedModel::from_parts(0.0, 1.0, k, vec![0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::FosdViolation { row: 0, next: 1, .. }));
    }

    #[test]
    fn stay_weights_match_indicator_at_boundaries() {
        let d = DiscretizedModel::discretize(&fixture_c(), 10).unwrap();
        for k in 0..=10 {
            let w = d.stay_weights(d.boundary(k));
            for (i, wi) in w.iter().enumerate() {
                assert_eq!(*wi, if i < k { 1.0 } else { 0.0 });
            }
        }
        let w = d.stay_weights(d.boundary(3) + 0.25 * d.spacing());
        assert!((w[3] - 0.25).abs() < 1e-12);
        assert_eq!(w[2], 1.0);
        assert_eq!(w[4], 0.0);
    }

    #[test]
    fn boundary_rows_use_the_continuous_density() {
        let m = fixture_c();
        let d = DiscretizedModel::discretize(&m, 50).unwrap();
        let row = d.kernel_at(d.midpoints()[7]);
        for (a, b) in row.iter().zip(d.kernel_row(7)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolated_rows_reproduce_grid_rows() {
        let k = [0.7, 0.3, 0.4, 0.6];
        // rows must be ordered: row 1 dominates row 0
        let d = DiscretizedModel::from_parts(0.0, 2.0, k.to_vec(), vec![0.5, 0.5]).unwrap();
        assert_eq!(d.kernel_at(0.5), vec![0.7, 0.3]);
        assert_eq!(d.kernel_at(1.5), vec![0.4, 0.6]);
        let mid = d.kernel_at(1.0);
        assert!((mid[0] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn brackets_cover_the_point() {
        let d = DiscretizedModel::discretize(&fixture_c(), 20).unwrap();
        let b = d.bracket(1.93);
        assert!(b.lower <= 1.93 && 1.93 <= b.upper);
        assert_eq!(d.bracket(3.0).lower_index, 19);
    }
}
