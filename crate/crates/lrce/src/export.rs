//! CSV plot data. Every float is written with its shortest round-trip representation.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use csv::Writer;
use lrce_core::equilibrium::AcSurface;
use lrce_core::sim::PanelStats;
use lrce_core::{DiscretizedModel, Schedules, TypeMeasure};

use crate::bundle::SupplyRow;
use crate::error::CliError;

pub const AC_CURVES: &str = "fig2_ac_curves.csv";
pub const SCHEDULES: &str = "fig3_schedules.csv";
pub const DELTA_COMPARISON: &str = "fig4_delta_comparison.csv";
pub const HISTOGRAM: &str = "histogram.csv";
pub const SUPPLY: &str = "supply.csv";

/// Round-trip float text: `f64::from_str(&num(x)) == x` for every finite `x`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub struct CsvDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl CsvDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn open(&mut self, name: &str) -> Result<Writer<File>, CliError> {
        let path = self.dir.join(name);
        let w = Writer::from_path(&path)?;
        log::info!("writing {}", path.display());
        self.written.push(path);
        Ok(w)
    }

    pub fn schedules(&mut self, s: &Schedules) -> Result<(), CliError> {
        let mut w = self.open(SCHEDULES)?;
        w.write_record(["boundary", "threshold", "entry_price", "exit_residual"])?;
        for k in 0..s.boundaries.len() {
            w.write_record([
                k.to_string(),
                num(s.boundaries[k]),
                num(s.entry_price[k]),
                num(s.exit_residual[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Curves for every `stride`-th boundary, the last one and the minimizing one.
    pub fn ac_curves(&mut self, surface: &AcSurface, stride: usize) -> Result<(), CliError> {
        let mut w = self.open(AC_CURVES)?;
        w.write_record(["boundary", "threshold", "price", "average_cost"])?;
        let last = surface.boundaries.len() - 1;
        for k in 0..=last {
            if k % stride != 0 && k != last && k != surface.min_boundary_index {
                continue;
            }
            for (p, ac) in surface.prices.iter().zip(surface.curve(k)) {
                w.write_record([k.to_string(), num(surface.boundaries[k]), num(*p), num(*ac)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Long format, one block of schedules per discount factor.
    pub fn delta_comparison(&mut self, runs: &[&Schedules]) -> Result<(), CliError> {
        let mut w = self.open(DELTA_COMPARISON)?;
        w.write_record(["discount", "boundary", "threshold", "entry_price", "exit_residual"])?;
        for s in runs {
            for k in 0..s.boundaries.len() {
                w.write_record([
                    num(s.discount),
                    k.to_string(),
                    num(s.boundaries[k]),
                    num(s.entry_price[k]),
                    num(s.exit_residual[k]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn measure(&mut self, name: &str, eta: &TypeMeasure, d: &DiscretizedModel) -> Result<(), CliError> {
        let mut w = self.open(&format!("measure_{name}.csv"))?;
        w.write_record(["theta", "mass", "density"])?;
        let density = eta.density(d.spacing());
        for ((theta, mass), dens) in d.midpoints().iter().zip(&eta.weights).zip(&density) {
            w.write_record([num(*theta), num(*mass), num(*dens)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn histogram(&mut self, stats: &PanelStats, analytic: &TypeMeasure, d: &DiscretizedModel) -> Result<(), CliError> {
        let mut w = self.open(HISTOGRAM)?;
        w.write_record(["cell", "theta", "count", "empirical_share", "analytic_share"])?;
        let emp = stats.empirical_shares();
        let ana = analytic.normalized();
        for i in 0..d.cells() {
            w.write_record([
                i.to_string(),
                num(d.midpoints()[i]),
                stats.histogram[i].to_string(),
                num(emp[i]),
                num(ana.weights[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn supply(&mut self, rows: &[SupplyRow]) -> Result<(), CliError> {
        let mut w = self.open(SUPPLY)?;
        w.write_record(["quantity", "price"])?;
        for r in rows {
            w.write_record([num(r.quantity), num(r.price)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1.8491497610279373, 1e-300, 6.02e23, -2.5e-7, 0.0, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn measure_file_has_one_row_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let d = DiscretizedModel::from_parts(0.0, 1.0, vec![1.0, 0.0, 0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let eta = TypeMeasure::new(vec![0.25, 0.75]).unwrap();
        let mut out = CsvDir::create(dir.path()).unwrap();
        out.measure("test", &eta, &d).unwrap();
        let text = fs::read_to_string(dir.path().join("measure_test.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, ["theta,mass,density", "0.25,0.25,0.5", "0.75,0.75,1.5"]);
        assert_eq!(out.written().len(), 1);
    }
}
