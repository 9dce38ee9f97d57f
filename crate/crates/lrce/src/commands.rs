//! One function per subcommand. Each returns the result to serialize and
//! writes its CSV files when a directory is given.

use std::fmt::Write as _;

use lrce_core::equilibrium::{ac_surface, long_run_supply_curve};
use lrce_core::sim::{default_burn_in, verify_against_steady_state, SimConfig, VerifyTolerances};
use lrce_core::{compare, schedules, solve_lrce, solve_planner, solve_twotype, validate_primitives, Model, OracleSolution};

use crate::bundle::{CommandResult, SimulationResult, SupplyRow, SupplyTable};
use crate::config::{RunConfig, SimulationOptions, SurfaceOptions};
use crate::error::CliError;
use crate::export::CsvDir;
use crate::parallel::simulate_parallel;

/// Command-line overrides of the `simulation` section.
#[derive(Debug, Clone, Default)]
pub struct SimulationFlags {
    pub entrants: Option<u32>,
    pub periods: Option<u32>,
    pub burn_in: Option<u32>,
    pub seed: Option<u64>,
}

pub fn build_model(cfg: &RunConfig) -> Result<Model, CliError> {
    let options = cfg.solver_options();
    if !cfg.bypass_validation {
        return Ok(Model::new(cfg.primitives.clone(), cfg.cells, options)?);
    }
    let (model, report) = Model::unvalidated(cfg.primitives.clone(), cfg.cells, options)?;
    eprintln!("!!! WARNING: assumption checks bypassed (bypass_validation = true)");
    for f in report.failures() {
        eprintln!("!!!   failing: {}: {}", f.check.label(), f.detail);
    }
    log::warn!("solving with {} failing assumption checks", report.failures().count());
    Ok(model)
}

pub fn validate(cfg: &RunConfig) -> Result<CommandResult, CliError> {
    let report = validate_primitives(&cfg.primitives, 1e-12)?;
    for c in &report.checks {
        log::info!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.check.label(), c.detail);
    }
    if !report.passed {
        let names: Vec<String> = report.failures().map(|f| format!("{} ({})", f.check.label(), f.detail)).collect();
        return Err(CliError::Validation(names.join("; ")));
    }
    Ok(CommandResult::Validate(report))
}

pub fn solve(cfg: &RunConfig, csv: Option<&mut CsvDir>) -> Result<CommandResult, CliError> {
    let model = build_model(cfg)?;
    let s = solve_lrce(&model)?;
    log::info!(
        "p = {}, m = {}, n = {}, Q = {}, {:?}",
        s.price,
        s.threshold.point,
        s.entrant_mass,
        s.quantity,
        s.diagnostics.threshold_kind
    );
    if let Some(out) = csv {
        out.schedules(&s.schedules)?;
        let opts = cfg.surface.clone().unwrap_or(SurfaceOptions {
            price_low: 0.8 * s.price,
            price_high: 1.5 * s.price,
            prices: 400,
            stride: 20,
        });
        let n = opts.prices;
        let prices: Vec<f64> =
            (0..n).map(|i| opts.price_low + (opts.price_high - opts.price_low) * i as f64 / (n - 1) as f64).collect();
        out.ac_curves(&ac_surface(&model, &prices)?, opts.stride)?;
        out.measure("lambda_entry", &s.lambda_entry, &model.grid)?;
        out.measure("lambda_exit", &s.lambda_exit, &model.grid)?;
        out.measure("physical", &s.physical_measure, &model.grid)?;
    }
    Ok(CommandResult::Solve(s))
}

pub fn supply(cfg: &RunConfig, flags: Option<&[f64]>, csv: Option<&mut CsvDir>) -> Result<CommandResult, CliError> {
    let quantities: Vec<f64> = match (flags, &cfg.supply) {
        (Some(q), _) => q.to_vec(),
        (None, Some(s)) => s.quantities.clone(),
        (None, None) => return Err(CliError::Config(String::from("supply needs --q or a supply.quantities list"))),
    };
    if let Some(q) = quantities.iter().find(|q| !(**q > 0.0 && q.is_finite())) {
        return Err(CliError::Config(format!("quantity {q} must be positive")));
    }
    let model = build_model(cfg)?;
    let prices = long_run_supply_curve(&model, &quantities)?;
    let rows: Vec<SupplyRow> =
        quantities.iter().zip(&prices).map(|(&quantity, &price)| SupplyRow { quantity, price }).collect();
    if let Some(out) = csv {
        out.supply(&rows)?;
    }
    Ok(CommandResult::Supply(SupplyTable { rows }))
}

pub fn planner(cfg: &RunConfig, csv: Option<&mut CsvDir>) -> Result<CommandResult, CliError> {
    let model = build_model(cfg)?;
    let s = solve_planner(&model)?;
    if let Some(out) = csv {
        out.measure("planner", &s.measure, &model.grid)?;
    }
    Ok(CommandResult::Planner(s))
}

pub fn compare_cmd(cfg: &RunConfig, csv: Option<&mut CsvDir>) -> Result<CommandResult, CliError> {
    let model = build_model(cfg)?;
    let r = compare(&model)?;
    if !r.prediction_holds {
        log::warn!("planner comparison does not have the predicted signs");
    }
    if let Some(out) = csv {
        let patient = schedules(&model.with_discount(1.0))?;
        out.delta_comparison(&[&r.equilibrium.schedules, &patient])?;
        out.measure("physical", &r.equilibrium.physical_measure, &model.grid)?;
        out.measure("planner", &r.planner.measure, &model.grid)?;
    }
    Ok(CommandResult::Compare(r))
}

pub fn oracle(cfg: &RunConfig) -> Result<(CommandResult, OracleSolution), CliError> {
    let m = cfg
        .twotype
        .as_ref()
        .ok_or_else(|| CliError::Config(String::from("oracle-twotype needs a twotype section")))?;
    let s = solve_twotype(m)?;
    Ok((CommandResult::OracleTwotype(s.clone()), s))
}

pub fn oracle_table(s: &OracleSolution) -> String {
    let rows = [
        ("lambda_low", s.lambda_low),
        ("lambda_high", s.lambda_high),
        ("price", s.price),
        ("firm_quantity", s.firm_quantity),
        ("quantity", s.quantity),
        ("entrant_mass", s.entrant_mass),
        ("marginal_cost", s.marginal_cost),
        ("weighted_average_cost", s.weighted_average_cost),
        ("average_firm_cost", s.average_firm_cost),
        ("average_firm_profit", s.average_firm_profit),
        ("entrant_npv", s.entrant_npv),
        ("planner_price", s.planner_price),
        ("planner_quantity", s.planner_quantity),
        ("planner_entrant_mass", s.planner_entrant_mass),
    ];
    let mut out = String::new();
    for (name, v) in rows {
        let _ = writeln!(out, "{name:<22} {v:>22.15}");
    }
    out
}

pub fn simulate(cfg: &RunConfig, flags: &SimulationFlags, csv: Option<&mut CsvDir>) -> Result<CommandResult, CliError> {
    let model = build_model(cfg)?;
    let s = solve_lrce(&model)?;
    let opts = cfg.simulation.clone().unwrap_or_default();
    let sim = resolve_simulation(&opts, flags, model.primitives.exit_prob, s.threshold.point, s.price);
    log::info!(
        "simulating {} entrants per period for {} periods (burn-in {}), seed {}",
        sim.entrants,
        sim.periods,
        sim.burn_in,
        sim.seed
    );
    let chunk = (sim.periods / (4 * rayon::current_num_threads() as u32)).max(1);
    let stats = simulate_parallel(&sim, &model, chunk)?;
    let verification =
        verify_against_steady_state(&stats, &s.physical_measure, model.primitives.entry_cost, &VerifyTolerances::default());
    if !verification.passed {
        log::warn!(
            "panel disagrees with the steady state: TV = {}, NPV z = {}",
            verification.total_variation,
            verification.npv_z
        );
    }
    if let Some(out) = csv {
        out.histogram(&stats, &s.physical_measure, &model.grid)?;
    }
    Ok(CommandResult::Simulate(SimulationResult {
        price: s.price,
        threshold: s.threshold.point,
        mean_firm_count: stats.mean_firm_count(),
        exit_rate: stats.exit_rate(),
        stats,
        verification,
    }))
}

/// Flags override the config; a missing horizon keeps about 10⁶ firm-periods after burn-in.
pub fn resolve_simulation(
    opts: &SimulationOptions,
    flags: &SimulationFlags,
    exit_prob: f64,
    threshold: f64,
    price: f64,
) -> SimConfig {
    let entrants = flags.entrants.unwrap_or(opts.entrants);
    let burn_in = flags.burn_in.or(opts.burn_in).unwrap_or_else(|| default_burn_in(exit_prob));
    let periods = flags.periods.or(opts.periods).unwrap_or_else(|| burn_in + 1_000_000u32.div_ceil(entrants.max(1)).max(1));
    SimConfig { entrants, periods, burn_in, seed: flags.seed.unwrap_or(opts.seed), threshold, price }
}
