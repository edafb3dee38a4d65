//! Power allocation, correlated-noise region scans and loss sweeps.
//!
//! Every search here runs on fixed grids followed by a deterministic pattern
//! refinement, so identical inputs give bit-identical outputs.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{
    assemble_covariance_parametric, check_noise, paper_channel, ChannelMatrix, NoiseModel,
};
use crate::error::{Error, Result};
use crate::key_rate::{
    best_selection, check_beta, skr_full_mimo, skr_multiplexed, skr_siso, KeyRateBreakdown,
};

/// Correlated excess noise used for the colored-noise scenario at the
/// reference transmissivity [`REFERENCE_COLORED_T`].
pub const REFERENCE_COLORED_NOISE: Complex64 = Complex64::new(0.0006, 0.00079);
pub const REFERENCE_COLORED_T: f64 = 0.1;

/// Improvements smaller than this are treated as ties.
const IMPROVEMENT_TOL: f64 = 1e-12;

/// Radii found by bisection are pulled inward by this relative factor so the
/// returned point is strictly admissible.
const BOUNDARY_SHRINK: f64 = 1e-6;

/// How a mode's "power" relates to its modulation variance `V_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerConvention {
    /// Power is `V_a` itself.
    #[default]
    Variance,
    /// Power is `V_a − 1`, the modulation on top of vacuum.
    VarianceMinusOne,
}

impl PowerConvention {
    fn offset(self) -> f64 {
        match self {
            PowerConvention::Variance => 0.0,
            PowerConvention::VarianceMinusOne => 1.0,
        }
    }

    pub fn variance(self, power: f64) -> f64 {
        power + self.offset()
    }

    pub fn power(self, variance: f64) -> f64 {
        variance - self.offset()
    }
}

impl FromStr for PowerConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "variance" => Ok(PowerConvention::Variance),
            "variance_minus_one" => Ok(PowerConvention::VarianceMinusOne),
            other => Err(format!(
                "unknown power convention `{other}` (expected variance or variance_minus_one)"
            )),
        }
    }
}

impl fmt::Display for PowerConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerConvention::Variance => "variance",
            PowerConvention::VarianceMinusOne => "variance_minus_one",
        })
    }
}

/// Total transmit power shared by both modes, with an optional per-mode cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub total_power: f64,
    pub per_mode_cap: Option<f64>,
    pub convention: PowerConvention,
}

impl PowerBudget {
    pub fn new(
        total_power: f64,
        per_mode_cap: Option<f64>,
        convention: PowerConvention,
    ) -> Result<Self> {
        if !(total_power > 0.0 && total_power.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "total_power",
                value: total_power,
                reason: "must be positive",
            });
        }
        if let Some(cap) = per_mode_cap {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "per_mode_cap",
                    value: cap,
                    reason: "must be positive",
                });
            }
        }
        Ok(PowerBudget {
            total_power,
            per_mode_cap,
            convention,
        })
    }

    /// Two modes sharing 2 x 4.7 SNU, no per-mode cap.
    pub fn paper() -> Self {
        PowerBudget {
            total_power: 9.4,
            per_mode_cap: None,
            convention: PowerConvention::Variance,
        }
    }

    pub fn with_cap(self, cap: f64) -> Self {
        PowerBudget {
            per_mode_cap: Some(cap),
            ..self
        }
    }

    /// Variance box for two modes: each `V ∈ [1, v_max]`, `V1 + V2 ≤ v_sum_max`.
    fn region(&self) -> Result<Region> {
        let conv = self.convention;
        let v_sum_max = conv.variance(self.total_power) + conv.offset();
        let mut v_max = v_sum_max - 1.0;
        if let Some(cap) = self.per_mode_cap {
            v_max = v_max.min(conv.variance(cap));
        }
        if v_sum_max < 2.0 || v_max < 1.0 {
            return Err(Error::EmptyFeasibleSet);
        }
        Ok(Region { v_max, v_sum_max })
    }

    /// Variance of each mode under an equal split, respecting the cap.
    pub fn equal_allocation(&self) -> Result<f64> {
        let r = self.region()?;
        Ok((0.5 * r.v_sum_max).min(r.v_max))
    }

    /// Largest variance a single active mode may use.
    pub fn single_mode_max(&self) -> Result<f64> {
        let conv = self.convention;
        let power = self
            .per_mode_cap
            .map_or(self.total_power, |c| c.min(self.total_power));
        let v = conv.variance(power);
        if v < 1.0 {
            return Err(Error::EmptyFeasibleSet);
        }
        Ok(v)
    }

    /// The same budget with each mode capped at half the total unless a
    /// tighter cap is already set.
    fn halved_cap(&self) -> Self {
        let half = 0.5 * self.total_power;
        self.with_cap(self.per_mode_cap.map_or(half, |c| c.min(half)))
    }
}

#[derive(Debug, Clone, Copy)]
struct Region {
    v_max: f64,
    v_sum_max: f64,
}

impl Region {
    fn contains(&self, v1: f64, v2: f64) -> bool {
        v1 >= 1.0 && v2 >= 1.0 && v1 <= self.v_max && v2 <= self.v_max && v1 + v2 <= self.v_sum_max
    }
}

/// Post-processing strategy being optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Best single transmitter/receiver pair.
    Selection,
    /// Two selection links side by side.
    Multiplexed,
    /// Joint processing of all four modes.
    FullMimo,
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "selection" => Ok(Scenario::Selection),
            "multiplexed" => Ok(Scenario::Multiplexed),
            "full_mimo" => Ok(Scenario::FullMimo),
            other => Err(format!(
                "unknown scenario `{other}` (expected selection, multiplexed or full_mimo)"
            )),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Selection => "selection",
            Scenario::Multiplexed => "multiplexed",
            Scenario::FullMimo => "full_mimo",
        })
    }
}

/// Grid and refinement parameters of the power search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// Points per axis of the coarse grid.
    pub grid: usize,
    /// Refinement stops once the pattern step falls below this (SNU).
    pub min_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            grid: 64,
            min_step: 1e-4,
        }
    }
}

/// Optimized allocation and the rate it achieves. `breakdown` is absent for
/// the multiplexed scenario, whose rate is a sum of separately clamped links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptimum {
    pub v_a1: f64,
    pub v_a2: f64,
    pub skr: f64,
    pub breakdown: Option<KeyRateBreakdown>,
}

/// Key rate of one scenario at fixed modulation variances.
pub fn scenario_rate(
    h: &ChannelMatrix,
    noise: &NoiseModel,
    beta: f64,
    v_a1: f64,
    v_a2: f64,
    scenario: Scenario,
) -> Result<(f64, Option<KeyRateBreakdown>)> {
    let gamma = assemble_covariance_parametric(h, v_a1, v_a2, noise)?;
    match scenario {
        Scenario::Selection => best_selection(&gamma, beta).map(|(_, r)| (r.skr, Some(r))),
        Scenario::Multiplexed => skr_multiplexed(&gamma, beta).map(|m| (m.total(), None)),
        Scenario::FullMimo => skr_full_mimo(&gamma, beta).map(|r| (r.skr, Some(r))),
    }
}

fn grid_axis(n: usize, hi: f64) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| 1.0 + (hi - 1.0) * i as f64 / (n - 1) as f64)
}

/// Maximizes `f` over the feasible region: start at the equal split, scan
/// the grid, then pattern-search with halving steps. Only strict improvements
/// move the incumbent, so ties resolve toward equal allocation.
fn maximize_2d<F>(
    region: Region,
    start: f64,
    settings: &OptimizerSettings,
    f: F,
) -> Result<(f64, f64, f64)>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let mut best = (start, start, f(start, start)?);
    for v1 in grid_axis(settings.grid, region.v_max) {
        for v2 in grid_axis(settings.grid, region.v_max) {
            if !region.contains(v1, v2) {
                continue;
            }
            let val = f(v1, v2)?;
            if val > best.2 + IMPROVEMENT_TOL {
                best = (v1, v2, val);
            }
        }
    }

    const DIRS: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
        (1.0, 1.0),
        (-1.0, -1.0),
    ];
    let mut step = (region.v_max - 1.0) / (settings.grid.max(2) - 1) as f64;
    while step >= settings.min_step {
        let mut moved = false;
        for (d1, d2) in DIRS {
            let (v1, v2) = (best.0 + d1 * step, best.1 + d2 * step);
            if !region.contains(v1, v2) {
                continue;
            }
            let val = f(v1, v2)?;
            if val > best.2 + IMPROVEMENT_TOL {
                best = (v1, v2, val);
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(best)
}

/// One-dimensional version of [`maximize_2d`] over `V ∈ [1, v_max]`, starting
/// from full power.
fn maximize_1d<F>(v_max: f64, settings: &OptimizerSettings, f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut best = (v_max, f(v_max)?);
    for v in grid_axis(settings.grid, v_max) {
        let val = f(v)?;
        if val > best.1 + IMPROVEMENT_TOL {
            best = (v, val);
        }
    }
    let mut step = (v_max - 1.0) / (settings.grid.max(2) - 1) as f64;
    while step >= settings.min_step {
        let mut moved = false;
        for d in [1.0, -1.0] {
            let v = best.0 + d * step;
            if !(1.0..=v_max).contains(&v) {
                continue;
            }
            let val = f(v)?;
            if val > best.1 + IMPROVEMENT_TOL {
                best = (v, val);
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(best)
}

/// Maximizes a scenario's key rate over `(V_a1, V_a2)` within the budget.
pub fn optimize_power(
    h: &ChannelMatrix,
    noise: &NoiseModel,
    beta: f64,
    budget: &PowerBudget,
    scenario: Scenario,
    settings: &OptimizerSettings,
) -> Result<PowerOptimum> {
    check_beta(beta)?;
    let region = budget.region()?;
    let start = budget.equal_allocation()?;
    let rate = |v1: f64, v2: f64| {
        scenario_rate(h, noise, beta, v1, v2, scenario)
            .map(|(skr, _)| skr)
            .map_err(|e| e.at(format!("{scenario} at V_a1={v1}, V_a2={v2}")))
    };
    let (v_a1, v_a2, _) = maximize_2d(region, start, settings, rate)?;
    let (skr, breakdown) = scenario_rate(h, noise, beta, v_a1, v_a2, scenario)?;
    Ok(PowerOptimum {
        v_a1,
        v_a2,
        skr,
        breakdown,
    })
}

/// Maximizes the single-link rate over `V ∈ [1, v_max]`.
pub fn optimize_siso(
    gain: Complex64,
    xi: f64,
    beta: f64,
    v_max: f64,
    settings: &OptimizerSettings,
) -> Result<(f64, KeyRateBreakdown)> {
    if !(v_max >= 1.0) {
        return Err(Error::EmptyFeasibleSet);
    }
    let rate = |v: f64| {
        skr_siso(gain, v, xi, beta)
            .map(|r| r.skr)
            .map_err(|e| e.at(format!("siso gain={gain} at V={v}")))
    };
    let (v, _) = maximize_1d(v_max, settings, rate)?;
    Ok((v, skr_siso(gain, v, xi, beta)?))
}

/// Largest `|ξ_b1b2|` along direction `phase` that keeps the noise model
/// admissible at the given variances. The admissible set is convex, so
/// bisection along the ray is exact up to rounding.
pub fn admissible_radius(
    h: &ChannelMatrix,
    v_a1: f64,
    v_a2: f64,
    noise: &NoiseModel,
    phase: f64,
) -> Result<f64> {
    let dir = Complex64::from_polar(1.0, phase);
    let admissible = |r: f64| -> Result<bool> {
        Ok(check_noise(h, v_a1, v_a2, &noise.with_correlation(dir * r))?.is_admissible())
    };
    if !admissible(0.0)? {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = noise.xi_b1.max(noise.xi_b2).max(1e-12);
    while admissible(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(lo);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if admissible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

const RADIUS_PHASES: usize = 16;

fn phases(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| 2.0 * std::f64::consts::PI * k as f64 / n as f64)
}

/// Largest admissible `|ξ_b1b2|` over a fixed set of directions.
pub fn max_admissible_radius(
    h: &ChannelMatrix,
    v_a1: f64,
    v_a2: f64,
    noise: &NoiseModel,
) -> Result<f64> {
    phases(RADIUS_PHASES).try_fold(0.0f64, |acc, ph| {
        Ok(acc.max(admissible_radius(h, v_a1, v_a2, noise, ph)?))
    })
}

/// One cell of a correlated-noise scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPoint {
    pub xi_re: f64,
    pub xi_im: f64,
    pub admissible: bool,
    /// Power-optimized full-MIMO rate; present exactly when admissible.
    pub skr: Option<f64>,
}

/// Half-width of the square scanned by [`scan_xi_region`].
pub fn region_half_width(radius: f64) -> f64 {
    1.5 * radius
}

/// Scans `ξ_b1b2` over a `grid x grid` square centred on 0 and spanning
/// 1.5 times the admissible radius. Admissibility is judged at the
/// equal-allocation variances. Rows run over `xi_re` first, then `xi_im`.
pub fn scan_xi_region(
    transmissivity: f64,
    xi_b1: f64,
    xi_b2: f64,
    beta: f64,
    budget: &PowerBudget,
    grid: usize,
    settings: &OptimizerSettings,
) -> Result<Vec<RegionPoint>> {
    if grid < 3 {
        return Err(Error::InvalidParameter {
            name: "grid",
            value: grid as f64,
            reason: "region scan needs at least 3 points per axis",
        });
    }
    check_beta(beta)?;
    let h = paper_channel(transmissivity)?;
    let base = NoiseModel::new(xi_b1, xi_b2, Complex64::new(0.0, 0.0));
    let v_eq = budget.equal_allocation()?;
    let half = region_half_width(max_admissible_radius(&h, v_eq, v_eq, &base)?);
    let axis: Vec<f64> = (0..grid)
        .map(|i| -half + 2.0 * half * i as f64 / (grid - 1) as f64)
        .collect();
    let cells: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&re| axis.iter().map(move |&im| (re, im)))
        .collect();
    cells
        .par_iter()
        .map(|&(re, im)| {
            let noise = base.with_correlation(Complex64::new(re, im));
            let admissible = check_noise(&h, v_eq, v_eq, &noise)?.is_admissible();
            let skr = if admissible {
                let opt = optimize_power(&h, &noise, beta, budget, Scenario::FullMimo, settings)
                    .map_err(|e| e.at(format!("T={transmissivity}, xi_b1b2={re}{im:+}i")))?;
                Some(opt.skr)
            } else {
                None
            };
            Ok(RegionPoint {
                xi_re: re,
                xi_im: im,
                admissible,
                skr,
            })
        })
        .collect()
}

/// Correlated noise on the admissible boundary that maximizes the full-MIMO
/// rate at equal allocation, searched over `num_phases` directions.
pub fn boundary_maximizer(
    h: &ChannelMatrix,
    noise: &NoiseModel,
    beta: f64,
    budget: &PowerBudget,
    num_phases: usize,
) -> Result<Complex64> {
    let v = budget.equal_allocation()?;
    let mut best: Option<(Complex64, f64)> = None;
    for ph in phases(num_phases.max(1)) {
        let r = admissible_radius(h, v, v, noise, ph)? * (1.0 - BOUNDARY_SHRINK);
        let xi = Complex64::from_polar(r, ph);
        let (skr, _) = scenario_rate(
            h,
            &noise.with_correlation(xi),
            beta,
            v,
            v,
            Scenario::FullMimo,
        )?;
        if best.is_none_or(|(_, b)| skr > b + IMPROVEMENT_TOL) {
            best = Some((xi, skr));
        }
    }
    Ok(best.expect("at least one phase").0)
}

/// Inputs shared by every point of a loss sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub xi_b1: f64,
    pub xi_b2: f64,
    pub beta: f64,
    pub budget: PowerBudget,
    pub settings: OptimizerSettings,
    /// Fixed correlated noise for the colored scenario at a given
    /// transmissivity; elsewhere the boundary maximizer is used.
    pub colored_reference: Option<(f64, Complex64)>,
    /// Directions tried when searching the admissible boundary.
    pub boundary_phases: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            xi_b1: 0.001,
            xi_b2: 0.001,
            beta: 0.95,
            budget: PowerBudget::paper(),
            settings: OptimizerSettings::default(),
            colored_reference: Some((REFERENCE_COLORED_T, REFERENCE_COLORED_NOISE)),
            boundary_phases: 16,
        }
    }
}

/// Optimized rates of the five compared scenarios at one loss value:
///
/// - `a`: one transmitter active, direct gain `√(T/2)`, whole budget;
/// - `b`: multiplexed selection links with crosstalk, per-mode cap of half
///   the budget;
/// - `c`: single link with gain `√T` and half the budget;
/// - `d`: full MIMO with uncorrelated receiver noise;
/// - `e`: full MIMO with correlated receiver noise `xi_b1b2_e`.
///
/// `v_a1_opt` and `v_a2_opt` are the allocation found for `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub loss_db: f64,
    pub transmissivity: f64,
    pub skr_a: f64,
    pub skr_b: f64,
    pub skr_c: f64,
    pub skr_d: f64,
    pub skr_e: f64,
    pub v_a1_opt: f64,
    pub v_a2_opt: f64,
    pub xi_b1b2_e: Complex64,
}

/// Loss values `min, min + step, ...` up to `max` inclusive.
pub fn loss_grid(min_db: f64, max_db: f64, step_db: f64) -> Result<Vec<f64>> {
    if !(step_db > 0.0 && step_db.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "loss_step",
            value: step_db,
            reason: "must be positive",
        });
    }
    for (name, v) in [("loss_min", min_db), ("loss_max", max_db)] {
        if !(0.0..=60.0).contains(&v) {
            return Err(Error::InvalidParameter {
                name,
                value: v,
                reason: "loss must lie in [0, 60] dB",
            });
        }
    }
    if max_db < min_db {
        return Err(Error::InvalidParameter {
            name: "loss_max",
            value: max_db,
            reason: "must not be below loss_min",
        });
    }
    let n = ((max_db - min_db) / step_db + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| min_db + step_db * i as f64).collect())
}

pub fn db_to_transmissivity(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// All five scenario rates at one loss value.
pub fn sweep_point(loss_db: f64, params: &SweepParams) -> Result<SweepPoint> {
    let t = db_to_transmissivity(loss_db);
    let ctx = |e: Error| e.at(format!("loss {loss_db} dB (T={t})"));
    let h = paper_channel(t).map_err(ctx)?;
    let noise = NoiseModel::new(params.xi_b1, params.xi_b2, Complex64::new(0.0, 0.0));
    let budget = &params.budget;
    let settings = &params.settings;
    let beta = params.beta;
    check_beta(beta)?;

    let single_gain = Complex64::new((t / 2.0).sqrt(), 0.0);
    let (_, a) = optimize_siso(
        single_gain,
        params.xi_b1,
        beta,
        budget.single_mode_max()?,
        settings,
    )
    .map_err(ctx)?;

    let b = optimize_power(
        &h,
        &noise,
        beta,
        &budget.halved_cap(),
        Scenario::Multiplexed,
        settings,
    )
    .map_err(ctx)?;

    let half_budget =
        budget
            .convention
            .variance(budget.per_mode_cap.map_or(0.5 * budget.total_power, |c| {
                c.min(0.5 * budget.total_power)
            }));
    let (_, c) = optimize_siso(
        Complex64::new(t.sqrt(), 0.0),
        params.xi_b1,
        beta,
        half_budget,
        settings,
    )
    .map_err(ctx)?;

    let d = optimize_power(&h, &noise, beta, budget, Scenario::FullMimo, settings).map_err(ctx)?;

    let xi_e = match params.colored_reference {
        Some((t_ref, xi)) if (t - t_ref).abs() <= 1e-9 * t_ref => xi,
        _ => boundary_maximizer(&h, &noise, beta, budget, params.boundary_phases).map_err(ctx)?,
    };
    let e = optimize_power(
        &h,
        &noise.with_correlation(xi_e),
        beta,
        budget,
        Scenario::FullMimo,
        settings,
    )
    .map_err(ctx)?;

    Ok(SweepPoint {
        loss_db,
        transmissivity: t,
        skr_a: a.skr,
        skr_b: b.skr,
        skr_c: c.skr,
        skr_d: d.skr,
        skr_e: e.skr,
        v_a1_opt: d.v_a1,
        v_a2_opt: d.v_a2,
        xi_b1b2_e: xi_e,
    })
}

/// Evaluates [`sweep_point`] over [`loss_grid`]; results keep grid order.
pub fn sweep_loss(
    min_db: f64,
    max_db: f64,
    step_db: f64,
    params: &SweepParams,
) -> Result<Vec<SweepPoint>> {
    loss_grid(min_db, max_db, step_db)?
        .par_iter()
        .map(|&loss| sweep_point(loss, params))
        .collect()
}
