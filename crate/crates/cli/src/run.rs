use std::io::Write;

use cvqkd_core::{
    assemble_covariance_parametric, best_selection, check_noise, optimize_power, paper_channel,
    scan_xi_region, skr_full_mimo, skr_multiplexed, sweep_loss, Complex64, NoiseModel, SweepParams,
    REFERENCE_COLORED_NOISE, REFERENCE_COLORED_T,
};

use crate::config::{Command, RunConfig};
use crate::csv::{num, opt_num, Table};
use crate::error::CliError;

/// Computes the CSV for `cfg` and writes it to the configured output.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let csv = render(cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, csv).map_err(|source| CliError::Write {
            target: path.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(csv.as_bytes())
            .map_err(|source| CliError::Write {
                target: "standard output".into(),
                source,
            }),
    }
}

pub fn render(cfg: &RunConfig) -> Result<String, CliError> {
    match cfg.command {
        Command::SweepLoss => sweep(cfg),
        Command::XiRegion => region(cfg),
        Command::OptimizePower => optimize(cfg),
        Command::SinglePoint => single_point(cfg),
    }
}

fn numeric(point: String) -> impl FnOnce(cvqkd_core::Error) -> CliError {
    move |source| CliError::Numeric { point, source }
}

fn noise(cfg: &RunConfig) -> NoiseModel {
    NoiseModel::new(
        cfg.xi_b1,
        cfg.xi_b2,
        cfg.xi_b1b2.unwrap_or(Complex64::new(0.0, 0.0)),
    )
}

fn sweep(cfg: &RunConfig) -> Result<String, CliError> {
    let params = SweepParams {
        xi_b1: cfg.xi_b1,
        xi_b2: cfg.xi_b2,
        beta: cfg.beta,
        budget: cfg.budget,
        settings: cfg.settings,
        colored_reference: Some((
            REFERENCE_COLORED_T,
            cfg.xi_b1b2.unwrap_or(REFERENCE_COLORED_NOISE),
        )),
        ..SweepParams::default()
    };
    let points = sweep_loss(cfg.loss_min, cfg.loss_max, cfg.loss_step, &params).map_err(
        numeric(format!(
            "sweep-loss {}..{} dB step {}",
            cfg.loss_min, cfg.loss_max, cfg.loss_step
        )),
    )?;
    let mut table = Table::new(&[
        "loss_db", "T", "skr_a", "skr_b", "skr_c", "skr_d", "skr_e", "v_a1_opt", "v_a2_opt",
    ]);
    for p in points {
        table.row(&[
            num(p.loss_db),
            num(p.transmissivity),
            num(p.skr_a),
            num(p.skr_b),
            num(p.skr_c),
            num(p.skr_d),
            num(p.skr_e),
            num(p.v_a1_opt),
            num(p.v_a2_opt),
        ]);
    }
    Ok(table.into_string())
}

fn region(cfg: &RunConfig) -> Result<String, CliError> {
    let cells = scan_xi_region(
        cfg.transmissivity,
        cfg.xi_b1,
        cfg.xi_b2,
        cfg.beta,
        &cfg.budget,
        cfg.grid,
        &cfg.settings,
    )
    .map_err(numeric(format!("xi-region T={}", cfg.transmissivity)))?;
    let mut table = Table::new(&["xi_re", "xi_im", "admissible", "skr"]);
    for c in cells {
        table.row(&[
            num(c.xi_re),
            num(c.xi_im),
            c.admissible.to_string(),
            opt_num(c.skr),
        ]);
    }
    Ok(table.into_string())
}

fn optimize(cfg: &RunConfig) -> Result<String, CliError> {
    let t = cfg.transmissivity;
    let point = format!("optimize-power T={t} scenario={}", cfg.scenario);
    let h = paper_channel(t).map_err(numeric(point.clone()))?;
    let opt = optimize_power(
        &h,
        &noise(cfg),
        cfg.beta,
        &cfg.budget,
        cfg.scenario,
        &cfg.settings,
    )
    .map_err(numeric(point))?;
    let mut table = Table::new(&[
        "T",
        "scenario",
        "v_a1",
        "v_a2",
        "skr",
        "mutual_info",
        "holevo",
    ]);
    table.row(&[
        num(t),
        cfg.scenario.to_string(),
        num(opt.v_a1),
        num(opt.v_a2),
        num(opt.skr),
        opt_num(opt.breakdown.map(|b| b.mutual_info)),
        opt_num(opt.breakdown.map(|b| b.holevo)),
    ]);
    Ok(table.into_string())
}

fn single_point(cfg: &RunConfig) -> Result<String, CliError> {
    let t = cfg.transmissivity;
    let v_eq = cfg
        .budget
        .equal_allocation()
        .map_err(numeric(format!("T={t}")))?;
    let (v1, v2) = (cfg.v_a1.unwrap_or(v_eq), cfg.v_a2.unwrap_or(v_eq));
    let noise = noise(cfg);
    let point = format!(
        "single-point T={t} V_a1={v1} V_a2={v2} xi_b1b2={}",
        noise.xi_b1b2
    );
    let h = paper_channel(t).map_err(numeric(point.clone()))?;
    let admissible = check_noise(&h, v1, v2, &noise)
        .map_err(numeric(point.clone()))?
        .is_admissible();
    let rates = if admissible {
        let gamma =
            assemble_covariance_parametric(&h, v1, v2, &noise).map_err(numeric(point.clone()))?;
        let selection = best_selection(&gamma, cfg.beta)
            .map_err(numeric(point.clone()))?
            .1;
        let multiplexed = skr_multiplexed(&gamma, cfg.beta).map_err(numeric(point.clone()))?;
        let mimo = skr_full_mimo(&gamma, cfg.beta).map_err(numeric(point))?;
        Some((selection.skr, multiplexed.total(), mimo))
    } else {
        None
    };
    let mut table = Table::new(&[
        "T",
        "v_a1",
        "v_a2",
        "xi_b1b2_re",
        "xi_b1b2_im",
        "admissible",
        "skr_selection",
        "skr_multiplexed",
        "skr_full_mimo",
        "mutual_info",
        "holevo",
    ]);
    table.row(&[
        num(t),
        num(v1),
        num(v2),
        num(noise.xi_b1b2.re),
        num(noise.xi_b1b2.im),
        admissible.to_string(),
        opt_num(rates.map(|r| r.0)),
        opt_num(rates.map(|r| r.1)),
        opt_num(rates.map(|r| r.2.skr)),
        opt_num(rates.map(|r| r.2.mutual_info)),
        opt_num(rates.map(|r| r.2.holevo)),
    ]);
    Ok(table.into_string())
}
