use std::fs::File;
use std::io::BufWriter;

use pvlc_core::error::{Error, Result};
use pvlc_core::fit::{fit_spectrum, ImpedanceSpectrum};
use pvlc_core::link::{run_link, write_waveform_csv, LinkConfig};
use pvlc_core::load::{sweep_load_with, LoadGrid, LoadSweepResult};
use pvlc_core::model::{bandwidth_3db, dynamic_response, log_space, receiver_impedance, Load};
use pvlc_core::profile::{calibrate, AnchorSet, ModuleProfile};
use pvlc_core::schema::SCHEMA_VERSION;
use serde::Serialize;

use crate::{CalibrateArgs, Cli, Command, FitArgs, Format, ResponseArgs, SimulateArgs, SweepArgs};

/// Runs the selected command and returns the bytes to emit.
pub fn run(cli: &Cli) -> Result<Vec<u8>> {
    match &cli.command {
        Command::Fit(a) => fit(a, cli.format.unwrap_or(Format::Json)),
        Command::Response(a) => response(a, cli.format.unwrap_or(Format::Csv)),
        Command::Sweep(a) => sweep(a, cli.format.unwrap_or(Format::Csv)),
        Command::Simulate(a) => simulate(a, cli.seed, cli.format.unwrap_or(Format::Json)),
        Command::Calibrate(a) => calibrate_cmd(a, cli.format.unwrap_or(Format::Json)),
    }
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn csv_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn fit(a: &FitArgs, format: Format) -> Result<Vec<u8>> {
    let spectrum = ImpedanceSpectrum::load(&a.spectrum, a.meta.as_deref())?;
    let result = fit_spectrum(&spectrum, a.weighting)?.into_converged()?;
    let report = result.report();
    log::info!(
        "fit: R_S={:.4} Ω R_P={:.4} Ω C_P={:.4e} F, residual {:.3e} after {} iterations",
        report.r_s_ohm,
        report.r_p_ohm,
        report.c_p_f,
        report.residual,
        report.iterations
    );
    match format {
        Format::Json => json(&report),
        Format::Csv => csv_rows([report]),
    }
}

#[derive(Serialize)]
struct ResponseRow {
    f_hz: f64,
    h2_ohm2: f64,
    z_ti_ohm: f64,
}

#[derive(Serialize)]
struct ResponseDoc {
    schema_version: u32,
    illuminance_lux: f64,
    load: Load,
    f3db_hz: f64,
    samples: Vec<ResponseRow>,
}

fn response(a: &ResponseArgs, format: Format) -> Result<Vec<u8>> {
    if !(a.fmin > 0.0 && a.fmin < a.fmax && a.fmax.is_finite()) {
        return Err(Error::Validation(format!(
            "need 0 < fmin < fmax, got fmin={} fmax={}",
            a.fmin, a.fmax
        )));
    }
    if a.points < 2 {
        return Err(Error::Validation(format!("need at least 2 points, got {}", a.points)));
    }
    let profile = ModuleProfile::load(&a.profile)?;
    let model = profile.small_signal(a.lux, a.load)?;
    let freqs = log_space(a.fmin, a.fmax, a.points);
    let resp = dynamic_response(&model, a.load, &freqs)?;
    let rows: Vec<ResponseRow> = resp
        .samples
        .iter()
        .map(|s| ResponseRow {
            f_hz: s.frequency,
            h2_ohm2: s.value,
            z_ti_ohm: receiver_impedance(&model, a.load, s.frequency).norm(),
        })
        .collect();
    match format {
        Format::Csv => csv_rows(rows),
        Format::Json => json(&ResponseDoc {
            schema_version: SCHEMA_VERSION,
            illuminance_lux: a.lux,
            load: a.load,
            f3db_hz: bandwidth_3db(&resp)?,
            samples: rows,
        }),
    }
}

#[derive(Serialize)]
struct SweepDoc<'a> {
    schema_version: u32,
    illuminance_lux: f64,
    best_r_l_ohm: f64,
    best_gbp: f64,
    unimodal: bool,
    sweep: &'a LoadSweepResult,
}

fn sweep(a: &SweepArgs, format: Format) -> Result<Vec<u8>> {
    let grid = LoadGrid {
        min: a.rmin,
        max: a.rmax,
        points: a.points,
        spacing: a.spacing,
    };
    grid.validate()?;
    let p = ModuleProfile::load(&a.profile)?;
    let result = sweep_load_with(
        &p.diode,
        &p.static_params,
        &p.capacitance,
        p.photocurrent(a.lux),
        &grid,
        a.refine,
    )?;
    for bad in &result.invalid {
        log::warn!("R_L = {} Ω skipped: {}", bad.r_l, bad.reason);
    }
    let best = result.optimum();
    log::info!("best R_L = {:.1} Ω, gbp = {:.4e} Ω·Hz", best.r_l, best.gbp);
    match format {
        Format::Csv => {
            let mut out = Vec::new();
            result.write_csv(&mut out)?;
            Ok(out)
        }
        Format::Json => json(&SweepDoc {
            schema_version: SCHEMA_VERSION,
            illuminance_lux: a.lux,
            best_r_l_ohm: best.r_l,
            best_gbp: best.gbp,
            unimodal: result.is_unimodal(),
            sweep: &result,
        }),
    }
}

fn simulate(a: &SimulateArgs, seed: Option<u64>, format: Format) -> Result<Vec<u8>> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| Error::Io(format!("{}: {e}", a.config.display())))?;
    let mut cfg = LinkConfig::from_json(&text)?;
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    if let Some(path) = &a.waveform {
        let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        write_waveform_csv(&cfg, BufWriter::new(file))?;
    }
    let result = run_link(&cfg)?;
    if !result.converged_sync {
        log::warn!("frame synchronization failed");
    }
    match format {
        Format::Json => json(&result),
        Format::Csv => csv_rows([result]),
    }
}

fn calibrate_cmd(a: &CalibrateArgs, format: Format) -> Result<Vec<u8>> {
    let set = AnchorSet::load(&a.anchors)?;
    let report = calibrate(&set)?;
    for fit in &report.anchors {
        log::info!(
            "{}: target {:.4e}, predicted {:.4e} ({:+.1}%)",
            fit.anchor,
            fit.target,
            fit.predicted,
            100.0 * fit.relative_error
        );
    }
    if !report.converged {
        log::warn!("calibration stopped after {} iterations without converging", report.iterations);
    }
    if let Some(path) = &a.report {
        std::fs::write(path, json(&report)?)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    match format {
        Format::Json => json(&report.profile),
        Format::Csv => csv_rows(&report.anchors),
    }
}
