//! Load-resistance sweeps for bias-voltage adaptation.
//!
//! A resistive load below the receiver's open-circuit R_P pulls V_DC down,
//! which lowers C_P along with the effective resistance. Every load is
//! evaluated at its own self-consistent operating point.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    log_space, small_signal_at, solve_operating_point, CapacitanceModel, DiodeParams, Load,
    PvStaticParams, SmallSignalModel,
};
use crate::schema;

pub const CSV_HEADER: [&str; 5] = ["r_l_ohm", "v_dc_v", "gain_ohm", "f3db_hz", "gbp_ohm_hz"];

/// Relative tolerance under which two gbp values count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Golden-section bracket width at which refinement stops, Ω.
const REFINE_TOLERANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSweepPoint {
    /// R_L, Ω. Infinite for an open circuit.
    pub r_l: f64,
    pub v_dc: f64,
    /// DC transimpedance R_P∥R_L, Ω.
    pub gain: f64,
    pub f3db: f64,
    /// gain·f3db, Ω·Hz.
    pub gbp: f64,
    pub model: SmallSignalModel,
}

/// Operating point, small-signal model and figures of merit at one load.
pub fn evaluate_load(
    d: &DiodeParams,
    s: &PvStaticParams,
    c: &CapacitanceModel,
    i_ph: f64,
    load: Load,
) -> Result<LoadSweepPoint> {
    if let Load::Resistive(r) = load {
        Load::ohms(r)?;
    }
    let op = solve_operating_point(d, s, c, i_ph, load)?;
    let model = small_signal_at(d, s, c, &op);
    let gain = model.loaded_resistance(load);
    let f3db = 1.0 / (2.0 * PI * gain * model.parallel_capacitance);
    Ok(LoadSweepPoint {
        r_l: load.resistance(),
        v_dc: op.bias_voltage,
        gain,
        f3db,
        gbp: gain * f3db,
        model,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpacing {
    #[default]
    Log,
    Linear,
}

impl std::str::FromStr for GridSpacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "log" => Ok(GridSpacing::Log),
            "linear" | "lin" => Ok(GridSpacing::Linear),
            _ => Err(Error::Validation(format!("unknown grid spacing '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: GridSpacing,
}

impl Default for LoadGrid {
    fn default() -> Self {
        Self {
            min: 100.0,
            max: 4200.0,
            points: 60,
            spacing: GridSpacing::Log,
        }
    }
}

impl LoadGrid {
    /// A one-point grid is accepted when `min == max`.
    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min > 0.0) {
            return Err(Error::Validation(format!(
                "grid bounds must be finite and positive, got [{}, {}]",
                self.min, self.max
            )));
        }
        let single = self.points == 1 && self.min == self.max;
        if !single && !(self.min < self.max && self.points >= 2) {
            return Err(Error::Validation(format!(
                "grid needs min < max and at least 2 points, got [{}, {}] with {}",
                self.min, self.max, self.points
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        Ok(match self.spacing {
            GridSpacing::Log => log_space(self.min, self.max, self.points),
            GridSpacing::Linear => {
                let n = self.points - 1;
                (0..self.points)
                    .map(|i| {
                        if i == n {
                            self.max
                        } else {
                            self.min + (self.max - self.min) * i as f64 / n as f64
                        }
                    })
                    .collect()
            }
        })
    }
}

/// A grid load whose evaluation failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvalidPoint {
    pub r_l: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSweepResult {
    /// Successfully evaluated points in ascending R_L.
    pub points: Vec<LoadSweepPoint>,
    pub invalid: Vec<InvalidPoint>,
    /// Index into `points` of the largest gbp.
    pub best: usize,
    /// Golden-section refinement of the optimum between grid neighbours,
    /// when requested and consistent with the grid.
    pub refined: Option<LoadSweepPoint>,
}

impl LoadSweepResult {
    pub fn best_point(&self) -> &LoadSweepPoint {
        &self.points[self.best]
    }

    /// The refined optimum if present, otherwise the grid optimum.
    pub fn optimum(&self) -> &LoadSweepPoint {
        self.refined.as_ref().unwrap_or(self.best_point())
    }

    pub fn summary(&self) -> SweepSummary {
        let p = self.optimum();
        SweepSummary {
            schema_version: schema::SCHEMA_VERSION,
            best_r_l_ohm: p.r_l,
            best_gbp: p.gbp,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for p in &self.points {
            w.write_record([
                p.r_l.to_string(),
                p.v_dc.to_string(),
                p.gain.to_string(),
                p.f3db.to_string(),
                p.gbp.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// True when gbp rises to the grid optimum and falls after it.
    pub fn is_unimodal(&self) -> bool {
        let g: Vec<f64> = self.points.iter().map(|p| p.gbp).collect();
        let b = self.best;
        g[..=b].windows(2).all(|w| w[1] >= w[0] * (1.0 - TIE_TOLERANCE))
            && g[b..].windows(2).all(|w| w[1] <= w[0] * (1.0 + TIE_TOLERANCE))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub best_r_l_ohm: f64,
    pub best_gbp: f64,
}

/// First index of the maximum, treating values within [`TIE_TOLERANCE`] as
/// equal so that ties resolve toward the earliest (smallest R_L) entry.
fn argmax_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b * (1.0 + TIE_TOLERANCE) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Evaluates every grid load in parallel and picks the gbp maximum.
pub fn sweep_load(
    d: &DiodeParams,
    s: &PvStaticParams,
    c: &CapacitanceModel,
    i_ph: f64,
    grid: &LoadGrid,
) -> Result<LoadSweepResult> {
    sweep_load_with(d, s, c, i_ph, grid, false)
}

pub fn sweep_load_with(
    d: &DiodeParams,
    s: &PvStaticParams,
    c: &CapacitanceModel,
    i_ph: f64,
    grid: &LoadGrid,
    refine: bool,
) -> Result<LoadSweepResult> {
    let loads = grid.values()?;
    let evaluated: Vec<(f64, Result<LoadSweepPoint>)> = loads
        .par_iter()
        .map(|&r| (r, evaluate_load(d, s, c, i_ph, Load::Resistive(r))))
        .collect();

    let mut points = Vec::with_capacity(evaluated.len());
    let mut invalid = Vec::new();
    for (r_l, res) in evaluated {
        match res {
            Ok(p) if p.gbp.is_finite() && p.gbp > 0.0 => points.push(p),
            Ok(p) => invalid.push(InvalidPoint {
                r_l,
                reason: format!("non-finite gain-bandwidth product {}", p.gbp),
            }),
            Err(e) => {
                log::warn!("load {r_l} Ω skipped: {e}");
                invalid.push(InvalidPoint {
                    r_l,
                    reason: e.to_string(),
                })
            }
        }
    }
    let best = argmax_first(points.iter().map(|p| p.gbp)).ok_or(Error::AllPointsInvalid)?;

    let mut result = LoadSweepResult {
        points,
        invalid,
        best,
        refined: None,
    };
    if refine && result.points.len() >= 2 {
        result.refined = refine_optimum(d, s, c, i_ph, &result);
    }
    Ok(result)
}

/// Golden-section search for the gbp maximum between the grid neighbours of
/// the grid optimum. Returns `None` when the search does not improve on the
/// grid, which signals that gbp is not unimodal on the bracket.
fn refine_optimum(
    d: &DiodeParams,
    s: &PvStaticParams,
    c: &CapacitanceModel,
    i_ph: f64,
    sweep: &LoadSweepResult,
) -> Option<LoadSweepPoint> {
    let b = sweep.best;
    let pts = &sweep.points;
    let mut lo = pts[b.saturating_sub(1)].r_l;
    let mut hi = pts[(b + 1).min(pts.len() - 1)].r_l;
    let gbp = |r: f64| {
        evaluate_load(d, s, c, i_ph, Load::Resistive(r))
            .map(|p| p.gbp)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut g1, mut g2) = (gbp(x1), gbp(x2));
    while hi - lo > REFINE_TOLERANCE {
        if g1 >= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv_phi * (hi - lo);
            g1 = gbp(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv_phi * (hi - lo);
            g2 = gbp(x2);
        }
    }
    let candidate = evaluate_load(d, s, c, i_ph, Load::Resistive(0.5 * (lo + hi))).ok()?;
    if candidate.gbp >= pts[b].gbp {
        Some(candidate)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn receiver() -> (DiodeParams, PvStaticParams) {
        (
            DiodeParams::new(5e-7, 20.0, 300.0).unwrap(),
            PvStaticParams::new(40e3, 10.0, 0.0).unwrap(),
        )
    }

    #[test]
    fn evaluate_load_chains_the_model() {
        let (d, s) = receiver();
        let c = CapacitanceModel::empirical(7e-9, 2.0).unwrap();
        let p = evaluate_load(&d, &s, &c, 3e-4, Load::Resistive(800.0)).unwrap();
        assert!(p.gain < 800.0 && p.gain < p.model.parallel_resistance);
        assert_relative_eq!(p.gbp, 1.0 / (2.0 * PI * p.model.parallel_capacitance), max_relative = 1e-12);
        assert!(evaluate_load(&d, &s, &c, 3e-4, Load::Resistive(-1.0)).is_err());
    }

    #[test]
    fn open_load_is_the_large_load_limit() {
        let (d, s) = receiver();
        let c = CapacitanceModel::empirical(7e-9, 2.0).unwrap();
        let open = evaluate_load(&d, &s, &c, 3e-4, Load::Open).unwrap();
        let far = evaluate_load(&d, &s, &c, 3e-4, Load::Resistive(1e15)).unwrap();
        assert!(open.r_l.is_infinite());
        assert_relative_eq!(open.f3db, far.f3db, max_relative = 1e-9);
        assert_relative_eq!(open.v_dc, far.v_dc, max_relative = 1e-9);
    }

    #[test]
    fn fixed_capacitance_gives_flat_gbp_and_first_point_best() {
        let (d, s) = receiver();
        let c = CapacitanceModel::empirical(20e-9, 1e9).unwrap();
        let r = sweep_load(&d, &s, &c, 3e-4, &LoadGrid::default()).unwrap();
        assert_eq!(r.points.len(), 60);
        assert_eq!(r.best, 0);
        for p in &r.points {
            assert_relative_eq!(p.gbp, r.points[0].gbp, max_relative = 1e-6);
        }
    }

    #[test]
    fn gain_rises_and_bandwidth_falls_with_load() {
        let (d, s) = receiver();
        let c = CapacitanceModel::empirical(7e-9, 2.0).unwrap();
        let r = sweep_load(&d, &s, &c, 3e-4, &LoadGrid::default()).unwrap();
        for w in r.points.windows(2) {
            assert!(w[1].gain > w[0].gain);
            assert!(w[1].f3db < w[0].f3db);
            assert!(w[1].v_dc > w[0].v_dc);
        }
    }

    #[test]
    fn grid_validation() {
        let single = LoadGrid { min: 600.0, max: 600.0, points: 1, spacing: GridSpacing::Log };
        assert_eq!(single.values().unwrap(), vec![600.0]);
        let bad = LoadGrid { min: 600.0, max: 100.0, ..LoadGrid::default() };
        assert!(bad.values().is_err());
        let bad = LoadGrid { points: 1, ..LoadGrid::default() };
        assert!(bad.values().is_err());
        let lin = LoadGrid { min: 100.0, max: 200.0, points: 3, spacing: GridSpacing::Linear };
        assert_eq!(lin.values().unwrap(), vec![100.0, 150.0, 200.0]);
    }

    #[test]
    fn single_point_grid_is_its_own_best() {
        let (d, s) = receiver();
        let c = CapacitanceModel::empirical(7e-9, 2.0).unwrap();
        let grid = LoadGrid { min: 600.0, max: 600.0, points: 1, spacing: GridSpacing::Log };
        let r = sweep_load_with(&d, &s, &c, 3e-4, &grid, true).unwrap();
        assert_eq!(r.best, 0);
        assert_eq!(r.summary().best_r_l_ohm, 600.0);
    }

    #[test]
    fn argmax_ties_prefer_the_first() {
        assert_eq!(argmax_first([1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax_first([2.0, 2.0 * (1.0 + 1e-14), 1.0]), Some(0));
        assert_eq!(argmax_first(std::iter::empty()), None);
    }

    #[test]
    fn refinement_never_worse_than_grid() {
        let (d, s) = receiver();
        let c = CapacitanceModel::empirical(7e-9, 2.0).unwrap();
        let r = sweep_load_with(&d, &s, &c, 3e-4, &LoadGrid::default(), true).unwrap();
        let opt = r.optimum();
        assert!(opt.gbp >= r.best_point().gbp);
        assert!(r.is_unimodal());
    }

    #[test]
    fn csv_header_and_rows() {
        let (d, s) = receiver();
        let c = CapacitanceModel::empirical(7e-9, 2.0).unwrap();
        let grid = LoadGrid { points: 3, ..LoadGrid::default() };
        let r = sweep_load(&d, &s, &c, 3e-4, &grid).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r_l_ohm,v_dc_v,gain_ohm,f3db_hz,gbp_ohm_hz\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
