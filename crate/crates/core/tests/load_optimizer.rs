use std::f64::consts::PI;

use proptest::prelude::*;
use pvlc_core::load::*;
use pvlc_core::model::{CapacitanceModel, Load};
use pvlc_core::profile::ModuleProfile;

fn sweep(p: &ModuleProfile, lux: f64, grid: &LoadGrid) -> LoadSweepResult {
    sweep_load(&p.diode, &p.static_params, &p.capacitance, p.photocurrent(lux), grid).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gain_rises_and_bandwidth_falls_with_load(
        lux in 20.0f64..2000.0,
        points in 5usize..40,
        linear in any::<bool>(),
    ) {
        let p = ModuleProfile::reference_cdte();
        let grid = LoadGrid {
            spacing: if linear { GridSpacing::Linear } else { GridSpacing::Log },
            points,
            ..LoadGrid::default()
        };
        let r = sweep(&p, lux, &grid);
        prop_assert!(r.invalid.is_empty());
        // once R_L passes the open-circuit R_P, the collapsing R_P wins over R_L
        let rp_open = p.evaluate(lux, Load::Open).unwrap().model.parallel_resistance;
        for w in r.points.windows(2) {
            if w[1].r_l < rp_open {
                prop_assert!(w[1].gain > w[0].gain);
                prop_assert!(w[1].f3db < w[0].f3db);
            }
            prop_assert!(w[1].v_dc > w[0].v_dc);
        }
        for pt in &r.points {
            prop_assert!(pt.gain <= pt.r_l.min(pt.model.parallel_resistance));
            prop_assert!(r.points[r.best].gbp >= pt.gbp);
        }
    }

    #[test]
    fn brighter_light_narrows_a_fixed_load(
        rl in 100.0f64..2000.0,
        lux in 20.0f64..1000.0,
        ratio in 1.1f64..10.0,
    ) {
        let p = ModuleProfile::reference_cdte();
        let open = p.evaluate(lux * ratio, Load::Open).unwrap();
        prop_assume!(rl < open.model.parallel_resistance);
        let dim = p.evaluate(lux, Load::Resistive(rl)).unwrap();
        let bright = p.evaluate(lux * ratio, Load::Resistive(rl)).unwrap();
        prop_assert!(bright.f3db < dim.f3db);
    }

    #[test]
    fn bias_independent_capacitance_flattens_gbp(lux in 20.0f64..2000.0, cp in 1e-9f64..100e-9) {
        let mut p = ModuleProfile::reference_cdte();
        p.capacitance = CapacitanceModel::empirical(cp, 1e12).unwrap();
        let r = sweep(&p, lux, &LoadGrid::default());
        let want = 1.0 / (2.0 * PI * cp);
        for pt in &r.points {
            prop_assert!((pt.gbp / want - 1.0).abs() < 1e-9);
        }
        prop_assert_eq!(r.best, 0);
    }
}

#[test]
fn gain_bandwidth_tradeoff_across_the_default_grid_at_200_lux() {
    let r = sweep(&ModuleProfile::reference_cdte(), 200.0, &LoadGrid::default());
    assert!(r.points.windows(2).all(|w| w[1].gain > w[0].gain));
    assert!(r.points.windows(2).all(|w| w[1].f3db < w[0].f3db));
}

#[test]
fn gain_falls_past_the_open_circuit_resistance_at_1000_lux() {
    let p = ModuleProfile::reference_cdte();
    let a = p.evaluate(1000.0, Load::Resistive(2000.0)).unwrap();
    let b = p.evaluate(1000.0, Load::Resistive(4200.0)).unwrap();
    assert!(b.gain < a.gain);
}

#[test]
fn infinite_load_is_the_open_circuit_point() {
    let p = ModuleProfile::reference_cdte();
    let open = p.evaluate(200.0, Load::Open).unwrap();
    let far = p.evaluate(200.0, Load::Resistive(1e15)).unwrap();
    assert!((far.v_dc - open.v_dc).abs() < 1e-9);
    assert!((far.f3db / open.f3db - 1.0).abs() < 1e-9);
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let p = ModuleProfile::reference_cdte();
    let a = sweep(&p, 200.0, &LoadGrid::default());
    let b = sweep(&p, 200.0, &LoadGrid::default());
    assert_eq!(a, b);
    assert_eq!(a.points.len(), 60);
    assert_eq!(a.points[0].r_l, 100.0);
    assert!((a.points[59].r_l - 4200.0).abs() < 1e-9);
}

#[test]
fn refinement_never_loses_to_the_grid() {
    let p = ModuleProfile::reference_cdte();
    let r = sweep_load_with(
        &p.diode,
        &p.static_params,
        &p.capacitance,
        p.photocurrent(200.0),
        &LoadGrid::default(),
        true,
    )
    .unwrap();
    assert!(r.optimum().gbp >= r.best_point().gbp);
}
