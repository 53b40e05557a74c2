//! Structural checks on three-ion ⁹Be⁺ quench scenarios.

use std::f64::consts::TAU;

use ramsey_quench::crystal::{critical_aspect_ratio, Structure};
use ramsey_quench::params::{constants, derive_dimensionless, TrapSpec};
use ramsey_quench::pipeline::{ChainContext, Scenario};
use ramsey_quench::spectrum::{default_window, scenario_spectrum, spectrum_map, PeakLabel};
use ramsey_quench::visibility::{curvature, curvature_surface, local_maxima, uniform_grid, visibility_series};
use ramsey_quench::DimensionlessParams64;

const MHZ: f64 = TAU * 1e6;

fn params(nu_y_mhz: f64) -> DimensionlessParams64 {
    let spec = TrapSpec {
        ion_count: 3,
        ion_mass: constants::BERYLLIUM_9_MASS,
        ion_charge: 1.0,
        nu_x: MHZ,
        nu_y: nu_y_mhz * MHZ,
        nu_dip: 0.245 * MHZ,
    };
    derive_dimensionless(&spec, critical_aspect_ratio(3).unwrap()).unwrap()
}

fn context() -> ChainContext<f64> {
    ChainContext::from_params(&params(1.5))
}

#[test]
fn zigzag_to_linear_collapses_and_revives() {
    let p = params(1.545);
    let s = Scenario::from_params(&p).unwrap();
    assert_eq!(s.basis_g.equilibrium.structure, Structure::Zigzag);
    assert_eq!(s.basis_e.equilibrium.structure, Structure::Linear);
    let period = TAU / s.lowest_frequency();
    let series = visibility_series(&s.map, &uniform_grid(1.3 * period, 6001)).unwrap();
    let first_low = series.visibility.iter().position(|&v| v < 0.05).unwrap();
    assert!(series.times[first_low] < period);
    let best = local_maxima(&series.visibility)
        .into_iter()
        .filter(|&k| k > first_low)
        .max_by(|&a, &b| series.visibility[a].total_cmp(&series.visibility[b]))
        .unwrap();
    assert!(series.visibility[best] > 0.3);
    assert!((series.times[best] / period - 1.0).abs() < 0.1);
}

#[test]
fn spectrum_of_cross_transition_quench() {
    let s = Scenario::from_params(&params(1.545)).unwrap();
    let modes = s.basis_e.frequencies.as_slice();
    let (window, samples) = default_window(modes).unwrap();
    let spec = scenario_spectrum(&s, window, samples).unwrap();
    let top = spec.dominant_peak().unwrap();
    assert_eq!(top.label, PeakLabel::Mode(0));
    assert!((top.frequency - modes[0]).abs() <= spec.bin_width());
    assert!(spec.peaks.iter().any(|p| matches!(p.label, PeakLabel::Sum(_, _))));

    // A doubled window moves the labeled peaks by at most one bin of the
    // coarser grid.
    let (_, dense) = default_window(modes).unwrap();
    let longer = scenario_spectrum(&s, 2.0 * window, 2 * dense - 1).unwrap();
    for p in spec.peaks.iter().filter(|p| p.label != PeakLabel::Unassigned) {
        let twin = longer.peaks.iter().find(|q| q.label == p.label);
        if let Some(q) = twin {
            assert!((q.frequency - p.frequency).abs() <= spec.bin_width() * (1.0 + 1e-9), "{}", p.label);
        }
    }
}

#[test]
fn spectrum_map_ridges() {
    let ctx = context();
    let delta = 0.025;
    let gc = ctx.phase_boundary(delta).unwrap();
    let far = Scenario::build(&ctx, -0.1, delta).unwrap();
    let near = Scenario::build(&ctx, gc + 0.004, delta).unwrap();
    let high = Scenario::build(&ctx, 0.08, delta).unwrap();
    // One window for every column, set by the softest mode.
    let (window, samples) = default_window(near.basis_e.frequencies.as_slice()).unwrap();
    let g_grid = [-0.1, gc + 0.004, 0.08];
    let columns = spectrum_map(&ctx, delta, &g_grid, window, samples);
    let columns: Vec<_> = columns.into_iter().map(|c| c.unwrap()).collect();
    let bin = TAU / window;

    let ridge = columns[0].dominant_peak().unwrap();
    assert!((ridge.frequency - far.lowest_frequency()).abs() <= bin);

    let near_modes = near.basis_e.frequencies.clone();
    let labels: Vec<PeakLabel> = columns[1].peaks.iter().map(|p| p.label).collect();
    assert!(labels.contains(&PeakLabel::Double(0)), "{labels:?}");
    // Zigzag mode plus the axial breathing mode at √3.
    let breathing = near_modes
        .iter()
        .position(|w| (w - 3f64.sqrt()).abs() < 0.05)
        .expect("axial breathing mode");
    assert!(labels.contains(&PeakLabel::Sum(0, breathing)), "{labels:?}");

    let weak = &columns[2];
    let top = weak.dominant_peak().unwrap();
    assert!((top.frequency - 2.0 * high.lowest_frequency()).abs() <= bin);
    assert!(top.magnitude < 0.05, "{}", top.magnitude);
}

#[test]
fn curvature_surface_features() {
    let ctx = context();
    let surface = curvature_surface(&ctx, &[0.0, 0.025], &[-0.01, 0.02, 0.05]);
    assert_eq!(surface.len(), 2);
    assert_eq!(surface[0][2].as_ref().copied().unwrap(), 0.0);
    let cross = surface[1][0].as_ref().copied().unwrap();
    let linear = surface[1][1].as_ref().copied().unwrap();
    assert!(cross.abs() > linear.abs(), "{cross} vs {linear}");

    // Grid refinement inside one branch changes η smoothly.
    let gc = ctx.phase_boundary(0.025).unwrap();
    let eta = |g: f64| curvature(&Scenario::build(&ctx, g, 0.025).unwrap().map).unwrap();
    for g in [-0.08, -0.05, 0.03] {
        let (a, b, c) = (eta(g - 1e-4), eta(g), eta(g + 1e-4));
        assert!((a - 2.0 * b + c).abs() <= 1e-3 * b.abs().max(1e-6), "g = {g}");
    }
    assert!(gc < -0.01);
}
