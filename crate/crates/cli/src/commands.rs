//! One function per subcommand. Each returns the manifest of its run.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use rayon::prelude::*;

use ramsey_quench::crystal::{critical_aspect_ratio, phase_point, GRADIENT_TOLERANCE, LINEAR_DEADBAND};
use ramsey_quench::pipeline::{ChainContext, Scenario};
use ramsey_quench::quench::MAX_CONDITION;
use ramsey_quench::spectrum::{
    compute_spectra, default_window, label_peaks, scenario_spectrum, SpectrumResult, LOG_FLOOR, PEAK_THRESHOLD,
    SAMPLES_PER_PERIOD,
};
use ramsey_quench::visibility::{
    curvature_surface, first_revival, uniform_grid, visibility_series, MODULUS_SLACK,
};
use ramsey_quench::DimensionlessParams64;

use crate::config::{ConfigError, ScenarioConfig};
use crate::output::{write_dataset, Cell, Manifest, PointError, Table, Tolerances, Units};
use crate::RunError;

pub struct Run<'a> {
    pub command: &'a str,
    pub config: &'a ScenarioConfig,
    pub out: &'a Path,
    pub threads: usize,
}

struct Record {
    manifest: Manifest,
}

impl Record {
    fn new(run: &Run, units: &DimensionlessParams64) -> Self {
        let nu_x = run.config.nu_x();
        Self {
            manifest: Manifest {
                command: run.command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                threads: run.threads,
                seeds: Vec::new(),
                outputs: Vec::new(),
                points_evaluated: 0,
                points_failed: 0,
                units: Units {
                    nu_x_rad_per_s: nu_x,
                    length_unit_m: units.length_unit,
                    time_unit_s: units.time_unit,
                    time_unit_us: units.time_unit * 1e6,
                    frequency_unit_mhz: nu_x / TAU / 1e6,
                    hbar_tilde: units.hbar_tilde,
                },
                tolerances: Tolerances {
                    equilibrium_gradient: GRADIENT_TOLERANCE,
                    linear_deadband: LINEAR_DEADBAND,
                    max_condition_u: MAX_CONDITION,
                    modulus_slack: MODULUS_SLACK,
                    revival_threshold: run.config.revivals.threshold,
                    spectrum_log_floor: LOG_FLOOR,
                    spectrum_peak_threshold: PEAK_THRESHOLD,
                },
                dimensionless: BTreeMap::new(),
                physical: BTreeMap::new(),
                lists: BTreeMap::new(),
                config: run.config.clone(),
                errors: Vec::new(),
            },
        }
    }

    fn dimensionless(&mut self, key: &str, value: f64) {
        self.manifest.dimensionless.insert(key.into(), value);
    }

    fn physical(&mut self, key: &str, value: f64) {
        self.manifest.physical.insert(key.into(), value);
    }

    fn list(&mut self, key: &str, values: Vec<f64>) {
        self.manifest.lists.insert(key.into(), values);
    }

    fn point(&mut self, p: &DimensionlessParams64) {
        let mhz = self.manifest.units.frequency_unit_mhz;
        for (k, v) in [
            ("alpha", p.alpha),
            ("alpha_dip", p.alpha_dip),
            ("alpha_c", p.alpha_c),
            ("g", p.g),
            ("delta", p.delta),
        ] {
            self.dimensionless(k, v);
        }
        self.physical("nu_y_mhz", p.alpha.sqrt() * mhz);
        self.physical("nu_dip_khz", p.alpha_dip.sqrt() * mhz * 1e3);
        self.physical("nu_c_mhz", p.alpha_c.sqrt() * mhz);
    }

    fn scenario(&mut self, s: &Scenario<f64>) {
        let mhz = self.manifest.units.frequency_unit_mhz;
        let wg: Vec<f64> = s.basis_g.frequencies.iter().copied().collect();
        let we: Vec<f64> = s.basis_e.frequencies.iter().copied().collect();
        self.list("nu_g_mhz", wg.iter().map(|w| w * mhz).collect());
        self.list("nu_e_mhz", we.iter().map(|w| w * mhz).collect());
        self.list("omega_g", wg);
        self.list("omega_e", we);
        self.dimensionless("ground_state_overlap", s.map.g0());
        self.dimensionless("beta_e_norm", s.map.beta_e.norm());
    }

    fn fail(&mut self, e: PointError) {
        self.manifest.errors.push(e);
    }

    fn emit(&mut self, out: &Path, name: &str, table: &Table) -> Result<(), RunError> {
        write_dataset(out, name, table)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, evaluated: usize) -> Manifest {
        self.manifest.points_evaluated = evaluated;
        self.manifest.points_failed = self.manifest.errors.len();
        self.manifest
    }
}

fn alpha_c(n: usize) -> Result<f64, RunError> {
    critical_aspect_ratio(n).map_err(RunError::Numeric)
}

fn point_scenario(run: &Run, rec: &mut Record) -> Result<(DimensionlessParams64, Scenario<f64>), RunError> {
    let n = run.config.trap.ion_count;
    let p = run.config.resolve(n, alpha_c(n)?)?;
    rec.point(&p);
    let s = Scenario::from_params(&p).map_err(RunError::Numeric)?;
    rec.scenario(&s);
    Ok((p, s))
}

pub fn visibility(run: &Run) -> Result<Manifest, RunError> {
    let cfg = run.config;
    let units = cfg.units()?;
    let mut rec = Record::new(run, &units);
    let (p, s) = point_scenario(run, &mut rec)?;
    let t_max = p.time_from_us(cfg.time.t_max_us);
    rec.dimensionless("t_max", t_max);
    rec.physical("t_max_us", cfg.time.t_max_us);
    let grid = uniform_grid(t_max, cfg.time.samples);
    let series = visibility_series(&s.map, &grid).map_err(RunError::Numeric)?;
    let mut table = Table::new(&["t_us", "visibility", "overlap_re", "overlap_im"]);
    for k in 0..grid.len() {
        let o = series.overlap[k];
        table.row(vec![p.time_to_us(grid[k]).into(), series.visibility[k].into(), o.re.into(), o.im.into()]);
    }
    rec.emit(run.out, "visibility.csv", &table)?;
    Ok(rec.finish(grid.len()))
}

pub fn modes(run: &Run) -> Result<Manifest, RunError> {
    let units = run.config.units()?;
    let mut rec = Record::new(run, &units);
    let (p, s) = point_scenario(run, &mut rec)?;
    let mhz = rec.manifest.units.frequency_unit_mhz;
    let um = p.length_unit * 1e6;
    let mut table = Table::new(&["state", "structure", "index", "omega", "nu_mhz"]);
    let mut eq = Table::new(&["state", "ion", "x", "y", "x_um", "y_um"]);
    for basis in [&s.basis_g, &s.basis_e] {
        let state = basis.state.to_string();
        let structure = basis.equilibrium.structure.to_string();
        for (l, &w) in basis.frequencies.iter().enumerate() {
            table.row(vec![state.as_str().into(), structure.as_str().into(), l.into(), w.into(), (w * mhz).into()]);
        }
        let c = &basis.equilibrium;
        for i in 0..c.ion_count() {
            let (x, y) = (c.x(i), c.y(i));
            eq.row(vec![state.as_str().into(), i.into(), x.into(), y.into(), (x * um).into(), (y * um).into()]);
        }
    }
    rec.physical("length_unit_um", um);
    rec.emit(run.out, "modes.csv", &table)?;
    rec.emit(run.out, "equilibrium.csv", &eq)?;
    Ok(rec.finish(1))
}

pub fn curvature(run: &Run) -> Result<Manifest, RunError> {
    let cfg = run.config;
    let units = cfg.units()?;
    let mut rec = Record::new(run, &units);
    let n = cfg.trap.ion_count;
    let ctx = ChainContext::new(n, units.hbar_tilde).map_err(RunError::Numeric)?;
    rec.dimensionless("alpha_c", ctx.alpha_c);
    let gs = cfg.g_values(ctx.alpha_c)?;
    let ds = cfg.delta_values(ctx.alpha_c)?;
    let surface = curvature_surface(&ctx, &ds, &gs);
    // η is in units of ν_x²; this converts it to μs⁻².
    let per_us2 = (cfg.nu_x() * 1e-6).powi(2);
    rec.physical("eta_unit_per_us2", per_us2);
    let mut table = Table::new(&["g", "delta", "eta", "eta_per_us2"]);
    let mut index = 0;
    for (i, row) in surface.iter().enumerate() {
        for (j, r) in row.iter().enumerate() {
            let (g, delta) = (gs[j], ds[i]);
            match r {
                Ok(eta) => table.row(vec![g.into(), delta.into(), (*eta).into(), (eta * per_us2).into()]),
                Err(e) => {
                    table.row(vec![g.into(), delta.into(), Cell::Empty, Cell::Empty]);
                    rec.fail(PointError {
                        index,
                        ion_count: Some(n),
                        g: Some(g),
                        delta: Some(delta),
                        message: e.to_string(),
                    });
                }
            }
            index += 1;
        }
    }
    rec.emit(run.out, "curvature.csv", &table)?;
    Ok(rec.finish(index))
}

pub fn phase_diagram(run: &Run) -> Result<Manifest, RunError> {
    let cfg = run.config;
    let units = cfg.units()?;
    let mut rec = Record::new(run, &units);
    let n = cfg.trap.ion_count;
    let ctx = ChainContext::new(n, units.hbar_tilde).map_err(RunError::Numeric)?;
    rec.dimensionless("alpha_c", ctx.alpha_c);
    let gs = cfg.g_values(ctx.alpha_c)?;
    let ds = cfg.delta_values(ctx.alpha_c)?;
    let grid: Vec<(f64, f64)> = ds.iter().flat_map(|&d| gs.iter().map(move |&g| (g, d))).collect();
    let points: Vec<_> = grid
        .par_iter()
        .map(|&(g, d)| phase_point(n, ctx.alpha_c, g, d))
        .collect();
    let mut table = Table::new(&["g", "delta", "structure_g", "structure_e"]);
    for (index, (&(g, delta), r)) in grid.iter().zip(&points).enumerate() {
        match r {
            Ok(pp) => table.row(vec![
                g.into(),
                delta.into(),
                pp.structure_g.to_string().into(),
                pp.structure_e.to_string().into(),
            ]),
            Err(e) => {
                table.row(vec![g.into(), delta.into(), Cell::Empty, Cell::Empty]);
                rec.fail(PointError {
                    index,
                    ion_count: Some(n),
                    g: Some(g),
                    delta: Some(delta),
                    message: e.to_string(),
                });
            }
        }
    }
    let boundary: Vec<_> = ds.par_iter().map(|&d| ctx.phase_boundary(d)).collect();
    let mut bt = Table::new(&["delta", "g_c"]);
    for (k, (&delta, r)) in ds.iter().zip(&boundary).enumerate() {
        match r {
            Ok(gc) => bt.row(vec![delta.into(), (*gc).into()]),
            Err(e) => {
                bt.row(vec![delta.into(), Cell::Empty]);
                rec.fail(PointError {
                    index: grid.len() + k,
                    ion_count: Some(n),
                    g: None,
                    delta: Some(delta),
                    message: format!("phase boundary: {e}"),
                });
            }
        }
    }
    rec.emit(run.out, "phase_diagram.csv", &table)?;
    rec.emit(run.out, "phase_boundary.csv", &bt)?;
    Ok(rec.finish(grid.len() + ds.len()))
}

/// Sample count for a window at [`SAMPLES_PER_PERIOD`] per fastest period.
fn samples_for(window: f64, fastest: f64) -> usize {
    (window * fastest / TAU * SAMPLES_PER_PERIOD).ceil() as usize + 1
}

fn spectrum_window(
    cfg: &ScenarioConfig,
    p: &DimensionlessParams64,
    slowest: f64,
    fastest: f64,
) -> Result<(f64, usize), RunError> {
    let (default_t, default_m) = default_window(&[slowest, fastest]).map_err(RunError::Numeric)?;
    let window = cfg.spectrum.window_us.map_or(default_t, |w| p.time_from_us(w));
    let samples = match (cfg.spectrum.samples, cfg.spectrum.window_us) {
        (Some(m), _) => m,
        (None, None) => default_m,
        (None, Some(_)) => samples_for(window, fastest),
    };
    Ok((window, samples))
}

fn frequency_range(s: &Scenario<f64>) -> (f64, f64) {
    let w = &s.basis_e.frequencies;
    (w.min(), w.max())
}

pub fn spectrum(run: &Run) -> Result<Manifest, RunError> {
    let cfg = run.config;
    let units = cfg.units()?;
    let mut rec = Record::new(run, &units);
    let (p, s) = point_scenario(run, &mut rec)?;
    let (slow, fast) = frequency_range(&s);
    let (window, samples) = spectrum_window(cfg, &p, slow, fast)?;
    let spec = scenario_spectrum(&s, window, samples).map_err(RunError::Numeric)?;
    record_window(&mut rec, &p, &spec, samples);
    let mhz = rec.manifest.units.frequency_unit_mhz;
    let mut table = Table::new(&["omega", "nu_mhz", "f_re", "f_im", "f_abs", "f_log_re", "f_log_im", "f_log_abs"]);
    for (k, &w) in spec.frequencies.iter().enumerate() {
        let (f, fl) = (spec.f[k], spec.f_log[k]);
        table.row(vec![
            w.into(),
            (w * mhz).into(),
            f.re.into(),
            f.im.into(),
            f.norm().into(),
            fl.re.into(),
            fl.im.into(),
            fl.norm().into(),
        ]);
    }
    rec.emit(run.out, "spectrum.csv", &table)?;
    rec.emit(run.out, "peaks.csv", &peak_table(&spec, mhz, None))?;
    Ok(rec.finish(samples))
}

fn record_window(rec: &mut Record, p: &DimensionlessParams64, spec: &SpectrumResult<f64>, samples: usize) {
    rec.dimensionless("window", spec.window);
    rec.dimensionless("bin_width", spec.bin_width());
    rec.dimensionless("samples", samples as f64);
    rec.dimensionless("log_clamped_samples", spec.clamped as f64);
    rec.physical("window_us", p.time_to_us(spec.window));
    rec.physical("bin_width_mhz", spec.bin_width() * rec.manifest.units.frequency_unit_mhz);
}

fn peak_table(spec: &SpectrumResult<f64>, mhz: f64, g: Option<f64>) -> Table {
    let mut t = match g {
        Some(_) => Table::new(&["g", "omega", "nu_mhz", "magnitude", "label"]),
        None => Table::new(&["omega", "nu_mhz", "magnitude", "label"]),
    };
    append_peaks(&mut t, spec, mhz, g);
    t
}

fn append_peaks(t: &mut Table, spec: &SpectrumResult<f64>, mhz: f64, g: Option<f64>) {
    for p in &spec.peaks {
        let mut row: Vec<Cell> = g.map(|g| vec![g.into()]).unwrap_or_default();
        row.extend([p.frequency.into(), (p.frequency * mhz).into(), p.magnitude.into(), p.label.to_string().into()]);
        t.row(row);
    }
}

pub fn spectrum_map(run: &Run) -> Result<Manifest, RunError> {
    let cfg = run.config;
    let units = cfg.units()?;
    let mut rec = Record::new(run, &units);
    let n = cfg.trap.ion_count;
    let ctx = ChainContext::new(n, units.hbar_tilde).map_err(RunError::Numeric)?;
    rec.dimensionless("alpha_c", ctx.alpha_c);
    let gs = cfg.g_values(ctx.alpha_c)?;
    let ds = cfg.delta_values(ctx.alpha_c)?;
    let [delta] = ds[..] else {
        return Err(ConfigError::new("sweep.delta", "spectrum-map takes a single delta").into());
    };
    rec.dimensionless("delta", delta);
    let scenarios: Vec<_> = gs.par_iter().map(|&g| Scenario::build(&ctx, g, delta)).collect();
    let ranges: Vec<(f64, f64)> = scenarios.iter().flatten().map(frequency_range).collect();
    if ranges.is_empty() {
        for (index, (g, r)) in gs.iter().zip(&scenarios).enumerate() {
            if let Err(e) = r {
                rec.fail(PointError { index, ion_count: Some(n), g: Some(*g), delta: Some(delta), message: e.to_string() });
            }
        }
        return Err(RunError::Numeric(ramsey_quench::Error::Numeric(
            "no point of the g sweep has stable structures".into(),
        )));
    }
    let slow = ranges.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let fast = ranges.iter().map(|r| r.1).fold(0.0, f64::max);
    let (window, samples) = spectrum_window(cfg, &units, slow, fast)?;
    // Sums of two modes reach 2ω_max; nothing above that carries a label.
    let top = 2.0 * fast + TAU / window;
    let grid = uniform_grid(window, samples);
    let spectra: Vec<_> = scenarios
        .par_iter()
        .map(|r| {
            let s = r.as_ref().map_err(Clone::clone)?;
            let series = visibility_series(&s.map, &grid)?;
            let spec = compute_spectra(&series, window)?;
            let modes: Vec<f64> = s.basis_e.frequencies.iter().copied().collect();
            Ok::<_, ramsey_quench::Error>(label_peaks(spec, &modes, TAU / window))
        })
        .collect();
    let mhz = rec.manifest.units.frequency_unit_mhz;
    let mut map = Table::new(&["g", "omega", "nu_mhz", "f_log_abs"]);
    let mut peaks = Table::new(&["g", "omega", "nu_mhz", "magnitude", "label"]);
    let mut ridge = Table::new(&["g", "omega", "nu_mhz", "magnitude", "label"]);
    for (index, (&g, r)) in gs.iter().zip(&spectra).enumerate() {
        match r {
            Ok(spec) => {
                for (k, &w) in spec.frequencies.iter().enumerate().take_while(|(_, &w)| w <= top) {
                    map.row(vec![g.into(), w.into(), (w * mhz).into(), spec.f_log[k].norm().into()]);
                }
                append_peaks(&mut peaks, spec, mhz, Some(g));
                match spec.dominant_peak() {
                    Some(pk) => ridge.row(vec![
                        g.into(),
                        pk.frequency.into(),
                        (pk.frequency * mhz).into(),
                        pk.magnitude.into(),
                        pk.label.to_string().into(),
                    ]),
                    None => ridge.row(vec![g.into(), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]),
                }
            }
            Err(e) => {
                ridge.row(vec![g.into(), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
                rec.fail(PointError { index, ion_count: Some(n), g: Some(g), delta: Some(delta), message: e.to_string() });
            }
        }
    }
    rec.dimensionless("window", window);
    rec.dimensionless("bin_width", TAU / window);
    rec.dimensionless("samples", samples as f64);
    rec.dimensionless("omega_max_written", top);
    rec.physical("window_us", units.time_to_us(window));
    rec.physical("bin_width_mhz", TAU / window * mhz);
    rec.emit(run.out, "spectrum_map.csv", &map)?;
    rec.emit(run.out, "spectrum_map_peaks.csv", &peaks)?;
    rec.emit(run.out, "spectrum_map_ridge.csv", &ridge)?;
    Ok(rec.finish(gs.len()))
}

pub fn revivals(run: &Run) -> Result<Manifest, RunError> {
    let cfg = run.config;
    let units = cfg.units()?;
    let mut rec = Record::new(run, &units);
    let settings = &cfg.revivals;
    let mut table = Table::new(&["N", "g", "t_first_peak_us"]);
    let mut scaled = Table::new(&["N", "g_minus_gc", "t_first_peak_nu_c"]);
    let mut index = 0;
    let mut boundaries = Vec::new();
    let mut deltas = Vec::new();
    let time_us = units.time_unit * 1e6;
    for &n in &settings.ion_counts {
        let ctx = ChainContext::new(n, units.hbar_tilde).map_err(RunError::Numeric)?;
        let gs = cfg.g_values(ctx.alpha_c)?;
        let ds = cfg.delta_values(ctx.alpha_c)?;
        let [delta] = ds[..] else {
            return Err(ConfigError::new("sweep.delta", "revivals takes a single delta").into());
        };
        deltas.push(delta);
        let gc = ctx.phase_boundary(delta).ok();
        boundaries.push(gc.unwrap_or(f64::NAN));
        let peaks: Vec<_> = gs
            .par_iter()
            .map(|&g| {
                let s = Scenario::build(&ctx, g, delta)?;
                let t_max = settings.periods * TAU / s.lowest_frequency();
                let series = visibility_series(&s.map, &uniform_grid(t_max, settings.samples))?;
                Ok::<_, ramsey_quench::Error>(first_revival(&series, settings.threshold).map(|k| series.times[k]))
            })
            .collect();
        for (&g, r) in gs.iter().zip(&peaks) {
            let shifted = gc.map(|gc| g - gc);
            match r {
                Ok(t) => {
                    table.row(vec![n.into(), g.into(), t.map(|t| t * time_us).into()]);
                    scaled.row(vec![n.into(), shifted.into(), t.map(|t| t * ctx.alpha_c.sqrt()).into()]);
                }
                Err(e) => {
                    table.row(vec![n.into(), g.into(), Cell::Empty]);
                    scaled.row(vec![n.into(), shifted.into(), Cell::Empty]);
                    rec.fail(PointError { index, ion_count: Some(n), g: Some(g), delta: Some(delta), message: e.to_string() });
                }
            }
            index += 1;
        }
    }
    rec.list("delta", deltas);
    rec.list("g_c", boundaries);
    rec.list("ion_counts", settings.ion_counts.iter().map(|&n| n as f64).collect());
    rec.dimensionless("revival_periods", settings.periods);
    rec.dimensionless("revival_samples", settings.samples as f64);
    rec.emit(run.out, "revivals.csv", &table)?;
    rec.emit(run.out, "revivals_scaled.csv", &scaled)?;
    Ok(rec.finish(index))
}
