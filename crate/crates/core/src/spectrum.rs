//! Finite-window Fourier transforms of 𝒱(t) and ln 𝒱(t) and peak labels.
//!
//! ℱ(ω_n) = (1/T)∫₀ᵀ 𝒱(t) e^{−iω_n t} dt with ω_n = 2πn/T, integrated by the
//! trapezoid rule on the sampling grid. Because e^{−iω_n T} = 1 the rule
//! folds into a plain DFT of g_k with g_0 = ½(𝒱_0 + 𝒱_M).

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{FftNum, FftPlanner};

use crate::error::{Error, Result};
use crate::num::{lit, modulus, to_f64, Float};
use crate::pipeline::{ChainContext, Scenario};
use crate::visibility::{uniform_grid, visibility_series, VisibilitySeries};

/// Floor applied to 𝒱 before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-12;
/// Peaks below this fraction of the largest non-DC magnitude are ignored.
pub const PEAK_THRESHOLD: f64 = 0.05;
/// Default window length in periods of the lowest e-mode.
pub const WINDOW_PERIODS: f64 = 400.0;
/// Default samples per period of the fastest e-mode.
pub const SAMPLES_PER_PERIOD: f64 = 32.0;

/// What a spectral peak was matched to; mode indices refer to the
/// ascending-sorted mode frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakLabel {
    Mode(usize),
    Double(usize),
    Sum(usize, usize),
    Unassigned,
}

impl fmt::Display for PeakLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeakLabel::Mode(j) => write!(f, "w{}", j + 1),
            PeakLabel::Double(j) => write!(f, "2w{}", j + 1),
            PeakLabel::Sum(j, k) => write!(f, "w{}+w{}", j + 1, k + 1),
            PeakLabel::Unassigned => write!(f, "unassigned"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<T> {
    pub bin: usize,
    pub frequency: T,
    pub magnitude: T,
    pub label: PeakLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult<T> {
    pub window: T,
    /// ω_n = 2πn/T for n = 0..M.
    pub frequencies: Vec<T>,
    pub f: Vec<Complex<T>>,
    pub f_log: Vec<Complex<T>>,
    /// Peaks of |ℱ_L|, ascending in frequency.
    pub peaks: Vec<Peak<T>>,
    /// Number of samples raised to [`LOG_FLOOR`] in the log channel.
    pub clamped: usize,
}

impl<T: Float> SpectrumResult<T> {
    /// Largest labeled peak.
    pub fn dominant_peak(&self) -> Option<&Peak<T>> {
        self.peaks.iter().fold(None, |best: Option<&Peak<T>>, p| match best {
            Some(b) if b.magnitude >= p.magnitude => Some(b),
            _ => Some(p),
        })
    }

    /// Spacing of the frequency grid, 2π/T.
    pub fn bin_width(&self) -> T {
        T::two_pi() / self.window
    }
}

fn trapezoid_dft<T: Float + FftNum>(samples: &[T]) -> Vec<Complex<T>> {
    let m = samples.len() - 1;
    let half: T = lit(0.5);
    let mut buffer: Vec<Complex<T>> = samples[..m]
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .collect();
    buffer[0] = Complex::new((samples[0] + samples[m]) * half, T::zero());
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut buffer);
    let scale = T::one() / T::from_usize(m).unwrap_or_else(T::one);
    buffer.iter().map(|c| c * scale).collect()
}

/// Both transforms of `series`, which must sample [0, T] uniformly.
pub fn compute_spectra<T: Float + FftNum>(
    series: &VisibilitySeries<T>,
    window: T,
) -> Result<SpectrumResult<T>> {
    let times = &series.times;
    if times.len() < 3 {
        return Err(Error::InvalidInput("need at least three samples".into()));
    }
    let m = times.len() - 1;
    let step = window / T::from_usize(m).unwrap_or_else(T::one);
    let tol = step * lit(1e-9);
    let first = times[0];
    let last = times[m];
    if gap(first, T::zero()) > tol || gap(last, window) > tol * lit(m as f64) {
        return Err(Error::InvalidInput("series does not span [0, T]".into()));
    }
    for k in 0..m {
        if gap(times[k + 1] - times[k], step) > step * lit(1e-6) {
            return Err(Error::InvalidInput(format!("non-uniform grid at sample {k}")));
        }
    }
    let floor: T = lit(LOG_FLOOR);
    let mut clamped = 0;
    let logs: Vec<T> = series
        .visibility
        .iter()
        .map(|&v| {
            if v < floor {
                clamped += 1;
                <T as nalgebra::ComplexField>::ln(floor)
            } else {
                <T as nalgebra::ComplexField>::ln(v)
            }
        })
        .collect();
    let f = trapezoid_dft(&series.visibility);
    let f_log = trapezoid_dft(&logs);
    let bin: T = T::two_pi() / window;
    let frequencies = (0..m)
        .map(|n| bin * T::from_usize(n).unwrap_or_else(T::zero))
        .collect();
    Ok(SpectrumResult {
        window,
        frequencies,
        f,
        f_log,
        peaks: Vec::new(),
        clamped,
    })
}

fn gap<T: Float>(a: T, b: T) -> T {
    nalgebra::ComplexField::abs(a - b)
}

fn candidates<T: Float>(modes: &[T]) -> Vec<(T, PeakLabel)> {
    let mut out = Vec::new();
    for (j, &w) in modes.iter().enumerate() {
        out.push((w, PeakLabel::Mode(j)));
    }
    for (j, &w) in modes.iter().enumerate() {
        out.push((w + w, PeakLabel::Double(j)));
    }
    for j in 0..modes.len() {
        for k in j + 1..modes.len() {
            out.push((modes[j] + modes[k], PeakLabel::Sum(j, k)));
        }
    }
    out
}

/// Finds the local maxima of |ℱ_L| over the positive half of the grid and
/// matches each to the nearest of ω_j, 2ω_j, ω_j + ω_k within `tol`.
pub fn label_peaks<T: Float>(mut spec: SpectrumResult<T>, mode_freqs: &[T], tol: T) -> SpectrumResult<T> {
    let mut modes = mode_freqs.to_vec();
    modes.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let table = candidates(&modes);
    let mags: Vec<T> = spec.f_log.iter().map(|&c| modulus(c)).collect();
    let half = mags.len() / 2;
    let top = mags[1..half.max(1)].iter().fold(T::zero(), |m, &x| m.max(x));
    let threshold = top * lit(PEAK_THRESHOLD);
    let mut peaks = Vec::new();
    for n in 1..half {
        let left = mags[n - 1];
        let right = mags[n + 1];
        if mags[n] > left && mags[n] > right && mags[n] >= threshold && mags[n] > T::zero() {
            let w = spec.frequencies[n];
            let mut best: Option<(T, PeakLabel)> = None;
            for &(c, label) in &table {
                let gap = gap(c, w);
                if gap <= tol && best.is_none_or(|(g, _)| gap < g) {
                    best = Some((gap, label));
                }
            }
            peaks.push(Peak {
                bin: n,
                frequency: w,
                magnitude: mags[n],
                label: best.map_or(PeakLabel::Unassigned, |(_, l)| l),
            });
        }
    }
    spec.peaks = peaks;
    spec
}

/// Default (window, samples) for an e-mode spectrum: [`WINDOW_PERIODS`]
/// periods of the lowest mode at [`SAMPLES_PER_PERIOD`] per period of the fastest.
pub fn default_window<T: Float>(mode_freqs: &[T]) -> Result<(T, usize)> {
    let lowest = mode_freqs.iter().fold(T::max_value().unwrap_or_else(T::one), |m, &w| m.min(w));
    let highest = mode_freqs.iter().fold(T::zero(), |m, &w| m.max(w));
    if !(lowest > T::zero()) {
        return Err(Error::InvalidInput("mode frequencies must be positive".into()));
    }
    let window = T::two_pi() / lowest * lit(WINDOW_PERIODS);
    let intervals = to_f64(window * highest / T::two_pi()) * SAMPLES_PER_PERIOD;
    Ok((window, intervals.ceil() as usize + 1))
}

/// 𝒱 sampled on [0, window] and transformed, with peaks labeled against the
/// e-state frequencies.
pub fn scenario_spectrum<T: Float + FftNum>(
    scenario: &Scenario<T>,
    window: T,
    samples: usize,
) -> Result<SpectrumResult<T>> {
    let grid = uniform_grid(window, samples);
    let series = visibility_series(&scenario.map, &grid)?;
    let spec = compute_spectra(&series, window)?;
    let modes: Vec<T> = scenario.basis_e.frequencies.iter().copied().collect();
    let tol = T::two_pi() / window;
    Ok(label_peaks(spec, &modes, tol))
}

/// One spectrum per g at fixed Δ, sharing the window so the ω grids agree.
pub fn spectrum_map<T: Float + FftNum>(
    ctx: &ChainContext<T>,
    delta: T,
    g_grid: &[T],
    window: T,
    samples: usize,
) -> Vec<Result<SpectrumResult<T>>> {
    g_grid
        .par_iter()
        .map(|&g| Scenario::build(ctx, g, delta).and_then(|s| scenario_spectrum(&s, window, samples)))
        .collect()
}
