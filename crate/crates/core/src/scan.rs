//! Resonance scans over the qubit frequency and peak detection.

use std::io::Write;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{observables, Spectral};
use crate::effective::{solve_resonance, ResonanceTarget};
use crate::error::{Error, Result};
use crate::hamiltonian::build_hamiltonian;
use crate::model::ModelParams;
use crate::operator::StateVector;
use crate::protocol::DurationRule;
use crate::space::HilbertSpace;

/// Grid size used by the figure presets.
pub const DEFAULT_POINTS: usize = 801;

/// How grid points are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

/// `points` evenly spaced values on `[lo, hi]`, both ends included.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 points, got {points}")));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidGrid(format!("invalid window [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
        .collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid("non-finite grid value".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Scan duration from a rule. Coupling-based rules evaluate the reference
/// coupling at the reference channel's resonance, so the duration is the
/// same for every grid point.
pub fn scan_duration(
    rule: DurationRule,
    reference: Option<&ResonanceTarget>,
    params: &ModelParams,
) -> Result<f64> {
    match (rule, reference) {
        (DurationRule::Fixed(_), _) => rule.resolve(None, params),
        (_, Some(target)) => {
            let omega_q = solve_resonance(target, params)?;
            rule.resolve(Some(target), &params.with_omega_q(omega_q))
        }
        (_, None) => rule.resolve(None, params),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub ratio: f64,
    pub nq: f64,
    pub nph: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanCurve {
    pub duration: f64,
    pub points: Vec<ScanPoint>,
}

impl ScanCurve {
    pub fn ratios(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ratio).collect()
    }

    pub fn nq(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.nq).collect()
    }

    /// Grid point with the largest `<N_q>`.
    pub fn argmax(&self) -> Option<ScanPoint> {
        self.points
            .iter()
            .copied()
            .max_by(|a, b| a.nq.total_cmp(&b.nq))
    }

    /// Spacing of a uniform grid (first interval).
    pub fn grid_step(&self) -> Option<f64> {
        match self.points.as_slice() {
            [a, b, ..] => Some(b.ratio - a.ratio),
            _ => None,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["ratio", "nq", "nph"])?;
        for p in &self.points {
            w.write_record([p.ratio.to_string(), p.nq.to_string(), p.nph.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn scan_point(psi0: &StateVector, ratio: f64, duration: f64, params: &ModelParams, space: &HilbertSpace) -> Result<ScanPoint> {
    let p = params.with_omega_q(params.omega_q_from_ratio(ratio));
    let spectral = Spectral::new(&build_hamiltonian(&p, space)?)?;
    let obs = observables(&spectral.evolve_state(psi0, duration)?);
    Ok(ScanPoint {
        ratio,
        nq: obs.nq,
        nph: obs.nph,
    })
}

/// Evolves `psi0` for `duration` at every grid value of `(omega_r - omega_q) / omega_r`
/// and records `<N_q>` and `<a^dag a>` at the final time. Output follows grid order.
pub fn resonance_scan(
    psi0: &StateVector,
    grid: &[f64],
    duration: f64,
    params: &ModelParams,
    space: &HilbertSpace,
    execution: Execution,
) -> Result<ScanCurve> {
    check_grid(grid)?;
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidGrid(format!("scan duration must be positive, got {duration}")));
    }
    if psi0.space() != space {
        return Err(Error::SpaceMismatch);
    }
    let eval = |&ratio: &f64| scan_point(psi0, ratio, duration, params, space);
    let points = match execution {
        Execution::Sequential => grid.iter().map(eval).collect::<Result<Vec<_>>>()?,
        #[cfg(feature = "parallel")]
        Execution::Parallel => grid.par_iter().map(eval).collect::<Result<Vec<_>>>()?,
    };
    Ok(ScanCurve { duration, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub index: usize,
    /// Grid value of the sampled maximum.
    pub grid_location: f64,
    /// Vertex of the parabola through the maximum and its neighbours.
    pub location: f64,
    pub height: f64,
}

/// Local maxima with `y >= min_height`. Plateaus report their first sample.
pub fn detect_peaks(x: &[f64], y: &[f64], min_height: f64) -> Vec<Peak> {
    let n = x.len().min(y.len());
    let mut peaks = Vec::new();
    for i in 0..n {
        let left = if i > 0 { y[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < n { y[i + 1] } else { f64::NEG_INFINITY };
        if !(y[i] > left && y[i] >= right && y[i] >= min_height) {
            continue;
        }
        // a flat curve has no peak
        if n > 1 && (i == 0 || i + 1 == n) && y.iter().all(|v| *v == y[i]) {
            continue;
        }
        let (location, height) = if i > 0 && i + 1 < n {
            refine(x[i - 1], x[i], x[i + 1], left, y[i], right)
        } else {
            (x[i], y[i])
        };
        peaks.push(Peak {
            index: i,
            grid_location: x[i],
            location,
            height,
        });
    }
    peaks
}

fn refine(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> (f64, f64) {
    let h = 0.5 * (x2 - x0);
    let curvature = y0 - 2.0 * y1 + y2;
    if curvature >= 0.0 || h <= 0.0 {
        return (x1, y1);
    }
    let offset = (0.5 * (y0 - y2) / curvature).clamp(-1.0, 1.0);
    let height = y1 - 0.25 * (y0 - y2) * offset;
    (x1 + offset * h, height)
}

impl ScanCurve {
    /// Peaks of `<N_q>` rising at least `min_rise` above `baseline`. Heights
    /// are absolute.
    pub fn peaks(&self, baseline: f64, min_rise: f64) -> Vec<Peak> {
        let excess: Vec<f64> = self.points.iter().map(|p| p.nq - baseline).collect();
        let mut peaks = detect_peaks(&self.ratios(), &excess, min_rise);
        for p in &mut peaks {
            p.height += baseline;
        }
        peaks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakReport {
    pub location: f64,
    pub height: f64,
    pub predicted_location: Option<f64>,
    pub abs_error: Option<f64>,
}

impl PeakReport {
    pub fn new(peak: &Peak, predicted_location: Option<f64>) -> Self {
        PeakReport {
            location: peak.location,
            height: peak.height,
            predicted_location,
            abs_error: predicted_location.map(|p| (peak.location - p).abs()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::{rabi_frequency, Channel};
    use crate::hamiltonian::dicke_state;

    #[test]
    fn grid_endpoints_and_validation() {
        let g = uniform_grid(1.9, 2.3, 801).unwrap();
        assert_eq!(g.len(), 801);
        assert_eq!(g[0], 1.9);
        assert_eq!(g[800], 2.3);
        assert!((g[1] - g[0] - 0.0005).abs() < 1e-15);
        assert!(uniform_grid(1.0, 1.0, 5).is_err());
        assert!(uniform_grid(0.0, 1.0, 1).is_err());
        assert!(check_grid(&[0.0, 0.0]).is_err());
        assert!(check_grid(&[]).is_err());
    }

    #[test]
    fn lorentzian_peak_is_refined() {
        let centre = 0.3137;
        let x = uniform_grid(0.0, 1.0, 101).unwrap();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 1.0 / (1.0 + ((v - centre) / 0.05).powi(2)))
            .collect();
        let peaks = detect_peaks(&x, &y, 0.5);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].location - centre).abs() < 0.01);
        assert!((peaks[0].location - centre).abs() < (peaks[0].grid_location - centre).abs() + 1e-12);
    }

    #[test]
    fn flat_curve_has_no_peaks() {
        let x = uniform_grid(0.0, 1.0, 11).unwrap();
        assert!(detect_peaks(&x, &[0.3; 11], 0.0).is_empty());
        assert!(detect_peaks(&[], &[], 0.0).is_empty());
    }

    #[test]
    fn short_scan_sequential_matches_default() {
        let params = ModelParams::new(4, 1.0, 1.0, 0.006, -0.5, 8).unwrap();
        let space = HilbertSpace::symmetric(4, 8).unwrap();
        let psi0 = dicke_state(&space, 0, 0).unwrap();
        let t = std::f64::consts::PI / (2.0 * rabi_frequency(0, 0, &params).unwrap());
        let grid = uniform_grid(2.12, 2.13, 11).unwrap();
        let a = resonance_scan(&psi0, &grid, t, &params, &space, Execution::Sequential).unwrap();
        let b = resonance_scan(&psi0, &grid, t, &params, &space, Execution::default()).unwrap();
        assert_eq!(a, b);
        assert!((a.argmax().unwrap().ratio - 2.125).abs() < 1e-9);
        let reference = ResonanceTarget::first(Channel::AntiTc, 0, 0);
        let d = scan_duration(DurationRule::Transfer, Some(&reference), &params).unwrap();
        assert!((d - t).abs() < 1e-9);
    }
}
