//! Pilot-aided channel estimation and equalization.
//!
//! Least-squares estimates at the scattered pilots are interpolated
//! linearly in time along each pilot-bearing subcarrier, then linearly in
//! frequency across each symbol. Subcarriers outside the outermost estimate
//! take the nearest one.

use num_complex::Complex64;

use super::ofdm::{
    scatter_shift, used_bin, used_freq, GridPlan, OfdmGrid, FFT_LEN, SCATTER_PERIOD, SCATTER_SPACING, SYMBOLS, USED,
};

/// Per-cell channel gain estimates in grid layout; zero on null cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub gains: Vec<Complex64>,
}

fn lerp(a: Complex64, b: Complex64, w: f64) -> Complex64 {
    a * (1.0 - w) + b * w
}

/// Linear interpolation of `(x, value)` knots, sorted by `x`, at `at`.
fn interpolate(knots: &[(f64, Complex64)], at: f64) -> Complex64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if at <= first.0 {
        return first.1;
    }
    if at >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|k| k.0 <= at);
    let (x0, y0) = knots[i - 1];
    let (x1, y1) = knots[i];
    lerp(y0, y1, (at - x0) / (x1 - x0))
}

pub fn estimate_channel(rx: &OfdmGrid, plan: &GridPlan) -> ChannelEstimate {
    // Used subcarriers that ever carry a scattered pilot, with the symbol
    // phase at which they do.
    let lattice: Vec<usize> =
        (0..USED).filter(|l| (l % SCATTER_SPACING).is_multiple_of(3) && l % SCATTER_SPACING < 10).collect();
    let mut along_time = vec![Complex64::new(0.0, 0.0); SYMBOLS * lattice.len()];
    for (j, &l) in lattice.iter().enumerate() {
        let bin = used_bin(l);
        let phase = (l % SCATTER_SPACING) / 3;
        let knots: Vec<(f64, Complex64)> = (phase..SYMBOLS)
            .step_by(SCATTER_PERIOD)
            .map(|t| {
                debug_assert_eq!(scatter_shift(t), l % SCATTER_SPACING);
                (t as f64, rx.at(t, bin) / plan.pilot(t, bin))
            })
            .collect();
        for t in 0..SYMBOLS {
            along_time[t * lattice.len() + j] = interpolate(&knots, t as f64);
        }
    }

    let mut gains = vec![Complex64::new(0.0, 0.0); SYMBOLS * FFT_LEN];
    let freqs: Vec<f64> = lattice.iter().map(|&l| used_freq(l) as f64).collect();
    let mut knots = Vec::with_capacity(lattice.len());
    for t in 0..SYMBOLS {
        knots.clear();
        knots.extend(freqs.iter().zip(&along_time[t * lattice.len()..(t + 1) * lattice.len()]).map(|(&f, &h)| (f, h)));
        for l in 0..USED {
            gains[t * FFT_LEN + used_bin(l)] = interpolate(&knots, used_freq(l) as f64);
        }
    }
    ChannelEstimate { gains }
}

/// Divides every used cell by its estimate; null cells stay zero.
pub fn equalize(rx: &OfdmGrid, est: &ChannelEstimate) -> OfdmGrid {
    let cells = rx
        .cells
        .iter()
        .zip(&est.gains)
        .map(|(&y, &h)| if h.norm_sqr() > 0.0 { y / h } else { Complex64::new(0.0, 0.0) })
        .collect();
    OfdmGrid { cells }
}

/// RMS error vector over signal RMS.
pub fn evm(received: &[Complex64], ideal: &[Complex64]) -> f64 {
    let err: f64 = received.iter().zip(ideal).map(|(r, i)| (r - i).norm_sqr()).sum();
    let sig: f64 = ideal.iter().map(|i| i.norm_sqr()).sum();
    (err / sig).sqrt()
}
