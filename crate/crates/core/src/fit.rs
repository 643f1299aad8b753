//! Least-squares fits used by the Ramsey and benchmarking analyses.

use crate::error::{Error, Result};

/// Result of fitting y = a·cos(2π f t + φ0) + b.
#[derive(Debug, Clone, Copy)]
pub struct CosineFit {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub offset: f64,
    pub frequency_stderr: f64,
    pub rms_residual: f64,
}

/// For a trial frequency, solve the linear subproblem
/// y ≈ p·cos(2πft) + q·sin(2πft) + b and return (sse, p, q, b).
fn cosine_linear_fit(ts: &[f64], ys: &[f64], f: f64) -> (f64, f64, f64, f64) {
    let n = ts.len() as f64;
    let (mut scc, mut sss, mut scs, mut sc, mut ss) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut syc, mut sys, mut sy) = (0.0, 0.0, 0.0);
    for (&t, &y) in ts.iter().zip(ys) {
        let (s, c) = (std::f64::consts::TAU * f * t).sin_cos();
        scc += c * c;
        sss += s * s;
        scs += c * s;
        sc += c;
        ss += s;
        syc += y * c;
        sys += y * s;
        sy += y;
    }
    // 3×3 normal equations for (p, q, b).
    let m = [[scc, scs, sc], [scs, sss, ss], [sc, ss, n]];
    let rhs = [syc, sys, sy];
    match solve3(m, rhs) {
        Some([p, q, b]) => {
            let mut sse = 0.0;
            for (&t, &y) in ts.iter().zip(ys) {
                let (s, c) = (std::f64::consts::TAU * f * t).sin_cos();
                let r = y - (p * c + q * s + b);
                sse += r * r;
            }
            (sse, p, q, b)
        }
        None => (f64::INFINITY, 0.0, 0.0, 0.0),
    }
}

fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [
        [m[0][0], m[0][1], m[0][2], rhs[0]],
        [m[1][0], m[1][1], m[1][2], rhs[1]],
        [m[2][0], m[2][1], m[2][2], rhs[2]],
    ];
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..4 {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

/// Fit a cosine by scanning trial frequencies on [0, f_max] and refining the
/// best one by golden-section search. `f_max` defaults to the Nyquist limit
/// of the (sorted, not necessarily uniform) time grid.
pub fn fit_cosine(ts: &[f64], ys: &[f64]) -> Result<CosineFit> {
    if ts.len() != ys.len() || ts.len() < 5 {
        return Err(Error::FitFailure("need at least 5 samples".into()));
    }
    let span = ts.last().unwrap() - ts[0];
    if !(span > 0.0) {
        return Err(Error::FitFailure("time grid must span a nonzero interval".into()));
    }
    let min_step = ts
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if !(min_step > 0.0) {
        return Err(Error::FitFailure("time grid must be strictly increasing".into()));
    }
    let f_max = 0.5 / min_step;

    // A constant signal leaves the frequency unidentifiable; report 0 with
    // the grid resolution as the uncertainty.
    let n = ts.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let sse_const: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
    let scale = ys.iter().fold(0.0_f64, |m, y| m.max(y.abs())).max(1e-300);
    if sse_const < (1e-10 * scale) * (1e-10 * scale) * n {
        return Ok(CosineFit {
            amplitude: 0.0,
            frequency: 0.0,
            phase: 0.0,
            offset: mean,
            frequency_stderr: 1.0 / span,
            rms_residual: (sse_const / n).sqrt(),
        });
    }

    // Coarse scan: fine enough to resolve any peak width ~ 1/span.
    let n_scan = (8.0 * span * f_max).ceil().max(64.0) as usize;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=n_scan {
        let f = f_max * (k as f64) / (n_scan as f64);
        let (sse, ..) = cosine_linear_fit(ts, ys, f);
        if sse < best.0 {
            best = (sse, f);
        }
    }
    // Golden-section refinement around the best scan point.
    let df = f_max / n_scan as f64;
    let (mut lo, mut hi) = ((best.1 - df).max(0.0), best.1 + df);
    let inv_phi = 0.618_033_988_749_894_9;
    for _ in 0..200 {
        let m1 = hi - inv_phi * (hi - lo);
        let m2 = lo + inv_phi * (hi - lo);
        if cosine_linear_fit(ts, ys, m1).0 <= cosine_linear_fit(ts, ys, m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
        if hi - lo < 1e-12 * f_max.max(1.0) {
            break;
        }
    }
    let f = 0.5 * (lo + hi);
    let (sse, p, q, b) = cosine_linear_fit(ts, ys, f);
    let amplitude = (p * p + q * q).sqrt();
    let phase = (-q).atan2(p);
    let rms = (sse / n).sqrt();

    // Crude frequency standard error from the quadratic shape of SSE(f).
    let h = df.max(1e-9) * 0.1;
    let (sse_p, ..) = cosine_linear_fit(ts, ys, f + h);
    let (sse_m, ..) = cosine_linear_fit(ts, ys, (f - h).max(0.0));
    let curvature = ((sse_p + sse_m - 2.0 * sse) / (h * h)).max(1e-30);
    let sigma2 = sse / (n - 4.0).max(1.0);
    let frequency_stderr = (2.0 * sigma2 / curvature).sqrt();

    Ok(CosineFit { amplitude, frequency: f, phase, offset: b, frequency_stderr, rms_residual: rms })
}

/// Result of fitting y = a·p^m + b.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub p_stderr: f64,
    pub rms_residual: f64,
}

/// Fit y = a·p^m + b by a scan over p with the (a, b) linear subproblem
/// solved exactly, then golden-section refinement.
///
/// `b_init` anchors the offset when the decay is degenerate (p
/// unidentifiable); pass the measurement baseline (0.25 for two-qubit
/// populations, 0.5 for single-qubit, 0.0 for XEB fidelities).
pub fn fit_decay(ms: &[f64], ys: &[f64], b_init: f64) -> Result<DecayFit> {
    if ms.len() != ys.len() || ms.len() < 4 {
        return Err(Error::FitFailure("need at least 4 lengths".into()));
    }
    let linear = |p: f64| -> (f64, f64, f64) {
        // least squares for y = a x + b with x = p^m
        let n = ms.len() as f64;
        let (mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for (&m, &y) in ms.iter().zip(ys) {
            let x = p.powf(m);
            sx += x;
            sxx += x * x;
            sy += y;
            sxy += x * y;
        }
        let det = n * sxx - sx * sx;
        if det.abs() < 1e-12 {
            // degenerate: constant model around the anchor offset
            let a = (sy / n) - b_init;
            return (ys.iter().map(|y| (y - a - b_init).powi(2)).sum(), a, b_init);
        }
        let a = (n * sxy - sx * sy) / det;
        let b = (sy - a * sx) / n;
        let mut sse = 0.0;
        for (&m, &y) in ms.iter().zip(ys) {
            let r = y - (a * p.powf(m) + b);
            sse += r * r;
        }
        (sse, a, b)
    };

    let mut best = (f64::INFINITY, 0.5);
    for k in 1..2000 {
        let p = k as f64 / 2000.0;
        let (sse, ..) = linear(p);
        if sse < best.0 {
            best = (sse, p);
        }
    }
    let (mut lo, mut hi) = ((best.1 - 0.001).max(1e-6), (best.1 + 0.001).min(1.0));
    let inv_phi = 0.618_033_988_749_894_9;
    for _ in 0..120 {
        let m1 = hi - inv_phi * (hi - lo);
        let m2 = lo + inv_phi * (hi - lo);
        if linear(m1).0 <= linear(m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let p = 0.5 * (lo + hi);
    let (sse, a, b) = linear(p);
    let n = ms.len() as f64;
    if !p.is_finite() || p <= 0.0 || p > 1.0 {
        return Err(Error::FitFailure(format!("decay parameter p = {p} outside (0, 1]")));
    }

    // Identifiability: a flat curve pins a + b but not p.
    let scale = ys.iter().fold(0.0_f64, |m, y| m.max(y.abs())).max(1e-12);
    let spread = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
        (lo.min(y), hi.max(y))
    });
    if (spread.1 - spread.0) < 1e-9 * scale {
        return Err(Error::FitFailure(
            "constant sequence fidelities: decay rate unidentifiable".into(),
        ));
    }

    let h = 1e-5;
    let sse_p = linear((p + h).min(1.0)).0;
    let sse_m = linear((p - h).max(1e-6)).0;
    let curvature = ((sse_p + sse_m - 2.0 * sse) / (h * h)).max(1e-30);
    let sigma2 = sse / (n - 3.0).max(1.0);
    let p_stderr = (2.0 * sigma2 / curvature).sqrt();

    Ok(DecayFit { a, p, b, p_stderr, rms_residual: (sse / n).sqrt() })
}

/// Ordinary least-squares line fit, returning (slope, intercept).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::FitFailure("need at least 2 points".into()));
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(Error::FitFailure("degenerate abscissae".into()));
    }
    let slope = (n * sxy - sx * sy) / det;
    Ok((slope, (sy - slope * sx) / n))
}
