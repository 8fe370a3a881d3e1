//! Closed-form and ODE references written independently of the library.
#![allow(dead_code)]

/// `X_t = max(x₀ + c t, 0)` and `K_t = x₀ + c t - X_t` for `c ≤ 0` on `[0, ∞)`.
pub fn reflected_drift(x0: f64, c: f64, t: f64) -> (f64, f64) {
    let x = (x0 + c * t).max(0.0);
    (x, x0 + c * t - x)
}

/// RK4 for `m₁' = (b̄ - a) m₁`, `m₂' = -2a m₂ + 2b̄ m₁² + s²` (one dimension),
/// sampled at `times`.
pub fn moment_ode(a: f64, bbar: f64, s: f64, m1: f64, m2: f64, times: &[f64], dt: f64) -> Vec<(f64, f64)> {
    let f = |y: [f64; 2]| [(bbar - a) * y[0], -2.0 * a * y[1] + 2.0 * bbar * y[0] * y[0] + s * s];
    let mut y = [m1, m2];
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target - 1e-12 {
            let step = dt.min(target - t);
            let k1 = f(y);
            let k2 = f([y[0] + 0.5 * step * k1[0], y[1] + 0.5 * step * k1[1]]);
            let k3 = f([y[0] + 0.5 * step * k2[0], y[1] + 0.5 * step * k2[1]]);
            let k4 = f([y[0] + step * k3[0], y[1] + step * k3[1]]);
            for i in 0..2 {
                y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += step;
        }
        out.push((y[0], y[1]));
    }
    out
}

/// Decay rate of `(1 - h)^{2k}` per unit time.
pub fn euler_decay_rate(h: f64) -> f64 {
    -2.0 * (1.0 - h).ln() / h
}

/// Stationary variance of `X_{k+1} = (1 - θh) X_k + s √h ζ`.
pub fn discrete_ou_variance(theta: f64, s: f64, h: f64) -> f64 {
    s * s / (2.0 * theta - theta * theta * h)
}

pub fn project_ball(x: &[f64], center: &[f64], r: f64) -> Vec<f64> {
    let dist = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
    if dist <= r {
        return x.to_vec();
    }
    x.iter().zip(center).map(|(a, c)| c + (a - c) * r / dist).collect()
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Least-squares slope of `log e` against `log h`.
pub fn order(hs: &[f64], errors: &[f64]) -> f64 {
    let x: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
