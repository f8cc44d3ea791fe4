#![allow(dead_code)]

/// Double-exponential (tanh-sinh) quadrature on `[a, b]`; robust to
/// algebraic endpoint singularities.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let h = 1.0 / 64.0;
    let half = std::f64::consts::FRAC_PI_2;
    let c = 0.5 * (b - a);
    let m = 0.5 * (b + a);
    let mut sum = 0.0;
    for k in -(6 * 64)..=(6 * 64) {
        let t = k as f64 * h;
        let u = half * t.sinh();
        let x = u.tanh();
        let w = half * t.cosh() / u.cosh().powi(2);
        // 1 - |x| evaluated without cancellation.
        let one_minus = 1.0 / (u.abs().exp() * u.cosh());
        if one_minus < 1e-300 {
            continue;
        }
        let xx = if x >= 0.0 { b - c * one_minus } else { a + c * one_minus };
        let v = f(if xx.is_finite() { xx } else { m + c * x });
        if v.is_finite() {
            sum += w * v;
        }
    }
    sum * c * h
}

/// Classical RK4 integration of `y' = f(t, y)` over `[t0, t1]` in `n` steps.
pub fn rk4<const D: usize>(
    f: impl Fn(f64, &[f64; D]) -> [f64; D],
    y0: [f64; D],
    t0: f64,
    t1: f64,
    n: usize,
) -> [f64; D] {
    let h = (t1 - t0) / n as f64;
    let mut y = y0;
    for i in 0..n {
        let t = t0 + i as f64 * h;
        let add = |y: &[f64; D], k: &[f64; D], s: f64| {
            let mut o = *y;
            for j in 0..D {
                o[j] += s * k[j];
            }
            o
        };
        let k1 = f(t, &y);
        let k2 = f(t + h / 2.0, &add(&y, &k1, h / 2.0));
        let k3 = f(t + h / 2.0, &add(&y, &k2, h / 2.0));
        let k4 = f(t + h, &add(&y, &k3, h));
        for j in 0..D {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
