//! The smooth cutoff primitive shared by the frequency projector and the
//! localized virial weight, plus a small truncated Taylor jet used to
//! differentiate it exactly.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number of Taylor coefficients carried (derivatives 0..=4).
pub const JET_ORDER: usize = 5;

/// Truncated Taylor series `sum_k c[k] h^k` around a point.
///
/// `c[k]` is the k-th derivative divided by `k!`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; JET_ORDER],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; JET_ORDER];
        c[0] = v;
        Jet { c }
    }

    /// The identity function seeded at `x`.
    pub fn variable(x: f64) -> Self {
        let mut c = [0.0; JET_ORDER];
        c[0] = x;
        c[1] = 1.0;
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative.
    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.c[k] * fact
    }

    pub fn scale(self, s: f64) -> Self {
        Jet {
            c: self.c.map(|v| v * s),
        }
    }

    pub fn recip(self) -> Self {
        let a = self.c;
        let mut r = [0.0; JET_ORDER];
        r[0] = 1.0 / a[0];
        for k in 1..JET_ORDER {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += a[j] * r[k - j];
            }
            r[k] = -acc / a[0];
        }
        Jet { c: r }
    }

    pub fn exp(self) -> Self {
        // e' = a' e, solved coefficient by coefficient.
        let a = self.c;
        let mut e = [0.0; JET_ORDER];
        e[0] = a[0].exp();
        for k in 1..JET_ORDER {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * a[j] * e[k - j];
            }
            e[k] = acc / k as f64;
        }
        Jet { c: e }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for (x, y) in c.iter_mut().zip(o.c) {
            *x += y;
        }
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; JET_ORDER];
        for i in 0..JET_ORDER {
            for j in 0..JET_ORDER - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, o: f64) -> Jet {
        self.c[0] += o;
        self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        -o + self
    }
}

/// `e^{-1/t}` for `t > 0`, zero otherwise (all derivatives vanish at 0).
fn flat(t: Jet) -> Jet {
    if t.value() <= 0.0 {
        Jet::constant(0.0)
    } else {
        (-t.recip()).exp()
    }
}

/// C^∞ step: 0 for `t <= 0`, 1 for `t >= 1`, strictly increasing between.
pub fn smooth_step_jet(t: Jet) -> Jet {
    if t.value() <= 0.0 {
        return Jet::constant(0.0);
    }
    if t.value() >= 1.0 {
        return Jet::constant(1.0);
    }
    let a = flat(t);
    let b = flat(1.0 - t);
    a / (a + b)
}

pub fn smooth_step(t: f64) -> f64 {
    smooth_step_jet(Jet::constant(t)).value()
}

/// Radial bump on `[0, ∞)`: 1 for `x <= 1`, 0 for `x >= 2`, monotone between.
pub fn bump_jet(x: Jet) -> Jet {
    1.0 - smooth_step_jet(x + (-1.0))
}

pub fn bump(x: f64) -> f64 {
    bump_jet(Jet::constant(x)).value()
}
