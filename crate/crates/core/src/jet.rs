//! Truncated Taylor arithmetic used to get exact derivatives (up to third
//! order) of the smooth cutoff, ramps and boundary forces.

use std::ops::{Add, Div, Mul, Neg, Sub};

const ORDER: usize = 4;

/// Taylor coefficients `c_k = f^(k)(t₀) / k!` for `k < 4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [f64; ORDER],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self {
            c: [v, 0.0, 0.0, 0.0],
        }
    }

    /// The independent variable at `t₀`.
    pub fn variable(t0: f64) -> Self {
        Self {
            c: [t0, 1.0, 0.0, 0.0],
        }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `[f, f', f'', f''']`.
    pub fn derivatives(&self) -> [f64; ORDER] {
        [self.c[0], self.c[1], 2.0 * self.c[2], 6.0 * self.c[3]]
    }

    pub fn scale(self, a: f64) -> Self {
        Self {
            c: self.c.map(|v| v * a),
        }
    }

    pub fn exp(self) -> Self {
        // y' = a' y  ⇒  k y_k = Σ_{j=1..k} j a_j y_{k-j}
        let a = self.c;
        let mut y = [0.0; ORDER];
        y[0] = a[0].exp();
        for k in 1..ORDER {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * y[k - j]).sum();
            y[k] = s / k as f64;
        }
        Self { c: y }
    }

    pub fn sin_cos(self) -> (Self, Self) {
        let a = self.c;
        let mut s = [0.0; ORDER];
        let mut c = [0.0; ORDER];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..ORDER {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                ss += j as f64 * a[j] * c[k - j];
                cc -= j as f64 * a[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (Self { c: s }, Self { c })
    }

    pub fn recip(self) -> Self {
        Jet::constant(1.0) / self
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a += b;
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
        let mut c = [0.0; ORDER];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = (0..=k).map(|j| self.c[j] * o.c[k - j]).sum();
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let mut q = [0.0; ORDER];
        for k in 0..ORDER {
            let s: f64 = (1..=k).map(|j| o.c[j] * q[k - j]).sum();
            q[k] = (self.c[k] - s) / o.c[0];
        }
        Jet { c: q }
    }
}

/// `exp(-1/t)` for `t > 0`, zero otherwise.
fn flat_bump(t: Jet) -> Jet {
    if t.value() <= 0.0 {
        Jet::constant(0.0)
    } else {
        (-t.recip()).exp()
    }
}

/// C^∞ step from 0 (at `s ≤ 0`) to 1 (at `s ≥ 1`), flat to all orders at
/// both ends: `ρ(s) / (ρ(s) + ρ(1 - s))` with `ρ(t) = exp(-1/t)`.
pub fn smooth_step_jet(s: Jet) -> Jet {
    let v = s.value();
    if v <= 0.0 {
        return Jet::constant(0.0);
    }
    if v >= 1.0 {
        return Jet::constant(1.0);
    }
    let a = flat_bump(s);
    let b = flat_bump(Jet::constant(1.0) - s);
    a / (a + b)
}

pub fn smooth_step(s: f64) -> f64 {
    smooth_step_jet(Jet::variable(s)).value()
}
