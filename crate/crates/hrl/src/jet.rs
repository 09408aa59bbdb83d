//! Degree-5 truncated Taylor (jet) arithmetic.
//!
//! A `Jet` carries a function value and its first five derivatives with
//! respect to a single scalar variable. Composing closed-form factors through
//! jets yields exact derivative chains, so profile derivative channels are
//! bit-reproducible and never rely on numerical differentiation.

/// Number of stored derivatives (value + 5).
pub const JET_LEN: usize = 6;

const FACT: [f64; JET_LEN] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];
const BINOM: [[f64; JET_LEN]; JET_LEN] = [
    [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0, 0.0],
    [1.0, 5.0, 10.0, 10.0, 5.0, 1.0],
];

/// Value and derivatives `d[k] = f^(k)(x)` for `k = 0..=5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub d: [f64; JET_LEN],
}

impl Jet {
    pub fn constant(c: f64) -> Self {
        let mut d = [0.0; JET_LEN];
        d[0] = c;
        Jet { d }
    }

    /// The identity jet at `x`: value `x`, first derivative 1.
    pub fn variable(x: f64) -> Self {
        let mut d = [0.0; JET_LEN];
        d[0] = x;
        d[1] = 1.0;
        Jet { d }
    }

    pub fn value(&self) -> f64 {
        self.d[0]
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut d = self.d;
        for v in &mut d {
            *v *= c;
        }
        Jet { d }
    }

    pub fn add(&self, other: &Jet) -> Self {
        let mut d = self.d;
        for k in 0..JET_LEN {
            d[k] += other.d[k];
        }
        Jet { d }
    }

    pub fn sub(&self, other: &Jet) -> Self {
        let mut d = self.d;
        for k in 0..JET_LEN {
            d[k] -= other.d[k];
        }
        Jet { d }
    }

    /// Leibniz product rule.
    pub fn mul(&self, other: &Jet) -> Self {
        let mut d = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            let mut acc = 0.0;
            for j in 0..=k {
                // same zero-skip as poly_mul: avoid inf * 0 from overflowed channels
                if self.d[j] == 0.0 || other.d[k - j] == 0.0 {
                    continue;
                }
                acc += BINOM[k][j] * self.d[j] * other.d[k - j];
            }
            d[k] = acc;
        }
        Jet { d }
    }

    /// Composition `f(g(x))` where `outer[k] = f^(k)` evaluated at `g(x)`.
    pub fn compose(outer: &[f64; JET_LEN], inner: &Jet) -> Self {
        // Work in Taylor coefficients: a_k = d_k / k!.
        let a: [f64; JET_LEN] = std::array::from_fn(|k| outer[k] / FACT[k]);
        // h = inner - inner(0) has zero constant coefficient.
        let mut h = [0.0; JET_LEN];
        for k in 1..JET_LEN {
            h[k] = inner.d[k] / FACT[k];
        }
        // Horner over the truncated series in h.
        let mut acc = [0.0; JET_LEN];
        acc[0] = a[JET_LEN - 1];
        for k in (0..JET_LEN - 1).rev() {
            acc = poly_mul(&acc, &h);
            acc[0] += a[k];
        }
        let d: [f64; JET_LEN] = std::array::from_fn(|k| acc[k] * FACT[k]);
        Jet { d }
    }

    pub fn exp(&self) -> Self {
        let e = self.d[0].exp();
        Jet::compose(&[e; JET_LEN], self)
    }

    /// Natural log; requires a positive value.
    pub fn ln(&self) -> Self {
        let x = self.d[0];
        let outer = [
            x.ln(),
            1.0 / x,
            -1.0 / (x * x),
            2.0 / (x * x * x),
            -6.0 / (x * x * x * x),
            24.0 / (x * x * x * x * x),
        ];
        Jet::compose(&outer, self)
    }

    /// Real power of a positive-valued jet.
    pub fn powf(&self, p: f64) -> Self {
        let x = self.d[0];
        let mut outer = [0.0; JET_LEN];
        let mut coeff = 1.0;
        for (k, o) in outer.iter_mut().enumerate() {
            *o = coeff * x.powf(p - k as f64);
            coeff *= p - k as f64;
        }
        Jet::compose(&outer, self)
    }

    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }
}

fn poly_mul(a: &[f64; JET_LEN], b: &[f64; JET_LEN]) -> [f64; JET_LEN] {
    let mut out = [0.0; JET_LEN];
    for i in 0..JET_LEN {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..JET_LEN - i {
            // skip exact zeros so an overflowed (infinite) high-order channel
            // cannot poison finite low-order channels via inf * 0
            if b[j] == 0.0 {
                continue;
            }
            out[i + j] += a[i] * b[j];
        }
    }
    out
}
