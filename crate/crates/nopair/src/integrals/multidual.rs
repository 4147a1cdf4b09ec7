//! Truncated Taylor arithmetic over up to four nilpotent generators.
//!
//! A `MultiDual` carries the coefficients of prod_{k in m} eps_k for every
//! subset mask m of the generators, with eps_k^2 = 0. Mixed partial
//! derivatives of a composite expression are read off as the coefficient of
//! the full generator product; repeated differentiation with respect to the
//! same coordinate is expressed by attaching two generators to the same
//! direction.

use num_complex::Complex64;

pub const N_COMP: usize = 16;

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy)]
pub struct MultiDual {
    pub c: [C64; N_COMP],
}

impl MultiDual {
    pub fn zero() -> Self {
        Self {
            c: [C64::new(0.0, 0.0); N_COMP],
        }
    }

    pub fn constant(v: C64) -> Self {
        let mut m = Self::zero();
        m.c[0] = v;
        m
    }

    pub fn real(v: f64) -> Self {
        Self::constant(C64::new(v, 0.0))
    }

    /// Base value plus a unit coefficient on generator `gen` (0..=3).
    pub fn variable(v: C64, gen: usize) -> Self {
        let mut m = Self::constant(v);
        m.c[1 << gen] = C64::new(1.0, 0.0);
        m
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    /// Coefficient of the product of the first `n_gen` generators: the mixed
    /// partial derivative the caller asked for.
    pub fn derivative(&self, n_gen: usize) -> C64 {
        self.c[(1usize << n_gen) - 1]
    }

    pub fn add_assign(&mut self, o: &MultiDual) {
        for k in 0..N_COMP {
            self.c[k] += o.c[k];
        }
    }

    pub fn add(&self, o: &MultiDual) -> MultiDual {
        let mut r = *self;
        r.add_assign(o);
        r
    }

    pub fn sub(&self, o: &MultiDual) -> MultiDual {
        let mut r = *self;
        for k in 0..N_COMP {
            r.c[k] -= o.c[k];
        }
        r
    }

    pub fn scale(&self, f: C64) -> MultiDual {
        let mut r = *self;
        for k in 0..N_COMP {
            r.c[k] *= f;
        }
        r
    }

    pub fn scale_re(&self, f: f64) -> MultiDual {
        let mut r = *self;
        for k in 0..N_COMP {
            r.c[k] *= f;
        }
        r
    }

    pub fn mul(&self, o: &MultiDual) -> MultiDual {
        let mut r = MultiDual::zero();
        for m1 in 0..N_COMP {
            let a = self.c[m1];
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            // Enumerate masks disjoint from m1.
            let free = (N_COMP - 1) & !m1;
            let mut m2 = free;
            loop {
                r.c[m1 | m2] += a * o.c[m2];
                if m2 == 0 {
                    break;
                }
                m2 = (m2 - 1) & free;
            }
        }
        r
    }

    /// Nilpotent part (base value removed).
    fn nilpotent(&self) -> MultiDual {
        let mut n = *self;
        n.c[0] = C64::new(0.0, 0.0);
        n
    }

    /// Composition with a scalar function given by its Taylor coefficients
    /// at the base value: derivs[k] = f^(k)(value), k = 0..=4.
    pub fn compose(&self, derivs: &[C64; 5]) -> MultiDual {
        let n = self.nilpotent();
        let n2 = n.mul(&n);
        let n3 = n2.mul(&n);
        let n4 = n3.mul(&n);
        let mut r = MultiDual::constant(derivs[0]);
        r.add_assign(&n.scale(derivs[1]));
        r.add_assign(&n2.scale(derivs[2] / 2.0));
        r.add_assign(&n3.scale(derivs[3] / 6.0));
        r.add_assign(&n4.scale(derivs[4] / 24.0));
        r
    }

    pub fn exp(&self) -> MultiDual {
        let e = self.value().exp();
        self.compose(&[e, e, e, e, e])
    }
}
