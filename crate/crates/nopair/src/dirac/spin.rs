//! Exact spin algebra over the two-electron (4-dimensional) spinor space.
//!
//! The component ordering is fixed crate-wide: index = 2*s1 + s2 with
//! spin-up = 0, so {up-up, up-down, down-up, down-down}. All entries are
//! exact (0, ±1, ±i); products of Pauli factors therefore carry no rounding.

use num_complex::Complex64;

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMat(pub [[C64; 4]; 4]);

const Z: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Pauli matrix entries, sigma[axis][row][col].
fn pauli(axis: usize) -> [[C64; 2]; 2] {
    match axis {
        0 => [[Z, ONE], [ONE, Z]],
        1 => [[Z, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), Z]],
        2 => [[ONE, Z], [Z, -ONE]],
        _ => panic!("axis {axis}"),
    }
}

fn eye2() -> [[C64; 2]; 2] {
    [[ONE, Z], [Z, ONE]]
}

fn kron(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> SpinMat {
    let mut m = [[Z; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    SpinMat(m)
}

impl SpinMat {
    pub fn identity() -> Self {
        kron(eye2(), eye2())
    }

    /// sigma_axis acting on particle 1.
    pub fn sigma1(axis: usize) -> Self {
        kron(pauli(axis), eye2())
    }

    /// sigma_axis acting on particle 2.
    pub fn sigma2(axis: usize) -> Self {
        kron(eye2(), pauli(axis))
    }

    /// sigma_a (particle 1) times sigma_b (particle 2).
    pub fn sigma12(a: usize, b: usize) -> Self {
        kron(pauli(a), pauli(b))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = [[Z; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = Z;
                for k in 0..4 {
                    acc += self.0[i][k] * other.0[k][j];
                }
                m[i][j] = acc;
            }
        }
        SpinMat(m)
    }

    pub fn adjoint(&self) -> Self {
        let mut m = [[Z; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = self.0[j][i].conj();
            }
        }
        SpinMat(m)
    }

    pub fn is_zero(&self) -> bool {
        self.0
            .iter()
            .all(|row| row.iter().all(|z| z.norm_sqr() == 0.0))
    }
}

/// Spin-index image under particle exchange: (s1, s2) -> (s2, s1).
pub fn exchange_spin(sigma: usize) -> usize {
    let s1 = sigma / 2;
    let s2 = sigma % 2;
    2 * s2 + s1
}
