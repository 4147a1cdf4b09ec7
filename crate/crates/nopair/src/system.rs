//! Physical system description: constants, clamped nuclei, basis primitives.
//!
//! Everything is expressed in Hartree atomic units; the speed of light enters
//! only through [`PhysicalConstants`].

use crate::error::NopairError;

/// CODATA18 inverse fine-structure constant.
pub const INVERSE_ALPHA_CODATA18: f64 = 137.035_999_084;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Inverse fine-structure constant; equals the speed of light in atomic units.
    pub inverse_alpha: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            inverse_alpha: INVERSE_ALPHA_CODATA18,
        }
    }
}

impl PhysicalConstants {
    pub fn with_inverse_alpha(inverse_alpha: f64) -> Result<Self, NopairError> {
        if !(inverse_alpha > 0.0) {
            return Err(NopairError::Invalid(
                "inverse fine-structure constant must be positive".into(),
            ));
        }
        Ok(Self { inverse_alpha })
    }

    /// Speed of light in atomic units (identical to `inverse_alpha`).
    pub fn c(&self) -> f64 {
        self.inverse_alpha
    }

    pub fn alpha(&self) -> f64 {
        1.0 / self.inverse_alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampedNucleus {
    /// Charge in units of the elementary charge.
    pub charge: f64,
    /// Position in bohr.
    pub position: [f64; 3],
}

/// Spin multiplicity of the two-electron target state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinState {
    Singlet,
    Triplet,
}

/// Which eigenstate of the chosen symmetry block is targeted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSelector {
    pub spin: SpinState,
    /// 1-based eigenvalue index within the symmetry block.
    pub index: usize,
}

impl Default for StateSelector {
    fn default() -> Self {
        Self {
            spin: SpinState::Singlet,
            index: 1,
        }
    }
}

/// Two-electron system with clamped point nuclei.
///
/// The rest-mass shift convention (2(m1+m2)c^2 subtracted from the Dirac
/// Hamiltonian) is applied in exactly one place, the Dirac assembly, and is
/// recorded in every energy result.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub nuclei: Vec<ClampedNucleus>,
    /// Particle masses in electron-mass units.
    pub masses: [f64; 2],
    /// Particle charges in elementary-charge units.
    pub charges: [f64; 2],
    pub constants: PhysicalConstants,
    pub state: StateSelector,
    /// Human-readable system identifier used in output files.
    pub label: String,
}

impl SystemSpec {
    /// Two electrons in the field of the given nuclei.
    pub fn two_electron(label: &str, nuclei: Vec<ClampedNucleus>) -> Self {
        Self {
            nuclei,
            masses: [1.0, 1.0],
            charges: [-1.0, -1.0],
            constants: PhysicalConstants::default(),
            state: StateSelector::default(),
            label: label.to_string(),
        }
    }

    /// Helium-like ion with nuclear charge `z` at the origin.
    pub fn helium_like(z: f64) -> Self {
        Self::two_electron(
            &format!("z{z}"),
            vec![ClampedNucleus {
                charge: z,
                position: [0.0; 3],
            }],
        )
    }

    pub fn total_nuclear_charge(&self) -> f64 {
        self.nuclei.iter().map(|n| n.charge).sum()
    }

    /// Whether all nuclei sit at the origin (atomic case; shift optimization
    /// is then disabled).
    pub fn is_atomic(&self) -> bool {
        self.nuclei.len() == 1 && self.nuclei[0].position == [0.0; 3]
    }

    pub fn nuclear_repulsion(&self) -> f64 {
        let mut e = 0.0;
        for (i, a) in self.nuclei.iter().enumerate() {
            for b in self.nuclei.iter().skip(i + 1) {
                let d: f64 = (0..3)
                    .map(|k| (a.position[k] - b.position[k]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                e += a.charge * b.charge / d;
            }
        }
        e
    }
}

/// Validates the system invariants and normalizes nucleus ordering
/// (lexicographic by position) so runs are deterministic.
pub fn validate_system(mut spec: SystemSpec) -> Result<SystemSpec, NopairError> {
    if spec.nuclei.is_empty() {
        return Err(NopairError::Invalid("no nuclei given".into()));
    }
    if spec.state.index < 1 {
        return Err(NopairError::Invalid("state index must be >= 1".into()));
    }
    if !(spec.constants.inverse_alpha > 0.0) {
        return Err(NopairError::Invalid("inverse alpha must be positive".into()));
    }
    for n in &spec.nuclei {
        if !(n.charge > 0.0) {
            return Err(NopairError::Invalid(
                "nuclear charges must be positive".into(),
            ));
        }
    }
    for i in 0..spec.nuclei.len() {
        for j in (i + 1)..spec.nuclei.len() {
            let d: f64 = (0..3)
                .map(|k| (spec.nuclei[i].position[k] - spec.nuclei[j].position[k]).powi(2))
                .sum();
            if d < 1e-20 {
                return Err(NopairError::Invalid(
                    "duplicate nucleus positions".into(),
                ));
            }
        }
    }
    spec.nuclei.sort_by(|a, b| {
        a.position
            .partial_cmp(&b.position)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(spec)
}

/// One floating explicitly correlated Gaussian,
/// exp(-(r-s)^T (A (x) 1_3) (r-s)) with A symmetric positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcgPrimitive {
    /// Row-major symmetric 2x2 exponent matrix [a11, a12, a22], bohr^-2.
    pub a: [f64; 3],
    /// Shift vector, bohr: [s1x, s1y, s1z, s2x, s2y, s2z].
    pub s: [f64; 6],
}

impl EcgPrimitive {
    pub fn new(a: [f64; 3], s: [f64; 6]) -> Self {
        Self { a, s }
    }

    /// Isotropic uncorrelated pair exponents, shifts at zero.
    pub fn diagonal(a1: f64, a2: f64) -> Self {
        Self {
            a: [a1, 0.0, a2],
            s: [0.0; 6],
        }
    }

    pub fn a11(&self) -> f64 {
        self.a[0]
    }
    pub fn a12(&self) -> f64 {
        self.a[1]
    }
    pub fn a22(&self) -> f64 {
        self.a[2]
    }

    /// Positive definiteness via the leading minors.
    pub fn is_positive_definite(&self) -> bool {
        self.a[0] > 0.0 && self.a[0] * self.a[2] - self.a[1] * self.a[1] > 0.0
    }

    /// Particle-exchange image: A -> T A T, s blocks swapped.
    pub fn permuted(&self) -> Self {
        Self {
            a: [self.a[2], self.a[1], self.a[0]],
            s: [
                self.s[3], self.s[4], self.s[5], self.s[0], self.s[1], self.s[2],
            ],
        }
    }

    /// Spatial inversion image: s -> -s.
    pub fn inverted(&self) -> Self {
        let mut s = self.s;
        for v in &mut s {
            *v = -*v;
        }
        Self { a: self.a, s }
    }
}
