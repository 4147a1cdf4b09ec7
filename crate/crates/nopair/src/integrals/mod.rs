//! Analytic matrix elements over pairs of floating explicitly correlated
//! Gaussians.
//!
//! Every integral needed by the Dirac and Schroedinger assemblies reduces to
//! a closed-form base integral (overlap, Coulomb-type, linear-r12, contact)
//! differentiated with respect to the floating shift vectors. Momentum
//! dressings are exactly such shift derivatives, evaluated with nilpotent
//! Taylor arithmetic so that mixed partials up to total order four come out
//! to machine precision.

pub mod boys;
pub mod multidual;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

use crate::error::NopairError;
use crate::system::{EcgPrimitive, SystemSpec};
use multidual::{C64, MultiDual};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Condition-number guard on the combined exponent matrix.
const COND_LIMIT: f64 = 1e14;

/// Multiplicative kernels appearing in the two-electron Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Unity,
    /// 1/|r_i - R_a| for particle `particle` and nucleus index `nucleus`.
    NuclearAttraction { particle: usize, nucleus: usize },
    /// 1/r_12.
    InterElectronCoulomb,
    /// r_12 (needed for the Breit gauge term).
    InterElectronLinear,
    /// delta^3(r_i - R_a), used by the Breit-Pauli module.
    DeltaNuclear { particle: usize, nucleus: usize },
    /// delta^3(r_12).
    DeltaInterElectron,
}

/// CCR context for kernel resolution: |theta| < pi/4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledIntegralContext {
    pub theta: f64,
}

impl ScaledIntegralContext {
    pub fn new(theta: f64) -> Result<Self, NopairError> {
        if theta.abs() >= std::f64::consts::FRAC_PI_4 {
            return Err(NopairError::Invalid(format!(
                "CCR angle {theta} out of range (|theta| < pi/4)"
            )));
        }
        Ok(Self { theta })
    }

    pub fn unrotated() -> Self {
        Self { theta: 0.0 }
    }
}

/// One derivative direction of a dressed integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    /// d/ds_k, k in 0..6 (bra shift component).
    Bra(usize),
    /// d/dt_k (ket shift component).
    Ket(usize),
    /// d/dR_a, a in 0..3 (shift of the kernel center; used for the
    /// second derivatives of the r12 kernel in the Breit gauge term).
    KernelShift(usize),
}

/// Internal, fully resolved kernel: a direction over the two particles and a
/// (possibly complex, possibly shift-dressed) center.
#[derive(Debug, Clone, Copy)]
pub enum ResolvedKernel {
    Unity,
    Coulomb { d: [f64; 2], center: [C64; 3] },
    Linear { d: [f64; 2], center: [C64; 3] },
    Delta { d: [f64; 2], center: [C64; 3] },
}

/// Resolves a kernel kind against the system geometry. Under CCR the nuclear
/// positions are back-rotated, R -> R e^{-i theta}; inter-electron kernels
/// keep a real (zero) center and their homogeneous scaling is applied as an
/// operator prefactor by the caller.
pub fn resolve_kernel(
    kind: KernelKind,
    spec: &SystemSpec,
    ctx: ScaledIntegralContext,
) -> Result<ResolvedKernel, NopairError> {
    let rot = Complex64::from_polar(1.0, -ctx.theta);
    let nuc_center = |a: usize| -> Result<[C64; 3], NopairError> {
        let n = spec
            .nuclei
            .get(a)
            .ok_or_else(|| NopairError::Invalid(format!("nucleus index {a} out of range")))?;
        Ok([
            rot * n.position[0],
            rot * n.position[1],
            rot * n.position[2],
        ])
    };
    let part_dir = |p: usize| -> Result<[f64; 2], NopairError> {
        match p {
            0 => Ok([1.0, 0.0]),
            1 => Ok([0.0, 1.0]),
            _ => Err(NopairError::Invalid(format!("particle index {p}"))),
        }
    };
    let zero = [C64::new(0.0, 0.0); 3];
    Ok(match kind {
        KernelKind::Unity => ResolvedKernel::Unity,
        KernelKind::NuclearAttraction { particle, nucleus } => ResolvedKernel::Coulomb {
            d: part_dir(particle)?,
            center: nuc_center(nucleus)?,
        },
        KernelKind::InterElectronCoulomb => ResolvedKernel::Coulomb {
            d: [1.0, -1.0],
            center: zero,
        },
        KernelKind::InterElectronLinear => ResolvedKernel::Linear {
            d: [1.0, -1.0],
            center: zero,
        },
        KernelKind::DeltaNuclear { particle, nucleus } => ResolvedKernel::Delta {
            d: part_dir(particle)?,
            center: nuc_center(nucleus)?,
        },
        KernelKind::DeltaInterElectron => ResolvedKernel::Delta {
            d: [1.0, -1.0],
            center: zero,
        },
    })
}

fn sym_inv_det(c: &[f64; 3]) -> Result<([f64; 3], f64), NopairError> {
    let det = c[0] * c[2] - c[1] * c[1];
    // Condition estimate from the eigenvalues of the symmetric 2x2.
    let tr = c[0] + c[2];
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let lmax = 0.5 * (tr + disc);
    let lmin = 0.5 * (tr - disc);
    if !(lmin > 0.0) || lmax / lmin > COND_LIMIT {
        return Err(NopairError::Conditioning(format!(
            "combined exponent matrix nearly singular (eigs {lmin:.3e}, {lmax:.3e})"
        )));
    }
    Ok(([c[2] / det, -c[1] / det, c[0] / det], det))
}

fn mat2_mul_vec(m: &[f64; 3], v: [MultiDual; 2]) -> [MultiDual; 2] {
    [
        v[0].scale_re(m[0]).add(&v[1].scale_re(m[1])),
        v[0].scale_re(m[1]).add(&v[1].scale_re(m[2])),
    ]
}

/// Dressed ECG integral: the mixed shift derivative (per `dirs`) of
/// < g_i | kernel | g_j >. No momentum phase factors are applied here; the
/// caller converts derivatives into momentum matrix elements.
pub fn dressed_integral(
    gi: &EcgPrimitive,
    gj: &EcgPrimitive,
    kernel: &ResolvedKernel,
    dirs: &[Dir],
) -> Result<C64, NopairError> {
    assert!(dirs.len() <= 4, "dressing order above four is unsupported");
    let md = dressed_integral_md(gi, gj, kernel, dirs)?;
    Ok(if dirs.is_empty() {
        md.value()
    } else {
        md.derivative(dirs.len())
    })
}

fn shifted_coord(base: f64, which: impl Fn(&Dir) -> bool, dirs: &[Dir]) -> MultiDual {
    let mut m = MultiDual::real(base);
    for (g, d) in dirs.iter().enumerate() {
        if which(d) {
            m.c[1 << g] += C64::new(1.0, 0.0);
        }
    }
    m
}

fn dressed_integral_md(
    gi: &EcgPrimitive,
    gj: &EcgPrimitive,
    kernel: &ResolvedKernel,
    dirs: &[Dir],
) -> Result<MultiDual, NopairError> {
    let a = &gi.a;
    let b = &gj.a;
    let c = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
    let (cinv, det) = sym_inv_det(&c)?;

    // Per Cartesian axis: shift 2-vectors over the particle index, with
    // nilpotent generators attached to the dressed components.
    let mut kappa = MultiDual::zero();
    let mut e = [[MultiDual::zero(); 2]; 3]; // e[axis][particle]
    for axis in 0..3 {
        let s = [
            shifted_coord(gi.s[axis], |d| *d == Dir::Bra(axis), dirs),
            shifted_coord(gi.s[3 + axis], |d| *d == Dir::Bra(3 + axis), dirs),
        ];
        let t = [
            shifted_coord(gj.s[axis], |d| *d == Dir::Ket(axis), dirs),
            shifted_coord(gj.s[3 + axis], |d| *d == Dir::Ket(3 + axis), dirs),
        ];
        let asv = mat2_mul_vec(a, s);
        let btv = mat2_mul_vec(b, t);
        let u = [asv[0].add(&btv[0]), asv[1].add(&btv[1])];
        let cu = mat2_mul_vec(&cinv, u);
        // kappa += s.A s + t.B t - u.Cinv u
        let mut k = s[0].mul(&asv[0]).add(&s[1].mul(&asv[1]));
        k.add_assign(&t[0].mul(&btv[0]).add(&t[1].mul(&btv[1])));
        k = k.sub(&u[0].mul(&cu[0]).add(&u[1].mul(&cu[1])));
        kappa.add_assign(&k);
        e[axis] = cu;
    }
    let norm = PI.powi(3) / det.powf(1.5);
    let overlap = kappa.scale_re(-1.0).exp().scale_re(norm);

    let (d, center, kind) = match kernel {
        ResolvedKernel::Unity => return Ok(overlap),
        ResolvedKernel::Coulomb { d, center } => (d, center, 0u8),
        ResolvedKernel::Linear { d, center } => (d, center, 1u8),
        ResolvedKernel::Delta { d, center } => (d, center, 2u8),
    };

    // Marginal Gaussian of w = d1 r1 + d2 r2 - center:
    // density ~ exp(-gamma (w - wbar)^2), gamma = 1/(d^T Cinv d).
    let dcd = cinv[0] * d[0] * d[0] + 2.0 * cinv[1] * d[0] * d[1] + cinv[2] * d[1] * d[1];
    if !(dcd > 0.0) {
        return Err(NopairError::Conditioning("kernel direction collapsed".into()));
    }
    let gamma = 1.0 / dcd;
    let mut t_arg = MultiDual::zero();
    for axis in 0..3 {
        let mut cen = MultiDual::constant(center[axis]);
        for (g, dir) in dirs.iter().enumerate() {
            if *dir == Dir::KernelShift(axis) {
                cen.c[1 << g] += C64::new(1.0, 0.0);
            }
        }
        let w = e[axis][0]
            .scale_re(d[0])
            .add(&e[axis][1].scale_re(d[1]))
            .sub(&cen);
        t_arg.add_assign(&w.mul(&w));
    }
    t_arg = t_arg.scale_re(gamma);

    let factor = match kind {
        0 => {
            // 2 sqrt(gamma/pi) F0(t)
            let f = boys::boys(t_arg.value(), 4);
            let derivs = [f[0], -f[1], f[2], -f[3], f[4]];
            t_arg.compose(&derivs).scale_re(2.0 * (gamma / PI).sqrt())
        }
        1 => {
            // g(t)/sqrt(gamma), g(t) = (e^-t + (2t+1) F0(t)) / sqrt(pi)
            let t0 = t_arg.value();
            let f = boys::boys(t0, 4);
            let emt = (-t0).exp();
            let sp = PI.sqrt();
            let poly = 2.0 * t0 + 1.0;
            let mut derivs = [C64::new(0.0, 0.0); 5];
            derivs[0] = (emt + poly * f[0]) / sp;
            for k in 1..=4 {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                derivs[k] =
                    (sign * emt - sign * 2.0 * k as f64 * f[k - 1] + sign * poly * f[k]) / sp;
            }
            t_arg.compose(&derivs).scale_re(1.0 / gamma.sqrt())
        }
        _ => {
            // (gamma/pi)^(3/2) e^-t
            t_arg
                .scale_re(-1.0)
                .exp()
                .scale_re((gamma / PI).powf(1.5))
        }
    };
    Ok(overlap.mul(&factor))
}

/// Plain overlap < g_i | g_j >.
pub fn overlap(gi: &EcgPrimitive, gj: &EcgPrimitive) -> Result<C64, NopairError> {
    dressed_integral(gi, gj, &ResolvedKernel::Unity, &[])
}

/// Spec-level dressed kernel integral with momentum-dressing phase factors:
/// each `Bra` direction stands for a momentum operator applied to the bra
/// (factor -i per derivative), each `Ket` for one applied to the ket
/// (factor +i). Kernel shifts carry no phase.
pub fn kernel_integral(
    gi: &EcgPrimitive,
    gj: &EcgPrimitive,
    kind: KernelKind,
    dressing: &[Dir],
    spec: &SystemSpec,
    ctx: ScaledIntegralContext,
) -> Result<C64, NopairError> {
    if dressing.len() > 4 {
        return Err(NopairError::Invalid(
            "dressing order above four is unsupported".into(),
        ));
    }
    let kernel = resolve_kernel(kind, spec, ctx)?;
    let raw = dressed_integral(gi, gj, &kernel, dressing)?;
    Ok(raw * momentum_phase(dressing))
}

/// Product of the +-i factors turning shift derivatives into momentum
/// matrix elements.
pub fn momentum_phase(dressing: &[Dir]) -> C64 {
    let mut p = C64::new(1.0, 0.0);
    for d in dressing {
        match d {
            Dir::Bra(_) => p *= C64::new(0.0, -1.0),
            Dir::Ket(_) => p *= C64::new(0.0, 1.0),
            Dir::KernelShift(_) => {}
        }
    }
    p
}

/// Same as [`kernel_integral`] with the ket primitive's particle labels
/// exchanged (spinor antisymmetrization support).
pub fn permuted_integral(
    gi: &EcgPrimitive,
    gj: &EcgPrimitive,
    kind: KernelKind,
    dressing: &[Dir],
    spec: &SystemSpec,
    ctx: ScaledIntegralContext,
) -> Result<C64, NopairError> {
    kernel_integral(gi, &gj.permuted(), kind, dressing, spec, ctx)
}

// ---------------------------------------------------------------------------
// Fast real-arithmetic closed forms for the nonrelativistic problem.
// ---------------------------------------------------------------------------

/// Overlap, kinetic energy (unit masses) and the data shared by the potential
/// kernels, computed in one pass for a primitive pair.
pub struct PairData {
    pub overlap: f64,
    pub kinetic: f64,
    cinv: [f64; 3],
    /// Gaussian center per axis and particle, e[axis][particle].
    e: [[f64; 2]; 3],
}

impl PairData {
    pub fn new(gi: &EcgPrimitive, gj: &EcgPrimitive) -> Result<Self, NopairError> {
        let a = &gi.a;
        let b = &gj.a;
        let c = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
        let (cinv, det) = sym_inv_det(&c)?;
        let mut kappa = 0.0;
        let mut e = [[0.0; 2]; 3];
        let mut cross = 0.0; // sum_axis (e-s).A B (e-t)
        // tr(A Cinv B) term of the kinetic integral
        let acb_tr = {
            // (A Cinv B)_pp summed: A,B,Cinv symmetric 2x2 in packed form.
            let ac = [
                a[0] * cinv[0] + a[1] * cinv[1],
                a[0] * cinv[1] + a[1] * cinv[2],
                a[1] * cinv[0] + a[2] * cinv[1],
                a[1] * cinv[1] + a[2] * cinv[2],
            ]; // row-major 2x2
            ac[0] * b[0] + ac[1] * b[1] + (ac[2] * b[1] + ac[3] * b[2])
        };
        for axis in 0..3 {
            let s = [gi.s[axis], gi.s[3 + axis]];
            let t = [gj.s[axis], gj.s[3 + axis]];
            let asv = [a[0] * s[0] + a[1] * s[1], a[1] * s[0] + a[2] * s[1]];
            let btv = [b[0] * t[0] + b[1] * t[1], b[1] * t[0] + b[2] * t[1]];
            let u = [asv[0] + btv[0], asv[1] + btv[1]];
            let cu = [cinv[0] * u[0] + cinv[1] * u[1], cinv[1] * u[0] + cinv[2] * u[1]];
            kappa += s[0] * asv[0] + s[1] * asv[1] + t[0] * btv[0] + t[1] * btv[1]
                - u[0] * cu[0]
                - u[1] * cu[1];
            e[axis] = cu;
            let es = [cu[0] - s[0], cu[1] - s[1]];
            let et = [cu[0] - t[0], cu[1] - t[1]];
            let aes = [a[0] * es[0] + a[1] * es[1], a[1] * es[0] + a[2] * es[1]];
            let bet = [b[0] * et[0] + b[1] * et[1], b[1] * et[0] + b[2] * et[1]];
            cross += aes[0] * bet[0] + aes[1] * bet[1];
        }
        let overlap = PI.powi(3) / det.powf(1.5) * (-kappa).exp();
        // T = 1/2 <grad_6 . grad_6> for unit masses.
        let kinetic = 2.0 * (1.5 * acb_tr + cross) * overlap;
        Ok(Self {
            overlap,
            kinetic,
            cinv,
            e,
        })
    }

    /// < 1/|d1 r1 + d2 r2 - center| > (not normalized; includes the overlap).
    pub fn coulomb(&self, d: [f64; 2], center: [f64; 3]) -> f64 {
        let dcd = self.cinv[0] * d[0] * d[0]
            + 2.0 * self.cinv[1] * d[0] * d[1]
            + self.cinv[2] * d[1] * d[1];
        let gamma = 1.0 / dcd;
        let mut w2 = 0.0;
        for axis in 0..3 {
            let w = d[0] * self.e[axis][0] + d[1] * self.e[axis][1] - center[axis];
            w2 += w * w;
        }
        let t = gamma * w2;
        let f0 = if t < 1e-14 {
            1.0 - t / 3.0
        } else {
            0.5 * (PI / t).sqrt() * libm::erf(t.sqrt())
        };
        self.overlap * 2.0 * (gamma / PI).sqrt() * f0
    }
}
