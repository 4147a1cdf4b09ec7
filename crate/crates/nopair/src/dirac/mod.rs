//! Assembly of the 16-component two-electron Dirac operators over a
//! kinetically balanced, antisymmetrized ECG basis.
//!
//! Component layout: a basis column is indexed by 16*j + 4*lambda + sigma,
//! where j is the primitive, lambda ∈ {ll, ls, sl, ss} picks the
//! large/small bispinor sector per particle, and sigma ∈ {uu, ud, du, dd} the
//! spin projection pair. A basis function is the kinetic-balance image
//! K(lambda) chi(sigma) g_j; the balance factors contribute momentum
//! dressings that the integral layer evaluates as shift derivatives.

pub mod one_electron;
pub mod spin;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::{Read as IoRead, Write as IoWrite};
use std::path::Path;

use crate::error::NopairError;
use crate::integrals::{
    dressed_integral, momentum_phase, resolve_kernel, Dir, KernelKind, ResolvedKernel,
    ScaledIntegralContext,
};
use crate::system::{EcgPrimitive, SystemSpec};
use spin::{exchange_spin, SpinMat};

pub const LL: usize = 0;
pub const LS: usize = 1;
pub const SL: usize = 2;
pub const SS: usize = 3;

/// Sector image under particle exchange: ls and sl swap.
pub const EXCHANGE_LAMBDA: [usize; 4] = [LL, SL, LS, SS];

/// Column image of the 16-component exchange permutation (the spatial
/// particle swap is handled separately by permuting the ket primitive).
pub fn exchange_component(mu: usize) -> usize {
    let lambda = mu / 4;
    let sigma = mu % 4;
    4 * EXCHANGE_LAMBDA[lambda] + exchange_spin(sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    NonInteracting,
    DiracCoulomb,
    DiracCoulombBreit,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrices {
    pub h: Array2<Complex64>,
    pub s: Array2<Complex64>,
    pub kind: OperatorKind,
    pub theta: f64,
    /// Rest energy (m1 + m2) c^2 already subtracted from H's diagonal, so
    /// bound-state eigenvalues come out on the hartree scale.
    pub rest_shift: f64,
}

// ---------------------------------------------------------------------------
// Kinetic-balance factors per sector: sums of (spin matrix, bra/ket momentum
// coordinates, scalar).

struct KbTerm {
    spin: SpinMat,
    /// Momentum coordinates in 0..6 (particle-major: 3p + axis).
    moms: Vec<usize>,
    coeff: f64,
}

fn kb_terms(lambda: usize, spec: &SystemSpec) -> Vec<KbTerm> {
    let c = spec.constants.c();
    let [m1, m2] = spec.masses;
    match lambda {
        LL => vec![KbTerm {
            spin: SpinMat::identity(),
            moms: vec![],
            coeff: 1.0,
        }],
        LS => (0..3)
            .map(|a| KbTerm {
                spin: SpinMat::sigma2(a),
                moms: vec![3 + a],
                coeff: 1.0 / (2.0 * m2 * c),
            })
            .collect(),
        SL => (0..3)
            .map(|a| KbTerm {
                spin: SpinMat::sigma1(a),
                moms: vec![a],
                coeff: 1.0 / (2.0 * m1 * c),
            })
            .collect(),
        SS => {
            let mut v = Vec::with_capacity(9);
            for a in 0..3 {
                for b in 0..3 {
                    v.push(KbTerm {
                        spin: SpinMat::sigma12(a, b),
                        moms: vec![a, 3 + b],
                        coeff: 1.0 / (4.0 * m1 * m2 * c * c),
                    });
                }
            }
            v
        }
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// Operator tables: each (bra sector, ket sector) entry is a list of terms
// (spin matrix, resolved kernel, ket momenta, kernel shifts, coefficient).
// CCR phase factors for homogeneous kernels and operator momenta are folded
// into the coefficients here; the integral layer only back-rotates nuclear
// centers.

pub struct OpTerm {
    spin: SpinMat,
    kernel: ResolvedKernel,
    op_moms: Vec<usize>,
    kernel_shifts: Vec<usize>,
    coeff: Complex64,
}

pub struct OpTable {
    entries: Vec<Vec<Vec<OpTerm>>>, // [bra sector][ket sector] -> terms
}

impl OpTable {
    /// Overlap operator (kinetic-balance metric).
    pub fn overlap() -> Self {
        overlap_table()
    }

    /// Hamiltonian of `kind` at CCR angle `ctx.theta`.
    pub fn hamiltonian(
        spec: &SystemSpec,
        kind: OperatorKind,
        ctx: ScaledIntegralContext,
    ) -> Result<Self, NopairError> {
        hamiltonian_table(spec, kind, ctx)
    }
}

fn empty_table() -> Vec<Vec<Vec<OpTerm>>> {
    (0..4).map(|_| (0..4).map(|_| Vec::new()).collect()).collect()
}

fn overlap_table() -> OpTable {
    let mut entries = empty_table();
    for (lambda, row) in entries.iter_mut().enumerate() {
        row[lambda].push(OpTerm {
            spin: SpinMat::identity(),
            kernel: ResolvedKernel::Unity,
            op_moms: vec![],
            kernel_shifts: vec![],
            coeff: Complex64::new(1.0, 0.0),
        });
    }
    OpTable { entries }
}

fn hamiltonian_table(
    spec: &SystemSpec,
    kind: OperatorKind,
    ctx: ScaledIntegralContext,
) -> Result<OpTable, NopairError> {
    let c = spec.constants.c();
    let [m1, m2] = spec.masses;
    let rot = Complex64::from_polar(1.0, -ctx.theta); // e^{-i theta}
    let q12 = spec.charges[0] * spec.charges[1];
    let mut entries = empty_table();

    // Diagonal sectors: nuclear attraction U, electron repulsion V, and the
    // rest-mass shifts of the small sectors.
    let shifts = [
        0.0,
        -2.0 * m2 * c * c,
        -2.0 * m1 * c * c,
        -2.0 * (m1 + m2) * c * c,
    ];
    for lambda in 0..4 {
        for (nucleus, nuc) in spec.nuclei.iter().enumerate() {
            for particle in 0..2 {
                let z = spec.charges[particle] * nuc.charge;
                if z == 0.0 {
                    continue;
                }
                entries[lambda][lambda].push(OpTerm {
                    spin: SpinMat::identity(),
                    kernel: resolve_kernel(
                        KernelKind::NuclearAttraction { particle, nucleus },
                        spec,
                        ctx,
                    )?,
                    op_moms: vec![],
                    kernel_shifts: vec![],
                    coeff: rot * z,
                });
            }
        }
        if kind != OperatorKind::NonInteracting && q12 != 0.0 {
            entries[lambda][lambda].push(OpTerm {
                spin: SpinMat::identity(),
                kernel: resolve_kernel(KernelKind::InterElectronCoulomb, spec, ctx)?,
                op_moms: vec![],
                kernel_shifts: vec![],
                coeff: rot * q12,
            });
        }
        if shifts[lambda] != 0.0 {
            entries[lambda][lambda].push(OpTerm {
                spin: SpinMat::identity(),
                kernel: ResolvedKernel::Unity,
                op_moms: vec![],
                kernel_shifts: vec![],
                coeff: Complex64::new(shifts[lambda], 0.0),
            });
        }
    }

    // Off-diagonal kinetic couplings c sigma_i . p_i; each operator momentum
    // scales by e^{-i theta} under CCR.
    let couple = |entries: &mut Vec<Vec<Vec<OpTerm>>>, lb: usize, lk: usize, particle: usize| {
        for a in 0..3 {
            entries[lb][lk].push(OpTerm {
                spin: if particle == 0 {
                    SpinMat::sigma1(a)
                } else {
                    SpinMat::sigma2(a)
                },
                kernel: ResolvedKernel::Unity,
                op_moms: vec![3 * particle + a],
                kernel_shifts: vec![],
                coeff: rot * c,
            });
        }
    };
    couple(&mut entries, LL, LS, 1);
    couple(&mut entries, LS, LL, 1);
    couple(&mut entries, SL, SS, 1);
    couple(&mut entries, SS, SL, 1);
    couple(&mut entries, LL, SL, 0);
    couple(&mut entries, SL, LL, 0);
    couple(&mut entries, LS, SS, 0);
    couple(&mut entries, SS, LS, 0);

    // Breit corner blocks: -q1 q2 [ sigma1.sigma2 / r12
    //                               + (sigma1.grad1)(sigma2.grad2) r12 / 2 ].
    // The second mixed derivative of r12 with respect to the two electron
    // coordinates equals minus the second derivative of the shifted-center
    // kernel |r12 - R| in R, giving the sign below. The whole block scales
    // homogeneously as e^{-i theta}.
    if kind == OperatorKind::DiracCoulombBreit && q12 != 0.0 {
        let corners = [(LL, SS), (SS, LL), (LS, SL), (SL, LS)];
        for &(lb, lk) in &corners {
            for a in 0..3 {
                entries[lb][lk].push(OpTerm {
                    spin: SpinMat::sigma12(a, a),
                    kernel: resolve_kernel(KernelKind::InterElectronCoulomb, spec, ctx)?,
                    op_moms: vec![],
                    kernel_shifts: vec![],
                    coeff: -rot * q12,
                });
                for b in 0..3 {
                    entries[lb][lk].push(OpTerm {
                        spin: SpinMat::sigma12(a, b),
                        kernel: resolve_kernel(KernelKind::InterElectronLinear, spec, ctx)?,
                        op_moms: vec![],
                        kernel_shifts: vec![a, b],
                        coeff: rot * (0.5 * q12),
                    });
                }
            }
        }
    }

    Ok(OpTable { entries })
}

// ---------------------------------------------------------------------------
// Block evaluation.

/// Raw (non-antisymmetrized) 16x16 block of `table` between two primitives.
fn raw_block(
    gi: &EcgPrimitive,
    gj: &EcgPrimitive,
    spec: &SystemSpec,
    table: &OpTable,
) -> Result<Array2<Complex64>, NopairError> {
    let mut block = Array2::zeros((16, 16));
    let kb: Vec<Vec<KbTerm>> = (0..4).map(|l| kb_terms(l, spec)).collect();
    for lb in 0..4 {
        for lk in 0..4 {
            for term in &table.entries[lb][lk] {
                for bt in &kb[lb] {
                    for kt in &kb[lk] {
                        let spin = bt.spin.adjoint().mul(&term.spin).mul(&kt.spin);
                        if spin.is_zero() {
                            continue;
                        }
                        let mut dirs: Vec<Dir> =
                            bt.moms.iter().map(|&k| Dir::Bra(k)).collect();
                        dirs.extend(term.op_moms.iter().map(|&k| Dir::Ket(k)));
                        dirs.extend(kt.moms.iter().map(|&k| Dir::Ket(k)));
                        dirs.extend(term.kernel_shifts.iter().map(|&k| Dir::KernelShift(k)));
                        let spatial = dressed_integral(gi, gj, &term.kernel, &dirs)?
                            * momentum_phase(&dirs);
                        let scale = spatial * term.coeff * (bt.coeff * kt.coeff);
                        for sb in 0..4 {
                            for sk in 0..4 {
                                let w = spin.0[sb][sk];
                                if w.norm_sqr() != 0.0 {
                                    block[(4 * lb + sb, 4 * lk + sk)] += scale * w;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(block)
}

/// Antisymmetrized block: direct minus the exchange image, where exchange
/// permutes the ket primitive's particle labels and the ket component index.
pub fn kb_block(
    gi: &EcgPrimitive,
    gj: &EcgPrimitive,
    spec: &SystemSpec,
    table: &OpTable,
) -> Result<Array2<Complex64>, NopairError> {
    let direct = raw_block(gi, gj, spec, table)?;
    let swapped = raw_block(gi, &gj.permuted(), spec, table)?;
    let mut block = direct;
    for mu in 0..16 {
        for nu in 0..16 {
            block[(mu, nu)] -= swapped[(mu, exchange_component(nu))];
        }
    }
    Ok(block)
}

/// Assembles H and S for `kind` at CCR angle `theta` over the basis.
pub fn assemble(
    basis: &[EcgPrimitive],
    spec: &SystemSpec,
    kind: OperatorKind,
    theta: f64,
) -> Result<OperatorMatrices, NopairError> {
    if basis.is_empty() {
        return Err(NopairError::Invalid("empty basis".into()));
    }
    let ctx = ScaledIntegralContext::new(theta)?;
    let h_table = hamiltonian_table(spec, kind, ctx)?;
    let s_table = overlap_table();
    let n = basis.len();
    let blocks: Result<Vec<(Array2<Complex64>, Array2<Complex64>)>, NopairError> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let hb = kb_block(&basis[i], &basis[j], spec, &h_table)?;
            let sb = kb_block(&basis[i], &basis[j], spec, &s_table)?;
            Ok((hb, sb))
        })
        .collect();
    let blocks = blocks?;
    let dim = 16 * n;
    let mut h = Array2::zeros((dim, dim));
    let mut s = Array2::zeros((dim, dim));
    for (k, (hb, sb)) in blocks.into_iter().enumerate() {
        let (i, j) = (k / n, k % n);
        h.slice_mut(ndarray::s![16 * i..16 * i + 16, 16 * j..16 * j + 16])
            .assign(&hb);
        s.slice_mut(ndarray::s![16 * i..16 * i + 16, 16 * j..16 * j + 16])
            .assign(&sb);
    }
    // Symmetric diagonal normalization: the balance factors scale the metric
    // by up to c^-4 across sectors, which would put kappa(S) >= c^4 before
    // any real linear dependence enters. Congruence by D^-1/2 from diag(S)
    // leaves the pencil eigenvalues unchanged and is reproducible across
    // operator kinds and CCR angles because S depends on neither.
    let mut d = vec![1.0; dim];
    for (i, di) in d.iter_mut().enumerate() {
        let sii = s[(i, i)].re;
        if sii.is_finite() && sii > 0.0 {
            *di = 1.0 / sii.sqrt();
        }
    }
    for i in 0..dim {
        for j in 0..dim {
            let w = d[i] * d[j];
            h[(i, j)] *= w;
            s[(i, j)] *= w;
        }
    }
    let c = spec.constants.c();
    Ok(OperatorMatrices {
        h,
        s,
        kind,
        theta,
        rest_shift: (spec.masses[0] + spec.masses[1]) * c * c,
    })
}

// ---------------------------------------------------------------------------
// Binary dump: little-endian, header then row-major complex entries of H and
// S. Header: magic "KBMX", version u32, dim u64, kind u8, theta f64,
// FNV-1a checksum u64 of the payload bytes.

fn kind_code(kind: OperatorKind) -> u8 {
    match kind {
        OperatorKind::NonInteracting => 0,
        OperatorKind::DiracCoulomb => 1,
        OperatorKind::DiracCoulombBreit => 2,
    }
}

fn kind_from_code(code: u8) -> Result<OperatorKind, NopairError> {
    Ok(match code {
        0 => OperatorKind::NonInteracting,
        1 => OperatorKind::DiracCoulomb,
        2 => OperatorKind::DiracCoulombBreit,
        _ => return Err(NopairError::Config(format!("unknown operator code {code}"))),
    })
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn matrix_bytes(m: &Array2<Complex64>) -> Vec<u8> {
    let mut v = Vec::with_capacity(m.len() * 16);
    for z in m.iter() {
        v.extend_from_slice(&z.re.to_le_bytes());
        v.extend_from_slice(&z.im.to_le_bytes());
    }
    v
}

pub fn dump_matrices(path: &Path, m: &OperatorMatrices) -> Result<(), NopairError> {
    let dim = m.h.nrows() as u64;
    let mut payload = matrix_bytes(&m.h);
    payload.extend_from_slice(&matrix_bytes(&m.s));
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(b"KBMX")?;
        f.write_all(&1u32.to_le_bytes())?;
        f.write_all(&dim.to_le_bytes())?;
        f.write_all(&[kind_code(m.kind)])?;
        f.write_all(&m.theta.to_le_bytes())?;
        f.write_all(&m.rest_shift.to_le_bytes())?;
        f.write_all(&fnv1a(&payload).to_le_bytes())?;
        f.write_all(&payload)?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_matrices(path: &Path) -> Result<OperatorMatrices, NopairError> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if &magic != b"KBMX" {
        return Err(NopairError::Config("bad matrix dump magic".into()));
    }
    let mut b4 = [0u8; 4];
    f.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != 1 {
        return Err(NopairError::Config("unsupported dump version".into()));
    }
    let mut b8 = [0u8; 8];
    f.read_exact(&mut b8)?;
    let dim = u64::from_le_bytes(b8) as usize;
    let mut b1 = [0u8; 1];
    f.read_exact(&mut b1)?;
    let kind = kind_from_code(b1[0])?;
    f.read_exact(&mut b8)?;
    let theta = f64::from_le_bytes(b8);
    f.read_exact(&mut b8)?;
    let rest_shift = f64::from_le_bytes(b8);
    f.read_exact(&mut b8)?;
    let checksum = u64::from_le_bytes(b8);
    let mut payload = Vec::new();
    f.read_to_end(&mut payload)?;
    if payload.len() != 2 * dim * dim * 16 {
        return Err(NopairError::Config("matrix dump truncated".into()));
    }
    if fnv1a(&payload) != checksum {
        return Err(NopairError::Config("matrix dump checksum mismatch".into()));
    }
    let read_mat = |bytes: &[u8]| -> Array2<Complex64> {
        Array2::from_shape_fn((dim, dim), |(i, j)| {
            let off = (i * dim + j) * 16;
            let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
            Complex64::new(re, im)
        })
    };
    let half = dim * dim * 16;
    Ok(OperatorMatrices {
        h: read_mat(&payload[..half]),
        s: read_mat(&payload[half..]),
        kind,
        theta,
        rest_shift,
    })
}
