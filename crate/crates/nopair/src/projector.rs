//! Positive-energy projection of the interacting Dirac pencils.
//!
//! The non-interacting two-electron spectrum splits into three bands that
//! the rest-energy shift places near 0, -2mc^2 and -4mc^2: both electrons
//! positive-energy, one electron in the negative continuum (the degeneracy
//! source known as Brown-Ravenhall states), and both negative. Complex
//! coordinate rotation moves continuum branches into the lower half-plane
//! by about -2 theta around their thresholds while bound states stay put,
//! so back-extrapolating each eigenvalue along exp(-2 i theta) recovers the
//! threshold it emanates from and hence its band. The projector retains the
//! positive-positive eigenvectors and the interacting problem is solved in
//! their span.

use ndarray::{Array1, Array2};
use ndarray_linalg::OperationNorm;
#[cfg(test)]
use ndarray_linalg::Norm;
use num_complex::Complex64;

use crate::dirac::{assemble, OperatorKind, OperatorMatrices};
use crate::eigen::{eigh_hermitian, solve_pencil, PencilSolveOptions};
use crate::error::NopairError;
use crate::system::{EcgPrimitive, SystemSpec};

/// Band assignment of one non-interacting eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateLabel {
    PhysicalPositive,
    BrownRavenhall,
    NegativeContinuumLike,
}

#[derive(Debug, Clone)]
pub struct ClassifiedState {
    pub energy: Complex64,
    /// Eigenvalue matched at the reference angle.
    pub energy_ref: Complex64,
    /// |E(theta) - E(theta_ref)|, the trajectory displacement.
    pub displacement: f64,
    /// Real threshold recovered by back-rotation along exp(-2 i theta).
    pub threshold: f64,
    pub label: StateLabel,
    /// True when the trajectory is stationary like a bound state but the
    /// recovered threshold sits close to a band edge; such states are
    /// reported rather than trusted silently.
    pub ambiguous: bool,
}

#[derive(Debug, Clone)]
pub struct StateClassification {
    pub states: Vec<ClassifiedState>,
    pub theta: f64,
    pub theta_ref: f64,
    /// Right eigenvectors at `theta`, one column per classified state.
    pub vectors: Array2<Complex64>,
}

impl StateClassification {
    pub fn positive_indices(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&i| self.states[i].label == StateLabel::PhysicalPositive)
            .collect()
    }

    /// Lowest real part among physical positive-energy states.
    pub fn ground_energy(&self) -> Option<Complex64> {
        self.states
            .iter()
            .filter(|s| s.label == StateLabel::PhysicalPositive)
            .map(|s| s.energy)
            .min_by(|a, b| a.re.total_cmp(&b.re))
    }

    /// One CSV row per state: Re, Im, threshold, displacement, label.
    pub fn report_csv(&self) -> String {
        let mut out = String::from("re_e,im_e,threshold,displacement,label,ambiguous\n");
        for s in &self.states {
            let label = match s.label {
                StateLabel::PhysicalPositive => "positive",
                StateLabel::BrownRavenhall => "brown-ravenhall",
                StateLabel::NegativeContinuumLike => "negative",
            };
            out.push_str(&format!(
                "{:.9e},{:.9e},{:.9e},{:.3e},{},{}\n",
                s.energy.re, s.energy.im, s.threshold, s.displacement, label, s.ambiguous
            ));
        }
        out
    }
}

/// Relative displacement under which a trajectory counts as stationary.
const STATIONARY_TOL: f64 = 1e-7;

/// Classify the non-interacting spectrum by solving at two rotation angles.
pub fn classify_noninteracting(
    basis: &[EcgPrimitive],
    spec: &SystemSpec,
    theta: f64,
    theta_ref: f64,
) -> Result<StateClassification, NopairError> {
    if theta == 0.0 || theta_ref == theta {
        return Err(NopairError::Classification(
            "two distinct nonzero rotation angles required".into(),
        ));
    }
    let m = assemble(basis, spec, OperatorKind::NonInteracting, theta)?;
    let m_ref = assemble(basis, spec, OperatorKind::NonInteracting, theta_ref)?;
    // Redundant ECG sets push kappa(S) far enough that the back-transformed
    // general-eigensolve residual cannot meet the default bound.
    let opts = PencilSolveOptions::complex_symmetric().with_residual_tol(1e-6);
    let sol = solve_pencil(&m.h, &m.s, &opts)?;
    let sol_ref = solve_pencil(&m_ref.h, &m_ref.s, &opts)?;
    let ref_values: Vec<Complex64> = sol_ref.pairs.iter().map(|p| p.value).collect();
    if ref_values.is_empty() || sol.pairs.is_empty() {
        return Err(NopairError::Classification("empty spectrum".into()));
    }

    let c = spec.constants.c();
    let mc2 = c * c; // unit electron masses
    let rot = Complex64::from_polar(1.0, -2.0 * theta);
    let dim = sol.pairs[0].vector.len();
    let mut vectors = Array2::zeros((dim, sol.pairs.len()));
    let mut states = Vec::with_capacity(sol.pairs.len());
    for (col, pair) in sol.pairs.iter().enumerate() {
        vectors.column_mut(col).assign(&pair.vector);
        let e = pair.value;
        let e_ref = ref_values
            .iter()
            .copied()
            .min_by(|a, b| (a - e).norm().total_cmp(&(b - e).norm()))
            .unwrap();
        let displacement = (e_ref - e).norm();
        let stationary = displacement <= STATIONARY_TOL * e.norm().max(1.0);
        // E = E_thr + rho exp(-2 i theta) with real rho >= 0 for a state on
        // a rotated continuum branch; solve for the threshold. Stationary
        // states sit at their own (real) threshold.
        let threshold = if stationary {
            e.re
        } else {
            e.re - e.im * rot.re / rot.im
        };
        let label = if threshold > -mc2 {
            StateLabel::PhysicalPositive
        } else if threshold > -3.0 * mc2 {
            StateLabel::BrownRavenhall
        } else {
            StateLabel::NegativeContinuumLike
        };
        // A stationary trajectory near a band edge cannot be banded with
        // confidence; the -2mc^2 gaps make this a pathology, not a routine.
        let margin = 0.05 * mc2;
        let ambiguous = stationary
            && ((threshold + mc2).abs() < margin || (threshold + 3.0 * mc2).abs() < margin);
        states.push(ClassifiedState {
            energy: e,
            energy_ref: e_ref,
            displacement,
            threshold,
            label,
            ambiguous,
        });
    }
    Ok(StateClassification {
        states,
        theta,
        theta_ref,
        vectors,
    })
}

/// S-orthonormal span of the positive-energy eigenvectors.
#[derive(Debug, Clone)]
pub struct ProjectorSubspace {
    /// Columns phi_k with phi_i^dagger S phi_j = delta_ij.
    pub columns: Array2<Complex64>,
    pub count: usize,
    pub theta: f64,
    /// Gram eigenvalues discarded during orthonormalization, if any.
    pub dropped: usize,
    /// Frobenius norm of Lambda^2 - Lambda for the assembled projector.
    pub idempotence_defect: f64,
}

const IDEMPOTENCE_TOL: f64 = 1e-10;

/// One round of metric orthonormalization: eigendecompose Phi^dagger S Phi,
/// drop directions below `cutoff` relative to the largest, and rescale.
fn canonical_pass(
    phi: &Array2<Complex64>,
    s: &Array2<Complex64>,
    cutoff: f64,
) -> Result<(Array2<Complex64>, usize), NopairError> {
    let gram = phi.t().mapv(|z| z.conj()).dot(&s.dot(phi));
    let (gvals, gvecs) = eigh_hermitian(&gram)?;
    let gmax = gvals.iter().cloned().fold(0.0f64, f64::max);
    if gmax <= 0.0 {
        return Err(NopairError::Conditioning(
            "positive-energy Gram matrix is singular".into(),
        ));
    }
    let keep: Vec<usize> = (0..gvals.len())
        .filter(|&i| gvals[i] > cutoff * gmax)
        .collect();
    if keep.is_empty() {
        return Err(NopairError::Conditioning(
            "orthonormalization lost all directions".into(),
        ));
    }
    let mut transform = Array2::<Complex64>::zeros((phi.ncols(), keep.len()));
    for (k, &i) in keep.iter().enumerate() {
        let scale = Complex64::new(1.0 / gvals[i].sqrt(), 0.0);
        transform
            .column_mut(k)
            .assign(&gvecs.column(i).mapv(|z| z * scale));
    }
    Ok((phi.dot(&transform), gvals.len() - keep.len()))
}

/// Orthonormalize the PhysicalPositive eigenvectors against the metric and
/// verify the resulting projector Lambda = Phi Phi^dagger S is idempotent.
pub fn build_projector(
    classification: &StateClassification,
    matrices: &OperatorMatrices,
) -> Result<ProjectorSubspace, NopairError> {
    let idx = classification.positive_indices();
    if idx.is_empty() {
        return Err(NopairError::Classification(
            "no positive-energy states to project onto".into(),
        ));
    }
    let dim = classification.vectors.nrows();
    let mut phi = Array2::<Complex64>::zeros((dim, idx.len()));
    for (k, &i) in idx.iter().enumerate() {
        let col = classification.vectors.column(i);
        // Normalize in the metric so Gram eigenvalues measure genuine
        // near-dependence rather than scale spread.
        let nrm = col
            .mapv(|z| z.conj())
            .dot(&matrices.s.dot(&col.to_owned()))
            .re
            .max(1e-300)
            .sqrt();
        phi.column_mut(k)
            .assign(&col.mapv(|z| z / Complex64::new(nrm, 0.0)));
    }
    // Canonical orthonormalization of the Gram matrix Phi^dagger S Phi,
    // followed by refinement passes: after the first pass the Gram is
    // near-identity, and each further pass scrubs the kappa-amplified
    // roundoff of its predecessor. Iterate until the projector
    // Lambda = Phi Phi^dagger S is idempotent to tolerance; with
    // S-orthonormal columns Lambda^2 = Phi (Phi^dagger S Phi)
    // Phi^dagger S = Lambda up to roundoff.
    let (mut columns, mut dropped) = canonical_pass(&phi, &matrices.s, 1e-12)?;
    let mut defect = f64::INFINITY;
    let mut lambda_norm = 1.0f64;
    for _ in 0..4 {
        let (refined, lost) = canonical_pass(&columns, &matrices.s, 1e-3)?;
        columns = refined;
        dropped += lost;
        let lambda = columns
            .dot(&columns.t().mapv(|z| z.conj()))
            .dot(&matrices.s);
        defect = (&lambda.dot(&lambda) - &lambda)
            .opnorm_fro()
            .map_err(|e| NopairError::Eigen(e.to_string()))?;
        lambda_norm = lambda
            .opnorm_fro()
            .map_err(|e| NopairError::Eigen(e.to_string()))?;
        if defect <= IDEMPOTENCE_TOL * lambda_norm.max(1.0) {
            break;
        }
    }
    if defect > IDEMPOTENCE_TOL * lambda_norm.max(1.0) {
        return Err(NopairError::Conditioning(format!(
            "projector idempotence defect {defect:.3e}"
        )));
    }
    Ok(ProjectorSubspace {
        count: columns.ncols(),
        columns,
        theta: classification.theta,
        dropped,
        idempotence_defect: defect,
    })
}

impl ProjectorSubspace {
    /// Apply Lambda = Phi Phi^dagger S to a vector.
    pub fn apply(&self, s: &Array2<Complex64>, v: &Array1<Complex64>) -> Array1<Complex64> {
        let coeff = self.columns.t().mapv(|z| z.conj()).dot(&s.dot(v));
        self.columns.dot(&coeff)
    }
}

/// Eigenvalue of a projected interacting pencil with its diagnostics.
#[derive(Debug, Clone)]
pub struct EnergyResult {
    pub value: Complex64,
    pub kind: OperatorKind,
    pub theta: f64,
    /// Index of the returned eigenvalue within the projected spectrum.
    pub index: usize,
    /// Rank of the projector subspace the pencil was solved in.
    pub subspace: usize,
}

/// |Im E| bound appropriate for a bound state in a converged basis. On
/// unconverged bases the imaginary part is of the order of the basis
/// truncation error, so looser caller-chosen bounds apply there.
pub const BOUND_IMAG_TOL: f64 = 1e-8;

/// Solve the interacting pencil restricted to the projector subspace and
/// return the `index`-th eigenvalue ordered by real part. `imag_tol` bounds
/// the accepted |Im E|; see [`BOUND_IMAG_TOL`].
pub fn projected_energy(
    basis: &[EcgPrimitive],
    spec: &SystemSpec,
    kind: OperatorKind,
    theta: f64,
    theta_ref: f64,
    index: usize,
    imag_tol: f64,
) -> Result<EnergyResult, NopairError> {
    if kind == OperatorKind::NonInteracting {
        return Err(NopairError::Invalid(
            "projection applies to interacting operators".into(),
        ));
    }
    let classification = classify_noninteracting(basis, spec, theta, theta_ref)?;
    let m = assemble(basis, spec, kind, theta)?;
    let subspace = build_projector(&classification, &m)?;
    projected_energy_in(&subspace, &m, index, imag_tol)
}

/// Same as [`projected_energy`] with a prebuilt subspace and matrices.
pub fn projected_energy_in(
    subspace: &ProjectorSubspace,
    matrices: &OperatorMatrices,
    index: usize,
    imag_tol: f64,
) -> Result<EnergyResult, NopairError> {
    if subspace.theta != matrices.theta {
        return Err(NopairError::Invalid(
            "projector and matrices use different rotation angles".into(),
        ));
    }
    let phi_conj = subspace.columns.t().mapv(|z| z.conj());
    let hp = phi_conj.dot(&matrices.h.dot(&subspace.columns));
    let sp = phi_conj.dot(&matrices.s.dot(&subspace.columns));
    let opts = PencilSolveOptions::complex_symmetric().with_residual_tol(1e-6);
    let sol = solve_pencil(&hp, &sp, &opts)?;
    let pair = sol.pairs.get(index).ok_or_else(|| {
        NopairError::Eigen(format!(
            "eigenvalue index {index} outside projected spectrum of size {}",
            sol.pairs.len()
        ))
    })?;
    if pair.value.im.abs() > imag_tol {
        return Err(NopairError::Eigen(format!(
            "projected eigenvalue {} has imaginary part {:.3e} above {imag_tol:.0e}",
            pair.value, pair.value.im
        )));
    }
    Ok(EnergyResult {
        value: pair.value,
        kind: matrices.kind,
        theta: matrices.theta,
        index,
        subspace: subspace.count,
    })
}

/// Lowest eigenvalues of the unprojected pencil, for demonstrating the
/// intruder states the projector removes.
pub fn unprojected_spectrum_floor(
    basis: &[EcgPrimitive],
    spec: &SystemSpec,
    kind: OperatorKind,
    window: (f64, f64),
) -> Result<Vec<f64>, NopairError> {
    let m = assemble(basis, spec, kind, 0.0)?;
    let sol = solve_pencil(&m.h, &m.s, &PencilSolveOptions::hermitian())?;
    Ok(sol
        .pairs
        .iter()
        .map(|p| p.value.re)
        .filter(|&e| e > window.0 && e < window.1)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{ClampedNucleus, StateSelector};

    const THETA: f64 = 0.15;
    const THETA_REF: f64 = 0.225;

    fn he() -> SystemSpec {
        SystemSpec::two_electron(
            "He",
            vec![ClampedNucleus {
                charge: 2.0,
                position: [0.0; 3],
            }],
        )
    }

    fn he_basis(n: usize) -> Vec<EcgPrimitive> {
        // Geometric correlated set adequate for structural tests.
        let mut v = Vec::new();
        let mut k = 0;
        'outer: for i in 0..6 {
            for j in 0..6 {
                if k >= n {
                    break 'outer;
                }
                let a1 = 0.25 * 2.1f64.powi(i);
                let a2 = 0.25 * 2.1f64.powi(j);
                let a12 = -0.05 * (1.0 + ((i + 2 * j) % 5) as f64 * 0.2);
                v.push(EcgPrimitive::new([a1, a12, a2], [0.0; 6]));
                k += 1;
            }
        }
        v
    }

    #[test]
    fn labels_partition_and_bands_are_populated() {
        let basis = he_basis(6);
        let cls = classify_noninteracting(&basis, &he(), THETA, THETA_REF).unwrap();
        assert_eq!(cls.states.len(), cls.vectors.ncols());
        let npos = cls.positive_indices().len();
        let nbr = cls
            .states
            .iter()
            .filter(|s| s.label == StateLabel::BrownRavenhall)
            .count();
        let nneg = cls
            .states
            .iter()
            .filter(|s| s.label == StateLabel::NegativeContinuumLike)
            .count();
        assert_eq!(npos + nbr + nneg, cls.states.len());
        assert!(npos > 0 && nbr > 0 && nneg > 0, "{npos} {nbr} {nneg}");
        for s in &cls.states {
            assert!(!s.ambiguous, "ambiguous state at {:?}", s.energy);
        }
    }

    #[test]
    fn noninteracting_ground_matches_closed_form() {
        let basis = he_basis(12);
        let cls = classify_noninteracting(&basis, &he(), THETA, THETA_REF).unwrap();
        let ground = cls.ground_energy().unwrap();
        // Two Z=2 point-nucleus electrons: -4.000213028..., approached from
        // above by this rough basis.
        assert!(ground.re > -4.0002131, "{ground}");
        assert!(ground.re < -3.8, "{ground}");
        // |Im| tracks the basis truncation error on this rough set.
        assert!(ground.im.abs() < 0.1, "{ground}");
    }

    #[test]
    fn projector_rank_and_idempotence() {
        let basis = he_basis(4);
        let spec = he();
        let cls = classify_noninteracting(&basis, &spec, THETA, THETA_REF).unwrap();
        let m = assemble(&basis, &spec, OperatorKind::NonInteracting, THETA).unwrap();
        let p = build_projector(&cls, &m).unwrap();
        assert_eq!(p.count + p.dropped, cls.positive_indices().len());
        assert!(p.idempotence_defect < 1e-10 * (p.count as f64).sqrt().max(1.0));
        // Applying Lambda twice to a random vector reproduces one application.
        let dim = m.s.nrows();
        let v = Array1::from_shape_fn(dim, |i| {
            Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())
        });
        let once = p.apply(&m.s, &v);
        let twice = p.apply(&m.s, &once);
        assert!((&twice - &once).norm_l2() < 1e-10 * once.norm_l2().max(1.0));
    }

    #[test]
    fn projected_dc_is_sane_and_theta_stable() {
        let basis = he_basis(12);
        let spec = he();
        let e1 = projected_energy(
            &basis,
            &spec,
            OperatorKind::DiracCoulomb,
            THETA,
            THETA_REF,
            0,
            0.1,
        )
        .unwrap();
        // A 12-primitive unoptimized set: right region, loose accuracy.
        assert!(e1.value.re < -2.7 && e1.value.re > -3.0, "{:?}", e1.value);
        let e2 = projected_energy(&basis, &spec, OperatorKind::DiracCoulomb, 0.1, 0.175, 0, 0.1)
            .unwrap();
        // Angle dependence shrinks with basis completeness; here it only
        // needs to stay well below the truncation error itself.
        assert!(
            (e1.value.re - e2.value.re).abs() < 5e-2,
            "theta drift {:.3e}",
            (e1.value.re - e2.value.re).abs()
        );
    }

    #[test]
    fn dcb_lies_above_dc() {
        let basis = he_basis(12);
        let spec = he();
        let dc = projected_energy(
            &basis,
            &spec,
            OperatorKind::DiracCoulomb,
            THETA,
            THETA_REF,
            0,
            0.1,
        )
        .unwrap();
        let dcb = projected_energy(
            &basis,
            &spec,
            OperatorKind::DiracCoulombBreit,
            THETA,
            THETA_REF,
            0,
            0.1,
        )
        .unwrap();
        assert!(
            dcb.value.re > dc.value.re,
            "DCB {} not above DC {}",
            dcb.value.re,
            dc.value.re
        );
    }

    #[test]
    fn vanishing_interaction_recovers_noninteracting_ground() {
        let basis = he_basis(8);
        let mut spec = he();
        spec.charges = [-1e-6, -1.0];
        spec.state = StateSelector::default();
        let cls = classify_noninteracting(&basis, &spec, THETA, THETA_REF).unwrap();
        let ni = cls.ground_energy().unwrap();
        // With one charge nearly zero the spectrum is dominated by rotated
        // free-particle branches; compare against the projected eigenvalue
        // closest to the non-interacting ground rather than by index.
        let m = assemble(&basis, &spec, OperatorKind::DiracCoulomb, THETA).unwrap();
        let subspace = build_projector(&cls, &m).unwrap();
        let phi_conj = subspace.columns.t().mapv(|z| z.conj());
        let hp = phi_conj.dot(&m.h.dot(&subspace.columns));
        let sp = phi_conj.dot(&m.s.dot(&subspace.columns));
        let opts = PencilSolveOptions::complex_symmetric().with_residual_tol(1e-6);
        let sol = solve_pencil(&hp, &sp, &opts).unwrap();
        let nearest = sol
            .pairs
            .iter()
            .map(|p| p.value)
            .min_by(|a, b| (a - ni).norm().total_cmp(&(b - ni).norm()))
            .unwrap();
        assert!(
            (nearest - ni).norm() < 1e-4,
            "DC {nearest} vs NI {ni}"
        );
    }

    #[test]
    fn unprojected_pencil_has_intruders() {
        // Brown-Ravenhall degeneracy: the unrotated, unprojected DC pencil
        // shows eigenvalues inside the bound-state window below the
        // projected ground state. Intruders pair one electron near the
        // negative continuum with one high in the positive continuum, so
        // the basis needs steep exponents (momenta of order c) for the
        // degeneracy to be representable at all.
        let mut basis = he_basis(12);
        for steep in [3e4, 1e5, 3e5, 1e6] {
            basis.push(EcgPrimitive::new([steep, 0.0, 1.0], [0.0; 6]));
            basis.push(EcgPrimitive::new([steep, -0.1, 4.0], [0.0; 6]));
        }
        let spec = he();
        let projected = projected_energy(
            &basis,
            &spec,
            OperatorKind::DiracCoulomb,
            THETA,
            THETA_REF,
            0,
            0.1,
        )
        .unwrap()
        .value
        .re;
        let c = spec.constants.c();
        let floor =
            unprojected_spectrum_floor(&basis, &spec, OperatorKind::DiracCoulomb, (-c * c, projected - 1e-6))
                .unwrap();
        assert!(
            !floor.is_empty(),
            "no intruders found below {projected}"
        );
    }
}
