//! Nonrelativistic clamped-nuclei reference: energies in the ECG basis and
//! stochastic optimization of the nonlinear basis parameters.
//!
//! The optimized bases produced here parameterize everything downstream: the
//! same primitives are dressed with kinetic balance for the relativistic
//! operators, and the nonrelativistic wavefunction feeds the perturbative
//! fourth-order corrections.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::{BufRead, Write};
use std::path::Path;
use std::time::Instant;

use crate::eigen::solve_real_pencil;
use crate::error::NopairError;
use crate::integrals::PairData;
use crate::system::{EcgPrimitive, SpinState, SystemSpec};

pub const DEFAULT_CUTOFF: f64 = 1e-13;

/// One matrix element pair (H_ij, S_ij) between raw primitives, including
/// the constant nuclear repulsion on the diagonal of H.
fn raw_element(
    gi: &EcgPrimitive,
    gj: &EcgPrimitive,
    spec: &SystemSpec,
) -> Result<(f64, f64), NopairError> {
    let pd = PairData::new(gi, gj)?;
    let mut h = pd.kinetic;
    for p in 0..2 {
        let d = if p == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
        for nuc in &spec.nuclei {
            h += spec.charges[p] * nuc.charge * pd.coulomb(d, nuc.position);
        }
    }
    h += spec.charges[0] * spec.charges[1] * pd.coulomb([1.0, -1.0], [0.0; 3]);
    h += spec.nuclear_repulsion() * pd.overlap;
    Ok((h, pd.overlap))
}

/// Element between exchange-symmetrized functions g_i + P g_i for identical
/// particles; the ket-side permutation alone suffices because H commutes with
/// the exchange (equal masses, equal charges). The overall factor of two is
/// dropped as it cancels in the generalized problem.
fn symmetrized_element(
    gi: &EcgPrimitive,
    gj: &EcgPrimitive,
    spec: &SystemSpec,
) -> Result<(f64, f64), NopairError> {
    let (hd, sd) = raw_element(gi, gj, spec)?;
    let (hx, sx) = raw_element(gi, &gj.permuted(), spec)?;
    Ok((hd + hx, sd + sx))
}

fn element(
    gi: &EcgPrimitive,
    gj: &EcgPrimitive,
    spec: &SystemSpec,
) -> Result<(f64, f64), NopairError> {
    match spec.state.spin {
        SpinState::Singlet => symmetrized_element(gi, gj, spec),
        SpinState::Triplet => Err(NopairError::Invalid(
            "triplet states are out of scope for the nonrelativistic path".into(),
        )),
    }
}

/// Builds the real symmetric (H, S) pencil over the basis.
pub fn assemble_nonrel(
    basis: &[EcgPrimitive],
    spec: &SystemSpec,
) -> Result<(Array2<f64>, Array2<f64>), NopairError> {
    if basis.is_empty() {
        return Err(NopairError::Invalid("empty basis".into()));
    }
    if spec.masses != [1.0, 1.0] {
        return Err(NopairError::Invalid(
            "nonrelativistic path supports unit masses only".into(),
        ));
    }
    let n = basis.len();
    let elems: Result<Vec<(f64, f64)>, NopairError> = (0..n * n)
        .into_par_iter()
        .filter(|k| k % n <= k / n)
        .map(|k| element(&basis[k / n], &basis[k % n], spec))
        .collect();
    let elems = elems?;
    let mut h = Array2::zeros((n, n));
    let mut s = Array2::zeros((n, n));
    let mut it = elems.into_iter();
    for i in 0..n {
        for j in 0..=i {
            let (hv, sv) = it.next().unwrap();
            h[(i, j)] = hv;
            h[(j, i)] = hv;
            s[(i, j)] = sv;
            s[(j, i)] = sv;
        }
    }
    Ok((h, s))
}

fn refresh_row(
    h: &mut Array2<f64>,
    s: &mut Array2<f64>,
    basis: &[EcgPrimitive],
    spec: &SystemSpec,
    i: usize,
) -> Result<(), NopairError> {
    let row: Result<Vec<(f64, f64)>, NopairError> = basis
        .par_iter()
        .map(|gj| element(&basis[i], gj, spec))
        .collect();
    for (j, (hv, sv)) in row?.into_iter().enumerate() {
        h[(i, j)] = hv;
        h[(j, i)] = hv;
        s[(i, j)] = sv;
        s[(j, i)] = sv;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct NonrelSolution {
    pub energy: f64,
    /// Linear coefficients of the selector-indexed state over the basis.
    pub coefficients: Vec<f64>,
    /// All pencil eigenvalues, ascending.
    pub spectrum: Vec<f64>,
}

fn solve_selected(
    h: &Array2<f64>,
    s: &Array2<f64>,
    spec: &SystemSpec,
    cutoff: f64,
) -> Result<NonrelSolution, NopairError> {
    let (vals, vecs) = solve_real_pencil(h, s, cutoff)?;
    let idx = spec.state.index - 1;
    if idx >= vals.len() {
        return Err(NopairError::Selector(format!(
            "state index {} exceeds pencil rank {}",
            spec.state.index,
            vals.len()
        )));
    }
    Ok(NonrelSolution {
        energy: vals[idx],
        coefficients: vecs.column(idx).to_vec(),
        spectrum: vals,
    })
}

/// Selector-indexed eigenvalue of the nonrelativistic pencil; a variational
/// upper bound to the corresponding exact level.
pub fn nonrel_energy(
    basis: &[EcgPrimitive],
    spec: &SystemSpec,
) -> Result<NonrelSolution, NopairError> {
    let (h, s) = assemble_nonrel(basis, spec)?;
    solve_selected(&h, &s, spec, DEFAULT_CUTOFF)
}

// ---------------------------------------------------------------------------
// Parameterization: A = L L^T with log-diagonal so that any parameter vector
// maps to a symmetric positive-definite matrix.

fn to_params(g: &EcgPrimitive, atomic: bool) -> Vec<f64> {
    let l11 = g.a[0].sqrt();
    let l21 = g.a[1] / l11;
    let l22 = (g.a[2] - l21 * l21).max(1e-300).sqrt();
    let mut p = vec![l11.ln(), l21, l22.ln()];
    if !atomic {
        p.extend_from_slice(&g.s);
    }
    p
}

fn from_params(p: &[f64], atomic: bool) -> EcgPrimitive {
    let l11 = p[0].exp();
    let l21 = p[1];
    let l22 = p[2].exp();
    let a = [l11 * l11, l11 * l21, l21 * l21 + l22 * l22];
    let mut s = [0.0; 6];
    if !atomic {
        s.copy_from_slice(&p[3..9]);
    }
    EcgPrimitive::new(a, s)
}

/// Lognormal exponent statistics of the current basis, used to center the
/// candidate draws; broad defaults before any statistics exist.
fn draw_stats(basis: &[EcgPrimitive]) -> (f64, f64) {
    if basis.len() < 4 {
        return (0.3, 1.8);
    }
    let logs: Vec<f64> = basis
        .iter()
        .flat_map(|g| [0.5 * g.a[0].ln(), 0.5 * g.a[2].ln()])
        .collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let var = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / logs.len() as f64;
    (mean, (var.sqrt() + 0.4).min(2.5))
}

fn draw_candidate(rng: &mut ChaCha8Rng, spec: &SystemSpec, stats: (f64, f64)) -> EcgPrimitive {
    let (mu, sigma) = stats;
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        // Box-Muller from two uniform draws.
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let p0 = mu + sigma * normal(rng);
    let p2 = mu + sigma * normal(rng);
    let l21 = 0.6 * (0.5 * (p0 + p2)).exp() * normal(rng);
    let mut p = vec![p0, l21, p2];
    if !spec.is_atomic() {
        for _ in 0..2 {
            let nuc = &spec.nuclei[rng.gen_range(0..spec.nuclei.len())];
            for ax in 0..3 {
                p.push(nuc.position[ax] + 0.7 * normal(rng));
            }
        }
    }
    from_params(&p, spec.is_atomic())
}

#[derive(Debug, Clone)]
pub struct OptimizeSchedule {
    /// Trial insertions drawn per growth step; the best is kept.
    pub candidates_per_insertion: usize,
    /// Cyclic coordinate-refinement passes after growth completes.
    pub refine_passes: usize,
    pub seed: u64,
    pub cutoff: f64,
}

impl Default for OptimizeSchedule {
    fn default() -> Self {
        Self {
            candidates_per_insertion: 50,
            refine_passes: 2,
            seed: 1,
            cutoff: DEFAULT_CUTOFF,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationLog {
    pub basis_size: usize,
    pub energy: f64,
    pub param_change: f64,
    pub wall_s: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationRecord {
    pub log: Vec<IterationLog>,
    pub stagnated: bool,
    pub final_energy: f64,
}

struct Workspace {
    h: Array2<f64>,
    s: Array2<f64>,
}

impl Workspace {
    fn grow(&self, basis: &[EcgPrimitive], spec: &SystemSpec) -> Result<Self, NopairError> {
        let n = basis.len();
        let mut h = Array2::zeros((n, n));
        let mut s = Array2::zeros((n, n));
        h.slice_mut(ndarray::s![..n - 1, ..n - 1])
            .assign(&self.h);
        s.slice_mut(ndarray::s![..n - 1, ..n - 1])
            .assign(&self.s);
        let mut out = Self { h, s };
        refresh_row(&mut out.h, &mut out.s, basis, spec, n - 1)?;
        Ok(out)
    }
}

fn try_energy(
    ws: &Workspace,
    spec: &SystemSpec,
    cutoff: f64,
) -> Option<f64> {
    solve_selected(&ws.h, &ws.s, spec, cutoff).ok().map(|r| r.energy)
}

/// Grows `initial` to `target_size` by best-of-K stochastic insertion, then
/// refines every nonlinear parameter by cyclic derivative-free line search.
/// Deterministic for a fixed seed. If no candidate or refinement step can be
/// accepted, the best basis found so far is returned with the record flagged.
pub fn optimize_basis(
    spec: &SystemSpec,
    target_size: usize,
    schedule: &OptimizeSchedule,
    initial: &[EcgPrimitive],
) -> Result<(Vec<EcgPrimitive>, OptimizationRecord), NopairError> {
    if target_size == 0 {
        return Err(NopairError::Invalid("target size must be positive".into()));
    }
    if initial.len() > target_size {
        return Err(NopairError::Invalid(
            "initial basis larger than target".into(),
        ));
    }
    let atomic = spec.is_atomic();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut basis = initial.to_vec();
    let mut log = Vec::new();
    let mut stagnated = false;

    let mut ws = if basis.is_empty() {
        Workspace {
            h: Array2::zeros((0, 0)),
            s: Array2::zeros((0, 0)),
        }
    } else {
        let (h, s) = assemble_nonrel(&basis, spec)?;
        Workspace { h, s }
    };

    // Growth phase.
    while basis.len() < target_size {
        let stats = draw_stats(&basis);
        let candidates: Vec<EcgPrimitive> = (0..schedule.candidates_per_insertion)
            .map(|_| draw_candidate(&mut rng, spec, stats))
            .collect();
        let scored: Vec<(usize, f64)> = candidates
            .par_iter()
            .enumerate()
            .filter_map(|(k, cand)| {
                let mut trial = basis.clone();
                trial.push(cand.clone());
                let tws = ws.grow(&trial, spec).ok()?;
                let (vals, _) = solve_real_pencil(&tws.h, &tws.s, schedule.cutoff).ok()?;
                let idx = (spec.state.index - 1).min(vals.len() - 1);
                Some((k, vals[idx]))
            })
            .collect();
        let best = scored
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .cloned();
        match best {
            Some((k, e)) => {
                basis.push(candidates[k].clone());
                ws = ws.grow(&basis, spec)?;
                log.push(IterationLog {
                    basis_size: basis.len(),
                    energy: e,
                    param_change: f64::INFINITY,
                    wall_s: t0.elapsed().as_secs_f64(),
                });
            }
            None => {
                stagnated = true;
                break;
            }
        }
    }

    // Refinement phase: coordinate line search per primitive parameter.
    let mut energy = try_energy(&ws, spec, schedule.cutoff)
        .ok_or_else(|| NopairError::Conditioning("basis unsolvable after growth".into()))?;
    for _pass in 0..schedule.refine_passes {
        let e_before = energy;
        let mut change = 0.0;
        for i in 0..basis.len() {
            let mut params = to_params(&basis[i], atomic);
            for k in 0..params.len() {
                let scale: f64 = if !atomic && k >= 3 { 0.25 } else { 0.2 };
                let mut step = scale;
                let mut dir = 1.0;
                while step > 1e-4 {
                    let mut trial = params.clone();
                    trial[k] += dir * step;
                    let cand = from_params(&trial, atomic);
                    if !cand.is_positive_definite() {
                        step *= 0.4;
                        continue;
                    }
                    let saved = basis[i].clone();
                    basis[i] = cand;
                    let ok = refresh_row(&mut ws.h, &mut ws.s, &basis, spec, i).is_ok();
                    let e_new = if ok {
                        try_energy(&ws, spec, schedule.cutoff)
                    } else {
                        None
                    };
                    match e_new {
                        Some(e) if e < energy - 1e-14 => {
                            energy = e;
                            change += (trial[k] - params[k]).abs();
                            params = trial;
                            step *= 1.7;
                        }
                        _ => {
                            basis[i] = saved;
                            refresh_row(&mut ws.h, &mut ws.s, &basis, spec, i)?;
                            if dir > 0.0 {
                                dir = -1.0;
                            } else {
                                dir = 1.0;
                                step *= 0.4;
                            }
                        }
                    }
                }
            }
        }
        log.push(IterationLog {
            basis_size: basis.len(),
            energy,
            param_change: change,
            wall_s: t0.elapsed().as_secs_f64(),
        });
        if e_before - energy < 1e-12 {
            stagnated = stagnated || change == 0.0;
            break;
        }
    }

    Ok((
        basis,
        OptimizationRecord {
            log,
            stagnated,
            final_energy: energy,
        },
    ))
}

// ---------------------------------------------------------------------------
// Checkpoint format: plain text, one primitive per record, 17 significant
// digits, header naming the geometry and the optimization seed.

pub fn write_basis_checkpoint(
    path: &Path,
    spec: &SystemSpec,
    seed: u64,
    energy: f64,
    basis: &[EcgPrimitive],
) -> Result<(), NopairError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        writeln!(f, "# ecg basis checkpoint v1")?;
        writeln!(f, "# system {}", spec.label)?;
        let nuclei: Vec<String> = spec
            .nuclei
            .iter()
            .map(|n| {
                format!(
                    "{} {:.16e} {:.16e} {:.16e}",
                    n.charge, n.position[0], n.position[1], n.position[2]
                )
            })
            .collect();
        writeln!(f, "# nuclei {}", nuclei.join("; "))?;
        writeln!(f, "# seed {seed}")?;
        writeln!(f, "# size {}", basis.len())?;
        writeln!(f, "# energy {energy:.16e}")?;
        writeln!(f, "# columns a11 a12 a22 s1x s1y s1z s2x s2y s2z")?;
        for g in basis {
            let row: Vec<String> = g
                .a
                .iter()
                .chain(g.s.iter())
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BasisCheckpoint {
    pub system_label: String,
    pub seed: u64,
    pub energy: f64,
    pub basis: Vec<EcgPrimitive>,
}

pub fn read_basis_checkpoint(path: &Path) -> Result<BasisCheckpoint, NopairError> {
    let f = std::fs::File::open(path)?;
    let mut label = String::new();
    let mut seed = 0;
    let mut energy = f64::NAN;
    let mut basis = Vec::new();
    for line in std::io::BufReader::new(f).lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("system ") {
                label = v.trim().to_string();
            } else if let Some(v) = rest.strip_prefix("seed ") {
                seed = v
                    .trim()
                    .parse()
                    .map_err(|e| NopairError::Config(format!("bad seed: {e}")))?;
            } else if let Some(v) = rest.strip_prefix("energy ") {
                energy = v
                    .trim()
                    .parse()
                    .map_err(|e| NopairError::Config(format!("bad energy: {e}")))?;
            }
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|e| NopairError::Config(format!("bad basis row: {e}")))?;
        if vals.len() != 9 {
            return Err(NopairError::Config(format!(
                "basis row has {} fields, expected 9",
                vals.len()
            )));
        }
        let g = EcgPrimitive::new(
            [vals[0], vals[1], vals[2]],
            [vals[3], vals[4], vals[5], vals[6], vals[7], vals[8]],
        );
        if !g.is_positive_definite() {
            return Err(NopairError::Config(
                "checkpoint primitive not positive definite".into(),
            ));
        }
        basis.push(g);
    }
    if basis.is_empty() {
        return Err(NopairError::Config("checkpoint holds no primitives".into()));
    }
    Ok(BasisCheckpoint {
        system_label: label,
        seed,
        energy,
        basis,
    })
}
