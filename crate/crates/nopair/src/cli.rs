//! Run configuration, pipeline driver, and result persistence.
//!
//! A run is described by a plain key-value text file (`key = value`, `#`
//! comments). Recognized keys:
//!
//! ```text
//! system         = he | he-2s | h2 | heh+ | h3+ | z<N>   (geometry preset)
//! nucleus        = <charge> <x> <y> <z>                  (repeatable, custom)
//! label          = <string>            (custom-system identifier)
//! state_index    = <1-based index>     (default 1)
//! mode           = optimize | nonrel | dc | dcb | pt4 | zscan | full
//! basis_schedule = 16,32,64            (basis sizes, ascending)
//! seed           = <u64>               (mandatory when optimization runs)
//! candidates     = <usize>             (trial insertions per growth step)
//! refine_passes  = <usize>
//! theta          = <CCR angle, rad>    (default 0.15)
//! theta_ref      = <second angle>      (default 0.225)
//! imag_tol       = <|Im E| bound>      (default 1e-6)
//! inverse_alpha  = <alpha^-1 override>
//! output_dir     = <directory>         (default "out")
//! checkpoint     = <basis checkpoint path>  (skips optimization)
//! zscan          = 1..6                (nuclear-charge range, zscan mode)
//! zscan_size     = <basis size per Z>  (default: last schedule entry)
//! ```
//!
//! All file writes are atomic (write-temp-then-rename) and every CSV carries
//! a self-describing header naming the constants used. Identical config and
//! seed reproduce byte-identical outputs modulo the timestamp header line
//! and the wall-clock timing column.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::breit_pauli::epsilon4;
use crate::dirac::{assemble, OperatorKind};
use crate::error::NopairError;
use crate::nonrel::{
    nonrel_energy, optimize_basis, read_basis_checkpoint, write_basis_checkpoint,
    OptimizeSchedule,
};
use crate::projector::{
    build_projector, classify_noninteracting, projected_energy_in, StateClassification,
};
use crate::system::{
    validate_system, ClampedNucleus, PhysicalConstants, SystemSpec,
};

// ---------------------------------------------------------------------------
// Configuration.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Optimize,
    Nonrel,
    Dc,
    Dcb,
    Pt4,
    Zscan,
    Full,
}

impl RunMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::Optimize => "optimize",
            RunMode::Nonrel => "nonrel",
            RunMode::Dc => "dc",
            RunMode::Dcb => "dcb",
            RunMode::Pt4 => "pt4",
            RunMode::Zscan => "zscan",
            RunMode::Full => "full",
        }
    }

    fn wants_dc(&self) -> bool {
        matches!(self, RunMode::Dc | RunMode::Zscan | RunMode::Full)
    }

    fn wants_dcb(&self) -> bool {
        matches!(self, RunMode::Dcb | RunMode::Zscan | RunMode::Full)
    }

    fn wants_pt4(&self) -> bool {
        matches!(
            self,
            RunMode::Pt4 | RunMode::Dc | RunMode::Dcb | RunMode::Zscan | RunMode::Full
        )
    }
}

impl FromStr for RunMode {
    type Err = NopairError;

    fn from_str(s: &str) -> Result<Self, NopairError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "optimize" => Ok(RunMode::Optimize),
            "nonrel" => Ok(RunMode::Nonrel),
            "dc" => Ok(RunMode::Dc),
            "dcb" => Ok(RunMode::Dcb),
            "pt4" => Ok(RunMode::Pt4),
            "zscan" => Ok(RunMode::Zscan),
            "full" => Ok(RunMode::Full),
            other => Err(NopairError::Config(format!("unknown mode '{other}'"))),
        }
    }
}

/// Geometry presets for one-command runs: singlet ground (or, for `he-2s`,
/// first excited) states with nuclei clamped near equilibrium.
pub fn preset(name: &str) -> Option<SystemSpec> {
    let lower = name.trim().to_ascii_lowercase();
    let bond = |label: &str, charges: &[(f64, [f64; 3])]| {
        SystemSpec::two_electron(
            label,
            charges
                .iter()
                .map(|&(charge, position)| ClampedNucleus { charge, position })
                .collect(),
        )
    };
    match lower.as_str() {
        "he" => {
            let mut s = SystemSpec::helium_like(2.0);
            s.label = "He".into();
            Some(s)
        }
        "he-2s" | "he2s" => {
            let mut s = SystemSpec::helium_like(2.0);
            s.label = "He-2S".into();
            s.state.index = 2;
            Some(s)
        }
        "h2" => Some(bond(
            "H2",
            &[(1.0, [0.0, 0.0, -0.7]), (1.0, [0.0, 0.0, 0.7])],
        )),
        "heh+" => Some(bond(
            "HeH+",
            &[(2.0, [0.0, 0.0, 0.0]), (1.0, [0.0, 0.0, 1.46])],
        )),
        "h3+" => {
            let side = 1.65;
            let h = side * 3.0_f64.sqrt() / 2.0;
            Some(bond(
                "H3+",
                &[
                    (1.0, [0.0, 0.0, 0.0]),
                    (1.0, [side, 0.0, 0.0]),
                    (1.0, [side / 2.0, h, 0.0]),
                ],
            ))
        }
        _ => {
            let z: f64 = lower.strip_prefix('z')?.parse().ok()?;
            (z > 0.0).then(|| SystemSpec::helium_like(z))
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: Option<SystemSpec>,
    pub mode: RunMode,
    pub basis_schedule: Vec<usize>,
    pub seed: Option<u64>,
    pub candidates: usize,
    pub refine_passes: usize,
    pub theta: f64,
    pub theta_ref: f64,
    pub imag_tol: f64,
    pub output_dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub zscan: (u32, u32),
    pub zscan_size: Option<usize>,
    /// Also dump the assembled interacting matrices of the largest basis.
    pub dump_matrices: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            spec: None,
            mode: RunMode::Full,
            basis_schedule: vec![],
            seed: None,
            candidates: OptimizeSchedule::default().candidates_per_insertion,
            refine_passes: OptimizeSchedule::default().refine_passes,
            theta: 0.15,
            theta_ref: 0.225,
            imag_tol: 1e-6,
            output_dir: PathBuf::from("out"),
            checkpoint: None,
            zscan: (1, 6),
            zscan_size: None,
            dump_matrices: false,
        }
    }
}

impl RunConfig {
    fn schedule(&self) -> OptimizeSchedule {
        OptimizeSchedule {
            candidates_per_insertion: self.candidates,
            refine_passes: self.refine_passes,
            seed: self.seed.unwrap_or(0),
            ..OptimizeSchedule::default()
        }
    }
}

fn parse_kv<T: FromStr>(key: &str, value: &str) -> Result<T, NopairError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| NopairError::Config(format!("bad value for '{key}': {e}")))
}

/// Parses the key-value configuration text (format documented at module
/// level) and validates mode-specific requirements.
pub fn parse_config(text: &str) -> Result<RunConfig, NopairError> {
    let mut cfg = RunConfig::default();
    let mut mode: Option<RunMode> = None;
    let mut nuclei: Vec<ClampedNucleus> = Vec::new();
    let mut label: Option<String> = None;
    let mut state_index: Option<usize> = None;
    let mut inverse_alpha: Option<f64> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            NopairError::Config(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        match key.as_str() {
            "system" => {
                cfg.spec = Some(preset(value).ok_or_else(|| {
                    NopairError::Config(format!("unknown system preset '{value}'"))
                })?);
            }
            "nucleus" => {
                let parts: Vec<f64> = value
                    .split_whitespace()
                    .map(|t| parse_kv::<f64>("nucleus", t))
                    .collect::<Result<_, _>>()?;
                if parts.len() != 4 {
                    return Err(NopairError::Config(
                        "nucleus needs '<charge> <x> <y> <z>'".into(),
                    ));
                }
                nuclei.push(ClampedNucleus {
                    charge: parts[0],
                    position: [parts[1], parts[2], parts[3]],
                });
            }
            "label" => label = Some(value.to_string()),
            "state_index" => state_index = Some(parse_kv(&key, value)?),
            "mode" => mode = Some(value.parse()?),
            "basis_schedule" => {
                cfg.basis_schedule = value
                    .split(',')
                    .map(|t| parse_kv::<usize>("basis_schedule", t))
                    .collect::<Result<_, _>>()?;
            }
            "seed" => cfg.seed = Some(parse_kv(&key, value)?),
            "candidates" => cfg.candidates = parse_kv(&key, value)?,
            "refine_passes" => cfg.refine_passes = parse_kv(&key, value)?,
            "theta" => cfg.theta = parse_kv(&key, value)?,
            "theta_ref" => cfg.theta_ref = parse_kv(&key, value)?,
            "imag_tol" => cfg.imag_tol = parse_kv(&key, value)?,
            "inverse_alpha" => inverse_alpha = Some(parse_kv(&key, value)?),
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "checkpoint" => cfg.checkpoint = Some(PathBuf::from(value)),
            "zscan" => {
                let (lo, hi) = value
                    .split_once("..")
                    .or_else(|| value.split_once('-'))
                    .ok_or_else(|| {
                        NopairError::Config("zscan needs '<lo>..<hi>'".into())
                    })?;
                cfg.zscan = (parse_kv("zscan", lo)?, parse_kv("zscan", hi)?);
            }
            "zscan_size" => cfg.zscan_size = Some(parse_kv(&key, value)?),
            "dump_matrices" => cfg.dump_matrices = parse_kv(&key, value)?,
            other => {
                return Err(NopairError::Config(format!("unknown key '{other}'")));
            }
        }
    }

    cfg.mode = mode.ok_or_else(|| NopairError::Config("mode is required".into()))?;
    if !nuclei.is_empty() {
        if cfg.spec.is_some() {
            return Err(NopairError::Config(
                "give either a system preset or explicit nuclei, not both".into(),
            ));
        }
        cfg.spec = Some(SystemSpec::two_electron(
            label.as_deref().unwrap_or("custom"),
            nuclei,
        ));
    }
    if let Some(spec) = cfg.spec.as_mut() {
        if let Some(idx) = state_index {
            spec.state.index = idx;
        }
        if let Some(ia) = inverse_alpha {
            spec.constants = PhysicalConstants::with_inverse_alpha(ia)?;
        }
        *spec = validate_system(spec.clone())?;
    }
    validate_config(&cfg)?;
    Ok(cfg)
}

fn validate_config(cfg: &RunConfig) -> Result<(), NopairError> {
    if cfg.mode == RunMode::Optimize && cfg.seed.is_none() {
        return Err(NopairError::Config(
            "optimize mode requires a seed".into(),
        ));
    }
    if cfg.mode != RunMode::Zscan && cfg.spec.is_none() {
        return Err(NopairError::Config(
            "a system (preset or nuclei) is required".into(),
        ));
    }
    if cfg.mode == RunMode::Zscan {
        if cfg.zscan.0 < 1 || cfg.zscan.1 < cfg.zscan.0 {
            return Err(NopairError::Config("zscan range must be 1 <= lo <= hi".into()));
        }
        if cfg.seed.is_none() {
            return Err(NopairError::Config("zscan mode requires a seed".into()));
        }
    }
    if cfg.checkpoint.is_none()
        && cfg.seed.is_none()
        && matches!(
            cfg.mode,
            RunMode::Nonrel | RunMode::Dc | RunMode::Dcb | RunMode::Pt4 | RunMode::Full
        )
    {
        return Err(NopairError::Config(
            "give a checkpoint to load or a seed to optimize a basis".into(),
        ));
    }
    if cfg.checkpoint.is_none() && cfg.basis_schedule.is_empty() && cfg.mode != RunMode::Zscan {
        return Err(NopairError::Config(
            "basis_schedule is required when no checkpoint is given".into(),
        ));
    }
    if !cfg.basis_schedule.windows(2).all(|w| w[0] < w[1]) {
        return Err(NopairError::Config(
            "basis_schedule must be strictly increasing".into(),
        ));
    }
    if !(cfg.theta > 0.0) || cfg.theta_ref == cfg.theta {
        return Err(NopairError::Config(
            "theta must be positive and differ from theta_ref".into(),
        ));
    }
    Ok(())
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, NopairError> {
    parse_config(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Results.

/// One computed line of the output table. Optional fields stay empty when
/// the run mode does not produce them. Deviations are reported in nE_h,
/// everything else in E_h; `delta4_*` is E_var - E_nonrel - eps4.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub system: String,
    pub state: String,
    pub basis_size: usize,
    pub e_nonrel: Option<f64>,
    pub e_dc: Option<f64>,
    pub e_dcb: Option<f64>,
    pub eps4_dc: Option<f64>,
    pub eps4_breit: Option<f64>,
    pub delta4_dc_neh: Option<f64>,
    pub delta4_dcb_neh: Option<f64>,
    pub im_dc: Option<f64>,
    pub im_dcb: Option<f64>,
    pub wall_s: f64,
}

impl ResultRow {
    fn new(system: &str, state: &str, basis_size: usize) -> Self {
        Self {
            system: system.into(),
            state: state.into(),
            basis_size,
            e_nonrel: None,
            e_dc: None,
            e_dcb: None,
            eps4_dc: None,
            eps4_breit: None,
            delta4_dc_neh: None,
            delta4_dcb_neh: None,
            im_dc: None,
            im_dcb: None,
            wall_s: 0.0,
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3e}")).unwrap_or_default()
}

fn csv_header(title: &str, spec: Option<&SystemSpec>, cfg: &RunConfig) -> String {
    let constants = spec
        .map(|s| s.constants)
        .unwrap_or_default();
    let mut h = String::new();
    let _ = writeln!(h, "# {title}");
    let _ = writeln!(
        h,
        "# generated unix {}",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    );
    let _ = writeln!(
        h,
        "# inverse_alpha {:.9}, c {:.9} a.u., theta {}, theta_ref {}, imag_tol {:e}",
        constants.inverse_alpha,
        constants.c(),
        cfg.theta,
        cfg.theta_ref,
        cfg.imag_tol
    );
    let _ = writeln!(
        h,
        "# energies in E_h (9 decimals), deviations delta4 in nE_h, timings in s"
    );
    h
}

/// Serializes result rows as CSV with a self-describing comment header.
pub fn results_csv(rows: &[ResultRow], spec: Option<&SystemSpec>, cfg: &RunConfig) -> String {
    let mut out = csv_header("results", spec, cfg);
    out.push_str(
        "system,state,basis_size,e_nonrel,e_dc,e_dcb,eps4_dc,eps4_breit,\
         delta4_dc_neh,delta4_dcb_neh,im_dc,im_dcb,wall_s\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{:.2}",
            csv_field(&r.system),
            csv_field(&r.state),
            r.basis_size,
            opt(r.e_nonrel, 9),
            opt(r.e_dc, 9),
            opt(r.e_dcb, 9),
            opt(r.eps4_dc, 9),
            opt(r.eps4_breit, 9),
            opt(r.delta4_dc_neh.map(f64::round), 0),
            opt(r.delta4_dcb_neh.map(f64::round), 0),
            opt_sci(r.im_dc),
            opt_sci(r.im_dcb),
            r.wall_s
        );
    }
    out
}

/// Convergence table: energy versus basis size, one row per schedule entry.
pub fn convergence_csv(rows: &[ResultRow], spec: Option<&SystemSpec>, cfg: &RunConfig) -> String {
    let mut out = csv_header("convergence", spec, cfg);
    out.push_str("basis_size,e_nonrel,e_dc,e_dcb\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.basis_size,
            opt(r.e_nonrel, 9),
            opt(r.e_dc, 9),
            opt(r.e_dcb, 9)
        );
    }
    out
}

fn sig3(v: f64) -> String {
    if v == 0.0 {
        return "0.00".into();
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (2 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Two-column (Z, |deviation| in nE_h) plot-data series per method, in a
/// plain-text format: `# method <name>` header, then one `Z value` line per
/// point, blank line between series. Methods without data are omitted and
/// reported in the warning list. Needs at least two Z values.
pub fn emit_plotdata(rows: &[ResultRow]) -> Result<(String, Vec<String>), NopairError> {
    if rows.len() < 2 {
        return Err(NopairError::Invalid(
            "plot data needs at least two Z values".into(),
        ));
    }
    let z_of = |r: &ResultRow| -> Option<f64> {
        r.system
            .trim_start_matches(|c: char| !c.is_ascii_digit() && c != '.')
            .parse()
            .ok()
    };
    let mut out = String::from("# z-scan deviations |E_var - (E_nonrel + eps4)| in nE_h\n");
    let mut warnings = Vec::new();
    for (name, pick) in [
        ("dc", Box::new(|r: &ResultRow| r.delta4_dc_neh) as Box<dyn Fn(&ResultRow) -> Option<f64>>),
        ("dcb", Box::new(|r: &ResultRow| r.delta4_dcb_neh)),
    ] {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| Some((z_of(r)?, pick(r)?.abs())))
            .collect();
        if pts.is_empty() {
            warnings.push(format!("method '{name}' has no data points; omitted"));
            continue;
        }
        let _ = writeln!(out, "# method {name}");
        for (z, dev) in pts {
            let _ = writeln!(out, "{z} {}", sig3(dev));
        }
        out.push('\n');
    }
    Ok((out, warnings))
}

/// Writes `content` atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), NopairError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Pipeline driver.

#[derive(Debug)]
pub struct RunSummary {
    pub rows: Vec<ResultRow>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn state_label(spec: &SystemSpec) -> String {
    format!("singlet-{}", spec.state.index)
}

/// Computes one result row for a fixed basis; Dirac energies include the
/// nuclear repulsion so they are directly comparable to the nonrelativistic
/// total energy. Optionally returns the non-interacting state classification
/// used for the projector.
pub fn compute_row(
    cfg: &RunConfig,
    spec: &SystemSpec,
    basis: &[crate::system::EcgPrimitive],
) -> Result<(ResultRow, Option<StateClassification>), NopairError> {
    let t0 = Instant::now();
    let mut row = ResultRow::new(&spec.label, &state_label(spec), basis.len());
    let repulsion = spec.nuclear_repulsion();
    let index = spec.state.index - 1;

    let sol = nonrel_energy(basis, spec).map_err(|e| e.in_stage("nonrel"))?;
    row.e_nonrel = Some(sol.energy);

    let eps = if cfg.mode.wants_pt4() {
        let eps = epsilon4(basis, &sol.coefficients, spec).map_err(|e| e.in_stage("pt4"))?;
        row.eps4_dc = Some(eps.dc_group());
        row.eps4_breit = Some(eps.breit_group());
        Some(eps)
    } else {
        None
    };

    let mut classification = None;
    if cfg.mode.wants_dc() || cfg.mode.wants_dcb() {
        let cls = classify_noninteracting(basis, spec, cfg.theta, cfg.theta_ref)
            .map_err(|e| e.in_stage("projector"))?;
        let mut kinds = Vec::new();
        if cfg.mode.wants_dc() {
            kinds.push(OperatorKind::DiracCoulomb);
        }
        if cfg.mode.wants_dcb() {
            kinds.push(OperatorKind::DiracCoulombBreit);
        }
        for kind in kinds {
            let stage = match kind {
                OperatorKind::DiracCoulomb => "dc",
                _ => "dcb",
            };
            let m = assemble(basis, spec, kind, cfg.theta).map_err(|e| e.in_stage("assembly"))?;
            let sub = build_projector(&cls, &m).map_err(|e| e.in_stage("projector"))?;
            let res = projected_energy_in(&sub, &m, index, cfg.imag_tol)
                .map_err(|e| e.in_stage(stage))?;
            let e_total = res.value.re + repulsion;
            let delta = eps
                .as_ref()
                .map(|eps| (e_total - sol.energy - eps.total(kind).unwrap_or(0.0)) * 1e9);
            match kind {
                OperatorKind::DiracCoulomb => {
                    row.e_dc = Some(e_total);
                    row.im_dc = Some(res.value.im);
                    row.delta4_dc_neh = delta;
                }
                _ => {
                    row.e_dcb = Some(e_total);
                    row.im_dcb = Some(res.value.im);
                    row.delta4_dcb_neh = delta;
                }
            }
        }
        classification = Some(cls);
    }
    row.wall_s = t0.elapsed().as_secs_f64();
    Ok((row, classification))
}

fn cfg_schedule_checked(cfg: &RunConfig) -> Result<OptimizeSchedule, NopairError> {
    if cfg.seed.is_none() {
        return Err(NopairError::Config("optimization requires a seed".into()));
    }
    Ok(cfg.schedule())
}

/// Bases for each schedule entry: prefixes of a checkpoint (which stores
/// primitives in growth order), or progressive optimization runs.
fn bases_for_schedule(
    cfg: &RunConfig,
    spec: &SystemSpec,
) -> Result<Vec<Vec<crate::system::EcgPrimitive>>, NopairError> {
    if let Some(path) = &cfg.checkpoint {
        let cp = read_basis_checkpoint(path).map_err(|e| e.in_stage("checkpoint"))?;
        let sizes = if cfg.basis_schedule.is_empty() {
            vec![cp.basis.len()]
        } else {
            cfg.basis_schedule.clone()
        };
        sizes
            .into_iter()
            .map(|size| {
                if size > cp.basis.len() {
                    Err(NopairError::Config(format!(
                        "schedule size {size} exceeds checkpoint size {}",
                        cp.basis.len()
                    )))
                } else {
                    Ok(cp.basis[..size].to_vec())
                }
            })
            .collect()
    } else {
        let schedule = cfg.schedule();
        let mut out = Vec::new();
        let mut basis = Vec::new();
        for &size in &cfg.basis_schedule {
            let (grown, _) = optimize_basis(spec, size, &schedule, &basis)
                .map_err(|e| e.in_stage("optimize"))?;
            basis = grown;
            out.push(basis.clone());
        }
        Ok(out)
    }
}

fn run_zscan(cfg: &RunConfig) -> Result<RunSummary, NopairError> {
    let size = cfg
        .zscan_size
        .or_else(|| cfg.basis_schedule.last().copied())
        .unwrap_or(16);
    std::fs::create_dir_all(&cfg.output_dir)?;
    let zs: Vec<u32> = (cfg.zscan.0..=cfg.zscan.1).collect();
    let rows: Result<Vec<ResultRow>, NopairError> = zs
        .par_iter()
        .map(|&z| {
            let mut spec = SystemSpec::helium_like(z as f64);
            if let Some(base) = &cfg.spec {
                spec.constants = base.constants;
            }
            let (basis, _) = optimize_basis(&spec, size, &cfg.schedule(), &[])
                .map_err(|e| e.in_stage("optimize"))?;
            compute_row(cfg, &spec, &basis).map(|(row, _)| row)
        })
        .collect();
    let rows = rows?;
    let (plot, warnings) = emit_plotdata(&rows)?;
    let mut files = Vec::new();
    let csv = results_csv(&rows, cfg.spec.as_ref(), cfg);
    let csv_path = cfg.output_dir.join("zscan.csv");
    write_atomic(&csv_path, &csv)?;
    files.push(csv_path);
    let plot_path = cfg.output_dir.join("zscan_plot.txt");
    write_atomic(&plot_path, &plot)?;
    files.push(plot_path);
    Ok(RunSummary {
        rows,
        files,
        warnings,
    })
}

/// Executes the pipeline requested by `config` and persists the results.
/// Result files are written atomically into `output_dir`; a failing stage
/// surfaces in the error and leaves no partial file behind.
pub fn run(config: &RunConfig) -> Result<RunSummary, NopairError> {
    validate_config(config)?;
    if config.mode == RunMode::Zscan {
        return run_zscan(config);
    }
    let spec = config
        .spec
        .as_ref()
        .ok_or_else(|| NopairError::Config("a system is required".into()))?;
    std::fs::create_dir_all(&config.output_dir)?;
    let mut rows = Vec::new();
    let mut classification = None;
    let mut files = Vec::new();
    let mut bases: Vec<Vec<crate::system::EcgPrimitive>> = Vec::new();

    if config.mode == RunMode::Optimize {
        // Grow progressively and persist every schedule entry as soon as it
        // is ready, so long runs leave usable checkpoints behind.
        let schedule = cfg_schedule_checked(config)?;
        let mut basis = Vec::new();
        for &size in &config.basis_schedule {
            let (grown, record) = optimize_basis(spec, size, &schedule, &basis)
                .map_err(|e| e.in_stage("optimize"))?;
            basis = grown;
            let mut row = ResultRow::new(&spec.label, &state_label(spec), basis.len());
            row.e_nonrel = Some(record.final_energy);
            row.wall_s = record.log.last().map(|l| l.wall_s).unwrap_or(0.0);
            rows.push(row);
            let path = config
                .output_dir
                .join(format!("basis_{:04}.txt", basis.len()));
            write_basis_checkpoint(
                &path,
                spec,
                config.seed.unwrap_or(0),
                record.final_energy,
                &basis,
            )?;
            files.push(path);
            bases.push(basis.clone());
        }
    } else {
        bases = bases_for_schedule(config, spec)?;
        for basis in &bases {
            let (row, cls) = compute_row(config, spec, basis)?;
            rows.push(row);
            if cls.is_some() {
                classification = cls;
            }
        }
    }

    if config.dump_matrices && (config.mode.wants_dc() || config.mode.wants_dcb()) {
        if let Some(basis) = bases.last() {
            let kind = if config.mode.wants_dcb() {
                OperatorKind::DiracCoulombBreit
            } else {
                OperatorKind::DiracCoulomb
            };
            let m = assemble(basis, spec, kind, config.theta)
                .map_err(|e| e.in_stage("assembly"))?;
            let path = config.output_dir.join("matrices.bin");
            crate::dirac::dump_matrices(&path, &m)?;
            files.push(path);
        }
    }
    let results_path = config.output_dir.join("results.csv");
    write_atomic(&results_path, &results_csv(&rows, Some(spec), config))?;
    files.push(results_path);
    if rows.len() > 1 {
        let conv_path = config.output_dir.join("convergence.csv");
        write_atomic(&conv_path, &convergence_csv(&rows, Some(spec), config))?;
        files.push(conv_path);
    }
    if let Some(cls) = &classification {
        let cls_path = config.output_dir.join("classification.csv");
        write_atomic(&cls_path, &cls.report_csv())?;
        files.push(cls_path);
    }
    Ok(RunSummary {
        rows,
        files,
        warnings: vec![],
    })
}

// ---------------------------------------------------------------------------
// Reference constants (higher-order perturbative deviations from the
// literature, consumed for comparison only).

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceConstant {
    pub system: String,
    pub state: String,
    pub quantity: String,
    /// Value in nE_h.
    pub value_neh: f64,
    pub citation: String,
}

/// Parses the plain-text reference-constants file: comment lines start with
/// `#`, data lines are `system | state | quantity | value_nEh | citation`.
pub fn read_reference_constants(path: &Path) -> Result<Vec<ReferenceConstant>, NopairError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('|').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(NopairError::Config(format!(
                "reference constants line {}: expected five '|'-separated fields",
                lineno + 1
            )));
        }
        out.push(ReferenceConstant {
            system: parts[0].to_string(),
            state: parts[1].to_string(),
            quantity: parts[2].to_string(),
            value_neh: parse_kv("value_nEh", parts[3])?,
            citation: parts[4].to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_cover_the_five_tabulated_systems() {
        for name in ["he", "he-2s", "h2", "heh+", "h3+", "z3"] {
            let spec = preset(name).unwrap();
            assert!(validate_system(spec).is_ok(), "{name}");
        }
        assert!(preset("xe").is_none());
        assert!((preset("h2").unwrap().nuclear_repulsion() - 1.0 / 1.4).abs() < 1e-15);
        let h3 = preset("h3+").unwrap();
        assert!((h3.nuclear_repulsion() - 3.0 / 1.65).abs() < 1e-12);
        assert_eq!(preset("he-2s").unwrap().state.index, 2);
    }

    #[test]
    fn config_roundtrip_and_validation() {
        let cfg = parse_config(
            "system = he\nmode = full\nbasis_schedule = 8,12\nseed = 7\ntheta = 0.2\n",
        )
        .unwrap();
        assert_eq!(cfg.mode, RunMode::Full);
        assert_eq!(cfg.basis_schedule, vec![8, 12]);
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.spec.unwrap().label, "He");

        // Missing seed in optimize mode fails before any computation.
        let err = parse_config("system = he\nmode = optimize\nbasis_schedule = 8\n");
        assert!(matches!(err, Err(NopairError::Config(_))), "{err:?}");
        // Unknown keys are rejected.
        assert!(parse_config("system = he\nmode = nonrel\nbasis = 8\nseed = 1\n").is_err());
        // Custom nuclei work.
        let cfg = parse_config(
            "nucleus = 1.0 0 0 0\nnucleus = 1.0 0 0 2.0\nlabel = h2-stretched\n\
             mode = nonrel\nbasis_schedule = 6\nseed = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.spec.unwrap().nuclei.len(), 2);
    }

    #[test]
    fn plotdata_format_and_warnings() {
        let mut r1 = ResultRow::new("z1", "singlet-1", 8);
        let mut r2 = ResultRow::new("z2", "singlet-1", 8);
        r1.delta4_dc_neh = Some(-0.214);
        r2.delta4_dc_neh = Some(-11.4);
        let (text, warnings) = emit_plotdata(&[r1.clone(), r2.clone()]).unwrap();
        assert!(text.contains("# method dc"));
        assert!(text.contains("1 0.214"));
        assert!(text.contains("2 11.4"));
        // dcb series has no data -> omitted with a warning.
        assert_eq!(warnings.len(), 1);
        assert!(!text.contains("# method dcb"));
        assert!(emit_plotdata(&[r1]).is_err());
    }

    #[test]
    fn csv_quoting_and_rounding() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
        let mut row = ResultRow::new("He", "singlet-1", 4);
        row.e_nonrel = Some(-2.9037243770341195);
        row.delta4_dc_neh = Some(-145.6);
        let cfg = RunConfig::default();
        let csv = results_csv(&[row], None, &cfg);
        assert!(csv.contains("-2.903724377"));
        assert!(csv.contains(",-146,"));
        assert!(csv.contains("# inverse_alpha"));
    }

    #[test]
    fn reference_constants_parse() {
        let dir = std::env::temp_dir().join(format!("refconst_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ref.txt");
        std::fs::write(
            &path,
            "# comment\nHe | 1S | delta6_dcb | -659 | someone (2016)\n",
        )
        .unwrap();
        let rows = read_reference_constants(&path).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].value_neh, -659.0);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn full_pipeline_smoke_run_is_reproducible() {
        let dir = std::env::temp_dir().join(format!("nopair_run_{}", std::process::id()));
        let cfg = parse_config(&format!(
            "system = he\nmode = full\nbasis_schedule = 4,8\nseed = 3\n\
             imag_tol = 0.5\ndump_matrices = true\noutput_dir = {}\n",
            dir.display()
        ))
        .unwrap();
        let summary = run(&cfg).unwrap();
        assert_eq!(summary.rows.len(), 2);
        let last = &summary.rows[1];
        // Variational monotonicity across the schedule, and a coarse but
        // correct helium energy ordering: E_DCB above E_DC, both near the
        // nonrelativistic value.
        assert!(last.e_nonrel.unwrap() < summary.rows[0].e_nonrel.unwrap());
        assert!(last.e_nonrel.unwrap() < -2.87);
        assert!(last.e_dcb.unwrap() > last.e_dc.unwrap());
        assert!((last.e_dc.unwrap() - last.e_nonrel.unwrap()).abs() < 1e-2);
        for name in [
            "results.csv",
            "convergence.csv",
            "classification.csv",
            "matrices.bin",
        ] {
            assert!(dir.join(name).exists(), "{name}");
        }
        // Identical config+seed reproduces the CSV modulo the timestamp line
        // and the wall-clock timing column.
        let strip = |p: &Path| -> String {
            std::fs::read_to_string(p)
                .unwrap()
                .lines()
                .filter(|l| !l.starts_with("# generated"))
                .map(|l| l.rsplit_once(',').map(|(head, _)| head).unwrap_or(l).to_string())
                .collect::<Vec<_>>()
                .join("\n")
        };
        let first = strip(&dir.join("results.csv"));
        run(&cfg).unwrap();
        assert_eq!(first, strip(&dir.join("results.csv")));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn sig3_keeps_three_significant_digits() {
        assert_eq!(sig3(0.214), "0.214");
        assert_eq!(sig3(11.4), "11.4");
        assert_eq!(sig3(146.0), "146");
        assert_eq!(sig3(1234.0), "1234");
    }
}
