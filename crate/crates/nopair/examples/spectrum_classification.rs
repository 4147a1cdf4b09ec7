//! Complex coordinate rotation exposes the structure of the non-interacting
//! two-electron Dirac spectrum: bound states stay put while continuum
//! branches rotate into the complex plane, letting each eigenstate be
//! classified as positive-energy, Brown-Ravenhall (one positive and one
//! negative factor), or negative-energy. The positive-energy subspace then
//! defines the projector that removes the intruder states.
//!
//! Run with: cargo run --release --example spectrum_classification

use nopair::cli::preset;
use nopair::dirac::{assemble, OperatorKind};
use nopair::nonrel::{optimize_basis, OptimizeSchedule};
use nopair::projector::{
    build_projector, classify_noninteracting, projected_energy_in, unprojected_spectrum_floor,
    StateLabel,
};

fn main() {
    let spec = preset("he").unwrap();
    let schedule = OptimizeSchedule {
        seed: 5,
        ..OptimizeSchedule::default()
    };
    let (mut basis, _) = optimize_basis(&spec, 10, &schedule, &[]).unwrap();
    // A few steep primitives provide the high-momentum content that makes
    // Brown-Ravenhall degeneracies visible in a small basis.
    for steep in [3e4, 1e5, 3e5] {
        basis.push(nopair::system::EcgPrimitive::diagonal(steep, 1.0));
    }

    let (theta, theta_ref) = (0.15, 0.225);
    let cls = classify_noninteracting(&basis, &spec, theta, theta_ref).unwrap();
    let mut counts = std::collections::BTreeMap::new();
    for s in &cls.states {
        *counts.entry(format!("{:?}", s.label)).or_insert(0usize) += 1;
    }
    println!("non-interacting classification at theta = {theta}:");
    for (label, n) in &counts {
        println!("  {label:<22} {n}");
    }

    // Without projection the interacting pencil is contaminated near the
    // physical ground state by Brown-Ravenhall intruders.
    let floor =
        unprojected_spectrum_floor(&basis, &spec, OperatorKind::DiracCoulomb, (-40.0, -2.0))
            .unwrap();
    println!("\nunprojected DC eigenvalues in (-40, -2) E_h: {}", floor.len());

    let m = assemble(&basis, &spec, OperatorKind::DiracCoulomb, theta).unwrap();
    let sub = build_projector(&cls, &m).unwrap();
    println!(
        "projector rank {} of {} (idempotence defect {:.1e})",
        sub.count,
        m.h.nrows(),
        sub.idempotence_defect
    );
    let ground = projected_energy_in(&sub, &m, 0, 0.1).unwrap();
    println!(
        "projected DC ground energy: {:.6} + {:.1e} i E_h",
        ground.value.re, ground.value.im
    );

    let positives = cls
        .states
        .iter()
        .filter(|s| s.label == StateLabel::PhysicalPositive)
        .count();
    println!(
        "\n{} positive-energy reference states span the no-pair model space;",
        positives
    );
    println!("everything else is removed before the interacting solve.");
}
