//! Breakdown of the leading (1/c^2) relativistic corrections over the
//! nonrelativistic singlet wavefunction: mass-velocity, Darwin, spin-spin
//! contact, and orbit-orbit terms, for the helium atom and the hydrogen
//! molecule.
//!
//! Run with: cargo run --release --example relativistic_corrections

use nopair::breit_pauli::epsilon4;
use nopair::cli::preset;
use nopair::nonrel::{nonrel_energy, optimize_basis, OptimizeSchedule};

fn main() {
    for name in ["he", "h2"] {
        let spec = preset(name).unwrap();
        let schedule = OptimizeSchedule {
            seed: 3,
            ..OptimizeSchedule::default()
        };
        let (basis, _) = optimize_basis(&spec, 20, &schedule, &[]).unwrap();
        let sol = nonrel_energy(&basis, &spec).unwrap();
        let eps = epsilon4(&basis, &sol.coefficients, &spec).unwrap();
        println!("{} ({} primitives), E_nonrel = {:.6} E_h", spec.label, basis.len(), sol.energy);
        println!("  mass-velocity       {:>14.9} E_h", eps.mass_velocity);
        println!("  one-electron Darwin {:>14.9} E_h", eps.one_electron_darwin);
        println!("  two-electron Darwin {:>14.9} E_h", eps.two_electron_darwin);
        println!("  spin-spin contact   {:>14.9} E_h", eps.spin_spin_contact);
        println!("  orbit-orbit         {:>14.9} E_h", eps.orbit_orbit);
        println!("  Coulomb-type total  {:>14.9} E_h", eps.dc_group());
        println!("  Breit-type total    {:>14.9} E_h", eps.breit_group());
        println!();
    }
    println!("The Coulomb-type group shifts the energy down; the Breit group");
    println!("(contact + orbit-orbit) pushes it back up by a smaller amount.");
}
