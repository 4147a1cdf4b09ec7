//! Grows an explicitly correlated Gaussian basis for the helium ground state
//! by stochastic best-of-K insertion plus cyclic refinement, printing the
//! variational convergence toward the known nonrelativistic energy.
//!
//! Run with: cargo run --release --example optimize_basis

use nopair::cli::preset;
use nopair::nonrel::{optimize_basis, write_basis_checkpoint, OptimizeSchedule};

fn main() {
    let spec = preset("he").unwrap();
    let reference = -2.903_724_377; // essentially exact nonrelativistic value
    let schedule = OptimizeSchedule {
        seed: 7,
        ..OptimizeSchedule::default()
    };
    println!("{:>6} {:>18} {:>12}", "size", "E_nonrel", "error");
    let mut basis = Vec::new();
    for size in [4, 8, 16, 32] {
        let (grown, record) = optimize_basis(&spec, size, &schedule, &basis).unwrap();
        basis = grown;
        println!(
            "{:>6} {:>18.9} {:>12.2e}",
            size,
            record.final_energy,
            record.final_energy - reference
        );
        if size == 32 {
            let path = std::env::temp_dir().join("he_basis_0032.txt");
            write_basis_checkpoint(&path, &spec, schedule.seed, record.final_energy, &basis)
                .unwrap();
            println!("\ncheckpoint written to {}", path.display());
        }
    }
}
