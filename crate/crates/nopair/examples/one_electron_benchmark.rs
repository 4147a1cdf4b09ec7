//! One-electron benchmark: a kinetically balanced Gaussian basis reproduces
//! the closed-form relativistic ground-state energy of hydrogen-like ions,
//! and the gap between the exact energy and its leading 1/c^2 perturbative
//! expansion is resolved to sub-nanohartree.
//!
//! Run with: cargo run --release --example one_electron_benchmark

use nopair::breit_pauli::one_electron_exact_gap;
use nopair::dirac::one_electron::{kb_ground, optimized_even_tempered, sommerfeld_ground};
use nopair::system::INVERSE_ALPHA_CODATA18;

fn main() {
    let c = INVERSE_ALPHA_CODATA18;
    println!("{:>3} {:>20} {:>20} {:>12} {:>14}", "Z", "E_exact", "E_basis", "err/E_h", "gap/nE_h");
    for z in [1.0, 2.0] {
        let exact = sommerfeld_ground(z, c);
        // Exponents are tuned on the (strictly variational) nonrelativistic
        // energy; the balanced relativistic pencil is then evaluated once.
        let (exponents, _) = optimized_even_tempered(z, c, 50).unwrap();
        let e = kb_ground(z, c, &exponents).unwrap();
        let (_, _, gap_neh) = one_electron_exact_gap(z, c).unwrap();
        println!(
            "{:>3} {:>20.12} {:>20.12} {:>12.2e} {:>14.3}",
            z as u32,
            exact,
            e,
            e - exact,
            gap_neh
        );
    }
    println!();
    println!("The gap column is E_exact - (-Z^2/2 - Z^4/(8 c^2)), i.e. what the");
    println!("leading-order perturbative treatment misses; the basis error stays");
    println!("well below it.");
}
