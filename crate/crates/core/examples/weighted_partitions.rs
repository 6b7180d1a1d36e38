//! Cohomology-weighted partitions over a small ring: enumeration, automorphism
//! factors and the dual expansion used when gluing.

use gwp::cohring::{
    bell, codim, dual_partition, enumerate_weighted_partitions, gluing_factor, GradedRing,
};

fn main() -> gwp::error::Result<()> {
    let ring = GradedRing::projective_space(2);
    println!("basis: {:?}", ring.names());
    for d in 1..=3 {
        let parts = enumerate_weighted_partitions(d, &ring, None);
        println!("degree {d}: {} weighted partitions", parts.len());
        for mu in parts.iter().take(6) {
            let dual = dual_partition(mu, &ring)?;
            println!(
                "  {:<16} z = {:<3} codim = {} dual has {} term(s)",
                mu.format(&ring),
                gluing_factor(mu),
                codim(mu, &ring),
                dual.len()
            );
        }
    }
    println!("Bell numbers: {:?}", (1..=6).map(bell).collect::<Vec<_>>());
    Ok(())
}
