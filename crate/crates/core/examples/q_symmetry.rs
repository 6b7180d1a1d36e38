//! Rational functions in `q`, the substitution `q = -e^{iu}` and the
//! `q -> 1/q` symmetry check.

use gwp::bps::cover_term_q;
use gwp::ratfun::{check_q_symmetry, RationalFunction};
use gwp::series::Var;

fn main() -> gwp::error::Result<()> {
    let prim = RationalFunction::genus_zero_primitive();
    println!("Z = {prim}");
    println!("symmetric under q -> 1/q: {}", check_q_symmetry(&prim));
    println!("u-expansion: {}", prim.to_u(8)?);

    let q = RationalFunction::monomial(Var::Q, 1.into(), 1);
    println!("q alone symmetric: {}", check_q_symmetry(&q));

    for g in 0..=2 {
        let c = cover_term_q(g, 2)?;
        println!("genus {g}, double cover: {c} (symmetric: {})", check_q_symmetry(&c));
    }
    Ok(())
}
