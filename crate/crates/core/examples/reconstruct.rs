//! Recovering a rational function from finitely many Taylor coefficients.

use gwp::ratfun::{reconstruct, reconstruct_auto, RationalFunction, Reconstruction};
use gwp::series::{HalfSeries, Var};

fn main() -> gwp::error::Result<()> {
    let target = RationalFunction::genus_zero_primitive();
    let x = target.expand(12)?;
    println!("input: {x}");
    match reconstruct(&x, 1, 2)? {
        Reconstruction::Found(r) => println!("degrees (1,2): {r}"),
        Reconstruction::NoSolution => println!("degrees (1,2): none"),
    }
    let (rec, bounds) = reconstruct_auto(&x)?;
    println!("automatic search settled on {bounds:?}: {rec:?}");

    // a truncated exponential has no low-degree rational form
    let mut fact = 1i64;
    let exp = HalfSeries::new(
        Var::Q,
        (0..12).map(|n| {
            if n > 0 {
                fact *= n;
            }
            (n, gwp::numeric::GaussianRational::from_ratio(1, fact))
        }),
        Some(12),
    );
    println!("exp(q) with degrees (4,4): {:?}", reconstruct(&exp, 4, 4)?);
    Ok(())
}
