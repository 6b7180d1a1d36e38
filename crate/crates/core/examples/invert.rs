//! Solving a glued table for one of its factors, with a residual check.

use gwp::bps::CurveClass;
use gwp::cohring::GradedRing;
use gwp::glue::{
    glue_table, invert_step, random_invertible_table, random_table, DegenerationStep, Position, Side, SlotSize,
    SplittingRule, UnknownSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gwp::error::Result<()> {
    let ring = GradedRing::projective_space(1);
    let classes: Vec<CurveClass> = [[0, 0], [1, 0], [0, 1], [1, 1]].iter().map(|c| CurveClass::new(c.to_vec())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sz = SlotSize::constant(2);

    let known = random_invertible_table(&mut rng, Side::Gw, &ring, [sz.clone(), sz.clone()], &classes, -1, None)?;
    let hidden = random_table(&mut rng, Side::Gw, &ring, vec![sz.clone()], &classes, -1, None)?;
    let step = DegenerationStep::new(known.clone(), hidden.clone(), SplittingRule::Additive)?;
    let target = glue_table(&step, None)?;

    let cap = 5;
    let spec = UnknownSpec { position: Position::Right, slots: vec![sz], classes: classes.clone(), order: Some(cap) };
    let out = invert_step(&target, &known, &spec, &SplittingRule::Additive)?;
    let agree = hidden.entries().all(|(b, k, s)| out.table.get(b, k).ok().flatten() == Some(&s.truncate(cap)));
    println!("recovered {} entries, agree with the hidden table to u^{cap}: {agree}", out.table.len());
    println!("residual: {} checked, {} nonzero", out.residual.checked, out.residual.entries.len());
    Ok(())
}
