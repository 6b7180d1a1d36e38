//! Gluing two relative tables and the capped edge as the identity.

use gwp::bps::CurveClass;
use gwp::cohring::GradedRing;
use gwp::glue::{
    capped_edge_table, glue_table, random_table, DegenerationStep, Side, SlotSize, SplittingRule,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gwp::error::Result<()> {
    let ring = GradedRing::projective_space(1);
    let classes: Vec<CurveClass> = (0..=2).map(|d| CurveClass::new(vec![d])).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    for side in [Side::Gw, Side::Pairs] {
        let edge = capped_edge_table(side, &ring, 2)?;
        let t = random_table(&mut rng, side, &ring, vec![SlotSize::linear([1])], &classes, 2, None)?;
        let step = DegenerationStep::new(t.clone(), edge.clone(), SplittingRule::Matching)?;
        let glued = glue_table(&step, None)?;
        println!("{side:?}: {} edge entries, table unchanged by the cap: {}", edge.len(), glued == t);

        let l = random_table(&mut rng, side, &ring, vec![SlotSize::constant(1)], &classes, 0, None)?;
        let r = random_table(&mut rng, side, &ring, vec![SlotSize::constant(1)], &classes, 0, None)?;
        let absolute = glue_table(&DegenerationStep::new(l, r, SplittingRule::Additive)?, None)?;
        for (beta, key, s) in absolute.entries() {
            println!("  {} = {s}", absolute.format_key(beta, key));
        }
    }
    Ok(())
}
