//! Expanding descendent insertions into the relative basis.

use gwp::cohring::GradedRing;
use gwp::corr::{overline, overline_terms, ChernParams, CorrMatrix, DescendentMonomial};

fn main() -> gwp::error::Result<()> {
    let ring = GradedRing::projective_space(1);
    let k = CorrMatrix::stationary(4);
    let c = ChernParams::zero(&ring);
    for src in ["tau0(p)", "tau1(p)*tau0(p)", "tau2(p)*tau0(p)*tau0(p)"] {
        let m = DescendentMonomial::parse(src, &ring)?;
        let terms = overline_terms(&m, &ring)?;
        println!("{src}: {} set-partition terms", terms.len());
        for (b, s) in overline(&m, &k, &c, &ring)? {
            println!("  {} -> {s}", b.format(&ring));
        }
    }
    Ok(())
}
