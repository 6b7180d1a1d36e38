//! The eight-step degeneration scheme on synthetic leaves.
//!
//! With a directory argument the scheme and leaves are also written as JSON
//! so the `gwp pipeline` command can replay them:
//!
//! ```text
//! cargo run --example quintic_pipeline -- /tmp/quintic
//! gwp pipeline --spec /tmp/quintic/spec.json --leaves /tmp/quintic/leaves --target T5
//! ```

use std::fs;
use std::path::PathBuf;

use gwp::cohring::GradedRing;
use gwp::glue::{quintic_scheme, reduction_pipeline, synthetic_quintic_leaves, Side};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ring = GradedRing::projective_space(1);
    let spec = quintic_scheme(Side::Pairs, 2, None);
    let leaves = synthetic_quintic_leaves(Side::Pairs, &ring, 2, 6, 1)?;

    let res = reduction_pipeline(&spec, &leaves)?;
    println!("execution order: {}", res.order.join(" -> "));
    for (name, r) in &res.residuals {
        println!("  {name}: {} residual checks, zero = {}", r.checked, r.is_zero());
    }
    let t5 = &res.tables["T5"];
    for (beta, key, s) in t5.entries().take(4) {
        println!("  T5 {} = {s}", t5.format_key(beta, key));
    }

    if let Some(dir) = std::env::args().nth(1).map(PathBuf::from) {
        let leaf_dir = dir.join("leaves");
        fs::create_dir_all(&leaf_dir)?;
        fs::write(dir.join("spec.json"), serde_json::to_string_pretty(&spec)?)?;
        for (i, (name, t)) in leaves.iter().enumerate() {
            let doc = serde_json::json!({"name": name, "table": t});
            fs::write(leaf_dir.join(format!("leaf{i}.json")), serde_json::to_string_pretty(&doc)?)?;
        }
        println!("wrote {}", dir.display());
    }
    Ok(())
}
