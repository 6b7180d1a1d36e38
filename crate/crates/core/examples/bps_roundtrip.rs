//! Gromov-Witten free energies from BPS counts and back.
//!
//! Builds a small table along the ray through (1,0), pushes it forward to
//! `u`-series, then recovers the counts from the series alone.

use std::collections::BTreeMap;

use gwp::bps::{gv_forward, gv_forward_q, gv_invert, integrality_report, BpsTable, ClassBox, CurveClass};

fn main() -> gwp::error::Result<()> {
    let ray: Vec<CurveClass> = (1..=3).map(|d| CurveClass::new(vec![d, 0])).collect();
    let mut n = BpsTable::new(2, 1, ClassBox(vec![3, 0]));
    n.set_int(0, ray[0].clone(), 3)?;
    n.set_int(0, ray[1].clone(), -6)?;
    n.set_int(1, ray[1].clone(), 1)?;
    n.set_int(0, ray[2].clone(), 27)?;

    let mut f = BTreeMap::new();
    for beta in &ray {
        let s = gv_forward(&n, beta, 6)?;
        println!("F_{beta:?} = {s}");
        f.insert(beta.clone(), s);
    }
    println!("closed form at {:?}: {}", ray[0], gv_forward_q(&n, &ray[0])?);

    let back = gv_invert(&f, &ray, 1)?;
    assert_eq!(back, n);
    println!("recovered {} nonzero counts", back.len());
    let report = integrality_report(&back);
    println!("integrality violations: {}", report.violations.len());
    Ok(())
}
