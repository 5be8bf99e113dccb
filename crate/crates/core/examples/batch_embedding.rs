//! Two new objects embedded jointly, so that their mutual dissimilarity is
//! honoured as well.

use nalgebra::DMatrix;
use oosembed::prelude::*;

fn main() -> oosembed::Result<()> {
    let delta2 = DissimilarityMatrix::from_rows(&[
        vec![0.0, 100.0, 45.0, 45.0],
        vec![100.0, 0.0, 45.0, 45.0],
        vec![45.0, 45.0, 0.0, 64.0],
        vec![45.0, 45.0, 64.0, 0.0],
    ])?;
    let (x, _) = cmds_embed(&delta2, 2)?;

    let a2 = DMatrix::from_row_slice(4, 2, &[386.0, 386.0, 386.0, 386.0, 457.0, 457.0, 457.0, 457.0]);
    let alpha2 = DMatrix::from_row_slice(2, 2, &[0.0, 1536.0, 1536.0, 0.0]);
    let block = OosRawBlock::new(a2, alpha2)?;
    let centered = tau_w(&block.augmented(&delta2)?, delta2.n())?;

    let bp = BatchProblem::from_centered(x, &centered)?;
    let r = solve_batch(&bp, &BatchOptions::default())?;
    println!("Y*:{}", r.y);
    println!(
        "objective {:.6}, gradient norm {:.2e}, {} starts",
        r.objective, r.gradient_norm, r.starts
    );
    Ok(())
}
