//! The three projection formulas on a random Euclidean instance.

use nalgebra::{DMatrix, DVector};
use oosembed::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> oosembed::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let points = DMatrix::from_fn(12, 3, |_, _| rng.gen_range(-5.0..5.0));
    let delta2 = DissimilarityMatrix::from_points(&points).squared();
    let eta = DVector::from_fn(3, |_, _| rng.gen_range(-5.0..5.0));
    let a2 = DVector::from_fn(12, |i, _| (points.row(i).transpose() - &eta).norm_squared());

    let (x, tg) = cmds_embed(&delta2, 2)?;
    let cmp = project_all(&x, &tg, &delta2, &a2)?;
    for r in [&cmp.spectral, &cmp.ols, &cmp.landmark] {
        println!(
            "{:>9?}: {:?}  residual {:.3e}",
            r.formula,
            r.y_hat.as_slice(),
            r.residual_norm
        );
    }
    println!("max discrepancy: {:.3e}", cmp.max_discrepancy);
    Ok(())
}
