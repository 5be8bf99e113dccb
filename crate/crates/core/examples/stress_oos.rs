//! Out-of-sample placement under raw stress instead of the CMDS criterion.

use nalgebra::{DMatrix, DVector};
use oosembed::prelude::*;

fn main() -> oosembed::Result<()> {
    let x = Configuration::new(DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 4.0, 0.0, 0.0, 3.0, 4.0, 3.0]));
    let deltas = DVector::from_vec(vec![2.5, 2.5, 2.5, 2.5]);
    let r = stress_oos(&x, &deltas, &StressOptions::default())?;
    println!("y = {:?}, stress = {:.3e}", r.y_star.as_slice(), r.objective);
    println!(
        "iterations {}, monotone {}",
        r.diagnostics.iterations, r.diagnostics.monotone
    );
    Ok(())
}
