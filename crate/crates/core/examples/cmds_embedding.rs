//! Classical MDS of a small dissimilarity matrix.

use oosembed::prelude::*;

fn main() -> oosembed::Result<()> {
    let delta2 = DissimilarityMatrix::from_rows(&[
        vec![0.0, 100.0, 45.0, 45.0],
        vec![100.0, 0.0, 45.0, 45.0],
        vec![45.0, 45.0, 0.0, 64.0],
        vec![45.0, 45.0, 64.0, 0.0],
    ])?;

    let b = double_center(&delta2);
    let spectrum = symmetric_eigen(&b)?;
    println!("eigenvalues of B: {:?}", spectrum.eigenvalues.as_slice());

    let (x, gram) = cmds_embed(&delta2, 2)?;
    println!("configuration:{}", x.coords());
    println!("dropped spectrum mass: {}", gram.dropped_mass());
    Ok(())
}
