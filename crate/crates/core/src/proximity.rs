//! Validated proximity matrices and the centering operations that turn raw
//! similarities or dissimilarities into centered inner products.
//!
//! Everything downstream works with three pieces of centered data:
//! the in-sample Gram matrix `B`, the cross block `b` between in-sample and
//! new objects, and the self block `beta` among the new objects.
//! Dissimilarity-based functions that take a `delta2` argument expect the
//! matrix of *squared* dissimilarities; use [`DissimilarityMatrix::squared`]
//! to obtain it from plain dissimilarities.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Absolute tolerance on `|a_ij - a_ji|` accepted before symmetrizing.
pub const SYMMETRY_TOL: f64 = 1e-12;

fn check_square(raw: &DMatrix<f64>) -> Result<()> {
    if raw.nrows() != raw.ncols() {
        return Err(Error::NonSquare {
            rows: raw.nrows(),
            cols: raw.ncols(),
        });
    }
    Ok(())
}

fn check_finite(raw: &DMatrix<f64>) -> Result<()> {
    for j in 0..raw.ncols() {
        for i in 0..raw.nrows() {
            if !raw[(i, j)].is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn check_symmetric(raw: &DMatrix<f64>) -> Result<()> {
    let n = raw.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (raw[(i, j)] - raw[(j, i)]).abs();
            if gap > SYMMETRY_TOL {
                return Err(Error::AsymmetricBeyondTolerance { row: i, col: j, gap });
            }
        }
    }
    Ok(())
}

fn symmetrize(raw: &DMatrix<f64>) -> DMatrix<f64> {
    let n = raw.nrows();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)]))
}

/// Symmetric, nonnegative matrix with zero diagonal.
///
/// The same type holds plain dissimilarities `δ_ij` and their entrywise
/// squares; which one a function expects is stated in its argument name.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    values: DMatrix<f64>,
}

impl DissimilarityMatrix {
    /// Validates `raw` and stores its symmetrized copy.
    pub fn new(raw: DMatrix<f64>) -> Result<Self> {
        check_square(&raw)?;
        check_finite(&raw)?;
        check_symmetric(&raw)?;
        let mut values = symmetrize(&raw);
        let n = values.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = values[(i, j)];
                if v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        for i in 0..n {
            let v = values[(i, i)];
            if v != 0.0 {
                return Err(Error::NonzeroDiagonal { index: i, value: v });
            }
            values[(i, i)] = 0.0;
        }
        Ok(Self { values })
    }

    /// Builds from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    /// Pairwise Euclidean distances between the rows of `points`.
    pub fn from_points(points: &DMatrix<f64>) -> Self {
        let n = points.nrows();
        let values = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                (points.row(i) - points.row(j)).norm()
            }
        });
        Self {
            values: symmetrize(&values),
        }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    /// Entrywise square.
    pub fn squared(&self) -> DissimilarityMatrix {
        DissimilarityMatrix {
            values: self.values.map(|v| v * v),
        }
    }

    /// Row means `(1/n) Δ e`.
    pub fn row_means(&self) -> DVector<f64> {
        let n = self.n() as f64;
        DVector::from_iterator(self.n(), self.values.row_iter().map(|r| r.sum() / n))
    }

    /// Mean of all `n²` entries.
    pub fn grand_mean(&self) -> f64 {
        let n = self.n();
        if n == 0 {
            return 0.0;
        }
        self.values.sum() / (n * n) as f64
    }
}

/// Validates a raw dissimilarity matrix.
pub fn validate_dissimilarity(raw: DMatrix<f64>) -> Result<DissimilarityMatrix> {
    DissimilarityMatrix::new(raw)
}

/// Symmetric similarity matrix `Γ`.
///
/// The bound `0 <= γ_ij <= γ_ii` is checked. In lenient mode a violation is
/// logged and recorded in [`SimilarityMatrix::within_bounds`] instead of
/// rejected, because non-PSD similarities are still usable after rank-d
/// truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: DMatrix<f64>,
    within_bounds: bool,
}

impl SimilarityMatrix {
    pub fn new(raw: DMatrix<f64>, strict: bool) -> Result<Self> {
        check_square(&raw)?;
        check_finite(&raw)?;
        check_symmetric(&raw)?;
        let values = symmetrize(&raw);
        let n = values.nrows();
        let mut violation = None;
        'outer: for i in 0..n {
            for j in 0..n {
                let g = values[(i, j)];
                if g < 0.0 || g > values[(i, i)] {
                    violation = Some((i, j));
                    break 'outer;
                }
            }
        }
        if let Some((row, col)) = violation {
            if strict {
                return Err(Error::SimilarityBoundViolated { row, col });
            }
            log::warn!("similarity bound 0 <= g_ij <= g_ii violated at ({row}, {col}); continuing");
        }
        Ok(Self {
            values,
            within_bounds: violation.is_none(),
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn within_bounds(&self) -> bool {
        self.within_bounds
    }
}

/// Squared dissimilarities from in-sample objects to `k` new objects
/// (`a2`, n×k) and among the new objects (`alpha2`, k×k).
#[derive(Debug, Clone, PartialEq)]
pub struct OosRawBlock {
    a2: DMatrix<f64>,
    alpha2: DMatrix<f64>,
}

impl OosRawBlock {
    pub fn new(a2: DMatrix<f64>, alpha2: DMatrix<f64>) -> Result<Self> {
        let k = a2.ncols();
        if k == 0 {
            return Err(Error::NoNewObjects);
        }
        if alpha2.nrows() != k || alpha2.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "alpha2 is {}x{}, expected {k}x{k}",
                alpha2.nrows(),
                alpha2.ncols()
            )));
        }
        check_finite(&a2)?;
        for j in 0..a2.ncols() {
            for i in 0..a2.nrows() {
                if a2[(i, j)] < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: a2[(i, j)],
                    });
                }
            }
        }
        let alpha2 = DissimilarityMatrix::new(alpha2)?.into_inner();
        Ok(Self { a2, alpha2 })
    }

    /// Single new object: `alpha2 = [0]`.
    pub fn single(a2_col: DVector<f64>) -> Result<Self> {
        let n = a2_col.len();
        Self::new(
            DMatrix::from_column_slice(n, 1, a2_col.as_slice()),
            DMatrix::zeros(1, 1),
        )
    }

    pub fn k(&self) -> usize {
        self.a2.ncols()
    }

    pub fn a2(&self) -> &DMatrix<f64> {
        &self.a2
    }

    pub fn alpha2(&self) -> &DMatrix<f64> {
        &self.alpha2
    }

    /// Assembles `[[Δ₂, a₂], [a₂ᵗ, α₂]]`.
    pub fn augmented(&self, delta2: &DissimilarityMatrix) -> Result<DMatrix<f64>> {
        let n = delta2.n();
        if self.a2.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "a2 has {} rows, in-sample matrix has {n}",
                self.a2.nrows()
            )));
        }
        let k = self.k();
        let mut a = DMatrix::zeros(n + k, n + k);
        a.view_mut((0, 0), (n, n)).copy_from(delta2.values());
        a.view_mut((0, n), (n, k)).copy_from(&self.a2);
        a.view_mut((n, 0), (k, n)).copy_from(&self.a2.transpose());
        a.view_mut((n, n), (k, k)).copy_from(&self.alpha2);
        Ok(a)
    }
}

/// Centered blocks of the augmented Gram matrix `[[B, b], [bᵗ, beta]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredOosData {
    /// In-sample centered Gram matrix (n×n).
    pub gram: DMatrix<f64>,
    /// Cross block (n×k).
    pub b: DMatrix<f64>,
    /// Self block among new objects (k×k).
    pub beta: DMatrix<f64>,
}

/// `B = -(1/2) P Δ₂ P` with `P = I - eeᵗ/n`.
pub fn double_center(delta2: &DissimilarityMatrix) -> DMatrix<f64> {
    let n = delta2.n();
    let rows = delta2.row_means();
    let grand = delta2.grand_mean();
    let d = delta2.values();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = -0.5 * (d[(i, j)] - rows[i] - rows[j] + grand);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    b
}

/// `B = P Γ P`.
pub fn center_similarity(gamma: &SimilarityMatrix) -> DMatrix<f64> {
    let n = gamma.n();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let g = gamma.values();
    let nf = n as f64;
    let rows: Vec<f64> = g.row_iter().map(|r| r.sum() / nf).collect();
    let grand = g.sum() / (nf * nf);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = g[(i, j)] - rows[i] - rows[j] + grand;
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    b
}

/// Centered similarities of one new object from its squared dissimilarities
/// to the in-sample objects (`new_sq_dissims`) and to itself (`new_self_sq`,
/// normally 0).
pub fn dissim_to_centered_sim(
    delta2: &DissimilarityMatrix,
    new_sq_dissims: &DVector<f64>,
    new_self_sq: f64,
) -> Result<(DVector<f64>, f64)> {
    let n = delta2.n();
    if new_sq_dissims.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "new object has {} dissimilarities, expected {n}",
            new_sq_dissims.len()
        )));
    }
    let rows = delta2.row_means();
    let grand = delta2.grand_mean();
    let mean_new = new_sq_dissims.mean();
    let b = DVector::from_fn(n, |i, _| -0.5 * (new_sq_dissims[i] - rows[i] - mean_new + grand));
    let beta = -0.5 * (new_self_sq - 2.0 * mean_new + grand);
    Ok((b, beta))
}

/// Weighted double centering `-(1/2)(I - ewᵗ) A₂ (I - weᵗ)` with
/// `w = (1,…,1,0,…,0)/n`, which anchors the centering at the first `n`
/// objects so the in-sample block is the ordinary CMDS Gram matrix.
pub fn tau_w(a2: &DMatrix<f64>, n: usize) -> Result<CenteredOosData> {
    check_square(a2)?;
    let m = a2.nrows();
    if n == 0 || n > m {
        return Err(Error::DimensionMismatch(format!(
            "n = {n} out of range for a {m}x{m} matrix"
        )));
    }
    if m == n {
        return Err(Error::NoNewObjects);
    }
    let k = m - n;
    let mut w = DVector::zeros(m);
    w.rows_mut(0, n).fill(1.0 / n as f64);
    let e = DVector::from_element(m, 1.0);
    let identity = DMatrix::<f64>::identity(m, m);
    let left = &identity - &e * w.transpose();
    let right = &identity - &w * e.transpose();
    let mut t = (left * a2 * right) * -0.5;
    // Remove roundoff asymmetry before splitting into blocks.
    t = symmetrize(&t);
    Ok(CenteredOosData {
        gram: t.view((0, 0), (n, n)).into_owned(),
        b: t.view((0, n), (n, k)).into_owned(),
        beta: t.view((n, n), (k, k)).into_owned(),
    })
}

/// `β = mean(a₂) - mean(Δ₂)/2` for a single new object.
pub fn beta_shortcut(delta2: &DissimilarityMatrix, a2_col: &DVector<f64>) -> Result<f64> {
    if a2_col.len() != delta2.n() {
        return Err(Error::DimensionMismatch(format!(
            "a2 has length {}, expected {}",
            a2_col.len(),
            delta2.n()
        )));
    }
    Ok(a2_col.mean() - delta2.grand_mean() / 2.0)
}

/// Centers a similarity function with respect to the in-sample objects for
/// one new object, given `g_new[i] = γ(ξ_i, η)` and `g_self = γ(η, η)`.
pub fn gamma_tilde_oos(gamma: &SimilarityMatrix, g_new: &DVector<f64>, g_self: f64) -> Result<(DVector<f64>, f64)> {
    let n = gamma.n();
    if g_new.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "g_new has length {}, expected {n}",
            g_new.len()
        )));
    }
    let g = gamma.values();
    let nf = n as f64;
    let grand = g.sum() / (nf * nf);
    let mean_new = g_new.mean();
    let b = DVector::from_fn(n, |i, _| g_new[i] - g.row(i).sum() / nf - mean_new + grand);
    let beta = g_self - 2.0 * mean_new + grand;
    Ok((b, beta))
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!(
            "ragged rows: {} vs {ncols} columns",
            bad.len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example2() -> DissimilarityMatrix {
        DissimilarityMatrix::from_rows(&[
            vec![0.0, 100.0, 45.0, 45.0],
            vec![100.0, 0.0, 45.0, 45.0],
            vec![45.0, 45.0, 0.0, 64.0],
            vec![45.0, 45.0, 64.0, 0.0],
        ])
        .unwrap()
    }

    fn example2_a2() -> DVector<f64> {
        DVector::from_vec(vec![386.0, 386.0, 457.0, 457.0])
    }

    #[test]
    fn accepts_example_and_zero() {
        assert_eq!(example2().n(), 4);
        assert!(validate_dissimilarity(DMatrix::zeros(3, 3)).is_ok());
    }

    #[test]
    fn rejects_invalid() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 2.0;
        assert!(matches!(
            validate_dissimilarity(m),
            Err(Error::AsymmetricBeyondTolerance { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            validate_dissimilarity(DMatrix::zeros(2, 3)),
            Err(Error::NonSquare { rows: 2, cols: 3 })
        ));
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(matches!(validate_dissimilarity(neg), Err(Error::NegativeEntry { .. })));
        let diag = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            validate_dissimilarity(diag),
            Err(Error::NonzeroDiagonal { index: 0, .. })
        ));
    }

    #[test]
    fn small_asymmetry_is_symmetrized() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0 + 1e-13, 0.0]);
        let d = validate_dissimilarity(m).unwrap();
        assert_eq!(d.values()[(0, 1)], d.values()[(1, 0)]);
    }

    #[test]
    fn double_center_two_points() {
        let d = DissimilarityMatrix::from_rows(&[vec![0.0, 4.0], vec![4.0, 0.0]]).unwrap();
        let b = double_center(&d);
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert_abs_diff_eq!(b, expected, epsilon = 1e-14);
        assert_eq!(
            double_center(&DissimilarityMatrix::new(DMatrix::zeros(3, 3)).unwrap()),
            DMatrix::zeros(3, 3)
        );
    }

    #[test]
    fn double_center_example2_rows_sum_to_zero() {
        let b = double_center(&example2());
        for r in b.row_iter() {
            assert!(r.sum().abs() < 1e-10);
        }
        assert_abs_diff_eq!(b[(0, 0)], 26.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[(2, 3)], -15.0, epsilon = 1e-12);
    }

    #[test]
    fn center_similarity_cases() {
        let id = SimilarityMatrix::new(DMatrix::identity(3, 3), true).unwrap();
        let expected = DMatrix::identity(3, 3) - DMatrix::from_element(3, 3, 1.0 / 3.0);
        assert_abs_diff_eq!(center_similarity(&id), expected, epsilon = 1e-15);
        let ones = SimilarityMatrix::new(DMatrix::from_element(4, 4, 1.0), true).unwrap();
        assert_abs_diff_eq!(center_similarity(&ones), DMatrix::zeros(4, 4), epsilon = 1e-15);
    }

    #[test]
    fn similarity_bounds_strict_vs_lenient() {
        let raw = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        assert!(matches!(
            SimilarityMatrix::new(raw.clone(), true),
            Err(Error::SimilarityBoundViolated { row: 0, col: 1 })
        ));
        let lenient = SimilarityMatrix::new(raw, false).unwrap();
        assert!(!lenient.within_bounds());
    }

    #[test]
    fn example2_centered_data() {
        // b lies along B's third eigenvector (1,1,-1,-1): Xᵗb = 0 but b != 0.
        let (b, beta) = dissim_to_centered_sim(&example2(), &example2_a2(), 0.0).unwrap();
        assert_abs_diff_eq!(b, DVector::from_vec(vec![20.0, 20.0, -20.0, -20.0]), epsilon = 1e-12);
        assert_abs_diff_eq!(beta, 400.0, epsilon = 1e-12);
        let raw = OosRawBlock::single(example2_a2()).unwrap();
        let t = tau_w(&raw.augmented(&example2()).unwrap(), 4).unwrap();
        assert_abs_diff_eq!(t.b.column(0).into_owned(), b, epsilon = 1e-10);
        assert_abs_diff_eq!(t.beta[(0, 0)], 400.0, epsilon = 1e-10);
        assert_abs_diff_eq!(
            beta_shortcut(&example2(), &example2_a2()).unwrap(),
            400.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn two_point_centered_data() {
        let d = DissimilarityMatrix::from_rows(&[vec![0.0, 4.0], vec![4.0, 0.0]]).unwrap();
        let a2 = DVector::from_vec(vec![82.0, 82.0]);
        let (b, beta) = dissim_to_centered_sim(&d, &a2, 0.0).unwrap();
        assert_abs_diff_eq!(b, DVector::zeros(2), epsilon = 1e-14);
        assert_abs_diff_eq!(beta, 81.0, epsilon = 1e-14);
        assert_abs_diff_eq!(beta_shortcut(&d, &a2).unwrap(), 81.0, epsilon = 1e-14);
        assert_eq!(
            beta_shortcut(
                &DissimilarityMatrix::new(DMatrix::zeros(3, 3)).unwrap(),
                &DVector::zeros(3)
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn duplicated_point_reproduces_gram_column() {
        let d = example2();
        let gram = double_center(&d);
        for j in 0..4 {
            let col = d.values().column(j).into_owned();
            let (b, beta) = dissim_to_centered_sim(&d, &col, 0.0).unwrap();
            assert_abs_diff_eq!(b, gram.column(j).into_owned(), epsilon = 1e-10);
            assert_abs_diff_eq!(beta, gram[(j, j)], epsilon = 1e-10);
            let t = tau_w(&OosRawBlock::single(col).unwrap().augmented(&d).unwrap(), 4).unwrap();
            assert_abs_diff_eq!(t.b.column(0).into_owned(), gram.column(j).into_owned(), epsilon = 1e-10);
        }
    }

    #[test]
    fn gamma_tilde_duplicate_and_constant() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]);
        let gamma = SimilarityMatrix::new(g.clone(), true).unwrap();
        let centered = center_similarity(&gamma);
        let (b, beta) = gamma_tilde_oos(&gamma, &g.column(1).into_owned(), g[(1, 1)]).unwrap();
        assert_abs_diff_eq!(b, centered.column(1).into_owned(), epsilon = 1e-12);
        assert_abs_diff_eq!(beta, centered[(1, 1)], epsilon = 1e-12);

        let ones = SimilarityMatrix::new(DMatrix::from_element(3, 3, 1.0), true).unwrap();
        let (b, beta) = gamma_tilde_oos(&ones, &DVector::from_element(3, 1.0), 1.0).unwrap();
        assert_abs_diff_eq!(b, DVector::zeros(3), epsilon = 1e-15);
        assert_abs_diff_eq!(beta, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let d = example2();
        assert!(matches!(
            dissim_to_centered_sim(&d, &DVector::zeros(3), 0.0),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            beta_shortcut(&d, &DVector::zeros(5)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(tau_w(&DMatrix::zeros(4, 4), 4), Err(Error::NoNewObjects)));
        assert!(matches!(
            OosRawBlock::new(DMatrix::zeros(4, 0), DMatrix::zeros(0, 0)),
            Err(Error::NoNewObjects)
        ));
    }
}
