//! Symmetric eigendecomposition, rank-d PSD truncation and the classical
//! MDS configuration `X = U_d Λ_d^{1/2}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::proximity::{double_center, DissimilarityMatrix};

/// Jacobi stops once the off-diagonal Frobenius norm drops below this
/// fraction of `‖B‖_F`.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Eigenvalues at or below `POSITIVE_TOL * max|λ|` do not count as positive.
pub const POSITIVE_TOL: f64 = 1e-10;
/// Relative gap below which `λ_d` and `λ_{d+1}` are treated as tied.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Relative tolerance used to detect ties when fixing eigenvector signs.
const SIGN_TIE_TOL: f64 = 1e-9;

/// Eigenvalues sorted descending with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub sweeps: usize,
}

impl EigenSystem {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        v * DMatrix::from_diagonal(&self.eigenvalues) * v.transpose()
    }
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Flips `v` so that its entry of largest magnitude is positive; ties go to
/// the lowest row index.
pub(crate) fn fix_sign(mut v: nalgebra::DVectorViewMut<'_, f64>) {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.abs() >= max * (1.0 - SIGN_TIE_TOL))
        .unwrap_or(0);
    if v[pivot] < 0.0 {
        v.neg_mut();
    }
}

/// Cyclic Jacobi eigen-solver with a fixed row-by-row sweep order, so the
/// result is a deterministic function of the input.
pub fn symmetric_eigen(b: &DMatrix<f64>) -> Result<EigenSystem> {
    if b.nrows() != b.ncols() {
        return Err(Error::NonSquare {
            rows: b.nrows(),
            cols: b.ncols(),
        });
    }
    let n = b.nrows();
    let mut a = b.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = b.norm();
    let target = JACOBI_TOL * scale;
    let mut sweeps = 0;

    loop {
        let off = off_diagonal_norm(&a);
        if off <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::ConvergenceFailure { sweeps, residual: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ties in their original order.
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &v.column(src));
        fix_sign(eigenvectors.column_mut(dst));
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

/// Rank-d positive part of a centered Gram matrix, `B̄ = U_d Λ_d U_dᵗ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGram {
    /// Retained eigenvalues `Λ_d` (the squared singular values), descending.
    pub eigenvalues: DVector<f64>,
    /// `U_d`, n×d.
    pub vectors: DMatrix<f64>,
    /// Eigenvalues that were dropped, descending.
    pub dropped: DVector<f64>,
    /// Set when `λ_d` and `λ_{d+1}` tie, making the truncation ambiguous.
    pub degenerate_spectrum: bool,
}

impl TruncatedGram {
    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Σ_d = Λ_d^{1/2}`.
    pub fn singular_values(&self) -> DVector<f64> {
        self.eigenvalues.map(f64::sqrt)
    }

    pub fn gram(&self) -> DMatrix<f64> {
        &self.vectors * DMatrix::from_diagonal(&self.eigenvalues) * self.vectors.transpose()
    }

    pub fn configuration(&self) -> Configuration {
        let sigma = self.singular_values();
        let mut coords = self.vectors.clone();
        for (j, s) in sigma.iter().enumerate() {
            coords.column_mut(j).scale_mut(*s);
        }
        Configuration::new(coords)
    }

    /// Squared Frobenius mass of the dropped spectrum, `‖B - B̄‖_F²`.
    pub fn dropped_mass(&self) -> f64 {
        self.dropped.iter().map(|l| l * l).sum()
    }
}

/// Keeps the `d` largest eigenpairs; all of them must be positive.
pub fn truncate_psd(es: &EigenSystem, d: usize) -> Result<TruncatedGram> {
    let n = es.eigenvalues.len();
    if d == 0 || d > n {
        return Err(Error::InvalidDimension(d));
    }
    let max_abs = es.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let threshold = POSITIVE_TOL * max_abs;
    let available = es.eigenvalues.iter().filter(|&&l| l > threshold && l > 0.0).count();
    if available < d {
        return Err(Error::InsufficientPositiveSpectrum {
            requested: d,
            available,
        });
    }
    let degenerate_spectrum = d < n && {
        let (ld, lnext) = (es.eigenvalues[d - 1], es.eigenvalues[d]);
        (ld - lnext).abs() <= DEGENERACY_TOL * ld.abs()
    };
    if degenerate_spectrum {
        log::warn!(
            "eigenvalues {} and {} tie; truncation at d = {d} is ambiguous",
            d,
            d + 1
        );
    }
    Ok(TruncatedGram {
        eigenvalues: es.eigenvalues.rows(0, d).into_owned(),
        vectors: es.eigenvectors.columns(0, d).into_owned(),
        dropped: es.eigenvalues.rows(d, n - d).into_owned(),
        degenerate_spectrum,
    })
}

/// n×d coordinate matrix of the in-sample embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    coords: DMatrix<f64>,
}

impl Configuration {
    pub fn new(coords: DMatrix<f64>) -> Self {
        Self { coords }
    }

    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.coords.row(i).transpose()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        &self.coords * self.coords.transpose()
    }

    /// Squared pairwise distances between configuration points.
    pub fn squared_distances(&self) -> DissimilarityMatrix {
        DissimilarityMatrix::from_points(&self.coords).squared()
    }
}

/// Classical MDS of squared dissimilarities into `d` dimensions.
pub fn cmds_embed(delta2: &DissimilarityMatrix, d: usize) -> Result<(Configuration, TruncatedGram)> {
    let b = double_center(delta2);
    let es = symmetric_eigen(&b)?;
    let tg = truncate_psd(&es, d)?;
    Ok((tg.configuration(), tg))
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

    #[test]
    fn diagonal_input() {
        let es = symmetric_eigen(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]))).unwrap();
        assert_eq!(es.eigenvalues.as_slice(), &[3.0, 1.0]);
        assert_eq!(es.eigenvectors, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(es.sweeps, 0);
    }

    #[test]
    fn two_by_two() {
        let es = symmetric_eigen(&DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(es.eigenvalues[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(es.eigenvalues[1], 0.0, epsilon = 1e-14);
        // (1,-1)/√2 with the tie broken towards row 0
        assert!(es.eigenvectors[(0, 0)] > 0.0);
    }

    #[test]
    fn example2_spectrum() {
        let es = symmetric_eigen(&double_center(&example2())).unwrap();
        let expected = [50.0, 32.0, 4.0, 0.0];
        for (l, e) in es.eigenvalues.iter().zip(expected) {
            assert_abs_diff_eq!(*l, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn truncation_errors() {
        let es = symmetric_eigen(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0, -1.0]))).unwrap();
        assert!(matches!(
            truncate_psd(&es, 2),
            Err(Error::InsufficientPositiveSpectrum {
                requested: 2,
                available: 1
            })
        ));
        assert!(matches!(truncate_psd(&es, 0), Err(Error::InvalidDimension(0))));
        assert!(truncate_psd(&es, 1).is_ok());
    }

    #[test]
    fn degenerate_flag() {
        let es = symmetric_eigen(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 1.0]))).unwrap();
        assert!(truncate_psd(&es, 2).unwrap().degenerate_spectrum);
        assert!(!truncate_psd(&es, 1).unwrap().degenerate_spectrum);
    }

    #[test]
    fn cmds_examples() {
        let (x, tg) = cmds_embed(&example2(), 2).unwrap();
        let expected = DMatrix::from_row_slice(4, 2, &[5.0, 0.0, -5.0, 0.0, 0.0, 4.0, 0.0, -4.0]);
        assert_abs_diff_eq!(x.coords().clone(), expected, epsilon = 1e-10);
        assert_abs_diff_eq!(tg.dropped_mass(), 16.0, epsilon = 1e-9);

        let two = DissimilarityMatrix::from_rows(&[vec![0.0, 4.0], vec![4.0, 0.0]]).unwrap();
        let (x, _) = cmds_embed(&two, 1).unwrap();
        assert_abs_diff_eq!(
            x.coords().clone(),
            DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
            epsilon = 1e-12
        );

        let line =
            DissimilarityMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let (x, _) = cmds_embed(&line.squared(), 1).unwrap();
        let rec = DissimilarityMatrix::from_points(x.coords());
        assert_abs_diff_eq!(rec.values().clone(), line.values().clone(), epsilon = 1e-8);
    }

    #[test]
    fn zero_matrix_has_no_positive_spectrum() {
        let z = DissimilarityMatrix::new(DMatrix::zeros(1, 1)).unwrap();
        assert!(matches!(
            cmds_embed(&z, 1),
            Err(Error::InsufficientPositiveSpectrum { .. })
        ));
    }
}
