//! Brute-force verifiers and small closed-form solvers.
//!
//! `grid_min` shares nothing with the restricted-reconstruction solver except
//! the objective itself, so it can serve as an independent check on it.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};
use crate::restrict::{objective, OosProblem};

/// Axis-aligned grid: bounds per axis and points per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    bounds: Vec<(f64, f64)>,
    resolution: usize,
}

impl GridSpec {
    pub fn new(bounds: Vec<(f64, f64)>, resolution: usize) -> Result<Self> {
        if resolution < 3 {
            return Err(Error::InvalidGrid(format!("resolution {resolution} < 3")));
        }
        if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidGrid(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { bounds, resolution })
    }

    /// Cube `[-R, R]^d` with `R = 2√β⁺ + 2r̂ + 1`.
    pub fn default_for(p: &OosProblem, resolution: usize) -> Result<Self> {
        let x = p.x().coords();
        let xtx = x.transpose() * x;
        let rhs = x.transpose() * p.b();
        let r_hat = xtx.lu().solve(&rhs).map_or(0.0, |y| y.norm());
        let radius = 2.0 * p.beta().max(0.0).sqrt() + 2.0 * r_hat + 1.0;
        Self::new(vec![(-radius, radius); p.dim()], resolution)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    fn spacing(&self) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|(lo, hi)| (hi - lo) / (self.resolution - 1) as f64)
            .collect()
    }
}

/// Exhaustive grid search over `f` followed by one Nelder–Mead polish from
/// the best grid point.
pub fn grid_minimize<F>(f: F, grid: &GridSpec) -> Result<(DVector<f64>, f64)>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let d = grid.dim();
    if d > 3 {
        return Err(Error::DimensionTooLarge(d));
    }
    let res = grid.resolution;
    let h = grid.spacing();
    let total = res.pow(d as u32);
    let mut point = DVector::zeros(d);
    let mut best = (DVector::zeros(d), f64::INFINITY);
    for idx in 0..total {
        let mut rem = idx;
        for axis in 0..d {
            point[axis] = grid.bounds[axis].0 + h[axis] * (rem % res) as f64;
            rem /= res;
        }
        let v = f(&point);
        if v < best.1 {
            best = (point.clone(), v);
        }
    }
    if d == 0 {
        let v = f(&point);
        return Ok((point, v));
    }
    Ok(nelder_mead(&f, &best.0, &h, 4000))
}

/// Grid oracle for the restricted-reconstruction objective (`d <= 3`).
pub fn grid_min(p: &OosProblem, grid: &GridSpec) -> Result<(DVector<f64>, f64)> {
    if p.dim() > 3 {
        return Err(Error::DimensionTooLarge(p.dim()));
    }
    if grid.dim() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "grid has {} axes, problem has dimension {}",
            grid.dim(),
            p.dim()
        )));
    }
    grid_minimize(|y| objective(p, y).unwrap_or(f64::INFINITY), grid)
}

/// Plain Nelder–Mead with the standard coefficients.
pub fn nelder_mead<F>(f: &F, start: &DVector<f64>, step: &[f64], max_iter: usize) -> (DVector<f64>, f64)
where
    F: Fn(&DVector<f64>) -> f64,
{
    let d = start.len();
    let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((start.clone(), f(start)));
    for i in 0..d {
        let mut v = start.clone();
        v[i] += step[i];
        let fv = f(&v);
        simplex.push((v, fv));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (lo, hi) = (simplex[0].1, simplex[d].1);
        let size = simplex
            .iter()
            .skip(1)
            .map(|(v, _)| (v - &simplex[0].0).amax())
            .fold(0.0, f64::max);
        if (hi - lo).abs() <= 1e-15 * (1.0 + lo.abs()) && size <= 1e-13 * (1.0 + simplex[0].0.amax()) {
            break;
        }
        let centroid = simplex[..d].iter().fold(DVector::zeros(d), |acc, (v, _)| acc + v) / d as f64;
        let worst = simplex[d].0.clone();
        let reflected = &centroid + (&centroid - &worst);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = &centroid + (&centroid - &worst) * 2.0;
            let fe = f(&expanded);
            simplex[d] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[d].1 {
                &centroid + (&reflected - &centroid) * 0.5
            } else {
                &centroid + (&worst - &centroid) * 0.5
            };
            let fc = f(&contracted);
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let v = &best + (&entry.0 - &best) * 0.5;
                    let fv = f(&v);
                    *entry = (v, fv);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Stationary points and global minimizers of `c4 t⁴ + c3 t³ + c2 t² + c1 t + c0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticMinimum {
    /// Real roots of the derivative, ascending.
    pub stationary: Vec<f64>,
    /// Stationary points attaining the minimum value (ties within `1e-12`
    /// relative), ascending.
    pub minimizers: Vec<f64>,
    pub value: f64,
}

pub fn quartic_value(c: &[f64; 5], t: f64) -> f64 {
    (((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]
}

fn quartic_slope(c: &[f64; 5], t: f64) -> f64 {
    ((4.0 * c[0] * t + 3.0 * c[1]) * t + 2.0 * c[2]) * t + c[3]
}

fn quartic_curvature(c: &[f64; 5], t: f64) -> f64 {
    (12.0 * c[0] * t + 6.0 * c[1]) * t + 2.0 * c[2]
}

/// Real roots of the monic cubic `t³ + a t² + b t + c`.
fn monic_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let scale = 1.0 + a.abs() + b.abs().sqrt() + c.abs().cbrt();
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let tiny = 1e-14 * scale.powi(6);
    let mut roots = if p.abs() <= 1e-15 * scale * scale && q.abs() <= 1e-15 * scale.powi(3) {
        vec![0.0]
    } else if disc < -tiny {
        let r = 2.0 * (-p / 3.0).sqrt();
        let phi = (3.0 * q / (p * r)).clamp(-1.0, 1.0).acos() / 3.0;
        (0..3).map(|k| r * (phi - 2.0 * PI * k as f64 / 3.0).cos()).collect()
    } else if disc <= tiny {
        // double root
        let u = (-q / 2.0).cbrt();
        vec![2.0 * u, -u]
    } else {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    };
    for r in roots.iter_mut() {
        *r -= shift;
    }
    roots
}

/// Closed-form stationary points of a quartic with positive leading
/// coefficient and its global minimizers.
pub fn quartic_1d_roots(c4: f64, c3: f64, c2: f64, c1: f64, c0: f64) -> QuarticMinimum {
    assert!(c4 > 0.0, "quartic_1d_roots requires a positive leading coefficient");
    let c = [c4, c3, c2, c1, c0];
    let lead = 4.0 * c4;
    let mut stationary = monic_cubic_roots(3.0 * c3 / lead, 2.0 * c2 / lead, c1 / lead);
    // Newton polish against the unnormalized derivative.
    for t in stationary.iter_mut() {
        for _ in 0..3 {
            let g = quartic_slope(&c, *t);
            let h = quartic_curvature(&c, *t);
            if h == 0.0 || g == 0.0 {
                break;
            }
            let next = *t - g / h;
            if quartic_slope(&c, next).abs() < g.abs() {
                *t = next;
            } else {
                break;
            }
        }
    }
    stationary.sort_by(f64::total_cmp);
    stationary.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    let value = stationary
        .iter()
        .map(|&t| quartic_value(&c, t))
        .fold(f64::INFINITY, f64::min);
    let minimizers = stationary
        .iter()
        .copied()
        .filter(|&t| quartic_value(&c, t) <= value + 1e-12 * (1.0 + value.abs()))
        .collect();
    QuarticMinimum {
        stationary,
        minimizers,
        value,
    }
}

/// One stationary point of the hyperplane objective `f(θ, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneStationary {
    pub theta: f64,
    pub y: f64,
    pub value: f64,
    pub hessian_eigenvalues: [f64; 2],
    pub kind: StationaryKind,
    /// Coordinate of the new point once the translation is undone, `1.5 y`.
    pub out_of_sample: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryKind {
    Minimum,
    Maximum,
    Saddle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneDemo {
    /// All stationary points with θ in `(-π, π]`, ordered by θ.
    pub stationary: Vec<HyperplaneStationary>,
}

impl HyperplaneDemo {
    pub fn minimizers(&self) -> impl Iterator<Item = &HyperplaneStationary> {
        self.stationary.iter().filter(|s| s.kind == StationaryKind::Minimum)
    }

    pub fn at_origin(&self) -> Option<&HyperplaneStationary> {
        self.stationary.iter().find(|s| s.theta == 0.0 && s.y == 0.0)
    }
}

/// Points (-1,0), (1,0) in the plane, new point (0,9), one dimension kept.
pub mod hyperplane {
    use super::*;

    /// Centered data matrix of the three points.
    pub fn data() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 2, &[-1.0, -3.0, 1.0, -3.0, 0.0, 6.0])
    }

    pub fn rotation(theta: f64) -> DMatrix<f64> {
        let (s, c) = theta.sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    /// Configuration with the in-sample points fixed at -1 and 1 (translated
    /// to keep the three points centered) and the new point at `y`.
    pub fn fixed_configuration(y: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 2, &[-1.0 - y / 2.0, 0.0, 1.0 - y / 2.0, 0.0, y, 0.0])
    }

    /// `‖M V(θ) - M(y)‖_F²` evaluated from the matrices.
    pub fn objective(theta: f64, y: f64) -> f64 {
        (data() * rotation(theta) - fixed_configuration(y)).norm_squared()
    }

    /// Closed form `1.5y² - 18y sinθ - 4cosθ + 58`.
    pub fn objective_closed_form(theta: f64, y: f64) -> f64 {
        1.5 * y * y - 18.0 * y * theta.sin() - 4.0 * theta.cos() + 58.0
    }

    pub fn gradient(theta: f64, y: f64) -> [f64; 2] {
        let (s, c) = theta.sin_cos();
        [-18.0 * y * c + 4.0 * s, 3.0 * y - 18.0 * s]
    }

    pub fn hessian(theta: f64, y: f64) -> Matrix2<f64> {
        let (s, c) = theta.sin_cos();
        Matrix2::new(18.0 * y * s + 4.0 * c, -18.0 * c, -18.0 * c, 3.0)
    }
}

/// Stationary points of the hyperplane characterization of restricted
/// reconstruction for the three-point PCA toy problem.
///
/// The `y` equation gives `y = 6 sin θ`; substituting leaves the scalar
/// equation `sin θ (4 - 108 cos θ) = 0`, whose roots on `(-π, π]` are found
/// by a sign scan plus bisection.
pub fn pca_hyperplane_demo() -> HyperplaneDemo {
    use std::f64::consts::PI;
    let reduced = |theta: f64| hyperplane::gradient(theta, 6.0 * theta.sin())[0];

    let mut roots = Vec::new();
    let samples = 3600;
    let at = |k: usize| -PI + 2.0 * PI * k as f64 / samples as f64;
    for k in 0..samples {
        let (a, b) = (at(k), at(k + 1));
        let (fa, fb) = (reduced(a), reduced(b));
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = reduced(mid);
                if fm == 0.0 || hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    // sin θ = 0 roots are exact.
    for r in roots.iter_mut() {
        if r.sin().abs() < 1e-12 {
            *r = if r.abs() < 1.0 { 0.0 } else { PI };
        }
    }
    if reduced(PI).abs() < 1e-12 && !roots.contains(&PI) {
        roots.push(PI);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let stationary = roots
        .into_iter()
        .map(|theta| {
            let y = if theta == 0.0 || theta == PI {
                0.0
            } else {
                6.0 * theta.sin()
            };
            let eig = hyperplane::hessian(theta, y).symmetric_eigenvalues();
            let (lo, hi) = (eig[0].min(eig[1]), eig[0].max(eig[1]));
            let kind = if lo > 0.0 {
                StationaryKind::Minimum
            } else if hi < 0.0 {
                StationaryKind::Maximum
            } else {
                StationaryKind::Saddle
            };
            HyperplaneStationary {
                theta,
                y,
                value: hyperplane::objective(theta, y),
                hessian_eigenvalues: [lo, hi],
                kind,
                out_of_sample: 1.5 * y,
            }
        })
        .collect();
    HyperplaneDemo { stationary }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quartic_in_y_squared() {
        // y⁴ - 736 y² + 160000 = 64 y² + (y² - 400)²
        let q = quartic_1d_roots(1.0, 0.0, -736.0, 0.0, 160000.0);
        assert_eq!(q.stationary.len(), 3);
        assert_eq!(q.minimizers.len(), 2);
        assert_abs_diff_eq!(q.minimizers[1], 368f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(q.minimizers[0], -368f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(q.value, 160000.0 - 368.0 * 368.0, epsilon = 1e-6);
    }

    #[test]
    fn quartic_perfect_square_and_convex() {
        let q = quartic_1d_roots(1.0, 0.0, -2.0, 0.0, 1.0);
        assert_eq!(q.minimizers.len(), 2);
        assert_abs_diff_eq!(q.minimizers[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.minimizers[1], 1.0, epsilon = 1e-12);

        let q = quartic_1d_roots(1.0, 0.0, 1.0, 0.0, 0.0);
        assert_eq!(q.minimizers, vec![0.0]);
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn quartic_triple_root_derivative() {
        // (t - 1)⁴ has derivative 4(t-1)³
        let q = quartic_1d_roots(1.0, -4.0, 6.0, -4.0, 1.0);
        assert_eq!(q.minimizers.len(), 1);
        assert_abs_diff_eq!(q.minimizers[0], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn grid_spec_validation() {
        assert!(matches!(GridSpec::new(vec![(0.0, 1.0)], 2), Err(Error::InvalidGrid(_))));
        assert!(matches!(GridSpec::new(vec![(1.0, 1.0)], 5), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn grid_rejects_large_dimension() {
        let grid = GridSpec::new(vec![(-1.0, 1.0); 4], 3).unwrap();
        assert!(matches!(
            grid_minimize(|y| y.norm(), &grid),
            Err(Error::DimensionTooLarge(4))
        ));
    }

    #[test]
    fn nelder_mead_quadratic() {
        let f = |y: &DVector<f64>| (y[0] - 1.0).powi(2) + 10.0 * (y[1] + 2.0).powi(2);
        let (y, v) = nelder_mead(&f, &DVector::zeros(2), &[0.5, 0.5], 2000);
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(y[1], -2.0, epsilon = 1e-6);
        assert!(v < 1e-12);
    }

    #[test]
    fn hyperplane_closed_form_matches_matrices() {
        for &(t, y) in &[(0.0, 0.0), (0.3, 2.0), (-1.2, 5.5), (2.9, -3.0)] {
            assert_abs_diff_eq!(
                hyperplane::objective(t, y),
                hyperplane::objective_closed_form(t, y),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn hyperplane_demo_stationary_points() {
        let demo = pca_hyperplane_demo();
        let origin = demo.at_origin().expect("origin is stationary");
        assert_eq!(origin.kind, StationaryKind::Saddle);
        let mins: Vec<_> = demo.minimizers().collect();
        assert_eq!(mins.len(), 2);
        for m in &mins {
            assert_abs_diff_eq!(m.theta.cos(), 1.0 / 27.0, epsilon = 1e-12);
            let g = hyperplane::gradient(m.theta, m.y);
            assert!(g[0].abs() < 1e-10 && g[1].abs() < 1e-10);
            assert_abs_diff_eq!(m.out_of_sample.abs(), 8.994, epsilon = 1e-3);
        }
        assert_abs_diff_eq!(mins[0].value, mins[1].value, epsilon = 1e-10);
    }
}
