use nalgebra::DVector;
use serde::Serialize;

use super::{objective, objective_gradient, objective_hessian, OosProblem, RidgeSystem};
use crate::error::{Error, Result};
use crate::oracle::quartic_1d_roots;

/// Components of `Xᵗb` below this fraction of `‖Xᵗb‖` count as zero.
const HARD_CASE_REL_TOL: f64 = 1e-10;
/// `‖Xᵗb‖` below this (scaled by `σ₁‖b‖`, at least 1) counts as zero.
const ZERO_RHS_TOL: f64 = 1e-12;
/// Samples of φ per subinterval before golden-section refinement.
const SUBINTERVAL_SAMPLES: usize = 64;
/// Bracket growth cap for `λ > 0`, relative to the largest eigenvalue.
const LAMBDA_MAX_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative tolerance on `λ` for the unidimensional search.
    pub tol: f64,
    /// Iteration cap for each golden-section search.
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Restrict,
    Batch,
    Stress,
}

/// How `β` compares with `r̂²`, which decides the sign of `λ*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `β < r̂²`: the solution shrinks towards the origin, `λ* > 0`.
    Shrink,
    /// `β = r̂²`: projection already solves the problem.
    Balanced,
    /// `β > r̂²`: the solution grows, `λ* < 0`.
    Expand,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub regime: Option<Regime>,
    /// Objective evaluations spent in golden-section / majorization loops.
    pub iterations: usize,
    /// Range of `λ` that was searched.
    pub bracket: Option<(f64, f64)>,
    /// Number of candidate solutions compared.
    pub candidates: usize,
    /// Newton steps taken while polishing the winner.
    pub polish_steps: usize,
    /// Stress solver: an iterate landed on a configuration point.
    pub coincident: bool,
    /// Stress solver: every run was monotone non-increasing.
    pub monotone: bool,
    /// Number of starting points (stress solver).
    pub starts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingResult {
    pub y_star: DVector<f64>,
    /// Absent for the stress solver.
    pub lambda_star: Option<f64>,
    /// Objective value at `y_star` (stress value for the stress solver).
    pub objective: f64,
    pub hard_case: bool,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone)]
struct Candidate {
    y: DVector<f64>,
    lambda: f64,
    hard: bool,
    value: f64,
}

impl Candidate {
    fn on_trace(sys: &RidgeSystem<'_>, lambda: f64) -> Self {
        let y = sys.y_at(lambda);
        let value = objective(sys.problem, &y).unwrap_or(f64::INFINITY);
        Self {
            y,
            lambda,
            hard: false,
            value,
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search on `[a, b]` followed by a three-point parabolic
/// step. Returns the best abscissa and the evaluation count.
fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, opts: &SolveOptions) -> (f64, usize) {
    let (fa0, fb0) = (f(a), f(b));
    let (a0, b0) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evals = 4;
    while evals < opts.max_iter && (b - a) > opts.tol * (1.0 + c.abs().max(d.abs())) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    let (mut best, mut fbest) = if fc < fd { (c, fc) } else { (d, fd) };
    // Parabola through a, best, b.
    let (fa, fb) = (f(a), f(b));
    evals += 2;
    let (p, q) = ((best - a) * (fbest - fb), (best - b) * (fbest - fa));
    let denom = p - q;
    if denom != 0.0 {
        let vertex = best - 0.5 * ((best - a) * p - (best - b) * q) / denom;
        if vertex > a && vertex < b {
            let fv = f(vertex);
            evals += 1;
            if fv < fbest {
                best = vertex;
                fbest = fv;
            }
        }
    }
    // The search assumes unimodality; fall back to an endpoint if it won.
    if fa0 < fbest {
        best = a0;
        fbest = fa0;
    }
    if fb0 < fbest {
        best = b0;
    }
    (best, evals)
}

/// Bisection on a sign change of `g` over `[a, b]`.
fn bisect<F: Fn(f64) -> f64>(g: F, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Eigenvalue groups of `XᵗX` (descending): index ranges of eigenvalues
/// closer than the guard band.
fn eigen_groups(sys: &RidgeSystem<'_>) -> Vec<std::ops::Range<usize>> {
    let g = sys.guard_width();
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=sys.s.len() {
        if i == sys.s.len() || sys.s[i - 1] - sys.s[i] > g {
            groups.push(start..i);
            start = i;
        }
    }
    groups
}

/// `λ ∈ [0, λ_max]` with `λ_max` grown geometrically until φ turns upward.
fn search_shrink(
    sys: &RidgeSystem<'_>,
    opts: &SolveOptions,
    diag: &mut Diagnostics,
    cands: &mut Vec<Candidate>,
) -> Result<()> {
    let s1 = sys.s[0];
    let (mut lower, mut prev) = (0.0, 0.0);
    let mut f_prev = sys.phi(0.0);
    let mut upper = s1;
    loop {
        let f_up = sys.phi(upper);
        diag.iterations += 1;
        if f_up >= f_prev {
            break;
        }
        if upper >= LAMBDA_MAX_CAP * s1 {
            return Err(Error::BracketingFailure { scanned_to: upper });
        }
        lower = prev;
        prev = upper;
        f_prev = f_up;
        upper *= 4.0;
    }
    diag.bracket = Some((0.0, upper));
    let (lambda, evals) = golden_section(|l| sys.phi(l), lower, upper, opts);
    diag.iterations += evals;
    cands.push(Candidate::on_trace(sys, lambda));
    let h = |l: f64| sys.stationarity_gap(l);
    if h(lower) < 0.0 && h(upper) > 0.0 {
        cands.push(Candidate::on_trace(sys, bisect(h, lower, upper)));
    }
    Ok(())
}

/// Partition of `(-∞, 0]` by the eigenvalues of `-XᵗX`; each piece is
/// sampled, refined by golden section around the best sample, and every
/// sign change of the stationarity gap is bisected.
fn search_expand(sys: &RidgeSystem<'_>, opts: &SolveOptions, diag: &mut Diagnostics, cands: &mut Vec<Candidate>) {
    let g = sys.guard_width();
    let s1 = sys.s[0];
    let beta = sys.problem.beta();
    // Stationary points satisfy λ = ‖y‖² - β ≥ -β.
    let left = -beta.max(s1) - s1 - 1.0;
    let mut edges = vec![(left, false)];
    for group in eigen_groups(sys) {
        let pole = -sys.s.rows(group.start, group.len()).mean();
        edges.push((pole, true));
    }
    edges.push((0.0, false));
    diag.bracket = Some((left, 0.0));

    let h = |l: f64| sys.stationarity_gap(l);
    for w in edges.windows(2) {
        let (a, a_pole) = w[0];
        let (b, b_pole) = w[1];
        let lo = if a_pole { a + g } else { a };
        let hi = if b_pole { b - g } else { b };
        if !(lo < hi) {
            continue;
        }
        // Cosine spacing clusters samples near the poles at either end.
        let lambdas: Vec<f64> = (0..SUBINTERVAL_SAMPLES)
            .map(|k| {
                let u = 0.5 * (1.0 - (std::f64::consts::PI * k as f64 / (SUBINTERVAL_SAMPLES - 1) as f64).cos());
                lo + (hi - lo) * u
            })
            .collect();
        let values: Vec<f64> = lambdas.iter().map(|&l| sys.phi(l)).collect();
        diag.iterations += values.len();
        let k = values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map_or(0, |(i, _)| i);
        let ga = lambdas[k.saturating_sub(1)];
        let gb = lambdas[(k + 1).min(SUBINTERVAL_SAMPLES - 1)];
        let (lambda, evals) = golden_section(|l| sys.phi(l), ga, gb, opts);
        diag.iterations += evals;
        cands.push(Candidate::on_trace(sys, lambda));
        for pair in lambdas.windows(2) {
            let (ha, hb) = (h(pair[0]), h(pair[1]));
            if ha == 0.0 {
                cands.push(Candidate::on_trace(sys, pair[0]));
            } else if (ha < 0.0) != (hb < 0.0) && hb != 0.0 {
                cands.push(Candidate::on_trace(sys, bisect(h, pair[0], pair[1])));
            }
        }
    }
}

/// Candidates `ŷ_⊥(-s_i) + t v_i` along eigen-directions where `Xᵗb` has
/// no component, with `t` minimizing the quartic along that line. The
/// smallest eigenvalue is always tried, which also covers near-hard cases
/// whose minimizer sits inside the guard band.
fn hard_case_candidates(sys: &RidgeSystem<'_>, b_norm: f64, cands: &mut Vec<Candidate>) {
    let p = sys.problem;
    let x = p.x().coords();
    let c_norm = sys.rhs_norm();
    let zero_rhs = c_norm <= ZERO_RHS_TOL * (sys.s[0].sqrt() * b_norm).max(1.0);
    let groups = eigen_groups(sys);
    let last = groups.len() - 1;
    for (gi, group) in groups.iter().enumerate() {
        let comp = group.clone().map(|j| sys.c[j] * sys.c[j]).sum::<f64>().sqrt();
        let is_zero = zero_rhs || comp <= HARD_CASE_REL_TOL * c_norm;
        if !is_zero && gi != last {
            continue;
        }
        let lambda = -sys.s.rows(group.start, group.len()).mean();
        let mut y_perp = DVector::zeros(p.dim());
        for j in (0..sys.s.len()).filter(|j| !group.contains(j)) {
            y_perp += sys.v.column(j) * (sys.c[j] / (sys.s[j] + lambda));
        }
        let dir = sys.v.column(group.start).into_owned();
        // F(y_perp + t dir) as a quartic in t.
        let r0 = x * &y_perp - p.b();
        let r1 = x * &dir;
        let (a0, a1, a2) = (r0.norm_squared(), r0.dot(&r1), r1.norm_squared());
        let (q0, q1, q2) = (
            y_perp.norm_squared() - p.beta(),
            2.0 * y_perp.dot(&dir),
            dir.norm_squared(),
        );
        let quartic = quartic_1d_roots(
            q2 * q2,
            2.0 * q1 * q2,
            2.0 * a2 + q1 * q1 + 2.0 * q0 * q2,
            4.0 * a1 + 2.0 * q0 * q1,
            2.0 * a0 + q0 * q0,
        );
        let t = quartic.minimizers.last().copied().unwrap_or(0.0);
        let y = &y_perp + &dir * t;
        let value = objective(p, &y).unwrap_or(f64::INFINITY);
        cands.push(Candidate {
            y,
            lambda,
            hard: is_zero && t.abs() > 1e-12 * (1.0 + y_perp.norm()),
            value,
        });
    }
}

/// Damped Newton on the full objective.
fn newton_polish(p: &OosProblem, y: &mut DVector<f64>, value: &mut f64) -> usize {
    let mut steps = 0;
    for _ in 0..50 {
        let g = match objective_gradient(p, y) {
            Ok(g) => g,
            Err(_) => break,
        };
        if g.norm() <= 1e-15 * (1.0 + *value) {
            break;
        }
        let step = match objective_hessian(p, y).cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            None => break,
        };
        let g_norm = g.norm();
        let noise = 4.0 * f64::EPSILON * (1.0 + value.abs());
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &*y + &step * alpha;
            let v = objective(p, &trial).unwrap_or(f64::INFINITY);
            // At the roundoff floor of F, progress is measured by the gradient.
            let flat_but_better =
                v <= *value + noise && objective_gradient(p, &trial).is_ok_and(|gt| gt.norm() < g_norm);
            if v < *value || flat_but_better {
                *y = trial;
                *value = v;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        steps += 1;
    }
    steps
}

/// Makes the first non-negligible coordinate positive.
pub(crate) fn canonical_sign(y: &mut DVector<f64>) {
    let scale = y.amax();
    if let Some(first) = y.iter().copied().find(|v| v.abs() > 1e-9 * scale) {
        if first < 0.0 {
            y.neg_mut();
        }
    }
}

/// Global minimizer of `2‖Xy - b‖² + (yᵗy - β)²`.
///
/// When `Xᵗb = 0` the objective is even in `y`; the returned minimizer then
/// has its first non-negligible coordinate positive.
pub fn solve_single(p: &OosProblem, opts: &SolveOptions) -> Result<EmbeddingResult> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidOption("tol must be positive and max_iter nonzero".into()));
    }
    let sys = RidgeSystem::new(p)?;
    let r2 = sys.r_hat_squared();
    let beta = p.beta();
    let mut diag = Diagnostics::default();
    let mut cands = vec![Candidate::on_trace(&sys, 0.0)];
    let origin = DVector::zeros(p.dim());
    cands.push(Candidate {
        value: objective(p, &origin)?,
        y: origin,
        lambda: -beta,
        hard: false,
    });

    let regime = if (beta - r2).abs() <= 1e-12 * (1.0 + r2.max(beta.abs())) {
        Regime::Balanced
    } else if beta < r2 {
        Regime::Shrink
    } else {
        Regime::Expand
    };
    diag.regime = Some(regime);
    match regime {
        Regime::Shrink => search_shrink(&sys, opts, &mut diag, &mut cands)?,
        Regime::Expand => search_expand(&sys, opts, &mut diag, &mut cands),
        Regime::Balanced => diag.bracket = Some((0.0, 0.0)),
    }
    hard_case_candidates(&sys, p.b().norm(), &mut cands);
    diag.candidates = cands.len();

    let best = cands
        .into_iter()
        .filter(|c| c.value.is_finite())
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or(Error::NonFiniteObjective)?;
    let Candidate {
        mut y,
        mut value,
        hard,
        lambda,
    } = best;
    diag.polish_steps = newton_polish(p, &mut y, &mut value);
    let even = sys.rhs_norm() <= ZERO_RHS_TOL * (sys.s[0].sqrt() * p.b().norm()).max(1.0);
    if even {
        canonical_sign(&mut y);
    }
    let lambda_star = if hard { lambda } else { y.norm_squared() - beta };
    let objective = objective(p, &y)?;
    Ok(EmbeddingResult {
        y_star: y,
        lambda_star: Some(lambda_star),
        objective,
        hard_case: hard,
        method: Method::Restrict,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Configuration;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn example2_problem() -> OosProblem {
        let x = Configuration::new(DMatrix::from_row_slice(
            4,
            2,
            &[5.0, 0.0, -5.0, 0.0, 0.0, 4.0, 0.0, -4.0],
        ));
        OosProblem::new(x, DVector::zeros(4), 400.0).unwrap()
    }

    #[test]
    fn example2_hard_case() {
        let r = solve_single(&example2_problem(), &SolveOptions::default()).unwrap();
        assert!(r.hard_case);
        assert_abs_diff_eq!(r.y_star[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.y_star[1], 368f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(r.lambda_star.unwrap(), -32.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.objective, 24576.0, epsilon = 1e-6);
        assert_eq!(r.diagnostics.regime, Some(Regime::Expand));
    }

    #[test]
    fn two_point_hard_case() {
        let x = Configuration::new(DMatrix::from_column_slice(2, 1, &[1.0, -1.0]));
        let p = OosProblem::new(x, DVector::zeros(2), 81.0).unwrap();
        let r = solve_single(&p, &SolveOptions::default()).unwrap();
        assert!(r.hard_case);
        assert_abs_diff_eq!(r.y_star[0], 79f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(r.lambda_star.unwrap(), -2.0, epsilon = 1e-10);
    }

    #[test]
    fn balanced_returns_projection() {
        let x = Configuration::new(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.0, -2.5]));
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let tmp = OosProblem::new(x.clone(), b.clone(), 0.0).unwrap();
        let r2 = crate::restrict::r_hat_squared(&tmp).unwrap();
        let p = OosProblem::new(x, b, r2).unwrap();
        let r = solve_single(&p, &SolveOptions::default()).unwrap();
        let proj = crate::restrict::ridge_solve(&p, 0.0).unwrap();
        assert_abs_diff_eq!(r.y_star, proj.y, epsilon = 1e-10);
        assert_abs_diff_eq!(r.lambda_star.unwrap(), 0.0, epsilon = 1e-10);
        assert!(!r.hard_case);
    }

    #[test]
    fn shrink_regime_has_positive_lambda() {
        let x = Configuration::new(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.0, -2.5]));
        let b = DVector::from_vec(vec![3.0, -2.0, 0.5]);
        let p = OosProblem::new(x, b, -1.0).unwrap();
        let r = solve_single(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.diagnostics.regime, Some(Regime::Shrink));
        assert!(r.lambda_star.unwrap() > 0.0);
        let g = objective_gradient(&p, &r.y_star).unwrap();
        assert!(g.norm() <= 1e-6 * (1.0 + r.objective));
    }

    #[test]
    fn invalid_options() {
        let opts = SolveOptions { tol: 0.0, max_iter: 10 };
        assert!(matches!(
            solve_single(&example2_problem(), &opts),
            Err(Error::InvalidOption(_))
        ));
    }

    #[test]
    fn rank_deficient() {
        let x = Configuration::new(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, -3.0, -6.0]));
        let p = OosProblem::new(x, DVector::zeros(3), 1.0).unwrap();
        assert!(matches!(
            solve_single(&p, &SolveOptions::default()),
            Err(Error::RankDeficientConfiguration { .. })
        ));
    }
}
