use nalgebra::{DMatrix, DVector};
use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L2,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Stop once an iteration lowers the objective by less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 1000 }
    }
}

/// A fitted binary logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub penalty: Penalty,
    /// Inverse regularization strength.
    pub c: f64,
    pub converged: bool,
    pub n_iter: usize,
}

impl LogRegModel {
    fn check_columns(&self, x: &ArrayView2<'_, f64>) -> Result<(), ModelError> {
        if x.ncols() != self.weights.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.weights.len(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Linear scores `X·w + b`.
    pub fn decision_function(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>, ModelError> {
        self.check_columns(&x)?;
        let w = Array1::from(self.weights.clone());
        Ok((x.dot(&w) + self.intercept).to_vec())
    }

    /// `sigmoid(X·w + b)`, kept strictly inside (0, 1).
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>, ModelError> {
        Ok(self
            .decision_function(x)?
            .into_iter()
            .map(|z| sigmoid(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
            .collect())
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn check_inputs(x: &ArrayView2<'_, f64>, y: &[u8]) -> Result<(), ModelError> {
    let n = x.nrows();
    if y.len() != n {
        return Err(ModelError::LengthMismatch {
            scores: n,
            labels: y.len(),
        });
    }
    if n < 2 {
        return Err(ModelError::TooFewSamples(n));
    }
    if !y.contains(&0) || !y.contains(&1) {
        return Err(ModelError::SingleClass);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    Ok(())
}

fn labels(y: &[u8]) -> Array1<f64> {
    y.iter().map(|&v| f64::from(v)).collect()
}

/// Penalized mean log-loss:
/// `(1/n)·Σ loss + ‖w‖²/(2Cn)` for L2, `+ ‖w‖₁/(Cn)` for L1. The intercept
/// is never penalized.
pub fn objective(x: ArrayView2<'_, f64>, y: &[u8], w: &[f64], b: f64, penalty: Penalty, c: f64) -> f64 {
    let n = x.nrows() as f64;
    let eta = x.dot(&Array1::from(w.to_vec())) + b;
    let loss = eta
        .iter()
        .zip(y)
        .map(|(&z, &t)| softplus(z) - f64::from(t) * z)
        .sum::<f64>()
        / n;
    let reg = match penalty {
        Penalty::L2 => w.iter().map(|v| v * v).sum::<f64>() / (2.0 * c * n),
        Penalty::L1 => w.iter().map(|v| v.abs()).sum::<f64>() / (c * n),
    };
    loss + reg
}

/// Gradient of the L2 objective with respect to `(w, b)`.
pub fn objective_gradient(x: ArrayView2<'_, f64>, y: &[u8], w: &[f64], b: f64, c: f64) -> (Vec<f64>, f64) {
    let n = x.nrows() as f64;
    let wv = Array1::from(w.to_vec());
    let resid: Array1<f64> = (x.dot(&wv) + b).mapv(sigmoid) - labels(y);
    let gw = x.t().dot(&resid) / n + &wv / (c * n);
    (gw.to_vec(), resid.sum() / n)
}

fn base_rate_logit(y: &[u8]) -> f64 {
    let pos = y.iter().filter(|&&v| v == 1).count() as f64;
    let neg = y.len() as f64 - pos;
    (pos / neg).ln()
}

/// Intercept-only optimum and the loss gradient at `w = 0` there.
fn null_gradient(x: &ArrayView2<'_, f64>, y: &[u8]) -> (f64, Vec<f64>) {
    let n = x.nrows() as f64;
    let b0 = base_rate_logit(y);
    let p0 = sigmoid(b0);
    let resid: Array1<f64> = y.iter().map(|&t| p0 - f64::from(t)).collect();
    let g = (x.t().dot(&resid) / n).to_vec();
    (b0, g)
}

/// Smallest L1 penalty weight `λ` at which every coefficient is zero.
pub fn l1_lambda_max(x: ArrayView2<'_, f64>, y: &[u8]) -> Result<f64, ModelError> {
    check_inputs(&x, y)?;
    let (_, g) = null_gradient(&x, y);
    Ok(g.iter().fold(0.0, |m, v| m.max(v.abs())))
}

pub fn fit_logreg(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    penalty: Penalty,
    c: f64,
    opts: &FitOptions,
) -> Result<LogRegModel, ModelError> {
    fit_logreg_from(x, y, penalty, c, opts, None)
}

/// Like [`fit_logreg`], optionally warm-started from a previous model.
pub fn fit_logreg_from(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    penalty: Penalty,
    c: f64,
    opts: &FitOptions,
    init: Option<&LogRegModel>,
) -> Result<LogRegModel, ModelError> {
    Ok(fit_logreg_impl(x, y, penalty, c, opts, init)?.0)
}

/// Fits and also returns the objective value after every iteration
/// (starting with the initial point).
pub fn fit_logreg_traced(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    penalty: Penalty,
    c: f64,
    opts: &FitOptions,
) -> Result<(LogRegModel, Vec<f64>), ModelError> {
    fit_logreg_impl(x, y, penalty, c, opts, None)
}

/// L1 fit parameterized by the penalty weight `λ = 1/(C·n)`.
pub fn fit_l1_lambda(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    lambda: f64,
    opts: &FitOptions,
    init: Option<&LogRegModel>,
) -> Result<LogRegModel, ModelError> {
    check_inputs(&x, y)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ModelError::InvalidC(lambda));
    }
    Ok(fit_l1(x, y, lambda, opts, init).0)
}

fn fit_logreg_impl(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    penalty: Penalty,
    c: f64,
    opts: &FitOptions,
    init: Option<&LogRegModel>,
) -> Result<(LogRegModel, Vec<f64>), ModelError> {
    check_inputs(&x, y)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(ModelError::InvalidC(c));
    }
    if let Some(m) = init {
        if m.weights.len() != x.ncols() {
            return Err(ModelError::DimensionMismatch {
                expected: x.ncols(),
                got: m.weights.len(),
            });
        }
    }
    Ok(match penalty {
        Penalty::L2 => fit_l2(x, y, c, opts, init),
        Penalty::L1 => {
            let lambda = 1.0 / (c * x.nrows() as f64);
            let (mut m, h) = fit_l1(x, y, lambda, opts, init);
            m.c = c;
            (m, h)
        }
    })
}

fn initial_point(x: &ArrayView2<'_, f64>, y: &[u8], init: Option<&LogRegModel>) -> (Vec<f64>, f64) {
    match init {
        Some(m) => (m.weights.clone(), m.intercept),
        None => (vec![0.0; x.ncols()], base_rate_logit(y)),
    }
}

/// Damped Newton iterations with Armijo backtracking; the objective never
/// increases between iterations.
fn fit_l2(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    c: f64,
    opts: &FitOptions,
    init: Option<&LogRegModel>,
) -> (LogRegModel, Vec<f64>) {
    let (n, d) = x.dim();
    let nf = n as f64;
    let reg = 1.0 / (c * nf);
    let yv = labels(y);

    let mut design = Array2::ones((n, d + 1));
    design.slice_mut(s![.., ..d]).assign(&x);

    let (w0, b0) = initial_point(&x, y, init);
    let mut theta: Array1<f64> = w0.into_iter().chain(std::iter::once(b0)).collect();
    let eval = |theta: &Array1<f64>| -> f64 {
        let eta = design.dot(theta);
        let loss = eta
            .iter()
            .zip(&yv)
            .map(|(&z, &t)| softplus(z) - t * z)
            .sum::<f64>()
            / nf;
        loss + theta.slice(s![..d]).dot(&theta.slice(s![..d])) * reg / 2.0
    };

    let mut f = eval(&theta);
    let mut history = vec![f];
    let mut converged = false;
    let mut n_iter = 0;
    while n_iter < opts.max_iter {
        let p = design.dot(&theta).mapv(sigmoid);
        let mut grad = design.t().dot(&(&p - &yv)) / nf;
        grad.slice_mut(s![..d]).scaled_add(reg, &theta.slice(s![..d]));
        if grad.iter().all(|g| g.abs() < 1e-12) {
            converged = true;
            break;
        }

        let sqrt_w = p.mapv(|v| (v * (1.0 - v)).sqrt());
        let weighted = &design * &sqrt_w.insert_axis(Axis(1));
        let mut hess = weighted.t().dot(&weighted) / nf;
        for j in 0..=d {
            hess[[j, j]] += if j < d { reg } else { 0.0 } + 1e-12;
        }
        let step = newton_step(&hess, &grad);
        let slope = grad.dot(&step);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = &theta - &(&step * t);
            let fc = eval(&candidate);
            if fc <= f - 1e-4 * t * slope {
                accepted = Some((candidate, fc));
                break;
            }
            t *= 0.5;
        }
        n_iter += 1;
        let Some((candidate, fc)) = accepted else {
            // No descent available at machine precision.
            converged = true;
            break;
        };
        let decrease = f - fc;
        theta = candidate;
        f = fc;
        history.push(f);
        if decrease < opts.tol {
            converged = true;
            break;
        }
    }

    let model = LogRegModel {
        weights: theta.slice(s![..d]).to_vec(),
        intercept: theta[d],
        penalty: Penalty::L2,
        c,
        converged,
        n_iter,
    };
    (model, history)
}

fn newton_step(hess: &Array2<f64>, grad: &Array1<f64>) -> Array1<f64> {
    let m = hess.nrows();
    let h = DMatrix::from_fn(m, m, |i, j| hess[[i, j]]);
    let g = DVector::from_iterator(m, grad.iter().copied());
    let solved = h
        .clone()
        .cholesky()
        .map(|ch| ch.solve(&g))
        .or_else(|| h.lu().solve(&g))
        .filter(|s| s.iter().all(|v| v.is_finite()));
    match solved {
        Some(s) => s.iter().copied().collect(),
        None => grad.clone(),
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Proximal Newton: each outer iteration minimizes the penalized quadratic
/// model of the log-loss by cyclic coordinate descent with soft-thresholding,
/// then backtracks along the resulting direction on the true objective.
fn fit_l1(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    lambda: f64,
    opts: &FitOptions,
    init: Option<&LogRegModel>,
) -> (LogRegModel, Vec<f64>) {
    let (n, d) = x.dim();
    let nf = n as f64;
    let c = 1.0 / (lambda * nf);
    let yv = labels(y);
    // Row-major copy of the transpose so each coordinate is a contiguous slice.
    let xt = x.t().as_standard_layout().into_owned();
    let xt_rows: Vec<&[f64]> = xt.rows().into_iter().map(|r| r.to_slice().expect("standard layout")).collect();

    let eval = |w: &[f64], b: f64| -> f64 {
        let eta = x.dot(&Array1::from(w.to_vec())) + b;
        let loss = eta
            .iter()
            .zip(&yv)
            .map(|(&z, &t)| softplus(z) - t * z)
            .sum::<f64>()
            / nf;
        loss + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
    };

    if init.is_none() {
        let (b0, g) = null_gradient(&x, y);
        if g.iter().all(|v| v.abs() <= lambda) {
            let w = vec![0.0; d];
            let f = eval(&w, b0);
            let model = LogRegModel {
                weights: w,
                intercept: b0,
                penalty: Penalty::L1,
                c,
                converged: true,
                n_iter: 0,
            };
            return (model, vec![f]);
        }
    }

    let (mut w, mut b) = initial_point(&x, y, init);
    let mut f = eval(&w, b);
    let mut history = vec![f];
    let mut converged = false;
    let mut n_iter = 0;
    while n_iter < opts.max_iter {
        let eta = x.dot(&Array1::from(w.clone())) + b;
        let p = eta.mapv(sigmoid);
        let weights: Vec<f64> = p.iter().map(|v| (v * (1.0 - v)).max(1e-5)).collect();
        let sum_w: f64 = weights.iter().sum();
        // Working residual of the quadratic model, z - eta.
        let mut resid: Vec<f64> = (0..n).map(|i| (yv[i] - p[i]) / weights[i]).collect();
        let curvature: Vec<f64> = xt_rows
            .iter()
            .map(|col| col.iter().zip(&weights).map(|(v, wi)| wi * v * v).sum::<f64>() / nf)
            .collect();

        let mut w_new = w.clone();
        let mut b_new = b;
        for _sweep in 0..200 {
            let mut max_change = 0.0f64;
            for j in 0..d {
                let a = curvature[j];
                if a <= 0.0 {
                    continue;
                }
                let col = xt_rows[j];
                let dot: f64 = col.iter().zip(&weights).zip(&resid).map(|((v, wi), r)| v * wi * r).sum();
                let target = soft_threshold(dot / nf + a * w_new[j], lambda) / a;
                let delta = target - w_new[j];
                if delta != 0.0 {
                    for (r, v) in resid.iter_mut().zip(col) {
                        *r -= delta * v;
                    }
                    w_new[j] = target;
                    max_change = max_change.max(delta.abs() * a.sqrt());
                }
            }
            let db = weights.iter().zip(&resid).map(|(wi, r)| wi * r).sum::<f64>() / sum_w;
            if db != 0.0 {
                resid.iter_mut().for_each(|r| *r -= db);
                b_new += db;
                max_change = max_change.max(db.abs() * (sum_w / nf).sqrt());
            }
            if max_change < 1e-9 {
                break;
            }
        }

        let dw: Vec<f64> = w_new.iter().zip(&w).map(|(a, b)| a - b).collect();
        let db = b_new - b;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand_w: Vec<f64> = if t == 1.0 {
                w_new.clone()
            } else {
                w.iter().zip(&dw).map(|(a, d)| a + t * d).collect()
            };
            let cand_b = b + t * db;
            let fc = eval(&cand_w, cand_b);
            if fc <= f {
                accepted = Some((cand_w, cand_b, fc));
                break;
            }
            t *= 0.5;
        }
        n_iter += 1;
        let Some((cand_w, cand_b, fc)) = accepted else {
            converged = true;
            break;
        };
        let decrease = f - fc;
        w = cand_w;
        b = cand_b;
        f = fc;
        history.push(f);
        if decrease < opts.tol {
            converged = true;
            break;
        }
    }

    let model = LogRegModel {
        weights: w,
        intercept: b,
        penalty: Penalty::L1,
        c,
        converged,
        n_iter,
    };
    (model, history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::auroc;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(seed: u64, n: usize, d: usize) -> (Array2<f64>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
        let mut y: Vec<u8> = (0..n).map(|i| u8::from(x[[i, 0]] + rng.random_range(-1.0..1.0) > 0.0)).collect();
        y[0] = 0;
        y[1] = 1;
        (x, y)
    }

    #[test]
    fn zero_design_with_balanced_labels_stays_at_origin() {
        let x = Array2::zeros((4, 2));
        let y = [0, 1, 0, 1];
        for penalty in [Penalty::L2, Penalty::L1] {
            let m = fit_logreg(x.view(), &y, penalty, 1.0, &FitOptions::default()).unwrap();
            assert_eq!(m.weights, vec![0.0, 0.0]);
            assert_eq!(m.intercept, 0.0);
            assert!(m.converged);
            assert_eq!(m.predict_proba(x.view()).unwrap(), vec![0.5; 4]);
        }
    }

    #[test]
    fn separable_one_dimensional_data_ranks_perfectly() {
        let x = array![[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]];
        let y = [0, 0, 0, 1, 1, 1];
        let m = fit_logreg(x.view(), &y, Penalty::L2, 1e6, &FitOptions::default()).unwrap();
        let s = m.decision_function(x.view()).unwrap();
        assert_eq!(auroc(&s, &y).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = array![[1.0], [2.0]];
        let opts = FitOptions::default();
        assert_eq!(fit_logreg(x.view(), &[1, 1], Penalty::L2, 1.0, &opts), Err(ModelError::SingleClass));
        assert_eq!(fit_logreg(x.view(), &[0, 1], Penalty::L2, 0.0, &opts), Err(ModelError::InvalidC(0.0)));
        let bad = array![[1.0], [f64::NAN]];
        assert_eq!(fit_logreg(bad.view(), &[0, 1], Penalty::L1, 1.0, &opts), Err(ModelError::NonFinite));
        let m = fit_logreg(x.view(), &[0, 1], Penalty::L2, 1.0, &opts).unwrap();
        assert!(matches!(
            m.predict_proba(array![[1.0, 2.0]].view()),
            Err(ModelError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn central_difference_gradient_check() {
        // Oracle: central differences of the objective, step 1e-5.
        let (x, y) = random_problem(3, 50, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let w: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = rng.random_range(-1.0..1.0);
            let c = 0.7;
            let (gw, gb) = objective_gradient(x.view(), &y, &w, b, c);
            let h = 1e-5;
            for j in 0..=5 {
                let shifted = |delta: f64| {
                    let mut w2 = w.clone();
                    let mut b2 = b;
                    if j < 5 {
                        w2[j] += delta;
                    } else {
                        b2 += delta;
                    }
                    objective(x.view(), &y, &w2, b2, Penalty::L2, c)
                };
                let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                let an = if j < 5 { gw[j] } else { gb };
                let rel = (fd - an).abs() / an.abs().max(1e-8);
                assert!(rel <= 1e-5, "coordinate {j}: fd={fd} analytic={an}");
            }
        }
    }

    #[test]
    fn l2_objective_never_increases() {
        let (x, y) = random_problem(5, 80, 4);
        for c in [1e-3, 1.0, 1e4] {
            let (m, history) = fit_logreg_traced(x.view(), &y, Penalty::L2, c, &FitOptions::default()).unwrap();
            assert!(m.converged);
            for pair in history.windows(2) {
                assert!(pair[1] <= pair[0], "{pair:?}");
            }
        }
    }

    #[test]
    fn l2_solution_has_vanishing_gradient() {
        let (x, y) = random_problem(6, 60, 3);
        let opts = FitOptions { tol: 1e-14, max_iter: 100 };
        let m = fit_logreg(x.view(), &y, Penalty::L2, 2.0, &opts).unwrap();
        let (gw, gb) = objective_gradient(x.view(), &y, &m.weights, m.intercept, 2.0);
        assert!(gw.iter().chain([gb].iter()).all(|g| g.abs() < 1e-8));
    }

    #[test]
    fn l1_objective_never_increases_and_sparsifies() {
        let (x, y) = random_problem(7, 100, 6);
        let (m, history) = fit_logreg_traced(x.view(), &y, Penalty::L1, 0.05, &FitOptions::default()).unwrap();
        for pair in history.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        assert!(m.weights[0] != 0.0);
        assert!(m.weights.iter().any(|w| *w == 0.0));
    }

    #[test]
    fn l1_matches_subgradient_optimality() {
        let (x, y) = random_problem(8, 120, 5);
        let c = 0.2;
        let opts = FitOptions { tol: 1e-13, max_iter: 500 };
        let m = fit_logreg(x.view(), &y, Penalty::L1, c, &opts).unwrap();
        let lambda = 1.0 / (c * 120.0);
        // Smooth gradient of the loss alone: take the L2 gradient with C -> inf.
        let (g, gb) = objective_gradient(x.view(), &y, &m.weights, m.intercept, f64::INFINITY);
        assert!(gb.abs() < 1e-6);
        for (wj, gj) in m.weights.iter().zip(&g) {
            if *wj == 0.0 {
                assert!(gj.abs() <= lambda + 1e-6);
            } else {
                assert!((gj + lambda * wj.signum()).abs() < 1e-5, "w={wj} g={gj}");
            }
        }
    }

    #[test]
    fn l1_vanishing_c_zeroes_every_weight() {
        let (x, y) = random_problem(9, 40, 4);
        for c in [1e-3, 1e-6, 1e-12] {
            let m = fit_logreg(x.view(), &y, Penalty::L1, c, &FitOptions::default()).unwrap();
            assert!(m.weights.iter().all(|w| *w == 0.0));
        }
    }

    #[test]
    fn lambda_max_closed_form_on_centered_feature() {
        let x = array![[-1.5], [-0.5], [0.5], [1.5]];
        let y = [0, 1, 0, 1];
        let lmax = l1_lambda_max(x.view(), &y).unwrap();
        // (1/n)|x'(y - ybar)| = |(-1.5)(-0.5) + (-0.5)(0.5) + (0.5)(-0.5) + 1.5(0.5)| / 4 = 0.25
        assert!((lmax - 0.25).abs() < 1e-9);
        let m = fit_l1_lambda(x.view(), &y, lmax, &FitOptions::default(), None).unwrap();
        assert_eq!(m.weights, vec![0.0]);
        let m = fit_l1_lambda(x.view(), &y, lmax * 0.5, &FitOptions::default(), None).unwrap();
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn probabilities_stay_open_and_monotone() {
        let m = LogRegModel {
            weights: vec![2.0],
            intercept: 0.0,
            penalty: Penalty::L2,
            c: 1.0,
            converged: true,
            n_iter: 0,
        };
        let x = array![[-500.0], [-1.0], [0.0], [1.0], [500.0]];
        let p = m.predict_proba(x.view()).unwrap();
        assert!(p.iter().all(|v| *v > 0.0 && *v < 1.0));
        assert!(p.windows(2).all(|w| w[0] <= w[1]));
    }
}
