//! Penalized generalized linear models fitted by damped Newton iterations.
//!
//! Objectives are the mean negative log-likelihood over rows plus
//! `lambda / 2 * sum w_k^2` over the penalized coefficients. Every fit is
//! full-batch and deterministic.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite design entry {v}")));
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: indices.len(), cols: self.cols, data }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub max_iterations: usize,
    /// Stop once the gradient's Euclidean norm drops below this.
    pub tolerance: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { max_iterations: 100, tolerance: 1e-10 }
    }
}

/// A smooth convex objective with an analytic Hessian.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> f64;
    fn gradient_hessian(&self, w: &[f64]) -> (DVector<f64>, DMatrix<f64>);
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonFit {
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Objective value at the start and after every accepted step.
    pub objective_trace: Vec<f64>,
}

fn newton_direction(gradient: &DVector<f64>, mut hessian: DMatrix<f64>) -> Result<DVector<f64>> {
    let scale = hessian.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut jitter = 0.0;
    for _ in 0..20 {
        if let Some(chol) = hessian.clone().cholesky() {
            return Ok(-chol.solve(gradient));
        }
        jitter = if jitter == 0.0 { scale * 1e-12 } else { jitter * 100.0 };
        for k in 0..hessian.nrows() {
            hessian[(k, k)] += jitter;
        }
    }
    Err(Error::numerical("Hessian is not positive definite"))
}

/// Damped Newton with backtracking; the objective never increases. Also
/// stops, as converged, once the Newton decrement falls below the
/// floating-point resolution of the objective.
pub fn minimize<O: Objective>(objective: &O, init: Vec<f64>, cfg: &NewtonConfig) -> Result<NewtonFit> {
    if init.len() != objective.dim() {
        return Err(Error::DimensionMismatch { expected: objective.dim(), got: init.len() });
    }
    let mut w = init;
    let mut f = objective.value(&w);
    if !f.is_finite() {
        return Err(Error::numerical("objective not finite at starting point"));
    }
    let mut trace = vec![f];
    let mut gradient_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        let (g, h) = objective.gradient_hessian(&w);
        gradient_norm = g.norm();
        if !gradient_norm.is_finite() {
            return Err(Error::numerical("gradient not finite"));
        }
        if gradient_norm < cfg.tolerance {
            converged = true;
            break;
        }
        let step = newton_direction(&g, h)?;
        let slope = g.dot(&step);
        // Predicted decrease is below the resolution of f: one last full
        // step polishes the gradient, then stop.
        if -0.5 * slope <= f64::EPSILON * f.abs().max(1.0) {
            let candidate: Vec<f64> = w.iter().zip(step.iter()).map(|(wi, si)| wi + si).collect();
            let fc = objective.value(&candidate);
            if fc <= f {
                w = candidate;
                f = fc;
                trace.push(f);
            }
            iterations += 1;
            converged = true;
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let candidate: Vec<f64> = w.iter().zip(step.iter()).map(|(wi, si)| wi + t * si).collect();
            let fc = objective.value(&candidate);
            if fc.is_finite() && fc < f && fc <= f + 1e-4 * t * slope {
                accepted = Some((candidate, fc));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((candidate, fc)) => {
                w = candidate;
                f = fc;
                trace.push(f);
            }
            // No decrease is representable: we are at the floating-point floor.
            None => break,
        }
    }
    if !converged {
        let (g, _) = objective.gradient_hessian(&w);
        gradient_norm = g.norm();
        converged = gradient_norm < cfg.tolerance;
    }
    Ok(NewtonFit { weights: w, iterations, converged, gradient_norm, objective_trace: trace })
}

fn check_penalty(lambda: f64, penalized: &[bool], cols: usize) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("ridge penalty {lambda} must be finite and non-negative")));
    }
    if penalized.len() != cols {
        return Err(Error::DimensionMismatch { expected: cols, got: penalized.len() });
    }
    Ok(())
}

/// Ridge-penalized binomial regression: `successes_i ~ Bin(trials_i, sigmoid(x_i . w))`.
pub struct BinomialProblem<'a> {
    design: &'a Design,
    successes: &'a [f64],
    trials: &'a [f64],
    penalized: &'a [bool],
    lambda: f64,
}

impl<'a> BinomialProblem<'a> {
    pub fn new(
        design: &'a Design,
        successes: &'a [f64],
        trials: &'a [f64],
        penalized: &'a [bool],
        lambda: f64,
    ) -> Result<Self> {
        let n = design.rows();
        if n == 0 {
            return Err(Error::invalid("no rows to fit"));
        }
        if successes.len() != n || trials.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: successes.len().min(trials.len()) });
        }
        for (s, t) in successes.iter().zip(trials) {
            if !(s.is_finite() && t.is_finite()) || *s < 0.0 || s > t {
                return Err(Error::invalid(format!("invalid binomial outcome {s} of {t}")));
            }
        }
        check_penalty(lambda, penalized, design.cols())?;
        Ok(Self { design, successes, trials, penalized, lambda })
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        0.5 * self.lambda * w.iter().zip(self.penalized).filter(|(_, p)| **p).map(|(v, _)| v * v).sum::<f64>()
    }

    /// Mean negative log-likelihood (without the binomial coefficient).
    pub fn mean_nll(&self, w: &[f64]) -> f64 {
        binomial_nll(self.design, self.successes, self.trials, w)
    }
}

/// Mean binomial negative log-likelihood of `w` on the given rows.
pub fn binomial_nll(design: &Design, successes: &[f64], trials: &[f64], w: &[f64]) -> f64 {
    let n = design.rows();
    let mut total = 0.0;
    for i in 0..n {
        let eta = dot(design.row(i), w);
        total += trials[i] * log1p_exp(eta) - successes[i] * eta;
    }
    total / n as f64
}

impl Objective for BinomialProblem<'_> {
    fn dim(&self) -> usize {
        self.design.cols()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.mean_nll(w) + self.penalty(w)
    }

    fn gradient_hessian(&self, w: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (n, p) = (self.design.rows(), self.design.cols());
        let mut g = DVector::zeros(p);
        let mut h = DMatrix::zeros(p, p);
        for i in 0..n {
            let x = self.design.row(i);
            let mu = sigmoid(dot(x, w));
            let r = self.trials[i] * mu - self.successes[i];
            let v = self.trials[i] * mu * (1.0 - mu);
            for a in 0..p {
                if x[a] == 0.0 {
                    continue;
                }
                g[a] += r * x[a];
                let va = v * x[a];
                for b in a..p {
                    h[(a, b)] += va * x[b];
                }
            }
        }
        let inv_n = 1.0 / n as f64;
        for a in 0..p {
            g[a] *= inv_n;
            for b in a..p {
                h[(a, b)] *= inv_n;
                h[(b, a)] = h[(a, b)];
            }
            if self.penalized[a] {
                g[a] += self.lambda * w[a];
                h[(a, a)] += self.lambda;
            }
        }
        (g, h)
    }
}

/// Ridge-penalized multinomial regression with one reference class.
///
/// `counts` holds one row of per-class counts per observation; the number of
/// trials is the row sum. Parameters are stacked per non-reference class.
pub struct MultinomialProblem<'a> {
    design: &'a Design,
    counts: &'a [Vec<f64>],
    classes: usize,
    reference: usize,
    penalized: &'a [bool],
    lambda: f64,
}

impl<'a> MultinomialProblem<'a> {
    pub fn new(
        design: &'a Design,
        counts: &'a [Vec<f64>],
        classes: usize,
        reference: usize,
        penalized: &'a [bool],
        lambda: f64,
    ) -> Result<Self> {
        let n = design.rows();
        if n == 0 {
            return Err(Error::invalid("no rows to fit"));
        }
        if classes < 2 || reference >= classes {
            return Err(Error::invalid("multinomial needs >= 2 classes and a valid reference"));
        }
        if counts.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: counts.len() });
        }
        for row in counts {
            if row.len() != classes {
                return Err(Error::DimensionMismatch { expected: classes, got: row.len() });
            }
            if row.iter().any(|c| !c.is_finite() || *c < 0.0) {
                return Err(Error::invalid("multinomial counts must be finite and non-negative"));
            }
        }
        check_penalty(lambda, penalized, design.cols())?;
        Ok(Self { design, counts, classes, reference, penalized, lambda })
    }

    /// Index of class `k`'s block in the stacked parameter vector.
    fn block(&self, k: usize) -> Option<usize> {
        match k.cmp(&self.reference) {
            std::cmp::Ordering::Less => Some(k),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(k - 1),
        }
    }

    pub fn mean_nll(&self, w: &[f64]) -> f64 {
        multinomial_nll(self.design, self.counts, self.classes, self.reference, w)
    }
}

/// Class probabilities for one row under stacked parameters `w`.
pub fn softmax_row(x: &[f64], w: &[f64], classes: usize, reference: usize) -> Vec<f64> {
    let p = x.len();
    let mut eta = vec![0.0; classes];
    let mut block = 0;
    for (k, e) in eta.iter_mut().enumerate() {
        if k == reference {
            continue;
        }
        *e = dot(x, &w[block * p..(block + 1) * p]);
        block += 1;
    }
    let max = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = eta.iter().map(|e| (e - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|v| *v /= total);
    probs
}

pub fn multinomial_nll(design: &Design, counts: &[Vec<f64>], classes: usize, reference: usize, w: &[f64]) -> f64 {
    let n = design.rows();
    let mut total = 0.0;
    for i in 0..n {
        let probs = softmax_row(design.row(i), w, classes, reference);
        for (c, p) in counts[i].iter().zip(&probs) {
            if *c > 0.0 {
                total -= c * p.ln();
            }
        }
    }
    total / n as f64
}

impl Objective for MultinomialProblem<'_> {
    fn dim(&self) -> usize {
        self.design.cols() * (self.classes - 1)
    }

    fn value(&self, w: &[f64]) -> f64 {
        let p = self.design.cols();
        let mut penalty = 0.0;
        for (k, v) in w.iter().enumerate() {
            if self.penalized[k % p] {
                penalty += v * v;
            }
        }
        self.mean_nll(w) + 0.5 * self.lambda * penalty
    }

    fn gradient_hessian(&self, w: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (n, p) = (self.design.rows(), self.design.cols());
        let free = self.classes - 1;
        let dim = p * free;
        let mut g = DVector::zeros(dim);
        let mut h = DMatrix::zeros(dim, dim);
        // Only the upper triangle is accumulated, then mirrored.
        for i in 0..n {
            let x = self.design.row(i);
            let probs = softmax_row(x, w, self.classes, self.reference);
            let trials: f64 = self.counts[i].iter().sum();
            for ka in 0..self.classes {
                let Some(ba) = self.block(ka) else { continue };
                let r = trials * probs[ka] - self.counts[i][ka];
                for a in 0..p {
                    g[ba * p + a] += r * x[a];
                }
                for kb in ka..self.classes {
                    let Some(bb) = self.block(kb) else { continue };
                    let diag = if ka == kb { probs[ka] } else { 0.0 };
                    let weight = trials * (diag - probs[ka] * probs[kb]);
                    for a in 0..p {
                        let wa = weight * x[a];
                        if wa == 0.0 {
                            continue;
                        }
                        let start = if ba == bb { a } else { 0 };
                        for b in start..p {
                            h[(ba * p + a, bb * p + b)] += wa * x[b];
                        }
                    }
                }
            }
        }
        let inv_n = 1.0 / n as f64;
        g *= inv_n;
        h *= inv_n;
        for r in 0..dim {
            for c in (r + 1)..dim {
                h[(c, r)] = h[(r, c)];
            }
        }
        for k in 0..dim {
            if self.penalized[k % p] {
                g[k] += self.lambda * w[k];
                h[(k, k)] += self.lambda;
            }
        }
        (g, h)
    }
}
