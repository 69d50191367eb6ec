//! C-SVM trained with sequential minimal optimization.
//!
//! The dual `min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0` is solved with the
//! second-order working-set selection of Fan, Chen and Lin (the LIBSVM
//! scheme), without shrinking. Non-PSD kernels (sigmoid) are handled by
//! clamping the curvature of a pair to a small positive `TAU`.

use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::label::Label;

const TAU: f64 = 1e-12;

/// Above this many rows the kernel matrix is recomputed row by row instead
/// of being held in memory.
const FULL_MATRIX_LIMIT: usize = 6000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvmKernel {
    Linear,
    Poly,
    Rbf,
    Sigmoid,
}

impl SvmKernel {
    pub const ALL: [SvmKernel; 4] = [
        SvmKernel::Linear,
        SvmKernel::Poly,
        SvmKernel::Rbf,
        SvmKernel::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SvmKernel::Linear => "linear",
            SvmKernel::Poly => "poly",
            SvmKernel::Rbf => "rbf",
            SvmKernel::Sigmoid => "sigmoid",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: SvmKernel,
    pub c: f64,
    pub tolerance: f64,
    /// Iteration cap, in units of one pair update per training row.
    pub max_passes: usize,
    pub degree: i32,
    pub coef0: f64,
}

impl SvmParams {
    pub fn with_kernel(kernel: SvmKernel) -> Self {
        Self {
            kernel,
            c: 1.0,
            tolerance: 1e-3,
            max_passes: 10_000,
            degree: 3,
            coef0: 0.0,
        }
    }
}

/// Kernel with its resolved scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kernel: SvmKernel,
    pub gamma: f64,
    pub degree: i32,
    pub coef0: f64,
}

impl KernelSpec {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kernel {
            SvmKernel::Linear => dot(a, b),
            SvmKernel::Poly => (self.gamma * dot(a, b) + self.coef0).powi(self.degree),
            SvmKernel::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-self.gamma * d2).exp()
            }
            SvmKernel::Sigmoid => (self.gamma * dot(a, b) + self.coef0).tanh(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `1 / (d * Var(X))` over every entry of the training matrix.
pub fn scale_gamma(rows: &[Vec<f64>]) -> f64 {
    let d = rows.first().map_or(1, Vec::len).max(1);
    let n = (rows.len() * d) as f64;
    if n == 0.0 {
        return 1.0;
    }
    let mean = rows.iter().flatten().sum::<f64>() / n;
    let var = rows.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

/// Final state of the dual solver.
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub gradient: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `m(a) - M(a)`, the maximal KKT violation at exit.
    pub violation: f64,
}

enum KernelRows<'a> {
    Full(Vec<f64>),
    Lazy {
        rows: &'a [Vec<f64>],
        spec: KernelSpec,
        buf: Vec<f64>,
    },
}

impl KernelRows<'_> {
    fn row(&mut self, i: usize, n: usize) -> &[f64] {
        match self {
            KernelRows::Full(m) => &m[i * n..(i + 1) * n],
            KernelRows::Lazy { rows, spec, buf } => {
                buf.clear();
                buf.extend(rows.iter().map(|r| spec.eval(&rows[i], r)));
                buf
            }
        }
    }
}

/// Solves the C-SVM dual for labels `y` in {-1, +1}.
pub fn solve_dual(
    rows: &[Vec<f64>],
    y: &[f64],
    spec: KernelSpec,
    c: f64,
    tol: f64,
    max_iter: usize,
) -> DualSolution {
    let n = rows.len();
    let diag: Vec<f64> = rows.iter().map(|r| spec.eval(r, r)).collect();
    let mut kernel = if n <= FULL_MATRIX_LIMIT {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = spec.eval(&rows[i], &rows[j]);
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        KernelRows::Full(m)
    } else {
        KernelRows::Lazy {
            rows,
            spec,
            buf: Vec::with_capacity(n),
        }
    };

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    let mut violation = f64::INFINITY;
    let mut row_i = vec![0.0; n];

    while iterations < max_iter {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = if y[t] > 0.0 {
                !upper(alpha[t])
            } else {
                !lower(alpha[t])
            };
            if in_up && v >= gmax {
                gmax = v;
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            violation = 0.0;
            break;
        };
        row_i.copy_from_slice(kernel.row(i, n));

        // j: second-order choice in I_low
        let mut gmin = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            let in_low = if y[t] > 0.0 {
                !lower(alpha[t])
            } else {
                !upper(alpha[t])
            };
            if !in_low {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let a = diag[i] + diag[t] - 2.0 * row_i[t];
                let a = if a > 0.0 { a } else { TAU };
                let obj = -(b * b) / a;
                if obj <= best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        violation = gmax - gmin;
        let Some(j) = j_sel.filter(|_| violation >= tol) else {
            converged = true;
            break;
        };
        iterations += 1;

        let row_j = kernel.row(j, n);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * row_i[j];
        if y[i] != y[j] {
            let quad = diag[i] + diag[j] + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = diag[i] + diag[j] - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for k in 0..n {
            // Q_ik = y_i y_k K_ik
            grad[k] += y[k] * (y[i] * row_i[k] * di + y[j] * row_j[k] * dj);
        }
    }

    let rho = compute_rho(&alpha, &grad, y, c);
    DualSolution {
        alpha,
        gradient: grad,
        rho,
        iterations,
        converged,
        violation,
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    pub fn fit(data: &LabeledDataset, params: &SvmParams) -> Self {
        let spec = KernelSpec {
            kernel: params.kernel,
            gamma: scale_gamma(data.rows()),
            degree: params.degree,
            coef0: params.coef0,
        };
        let y: Vec<f64> = data.labels().iter().map(|l| l.sign()).collect();
        let max_iter = params.max_passes.saturating_mul(data.len().max(1));
        let sol = solve_dual(
            data.rows(),
            &y,
            spec,
            params.c,
            params.tolerance,
            max_iter,
        );
        let mut support_vectors = Vec::new();
        let mut coefficients = Vec::new();
        for (t, &a) in sol.alpha.iter().enumerate() {
            if a > 0.0 {
                support_vectors.push(data.row(t).to_vec());
                coefficients.push(a * y[t]);
            }
        }
        Self {
            kernel: spec,
            support_vectors,
            coefficients,
            rho: sol.rho,
            iterations: sol.iterations,
            converged: sol.converged,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            - self.rho
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        if self.decision(x) > 0.0 {
            Label::Deepfake3
        } else {
            Label::Deepfake2
        }
    }
}
