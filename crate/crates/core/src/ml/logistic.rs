use serde::{Deserialize, Serialize};

use crate::matrix::{dot, Matrix};

const GRAD_TOL: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Objective value before the first step and after every accepted step.
    pub loss_trace: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean log-loss plus `|w|^2 / (2 C n)`; the bias is not penalized.
pub fn logistic_objective(x: &Matrix, y: &[u8], w: &[f64], b: f64, c: f64) -> f64 {
    let n = x.rows() as f64;
    let data: f64 = x
        .iter_rows()
        .zip(y)
        .map(|(row, &yi)| {
            let z = dot(row, w) + b;
            softplus(z) - f64::from(yi) * z
        })
        .sum();
    data / n + dot(w, w) / (2.0 * c * n)
}

/// Gradient of [`logistic_objective`]: `(d/dw, d/db)`.
pub fn logistic_gradient(x: &Matrix, y: &[u8], w: &[f64], b: f64, c: f64) -> (Vec<f64>, f64) {
    let n = x.rows() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (row, &yi) in x.iter_rows().zip(y) {
        let r = sigmoid(dot(row, w) + b) - f64::from(yi);
        for (g, v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
        gb += r;
    }
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = *g / n + wi / (c * n);
    }
    (gw, gb / n)
}

impl LogisticModel {
    /// Batch gradient descent with Armijo backtracking from `w = 0, b = 0`.
    pub fn fit(x: &Matrix, y: &[u8], c: f64, max_iter: usize) -> Self {
        let mut w = vec![0.0; x.cols()];
        let mut b = 0.0;
        let mut loss = logistic_objective(x, y, &w, b, c);
        let mut trace = vec![loss];
        let mut step: f64 = 1.0;
        let mut iterations = 0;
        while iterations < max_iter {
            let (gw, gb) = logistic_gradient(x, y, &w, b, c);
            let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
            if gmax < GRAD_TOL {
                break;
            }
            let gnorm2 = dot(&gw, &gw) + gb * gb;
            // Let the step grow back after earlier shrinking.
            step = (step * 2.0).min(1e6);
            let accepted = loop {
                let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(wi, g)| wi - step * g).collect();
                let cand_b = b - step * gb;
                let cand = logistic_objective(x, y, &cand_w, cand_b, c);
                if cand <= loss - ARMIJO * step * gnorm2 {
                    break Some((cand_w, cand_b, cand));
                }
                step *= 0.5;
                if step < MIN_STEP {
                    break None;
                }
            };
            iterations += 1;
            match accepted {
                Some((nw, nb, nl)) => {
                    w = nw;
                    b = nb;
                    loss = nl;
                    trace.push(loss);
                }
                None => break,
            }
        }
        LogisticModel {
            weights: w,
            bias: b,
            iterations,
            loss_trace: trace,
        }
    }

    /// Label 1 iff `sigmoid(w.x + b) >= 0.5`.
    pub fn predict(&self, x: &Matrix) -> Vec<u8> {
        x.iter_rows()
            .map(|row| u8::from(sigmoid(dot(row, &self.weights) + self.bias) >= 0.5))
            .collect()
    }
}
