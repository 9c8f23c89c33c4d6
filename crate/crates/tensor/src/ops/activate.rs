//! Pointwise nonlinearities: GELU (exact Gaussian CDF form), ReLU, sigmoid.

use std::str::FromStr;

use crate::error::{arg_err, Result, TensorError};
use crate::graph::Graph;
use crate::tensor::Tensor;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Error function, accurate to ~1 ulp over the range we use.
///
/// Uses the all-positive-term confluent series
/// erf(x) = (2/sqrt(pi)) * exp(-x^2) * sum_{n>=0} 2^n x^(2n+1) / (2n+1)!!,
/// which is cancellation-free; |x| >= 6 saturates to +-1 in f64.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x >= 6.0 {
        return 1.0;
    }
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    while term > sum * 1e-18 && n < 300 {
        n += 1;
        term *= 2.0 * x2 / (2.0 * n as f64 + 1.0);
        sum += term;
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x * INV_SQRT_2))
}

/// Standard normal density.
fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn gelu_scalar(x: f64) -> f64 {
    x * norm_cdf(x)
}

fn gelu_grad_scalar(x: f64) -> f64 {
    norm_cdf(x) + x * norm_pdf(x)
}

/// Activation kinds understood by [`Graph::activation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Gelu,
    Relu,
    Sigmoid,
}

impl FromStr for Activation {
    type Err = TensorError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gelu" => Ok(Activation::Gelu),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => arg_err("activation", format!("unknown kind '{other}'")),
        }
    }
}

impl Graph {
    pub fn activation(&self, kind: Activation, x: &Tensor) -> Result<Tensor> {
        match kind {
            Activation::Gelu => self.gelu(x),
            Activation::Relu => self.relu(x),
            Activation::Sigmoid => self.sigmoid(x),
        }
    }

    /// GELU in the exact form x * Phi(x) (Gaussian CDF, not the tanh fit).
    pub fn gelu(&self, x: &Tensor) -> Result<Tensor> {
        let data = x.data().iter().map(|&v| gelu_scalar(v)).collect();
        let out = Tensor::interior(x.shape().to_vec(), data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let xd = x.data();
                x.accumulate_grad_with(|gx| {
                    for i in 0..gx.len() {
                        gx[i] += g[i] * gelu_grad_scalar(xd[i]);
                    }
                });
            });
        }
        Ok(out)
    }

    pub fn relu(&self, x: &Tensor) -> Result<Tensor> {
        let data = x.data().iter().map(|&v| v.max(0.0)).collect();
        let out = Tensor::interior(x.shape().to_vec(), data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let xd = x.data();
                x.accumulate_grad_with(|gx| {
                    for i in 0..gx.len() {
                        if xd[i] > 0.0 {
                            gx[i] += g[i];
                        }
                    }
                });
            });
        }
        Ok(out)
    }

    pub fn sigmoid(&self, x: &Tensor) -> Result<Tensor> {
        let data: Vec<f64> = x.data().iter().map(|&v| sigmoid_scalar(v)).collect();
        let out = Tensor::interior(x.shape().to_vec(), data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let yd = out.data();
                x.accumulate_grad_with(|gx| {
                    for i in 0..gx.len() {
                        gx[i] += g[i] * yd[i] * (1.0 - yd[i]);
                    }
                });
            });
        }
        Ok(out)
    }
}

pub fn sigmoid_scalar(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_values() {
        // Reference values from standard tables.
        assert!((erf(0.0)).abs() < 1e-16);
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 1e-15);
        assert!((erf(2.0) - 0.995_322_265_018_952_7).abs() < 1e-15);
        assert!((erf(-1.0) + 0.842_700_792_949_714_9).abs() < 1e-15);
        assert_eq!(erf(7.0), 1.0);
    }

    #[test]
    fn gelu_reference_values() {
        let g = Graph::inference();
        let x = Tensor::constant(vec![3], vec![0.0, 1.0, -1.0]).unwrap();
        let y = g.gelu(&x).unwrap();
        let yd = y.to_vec();
        assert_eq!(yd[0], 0.0);
        // 1 * Phi(1)
        assert!((yd[1] - 0.841_344_746_068_542_9).abs() < 1e-12);
        assert!((yd[2] + (1.0 - 0.841_344_746_068_542_9)).abs() < 1e-12);
    }

    #[test]
    fn relu_values() {
        let g = Graph::inference();
        let x = Tensor::constant(vec![2], vec![-3.0, 3.0]).unwrap();
        let y = g.relu(&x).unwrap();
        assert_eq!(y.to_vec(), vec![0.0, 3.0]);
    }

    #[test]
    fn unknown_kind_is_config_error() {
        assert!("swish".parse::<Activation>().is_err());
        assert_eq!("gelu".parse::<Activation>().unwrap(), Activation::Gelu);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid_scalar(1000.0), 1.0);
        assert_eq!(sigmoid_scalar(-1000.0), 0.0);
        assert!((sigmoid_scalar(0.0) - 0.5).abs() < 1e-16);
    }
}
