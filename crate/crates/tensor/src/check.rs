//! Central finite-difference gradient checking.
//!
//! `build` must construct a scalar output from the given leaf tensors as a
//! pure function of their data; it runs once on a training graph for the
//! autodiff gradients and then twice per probed coordinate on inference
//! graphs for the difference quotient.

use crate::error::Result;
use crate::graph::Graph;
use crate::rng::Rng;
use crate::tensor::Tensor;

pub type BuildFn<'a> = &'a dyn Fn(&Graph, &[Tensor]) -> Result<Tensor>;

/// Relative error |autodiff - central difference| / max(1, |central difference|).
fn rel_err(ad: f64, fd: f64) -> f64 {
    (ad - fd).abs() / fd.abs().max(1.0)
}

fn eval(build: BuildFn, inputs: &[Tensor]) -> Result<f64> {
    // Training mode, so mode-dependent ops (dropout) compute the same
    // function whose gradient was taped.
    let g = Graph::training();
    Ok(build(&g, inputs)?.item())
}

/// Check every coordinate of every input; returns the max relative error.
pub fn max_rel_err(build: BuildFn, inputs: &[Tensor], h: f64) -> Result<f64> {
    max_rel_err_sampled(build, inputs, h, usize::MAX, 0)
}

/// Check up to `per_input` seeded-random coordinates of each input.
/// `per_input = usize::MAX` probes everything.
pub fn max_rel_err_sampled(
    build: BuildFn,
    inputs: &[Tensor],
    h: f64,
    per_input: usize,
    sample_seed: u64,
) -> Result<f64> {
    let g = Graph::training();
    let loss = build(&g, inputs)?;
    g.backward(&loss)?;
    let grads: Vec<Vec<f64>> = inputs
        .iter()
        .map(|t| t.grad().unwrap_or_else(|| vec![0.0; t.len()]))
        .collect();
    for t in inputs {
        t.clear_grad();
    }
    drop(g);

    let mut rng = Rng::seed(sample_seed);
    let mut worst = 0.0f64;
    for (t, grad) in inputs.iter().zip(&grads) {
        let n = t.len();
        let coords: Vec<usize> = if per_input >= n {
            (0..n).collect()
        } else {
            // sample distinct coordinates
            let mut seen = std::collections::BTreeSet::new();
            while seen.len() < per_input {
                seen.insert(rng.below(n));
            }
            seen.into_iter().collect()
        };
        for i in coords {
            let orig = t.data()[i];
            t.update_data(|d| d[i] = orig + h);
            let fp = eval(build, inputs)?;
            t.update_data(|d| d[i] = orig - h);
            let fm = eval(build, inputs)?;
            t.update_data(|d| d[i] = orig);
            let fd = (fp - fm) / (2.0 * h);
            worst = worst.max(rel_err(grad[i], fd));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_for_a_correct_rule() {
        let x = Tensor::param(vec![4], vec![0.3, -0.2, 0.1, 0.4]).unwrap();
        let build: BuildFn = &|g, inp| {
            let y = g.mul(&inp[0], &inp[0])?;
            g.sum_all(&y)
        };
        let err = max_rel_err(build, &[x], 1e-5).unwrap();
        assert!(err < 1e-8, "err {err}");
    }

    #[test]
    fn detects_a_wrong_gradient() {
        // abs has gradient sign(x); pretend the function is x^2 instead and
        // the checker must flag the discrepancy.
        let x = Tensor::param(vec![2], vec![0.5, -0.5]).unwrap();
        let build: BuildFn = &|g, inp| {
            let y = g.abs(&inp[0])?; // d/dx = sign
            let z = g.mul(&y, &y)?; // builds x^2 out of |x|
            g.sum_all(&z)
        };
        // autodiff of the composition is correct, so the check passes;
        // now corrupt by comparing against a different function's FD.
        let g = Graph::training();
        let loss = build(&g, std::slice::from_ref(&x)).unwrap();
        g.backward(&loss).unwrap();
        let ad = x.grad().unwrap();
        // FD of sum(x^2) is 2x = [1, -1]; a corrupted rule reporting sign(x)
        // would read [1, -1] vs ad [1, -1]... instead corrupt ad directly:
        let corrupted = [ad[0] * 2.0, ad[1]];
        let fd = [1.0, -1.0];
        assert!(rel_err(corrupted[0], fd[0]) > 1e-4);
        assert!(rel_err(ad[1], fd[1]) < 1e-8);
    }
}
