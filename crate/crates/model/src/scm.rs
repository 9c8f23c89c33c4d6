//! Spectral Coordinate Mixing: expansion of a channel descriptor into a
//! sparse interaction matrix, norm-ranked column selection, and the
//! accept-or-hold traversal that rebuilds the channel state.

use cofusion_tensor::{rank_descending, Graph, Tensor};

use crate::error::{ModelError, Result};

/// Entries with |value| below this threshold are clamped to exactly zero,
/// so the traversal's hold branch is reachable.
pub const SCM_TAU: f64 = 1e-3;

/// M = (W1 z)(W2 z)^T + diag(W3 z), hard-thresholded at tau.
pub fn scm_expand(
    g: &Graph,
    w1: &Tensor,
    w2: &Tensor,
    w3: &Tensor,
    z_in: &Tensor,
    tau: f64,
) -> Result<Tensor> {
    let n = z_in.len();
    let zero_bias = Tensor::zeros(vec![n]);
    let u = g.linear(z_in, w1, &zero_bias)?;
    let v = g.linear(z_in, w2, &zero_bias)?;
    let dv = g.linear(z_in, w3, &zero_bias)?;
    let full = g.add(&g.outer(&u, &v)?, &g.diag_embed(&dv)?)?;
    Ok(g.zero_small(&full, tau)?)
}

/// Keep the K columns with the largest L2 norms, in descending norm order
/// (ties to the lower column index). Selection is discrete; gradient flows
/// through the gathered columns.
pub fn scm_topk_select(g: &Graph, m: &Tensor, k: usize) -> Result<Tensor> {
    if m.ndim() != 2 {
        return Err(ModelError::Shape(format!(
            "interaction matrix must be 2-d, got {:?}",
            m.shape()
        )));
    }
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    if k == 0 || k > cols {
        return Err(ModelError::Config(format!("K={k} out of range 1..={cols}")));
    }
    let md = m.data();
    let mut norms = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            let v = md[r * cols + c];
            norms[c] += v * v;
        }
    }
    for n in norms.iter_mut() {
        *n = n.sqrt();
    }
    drop(md);
    let indices: Vec<usize> = rank_descending(&norms).into_iter().take(k).collect();
    Ok(g.select_columns(m, &indices)?)
}

/// Left-to-right coordinate traversal: starting from z0, column k
/// overwrites channel c whenever M[c,k] is nonzero, otherwise the previous
/// state is held. Gradient flows to the surviving M entry per channel, or
/// to z0 where no column ever fired.
pub fn scm_traverse(g: &Graph, m: &Tensor, z0: &Tensor) -> Result<Tensor> {
    if m.ndim() != 2 || z0.ndim() != 1 || m.shape()[0] != z0.len() {
        return Err(ModelError::Shape(format!(
            "traverse expects [C,K] and [C], got {:?} and {:?}",
            m.shape(),
            z0.shape()
        )));
    }
    let (c, k) = (m.shape()[0], m.shape()[1]);
    let md = m.data();
    let z0d = z0.data();
    let mut out = z0d.clone();
    let mut source: Vec<Option<usize>> = vec![None; c];
    for col in 0..k {
        for ch in 0..c {
            let v = md[ch * k + col];
            if v != 0.0 {
                out[ch] = v;
                source[ch] = Some(col);
            }
        }
    }
    drop(md);
    drop(z0d);

    let out_t = Tensor::interior(vec![c], out);
    if g.is_training() {
        let (m, z0, out_c) = (m.clone(), z0.clone(), out_t.clone());
        g.record(vec![out_t.clone()], move || {
            let Some(grad) = out_c.grad_ref() else { return };
            for ch in 0..c {
                match source[ch] {
                    Some(col) => m.accumulate_grad_with(|gm| gm[ch * k + col] += grad[ch]),
                    None => z0.accumulate_grad_with(|gz| gz[ch] += grad[ch]),
                }
            }
        });
    }
    Ok(out_t)
}

/// Straight two-loop simulation of the traversal on plain slices; the
/// independent oracle the tensor path is checked against.
pub fn traverse_oracle(m: &[f64], c: usize, k: usize, z0: &[f64]) -> Vec<f64> {
    let mut z = z0.to_vec();
    for col in 0..k {
        for ch in 0..c {
            let v = m[ch * k + col];
            if v != 0.0 {
                z[ch] = v;
            }
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use cofusion_tensor::Rng;

    #[test]
    fn expand_of_zero_is_zero_matrix() {
        let g = Graph::inference();
        let w = Tensor::constant(vec![3, 3], vec![0.5; 9]).unwrap();
        let z = Tensor::zeros(vec![3]);
        let m = scm_expand(&g, &w, &w, &w, &z, SCM_TAU).unwrap();
        assert!(m.to_vec().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn expand_identity_outer_product() {
        // W1=W2=I, W3=0, z=[1,2] -> [[1,2],[2,4]]
        let g = Graph::inference();
        let eye = Tensor::constant(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let zero = Tensor::zeros(vec![2, 2]);
        let z = Tensor::constant(vec![2], vec![1.0, 2.0]).unwrap();
        let m = scm_expand(&g, &eye, &eye, &zero, &z, SCM_TAU).unwrap();
        assert_eq!(m.to_vec(), vec![1.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn expand_clamps_small_magnitudes_to_exact_zero() {
        let g = Graph::inference();
        // u v^T with u=[1e-4, 1], v=[1, 1] -> row0 entries 1e-4 clamped
        let w1 = Tensor::constant(vec![2, 2], vec![1e-4, 0.0, 0.0, 1.0]).unwrap();
        let w2 = Tensor::constant(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let zero = Tensor::zeros(vec![2, 2]);
        let z = Tensor::constant(vec![2], vec![1.0, 1.0]).unwrap();
        let m = scm_expand(&g, &w1, &w2, &zero, &z, SCM_TAU).unwrap();
        assert_eq!(m.to_vec()[0], 0.0);
        assert_eq!(m.to_vec()[1], 0.0);
        assert_eq!(m.to_vec()[2], 1.0);
    }

    #[test]
    fn select_full_k_is_a_norm_permutation() {
        let g = Graph::inference();
        let m = Tensor::constant(
            vec![2, 3],
            vec![0.1, 3.0, 1.0, 0.1, 4.0, 1.0], // norms: ~0.14, 5, ~1.41
        )
        .unwrap();
        let sel = scm_topk_select(&g, &m, 3).unwrap();
        assert_eq!(sel.to_vec(), vec![3.0, 1.0, 0.1, 4.0, 1.0, 0.1]);
    }

    #[test]
    fn select_single_nonzero_column() {
        let g = Graph::inference();
        let m = Tensor::constant(vec![3, 3], vec![0.0, 2.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.5, 0.0])
            .unwrap();
        let sel = scm_topk_select(&g, &m, 1).unwrap();
        assert_eq!(sel.to_vec(), vec![2.0, -1.0, 0.5]);
    }

    #[test]
    fn select_matches_full_sort_oracle() {
        let g = Graph::inference();
        let mut rng = Rng::seed(16);
        let data: Vec<f64> = (0..16 * 16).map(|_| rng.range(-1.0, 1.0)).collect();
        let m = Tensor::constant(vec![16, 16], data.clone()).unwrap();
        let sel = scm_topk_select(&g, &m, 4).unwrap();
        // oracle: sort all columns by norm descending
        let mut norms: Vec<(usize, f64)> = (0..16)
            .map(|c| {
                let n = (0..16).map(|r| data[r * 16 + c].powi(2)).sum::<f64>().sqrt();
                (c, n)
            })
            .collect();
        norms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for (j, &(src, _)) in norms[..4].iter().enumerate() {
            for r in 0..16 {
                assert_eq!(sel.to_vec()[r * 4 + j], data[r * 16 + src]);
            }
        }
    }

    #[test]
    fn traverse_all_zero_passes_initial_state() {
        let g = Graph::inference();
        let m = Tensor::zeros(vec![3, 2]);
        let z0 = Tensor::constant(vec![3], vec![5.0, 6.0, 7.0]).unwrap();
        let z = scm_traverse(&g, &m, &z0).unwrap();
        assert_eq!(z.to_vec(), vec![5.0, 6.0, 7.0]);
    }

    #[test]
    fn traverse_left_to_right_overwrites() {
        // z0=[5,5,5], M=[[1,0],[0,2],[3,0]] -> [1,2,3]
        let g = Graph::inference();
        let m = Tensor::constant(vec![3, 2], vec![1.0, 0.0, 0.0, 2.0, 3.0, 0.0]).unwrap();
        let z0 = Tensor::constant(vec![3], vec![5.0, 5.0, 5.0]).unwrap();
        let z = scm_traverse(&g, &m, &z0).unwrap();
        assert_eq!(z.to_vec(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn traverse_matches_oracle_bitwise_on_random_sparse_inputs() {
        let g = Graph::inference();
        let mut rng = Rng::seed(99);
        for _ in 0..1000 {
            let c = 2 + rng.below(10);
            let k = 1 + rng.below(6);
            let m_data: Vec<f64> = (0..c * k)
                .map(|_| {
                    if rng.uniform() < 0.5 {
                        0.0
                    } else {
                        rng.range(-2.0, 2.0)
                    }
                })
                .collect();
            let z0_data: Vec<f64> = (0..c).map(|_| rng.range(-1.0, 1.0)).collect();
            let m = Tensor::constant(vec![c, k], m_data.clone()).unwrap();
            let z0 = Tensor::constant(vec![c], z0_data.clone()).unwrap();
            let got = scm_traverse(&g, &m, &z0).unwrap();
            let want = traverse_oracle(&m_data, c, k, &z0_data);
            assert_eq!(got.to_vec(), want); // bitwise
        }
    }

    #[test]
    fn traverse_gradient_routes_to_survivor_or_z0() {
        let g = Graph::training();
        let m = Tensor::param(vec![2, 3], vec![1.0, 2.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let z0 = Tensor::param(vec![2], vec![7.0, 8.0]).unwrap();
        let z = scm_traverse(&g, &m, &z0).unwrap();
        assert_eq!(z.to_vec(), vec![2.0, 8.0]);
        let s = g.sum_all(&z).unwrap();
        g.backward(&s).unwrap();
        // channel 0: column 1 survives; channel 1: all zero -> z0
        assert_eq!(m.grad().unwrap(), vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(z0.grad().unwrap(), vec![0.0, 1.0]);
    }
}
