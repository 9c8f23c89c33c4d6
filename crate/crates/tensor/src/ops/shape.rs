//! Shape plumbing: reshape, concatenation, and axis slicing.

use crate::error::{shape_err, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;

impl Graph {
    pub fn reshape(&self, x: &Tensor, shape: Vec<usize>) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        if n != x.len() {
            return shape_err(
                "reshape",
                format!("{:?} ({} elems) -> {:?} ({} elems)", x.shape(), x.len(), shape, n),
            );
        }
        let out = Tensor::interior(shape, x.to_vec());
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                x.accumulate_grad(&g);
            });
        }
        Ok(out)
    }

    /// Concatenate along `axis`; all other extents must agree.
    pub fn concat(&self, parts: &[&Tensor], axis: usize) -> Result<Tensor> {
        if parts.is_empty() {
            return shape_err("concat", "no tensors given");
        }
        let first = parts[0].shape().to_vec();
        if axis >= first.len() {
            return shape_err("concat", format!("axis {axis} for shape {first:?}"));
        }
        let mut axis_total = 0;
        for t in parts {
            let s = t.shape();
            if s.len() != first.len() {
                return shape_err("concat", format!("rank mismatch {:?} vs {:?}", s, first));
            }
            for (d, (&a, &b)) in s.iter().zip(first.iter()).enumerate() {
                if d != axis && a != b {
                    return shape_err("concat", format!("{:?} vs {:?} at axis {d}", s, first));
                }
            }
            axis_total += s[axis];
        }
        let mut shape = first.clone();
        shape[axis] = axis_total;
        let inner: usize = first[axis + 1..].iter().product();
        let outer: usize = first[..axis].iter().product();

        let mut data = vec![0.0; shape.iter().product()];
        let mut offsets = Vec::with_capacity(parts.len());
        let mut off = 0;
        for t in parts {
            offsets.push(off);
            let alen = t.shape()[axis];
            let td = t.data();
            for o in 0..outer {
                let src = o * alen * inner;
                let dst = (o * axis_total + off) * inner;
                data[dst..dst + alen * inner].copy_from_slice(&td[src..src + alen * inner]);
            }
            off += alen;
        }

        let out = Tensor::interior(shape, data);
        if self.is_training() {
            let parts: Vec<Tensor> = parts.iter().map(|t| (*t).clone()).collect();
            let out = out.clone();
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                for (t, &off) in parts.iter().zip(&offsets) {
                    let alen = t.shape()[axis];
                    t.accumulate_grad_with(|gt| {
                        for o in 0..outer {
                            let dst = o * alen * inner;
                            let src = (o * axis_total + off) * inner;
                            for i in 0..alen * inner {
                                gt[dst + i] += g[src + i];
                            }
                        }
                    });
                }
            });
        }
        Ok(out)
    }

    /// Slice `len` extents starting at `start` along `axis`.
    pub fn narrow(&self, x: &Tensor, axis: usize, start: usize, len: usize) -> Result<Tensor> {
        let shape = x.shape().to_vec();
        if axis >= shape.len() || start + len > shape[axis] {
            return shape_err(
                "narrow",
                format!("axis {axis}, range {start}..{} of {:?}", start + len, shape),
            );
        }
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let alen = shape[axis];

        let xd = x.data();
        let mut data = vec![0.0; outer * len * inner];
        for o in 0..outer {
            let src = (o * alen + start) * inner;
            let dst = o * len * inner;
            data[dst..dst + len * inner].copy_from_slice(&xd[src..src + len * inner]);
        }
        drop(xd);

        let mut out_shape = shape;
        out_shape[axis] = len;
        let out = Tensor::interior(out_shape, data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                x.accumulate_grad_with(|gx| {
                    for o in 0..outer {
                        let dst = (o * alen + start) * inner;
                        let src = o * len * inner;
                        for i in 0..len * inner {
                            gx[dst + i] += g[src + i];
                        }
                    }
                });
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_then_narrow_round_trips() {
        let g = Graph::training();
        let a = Tensor::param(vec![2, 2, 2], (0..8).map(|i| i as f64).collect()).unwrap();
        let b = Tensor::param(vec![1, 2, 2], vec![8.0, 9.0, 10.0, 11.0]).unwrap();
        let cat = g.concat(&[&a, &b], 0).unwrap();
        assert_eq!(cat.shape(), &[3, 2, 2]);
        assert_eq!(cat.to_vec(), (0..12).map(|i| i as f64).collect::<Vec<_>>());
        let back = g.narrow(&cat, 0, 2, 1).unwrap();
        assert_eq!(back.to_vec(), b.to_vec());

        let s = g.sum_all(&back).unwrap();
        g.backward(&s).unwrap();
        assert!(a.grad().is_none() || a.grad().unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(b.grad().unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn concat_axis_one() {
        let g = Graph::inference();
        let a = Tensor::constant(vec![1, 2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::constant(vec![1, 3], vec![3.0, 4.0, 5.0]).unwrap();
        let cat = g.concat(&[&a, &b], 1).unwrap();
        assert_eq!(cat.shape(), &[1, 5]);
        assert_eq!(cat.to_vec(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn mismatched_other_axes_error() {
        let g = Graph::inference();
        let a = Tensor::zeros(vec![1, 2, 2]);
        let b = Tensor::zeros(vec![1, 3, 2]);
        assert!(g.concat(&[&a, &b], 0).is_err());
    }

    #[test]
    fn reshape_is_length_checked() {
        let g = Graph::inference();
        let x = Tensor::zeros(vec![2, 3]);
        assert!(g.reshape(&x, vec![7]).is_err());
        assert_eq!(g.reshape(&x, vec![6]).unwrap().shape(), &[6]);
    }
}
