//! Reflection padding for network inputs (constants, outside the graph).

use crate::error::{arg_err, shape_err, Result};
use crate::tensor::Tensor;

fn mirror(i: isize, len: usize) -> usize {
    let len = len as isize;
    let mut i = i;
    if i < 0 {
        i = -i;
    }
    if i >= len {
        i = 2 * len - 2 - i;
    }
    i as usize
}

/// Reflect-pad the spatial axes of a [C, H, W] tensor (edge not repeated).
/// The result is a constant; use this on network inputs before the pyramid.
pub fn reflect_pad_hw(x: &Tensor, pad_h: usize, pad_w: usize) -> Result<Tensor> {
    if x.ndim() != 3 {
        return shape_err("reflect_pad", format!("expected [C,H,W], got {:?}", x.shape()));
    }
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    if pad_h >= h || pad_w >= w {
        return arg_err(
            "reflect_pad",
            format!("pad ({pad_h},{pad_w}) must be smaller than extent ({h},{w})"),
        );
    }
    if pad_h == 0 && pad_w == 0 {
        return Ok(x.clone());
    }
    let (oh, ow) = (h + 2 * pad_h, w + 2 * pad_w);
    let xd = x.data();
    let mut data = vec![0.0; c * oh * ow];
    for ch in 0..c {
        for oy in 0..oh {
            let iy = mirror(oy as isize - pad_h as isize, h);
            for ox in 0..ow {
                let ix = mirror(ox as isize - pad_w as isize, w);
                data[(ch * oh + oy) * ow + ox] = xd[(ch * h + iy) * w + ix];
            }
        }
    }
    drop(xd);
    Tensor::constant(vec![c, oh, ow], data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirrors_without_repeating_the_edge() {
        let x = Tensor::constant(vec![1, 1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = reflect_pad_hw(&x, 0, 2).unwrap();
        assert_eq!(y.to_vec(), vec![3.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0]);
    }

    #[test]
    fn zero_pad_is_passthrough() {
        let x = Tensor::constant(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = reflect_pad_hw(&x, 0, 0).unwrap();
        assert!(y.same_tensor(&x));
    }
}
