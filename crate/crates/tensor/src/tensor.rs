use std::cell::{Ref, RefCell};
use std::fmt;
use std::rc::Rc;

use crate::error::{shape_err, Result};

/// How a tensor participates in differentiation.
///
/// `Constant` leaves never accumulate gradient, `Param` leaves do, and
/// `Interior` tensors (op outputs) always carry gradient so the chain can
/// pass through them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Constant,
    Param,
    Interior,
}

struct Inner {
    shape: Vec<usize>,
    data: RefCell<Vec<f64>>,
    grad: RefCell<Option<Vec<f64>>>,
    kind: Kind,
}

/// Dense row-major f64 tensor. Cheap to clone (shared storage).
///
/// Data is immutable after construction except through
/// [`Tensor::update_data`], which exists for the optimizer's in-place
/// parameter step.
#[derive(Clone)]
pub struct Tensor {
    inner: Rc<Inner>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Tensor(shape={:?}, kind={:?}, grad={})",
            self.inner.shape,
            self.inner.kind,
            if self.inner.grad.borrow().is_some() {
                "yes"
            } else {
                "no"
            }
        )
    }
}

impl Tensor {
    fn new(shape: Vec<usize>, data: Vec<f64>, kind: Kind) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return shape_err(
                "tensor",
                format!("shape {:?} needs {} elements, got {}", shape, n, data.len()),
            );
        }
        Ok(Tensor {
            inner: Rc::new(Inner {
                shape,
                data: RefCell::new(data),
                grad: RefCell::new(None),
                kind,
            }),
        })
    }

    /// A leaf that never accumulates gradient.
    pub fn constant(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::new(shape, data, Kind::Constant)
    }

    /// A learnable leaf; gradient accumulates here during backward.
    pub fn param(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::new(shape, data, Kind::Param)
    }

    /// An op output. Public so composite modules can define their own
    /// primitives via [`crate::Graph::record`].
    pub fn interior(shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self::new(shape, data, Kind::Interior).expect("interior op output shape/data mismatch")
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self::new(shape, vec![0.0; n], Kind::Constant).unwrap()
    }

    pub fn param_zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self::new(shape, vec![0.0; n], Kind::Param).unwrap()
    }

    pub fn full(shape: Vec<usize>, value: f64) -> Self {
        let n = shape.iter().product();
        Self::new(shape, vec![value; n], Kind::Constant).unwrap()
    }

    pub fn scalar(value: f64) -> Self {
        Self::new(vec![1], vec![value], Kind::Constant).unwrap()
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn ndim(&self) -> usize {
        self.inner.shape.len()
    }

    pub fn len(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.kind == Kind::Param
    }

    pub fn is_constant(&self) -> bool {
        self.inner.kind == Kind::Constant
    }

    /// Two handles to the same storage?
    pub fn same_tensor(&self, other: &Tensor) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.inner.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.inner.data.borrow().clone()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.len(), 1, "item() on non-scalar tensor");
        self.inner.data.borrow()[0]
    }

    /// In-place data mutation; reserved for the optimizer's parameter step.
    pub fn update_data(&self, f: impl FnOnce(&mut [f64])) {
        f(&mut self.inner.data.borrow_mut());
    }

    /// Current gradient, if any has been accumulated.
    pub fn grad(&self) -> Option<Vec<f64>> {
        self.inner.grad.borrow().clone()
    }

    /// Borrow the gradient without cloning; `None` when untouched.
    pub fn grad_ref(&self) -> Option<Ref<'_, Vec<f64>>> {
        let r = self.inner.grad.borrow();
        if r.is_some() {
            Some(Ref::map(r, |o| o.as_ref().unwrap()))
        } else {
            None
        }
    }

    /// Add `delta` into the gradient buffer. No-op for constants.
    pub fn accumulate_grad(&self, delta: &[f64]) {
        self.accumulate_grad_with(|g| {
            for (gi, di) in g.iter_mut().zip(delta) {
                *gi += di;
            }
        });
    }

    /// Lazily create a zero gradient buffer and let `f` add into it.
    /// No-op for constants so they never accumulate gradient.
    pub fn accumulate_grad_with(&self, f: impl FnOnce(&mut [f64])) {
        if self.inner.kind == Kind::Constant {
            return;
        }
        let mut slot = self.inner.grad.borrow_mut();
        let g = slot.get_or_insert_with(|| vec![0.0; self.len()]);
        f(g);
    }

    pub fn clear_grad(&self) {
        *self.inner.grad.borrow_mut() = None;
    }

    /// Remove and return the gradient buffer.
    pub fn take_grad(&self) -> Option<Vec<f64>> {
        self.inner.grad.borrow_mut().take()
    }
}
