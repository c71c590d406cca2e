//! Dense tensors with reverse-mode automatic differentiation.
//!
//! Values are stored as f64 but every stored result is rounded through
//! f32 in [`Precision::Single`] mode, which is the training default: the
//! observable storage width is 32 bits while all arithmetic and every
//! reduction accumulates in 64 bits. [`Precision::Double`] skips the
//! rounding and exists for the finite-difference gradient checker.
//!
//! Operations record backward closures on a [`Tape`]. The tape is a flat
//! list in topological order (an operation's inputs always receive their
//! node ids before its output), so the backward pass is a single reverse
//! sweep that visits each recorded operation exactly once.

use std::cell::{Cell, Ref, RefCell};
use std::fmt;
use std::rc::Rc;

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod ops;

pub use adam::AdamState;
pub use ops::PoolKind;

use crate::error::{Error, Result};

/// Storage policy for op results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Round every stored value through f32 (training default).
    Single,
    /// Keep full f64 values (gradient checking).
    Double,
}

impl Precision {
    #[inline]
    pub fn store(self, x: f64) -> f64 {
        match self {
            Precision::Single => x as f32 as f64,
            Precision::Double => x,
        }
    }
}

pub type NodeId = usize;

struct TensorInner {
    shape: Vec<usize>,
    data: RefCell<Vec<f64>>,
    grad: RefCell<Option<Vec<f64>>>,
    requires_grad: Cell<bool>,
    node_id: Cell<Option<NodeId>>,
}

/// Cheap-to-clone handle to a dense tensor.
#[derive(Clone)]
pub struct Tensor {
    inner: Rc<TensorInner>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Tensor(shape={:?}, requires_grad={}, node={:?})",
            self.shape(),
            self.requires_grad(),
            self.inner.node_id.get()
        )
    }
}

impl Tensor {
    fn new_inner(shape: Vec<usize>, data: Vec<f64>, requires_grad: bool) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor {
            inner: Rc::new(TensorInner {
                shape,
                data: RefCell::new(data),
                grad: RefCell::new(None),
                requires_grad: Cell::new(requires_grad),
                node_id: Cell::new(None),
            }),
        }
    }

    /// Constant tensor; values are rounded to f32 storage width.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::InvalidArgument(format!(
                "shape {:?} wants {} values, got {}",
                shape,
                shape.iter().product::<usize>(),
                data.len()
            )));
        }
        let rounded = data.into_iter().map(|x| x as f32 as f64).collect();
        Ok(Self::new_inner(shape.to_vec(), rounded, false))
    }

    /// Trainable parameter; values are rounded to f32 storage width.
    pub fn param(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let t = Self::from_vec(shape, data)?;
        t.inner.requires_grad.set(true);
        Ok(t)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::new_inner(shape.to_vec(), vec![0.0; shape.iter().product()], false)
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let v = value as f32 as f64;
        Self::new_inner(shape.to_vec(), vec![v; shape.iter().product()], false)
    }

    pub fn scalar(value: f64) -> Self {
        Self::full(&[1], value)
    }

    pub(crate) fn raw_output(shape: Vec<usize>, data: Vec<f64>, requires_grad: bool) -> Self {
        Self::new_inner(shape, data, requires_grad)
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn numel(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn is_scalar(&self) -> bool {
        self.numel() == 1
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.inner.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.inner.data.borrow().clone()
    }

    pub fn to_f32_vec(&self) -> Vec<f32> {
        self.inner.data.borrow().iter().map(|&x| x as f32).collect()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert!(self.is_scalar());
        self.inner.data.borrow()[0]
    }

    /// Overwrite values, rounding through f32.
    pub fn set_data(&self, values: &[f64]) {
        let mut d = self.inner.data.borrow_mut();
        assert_eq!(d.len(), values.len(), "set_data length mismatch");
        for (dst, &src) in d.iter_mut().zip(values) {
            *dst = src as f32 as f64;
        }
    }

    /// Overwrite one coordinate without f32 rounding (gradient checker only).
    pub(crate) fn write_raw(&self, idx: usize, value: f64) {
        self.inner.data.borrow_mut()[idx] = value;
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad.get()
    }

    pub fn set_requires_grad(&self, flag: bool) {
        self.inner.requires_grad.set(flag);
    }

    pub fn node_id(&self) -> Option<NodeId> {
        self.inner.node_id.get()
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.inner.grad.borrow().clone()
    }

    pub fn clear_grad(&self) {
        *self.inner.grad.borrow_mut() = None;
    }

    /// Detached constant copy (shares nothing with the graph).
    pub fn detach(&self) -> Tensor {
        Self::new_inner(self.inner.shape.clone(), self.to_vec(), false)
    }

    pub fn has_nan(&self) -> bool {
        self.inner.data.borrow().iter().any(|x| !x.is_finite())
    }

    pub(crate) fn accumulate_grad(&self, delta: &[f64]) {
        if !self.requires_grad() {
            return;
        }
        let mut g = self.inner.grad.borrow_mut();
        match g.as_mut() {
            Some(buf) => {
                for (dst, &src) in buf.iter_mut().zip(delta) {
                    *dst += src;
                }
            }
            None => *g = Some(delta.to_vec()),
        }
    }

    fn seed_grad_one(&self) {
        *self.inner.grad.borrow_mut() = Some(vec![1.0; self.numel()]);
    }
}

struct TapeNode {
    #[allow(dead_code)]
    inputs: Vec<NodeId>,
    #[allow(dead_code)]
    output: NodeId,
    backward: Box<dyn Fn()>,
}

struct TapeState {
    nodes: Vec<TapeNode>,
    registered: Vec<Tensor>,
    next_id: NodeId,
}

/// Recording context for reverse-mode differentiation.
pub struct Tape {
    state: RefCell<TapeState>,
    recording: bool,
    precision: Precision,
}

impl Tape {
    pub fn training() -> Self {
        Self::with(true, Precision::Single)
    }

    pub fn training_double() -> Self {
        Self::with(true, Precision::Double)
    }

    /// Forward-only context: nothing is recorded, outputs carry no grad.
    pub fn inference() -> Self {
        Self::with(false, Precision::Single)
    }

    pub fn inference_double() -> Self {
        Self::with(false, Precision::Double)
    }

    fn with(recording: bool, precision: Precision) -> Self {
        Tape {
            state: RefCell::new(TapeState {
                nodes: Vec::new(),
                registered: Vec::new(),
                next_id: 0,
            }),
            recording,
            precision,
        }
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn is_recording(&self) -> bool {
        self.recording
    }

    pub fn len(&self) -> usize {
        self.state.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn register(&self, t: &Tensor) -> NodeId {
        if let Some(id) = t.node_id() {
            return id;
        }
        let mut s = self.state.borrow_mut();
        let id = s.next_id;
        s.next_id += 1;
        t.inner.node_id.set(Some(id));
        s.registered.push(t.clone());
        id
    }

    /// Record one operation. Called by ops after computing the forward
    /// value; `backward` accumulates input grads from the output grad.
    pub(crate) fn record(&self, inputs: &[&Tensor], output: &Tensor, backward: Box<dyn Fn()>) {
        if !self.recording {
            return;
        }
        if !inputs.iter().any(|t| t.requires_grad()) {
            return;
        }
        let input_ids: Vec<NodeId> = inputs.iter().map(|t| self.register(t)).collect();
        output.set_requires_grad(true);
        let output_id = self.register(output);
        debug_assert!(input_ids.iter().all(|&i| i < output_id));
        self.state.borrow_mut().nodes.push(TapeNode {
            inputs: input_ids,
            output: output_id,
            backward,
        });
    }

    /// Reverse sweep from a scalar loss. Populates `grad` for every
    /// requires-grad tensor reachable from the loss, then clears the tape.
    pub fn backward(&self, loss: &Tensor) -> Result<()> {
        if !loss.is_scalar() {
            return Err(Error::NonScalarLoss(loss.shape().to_vec()));
        }
        if loss.node_id().is_none() {
            return Err(Error::NotOnTape);
        }
        loss.seed_grad_one();
        {
            let s = self.state.borrow();
            for node in s.nodes.iter().rev() {
                (node.backward)();
            }
        }
        self.clear();
        Ok(())
    }

    /// Drop all recorded operations and detach registered tensors.
    pub fn clear(&self) {
        let mut s = self.state.borrow_mut();
        for t in &s.registered {
            t.inner.node_id.set(None);
        }
        s.registered.clear();
        s.nodes.clear();
        s.next_id = 0;
    }
}

impl Drop for Tape {
    fn drop(&mut self) {
        self.clear();
    }
}
