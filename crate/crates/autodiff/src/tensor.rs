//! Dense float64 tensors with tape-based reverse-mode differentiation.
//!
//! A [`Tape`] records one operation node per produced tensor: parent
//! references plus a local-gradient closure. [`Tensor::backward`] traverses
//! the recording in reverse exactly once per node and accumulates exact
//! gradients onto every tensor created through [`Tape::leaf`]. Tensors built
//! with the `constant` constructors participate in forward computation but
//! receive no gradient.
//!
//! Shapes are explicit everywhere; there is no broadcasting. A scalar has
//! shape `[]`, a vector `[n]`, a matrix `[r, c]`. Forward passes are pure
//! float64 arithmetic in a fixed order, so results are reproducible
//! bit-for-bit.

use std::cell::RefCell;
use std::rc::Rc;

use crate::error::AutodiffError;

/// Guard added under the square root of the L2 norm so normalization stays
/// differentiable arbitrarily close to the origin.
pub const NORM_EPSILON: f64 = 1e-12;

const UNTRACKED: usize = usize::MAX;

type BackwardFn = Box<dyn Fn(&[f64]) -> Vec<Vec<f64>>>;

struct Node {
    /// Tape index per operand; [`UNTRACKED`] for constants.
    parents: Vec<usize>,
    /// Maps the upstream gradient to one contribution per operand. `None`
    /// for leaves.
    backward: Option<BackwardFn>,
    len: usize,
}

#[derive(Default)]
struct TapeInner {
    nodes: Vec<Node>,
}

/// Recording context. Single-threaded; distinct tapes are independent.
#[derive(Clone, Default)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
    grads: Rc<RefCell<Vec<Vec<f64>>>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A gradient-tracked input tensor.
    pub fn leaf(&self, shape: &[usize], data: Vec<f64>) -> Result<Tensor, AutodiffError> {
        check_len(shape, &data)?;
        let id = self.push(Node {
            parents: Vec::new(),
            backward: None,
            len: data.len(),
        });
        Ok(Tensor {
            shape: shape.to_vec(),
            data: Rc::new(data),
            node: Some((self.clone(), id)),
        })
    }

    pub fn leaf_vector(&self, data: Vec<f64>) -> Tensor {
        let n = data.len();
        self.leaf(&[n], data).expect("length matches shape")
    }

    pub fn leaf_scalar(&self, value: f64) -> Tensor {
        self.leaf(&[], vec![value]).expect("length matches shape")
    }

    fn push(&self, node: Node) -> usize {
        let mut inner = self.inner.borrow_mut();
        inner.nodes.push(node);
        inner.nodes.len() - 1
    }
}

fn check_len(shape: &[usize], data: &[f64]) -> Result<(), AutodiffError> {
    let expect: usize = shape.iter().product();
    if expect != data.len() {
        return Err(AutodiffError::ShapeMismatch(format!(
            "shape {shape:?} holds {expect} elements, got {}",
            data.len()
        )));
    }
    Ok(())
}

/// A dense float64 tensor, optionally attached to a [`Tape`].
#[derive(Clone)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Rc<Vec<f64>>,
    node: Option<(Tape, usize)>,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .field("requires_grad", &self.requires_grad())
            .finish()
    }
}

impl Tensor {
    pub fn constant(shape: &[usize], data: Vec<f64>) -> Result<Tensor, AutodiffError> {
        check_len(shape, &data)?;
        Ok(Tensor {
            shape: shape.to_vec(),
            data: Rc::new(data),
            node: None,
        })
    }

    pub fn vector(data: Vec<f64>) -> Tensor {
        let n = data.len();
        Tensor::constant(&[n], data).expect("length matches shape")
    }

    pub fn scalar(value: f64) -> Tensor {
        Tensor::constant(&[], vec![value]).expect("length matches shape")
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Tensor, AutodiffError> {
        Tensor::constant(&[rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn requires_grad(&self) -> bool {
        self.node.is_some()
    }

    pub fn is_scalar(&self) -> bool {
        self.shape.is_empty()
    }

    /// Value of a scalar tensor.
    pub fn value(&self) -> f64 {
        debug_assert!(self.is_scalar());
        self.data[0]
    }

    /// Accumulated gradient, present after a `backward` pass over this
    /// tensor's tape when the tensor is tracked.
    pub fn grad(&self) -> Option<Vec<f64>> {
        let (tape, id) = self.node.as_ref()?;
        tape.grads.borrow().get(*id).cloned()
    }

    /// Reverse pass from a tracked scalar: zeroes all gradients on the tape,
    /// seeds this node with 1, and propagates through every recorded node in
    /// reverse order exactly once.
    pub fn backward(&self) -> Result<(), AutodiffError> {
        let (tape, out_id) = self.node.as_ref().ok_or(AutodiffError::NotAScalarOutput)?;
        if !self.is_scalar() {
            return Err(AutodiffError::NotAScalarOutput);
        }
        let inner = tape.inner.borrow();
        let mut grads: Vec<Vec<f64>> = inner.nodes.iter().map(|n| vec![0.0; n.len]).collect();
        grads[*out_id][0] = 1.0;
        for id in (0..=*out_id).rev() {
            let node = &inner.nodes[id];
            let Some(back) = &node.backward else { continue };
            if grads[id].iter().all(|&g| g == 0.0) {
                continue;
            }
            let contributions = back(&grads[id]);
            debug_assert_eq!(contributions.len(), node.parents.len());
            for (&parent, contrib) in node.parents.iter().zip(contributions) {
                if parent == UNTRACKED {
                    continue;
                }
                for (g, c) in grads[parent].iter_mut().zip(contrib) {
                    *g += c;
                }
            }
        }
        drop(inner);
        *tape.grads.borrow_mut() = grads;
        Ok(())
    }

    fn tape_of<'a>(operands: &[&'a Tensor]) -> Result<Option<&'a Tape>, AutodiffError> {
        let mut found: Option<&Tape> = None;
        for t in operands {
            if let Some((tape, _)) = &t.node {
                match found {
                    None => found = Some(tape),
                    Some(existing) if Rc::ptr_eq(&existing.inner, &tape.inner) => {}
                    Some(_) => return Err(AutodiffError::TapeMismatch),
                }
            }
        }
        Ok(found)
    }

    fn record(
        operands: &[&Tensor],
        shape: Vec<usize>,
        data: Vec<f64>,
        backward: BackwardFn,
    ) -> Result<Tensor, AutodiffError> {
        let tape = Self::tape_of(operands)?;
        let node = match tape {
            None => None,
            Some(tape) => {
                let parents = operands
                    .iter()
                    .map(|t| t.node.as_ref().map_or(UNTRACKED, |(_, id)| *id))
                    .collect();
                let id = tape.push(Node {
                    parents,
                    backward: Some(backward),
                    len: data.len(),
                });
                Some((tape.clone(), id))
            }
        };
        Ok(Tensor {
            shape,
            data: Rc::new(data),
            node,
        })
    }

    fn same_shape(&self, other: &Tensor, op: &str) -> Result<(), AutodiffError> {
        if self.shape != other.shape {
            return Err(AutodiffError::ShapeMismatch(format!(
                "{op}: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor, AutodiffError> {
        self.same_shape(other, "add")?;
        let data = self.data.iter().zip(other.data.iter()).map(|(a, b)| a + b).collect();
        Tensor::record(
            &[self, other],
            self.shape.clone(),
            data,
            Box::new(|g| vec![g.to_vec(), g.to_vec()]),
        )
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor, AutodiffError> {
        self.same_shape(other, "sub")?;
        let data = self.data.iter().zip(other.data.iter()).map(|(a, b)| a - b).collect();
        Tensor::record(
            &[self, other],
            self.shape.clone(),
            data,
            Box::new(|g| vec![g.to_vec(), g.iter().map(|v| -v).collect()]),
        )
    }

    /// Multiplication by a plain constant.
    pub fn scale(&self, c: f64) -> Result<Tensor, AutodiffError> {
        let data = self.data.iter().map(|a| a * c).collect();
        Tensor::record(
            &[self],
            self.shape.clone(),
            data,
            Box::new(move |g| vec![g.iter().map(|v| v * c).collect()]),
        )
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Tensor) -> Result<Tensor, AutodiffError> {
        self.same_shape(other, "hadamard")?;
        let data = self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).collect();
        let a = Rc::clone(&self.data);
        let b = Rc::clone(&other.data);
        Tensor::record(
            &[self, other],
            self.shape.clone(),
            data,
            Box::new(move |g| {
                vec![
                    g.iter().zip(b.iter()).map(|(v, bv)| v * bv).collect(),
                    g.iter().zip(a.iter()).map(|(v, av)| v * av).collect(),
                ]
            }),
        )
    }

    /// Multiplication by a tracked scalar tensor.
    pub fn mul_scalar(&self, s: &Tensor) -> Result<Tensor, AutodiffError> {
        if !s.is_scalar() {
            return Err(AutodiffError::ShapeMismatch(format!(
                "mul_scalar expects a scalar, got {:?}",
                s.shape
            )));
        }
        let sv = s.data[0];
        let data = self.data.iter().map(|a| a * sv).collect();
        let a = Rc::clone(&self.data);
        Tensor::record(
            &[self, s],
            self.shape.clone(),
            data,
            Box::new(move |g| {
                let dv = g.iter().map(|v| v * sv).collect();
                let ds = g.iter().zip(a.iter()).map(|(v, av)| v * av).sum::<f64>();
                vec![dv, vec![ds]]
            }),
        )
    }

    /// Matrix-vector product: `[r, c] x [c] -> [r]`.
    pub fn matmul(&self, v: &Tensor) -> Result<Tensor, AutodiffError> {
        let (r, c) = match self.shape[..] {
            [r, c] => (r, c),
            _ => {
                return Err(AutodiffError::ShapeMismatch(format!(
                    "matmul expects a matrix, got {:?}",
                    self.shape
                )))
            }
        };
        if v.shape != [c] {
            return Err(AutodiffError::ShapeMismatch(format!(
                "matmul: [{r}, {c}] x {:?}",
                v.shape
            )));
        }
        let mut data = vec![0.0; r];
        for i in 0..r {
            let row = &self.data[i * c..(i + 1) * c];
            data[i] = row.iter().zip(v.data.iter()).map(|(a, b)| a * b).sum();
        }
        let m = Rc::clone(&self.data);
        let x = Rc::clone(&v.data);
        Tensor::record(
            &[self, v],
            vec![r],
            data,
            Box::new(move |g| {
                let mut dm = vec![0.0; r * c];
                let mut dx = vec![0.0; c];
                for i in 0..r {
                    for j in 0..c {
                        dm[i * c + j] = g[i] * x[j];
                        dx[j] += g[i] * m[i * c + j];
                    }
                }
                vec![dm, dx]
            }),
        )
    }

    /// Inner product of two equally shaped tensors, as a scalar.
    pub fn dot(&self, other: &Tensor) -> Result<Tensor, AutodiffError> {
        self.same_shape(other, "dot")?;
        let value: f64 = self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum();
        let a = Rc::clone(&self.data);
        let b = Rc::clone(&other.data);
        Tensor::record(
            &[self, other],
            vec![],
            vec![value],
            Box::new(move |g| {
                vec![
                    b.iter().map(|v| v * g[0]).collect(),
                    a.iter().map(|v| v * g[0]).collect(),
                ]
            }),
        )
    }

    /// Sum of all entries, as a scalar.
    pub fn sum(&self) -> Result<Tensor, AutodiffError> {
        let value: f64 = self.data.iter().sum();
        let n = self.data.len();
        Tensor::record(
            &[self],
            vec![],
            vec![value],
            Box::new(move |g| vec![vec![g[0]; n]]),
        )
    }

    /// Entry `i` of a vector, as a scalar.
    pub fn at(&self, i: usize) -> Result<Tensor, AutodiffError> {
        if self.shape.len() != 1 || i >= self.data.len() {
            return Err(AutodiffError::ShapeMismatch(format!(
                "at({i}) on shape {:?}",
                self.shape
            )));
        }
        let n = self.data.len();
        Tensor::record(
            &[self],
            vec![],
            vec![self.data[i]],
            Box::new(move |g| {
                let mut d = vec![0.0; n];
                d[i] = g[0];
                vec![d]
            }),
        )
    }

    /// Concatenation of vectors into one vector.
    pub fn concat(parts: &[&Tensor]) -> Result<Tensor, AutodiffError> {
        let mut data = Vec::new();
        let mut lens = Vec::new();
        for p in parts {
            if p.shape.len() != 1 {
                return Err(AutodiffError::ShapeMismatch(format!(
                    "concat expects vectors, got {:?}",
                    p.shape
                )));
            }
            lens.push(p.data.len());
            data.extend_from_slice(&p.data);
        }
        let total = data.len();
        Tensor::record(
            parts,
            vec![total],
            data,
            Box::new(move |g| {
                let mut out = Vec::with_capacity(lens.len());
                let mut offset = 0;
                for &l in &lens {
                    out.push(g[offset..offset + l].to_vec());
                    offset += l;
                }
                out
            }),
        )
    }

    /// Elementwise exponential.
    pub fn exp(&self) -> Result<Tensor, AutodiffError> {
        let data: Vec<f64> = self.data.iter().map(|a| a.exp()).collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(AutodiffError::NonFiniteValue("exp"));
        }
        let out = data.clone();
        Tensor::record(
            &[self],
            self.shape.clone(),
            data,
            Box::new(move |g| vec![g.iter().zip(out.iter()).map(|(v, o)| v * o).collect()]),
        )
    }

    /// Elementwise natural logarithm.
    pub fn log(&self) -> Result<Tensor, AutodiffError> {
        let data: Vec<f64> = self.data.iter().map(|a| a.ln()).collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(AutodiffError::NonFiniteValue("log"));
        }
        let input = Rc::clone(&self.data);
        Tensor::record(
            &[self],
            self.shape.clone(),
            data,
            Box::new(move |g| vec![g.iter().zip(input.iter()).map(|(v, a)| v / a).collect()]),
        )
    }

    /// Elementwise hyperbolic tangent.
    pub fn tanh(&self) -> Result<Tensor, AutodiffError> {
        let data: Vec<f64> = self.data.iter().map(|a| a.tanh()).collect();
        let out = data.clone();
        Tensor::record(
            &[self],
            self.shape.clone(),
            data,
            Box::new(move |g| {
                vec![g.iter().zip(out.iter()).map(|(v, t)| v * (1.0 - t * t)).collect()]
            }),
        )
    }

    /// L2 normalization with an epsilon guard inside the square root.
    /// Fails with [`AutodiffError::DegenerateNorm`] when the input norm is
    /// at or below 1e-12.
    pub fn l2_normalize(&self) -> Result<Tensor, AutodiffError> {
        let sq: f64 = self.data.iter().map(|a| a * a).sum();
        if sq.sqrt() <= NORM_EPSILON {
            return Err(AutodiffError::DegenerateNorm);
        }
        let norm = (sq + NORM_EPSILON).sqrt();
        let data: Vec<f64> = self.data.iter().map(|a| a / norm).collect();
        let input = Rc::clone(&self.data);
        Tensor::record(
            &[self],
            self.shape.clone(),
            data,
            Box::new(move |g| {
                let vg: f64 = input.iter().zip(g.iter()).map(|(a, v)| a * v).sum();
                let n3 = norm * norm * norm;
                vec![input
                    .iter()
                    .zip(g.iter())
                    .map(|(a, v)| v / norm - a * vg / n3)
                    .collect()]
            }),
        )
    }

    /// Cosine similarity with its analytic gradient. Unlike
    /// [`Tensor::l2_normalize`] there is no epsilon in the denominator, so
    /// `cosine(v, v)` is 1 to machine precision for any non-degenerate `v`.
    pub fn cosine(&self, other: &Tensor) -> Result<Tensor, AutodiffError> {
        self.same_shape(other, "cosine")?;
        let na = self.data.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = other.data.iter().map(|v| v * v).sum::<f64>().sqrt();
        if na <= NORM_EPSILON || nb <= NORM_EPSILON {
            return Err(AutodiffError::DegenerateNorm);
        }
        let s: f64 = self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum();
        let value = s / (na * nb);
        let a = Rc::clone(&self.data);
        let b = Rc::clone(&other.data);
        Tensor::record(
            &[self, other],
            vec![],
            vec![value],
            Box::new(move |g| {
                let da = a
                    .iter()
                    .zip(b.iter())
                    .map(|(av, bv)| g[0] * (bv / (na * nb) - value * av / (na * na)))
                    .collect();
                let db = a
                    .iter()
                    .zip(b.iter())
                    .map(|(av, bv)| g[0] * (av / (na * nb) - value * bv / (nb * nb)))
                    .collect();
                vec![da, db]
            }),
        )
    }

    /// Softmax over a vector.
    pub fn softmax(&self) -> Result<Tensor, AutodiffError> {
        if self.shape.len() != 1 {
            return Err(AutodiffError::ShapeMismatch(format!(
                "softmax expects a vector, got {:?}",
                self.shape
            )));
        }
        let m = self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = self.data.iter().map(|a| (a - m).exp()).collect();
        let total: f64 = exps.iter().sum();
        let data: Vec<f64> = exps.iter().map(|e| e / total).collect();
        let s = data.clone();
        Tensor::record(
            &[self],
            self.shape.clone(),
            data,
            Box::new(move |g| {
                let inner: f64 = g.iter().zip(s.iter()).map(|(v, si)| v * si).sum();
                vec![g.iter().zip(s.iter()).map(|(v, si)| si * (v - inner)).collect()]
            }),
        )
    }

    /// Cross-entropy of a soft target against the softmax of `self` (the
    /// logits): `logsumexp(z) - t . z`. The target is a plain probability
    /// vector and is not differentiated.
    pub fn softmax_xent(&self, target: &[f64]) -> Result<Tensor, AutodiffError> {
        if self.shape.len() != 1 || target.len() != self.data.len() {
            return Err(AutodiffError::ShapeMismatch(format!(
                "softmax_xent: logits {:?} vs target of {}",
                self.shape,
                target.len()
            )));
        }
        let m = self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = self.data.iter().map(|a| (a - m).exp()).collect();
        let total: f64 = exps.iter().sum();
        let lse = m + total.ln();
        let tz: f64 = target.iter().zip(self.data.iter()).map(|(t, z)| t * z).sum();
        let value = lse - tz;
        if !value.is_finite() {
            return Err(AutodiffError::NonFiniteValue("softmax_xent"));
        }
        let soft: Vec<f64> = exps.iter().map(|e| e / total).collect();
        let t = target.to_vec();
        Tensor::record(
            &[self],
            vec![],
            vec![value],
            Box::new(move |g| {
                vec![soft.iter().zip(t.iter()).map(|(s, ti)| g[0] * (s - ti)).collect()]
            }),
        )
    }
}
