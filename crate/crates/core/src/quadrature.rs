//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! integrands.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate satisfies `err <= max(abs_tol, rel_tol * |value|)` or the node
//! budget is exhausted. The per-interval estimate is the raw difference
//! between the Kronrod and Gauss sums, which is pessimistic for smooth
//! integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default node budget per integral.
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug)]
pub struct Tolerance<T: Real> {
    pub abs: T,
    pub rel: T,
    pub max_nodes: usize,
}

impl<T: Real> Tolerance<T> {
    pub fn relative(rel: T) -> Self {
        Self { abs: T::zero(), rel, max_nodes: DEFAULT_NODE_BUDGET }
    }

    pub fn with_abs(mut self, abs: T) -> Self {
        self.abs = abs;
        self
    }

    pub fn with_budget(mut self, max_nodes: usize) -> Self {
        self.max_nodes = max_nodes;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Integral<T: Real> {
    pub value: Vec<T>,
    pub error: T,
    pub nodes: usize,
}

struct Segment<T: Real> {
    a: T,
    b: T,
    value: Vec<T>,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.as_f64().total_cmp(&other.error.as_f64())
    }
}

fn euclid<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

fn kronrod<T: Real, F: FnMut(T) -> Vec<T>>(f: &mut F, a: T, b: T, dim: usize) -> Segment<T> {
    let half = T::lit(0.5);
    let center = (a + b) * half;
    let h = (b - a) * half;
    let mut k = vec![T::zero(); dim];
    let mut g = vec![T::zero(); dim];
    let fc = f(center);
    for d in 0..dim {
        k[d] = fc[d] * T::lit(WGK[7]);
        g[d] = fc[d] * T::lit(WG[3]);
    }
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let wk = T::lit(WGK[j]);
        for d in 0..dim {
            k[d] += wk * (f1[d] + f2[d]);
        }
        if j % 2 == 1 {
            let wg = T::lit(WG[j / 2]);
            for d in 0..dim {
                g[d] += wg * (f1[d] + f2[d]);
            }
        }
    }
    let diff: Vec<T> = k.iter().zip(&g).map(|(&x, &y)| (x - y) * h).collect();
    let value = k.into_iter().map(|x| x * h).collect();
    Segment { a, b, value, error: euclid(&diff) }
}

/// Integrates `f: [a, b] -> R^dim` over the union of consecutive pieces given
/// by `breakpoints` (strictly increasing, at least two points).
pub fn integrate_pieces<T, F>(mut f: F, breakpoints: &[T], dim: usize, tol: Tolerance<T>) -> Result<Integral<T>>
where
    T: Real,
    F: FnMut(T) -> Vec<T>,
{
    if breakpoints.len() < 2 {
        return Err(Error::Parameter { name: "breakpoints", reason: "need at least two".into() });
    }
    let mut heap = BinaryHeap::new();
    let mut value = vec![T::zero(); dim];
    let mut error = T::zero();
    let mut nodes = 0usize;
    for w in breakpoints.windows(2) {
        if w[1] <= w[0] {
            if w[1] == w[0] {
                continue;
            }
            return Err(Error::Parameter { name: "breakpoints", reason: "must be increasing".into() });
        }
        let seg = kronrod(&mut f, w[0], w[1], dim);
        nodes += 15;
        for d in 0..dim {
            value[d] += seg.value[d];
        }
        error += seg.error;
        heap.push(seg);
    }
    loop {
        let target = tol.abs.max(tol.rel * euclid(&value));
        if error <= target {
            break;
        }
        if nodes + 30 > tol.max_nodes {
            return Err(Error::Budget { budget: tol.max_nodes, estimate: euclid(&value).as_f64(), error: error.as_f64() });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = (worst.a + worst.b) * T::lit(0.5);
        if !(mid > worst.a && mid < worst.b) {
            // Interval cannot be split further; accept what we have.
            heap.push(worst);
            break;
        }
        let left = kronrod(&mut f, worst.a, mid, dim);
        let right = kronrod(&mut f, mid, worst.b, dim);
        nodes += 30;
        for d in 0..dim {
            value[d] += left.value[d] + right.value[d] - worst.value[d];
        }
        error = error - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
    }
    // Recompute the sums to shed accumulated cancellation.
    let mut value = vec![T::zero(); dim];
    let mut error = T::zero();
    for seg in heap.iter() {
        for d in 0..dim {
            value[d] += seg.value[d];
        }
        error += seg.error;
    }
    Ok(Integral { value, error, nodes })
}

/// Scalar integral over `[a, b]`.
pub fn integrate<T, F>(mut f: F, a: T, b: T, tol: Tolerance<T>) -> Result<(T, T, usize)>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let out = integrate_pieces(|t| vec![f(t)], &geometric_breakpoints(a, b), 1, tol)?;
    Ok((out.value[0], out.error, out.nodes))
}

/// Breakpoints `a, a+1, a+2, a+4, ...` up to `b`, resolving integrands that
/// vary on several time scales.
pub fn geometric_breakpoints<T: Real>(a: T, b: T) -> Vec<T> {
    let mut pts = vec![a];
    let mut step = T::one();
    let two = T::lit(2.0);
    while a + step < b {
        pts.push(a + step);
        step = step * two;
    }
    if b > a {
        pts.push(b);
    }
    pts
}
