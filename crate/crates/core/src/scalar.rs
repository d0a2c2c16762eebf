//! Scalar abstraction shared by the numeric parts of the pipeline (vector
//! similarity, score normalization, metric aggregation).

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar usable for embeddings and scores.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    fn from_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable as float")
    }

    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically stable softmax. Empty input gives empty output.
pub fn softmax<T: Scalar>(values: &[T]) -> Vec<T> {
    let Some(max) = values.iter().copied().reduce(T::max) else {
        return Vec::new();
    };
    let exps: Vec<T> = values.iter().map(|&v| (v - max).exp()).collect();
    let total = exps.iter().fold(T::zero(), |acc, &e| acc + e);
    exps.into_iter().map(|e| e / total).collect()
}

/// Dot product accumulated in f64.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.to_f64_lossy() * y.to_f64_lossy()).sum()
}

pub fn l2_norm<T: Scalar>(a: &[T]) -> f64 {
    dot(a, a).sqrt()
}
