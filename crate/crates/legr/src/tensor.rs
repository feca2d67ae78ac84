//! Dense N-dimensional `f64` arrays in row-major order.

use crate::error::{Error, Result};

/// Flat row-major numeric array with shape metadata. Carrier of activations,
/// weights and gradients throughout the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TensorGrid {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() || shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape {
                context: "TensorGrid::new".into(),
                expected: format!("{shape:?} ({expected} elements, positive extents)"),
                actual: format!("{} elements", data.len()),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Index into an NCHW tensor.
    pub fn at4(&self, n: usize, c: usize, h: usize, w: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 4);
        let (cs, hs, ws) = (self.shape[1], self.shape[2], self.shape[3]);
        self.data[((n * cs + c) * hs + h) * ws + w]
    }

    /// Index into a 2-D tensor.
    pub fn at2(&self, r: usize, c: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[r * self.shape[1] + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_shape_data_mismatch() {
        assert!(TensorGrid::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(TensorGrid::new(vec![2, 0], vec![]).is_err());
        assert!(TensorGrid::new(vec![2, 3], vec![1.0; 6]).is_ok());
    }

    #[test]
    fn at4_follows_row_major_order() {
        let t = TensorGrid::new(vec![1, 2, 2, 2], (0..8).map(f64::from).collect()).unwrap();
        assert_eq!(t.at4(0, 1, 0, 1), 5.0);
        assert_eq!(t.at4(0, 0, 1, 0), 2.0);
    }
}
