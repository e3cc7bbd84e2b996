//! Tensor-product sample grid over the real slow variables (I, x, y).
//!
//! Fourier coefficients are stored as values on this grid; slow-variable
//! derivatives are taken by fourth-order finite differences.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A uniform tensor grid over `dims` slow variables, each spanning
/// `[center - half_width, center + half_width]` with `points` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowGrid {
    pub dims: usize,
    pub points_per_dim: usize,
    pub half_widths: Vec<f64>,
    pub centers: Vec<f64>,
}

impl SlowGrid {
    pub fn new(half_widths: Vec<f64>, centers: Vec<f64>, points_per_dim: usize) -> Result<Self> {
        if half_widths.len() != centers.len() {
            return Err(Error::invalid("SlowGrid", "half_widths/centers length mismatch"));
        }
        if points_per_dim < 5 && !half_widths.is_empty() {
            return Err(Error::invalid(
                "SlowGrid",
                "need at least 5 points per dimension for order-4 stencils",
            ));
        }
        if half_widths.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::invalid("SlowGrid", "half widths must be positive"));
        }
        Ok(SlowGrid { dims: half_widths.len(), points_per_dim, half_widths, centers })
    }

    /// Zero-dimensional grid: a single sample point. Used when the
    /// perturbation has no slow-variable dependence.
    pub fn trivial() -> Self {
        SlowGrid { dims: 0, points_per_dim: 1, half_widths: vec![], centers: vec![] }
    }

    /// Symmetric grid centered at the origin.
    pub fn centered(half_widths: Vec<f64>, points_per_dim: usize) -> Result<Self> {
        let centers = vec![0.0; half_widths.len()];
        SlowGrid::new(half_widths, centers, points_per_dim)
    }

    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self, dim: usize) -> f64 {
        2.0 * self.half_widths[dim] / (self.points_per_dim - 1) as f64
    }

    /// Coordinates of the flat-indexed point. The last dimension varies fastest.
    pub fn point(&self, mut flat: usize) -> Vec<f64> {
        let mut coords = vec![0.0; self.dims];
        for dim in (0..self.dims).rev() {
            let idx = flat % self.points_per_dim;
            flat /= self.points_per_dim;
            coords[dim] = self.centers[dim] - self.half_widths[dim] + idx as f64 * self.step(dim);
        }
        coords
    }

    /// All points in flat order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Sample a complex-valued function of the slow variables on the grid.
    pub fn sample(&self, f: impl Fn(&[f64]) -> Complex64) -> Vec<Complex64> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }

    /// Fourth-order finite difference of grid values along slow dimension `dim`.
    ///
    /// Interior points use the centered 5-point stencil; the two layers next to
    /// each boundary use shifted 5-point stencils of the same order.
    pub fn derivative(&self, values: &[Complex64], dim: usize, out: &mut [Complex64]) {
        debug_assert_eq!(values.len(), self.len());
        debug_assert_eq!(out.len(), self.len());
        let np = self.points_per_dim;
        let h = self.step(dim);
        // stride between consecutive indices along `dim`
        let stride = self.points_per_dim.pow((self.dims - 1 - dim) as u32);
        let block = stride * np;
        let inv12h = 1.0 / (12.0 * h);
        for base in 0..self.len() / block {
            for off in 0..stride {
                let start = base * block + off;
                let at = |j: usize| values[start + j * stride];
                for j in 0..np {
                    let d = if j >= 2 && j + 2 < np {
                        (at(j - 2) - at(j + 2)) + 8.0 * (at(j + 1) - at(j - 1))
                    } else if j == 0 {
                        -25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)
                    } else if j == 1 {
                        -3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)
                    } else if j + 2 == np {
                        3.0 * at(np - 1) + 10.0 * at(np - 2) - 18.0 * at(np - 3)
                            + 6.0 * at(np - 4)
                            - at(np - 5)
                    } else {
                        25.0 * at(np - 1) - 48.0 * at(np - 2) + 36.0 * at(np - 3)
                            - 16.0 * at(np - 4)
                            + 3.0 * at(np - 5)
                    };
                    out[start + j * stride] = d * inv12h;
                }
            }
        }
    }

    pub fn derivative_alloc(&self, values: &[Complex64], dim: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); values.len()];
        self.derivative(values, dim, &mut out);
        out
    }
}

pub fn sup_abs(values: &[Complex64]) -> f64 {
    values.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_exact_on_cubics() {
        let grid = SlowGrid::centered(vec![1.0, 0.5], 9).unwrap();
        let vals =
            grid.sample(|p| Complex64::new(p[0].powi(3) - 2.0 * p[0] * p[1], p[1].powi(2)));
        let dx = grid.derivative_alloc(&vals, 0);
        let dy = grid.derivative_alloc(&vals, 1);
        for (i, p) in grid.points().iter().enumerate() {
            let ex = Complex64::new(3.0 * p[0] * p[0] - 2.0 * p[1], 0.0);
            let ey = Complex64::new(-2.0 * p[0], 2.0 * p[1]);
            assert!((dx[i] - ex).norm() < 1e-11, "dx at {:?}", p);
            assert!((dy[i] - ey).norm() < 1e-11, "dy at {:?}", p);
        }
    }

    #[test]
    fn derivative_order_four() {
        let grid9 = SlowGrid::centered(vec![0.5], 9).unwrap();
        let grid17 = SlowGrid::centered(vec![0.5], 17).unwrap();
        let f = |p: &[f64]| Complex64::new((3.0 * p[0]).sin(), 0.0);
        let err = |grid: &SlowGrid| {
            let d = grid.derivative_alloc(&grid.sample(f), 0);
            grid.points()
                .iter()
                .enumerate()
                .map(|(i, p)| (d[i].re - 3.0 * (3.0 * p[0]).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(&grid9) / err(&grid17);
        assert!(ratio > 10.0, "expected ~16x error reduction, got {ratio}");
    }
}
