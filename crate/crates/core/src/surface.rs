//! Uniform grids and complex-valued surfaces over them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis names used by the evaluators.
pub mod axis {
    pub const XI: &str = "xi";
    pub const FD: &str = "fd";
    pub const DT: &str = "dt";
    pub const DFTILDE: &str = "dftilde";
    pub const DFD: &str = "dfd";
}

/// Uniformly spaced axis with `n >= 2` nodes from `min` to `max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub name: String,
    pub unit: String,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(name: &str, unit: &str, min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::invalid(format!("grid `{name}` bounds must be finite")));
        }
        if min >= max {
            return Err(Error::invalid(format!("grid `{name}`: min {min} must be below max {max}")));
        }
        if n < 2 {
            return Err(Error::invalid(format!("grid `{name}` needs at least 2 nodes")));
        }
        Ok(GridSpec { name: name.to_string(), unit: unit.to_string(), min, max, n })
    }

    pub fn xi(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(axis::XI, "1", min, max, n)
    }
    pub fn fd(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(axis::FD, "Hz", min, max, n)
    }
    pub fn dt(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(axis::DT, "s", min, max, n)
    }
    pub fn dftilde(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(axis::DFTILDE, "1", min, max, n)
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Cell edges with each node at the center of its cell (n + 1 values).
    pub fn cell_edges(&self) -> Vec<f64> {
        let h = self.step();
        (0..=self.n).map(|i| self.min + (i as f64 - 0.5) * h).collect()
    }

    /// Index of a node equal to `x` within a relative tolerance of the step.
    pub fn find_node(&self, x: f64) -> Option<usize> {
        let pos = (x - self.min) / self.step();
        let i = pos.round();
        if i >= 0.0 && (i as usize) < self.n && (pos - i).abs() < 1e-9 {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Largest absolute node value.
    pub fn max_abs(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SurfaceMeta {
    pub function: String,
    pub scenario: String,
}

/// Row-major complex values over one or two uniform axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSurface {
    axes: Vec<GridSpec>,
    values: Vec<Complex64>,
    meta: SurfaceMeta,
}

impl ComplexSurface {
    pub fn new(axes: Vec<GridSpec>, values: Vec<Complex64>, meta: SurfaceMeta) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::invalid("a surface has one or two axes"));
        }
        let count: usize = axes.iter().map(|a| a.n).product();
        if values.len() != count {
            return Err(Error::invalid(format!("expected {count} values, got {}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid(format!("non-finite value at flat index {i}")));
        }
        Ok(ComplexSurface { axes, values, meta })
    }

    pub fn from_real(axes: Vec<GridSpec>, values: Vec<f64>, meta: SurfaceMeta) -> Result<Self> {
        Self::new(axes, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(), meta)
    }

    pub fn axes(&self) -> &[GridSpec] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &GridSpec {
        &self.axes[i]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn meta(&self) -> &SurfaceMeta {
        &self.meta
    }

    pub fn with_meta(mut self, meta: SurfaceMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn is_2d(&self) -> bool {
        self.axes.len() == 2
    }

    pub fn rows(&self) -> usize {
        self.axes[0].n
    }

    pub fn cols(&self) -> usize {
        if self.is_2d() {
            self.axes[1].n
        } else {
            1
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.cols() + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let c = self.cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Largest |a - b| over matching nodes; grids must agree.
    pub fn sup_distance(&self, other: &ComplexSurface) -> Result<f64> {
        if self.axes != other.axes {
            return Err(Error::invalid("surfaces live on different grids"));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// Trapezoid integral of uniformly sampled values.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_and_edges() {
        let g = GridSpec::fd(-2.0, 2.0, 5).unwrap();
        assert_eq!(g.nodes(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(g.cell_edges(), vec![-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]);
        assert_eq!(g.find_node(0.0), Some(2));
        assert_eq!(g.find_node(0.3), None);
        assert!(GridSpec::fd(1.0, 1.0, 3).is_err());
        assert!(GridSpec::fd(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn surface_rejects_nan_and_bad_sizes() {
        let g = GridSpec::xi(2.0, 3.0, 2).unwrap();
        let meta = SurfaceMeta::default();
        assert!(ComplexSurface::from_real(vec![g.clone()], vec![1.0], meta.clone()).is_err());
        assert!(ComplexSurface::from_real(vec![g.clone()], vec![1.0, f64::NAN], meta.clone()).is_err());
        let s = ComplexSurface::from_real(vec![g.clone(), g], vec![1.0, 2.0, 3.0, 4.0], meta).unwrap();
        assert_eq!(s.get(1, 0).re, 3.0);
        assert_eq!(s.column(1).iter().map(|v| v.re).collect::<Vec<_>>(), vec![2.0, 4.0]);
    }
}
