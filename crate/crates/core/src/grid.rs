//! Uniform tensor-product grids and the grid functions living on them.
//!
//! Storage is row-major with `x` the fastest-varying index: node `(i, j)`
//! lives at `j * nx + i`. Every module relies on this layout.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::num::Real;

/// Smallest node count per direction supported by the stencils.
pub const MIN_NODES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
    pub nx: usize,
    pub ny: usize,
    pub dx: T,
    pub dy: T,
    pub periodic_x: bool,
    pub periodic_y: bool,
}

impl<T: Real> Grid2D<T> {
    /// Builds a grid over `[x_min, x_max] x [y_min, y_max]`.
    ///
    /// A periodic direction identifies the right endpoint with the left one,
    /// so its spacing is `extent / n`; a bounded direction includes both
    /// endpoints and uses `extent / (n - 1)`.
    pub fn new(
        x_range: (T, T),
        y_range: (T, T),
        nx: usize,
        ny: usize,
        periodic_x: bool,
        periodic_y: bool,
    ) -> Result<Self> {
        let dx = spacing(x_range, nx, periodic_x, "x")?;
        let dy = spacing(y_range, ny, periodic_y, "y")?;
        Ok(Self {
            x_min: x_range.0,
            x_max: x_range.1,
            y_min: y_range.0,
            y_max: y_range.1,
            nx,
            ny,
            dx,
            dy,
            periodic_x,
            periodic_y,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.x_min + T::of(i as f64) * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> T {
        self.y_min + T::of(j as f64) * self.dy
    }

    pub fn node_coords(&self, i: usize, j: usize) -> Result<(T, T)> {
        if i >= self.nx || j >= self.ny {
            return Err(Error::IndexOutOfRange {
                i,
                j,
                nx: self.nx,
                ny: self.ny,
            });
        }
        Ok((self.x(i), self.y(j)))
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.periodic_x && self.periodic_y
    }

    /// Index of the node closest to `(x, y)`, or `None` outside the domain.
    pub fn nearest_node(&self, x: T, y: T) -> Option<(usize, usize)> {
        let i = nearest(x, self.x_min, self.x_max, self.dx, self.nx, self.periodic_x)?;
        let j = nearest(y, self.y_min, self.y_max, self.dy, self.ny, self.periodic_y)?;
        Some((i, j))
    }

    /// Samples `f(x, y)` at every node.
    pub fn sample(&self, f: impl Fn(T, T) -> T) -> Field<T> {
        let mut data = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            let y = self.y(j);
            for i in 0..self.nx {
                data.push(f(self.x(i), y));
            }
        }
        Field {
            nx: self.nx,
            ny: self.ny,
            data,
        }
    }

    /// Converts the grid to another scalar type.
    pub fn cast<U: Real>(&self) -> Grid2D<U> {
        let f = |v: T| U::of(v.to_f64_lossy());
        Grid2D {
            x_min: f(self.x_min),
            x_max: f(self.x_max),
            y_min: f(self.y_min),
            y_max: f(self.y_max),
            nx: self.nx,
            ny: self.ny,
            dx: f(self.dx),
            dy: f(self.dy),
            periodic_x: self.periodic_x,
            periodic_y: self.periodic_y,
        }
    }
}

fn spacing<T: Real>(range: (T, T), n: usize, periodic: bool, axis: &str) -> Result<T> {
    if n < MIN_NODES {
        return Err(Error::InvalidGrid(format!(
            "{axis}: need at least {MIN_NODES} nodes, got {n}"
        )));
    }
    let extent = range.1 - range.0;
    if !(extent > T::zero()) || !extent.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "{axis}: extent must be positive and finite, got [{}, {}]",
            range.0, range.1
        )));
    }
    let cells = if periodic { n } else { n - 1 };
    Ok(extent / T::of(cells as f64))
}

fn nearest<T: Real>(p: T, lo: T, hi: T, d: T, n: usize, periodic: bool) -> Option<usize> {
    if !(p >= lo && p <= hi) {
        return None;
    }
    let k = ((p - lo) / d).round().to_usize()?;
    if periodic {
        Some(k % n)
    } else {
        Some(k.min(n - 1))
    }
}

/// A scalar grid function in the layout described at module level.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    nx: usize,
    ny: usize,
    data: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self::constant(nx, ny, T::zero())
    }

    pub fn constant(nx: usize, ny: usize, value: T) -> Self {
        Self {
            nx,
            ny,
            data: vec![value; nx * ny],
        }
    }

    pub fn from_vec(nx: usize, ny: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != nx * ny {
            return Err(Error::SizeMismatch {
                expected: nx * ny,
                got: data.len(),
            });
        }
        Ok(Self { nx, ny, data })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[j * self.nx + i]
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }
}

impl<T> Deref for Field<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.data
    }
}

impl<T> DerefMut for Field<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_convention() {
        let g = Grid2D::new((-1.0, 1.0), (-1.0, 1.0), 4, 4, true, true).unwrap();
        assert_eq!(g.dx, 0.5);
        assert_eq!(g.dy, 0.5);
        let xs: Vec<f64> = (0..4).map(|i| g.x(i)).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5]);
        assert_eq!(g.node_coords(3, 2).unwrap(), (0.5, 0.0));
    }

    #[test]
    fn bounded_convention() {
        let g = Grid2D::new((-1.0, 1.0), (-1.0, 1.0), 5, 5, false, false).unwrap();
        assert_eq!(g.dx, 0.5);
        let xs: Vec<f64> = (0..5).map(|i| g.x(i)).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.node_coords(0, 0).unwrap(), (-1.0, -1.0));
        assert_eq!(g.node_coords(4, 0).unwrap(), (1.0, -1.0));
    }

    #[test]
    fn soliton_domain_spacing() {
        let g = Grid2D::<f64>::new((-30.0, 30.0), (0.0, 1.0), 600, 4, true, true).unwrap();
        assert!((g.dx - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Grid2D::new((1.0, 1.0), (0.0, 1.0), 8, 8, true, true).is_err());
        assert!(Grid2D::new((1.0, 0.0), (0.0, 1.0), 8, 8, true, true).is_err());
        assert!(Grid2D::new((0.0, 1.0), (0.0, 1.0), 3, 8, true, true).is_err());
        let g = Grid2D::new((0.0, 1.0), (0.0, 1.0), 4, 4, false, false).unwrap();
        assert!(matches!(
            g.node_coords(4, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn adjacent_nodes_differ_by_spacing() {
        let g = Grid2D::new((0.0, 4.0), (0.0, 2.0), 9, 5, false, false).unwrap();
        for i in 1..g.nx {
            assert_eq!(g.x(i) - g.x(i - 1), g.dx);
        }
        for j in 1..g.ny {
            assert_eq!(g.y(j) - g.y(j - 1), g.dy);
        }
    }

    #[test]
    fn nearest_node_wraps_periodic() {
        let g = Grid2D::new((0.0, 1.0), (0.0, 1.0), 10, 10, true, false).unwrap();
        assert_eq!(g.nearest_node(0.99, 1.0), Some((0, 9)));
        assert_eq!(g.nearest_node(0.31, 0.0), Some((3, 0)));
        assert_eq!(g.nearest_node(1.5, 0.0), None);
    }

    #[test]
    fn sample_layout_is_x_fastest() {
        let g = Grid2D::new((0.0, 3.0), (0.0, 3.0), 4, 4, false, false).unwrap();
        let f = g.sample(|x, y| x + 10.0 * y);
        assert_eq!(f[1], 1.0);
        assert_eq!(f[4], 10.0);
        assert_eq!(f.at(2, 3), 32.0);
    }
}
