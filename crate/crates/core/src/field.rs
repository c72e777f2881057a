//! Complex scalar fields sampled on the simulation plane.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Result, RouterError};
use crate::params::GridSpec;

/// A complex amplitude on the `(x̃, ỹ)` grid, stored row-major with `y` as the
/// slow index.
///
/// `depth` is the analytic out-of-plane integral `∫ |f(z)|² dz` of the
/// Gaussian `z`-profile all fields share, so that `Σ|u|²·dx·dy·depth` is the
/// full three-dimensional norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: GridSpec,
    pub depth: f64,
    pub data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: GridSpec, depth: f64) -> Self {
        Self { grid, depth, data: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: GridSpec, depth: f64, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                data.push(f(grid.x(i), y));
            }
        }
        Self { grid, depth, data }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.grid.nx + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[self.index(i, j)]
    }

    /// `Σ|u|²·dx·dy·depth`.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area() * self.depth
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { data: self.data.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Cell indices `(i, j)` of the largest magnitude; ties resolve to the first.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (k, v) in self.data.iter().enumerate() {
            let a = v.norm_sqr();
            if a > best_val {
                best_val = a;
                best = k;
            }
        }
        (best % self.grid.nx, best / self.grid.nx)
    }

    /// CSV with columns `x_tilde, y_tilde, re, im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x_tilde,y_tilde,re,im")?;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let v = self.get(i, j);
                writeln!(w, "{},{},{},{}", self.grid.x(i), self.grid.y(j), v.re, v.im)?;
            }
        }
        Ok(())
    }

    /// Flat little-endian binary: `nx, ny, x_extent, y_extent` as `f64`,
    /// followed by row-major `(re, im)` pairs as `f64`. The depth factor is
    /// not stored.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let header = [
            self.grid.nx as f64,
            self.grid.ny as f64,
            self.grid.x_extent,
            self.grid.y_extent,
        ];
        for v in header {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R, depth: f64) -> Result<Self> {
        let mut buf = [0u8; 8];
        let mut next = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut buf)?;
            Ok(f64::from_le_bytes(buf))
        };
        let nx = next(&mut r)?;
        let ny = next(&mut r)?;
        if nx < 1.0 || ny < 1.0 || nx.fract() != 0.0 || ny.fract() != 0.0 {
            return Err(RouterError::Parameter(format!("bad field header {nx} x {ny}")));
        }
        let grid = GridSpec::new(nx as usize, ny as usize, next(&mut r)?, next(&mut r)?)?;
        let mut data = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = next(&mut r)?;
            let im = next(&mut r)?;
            data.push(Complex64::new(re, im));
        }
        Ok(Self { grid, depth, data })
    }

    /// Bilinear sample at `(x, y)`, using only cells where `mask` is true.
    /// Weights of masked-out neighbours are dropped and the rest renormalized.
    /// Returns `None` when `(x, y)` lies outside the grid's cell centers.
    pub fn sample_bilinear(&self, x: f64, y: f64, mask: &[bool]) -> Option<Complex64> {
        let g = &self.grid;
        let fx = (x - g.x_min()) / g.dx() - 0.5;
        let fy = (y - g.y_min()) / g.dy() - 0.5;
        if fx < -1e-9 || fy < -1e-9 || fx > (g.nx - 1) as f64 + 1e-9 || fy > (g.ny - 1) as f64 + 1e-9 {
            return None;
        }
        let fx = fx.clamp(0.0, (g.nx - 1) as f64);
        let fy = fy.clamp(0.0, (g.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(g.nx.saturating_sub(2));
        let j0 = (fy.floor() as usize).min(g.ny.saturating_sub(2));
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut wsum = 0.0;
        for (di, wx) in [(0usize, 1.0 - tx), (1, tx)] {
            for (dj, wy) in [(0usize, 1.0 - ty), (1, ty)] {
                let (i, j) = (i0 + di, j0 + dj);
                if i >= g.nx || j >= g.ny {
                    continue;
                }
                let w = wx * wy;
                let k = self.index(i, j);
                if w > 0.0 && mask[k] {
                    acc += self.data[k] * w;
                    wsum += w;
                }
            }
        }
        Some(if wsum > 0.0 { acc / wsum } else { acc })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(6, 4, 1.2, 0.8).unwrap()
    }

    #[test]
    fn norm_is_quadratic() {
        let f = ComplexField::from_fn(grid(), 0.5, |x, y| Complex64::new(x, y));
        let g = f.scaled(Complex64::new(2.0, 0.0));
        assert!((g.norm() - 4.0 * f.norm()).abs() < 1e-14);
        assert_eq!(ComplexField::zeros(grid(), 1.0).norm(), 0.0);
    }

    #[test]
    fn binary_round_trip() {
        let f = ComplexField::from_fn(grid(), 1.0, |x, y| Complex64::new(x * y, x - y));
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 * (4 + 2 * 24));
        let back = ComplexField::read_binary(&buf[..], 1.0).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_has_one_line_per_cell() {
        let f = ComplexField::zeros(grid(), 1.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 24);
        assert!(text.starts_with("x_tilde,y_tilde,re,im"));
    }

    #[test]
    fn bilinear_reproduces_linear_functions() {
        let g = grid();
        let f = ComplexField::from_fn(g, 1.0, |x, y| Complex64::new(2.0 * x - y, x + 3.0 * y));
        let mask = vec![true; g.len()];
        let v = f.sample_bilinear(0.13, -0.07, &mask).unwrap();
        assert!((v - Complex64::new(2.0 * 0.13 + 0.07, 0.13 - 0.21)).norm() < 1e-12);
        assert!(f.sample_bilinear(0.9, 0.0, &mask).is_none());
    }
}
