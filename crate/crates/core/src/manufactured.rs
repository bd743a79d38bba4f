//! Point-source solutions: outgoing mode kernels centred inside the
//! scatterer, mapped back to temperature and pressure.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::Model;
use crate::point::Vec2;
use crate::specfun::kernel_with_gradient;

/// Source location used with the square-with-hole geometry.
pub const SQUARE_SOURCE: Vec2 = Vec2::new(0.0, 0.0);
/// Source location used with the tuning fork.
pub const FORK_SOURCE: Vec2 = Vec2::new(-0.0375, 0.1665);

/// `V_j = c_j K_{k_j}(x - x0)` and `(T, P) = B^{-1} (V_t, V_p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSourceSolution {
    pub source: Vec2,
    /// `(c_t, c_p)`
    pub amplitudes: [Complex64; 2],
    pub model: Model,
}

impl PointSourceSolution {
    /// Unit amplitudes in both modes.
    pub fn new(model: Model, source: Vec2) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self { source, amplitudes: [one, one], model }
    }

    fn singular(&self, x: Vec2) -> Result<()> {
        if x == self.source {
            return Err(Error::Domain(format!("point source evaluated at its centre {:?}", self.source)));
        }
        Ok(())
    }

    /// Mode values and gradients at `x`.
    pub fn modes_with_gradient(&self, x: Vec2) -> Result<[(Complex64, [Complex64; 2]); 2]> {
        self.singular(x)?;
        let mut out = [(Complex64::default(), [Complex64::default(); 2]); 2];
        for (j, o) in out.iter_mut().enumerate() {
            let a = self.amplitudes[j];
            if a != Complex64::default() {
                let k = kernel_with_gradient(self.model.wavenumber(j), x - self.source)?;
                *o = (a * k.value, [a * k.gradient[0], a * k.gradient[1]]);
            }
        }
        Ok(out)
    }

    /// `(V_t, V_p)` at `x`.
    pub fn exact_modes(&self, x: Vec2) -> Result<[Complex64; 2]> {
        let m = self.modes_with_gradient(x)?;
        Ok([m[0].0, m[1].0])
    }

    /// `(T, P)` at `x`.
    pub fn exact_fields(&self, x: Vec2) -> Result<[Complex64; 2]> {
        Ok(self.model.decouple.to_fields(self.exact_modes(x)?))
    }

    /// `(dV_t/dn, dV_p/dn)` at `x` for the unit normal `n`.
    pub fn mode_normal_derivative(&self, x: Vec2, n: Vec2) -> Result<[Complex64; 2]> {
        let m = self.modes_with_gradient(x)?;
        Ok([0, 1].map(|j| m[j].1[0] * n.x + m[j].1[1] * n.y))
    }

    /// `(dT/dn, dP/dn)` at `x`.
    pub fn field_normal_derivative(&self, x: Vec2, n: Vec2) -> Result<[Complex64; 2]> {
        Ok(self.model.decouple.to_fields(self.mode_normal_derivative(x, n)?))
    }

    /// Analytic Neumann data `(g_T, g_P)` at each point.
    pub fn exact_neumann(&self, points: &[Vec2], normals: &[Vec2]) -> Result<Vec<[Complex64; 2]>> {
        if points.len() != normals.len() {
            return Err(Error::Domain("one normal per point is required".into()));
        }
        points.iter().zip(normals).map(|(&x, &n)| self.field_normal_derivative(x, n)).collect()
    }
}

/// Axis-aligned sampling window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Vec2,
    pub max: Vec2,
}

impl BoundingBox {
    pub fn new(min: Vec2, max: Vec2) -> Result<Self> {
        if !(max.x > min.x && max.y > min.y) {
            return Err(Error::Config(format!("empty bounding box {min:?} .. {max:?}")));
        }
        Ok(Self { min, max })
    }
}

/// Regular grid samples; `None` marks points outside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    pub points: Vec<Vec2>,
    pub values: Vec<Option<[Complex64; 2]>>,
}

/// `(resolution + 1)^2` samples, row by row from the lower-left corner.
pub fn sample_grid(
    bbox: BoundingBox,
    resolution: usize,
    f: impl Fn(Vec2) -> Option<[Complex64; 2]>,
) -> Result<GridSamples> {
    if resolution == 0 {
        return Err(Error::Config("grid resolution must be at least 1".into()));
    }
    let n = resolution;
    let mut points = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let t = Vec2::new(i as f64 / n as f64, j as f64 / n as f64);
            points.push(Vec2::new(
                bbox.min.x + t.x * (bbox.max.x - bbox.min.x),
                bbox.min.y + t.y * (bbox.max.y - bbox.min.y),
            ));
        }
    }
    let values = points.iter().map(|&p| f(p)).collect();
    Ok(GridSamples { points, values })
}

impl GridSamples {
    /// Header row then `x,y,re,im,re,im`; missing values are empty fields.
    pub fn write_csv(&self, names: [&str; 2], mut w: impl Write) -> Result<()> {
        writeln!(w, "x,y,{0}_re,{0}_im,{1}_re,{1}_im", names[0], names[1])?;
        for (p, v) in self.points.iter().zip(&self.values) {
            match v {
                Some([a, b]) => writeln!(w, "{:e},{:e},{:e},{:e},{:e},{:e}", p.x, p.y, a.re, a.im, b.re, b.im)?,
                None => writeln!(w, "{:e},{:e},,,,", p.x, p.y)?,
            }
        }
        Ok(())
    }
}
