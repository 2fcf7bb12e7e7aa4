use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::math;

/// A point of three-dimensional Fourier space.
///
/// Cascade nodes always carry nonzero wavenumbers; directions (unit vectors)
/// use the same type.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wavenumber {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Wavenumber {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Wavenumber { x, y, z }
    }

    #[inline]
    pub fn dot(self, other: Wavenumber) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    pub fn cross(self, o: Wavenumber) -> Wavenumber {
        Wavenumber::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    /// `self / |self|`, failing on the zero vector.
    pub fn unit(self) -> Result<Wavenumber> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateWavenumber);
        }
        Ok(self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs(self) -> f64 {
        math::abs(self.x)
            .max(math::abs(self.y))
            .max(math::abs(self.z))
    }
}

impl Add for Wavenumber {
    type Output = Wavenumber;
    #[inline]
    fn add(self, o: Wavenumber) -> Wavenumber {
        Wavenumber::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Wavenumber {
    type Output = Wavenumber;
    #[inline]
    fn sub(self, o: Wavenumber) -> Wavenumber {
        Wavenumber::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Wavenumber {
    type Output = Wavenumber;
    fn neg(self) -> Wavenumber {
        Wavenumber::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Wavenumber {
    type Output = Wavenumber;
    #[inline]
    fn mul(self, s: f64) -> Wavenumber {
        Wavenumber::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Right-handed orthonormal frame `(e, f, g)` with `e` the given unit vector.
///
/// Branch-free construction of Duff et al. (2017); stable at both poles.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub e: Wavenumber,
    pub f: Wavenumber,
    pub g: Wavenumber,
}

impl Frame {
    pub fn from_unit(e: Wavenumber) -> Frame {
        let sign = math::copysign(1.0, e.z);
        let a = -1.0 / (sign + e.z);
        let b = e.x * e.y * a;
        let f = Wavenumber::new(1.0 + sign * e.x * e.x * a, sign * b, -sign * e.x);
        let g = Wavenumber::new(b, sign + e.y * e.y * a, -e.y);
        Frame { e, f, g }
    }

    /// World coordinates of the unit vector at polar angle `acos(cos_polar)`
    /// from `e` and azimuth `azimuth` in the `(f, g)` plane.
    pub fn direction(&self, cos_polar: f64, azimuth: f64) -> Wavenumber {
        let sin_polar = math::sqrt((1.0 - cos_polar * cos_polar).max(0.0));
        let (s, c) = (math::sin(azimuth), math::cos(azimuth));
        self.e * cos_polar + (self.f * c + self.g * s) * sin_polar
    }
}
