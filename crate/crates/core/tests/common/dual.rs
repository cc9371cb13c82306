//! Forward-mode dual numbers for exact directional derivatives in oracles.

use nalgebra::Vector3;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub fn new(re: f64, eps: f64) -> Self {
        Dual { re, eps }
    }
    pub fn constant(re: f64) -> Self {
        Dual { re, eps: 0.0 }
    }
    pub fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, 0.5 * self.eps / s)
    }
    pub fn recip(self) -> Self {
        Dual::new(1.0 / self.re, -self.eps / (self.re * self.re))
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}
impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}
impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}
impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        self * o.recip()
    }
}
impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DualVec(pub [Dual; 3]);

impl DualVec {
    pub fn from_parts(re: Vector3<f64>, eps: Vector3<f64>) -> Self {
        DualVec([Dual::new(re.x, eps.x), Dual::new(re.y, eps.y), Dual::new(re.z, eps.z)])
    }
    pub fn dot(&self, o: &DualVec) -> Dual {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }
    pub fn cross(&self, o: &DualVec) -> DualVec {
        let (a, b) = (&self.0, &o.0);
        DualVec([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])
    }
    pub fn norm(&self) -> Dual {
        self.dot(self).sqrt()
    }
    pub fn scale(&self, s: Dual) -> DualVec {
        DualVec([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
    pub fn re(&self) -> Vector3<f64> {
        Vector3::new(self.0[0].re, self.0[1].re, self.0[2].re)
    }
    pub fn eps(&self) -> Vector3<f64> {
        Vector3::new(self.0[0].eps, self.0[1].eps, self.0[2].eps)
    }
}

impl Add for DualVec {
    type Output = DualVec;
    fn add(self, o: DualVec) -> DualVec {
        DualVec([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}
impl Sub for DualVec {
    type Output = DualVec;
    fn sub(self, o: DualVec) -> DualVec {
        DualVec([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}
