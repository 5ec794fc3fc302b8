//! Minimal complex arithmetic over MPFR floats.

use rug::Float;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Cx {
    pub re: Float,
    pub im: Float,
}

impl Cx {
    pub fn new(re: Float, im: Float) -> Self {
        Cx { re, im }
    }

    pub fn real(x: Float) -> Self {
        let prec = x.prec();
        Cx { re: x, im: Float::new(prec) }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn mul(&self, o: &Cx) -> Cx {
        let p = self.prec();
        let re = Float::with_val(p, &self.re * &o.re) - Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.re * &o.im) + Float::with_val(p, &self.im * &o.re);
        Cx { re, im }
    }

    pub fn mul_assign(&mut self, o: &Cx) {
        *self = self.mul(o);
    }

    pub fn scale(&self, k: &Float) -> Cx {
        let p = self.prec();
        Cx { re: Float::with_val(p, &self.re * k), im: Float::with_val(p, &self.im * k) }
    }

    pub fn add_assign(&mut self, o: &Cx) {
        self.re += &o.re;
        self.im += &o.im;
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref())
    }

    /// `e^{i theta}`.
    pub fn cis(theta: &Float) -> Cx {
        let (s, c) = theta.clone().sin_cos(Float::new(theta.prec()));
        Cx { re: c, im: s }
    }

}
