#![allow(dead_code)]

use hypercmc::loopcore::{Matrix2, MatrixLoop};
use hypercmc::C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rand_c(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    C64::new(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

/// Random twisted SL2C loop of degree <= `deg`: a product of lambda^{+-1} unipotent factors
/// and constant diagonal factors.
pub fn random_twisted_sl2(rng: &mut ChaCha8Rng, deg: usize, amp: f64) -> MatrixLoop {
    let mut g = MatrixLoop::identity();
    let t = rand_c(rng, 0.3);
    g = g.mul(&MatrixLoop::constant(Matrix2::diag(t.exp(), (-t).exp())));
    let (mut lo, mut hi) = (0i32, 0i32);
    for _ in 0..deg {
        let p: i32 = if rng.gen_bool(0.5) { 1 } else { -1 };
        if (p == 1 && hi + 1 > deg as i32) || (p == -1 && lo - 1 < -(deg as i32)) {
            continue;
        }
        let cf = rand_c(rng, amp);
        let m = if rng.gen_bool(0.5) { Matrix2::e12().scale(cf) } else { Matrix2::e21().scale(cf) };
        let f = MatrixLoop::identity().add(&MatrixLoop::monomial(p, m));
        g = g.mul(&f);
        if p == 1 {
            hi += 1
        } else {
            lo -= 1
        }
    }
    g
}

/// Closed-form umbilic frame (1-|z|^2)^{-1/2} [[1, l^-1 z],[l conj z, 1]].
pub fn umbilic_frame(z: C64) -> MatrixLoop {
    let s = 1.0 / (1.0 - z.norm_sqr()).sqrt();
    MatrixLoop::from_parts(
        -1,
        vec![Matrix2::e12().scale(z * s), Matrix2::identity().scale_re(s), Matrix2::e21().scale(z.conj() * s)],
        true,
    )
}

/// Closed-form umbilic plus factor [[s, 0], [-l conj z s, 1/s]].
pub fn umbilic_plus(z: C64) -> MatrixLoop {
    let s = 1.0 / (1.0 - z.norm_sqr()).sqrt();
    MatrixLoop::from_parts(
        0,
        vec![Matrix2::diag(c(s, 0.0), c(1.0 / s, 0.0)), Matrix2::e21().scale(-z.conj() * s)],
        true,
    )
}

pub fn umbilic_c(z: C64) -> MatrixLoop {
    MatrixLoop::identity().add(&MatrixLoop::monomial(-1, Matrix2::e12().scale(z)))
}

/// Printed f_lambda of the umbilic family at lambda = e^{-q/2}.
pub fn umbilic_f(z: C64, q: f64) -> Matrix2 {
    let r2 = z.norm_sqr();
    let k = 1.0 / (1.0 - r2);
    let ch = (-q).exp() + q.exp();
    Matrix2::new(
        c(k * ((-q / 2.0).exp() + (1.5 * q).exp() * r2), 0.0),
        z * (k * ch),
        z.conj() * (k * ch),
        c(k * ((q / 2.0).exp() + (-1.5 * q).exp() * r2), 0.0),
    )
}
