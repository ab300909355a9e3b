//! SU(2) elements as unit quaternions and su(2) algebra elements as real 3-vectors.
//!
//! `U = q0 I + i (q1 σ1 + q2 σ2 + q3 σ3)`, and the algebra element `ξ` stands for
//! `X = i ξ·σ`. With this convention `exp(ξ) = (cos|ξ|, sin|ξ| ξ/|ξ|)` and
//! `‖X‖_F² = 2|ξ|²`. The Cartan generator `τ = diag(1,-1) = σ3`, so `exp(iθτ)`
//! is `ξ = (0, 0, θ)`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

pub type Mat2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Alg(pub [f64; 3]);

impl Alg {
    pub const ZERO: Alg = Alg([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Alg([x, y, z])
    }

    pub fn tau(theta: f64) -> Self {
        Alg([0.0, 0.0, theta])
    }

    pub fn dot(&self, o: &Alg) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Frobenius norm of `i ξ·σ`.
    pub fn frobenius(&self) -> f64 {
        (2.0 * self.norm_sq()).sqrt()
    }

    pub fn cross(&self, o: &Alg) -> Alg {
        let a = &self.0;
        let b = &o.0;
        Alg([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn scale(&self, s: f64) -> Alg {
        Alg([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    /// Matrix of `i ξ·σ`.
    pub fn to_matrix(&self) -> Mat2 {
        let [x, y, z] = self.0;
        let i = Complex64::i();
        [
            [i * z, Complex64::new(y, x)],
            [Complex64::new(-y, x), -i * z],
        ]
    }

    /// Reads `ξ` back from a traceless anti-hermitian matrix (ignores any hermitian part).
    pub fn from_matrix(m: &Mat2) -> Alg {
        let z = 0.5 * (m[0][0].im - m[1][1].im);
        let x = 0.5 * (m[0][1].im + m[1][0].im);
        let y = 0.5 * (m[0][1].re - m[1][0].re);
        Alg([x, y, z])
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Alg {
        Alg([
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ])
    }
}

impl Add for Alg {
    type Output = Alg;
    fn add(self, o: Alg) -> Alg {
        Alg([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Alg {
    type Output = Alg;
    fn sub(self, o: Alg) -> Alg {
        Alg([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Alg {
    type Output = Alg;
    fn neg(self) -> Alg {
        self.scale(-1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Su2(pub [f64; 4]);

impl Default for Su2 {
    fn default() -> Self {
        Su2::IDENTITY
    }
}

impl Su2 {
    pub const IDENTITY: Su2 = Su2([1.0, 0.0, 0.0, 0.0]);
    pub const MINUS_IDENTITY: Su2 = Su2([-1.0, 0.0, 0.0, 0.0]);

    pub fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Su2([q0, q1, q2, q3]).normalized()
    }

    pub fn normalized(self) -> Self {
        let n = self.0.iter().map(|v| v * v).sum::<f64>().sqrt();
        Su2([self.0[0] / n, self.0[1] / n, self.0[2] / n, self.0[3] / n])
    }

    pub fn exp(xi: Alg) -> Su2 {
        let r = xi.norm();
        if r < 1e-300 {
            return Su2::IDENTITY;
        }
        let s = r.sin() / r;
        Su2([r.cos(), s * xi.0[0], s * xi.0[1], s * xi.0[2]])
    }

    /// `exp(iθτ) = diag(e^{iθ}, e^{-iθ})`.
    pub fn diag(theta: f64) -> Su2 {
        Su2([theta.cos(), 0.0, 0.0, theta.sin()])
    }

    /// Principal logarithm. The returned `|ξ|` lies in `[0, π]`; at `-I` the direction is
    /// arbitrary, callers that need a well-defined branch use [`Su2::log_checked`].
    pub fn log(&self) -> Alg {
        let v = (self.0[1] * self.0[1] + self.0[2] * self.0[2] + self.0[3] * self.0[3]).sqrt();
        let r = v.atan2(self.0[0]);
        if v < 1e-300 {
            return if self.0[0] > 0.0 {
                Alg::ZERO
            } else {
                Alg([0.0, 0.0, std::f64::consts::PI])
            };
        }
        let s = r / v;
        Alg([s * self.0[1], s * self.0[2], s * self.0[3]])
    }

    /// Principal logarithm, `None` when the element is within `margin` of the cut at `-I`.
    pub fn log_checked(&self, margin: f64) -> Option<Alg> {
        let l = self.log();
        if l.norm() > std::f64::consts::PI - margin {
            None
        } else {
            Some(l)
        }
    }

    /// `|ξ|` of the principal log, i.e. half the rotation angle of the adjoint image.
    pub fn angle(&self) -> f64 {
        let v = (self.0[1] * self.0[1] + self.0[2] * self.0[2] + self.0[3] * self.0[3]).sqrt();
        v.atan2(self.0[0])
    }

    pub fn inv(&self) -> Su2 {
        Su2([self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }

    pub fn trace(&self) -> f64 {
        2.0 * self.0[0]
    }

    fn vec(&self) -> Alg {
        Alg([self.0[1], self.0[2], self.0[3]])
    }

    pub fn to_matrix(&self) -> Mat2 {
        let [q0, q1, q2, q3] = self.0;
        [
            [Complex64::new(q0, q3), Complex64::new(q2, q1)],
            [Complex64::new(-q2, q1), Complex64::new(q0, -q3)],
        ]
    }

    /// Projects a matrix onto SU(2) by reading its quaternion part and renormalizing.
    pub fn from_matrix(m: &Mat2) -> Su2 {
        let q0 = 0.5 * (m[0][0].re + m[1][1].re);
        let q3 = 0.5 * (m[0][0].im - m[1][1].im);
        let q1 = 0.5 * (m[0][1].im + m[1][0].im);
        let q2 = 0.5 * (m[0][1].re - m[1][0].re);
        Su2::new(q0, q1, q2, q3)
    }

    /// `Ad_U ξ`, i.e. `U (iξ·σ) U⁻¹`.
    pub fn adjoint(&self, xi: &Alg) -> Alg {
        let r = self.rotation();
        Alg([
            r[0][0] * xi.0[0] + r[0][1] * xi.0[1] + r[0][2] * xi.0[2],
            r[1][0] * xi.0[0] + r[1][1] * xi.0[1] + r[1][2] * xi.0[2],
            r[2][0] * xi.0[0] + r[2][1] * xi.0[1] + r[2][2] * xi.0[2],
        ])
    }

    /// The SO(3) image of `Ad_U` acting on algebra coordinates.
    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let [w, x, y, z] = [self.0[0], -self.0[1], -self.0[2], -self.0[3]];
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    /// Haar-random element.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Su2 {
        let q = [
            standard_normal(rng),
            standard_normal(rng),
            standard_normal(rng),
            standard_normal(rng),
        ];
        Su2(q).normalized()
    }

    /// Operator-norm distance to the identity, `‖U - I‖` (equals `2 sin(|ξ|/2)`).
    pub fn dist_identity(&self) -> f64 {
        2.0 * (0.5 * self.angle()).sin()
    }

    /// Frobenius distance between two elements.
    pub fn dist(&self, o: &Su2) -> f64 {
        let d: f64 = self.0.iter().zip(o.0.iter()).map(|(a, b)| (a - b).powi(2)).sum();
        (2.0 * d).sqrt()
    }

    pub fn unitarity_defect(&self) -> f64 {
        (self.0.iter().map(|v| v * v).sum::<f64>() - 1.0).abs()
    }
}

impl Mul for Su2 {
    type Output = Su2;
    fn mul(self, o: Su2) -> Su2 {
        let p0 = self.0[0];
        let r0 = o.0[0];
        let p = self.vec();
        let r = o.vec();
        let c = p.cross(&r);
        Su2([
            p0 * r0 - p.dot(&r),
            p0 * r.0[0] + r0 * p.0[0] - c.0[0],
            p0 * r.0[1] + r0 * p.0[1] - c.0[1],
            p0 * r.0[2] + r0 * p.0[2] - c.0[2],
        ])
    }
}

/// Box–Muller standard normal sample.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat_adjoint(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

pub fn mat_inv(a: &Mat2) -> Option<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.norm() < 1e-14 {
        return None;
    }
    Some([
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ])
}

pub fn mat_add(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

pub fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

pub fn mat_scale(a: &Mat2, s: Complex64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn mat_identity() -> Mat2 {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    [[o, z], [z, o]]
}

pub fn mat_zero() -> Mat2 {
    [[Complex64::new(0.0, 0.0); 2]; 2]
}

pub fn mat_norm(a: &Mat2) -> f64 {
    a.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn pauli() -> [Mat2; 3] {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let i = Complex64::i();
    [[[z, o], [o, z]], [[z, -i], [i, z]], [[o, z], [z, -o]]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        mat_norm(&mat_sub(a, b)) < tol
    }

    #[test]
    fn algebra_matrix_is_i_xi_sigma() {
        let s = pauli();
        let xi = Alg::new(0.3, -0.7, 1.1);
        let mut m = mat_zero();
        for k in 0..3 {
            m = mat_add(&m, &mat_scale(&s[k], Complex64::new(0.0, xi.0[k])));
        }
        assert!(close(&m, &xi.to_matrix(), 1e-15));
        assert!((mat_norm(&m) - xi.frobenius()).abs() < 1e-14);
    }

    #[test]
    fn diag_is_exp_i_theta_tau() {
        let u = Su2::diag(0.4).to_matrix();
        assert!((u[0][0] - Complex64::from_polar(1.0, 0.4)).norm() < 1e-15);
        assert!((u[1][1] - Complex64::from_polar(1.0, -0.4)).norm() < 1e-15);
        assert!(u[0][1].norm() < 1e-15);
    }

    #[test]
    fn exp_matches_matrix_series() {
        let xi = Alg::new(0.2, 0.5, -0.4);
        let x = xi.to_matrix();
        let mut term = mat_identity();
        let mut sum = mat_identity();
        for k in 1..30 {
            term = mat_scale(&mat_mul(&term, &x), Complex64::new(1.0 / k as f64, 0.0));
            sum = mat_add(&sum, &term);
        }
        assert!(close(&sum, &Su2::exp(xi).to_matrix(), 1e-13));
    }

    #[test]
    fn minus_identity_log_is_at_cut() {
        assert!(Su2::MINUS_IDENTITY.log_checked(1e-6).is_none());
        assert!((Su2::MINUS_IDENTITY.angle() - std::f64::consts::PI).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn product_matches_matrix_product(s1 in 0u64..1000, s2 in 0u64..1000) {
            let mut r1 = ChaCha8Rng::seed_from_u64(s1);
            let mut r2 = ChaCha8Rng::seed_from_u64(s2 + 7919);
            let a = Su2::random(&mut r1);
            let b = Su2::random(&mut r2);
            let lhs = (a * b).to_matrix();
            let rhs = mat_mul(&a.to_matrix(), &b.to_matrix());
            prop_assert!(close(&lhs, &rhs, 1e-13));
            prop_assert!(close(&mat_mul(&a.to_matrix(), &a.inv().to_matrix()), &mat_identity(), 1e-13));
        }

        #[test]
        fn adjoint_matches_conjugation(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = Su2::random(&mut rng);
            let xi = Alg::random(&mut rng);
            let m = mat_mul(&mat_mul(&u.to_matrix(), &xi.to_matrix()), &u.inv().to_matrix());
            let got = u.adjoint(&xi);
            prop_assert!(close(&m, &got.to_matrix(), 1e-13));
        }

        #[test]
        fn log_inverts_exp(x in -1.5f64..1.5, y in -1.5f64..1.5, z in -1.5f64..1.5) {
            let xi = Alg::new(x, y, z);
            prop_assume!(xi.norm() < 3.0);
            let back = Su2::exp(xi).log();
            prop_assert!((back - xi).norm() < 1e-12);
        }

        #[test]
        fn matrix_roundtrip(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = Su2::random(&mut rng);
            let back = Su2::from_matrix(&u.to_matrix());
            prop_assert!(u.dist(&back) < 1e-14);
            prop_assert!(u.unitarity_defect() < 1e-14);
        }
    }
}
