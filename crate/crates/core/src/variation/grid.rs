use crate::error::{Error, Result};
use crate::su2::Mat2;
use num_complex::Complex64 as C;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Uniform square-cell grid on a chart; index `j * nx + i` at `(x0 + i h, y0 + j h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    /// Periodic grids use spectral derivatives, others fourth-order stencils.
    pub periodic: bool,
}

impl Grid2 {
    /// Periodic `n × n` grid on the unit square.
    pub fn periodic(n: usize) -> Self {
        Self {
            nx: n,
            ny: n,
            x0: 0.0,
            y0: 0.0,
            h: 1.0 / n as f64,
            periodic: true,
        }
    }

    /// Non-periodic grid covering `[x0, x1] × [y0, y0 + (x1 − x0)]` with `n` points per side.
    pub fn square(x0: f64, y0: f64, x1: f64, n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::Config(format!("stencil grid needs >= 5 points per side, got {n}")));
        }
        Ok(Self {
            nx: n,
            ny: n,
            x0,
            y0,
            h: (x1 - x0) / (n - 1) as f64,
            periodic: false,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, k: usize) -> C {
        C::new(self.x0 + (k % self.nx) as f64 * self.h, self.y0 + (k / self.nx) as f64 * self.h)
    }

    pub fn sample(&self, f: impl Fn(C) -> C) -> Vec<C> {
        (0..self.len()).map(|k| f(self.point(k))).collect()
    }

    pub fn sample_mat(&self, f: impl Fn(C) -> Mat2) -> Vec<Mat2> {
        (0..self.len()).map(|k| f(self.point(k))).collect()
    }

    fn line_derivative(&self, line: &mut [C], planner: &mut FftPlanner<f64>) {
        let n = line.len();
        if self.periodic {
            let fwd = planner.plan_fft_forward(n);
            let inv = planner.plan_fft_inverse(n);
            fwd.process(line);
            let len = n as f64 * self.h;
            for (m, c) in line.iter_mut().enumerate() {
                let k = if 2 * m < n {
                    m as f64
                } else if 2 * m == n {
                    0.0
                } else {
                    m as f64 - n as f64
                };
                *c *= C::new(0.0, 2.0 * PI * k / len) / n as f64;
            }
            inv.process(line);
        } else {
            let f = line.to_vec();
            let d = 12.0 * self.h;
            for i in 0..n {
                line[i] = if i >= 2 && i + 2 < n {
                    (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / d
                } else if i == 0 {
                    (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / d
                } else if i == 1 {
                    (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / d
                } else if i == n - 2 {
                    (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / d
                } else {
                    (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / d
                };
            }
        }
    }

    pub fn d_dx(&self, f: &[C]) -> Vec<C> {
        let mut planner = FftPlanner::new();
        let mut out = f.to_vec();
        for row in out.chunks_mut(self.nx) {
            self.line_derivative(row, &mut planner);
        }
        out
    }

    pub fn d_dy(&self, f: &[C]) -> Vec<C> {
        let mut planner = FftPlanner::new();
        let mut out = f.to_vec();
        let mut col = vec![C::new(0.0, 0.0); self.ny];
        for i in 0..self.nx {
            for j in 0..self.ny {
                col[j] = f[j * self.nx + i];
            }
            self.line_derivative(&mut col, &mut planner);
            for j in 0..self.ny {
                out[j * self.nx + i] = col[j];
            }
        }
        out
    }

    /// `(∂_z f, ∂_z̄ f)` with `∂_z = (∂_x − i∂_y)/2`.
    pub fn wirtinger(&self, f: &[C]) -> (Vec<C>, Vec<C>) {
        let fx = self.d_dx(f);
        let fy = self.d_dy(f);
        let i = C::i();
        let dz = fx.iter().zip(&fy).map(|(a, b)| 0.5 * (a - i * b)).collect();
        let dzb = fx.iter().zip(&fy).map(|(a, b)| 0.5 * (a + i * b)).collect();
        (dz, dzb)
    }

    /// Entrywise Wirtinger derivatives of a matrix field.
    pub fn wirtinger_mat(&self, f: &[Mat2]) -> (Vec<Mat2>, Vec<Mat2>) {
        let zero = [[C::new(0.0, 0.0); 2]; 2];
        let mut dz = vec![zero; f.len()];
        let mut dzb = vec![zero; f.len()];
        for r in 0..2 {
            for c in 0..2 {
                let comp: Vec<C> = f.iter().map(|m| m[r][c]).collect();
                let (a, b) = self.wirtinger(&comp);
                for k in 0..f.len() {
                    dz[k][r][c] = a[k];
                    dzb[k][r][c] = b[k];
                }
            }
        }
        (dz, dzb)
    }

    /// `Σ |f|² h²`.
    pub fn l2_sq(&self, f: &[C]) -> f64 {
        f.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.h * self.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_derivative_is_exact_for_trig() {
        let g = Grid2::periodic(16);
        let f = g.sample(|z| C::new((2.0 * PI * z.re).sin() * (4.0 * PI * z.im).cos(), 0.0));
        let fx = g.d_dx(&f);
        let fy = g.d_dy(&f);
        for k in 0..g.len() {
            let z = g.point(k);
            let ex = 2.0 * PI * (2.0 * PI * z.re).cos() * (4.0 * PI * z.im).cos();
            let ey = -4.0 * PI * (2.0 * PI * z.re).sin() * (4.0 * PI * z.im).sin();
            assert!((fx[k].re - ex).abs() < 1e-11 && (fy[k].re - ey).abs() < 1e-11);
        }
    }

    #[test]
    fn stencil_is_fourth_order() {
        let err = |n: usize| {
            let g = Grid2::square(-0.5, -0.5, 0.5, n).unwrap();
            let f = g.sample(|z| (z * 1.3).exp());
            let (dz, dzb) = g.wirtinger(&f);
            (0..g.len())
                .map(|k| (dz[k] - 1.3 * (g.point(k) * 1.3).exp()).norm().max(dzb[k].norm()))
                .fold(0.0, f64::max)
        };
        let order = (err(21) / err(41)).log2();
        assert!(order > 3.7, "{order}");
    }

    #[test]
    fn polynomials_of_degree_four_are_exact() {
        let g = Grid2::square(0.0, 0.0, 1.0, 9).unwrap();
        let f = g.sample(|z| z * z * z * z.conj());
        let (dz, dzb) = g.wirtinger(&f);
        for k in 0..g.len() {
            let z = g.point(k);
            assert!((dz[k] - 3.0 * z * z * z.conj()).norm() < 1e-11);
            assert!((dzb[k] - z * z * z).norm() < 1e-11);
        }
    }
}
