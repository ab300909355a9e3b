use super::grid::Grid2;
use super::{project_01, project_10};
use crate::error::{Error, Result};
use crate::su2::{mat_add, mat_adjoint, mat_inv, mat_mul, mat_scale, mat_sub, Mat2};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;

/// Unitary connection on a chart as `A_z dz + A_z̄ dz̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartConnection {
    pub a_z: Vec<Mat2>,
    pub a_zbar: Vec<Mat2>,
}

impl ChartConnection {
    /// From `A = A_x dx + A_y dy`.
    pub fn from_xy(a_x: &[Mat2], a_y: &[Mat2]) -> Self {
        let i = C::i();
        let half = C::new(0.5, 0.0);
        let comb = |s: C| -> Vec<Mat2> {
            a_x.iter()
                .zip(a_y)
                .map(|(x, y)| mat_scale(&mat_add(x, &mat_scale(y, s)), half))
                .collect()
        };
        Self {
            a_z: comb(-i),
            a_zbar: comb(i),
        }
    }

    pub fn zero(n: usize) -> Self {
        let z = [[C::new(0.0, 0.0); 2]; 2];
        Self {
            a_z: vec![z; n],
            a_zbar: vec![z; n],
        }
    }
}

/// Data of the first-variation formula on one chart.
#[derive(Debug, Clone, Copy)]
pub struct VariationInput<'a> {
    pub grid: &'a Grid2,
    pub a: &'a ChartConnection,
    pub adot: &'a ChartConnection,
    pub g: &'a [Mat2],
    pub gdot: &'a [Mat2],
    pub nu: &'a [C],
}

fn inverses(g: &[Mat2]) -> Result<Vec<Mat2>> {
    g.iter()
        .enumerate()
        .map(|(k, m)| mat_inv(m).ok_or_else(|| Error::Singular(format!("gauge not invertible at sample {k}"))))
        .collect()
}

fn comm(a: &Mat2, b: &Mat2) -> Mat2 {
    mat_sub(&mat_mul(a, b), &mat_mul(b, a))
}

fn mat3(a: &Mat2, b: &Mat2, c: &Mat2) -> Mat2 {
    mat_mul(&mat_mul(a, b), c)
}

fn entrywise(a: &Mat2, b: &Mat2, f: impl Fn(C, C) -> C) -> Mat2 {
    let mut o = *a;
    for r in 0..2 {
        for c in 0..2 {
            o[r][c] = f(a[r][c], b[r][c]);
        }
    }
    o
}

/// The `dz̄` coefficient of
/// `∂̄_{g(A)}(g⁻¹ġ) − ν[(∂_A g*)(g*)⁻¹ + (g*)⁻¹ ∂_A g*] + g⁻¹ Ȧ^{0,1} g`.
pub fn first_variation(input: &VariationInput) -> Result<Vec<Mat2>> {
    let grid = input.grid;
    let n = grid.len();
    let gi = inverses(input.g)?;
    let gs: Vec<Mat2> = input.g.iter().map(mat_adjoint).collect();
    let gsi = inverses(&gs)?;
    let s: Vec<Mat2> = (0..n).map(|k| mat_mul(&gi[k], &input.gdot[k])).collect();
    let (_, s_zb) = grid.wirtinger_mat(&s);
    let (_, g_zb) = grid.wirtinger_mat(input.g);
    let (gs_z, _) = grid.wirtinger_mat(&gs);
    Ok((0..n)
        .map(|k| {
            let b = mat_add(
                &mat3(&gi[k], &input.a.a_zbar[k], &input.g[k]),
                &mat_mul(&gi[k], &g_zb[k]),
            );
            let t1 = mat_add(&s_zb[k], &comm(&b, &s[k]));
            let da_gs = mat_add(&gs_z[k], &comm(&input.a.a_z[k], &gs[k]));
            let t2 = mat_scale(
                &mat_add(&mat_mul(&da_gs, &gsi[k]), &mat_mul(&gsi[k], &da_gs)),
                -input.nu[k],
            );
            let t3 = mat3(&gi[k], &input.adot.a_zbar[k], &input.g[k]);
            mat_add(&mat_add(&t1, &t2), &t3)
        })
        .collect())
}

/// The `dz̄` coefficient of `g(D_A) − d` with the complex gauge group acting through the
/// structure with Beltrami coefficient `μ`:
/// `g⁻¹A^{0,1}g + g*A^{1,0}(g*)⁻¹ + g⁻¹∂̄_μ g − (∂_μ g*)(g*)⁻¹`.
pub fn gauge_action_01(grid: &Grid2, a: &ChartConnection, g: &[Mat2], mu: &[C]) -> Result<Vec<Mat2>> {
    let n = grid.len();
    let gi = inverses(g)?;
    let gs: Vec<Mat2> = g.iter().map(mat_adjoint).collect();
    let gsi = inverses(&gs)?;
    let (g_z, g_zb) = grid.wirtinger_mat(g);
    let (gs_z, gs_zb) = grid.wirtinger_mat(&gs);
    Ok((0..n)
        .map(|k| {
            let m = mu[k];
            let a01 = entrywise(&a.a_z[k], &a.a_zbar[k], |x, y| project_01(x, y, m).1);
            let a10 = entrywise(&a.a_z[k], &a.a_zbar[k], |x, y| project_10(x, y, m).1);
            let dg = entrywise(&g_z[k], &g_zb[k], |x, y| project_01(x, y, m).1);
            let dgs = entrywise(&gs_z[k], &gs_zb[k], |x, y| project_10(x, y, m).1);
            let t = mat_add(&mat3(&gi[k], &a01, &g[k]), &mat3(&gs[k], &a10, &gsi[k]));
            mat_sub(&mat_add(&t, &mat_mul(&gi[k], &dg)), &mat_mul(&dgs, &gsi[k]))
        })
        .collect())
}

/// Pairing of a `(0,1)`-form with the harmonic space `ker ∂̄_B*`, `∂̄_B s = ∂̄s + [B, s]` on
/// `End E` over a periodic chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicPairing {
    pub dimension: usize,
    /// Largest `|⟨h, f⟩|` over an L²-orthonormal basis `h` of the harmonic space.
    pub max_pairing: f64,
    pub form_norm: f64,
}

pub fn harmonic_pairing(grid: &Grid2, b: &[Mat2], form: &[Mat2], tol: f64) -> Result<HarmonicPairing> {
    if !grid.periodic {
        return Err(Error::Config("harmonic projection needs a periodic chart".into()));
    }
    let n = grid.len();
    let dim = 4 * n;
    let zero = [[C::new(0.0, 0.0); 2]; 2];
    let mut l = DMatrix::<C>::zeros(dim, dim);
    for col in 0..dim {
        let mut s = vec![zero; n];
        s[col / 4][(col % 4) / 2][col % 2] = C::new(1.0, 0.0);
        let (_, s_zb) = grid.wirtinger_mat(&s);
        for k in 0..n {
            let v = mat_add(&s_zb[k], &comm(&b[k], &s[k]));
            for e in 0..4 {
                let x = v[e / 2][e % 2];
                if x != C::new(0.0, 0.0) {
                    l[(4 * k + e, col)] = x;
                }
            }
        }
    }
    let svd = l.svd(true, false);
    let u = svd.u.ok_or_else(|| Error::NoConvergence("svd".into()))?;
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let f: Vec<C> = form.iter().flat_map(|m| [m[0][0], m[0][1], m[1][0], m[1][1]]).collect();
    let mut dimension = 0;
    let mut max_pairing: f64 = 0.0;
    for (c, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= tol * smax {
            dimension += 1;
            let p: C = (0..dim).map(|r| u[(r, c)].conj() * f[r]).sum();
            // Unit Euclidean vectors have L² norm h; rescale to L²-unit basis forms.
            max_pairing = max_pairing.max(p.norm() * grid.h);
        }
    }
    Ok(HarmonicPairing {
        dimension,
        max_pairing,
        form_norm: grid.l2_sq(&f).sqrt(),
    })
}
