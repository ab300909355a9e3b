use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use std::io::Write;

/// Compressed sparse rows with sorted, deduplicated column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(n: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last = None;
        for (i, j, v) in trips {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            indices.push(j);
            values.push(v);
            indptr[i + 1] = indices.len();
        }
        for i in 0..n {
            indptr[i + 1] = indptr[i + 1].max(indptr[i]);
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        r.binary_search(&j)
            .map(|k| self.values[self.indptr[i] + k])
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Coordinate format: a `n n nnz` header then `i j value` lines (1-based).
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.values.len())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Reverse Cuthill–McKee ordering; handles disconnected graphs.
pub fn rcm(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let deg: Vec<usize> = (0..n).map(|i| a.indptr[i + 1] - a.indptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_levels = |start: usize, visited: &[bool]| -> (usize, usize) {
        let mut dist = vec![usize::MAX; n];
        dist[start] = 0;
        let mut q = VecDeque::from([start]);
        let mut far = start;
        while let Some(v) = q.pop_front() {
            if dist[v] > dist[far] || (dist[v] == dist[far] && deg[v] < deg[far]) {
                far = v;
            }
            for (w, _) in a.row(v) {
                if dist[w] == usize::MAX && !visited[w] {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        (far, dist[far])
    };
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| deg[i])
            .unwrap();
        // Pseudo-peripheral start.
        let mut start = seed;
        let mut ecc = bfs_levels(start, &visited).1;
        for _ in 0..5 {
            let (far, e) = bfs_levels(start, &visited);
            let (_, e2) = bfs_levels(far, &visited);
            if e2 <= ecc && far == start {
                break;
            }
            if e2 > ecc || e > ecc {
                ecc = e2.max(e);
                start = far;
            } else {
                break;
            }
        }
        visited[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = a.row(v).map(|(w, _)| w).filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (deg[w], w));
            for w in nb {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) `L D Lᵀ` factorization of a symmetric matrix under a permutation.
#[derive(Debug, Clone)]
pub struct EnvelopeLdl {
    perm: Vec<usize>,
    first: Vec<usize>,
    /// Row `i` holds `L[i, first[i]..i]`.
    rows: Vec<Vec<f64>>,
    d: Vec<f64>,
}

impl EnvelopeLdl {
    pub fn factor(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.n;
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (i, &pi) in perm.iter().enumerate() {
            for (j, _) in a.row(pi) {
                first[i] = first[i].min(inv[j]);
            }
        }
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut d = vec![0.0; n];
        for i in 0..n {
            let fi = first[i];
            let mut r = vec![0.0; i - fi + 1];
            for (j, v) in a.row(perm[i]) {
                let pj = inv[j];
                if pj <= i {
                    r[pj - fi] = v;
                }
            }
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let rj = &rows[j];
                let mut s = r[j - fi];
                for k in lo..j {
                    s -= r[k - fi] * rj[k - fj];
                }
                r[j - fi] = s;
            }
            // r[j] now holds L[i,j] d[j]; split off the diagonal.
            let mut di = r[i - fi];
            for j in fi..i {
                let u = r[j - fi];
                let l = u / d[j];
                di -= u * l;
                r[j - fi] = l;
            }
            if di.abs() < 1e-300 || !di.is_finite() {
                return Err(Error::Singular(format!("zero pivot at row {i}")));
            }
            d[i] = di;
            r.truncate(i - fi);
            rows.push(r);
        }
        Ok(Self {
            perm,
            first,
            rows,
            d,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let mut s = y[i];
            for (k, l) in self.rows[i].iter().enumerate() {
                s -= l * y[fi + k];
            }
            y[i] = s;
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            for (k, l) in self.rows[i].iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }

    pub fn envelope_size(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Number of negative pivots (inertia).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }
}

fn mdot(a: &[f64], b: &[f64], m: &[f64]) -> f64 {
    a.iter().zip(b).zip(m).map(|((x, y), w)| x * y * w).sum()
}

/// Result of a generalized symmetric eigensolve `K x = λ M x`, `M` diagonal positive.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// `M`-orthonormal.
    pub vectors: Vec<Vec<f64>>,
}

/// Dense solve through `M^{-1/2} K M^{-1/2}`.
pub fn dense_eigs(k: &CsrMatrix, mass: &[f64], nev: usize) -> EigenPairs {
    let n = k.n;
    let s: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut a = k.to_dense();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] *= s[i] * s[j];
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let take = nev.min(n);
    EigenPairs {
        values: idx[..take].iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: idx[..take]
            .iter()
            .map(|&c| (0..n).map(|r| eig.eigenvectors[(r, c)] * s[r]).collect())
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub block: usize,
    pub max_dim: usize,
    pub max_restarts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            block: 12,
            max_dim: 240,
            max_restarts: 40,
            tol: 1e-10,
            seed: 17,
        }
    }
}

/// Smallest `nev` eigenpairs of `K x = λ M x` near `sigma` by shift-invert block Krylov
/// iteration with full `M`-reorthogonalization and thick restarts.
pub fn shift_invert_eigs(
    k: &CsrMatrix,
    mass: &[f64],
    nev: usize,
    sigma: f64,
    opts: &KrylovOptions,
) -> Result<EigenPairs> {
    let n = k.n;
    let nev = nev.min(n);
    let mut shifted = Vec::with_capacity(k.values.len());
    for i in 0..n {
        for (j, v) in k.row(i) {
            shifted.push((i, j, if i == j { v - sigma * mass[i] } else { v }));
        }
    }
    let a = CsrMatrix::from_triplets(n, shifted);
    let ldl = EnvelopeLdl::factor(&a, rcm(&a))?;
    let op = |x: &[f64]| -> Vec<f64> {
        let mx: Vec<f64> = x.iter().zip(mass).map(|(a, m)| a * m).collect();
        ldl.solve(&mx)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random_vec = || -> Vec<f64> {
        (0..n).map(|_| crate::su2::standard_normal(&mut rng)).collect()
    };

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kbasis: Vec<Vec<f64>> = Vec::new();
    let orth_push = |v: Vec<f64>, basis: &mut Vec<Vec<f64>>, kbasis: &mut Vec<Vec<f64>>| -> bool {
        let mut v = v;
        let n0 = mdot(&v, &v, mass).sqrt();
        for _ in 0..2 {
            for b in basis.iter() {
                let c = mdot(&v, b, mass);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let nv = mdot(&v, &v, mass).sqrt();
        if !(nv > 1e-10 * n0) || nv == 0.0 {
            return false;
        }
        for x in &mut v {
            *x /= nv;
        }
        kbasis.push(k.mul_vec(&v));
        basis.push(v);
        true
    };

    let block = opts.block.max(1);
    let mut frontier: Vec<Vec<f64>> = (0..block).map(|_| random_vec()).collect();
    let max_dim = opts.max_dim.max(nev + 2 * block).min(n);
    let mut restarts = 0;
    loop {
        // Expand.
        let mut added = Vec::new();
        for v in frontier.drain(..) {
            let w = op(&v);
            let before = basis.len();
            if basis.len() < max_dim && orth_push(w, &mut basis, &mut kbasis) {
                added.push(before);
            }
        }
        while added.len() < block && basis.len() < max_dim.min(n) {
            let before = basis.len();
            if orth_push(op(&random_vec()), &mut basis, &mut kbasis) {
                added.push(before);
            } else {
                break;
            }
        }
        let m = basis.len();
        // Rayleigh–Ritz.
        let mut h = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v: f64 = basis[i].iter().zip(&kbasis[j]).map(|(a, b)| a * b).sum();
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let ritz = |c: usize| -> (Vec<f64>, Vec<f64>) {
            let mut x = vec![0.0; n];
            let mut kx = vec![0.0; n];
            for r in 0..m {
                let y = eig.eigenvectors[(r, c)];
                if y != 0.0 {
                    for i in 0..n {
                        x[i] += y * basis[r][i];
                        kx[i] += y * kbasis[r][i];
                    }
                }
            }
            (x, kx)
        };
        let want = nev.min(m);
        let mut converged = want == nev;
        let mut vals = Vec::with_capacity(want);
        let mut vecs = Vec::with_capacity(want);
        for &c in &idx[..want] {
            let theta = eig.eigenvalues[c];
            let (x, kx) = ritz(c);
            let res: f64 = kx
                .iter()
                .zip(&x)
                .zip(mass)
                .map(|((a, b), w)| {
                    let r = a - theta * w * b;
                    r * r / w
                })
                .sum::<f64>()
                .sqrt();
            if res > opts.tol * theta.abs().max(1.0) {
                converged = false;
            }
            vals.push(theta);
            vecs.push(x);
        }
        if converged || m == n {
            return Ok(EigenPairs {
                values: vals,
                vectors: vecs,
            });
        }
        if m + block > max_dim {
            restarts += 1;
            if restarts > opts.max_restarts {
                return Err(Error::NoConvergence(format!(
                    "shift-invert Krylov: {nev} pairs after {restarts} restarts"
                )));
            }
            let keep = (nev + block).min(m);
            let mut nb = Vec::with_capacity(keep);
            let mut nk = Vec::with_capacity(keep);
            for &c in &idx[..keep] {
                let (x, kx) = ritz(c);
                nb.push(x);
                nk.push(kx);
            }
            frontier = nb[keep.saturating_sub(block)..].to_vec();
            // Re-orthonormalize the kept Ritz vectors against roundoff.
            basis.clear();
            kbasis.clear();
            for v in nb {
                orth_push(v, &mut basis, &mut kbasis);
            }
            let _ = nk;
        } else {
            frontier = added.iter().map(|&i| basis[i].clone()).collect();
            if frontier.is_empty() {
                frontier = (0..block).map(|_| random_vec()).collect();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn ldl_solves_tridiagonal() {
        let a = path_laplacian(50);
        let ldl = EnvelopeLdl::factor(&a, rcm(&a)).unwrap();
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x);
        let y = ldl.solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-10);
        }
        assert!(ldl.envelope_size() <= 2 * 50);
    }

    #[test]
    fn krylov_matches_closed_form_and_dense() {
        let n = 300;
        let a = path_laplacian(n);
        let mass = vec![1.0; n];
        let opts = KrylovOptions {
            block: 4,
            max_dim: 60,
            ..Default::default()
        };
        let r = shift_invert_eigs(&a, &mass, 6, -1e-3, &opts).unwrap();
        for (k, v) in r.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12, "{k}: {v} vs {exact}");
        }
        let small = path_laplacian(40);
        let d = dense_eigs(&small, &vec![1.0; 40], 5);
        let s = shift_invert_eigs(&small, &vec![1.0; 40], 5, -1e-3, &opts).unwrap();
        for (x, y) in d.values.iter().zip(&s.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn krylov_resolves_multiplicity() {
        // Three decoupled copies of a path Laplacian.
        let n = 80;
        let mut t = Vec::new();
        for c in 0..3 {
            for i in 0..n {
                let o = c * n;
                t.push((o + i, o + i, 2.0));
                if i + 1 < n {
                    t.push((o + i, o + i + 1, -1.0));
                    t.push((o + i + 1, o + i, -1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(3 * n, t);
        let r = shift_invert_eigs(&a, &vec![1.0; 3 * n], 6, -1e-3, &KrylovOptions::default()).unwrap();
        assert!((r.values[0] - r.values[2]).abs() < 1e-12);
        assert!((r.values[3] - r.values[5]).abs() < 1e-12);
        assert!(r.values[3] - r.values[2] > 1e-3);
    }
}
