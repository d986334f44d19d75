//! Reference implementations used to check the library. They avoid nalgebra
//! and the library's own helpers so a shared bug cannot hide.

#![allow(dead_code)]

/// Eigenvalues of a symmetric matrix (row-major, `n × n`) by cyclic Jacobi
/// rotations, ascending.
pub fn jacobi_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Singular values of a row-major `rows × cols` matrix by one-sided Jacobi
/// orthogonalisation of its columns, descending.
pub fn jacobi_singular_values(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    // work on the orientation with fewer columns
    let (r, c, mut u) = if cols <= rows {
        (rows, cols, a.to_vec())
    } else {
        (cols, rows, transpose(a, rows, cols))
    };
    let col = |u: &[f64], j: usize| -> Vec<f64> { (0..r).map(|i| u[i * c + j]).collect() };
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..c {
            for q in (p + 1)..c {
                let (up, uq) = (col(&u, p), col(&u, q));
                let alpha: f64 = up.iter().map(|x| x * x).sum();
                let beta: f64 = uq.iter().map(|x| x * x).sum();
                let gamma: f64 = up.iter().zip(&uq).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..r {
                    let x = u[i * c + p];
                    let y = u[i * c + q];
                    u[i * c + p] = cs * x - sn * y;
                    u[i * c + q] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = (0..c).map(|j| col(&u, j).iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = a[i * cols + j];
        }
    }
    t
}

pub fn matmul(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for l in 0..k {
            let x = a[i * k + l];
            for j in 0..m {
                out[i * m + j] += x * b[l * m + j];
            }
        }
    }
    out
}

/// Tree distance from parent pointers through depths and the lowest common
/// ancestor.
pub fn lca_distance(parents: &[Option<usize>], a: usize, b: usize) -> usize {
    let ancestors = |mut x: usize| {
        let mut chain = vec![x];
        while let Some(p) = parents[x] {
            chain.push(p);
            x = p;
        }
        chain
    };
    let ca = ancestors(a);
    let cb = ancestors(b);
    for (i, x) in ca.iter().enumerate() {
        if let Some(j) = cb.iter().position(|y| y == x) {
            return i + j;
        }
    }
    unreachable!("nodes of one tree share the root")
}

/// Gram matrix relative to point 0, `G_ij = ½(D_0i + D_0j − D_ij)`, from a
/// matrix of squared distances. PSD exactly when the double-centred form is.
pub fn anchored_gram(sq: &[f64], n: usize) -> Vec<f64> {
    let m = n - 1;
    let mut g = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            g[i * m + j] = 0.5 * (sq[i + 1] + sq[j + 1] - sq[(i + 1) * n + j + 1]);
        }
    }
    g
}

/// Small deterministic generator (SplitMix64 plus Box–Muller), independent of
/// the `rand` stack the library uses.
pub struct Oracle64(pub u64);

impl Oracle64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u = self.uniform();
        let v = self.uniform();
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Monte Carlo standard deviation of `‖Σ_{i<m} v_i‖²` with `v_i ~ N(0, I/d)`.
pub fn mc_branch_std(m: usize, d: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = Oracle64(seed);
    let xs: Vec<f64> = (0..samples)
        .map(|_| {
            let mut sum = vec![0.0; d];
            for _ in 0..m {
                for s in sum.iter_mut() {
                    *s += rng.normal() / (d as f64).sqrt();
                }
            }
            sum.iter().map(|x| x * x).sum()
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Random orthogonal `n × n` matrix (row-major) by Gram–Schmidt on Gaussian columns.
pub fn random_orthogonal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Oracle64(seed);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        for c in &cols {
            let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut q = vec![0.0; n * n];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            q[i * n + j] = c[i];
        }
    }
    q
}

/// `Q·v` for row-major `Q`.
pub fn rotate(q: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| q[i * n + j] * v[j]).sum()).collect()
}

/// Random tree on `n` nodes with a random root, from the oracle generator.
pub fn random_parents(n: usize, rng: &mut Oracle64) -> Vec<Option<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.below(i + 1));
    }
    let mut parents = vec![None; n];
    for i in 1..n {
        parents[perm[i]] = Some(perm[rng.below(i)]);
    }
    parents
}
