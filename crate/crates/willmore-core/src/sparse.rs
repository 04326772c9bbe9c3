//! Compressed sparse row matrices and a Jacobi-preconditioned conjugate
//! gradient solver, sufficient for cotangent Laplacians and their Newton
//! perturbations. Single-threaded; summation order is fixed, so results are
//! bit-reproducible.

use alloc::vec;
use alloc::vec::Vec;

use libm::{fabs, sqrt};

use crate::error::Error;

/// Symmetric sparse matrix in CSR form.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(triplets.len());
        let mut val = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] = col.len();
                last = Some((r, c));
            }
        }
        for i in 1..=n {
            if row_ptr[i] < row_ptr[i - 1] {
                row_ptr[i] = row_ptr[i - 1];
            }
        }
        Self { n, row_ptr, col, val }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert!(x.len() == self.n && y.len() == self.n);
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            y[i] = s;
        }
    }

    /// Iterate stored entries as (row, col, value).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col[k], self.val[k]))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col[k] == i {
                    d[i] = self.val[k];
                }
            }
        }
        d
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn project_mean_zero(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in x.iter_mut() {
        *v -= mean;
    }
}

/// Jacobi-preconditioned conjugate gradients.
///
/// With `singular_constants = true` the system is the consistent singular
/// Laplacian problem: right-hand side and iterates are projected onto the
/// mean-zero complement of the constant nullspace.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
    singular_constants: bool,
) -> Result<(Vec<f64>, f64), Error> {
    let n = a.n();
    let mut rhs = b.to_vec();
    if singular_constants {
        project_mean_zero(&mut rhs);
    }
    let b_norm = sqrt(dot(&rhs, &rhs));
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0.0));
    }

    let diag = a.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| if fabs(d) > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = rhs.clone(); // x = 0
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    if singular_constants {
        project_mean_zero(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for _ in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if singular_constants {
            project_mean_zero(&mut r);
        }
        let r_norm = sqrt(dot(&r, &r));
        if r_norm <= rel_tol * b_norm {
            if singular_constants {
                project_mean_zero(&mut x);
            }
            return Ok((x, r_norm));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        if singular_constants {
            project_mean_zero(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let r_norm = sqrt(dot(&r, &r));
    Err(Error::LinearSolveFailure {
        residual: r_norm / b_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_assembly_sums_duplicates() {
        let a = CsrMatrix::from_triplets(
            2,
            vec![(0, 0, 1.0), (0, 0, 1.0), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 3.0)],
        );
        let mut y = [0.0; 2];
        a.matvec(&[1.0, 2.0], &mut y);
        assert_eq!(y, [3.0, 6.5]);
        assert_eq!(a.diagonal(), vec![2.0, 3.0]);
    }

    #[test]
    fn cg_solves_spd_system() {
        // 1D Dirichlet Laplacian, n = 50
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let b = vec![1.0; n];
        let (x, _) = conjugate_gradient(&a, &b, 1e-12, 10 * n, false).unwrap();
        let mut ax = vec![0.0; n];
        a.matvec(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cg_singular_laplacian_consistent_system() {
        // periodic 1D Laplacian: nullspace = constants
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            t.push((i, i, 2.0));
            t.push((i, j, -1.0));
            t.push((j, i, -1.0));
        }
        let a = CsrMatrix::from_triplets(n, t);
        let mut b = vec![0.0; n];
        b[3] = 1.0;
        b[17] = -1.0; // consistent: sums to zero
        let (x, _) = conjugate_gradient(&a, &b, 1e-12, 20 * n, true).unwrap();
        let mut ax = vec![0.0; n];
        a.matvec(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-9, "i={i}");
        }
        assert!(x.iter().sum::<f64>().abs() < 1e-9);
    }
}
