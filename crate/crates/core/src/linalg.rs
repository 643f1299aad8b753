//! Small dense linear-algebra helpers on top of nalgebra.
//!
//! Conventions: energies and frequencies in GHz (h = 1), times in ns, so the
//! Schrödinger phase of an eigenstate is exp(-i 2π E t).

use nalgebra::{DMatrix, DVector};

pub type C64 = num_complex::Complex64;

pub const TAU: f64 = std::f64::consts::TAU;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
///
/// Eigenvector signs are fixed so the largest-magnitude component of each
/// vector is positive, which keeps results deterministic across runs.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        let pivot = col.iter().cloned().fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Eigendecomposition of a complex Hermitian matrix, eigenvalues ascending.
pub fn herm_eigen_sorted(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        // Phase convention: largest-magnitude component real positive.
        let mut pivot = c(0.0, 0.0);
        for x in col.iter() {
            if x.norm_sqr() > pivot.norm_sqr() {
                pivot = *x;
            }
        }
        if pivot.norm() > 0.0 {
            let phase = pivot / pivot.norm();
            col.apply(|x| *x /= phase);
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Apply a scalar function to a Hermitian matrix through its eigenbasis.
pub fn herm_fn(m: &DMatrix<C64>, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let (vals, vecs) = herm_eigen_sorted(m);
    let d = DMatrix::<C64>::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&v| f(v))));
    &vecs * d * vecs.adjoint()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn herm_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut v: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Kronecker product a ⊗ b for complex matrices.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Kronecker product for real matrices.
pub fn kron_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// ‖U†U − 1‖_max, the unitarity defect.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let g = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn trace(m: &DMatrix<C64>) -> C64 {
    m.diagonal().iter().sum()
}

/// Hermitian inner-product fidelity Tr(a b) for Hermitian a, b.
pub fn trace_product_re(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.re
}

/// exp(-i 2π H t) for Hermitian H (GHz) and time t (ns).
pub fn evolution_operator(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    herm_fn(h, |e| C64::from_polar(1.0, -TAU * e * t))
}

/// Solve the linear system A x = b for complex A via LU; error when singular.
pub fn solve_complex(a: &DMatrix<C64>, b: &DVector<C64>) -> Option<DVector<C64>> {
    a.clone().lu().solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hermitian_probe(n: usize) -> DMatrix<C64> {
        let mut h = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = c(i as f64 - 1.3, 0.0);
            for j in (i + 1)..n {
                let v = c(0.1 * ((i + 2 * j) % 5) as f64, 0.07 * ((3 * i + j) % 4) as f64);
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
        h
    }

    #[test]
    fn herm_eigen_reconstructs() {
        let h = hermitian_probe(7);
        let (vals, vecs) = herm_eigen_sorted(&h);
        let d = DMatrix::from_diagonal(&DVector::from_iterator(7, vals.iter().map(|&v| c(v, 0.0))));
        let rec = &vecs * d * vecs.adjoint();
        assert!(max_abs_diff(&rec, &h) < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn evolution_operator_is_unitary_and_phases() {
        let h = hermitian_probe(5);
        let u = evolution_operator(&h, 0.37);
        assert!(unitarity_defect(&u) < 1e-12);
        // Diagonal H: phases must come out exactly.
        let d = DMatrix::<C64>::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-0.5, 0.0)]));
        let u = evolution_operator(&d, 2.0);
        assert!((u[(0, 0)] - C64::from_polar(1.0, -TAU * 2.0)).norm() < 1e-12);
        assert!((u[(1, 1)] - C64::from_polar(1.0, TAU)).norm() < 1e-12);
    }

    #[test]
    fn kron_shapes_and_values() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let b = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (4, 4));
        assert_eq!(k[(0, 1)], c(1.0, 0.0));
        assert_eq!(k[(2, 3)], c(2.0, 0.0));
        assert_eq!(k[(3, 2)], c(2.0, 0.0));
    }
}
