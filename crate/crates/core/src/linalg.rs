//! Small dense linear-algebra kernels used by the Gaussian engine and the
//! Fock oracle: a complex matrix exponential, a complex linear solver, and a
//! symmetric eigenvalue routine.
//!
//! The matrices that actually get exponentiated here (two-mode squeezer and
//! beamsplitter generators) conserve a number-like quantity, so their
//! sparsity graphs split into many small connected components. `matrix_exp`
//! exploits that: it partitions the index set into components and runs the
//! Padé approximant per block, which turns a 900-dimensional exponential
//! into a few dozen ≤ 31-dimensional ones.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

/// Maximum entrywise 1-norm (max absolute column sum).
pub fn one_norm(a: &Array2<C64>) -> f64 {
    let (n, m) = a.dim();
    let mut best = 0.0_f64;
    for j in 0..m {
        let mut s = 0.0;
        for i in 0..n {
            s += a[(i, j)].norm();
        }
        best = best.max(s);
    }
    best
}

/// Solve `A X = B` for X by Gaussian elimination with partial pivoting.
///
/// Panics if `A` is numerically singular; the callers only ever pass the
/// well-conditioned denominators of a Padé approximant.
pub fn solve(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "solve: A must be square");
    assert_eq!(b.nrows(), n, "solve: row mismatch");
    let m = b.ncols();
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[(k, k)].norm();
        for i in (k + 1)..n {
            let v = lu[(i, k)].norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        assert!(best > 0.0, "solve: singular matrix");
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            for j in 0..m {
                let t = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = t;
            }
        }
        let d = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / d;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in k..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
            for j in 0..m {
                let v = x[(k, j)];
                x[(i, j)] -= f * v;
            }
        }
    }
    for k in (0..n).rev() {
        let d = lu[(k, k)];
        for j in 0..m {
            let mut s = x[(k, j)];
            for l in (k + 1)..n {
                s -= lu[(k, l)] * x[(l, j)];
            }
            x[(k, j)] = s / d;
        }
    }
    x
}

/// Degree-13 Padé approximant with scaling and squaring (Higham's method),
/// applied to a dense block. Accuracy is well below 1e-10 for the
/// anti-Hermitian generators used here.
fn pade_exp(a: &Array2<C64>) -> Array2<C64> {
    const THETA_13: f64 = 5.371_920_351_148_152;
    #[rustfmt::skip]
    const B: [f64; 14] = [
        64_764_752_532_480_000.0, 32_382_376_266_240_000.0, 7_771_770_303_897_600.0,
        1_187_353_796_428_800.0, 129_060_195_264_000.0, 10_559_470_521_600.0,
        670_442_572_800.0, 33_522_128_640.0, 1_323_241_920.0, 40_840_800.0,
        960_960.0, 16_380.0, 182.0, 1.0,
    ];
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.mapv(|z| z / C64::new(2f64.powi(s), 0.0));
    let eye = Array2::<C64>::eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let u_inner = a6.mapv(|z| z * B[13])
        + a4.mapv(|z| z * B[11])
        + a2.mapv(|z| z * B[9]);
    let u = a.dot(
        &(a6.dot(&u_inner)
            + a6.mapv(|z| z * B[7])
            + a4.mapv(|z| z * B[5])
            + a2.mapv(|z| z * B[3])
            + eye.mapv(|z| z * B[1])),
    );
    let v_inner = a6.mapv(|z| z * B[12])
        + a4.mapv(|z| z * B[10])
        + a2.mapv(|z| z * B[8]);
    let v = a6.dot(&v_inner)
        + a6.mapv(|z| z * B[6])
        + a4.mapv(|z| z * B[4])
        + a2.mapv(|z| z * B[2])
        + eye.mapv(|z| z * B[0]);
    let mut r = solve(&(&v - &u), &(&v + &u));
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

/// Connected components of the off-diagonal sparsity graph of `a`.
fn components(a: &Array2<C64>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] != C64::new(0.0, 0.0) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        groups[r].push(i);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

/// Matrix exponential of a dense complex matrix.
///
/// Decomposes the index set into connected components of the sparsity graph
/// and exponentiates each block independently; indices not coupled to
/// anything reduce to scalar exponentials of the diagonal.
pub fn matrix_exp(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "matrix_exp: matrix must be square");
    let comps = components(a);
    if comps.len() == 1 {
        return pade_exp(a);
    }
    let mut out = Array2::<C64>::zeros((n, n));
    for comp in comps {
        if comp.len() == 1 {
            let i = comp[0];
            out[(i, i)] = a[(i, i)].exp();
            continue;
        }
        let k = comp.len();
        let mut block = Array2::<C64>::zeros((k, k));
        for (bi, &i) in comp.iter().enumerate() {
            for (bj, &j) in comp.iter().enumerate() {
                block[(bi, bj)] = a[(i, j)];
            }
        }
        let eb = pade_exp(&block);
        for (bi, &i) in comp.iter().enumerate() {
            for (bj, &j) in comp.iter().enumerate() {
                out[(i, j)] = eb[(bi, bj)];
            }
        }
    }
    out
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order. Intended for the small covariance-sized
/// matrices of the Gaussian engine.
pub fn symmetric_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "symmetric_eigenvalues: matrix must be square");
    let mut m = a.clone();
    let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())).max(1.0);
    let tol = 1e-15 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Eigenvalues of the Hermitian matrix `X + iY` (X symmetric, Y
/// antisymmetric, both real), via the doubled real symmetric embedding
/// `[[X, −Y], [Y, X]]` whose spectrum is that of `X + iY` with every
/// eigenvalue repeated twice.
pub fn hermitian_pair_eigenvalues(x: &Array2<f64>, y: &Array2<f64>) -> Vec<f64> {
    let n = x.nrows();
    assert_eq!(x.dim(), y.dim(), "hermitian_pair_eigenvalues: shape mismatch");
    let mut e = Array2::<f64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            e[(i, j)] = x[(i, j)];
            e[(i, j + n)] = -y[(i, j)];
            e[(i + n, j)] = y[(i, j)];
            e[(i + n, j + n)] = x[(i, j)];
        }
    }
    let eigs = symmetric_eigenvalues(&e);
    // Doubled spectrum: keep every other entry of the sorted list.
    eigs.into_iter().step_by(2).collect()
}

/// Conjugate transpose.
pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Max entrywise absolute difference between two complex matrices.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "max_abs_diff: shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// ‖U†U − I‖_max, the unitarity defect of `u`.
pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    let n = u.nrows();
    let utu = u.t().mapv(|z| z.conj()).dot(u);
    max_abs_diff(&utu, &Array2::<C64>::eye(n))
}

/// Real diagonal of a complex matrix as a vector (used by tests).
pub fn real_diagonal(a: &Array2<C64>) -> Array1<f64> {
    Array1::from_iter((0..a.nrows()).map(|i| a[(i, i)].re))
}
