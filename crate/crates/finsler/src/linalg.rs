//! Matrix helpers for dimensions 1..=3, generic over jet scalars.
//!
//! Everything is stored in fixed 3x3 arrays with the active block in the top
//! left corner; unused entries stay zero. Inverses go through the adjugate,
//! which keeps the arithmetic polynomial and therefore jet-safe.

use crate::jets::{c, Real};

pub(crate) type Mat<S> = [[S; 3]; 3];

pub(crate) fn zero_mat<S: Real>() -> Mat<S> {
    [[c(0.0); 3]; 3]
}

pub(crate) fn det<S: Real>(m: &Mat<S>, n: usize) -> S {
    match n {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("dimension {n} out of range"),
    }
}

/// Inverse of the leading n x n block. Faults through jet division when the
/// determinant vanishes.
pub(crate) fn inverse<S: Real>(m: &Mat<S>, n: usize) -> Mat<S> {
    let d = det(m, n);
    let mut out = zero_mat::<S>();
    match n {
        1 => {
            out[0][0] = c::<S>(1.0) / d;
        }
        2 => {
            out[0][0] = m[1][1] / d;
            out[0][1] = -m[0][1] / d;
            out[1][0] = -m[1][0] / d;
            out[1][1] = m[0][0] / d;
        }
        3 => {
            // Adjugate transpose.
            out[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
            out[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
            out[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
            out[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
            out[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
            out[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
            out[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
            out[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
            out[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
        }
        _ => unreachable!(),
    }
    out
}

pub(crate) fn mat_vec<S: Real>(m: &Mat<S>, v: &[S; 3], n: usize) -> [S; 3] {
    let mut out = [c::<S>(0.0); 3];
    for i in 0..n {
        let mut acc = c::<S>(0.0);
        for j in 0..n {
            acc = acc + m[i][j] * v[j];
        }
        out[i] = acc;
    }
    out
}

pub(crate) fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    let mut acc = c::<S>(0.0);
    for (x, y) in a.iter().zip(b) {
        acc = acc + *x * *y;
    }
    acc
}

/// Sylvester criterion on the leading n x n block of a symmetric matrix.
pub(crate) fn positive_definite(m: &Mat<f64>, n: usize) -> bool {
    let m1 = m[0][0];
    if n == 1 {
        return m1 > 0.0;
    }
    let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if n == 2 {
        return m1 > 0.0 && m2 > 0.0;
    }
    m1 > 0.0 && m2 > 0.0 && det(m, 3) > 0.0
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m: Mat<f64> = [[2.0, 1.0, 0.3], [1.0, 3.0, -0.2], [0.3, -0.2, 1.5]];
        for n in 1..=3usize {
            let inv = inverse(&m, n);
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += inv[i][k] * m[k][j];
                    }
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((acc - expect).abs() < 1e-12, "n={n} ({i},{j}) got {acc}");
                }
            }
        }
    }

    #[test]
    fn sylvester_detects_indefinite_matrices() {
        let pd: Mat<f64> = [[2.0, 0.5, 0.0], [0.5, 1.0, 0.1], [0.0, 0.1, 0.7]];
        assert!(positive_definite(&pd, 3));
        let indef: Mat<f64> = [[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(!positive_definite(&indef, 3));
    }
}
