//! Generator and inversion for the systematic Vandermonde code.
//!
//! Take the `(k + r) × k` Vandermonde matrix `V` with rows `(x^0, …, x^{k-1})`
//! at the distinct points `x = 0, 1, …, k + r - 1`. Every `k` rows of `V`
//! are independent, and so are every `k` rows of `V · V_top⁻¹ = [I; B]`.
//! Scaling column `i` of `B` by `1 / B[0][i]` (and the matching identity
//! row, which is then rescaled back) keeps that property and makes the
//! first redundancy row all ones, so a single redundant packet is plain
//! XOR parity.

use super::gf256;

pub type Matrix = Vec<Vec<u8>>;

/// The `r × k` redundancy rows of the generator. Requires `k + r ≤ 256`.
pub fn redundancy_rows(k: usize, r: usize) -> Matrix {
    assert!(k + r <= 256, "evaluation points exhausted");
    let vandermonde = |x: usize| -> Vec<u8> { (0..k).map(|i| gf256::pow(x as u8, i)).collect() };
    let top: Matrix = (0..k).map(vandermonde).collect();
    let top_inv = invert(&top).expect("distinct points give an invertible Vandermonde block");
    let mut rows: Matrix = (k..k + r).map(|x| mul_row(&vandermonde(x), &top_inv)).collect();
    if let Some(first) = rows.first().cloned() {
        for row in rows.iter_mut() {
            for (v, &f) in row.iter_mut().zip(&first) {
                *v = gf256::div(*v, f).expect("MDS rows have no zero entries");
            }
        }
    }
    rows
}

/// The generator row of packet `index`: a unit row for a main packet,
/// `B[index - k]` for a redundant one.
pub fn generator_row(k: usize, redundancy: &Matrix, index: usize) -> Vec<u8> {
    if index < k {
        let mut row = vec![0; k];
        row[index] = 1;
        row
    } else {
        redundancy[index - k].clone()
    }
}

/// Row vector times matrix.
pub fn mul_row(row: &[u8], m: &Matrix) -> Vec<u8> {
    let cols = m.first().map_or(0, Vec::len);
    let mut out = vec![0u8; cols];
    for (&c, m_row) in row.iter().zip(m) {
        gf256::mul_add_into(&mut out, m_row, c);
    }
    out
}

/// Gauss-Jordan inverse of a square matrix; `None` if singular.
pub fn invert(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut a: Matrix = m.clone();
    let mut inv: Matrix = (0..n)
        .map(|i| {
            let mut row = vec![0; n];
            row[i] = 1;
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = gf256::inv(a[col][col])?;
        for v in a[col].iter_mut().chain(inv[col].iter_mut()) {
            *v = gf256::mul(*v, scale);
        }
        for r in 0..n {
            let factor = a[r][col];
            if r != col && factor != 0 {
                let (pa, pi) = (a[col].clone(), inv[col].clone());
                gf256::mul_add_into(&mut a[r], &pa, factor);
                gf256::mul_add_into(&mut inv[r], &pi, factor);
            }
        }
    }
    Some(inv)
}
