//! Dense matrix exponential by scaling and squaring with the degree-13 Padé
//! approximant.

use super::matrix::ComplexMatrix;
use crate::error::Result;
use crate::scalar::{real, Real};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

pub fn expm<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = a.rows();
    let norm = a.norm_one();
    let squarings = if norm.as_f64() > THETA13 { (norm.as_f64() / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.scale_real(T::lit(2f64.powi(-squarings)));

    let b = |k: usize| real::<T>(T::lit(PADE13[k]));
    let id = ComplexMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let lin = |c6: usize, c4: usize, c2: usize, c0: Option<usize>| {
        let mut m = &(&a6.scale(b(c6)) + &a4.scale(b(c4))) + &a2.scale(b(c2));
        if let Some(c0) = c0 {
            m = &m + &id.scale(b(c0));
        }
        m
    };
    let u_inner = &(&a6 * &lin(13, 11, 9, None)) + &lin(7, 5, 3, Some(1));
    let u = &a * &u_inner;
    let v = &(&a6 * &lin(12, 10, 8, None)) + &lin(6, 4, 2, Some(0));

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu()?.solve_matrix(&p);
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}
