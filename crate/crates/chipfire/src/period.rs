//! The primitive period vector `v_G` and period length `P`, computed
//! exactly from the integer kernel of the Laplacian.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::multigraph::DirectedMultigraph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PeriodError {
    #[error("graph is not strongly connected; the Laplacian kernel is not one-dimensional")]
    NotStronglyConnected,
    /// Signals an internal arithmetic bug: on strongly connected input the
    /// kernel is a ray spanned by a positive vector, so this must never fire.
    #[error("degenerate Laplacian kernel: {0}")]
    KernelDegenerate(String),
}

/// The primitive period vector and its 1-norm.
///
/// `v_G` is the componentwise-minimal positive integer vector with
/// `L v_G = 0`; equivalently the gcd-normalized generator of the
/// one-dimensional kernel ray. `P = sum(v_G) >= N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodData {
    pub v_g: Vec<u64>,
    pub p: u64,
}

impl PeriodData {
    pub fn period_len(&self) -> usize {
        self.p as usize
    }
}

/// Computes `v_G` and `P` by exact rational Gaussian elimination on the
/// Laplacian. No floating point is involved anywhere.
pub fn primitive_period_vector(g: &DirectedMultigraph) -> Result<PeriodData, PeriodError> {
    if !g.is_strongly_connected() {
        return Err(PeriodError::NotStronglyConnected);
    }
    let n = g.vertex_count();
    if n == 1 {
        // 1x1 zero Laplacian; the minimal positive kernel vector is (1).
        return Ok(PeriodData { v_g: vec![1], p: 1 });
    }

    let lap = g.laplacian();
    let mut rows: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| BigRational::from(lap.get(i, j).clone())).collect())
        .collect();

    // Gauss-Jordan to reduced row echelon form, tracking pivot columns.
    let mut pivot_col_of_row = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(pivot_row) = (row..n).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(row, pivot_row);
        let pivot = rows[row][col].clone();
        for x in rows[row].iter_mut() {
            *x /= &pivot;
        }
        let pivot_row_values = rows[row].clone();
        for (r, other) in rows.iter_mut().enumerate() {
            if r != row && !other[col].is_zero() {
                let factor = other[col].clone();
                for (x, p) in other.iter_mut().zip(&pivot_row_values) {
                    *x -= &factor * p;
                }
            }
        }
        pivot_col_of_row.push(col);
        row += 1;
        if row == n {
            break;
        }
    }

    let rank = pivot_col_of_row.len();
    if rank != n - 1 {
        return Err(PeriodError::KernelDegenerate(format!(
            "kernel dimension {} (expected 1)",
            n - rank
        )));
    }
    let free_col = (0..n)
        .find(|c| !pivot_col_of_row.contains(c))
        .expect("rank = n - 1 leaves one free column");

    // Kernel vector with the free variable set to 1.
    let mut kernel = vec![BigRational::zero(); n];
    kernel[free_col] = BigRational::one();
    for (r, &pc) in pivot_col_of_row.iter().enumerate() {
        kernel[pc] = -rows[r][free_col].clone();
    }

    // Clear denominators, then divide by the gcd of the numerators.
    let denom_lcm = kernel
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut ints: Vec<BigInt> = kernel
        .iter()
        .map(|x| x.numer() * (&denom_lcm / x.denom()))
        .collect();
    let gcd = ints.iter().fold(BigInt::ZERO, |acc, x| acc.gcd(x));
    if gcd.is_zero() {
        return Err(PeriodError::KernelDegenerate("zero kernel vector".into()));
    }
    for x in ints.iter_mut() {
        *x /= &gcd;
    }
    if ints.iter().all(|x| x.is_negative()) {
        for x in ints.iter_mut() {
            *x = -&*x;
        }
    }
    if !ints.iter().all(|x| x.is_positive()) {
        return Err(PeriodError::KernelDegenerate(
            "normalized kernel vector has a non-positive component".into(),
        ));
    }

    let v_g: Vec<u64> = ints
        .iter()
        .map(|x| {
            u64::try_from(x).map_err(|_| {
                PeriodError::KernelDegenerate("kernel component exceeds u64".into())
            })
        })
        .collect::<Result<_, _>>()?;
    let p = v_g
        .iter()
        .try_fold(0u64, |acc, &x| acc.checked_add(x))
        .ok_or_else(|| PeriodError::KernelDegenerate("period length exceeds u64".into()))?;
    Ok(PeriodData { v_g, p })
}

/// Kernel membership: true iff `L u = 0` exactly and every component of
/// `u` is at least one. Accepts any positive multiple of `v_G`.
pub fn verify_period(g: &DirectedMultigraph, u: &[u64]) -> bool {
    if u.len() != g.vertex_count() || u.contains(&0) {
        return false;
    }
    let big: Vec<BigInt> = u.iter().map(|&x| BigInt::from(x)).collect();
    g.laplacian().mul_vec(&big).iter().all(|x| x.is_zero())
}
