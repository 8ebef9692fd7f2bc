//! Small dense square matrices with LU-based determinant and solve.
//!
//! Orders are tiny (the parameter dimension of a likelihood model), so
//! everything is unblocked and row-major.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reciprocal condition numbers below this are reported as singular.
const MAX_CONDITION: f64 = 1e13;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(order: usize, entries: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("matrix order must be at least 1".into()));
        }
        if entries.len() != order * order {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for order {order}, got {}",
                order * order,
                entries.len()
            )));
        }
        Ok(Self { order, entries })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let order = rows.len();
        if rows.iter().any(|r| r.len() != order) {
            return Err(Error::InvalidInput("rows must all have length equal to the row count".into()));
        }
        Self::new(order, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn zeros(order: usize) -> Self {
        assert!(order > 0, "matrix order must be at least 1");
        Self {
            order,
            entries: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.order..(i + 1) * self.order]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.order).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let n = self.order;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `(M + Mᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let n = self.order;
        let mut s = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.order;
        (0..n).all(|i| {
            ((i + 1)..n).all(|j| {
                let (a, b) = (self[(i, j)], self[(j, i)]);
                (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
            })
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            order: self.order,
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.order, other.order, "order mismatch in matmul");
        let n = self.order;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.order, v.len(), "order mismatch in mul_vec");
        (0..self.order)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Row vector times matrix, `vᵀ M`.
    pub fn vec_mul(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.order, v.len(), "order mismatch in vec_mul");
        let n = self.order;
        (0..n).map(|j| (0..n).map(|i| v[i] * self[(i, j)]).sum()).collect()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.order)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn norm_one(&self) -> f64 {
        let n = self.order;
        (0..n)
            .map(|j| (0..n).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Submatrix keeping the listed rows and columns, in order.
    pub fn submatrix(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidInput("submatrix must keep at least one index".into()));
        }
        let entries = keep
            .iter()
            .flat_map(|&i| keep.iter().map(move |&j| self[(i, j)]))
            .collect();
        Self::new(keep.len(), entries)
    }

    pub fn lu(&self) -> Result<LuDecomposition> {
        LuDecomposition::new(self)
    }

    pub fn determinant(&self) -> Result<f64> {
        Ok(self.lu()?.determinant())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let lu = self.lu()?;
        lu.check_conditioning(self)?;
        lu.solve(rhs)
    }

    /// Solves `M X = B` column by column.
    pub fn solve_matrix(&self, rhs: &Self) -> Result<Self> {
        let lu = self.lu()?;
        lu.check_conditioning(self)?;
        lu.solve_matrix(rhs)
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve_matrix(&Self::identity(self.order))
    }

    /// Lower Cholesky factor; `None` unless the matrix is symmetric positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.order;
        if !self.is_symmetric(1e-10) {
            return None;
        }
        let mut l = Self::zeros(n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.order + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i * self.order + j]
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// `P M = L U` with unit-diagonal `L`, stored packed.
#[derive(Debug, Clone)]
pub struct LuDecomposition {
    packed: SquareMatrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl LuDecomposition {
    pub fn new(m: &SquareMatrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let n = m.order;
        let mut a = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        let scale = m.norm_inf().max(f64::MIN_POSITIVE);

        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))
                .unwrap();
            if a[(p, k)].abs() <= f64::EPSILON * scale * n as f64 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.entries.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let factor = a[(i, k)] / pivot;
                a[(i, k)] = factor;
                for j in (k + 1)..n {
                    a[(i, j)] -= factor * a[(k, j)];
                }
            }
        }
        Ok(Self {
            packed: a,
            perm,
            sign,
            singular,
        })
    }

    /// Signed determinant; exactly zero when a pivot vanished.
    pub fn determinant(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        (0..self.packed.order).fold(self.sign, |acc, i| acc * self.packed[(i, i)])
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.packed.order;
        if rhs.len() != n {
            return Err(Error::InvalidInput(format!(
                "right-hand side has length {}, expected {n}",
                rhs.len()
            )));
        }
        if self.singular {
            return Err(Error::SingularMatrix {
                condition: f64::INFINITY,
            });
        }
        let a = &self.packed;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= a[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= a[(i, j)] * x[j];
            }
            x[i] /= a[(i, i)];
        }
        Ok(x)
    }

    pub fn solve_matrix(&self, rhs: &SquareMatrix) -> Result<SquareMatrix> {
        let n = self.packed.order;
        let mut out = SquareMatrix::zeros(n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = rhs[(i, j)];
            }
            let x = self.solve(&col)?;
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        Ok(out)
    }

    /// 1-norm condition number of the factored matrix (exact inverse; orders are tiny).
    pub fn condition(&self, original: &SquareMatrix) -> f64 {
        if self.singular {
            return f64::INFINITY;
        }
        match self.solve_matrix(&SquareMatrix::identity(original.order)) {
            Ok(inv) => original.norm_one() * inv.norm_one(),
            Err(_) => f64::INFINITY,
        }
    }

    fn check_conditioning(&self, original: &SquareMatrix) -> Result<()> {
        let condition = self.condition(original);
        if !(condition < MAX_CONDITION) {
            return Err(Error::SingularMatrix { condition });
        }
        Ok(())
    }
}
