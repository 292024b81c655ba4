//! Exact linear algebra over the rationals.
//!
//! Matrices are dense and row-major. A matrix with `rows = t` and `cols = s`
//! represents a linear map from `Q^s` to `Q^t` acting on column vectors.
//! Subspaces store their basis as the nonzero rows of a reduced row echelon
//! form, so two equal subspaces always carry identical bases.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Arbitrary precision rational number, always kept in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinError {
    #[error("not a subspace: {0}")]
    NotASubspace(String),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("cannot parse rational {0:?}")]
    Parse(String),
    #[error("positivity deciders disagree")]
    Inconsistent,
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `p/q`, with `/q` omitted when `q = 1`.
pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, LinError> {
    let t = s.trim();
    let bad = || LinError::Parse(s.to_string());
    match t.split_once('/') {
        None => t.parse::<BigInt>().map(Rational::from_integer).map_err(|_| bad()),
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
    }
}

/// Serde adapter writing a rational as its `p/q` string.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

/// Serde adapter for vectors of rationals.
pub mod rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(format_rational).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(format_rational).collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    pub fn scalar(n: usize, c: Rational) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = c.clone();
        }
        m
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self, LinError> {
        if data.len() != rows * cols {
            return Err(LinError::Shape(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from rows; `cols` is needed when there are no rows.
    pub fn from_rows(rows: Vec<Vec<Rational>>, cols: usize) -> Result<Self, LinError> {
        let r = rows.len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            if row.len() != cols {
                return Err(LinError::Shape(format!("row of length {} in {} columns", row.len(), cols)));
            }
            data.extend(row);
        }
        Ok(Matrix { rows: r, cols, data })
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count");
        Matrix { rows, cols, data: entries.iter().map(|&x| rat(x)).collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Rational] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Rational) {
        self.data[i * self.cols + j] = x;
    }

    pub fn add_at(&mut self, i: usize, j: usize, x: &Rational) {
        let e = &mut self.data[i * self.cols + j];
        *e += x;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len(), "vector length");
        (0..self.rows)
            .map(|i| {
                let mut s = Rational::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        s += a * b;
                    }
                }
                s
            })
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix sum shape");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix difference shape");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: &Rational) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * c).collect() }
    }

    pub fn neg(&self) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| -a).collect() }
    }

    pub fn pow(&self, k: usize) -> Matrix {
        assert!(self.is_square(), "power of a non-square matrix");
        let mut out = Matrix::identity(self.rows);
        for _ in 0..k {
            out = self.mul(&out);
        }
        out
    }

    /// Writes `block` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols, "block out of range");
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.data[(r0 + i) * self.cols + c0 + j] = block.get(i, j).clone();
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.data[i * cols + j] = self.get(r0 + i, c0 + j).clone();
            }
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "vstack column count");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "hstack row count");
        let mut out = Matrix::zeros(self.rows, self.cols + other.cols);
        out.set_block(0, 0, self);
        out.set_block(0, self.cols, other);
        out
    }

    /// Block diagonal sum.
    pub fn direct_sum(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows + other.rows, self.cols + other.cols);
        out.set_block(0, 0, self);
        out.set_block(self.rows, self.cols, other);
        out
    }

    pub fn rank(&self) -> usize {
        rref(self).1.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn inverse(&self) -> Option<Matrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        if n == 0 {
            return Some(Matrix::zeros(0, 0));
        }
        let aug = self.hstack(&Matrix::identity(n));
        let (r, piv) = rref(&aug);
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        Some(r.block(0, n, n, n))
    }

    pub fn determinant(&self) -> Rational {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !a.get(r, c).is_zero()) else {
                return Rational::zero();
            };
            if p != c {
                a.swap_rows(p, c);
                det = -det;
            }
            let pv = a.get(c, c).clone();
            det *= &pv;
            for r in c + 1..n {
                let f = a.get(r, c) / &pv;
                if !f.is_zero() {
                    a.row_axpy(r, c, &-f);
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// row[dst] += f * row[src]
    fn row_axpy(&mut self, dst: usize, src: usize, f: &Rational) {
        for j in 0..self.cols {
            let s = self.data[src * self.cols + j].clone();
            if !s.is_zero() {
                self.data[dst * self.cols + j] += f * s;
            }
        }
    }

    fn row_scale(&mut self, r: usize, f: &Rational) {
        for j in 0..self.cols {
            let e = &mut self.data[r * self.cols + j];
            if !e.is_zero() {
                *e *= f;
            }
        }
    }

    /// Rows as vectors of `p/q` strings.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| self.row(i).iter().map(format_rational).collect()).collect()
    }

    pub fn from_strings(rows: &[Vec<String>], cols: usize) -> Result<Matrix, LinError> {
        let parsed = rows
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Matrix::from_rows(parsed, cols)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<String>>,
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixRepr { rows: self.rows, cols: self.cols, entries: self.to_strings() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        if r.entries.len() != r.rows {
            return Err(D::Error::custom(format!("{} rows declared, {} given", r.rows, r.entries.len())));
        }
        Matrix::from_strings(&r.entries, r.cols).map_err(D::Error::custom)
    }
}

/// Kronecker product, with index `(i, j)` of the left factor major.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let x = a.get(i, j);
            if x.is_zero() {
                continue;
            }
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    let y = b.get(k, l);
                    if !y.is_zero() {
                        out.set(i * b.rows() + k, j * b.cols() + l, x * y);
                    }
                }
            }
        }
    }
    out
}

/// Some `X` with `a X = b`, or `None` when a column of `b` is outside the
/// column space of `a`. Free variables are set to zero.
pub fn solve(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    assert_eq!(a.rows(), b.rows(), "solve shape");
    let n = a.cols();
    let (r, piv) = rref(&a.hstack(b));
    if piv.iter().any(|&p| p >= n) {
        return None;
    }
    let mut x = Matrix::zeros(n, b.cols());
    for (i, &p) in piv.iter().enumerate() {
        for j in 0..b.cols() {
            x.set(p, j, r.get(i, n + j).clone());
        }
    }
    Some(x)
}

/// Reduced row echelon form. Pivots are taken as the first nonzero entry in
/// column order, so the output is a deterministic function of the input.
pub fn rref(m: &Matrix) -> (Matrix, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let Some(p) = (r..a.rows).find(|&i| !a.get(i, c).is_zero()) else {
            continue;
        };
        a.swap_rows(p, r);
        let inv = a.get(r, c).recip();
        a.row_scale(r, &inv);
        for i in 0..a.rows {
            if i != r {
                let f = a.get(i, c).clone();
                if !f.is_zero() {
                    a.row_axpy(i, r, &-f);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Basis of `{x : m x = 0}`.
pub fn kernel(m: &Matrix) -> Subspace {
    let (r, piv) = rref(m);
    let n = m.cols;
    let mut basis = Vec::new();
    let mut is_piv = vec![false; n];
    for &p in &piv {
        is_piv[p] = true;
    }
    for free in (0..n).filter(|&j| !is_piv[j]) {
        let mut v = vec![Rational::zero(); n];
        v[free] = Rational::one();
        for (i, &p) in piv.iter().enumerate() {
            v[p] = -r.get(i, free).clone();
        }
        basis.push(v);
    }
    Subspace::from_vectors(n, basis)
}

/// Column space of `m` as a subspace of `Q^{rows}`.
pub fn image(m: &Matrix) -> Subspace {
    Subspace::from_matrix(m.transpose())
}

/// A linear subspace of `Q^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Matrix,
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Subspace { ambient_dim: n, basis: Matrix::zeros(0, n) }
    }

    pub fn full(n: usize) -> Self {
        Subspace { ambient_dim: n, basis: Matrix::identity(n) }
    }

    /// Span of the rows of `m`.
    pub fn from_matrix(m: Matrix) -> Self {
        let n = m.cols;
        let (r, piv) = rref(&m);
        let basis = r.block(0, 0, piv.len(), n);
        Subspace { ambient_dim: n, basis }
    }

    pub fn from_vectors(n: usize, vs: Vec<Vec<Rational>>) -> Self {
        let m = Matrix::from_rows(vs, n).expect("vector length matches ambient dimension");
        Self::from_matrix(m)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.rows
    }

    /// Basis vectors as rows.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn contains_vector(&self, v: &[Rational]) -> bool {
        let m = self.basis.vstack(&Matrix::from_rows(vec![v.to_vec()], self.ambient_dim).expect("length"));
        m.rank() == self.dim()
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        assert_eq!(self.ambient_dim, other.ambient_dim, "ambient dimension");
        self.basis.vstack(&other.basis).rank() == self.dim()
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient_dim, other.ambient_dim, "ambient dimension");
        Subspace::from_matrix(self.basis.vstack(&other.basis))
    }

    pub fn intersection(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient_dim, other.ambient_dim, "ambient dimension");
        let a = self.basis.vstack(&other.basis).transpose();
        let k = kernel(&a);
        let coeffs = k.basis.block(0, 0, k.dim(), self.dim());
        Subspace::from_matrix(coeffs.mul(&self.basis))
    }

    /// Vectors `w` with `w . v = 0` for all `v` in the subspace.
    pub fn annihilator(&self) -> Subspace {
        kernel(&self.basis)
    }

    /// `{x : f x ∈ self}`.
    pub fn preimage(&self, f: &Matrix) -> Subspace {
        assert_eq!(f.rows, self.ambient_dim, "preimage shape");
        let ann = self.annihilator();
        kernel(&ann.basis.mul(f))
    }

    /// `f(self)`.
    pub fn image_under(&self, f: &Matrix) -> Subspace {
        assert_eq!(f.cols, self.ambient_dim, "image shape");
        Subspace::from_matrix(self.basis.mul(&f.transpose()))
    }

    /// Coordinates of `v` in the stored basis, if `v` lies in the subspace.
    pub fn coordinates(&self, v: &[Rational]) -> Option<Vec<Rational>> {
        let k = self.dim();
        if k == 0 {
            return v.iter().all(Zero::is_zero).then(Vec::new);
        }
        let aug = self.basis.transpose().hstack(&Matrix::from_rows(vec![v.to_vec()], self.ambient_dim).ok()?.transpose());
        let (r, piv) = rref(&aug);
        if piv.last() == Some(&k) {
            return None;
        }
        Some((0..k).map(|i| r.get(i, k).clone()).collect())
    }
}

/// Result of `quotient(sub, by)`: the quotient dimension, a projection
/// `Q^n -> Q^dim` whose restriction to `sub` has kernel `by`, and a section
/// `Q^dim -> sub` with `projection * section = id`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quotient {
    pub dim: usize,
    pub projection: Matrix,
    pub section: Matrix,
}

pub fn quotient(sub: &Subspace, by: &Subspace) -> Result<Quotient, LinError> {
    if sub.ambient_dim != by.ambient_dim {
        return Err(LinError::Shape("ambient dimensions differ".into()));
    }
    if !sub.contains(by) {
        return Err(LinError::NotASubspace("divisor is not contained in the subspace".into()));
    }
    let n = sub.ambient_dim;
    let mut chosen = by.basis.clone();
    let mut comp = Vec::new();
    for i in 0..sub.dim() {
        let cand = chosen.vstack(&sub.basis.select_rows(&[i]));
        if cand.rank() > chosen.rows {
            chosen = cand;
            comp.push(sub.basis.row(i).to_vec());
        }
    }
    let c = Matrix::from_rows(comp, n)?;
    let mut full = chosen.clone();
    for j in 0..n {
        if full.rows == n {
            break;
        }
        let mut e = vec![Rational::zero(); n];
        e[j] = Rational::one();
        let cand = full.vstack(&Matrix::from_rows(vec![e], n)?);
        if cand.rank() > full.rows {
            full = cand;
        }
    }
    let inv = full.inverse().expect("completed basis is invertible");
    let b = by.dim();
    let projection = inv.transpose().block(b, 0, c.rows, n);
    Ok(Quotient { dim: c.rows, projection, section: c.transpose() })
}

/// Pivots of the symmetric elimination `sym = L D Lᵀ` taken on the diagonal
/// in order. Stops at the first nonpositive pivot.
pub fn ldl_pivots(sym: &Matrix) -> Vec<Rational> {
    let n = sym.rows;
    let mut a = sym.clone();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let p = a.get(k, k).clone();
        let stop = !p.is_positive();
        out.push(p.clone());
        if stop {
            break;
        }
        for i in k + 1..n {
            let f = a.get(i, k) / &p;
            if !f.is_zero() {
                a.row_axpy(i, k, &-f);
            }
        }
    }
    out
}

pub fn leading_minors(sym: &Matrix) -> Vec<Rational> {
    (1..=sym.rows).map(|k| sym.block(0, 0, k, k).determinant()).collect()
}

/// Exact positive definiteness of a rational symmetric form.
pub fn is_positive_definite(sym: &Matrix) -> Result<bool, LinError> {
    if !sym.is_symmetric() {
        return Err(LinError::NotSymmetric);
    }
    let piv = ldl_pivots(sym);
    let ldl = piv.len() == sym.rows && piv.iter().all(Signed::is_positive);
    let minors = leading_minors(sym);
    if minors.iter().all(|m| !m.is_zero()) {
        let sylvester = minors.iter().all(Signed::is_positive);
        if sylvester != ldl {
            return Err(LinError::Inconsistent);
        }
    } else if ldl {
        return Err(LinError::Inconsistent);
    }
    Ok(ldl)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, e: &[i64]) -> Matrix {
        Matrix::from_i64(rows, cols, e)
    }

    #[test]
    fn rref_proportional_rows() {
        let (r, piv) = rref(&m(2, 2, &[1, 2, 2, 4]));
        assert_eq!(piv, vec![0]);
        assert_eq!(r, m(2, 2, &[1, 2, 0, 0]));
    }

    #[test]
    fn rref_identity_and_permutation() {
        let (r, piv) = rref(&Matrix::identity(3));
        assert_eq!(r, Matrix::identity(3));
        assert_eq!(piv, vec![0, 1, 2]);
        let (r, _) = rref(&m(2, 2, &[0, 1, 1, 0]));
        assert_eq!(r, Matrix::identity(2));
    }

    #[test]
    fn kernel_examples() {
        let k = kernel(&m(1, 2, &[1, 1]));
        assert_eq!(k.dim(), 1);
        assert!(k.contains_vector(&[rat(1), rat(-1)]));
        assert_eq!(kernel(&Matrix::zeros(2, 2)).dim(), 2);
        assert_eq!(kernel(&Matrix::identity(2)).dim(), 0);
    }

    #[test]
    fn quotient_examples() {
        let q2 = Subspace::full(2);
        let q = quotient(&q2, &Subspace::from_vectors(2, vec![vec![rat(1), rat(1)]])).unwrap();
        assert_eq!(q.dim, 1);
        let v = Subspace::from_vectors(3, vec![vec![rat(1), rat(2), rat(0)]]);
        assert_eq!(quotient(&v, &v).unwrap().dim, 0);
        let by = Subspace::from_vectors(3, vec![vec![rat(1), rat(-1), rat(0)], vec![rat(0), rat(1), rat(-1)]]);
        let q = quotient(&Subspace::full(3), &by).unwrap();
        assert_eq!(q.dim, 1);
        assert_eq!(q.projection.mul(&q.section), Matrix::identity(1));
        assert!(q.projection.mul(&by.basis().transpose()).is_zero());
        // the surviving functional is proportional to the sum of coordinates
        let p = q.projection.row(0);
        assert!(p[0] == p[1] && p[1] == p[2]);
    }

    #[test]
    fn quotient_rejects_non_containment() {
        let a = Subspace::from_vectors(2, vec![vec![rat(1), rat(0)]]);
        let b = Subspace::from_vectors(2, vec![vec![rat(0), rat(1)]]);
        assert!(matches!(quotient(&a, &b), Err(LinError::NotASubspace(_))));
    }

    #[test]
    fn positivity_examples() {
        assert!(is_positive_definite(&m(2, 2, &[2, 1, 1, 2])).unwrap());
        assert!(!is_positive_definite(&m(2, 2, &[1, 0, 0, -1])).unwrap());
        assert!(!is_positive_definite(&m(1, 1, &[0])).unwrap());
        assert_eq!(is_positive_definite(&m(2, 2, &[1, 2, 0, 1])), Err(LinError::NotSymmetric));
        assert!(is_positive_definite(&Matrix::zeros(0, 0)).unwrap());
    }

    #[test]
    fn rational_strings_round_trip() {
        for s in ["0", "-3", "7/2", "-5/12"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
        assert_eq!(format_rational(&parse_rational("4/6").unwrap()), "2/3");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn matrix_json_round_trip() {
        let a = Matrix::from_data(2, 2, vec![ratio(1, 2), rat(0), rat(-3), ratio(7, 5)]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        let b: Matrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(s, serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn intersection_and_preimage() {
        let x = Subspace::from_vectors(3, vec![vec![rat(1), rat(0), rat(0)], vec![rat(0), rat(1), rat(0)]]);
        let y = Subspace::from_vectors(3, vec![vec![rat(0), rat(1), rat(0)], vec![rat(0), rat(0), rat(1)]]);
        let z = x.intersection(&y);
        assert_eq!(z.dim(), 1);
        assert!(z.contains_vector(&[rat(0), rat(1), rat(0)]));
        let f = m(1, 3, &[1, 1, 1]);
        assert_eq!(Subspace::zero(1).preimage(&f).dim(), 2);
    }

    #[test]
    fn solve_and_kron() {
        let a = m(2, 3, &[1, 0, 1, 0, 1, 1]);
        let b = m(2, 1, &[2, 3]);
        let x = solve(&a, &b).unwrap();
        assert_eq!(a.mul(&x), b);
        assert!(solve(&m(2, 1, &[1, 1]), &m(2, 1, &[1, 0])).is_none());
        let k = kron(&m(1, 2, &[1, 2]), &m(2, 1, &[3, 4]));
        assert_eq!(k, m(2, 2, &[3, 6, 4, 8]));
    }

    #[test]
    fn inverse_and_determinant() {
        let a = m(2, 2, &[2, 1, 1, 1]);
        assert_eq!(a.inverse().unwrap(), m(2, 2, &[1, -1, -1, 2]));
        assert_eq!(a.determinant(), rat(1));
        assert!(m(2, 2, &[1, 2, 2, 4]).inverse().is_none());
    }
}
