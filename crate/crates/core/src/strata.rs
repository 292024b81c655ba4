//! Strata data of a simple normal crossing degeneration: cohomology rings
//! of the strata `Y_σ`, restriction and Gysin maps, traces and ample
//! classes, with validation, fixtures and JSON persistence.
//!
//! Gysin maps go `H^j(Y_{σ∪ν}) -> H^{j+2}(Y_σ)` and are tied to restriction
//! by `t_σ(g(a)·b) = -t_{σ∪ν}(a·res(b))`. Traces are normalized so that the
//! point class of every stratum has trace 1.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cubical::{IndexSet, Subset};
use crate::exactlin::{format_rational, is_positive_definite, kernel, kron, parse_rational, rat, Matrix, Rational};
use crate::homalg::sign;

#[derive(Debug, Error)]
pub enum StrataError {
    #[error("{path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("structural error: {0}")]
    Structure(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid fixture parameter: {0}")]
    Parameter(String),
}

fn schema(path: impl Into<String>, msg: impl Into<String>) -> StrataError {
    StrataError::Schema { path: path.into(), msg: msg.into() }
}

/// Graded commutative cohomology ring with chosen bases per degree.
/// `products[(a, b)]` maps `H^a ⊗ H^b` (index of the left factor major)
/// to `H^{a+b}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ring {
    pub dims: Vec<usize>,
    pub unit: Vec<Rational>,
    pub products: BTreeMap<(usize, usize), Matrix>,
}

impl Ring {
    pub fn point() -> Ring {
        Ring {
            dims: vec![1],
            unit: vec![rat(1)],
            products: BTreeMap::from([((0, 0), Matrix::from_i64(1, 1, &[1]))]),
        }
    }

    /// `Q[h]/h^{n+1}` with `h` in degree 2 and basis `h^k`.
    pub fn projective_space(n: usize) -> Ring {
        let dims: Vec<usize> = (0..=2 * n).map(|j| usize::from(j % 2 == 0)).collect();
        let mut products = BTreeMap::new();
        for a in (0..=2 * n).step_by(2) {
            for b in (0..=2 * n - a).step_by(2) {
                products.insert((a, b), Matrix::from_i64(1, 1, &[1]));
            }
        }
        Ring { dims, unit: vec![rat(1)], products }
    }

    pub fn top(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn dim(&self, j: i64) -> usize {
        if j < 0 || j as usize >= self.dims.len() {
            0
        } else {
            self.dims[j as usize]
        }
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn euler(&self) -> i64 {
        self.dims.iter().enumerate().map(|(j, &d)| sign(j as i64) * d as i64).sum()
    }

    pub fn product(&self, a: usize, b: usize) -> Matrix {
        let (da, db) = (self.dim(a as i64), self.dim(b as i64));
        let dc = self.dim((a + b) as i64);
        match self.products.get(&(a, b)) {
            Some(m) => m.clone(),
            None => Matrix::zeros(dc, da * db),
        }
    }

    pub fn mul(&self, a: usize, x: &[Rational], b: usize, y: &[Rational]) -> Vec<Rational> {
        let xy: Vec<Rational> = x.iter().flat_map(|u| y.iter().map(move |v| u * v)).collect();
        self.product(a, b).apply(&xy)
    }

    /// Left multiplication by `x ∈ H^a` as a matrix `H^b -> H^{a+b}`.
    pub fn left_mult(&self, a: usize, x: &[Rational], b: usize) -> Matrix {
        let col = Matrix::from_rows(vec![x.to_vec()], x.len()).expect("vector").transpose();
        self.product(a, b).mul(&kron(&col, &Matrix::identity(self.dim(b as i64))))
    }

    /// Multiplication by `x^k` for `x ∈ H^2`, as a matrix `H^b -> H^{b+2k}`.
    pub fn power_map(&self, x: &[Rational], k: usize, b: usize) -> Matrix {
        let mut m = Matrix::identity(self.dim(b as i64));
        for i in 0..k {
            m = self.left_mult(2, x, b + 2 * i).mul(&m);
        }
        m
    }

    /// Basis vector `i` of degree `j`.
    pub fn basis(&self, j: usize, i: usize) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.dim(j as i64)];
        v[i] = Rational::one();
        v
    }

    /// Künneth blocks of degree `j` in `self ⊗ other`: `(a, b, offset)`.
    pub fn kunneth_blocks(&self, other: &Ring, j: usize) -> Vec<(usize, usize, usize)> {
        let mut off = 0;
        let mut out = Vec::new();
        for a in 0..=j.min(self.top()) {
            let b = j - a;
            if b > other.top() {
                continue;
            }
            let sz = self.dims[a] * other.dims[b];
            if sz > 0 {
                out.push((a, b, off));
            }
            off += sz;
        }
        out
    }

    /// Graded tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &Ring) -> Ring {
        let top = self.top() + other.top();
        let dims: Vec<usize> = (0..=top)
            .map(|j| self.kunneth_blocks(other, j).iter().map(|&(a, b, _)| self.dims[a] * other.dims[b]).sum())
            .collect();
        let unit: Vec<Rational> = self.unit.iter().flat_map(|u| other.unit.iter().map(move |v| u * v)).collect();
        let mut products = BTreeMap::new();
        for j in 0..=top {
            for k in 0..=top - j {
                let (dj, dk, dl) = (dims[j], dims[k], dims[j + k]);
                if dj * dk * dl == 0 {
                    continue;
                }
                let mut m = Matrix::zeros(dl, dj * dk);
                for &(a, b, o1) in &self.kunneth_blocks(other, j) {
                    for &(c, e, o2) in &self.kunneth_blocks(other, k) {
                        let tgt = self.kunneth_blocks(other, j + k);
                        let Some(&(_, _, o3)) = tgt.iter().find(|t| t.0 == a + c) else { continue };
                        let s = rat(sign((b * c) as i64));
                        let (pa, pb) = (self.product(a, c), other.product(b, e));
                        for i1 in 0..self.dims[a] {
                            for j1 in 0..other.dims[b] {
                                for i2 in 0..self.dims[c] {
                                    for j2 in 0..other.dims[e] {
                                        let col = (o1 + i1 * other.dims[b] + j1) * dk + o2 + i2 * other.dims[e] + j2;
                                        for r1 in 0..self.dims[a + c] {
                                            let x = pa.get(r1, i1 * self.dims[c] + i2);
                                            if x.is_zero() {
                                                continue;
                                            }
                                            for r2 in 0..other.dims[b + e] {
                                                let y = pb.get(r2, j1 * other.dims[e] + j2);
                                                if !y.is_zero() {
                                                    let row = o3 + r1 * other.dims[b + e] + r2;
                                                    m.add_at(row, col, &(x * y * &s));
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                products.insert((j, k), m);
            }
        }
        Ring { dims, unit, products }
    }

    fn check_shapes(&self, path: &str) -> Result<(), StrataError> {
        if self.unit.len() != self.dim(0) {
            return Err(schema(format!("{path}/unit"), "unit must live in degree 0"));
        }
        for (&(a, b), m) in &self.products {
            let want = (self.dim((a + b) as i64), self.dim(a as i64) * self.dim(b as i64));
            if (m.rows(), m.cols()) != want {
                return Err(schema(format!("{path}/products/{a},{b}"), format!("expected shape {want:?}")));
            }
        }
        Ok(())
    }
}

/// Cohomology of one stratum with its trace on the top degree and ample
/// class in degree 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratum {
    pub ring: Ring,
    pub trace: Vec<Rational>,
    pub ample: Vec<Rational>,
}

impl Stratum {
    pub fn trace_of(&self, x: &[Rational]) -> Rational {
        self.trace.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Poincaré pairing `(x, y) ↦ t(x·y)` on `H^j × H^{top-j}`.
    pub fn pairing(&self, j: usize) -> Matrix {
        let r = &self.ring;
        let k = r.top() - j;
        let mut m = Matrix::zeros(r.dim(j as i64), r.dim(k as i64));
        for a in 0..r.dim(j as i64) {
            for b in 0..r.dim(k as i64) {
                m.set(a, b, self.trace_of(&r.mul(j, &r.basis(j, a), k, &r.basis(k, b))));
            }
        }
        m
    }
}

/// Combinatorial input: nerve, strata cohomology, restriction and Gysin
/// maps per degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrataDatum {
    pub n: usize,
    pub index: IndexSet,
    pub strata: BTreeMap<Subset, Stratum>,
    /// `(σ, ν) ↦ [res^j: H^j(Y_σ) -> H^j(Y_{σ∪ν})]`.
    pub restrictions: BTreeMap<(Subset, usize), Vec<Matrix>>,
    /// `(σ, ν) ↦ [g^j: H^j(Y_{σ∪ν}) -> H^{j+2}(Y_σ)]`.
    pub gysin: BTreeMap<(Subset, usize), Vec<Matrix>>,
    pub hodge_tate: bool,
}

impl StrataDatum {
    pub fn dim_of(&self, s: Subset) -> i64 {
        self.n as i64 - s.len() as i64 + 1
    }

    pub fn in_nerve(&self, s: Subset) -> bool {
        self.strata.contains_key(&s)
    }

    pub fn nerve(&self) -> Vec<Subset> {
        let mut v: Vec<Subset> = self.strata.keys().copied().collect();
        v.sort();
        v
    }

    pub fn stratum(&self, s: Subset) -> &Stratum {
        &self.strata[&s]
    }

    pub fn ring(&self, s: Subset) -> &Ring {
        &self.strata[&s].ring
    }

    pub fn h(&self, s: Subset, j: i64) -> usize {
        self.strata.get(&s).map_or(0, |st| st.ring.dim(j))
    }

    /// `res: H^j(Y_σ) -> H^j(Y_τ)` for `σ ⊆ τ`, composed along increasing labels.
    pub fn restrict(&self, sigma: Subset, tau: Subset, j: usize) -> Matrix {
        assert!(sigma.is_subset_of(tau));
        let mut m = Matrix::identity(self.h(sigma, j as i64));
        let mut cur = sigma;
        for nu in tau.minus(sigma).iter() {
            m = self.restriction_step(cur, nu, j).mul(&m);
            cur = cur.with(nu);
        }
        m
    }

    fn restriction_step(&self, s: Subset, nu: usize, j: usize) -> Matrix {
        let t = s.with(nu);
        match self.restrictions.get(&(s, nu)).and_then(|v| v.get(j)) {
            Some(m) => m.clone(),
            None => Matrix::zeros(self.h(t, j as i64), self.h(s, j as i64)),
        }
    }

    /// Gysin `H^j(Y_{σ∪ν}) -> H^{j+2}(Y_σ)`.
    pub fn gysin_map(&self, sigma: Subset, nu: usize, j: usize) -> Matrix {
        let t = sigma.with(nu);
        match self.gysin.get(&(sigma, nu)).and_then(|v| v.get(j)) {
            Some(m) => m.clone(),
            None => Matrix::zeros(self.h(sigma, j as i64 + 2), self.h(t, j as i64)),
        }
    }

    pub fn unit(&self, s: Subset) -> Vec<Rational> {
        self.ring(s).unit.clone()
    }

    /// Self-intersection class `κ_ν ∈ H^2(Y_S)` for `ν ∈ S`: the restriction
    /// of `g(1)` from `Y_{S∖ν}` when `|S| ≥ 2`, and `-Σ_μ g(1)` over the
    /// double loci of `Y_ν` when `S = {ν}`.
    pub fn kappa(&self, s: Subset, nu: usize) -> Vec<Rational> {
        assert!(s.contains(nu));
        let h2 = self.h(s, 2);
        if s.len() >= 2 {
            let base = s.without(nu);
            let g1 = self.gysin_map(base, nu, 0).apply(&self.unit(s));
            self.restrict(base, s, 2).apply(&g1)
        } else {
            let mut acc = vec![Rational::zero(); h2];
            for mu in 0..self.index.len() {
                let t = s.with(mu);
                if mu == nu || !self.in_nerve(t) {
                    continue;
                }
                let g1 = self.gysin_map(s, mu, 0).apply(&self.unit(t));
                for (a, b) in acc.iter_mut().zip(g1) {
                    *a -= b;
                }
            }
            acc
        }
    }

    /// Checks shapes and nerve closure; everything `validate` relies on.
    pub fn check_structure(&self) -> Result<(), StrataError> {
        for (&s, st) in &self.strata {
            let key = self.index.key(s);
            let path = format!("strata/{key}");
            if s.is_empty() || !s.is_subset_of(self.index.full()) {
                return Err(schema(path, "not a nonempty set of components"));
            }
            let d = self.dim_of(s);
            if d < 0 {
                return Err(schema(path, "stratum of negative dimension"));
            }
            if st.ring.dims.len() != 2 * d as usize + 1 {
                return Err(schema(format!("{path}/dims"), format!("expected {} degrees", 2 * d + 1)));
            }
            st.ring.check_shapes(&path)?;
            if st.trace.len() != st.ring.dims[st.ring.top()] {
                return Err(schema(format!("{path}/trace"), "length must equal the top Betti number"));
            }
            if st.ample.len() != st.ring.dim(2) {
                return Err(schema(format!("{path}/ample"), "length must equal dim H^2"));
            }
            for i in s.iter() {
                let f = s.without(i);
                if f.is_empty() {
                    continue;
                }
                if !self.in_nerve(f) {
                    return Err(schema(path.clone(), format!("face {} missing from the nerve", self.index.key(f))));
                }
                let rk = format!("restrictions/{}->{}", self.index.key(f), key);
                let r = self.restrictions.get(&(f, i)).ok_or_else(|| schema(&rk, "missing"))?;
                let src = self.ring(f);
                if r.len() != src.dims.len() {
                    return Err(schema(&rk, "one matrix per degree of the source is required"));
                }
                for (j, m) in r.iter().enumerate() {
                    if (m.rows(), m.cols()) != (st.ring.dim(j as i64), src.dims[j]) {
                        return Err(schema(format!("{rk}/{j}"), "wrong shape"));
                    }
                }
                let gk = format!("gysin/{}<-{}", self.index.key(f), key);
                let g = self.gysin.get(&(f, i)).ok_or_else(|| schema(&gk, "missing"))?;
                if g.len() != st.ring.dims.len() {
                    return Err(schema(&gk, "one matrix per degree of the source is required"));
                }
                for (j, m) in g.iter().enumerate() {
                    if (m.rows(), m.cols()) != (src.dim(j as i64 + 2), st.ring.dims[j]) {
                        return Err(schema(format!("{gk}/{j}"), "wrong shape"));
                    }
                }
            }
        }
        for &(s, i) in self.restrictions.keys().chain(self.gysin.keys()) {
            if !self.in_nerve(s.with(i)) || s.contains(i) {
                return Err(StrataError::Structure(format!(
                    "map between {} and {} outside the nerve",
                    self.index.key(s),
                    self.index.key(s.with(i))
                )));
            }
        }
        Ok(())
    }

    /// Fills in every Gysin map not given, from the adjunction with
    /// restriction through Poincaré duality.
    pub fn derive_missing_gysin(&mut self) -> Result<(), StrataError> {
        let pairs: Vec<(Subset, usize)> = self
            .strata
            .keys()
            .flat_map(|&t| t.iter().map(move |i| (t.without(i), i)))
            .filter(|(s, _)| !s.is_empty())
            .collect();
        for (s, i) in pairs {
            if self.gysin.contains_key(&(s, i)) {
                continue;
            }
            let g = self.derived_gysin(s, i)?;
            self.gysin.insert((s, i), g);
        }
        Ok(())
    }

    /// Gysin matrices forced by `t_σ(g(a)·b) = -t_τ(a·res(b))`.
    pub fn derived_gysin(&self, s: Subset, nu: usize) -> Result<Vec<Matrix>, StrataError> {
        let t = s.with(nu);
        let (rs, rt) = (self.ring(s), self.ring(t));
        let (ss, st) = (self.stratum(s), self.stratum(t));
        let mut out = Vec::new();
        for j in 0..=rt.top() {
            let up = j + 2;
            if up > rs.top() || rs.dims[up] == 0 {
                out.push(Matrix::zeros(rs.dim(up as i64), rt.dims[j]));
                continue;
            }
            let comp = rs.top() - up;
            let p = ss.pairing(up);
            let pinv = p.inverse().ok_or_else(|| {
                StrataError::Structure(format!("Poincaré pairing of {} is degenerate", self.index.key(s)))
            })?;
            let res = self.restrict(s, t, comp);
            let mut tm = Matrix::zeros(rt.dims[j], rs.dims[comp]);
            for a in 0..rt.dims[j] {
                for b in 0..rs.dims[comp] {
                    let rb = res.apply(&rs.basis(comp, b));
                    tm.set(a, b, st.trace_of(&rt.mul(j, &rt.basis(j, a), comp, &rb)));
                }
            }
            out.push(pinv.transpose().mul(&tm.transpose()).neg());
        }
        Ok(out)
    }

    /// `Σ_S |S| (-1)^{|S|-1} χ(Y_S)`, the Euler characteristic of the
    /// degenerate fiber computed through open strata.
    pub fn euler_oracle(&self) -> i64 {
        self.strata
            .iter()
            .map(|(s, st)| s.len() as i64 * sign(s.len() as i64 - 1) * st.ring.euler())
            .sum()
    }

    pub fn is_hodge_tate(&self) -> bool {
        self.strata.values().all(|st| st.ring.dims.iter().enumerate().all(|(j, &d)| j % 2 == 0 || d == 0))
    }
}

/// Outcome of one validation check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Runs the first failing witness of `f` over all items.
fn first_failure<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> Option<String>) -> Option<String> {
    items.into_iter().find_map(f)
}

pub const CHECK_RING: &str = "ring axioms";
pub const CHECK_RESTRICTION: &str = "restriction functoriality";
pub const CHECK_PROJECTION: &str = "projection formula";
pub const CHECK_ADJUNCTION: &str = "Gysin-trace adjunction";
pub const CHECK_DUALITY: &str = "Poincaré duality";
pub const CHECK_LEFSCHETZ: &str = "hard Lefschetz";
pub const CHECK_HODGE_RIEMANN: &str = "Hodge-Riemann";
pub const CHECK_AMPLE: &str = "ample compatibility";
pub const CHECK_TRIPLE_POINT: &str = "triple point formula";

/// Axiom checks of a structurally sound datum.
pub fn validate(s: &StrataDatum) -> Result<ValidationReport, StrataError> {
    s.check_structure()?;
    let key = |x: Subset| s.index.key(x);
    let nerve = s.nerve();
    let pairs: Vec<(Subset, usize)> = s.gysin.keys().copied().collect();
    let mut checks = Vec::new();
    let mut push = |name: &str, w: Option<String>| {
        checks.push(Check { name: name.to_string(), passed: w.is_none(), witness: w });
    };

    push(CHECK_RING, first_failure(&nerve, |&x| ring_witness(s.ring(x)).map(|w| format!("Y_{{{}}}: {w}", key(x)))));

    push(
        CHECK_RESTRICTION,
        first_failure(&nerve, |&t| {
            let r = s.ring(t);
            for a in t.iter() {
                let f = t.without(a);
                if f.is_empty() {
                    continue;
                }
                let rf = s.ring(f);
                for j in 0..=rf.top() {
                    let m = s.restriction_step(f, a, j);
                    for k in 0..=rf.top() - j {
                        for (x, y) in iproduct(rf.dims[j], rf.dims[k]) {
                            let (bx, by) = (rf.basis(j, x), rf.basis(k, y));
                            let lhs = s.restriction_step(f, a, j + k).apply(&rf.mul(j, &bx, k, &by));
                            let rhs = r.mul(j, &m.apply(&bx), k, &s.restriction_step(f, a, k).apply(&by));
                            if lhs != rhs {
                                return Some(format!("{}->{} is not multiplicative in degrees {j},{k}", key(f), key(t)));
                            }
                        }
                    }
                }
                if s.restriction_step(f, a, 0).apply(&rf.unit) != r.unit {
                    return Some(format!("{}->{} does not preserve the unit", key(f), key(t)));
                }
                for b in t.iter().filter(|&b| b != a) {
                    let base = f.without(b);
                    if base.is_empty() {
                        continue;
                    }
                    for j in 0..=s.ring(base).top() {
                        let p1 = s.restriction_step(f, a, j).mul(&s.restriction_step(base, b, j));
                        let p2 = s.restriction_step(base.with(a), b, j).mul(&s.restriction_step(base, a, j));
                        if p1 != p2 {
                            return Some(format!("square {}->{} degree {j}", key(base), key(t)));
                        }
                    }
                }
            }
            None
        }),
    );

    push(
        CHECK_PROJECTION,
        first_failure(&pairs, |&(f, nu)| {
            let t = f.with(nu);
            let (rf, rt) = (s.ring(f), s.ring(t));
            for j in 0..=rt.top() {
                for k in 0..=rf.top() {
                    if j + k > rt.top() {
                        continue;
                    }
                    for (x, y) in iproduct(rt.dims[j], rf.dims[k]) {
                        let a = rt.basis(j, x);
                        let b = rf.basis(k, y);
                        let lhs = s.gysin_map(f, nu, j + k).apply(&rt.mul(j, &a, k, &s.restrict(f, t, k).apply(&b)));
                        let rhs = rf.mul(j + 2, &s.gysin_map(f, nu, j).apply(&a), k, &b);
                        if lhs != rhs {
                            return Some(format!("g: {}<-{} degrees {j},{k} basis ({x},{y})", key(f), key(t)));
                        }
                    }
                }
            }
            None
        }),
    );

    push(
        CHECK_ADJUNCTION,
        first_failure(&pairs, |&(f, nu)| {
            let t = f.with(nu);
            let (rf, rt) = (s.ring(f), s.ring(t));
            let (sf, st) = (s.stratum(f), s.stratum(t));
            for j in 0..=rt.top() {
                let k = rt.top() - j;
                for (x, y) in iproduct(rt.dims[j], rf.dim(k as i64)) {
                    let a = rt.basis(j, x);
                    let b = rf.basis(k, y);
                    let lhs = sf.trace_of(&rf.mul(j + 2, &s.gysin_map(f, nu, j).apply(&a), k, &b));
                    let rhs = -st.trace_of(&rt.mul(j, &a, k, &s.restrict(f, t, k).apply(&b)));
                    if lhs != rhs {
                        return Some(format!(
                            "g: {}<-{} degree {j} basis ({x},{y}): t(g(a)b) = {}, -t(a res b) = {}",
                            key(f),
                            key(t),
                            format_rational(&lhs),
                            format_rational(&rhs)
                        ));
                    }
                }
            }
            None
        }),
    );

    push(
        CHECK_DUALITY,
        first_failure(&nerve, |&x| {
            let st = s.stratum(x);
            (0..=st.ring.top()).find_map(|j| {
                let p = st.pairing(j);
                (!p.is_square() || p.rank() != p.rows()).then(|| format!("Y_{{{}}} degree {j}", key(x)))
            })
        }),
    );

    push(
        CHECK_LEFSCHETZ,
        first_failure(&nerve, |&x| {
            let st = s.stratum(x);
            let d = s.dim_of(x) as usize;
            (1..=d).find_map(|k| {
                let m = st.ring.power_map(&st.ample, k, d - k);
                (!m.is_square() || m.rank() != m.rows()).then(|| format!("Y_{{{}}}: ℓ^{k} on H^{}", key(x), d - k))
            })
        }),
    );

    push(
        CHECK_HODGE_RIEMANN,
        if !s.hodge_tate {
            None
        } else if !s.is_hodge_tate() {
            Some("odd cohomology present in a datum flagged Hodge-Tate".into())
        } else {
            first_failure(&nerve, |&x| hodge_riemann_witness(s.stratum(x), s.dim_of(x) as usize).map(|w| format!("Y_{{{}}}: {w}", key(x))))
        },
    );

    push(
        CHECK_AMPLE,
        first_failure(&pairs, |&(f, nu)| {
            let t = f.with(nu);
            (s.restrict(f, t, 2).apply(&s.stratum(f).ample) != s.stratum(t).ample)
                .then(|| format!("{}->{}", key(f), key(t)))
        }),
    );

    push(
        CHECK_TRIPLE_POINT,
        first_failure(nerve.iter().filter(|x| x.len() >= 2), |&x| {
            let mut acc = vec![Rational::zero(); s.h(x, 2)];
            for nu in x.iter() {
                add_into(&mut acc, &s.kappa(x, nu));
            }
            for mu in 0..s.index.len() {
                let t = x.with(mu);
                if !x.contains(mu) && s.in_nerve(t) {
                    add_into(&mut acc, &s.gysin_map(x, mu, 0).apply(&s.unit(t)));
                }
            }
            acc.iter().any(|v| !v.is_zero()).then(|| format!("Y_{{{}}}", key(x)))
        }),
    );

    Ok(ValidationReport { checks })
}

fn add_into(acc: &mut [Rational], v: &[Rational]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

fn iproduct(a: usize, b: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..a).flat_map(move |i| (0..b).map(move |j| (i, j)))
}

fn ring_witness(r: &Ring) -> Option<String> {
    let top = r.top();
    for j in 0..=top {
        for x in 0..r.dims[j] {
            let b = r.basis(j, x);
            if r.mul(0, &r.unit, j, &b) != b || r.mul(j, &b, 0, &r.unit) != b {
                return Some(format!("unit fails on basis {x} of degree {j}"));
            }
        }
    }
    for j in 0..=top {
        for k in 0..=top - j {
            for (x, y) in iproduct(r.dims[j], r.dims[k]) {
                let (a, b) = (r.basis(j, x), r.basis(k, y));
                let ab = r.mul(j, &a, k, &b);
                let ba: Vec<Rational> = r.mul(k, &b, j, &a).into_iter().map(|v| v * rat(sign((j * k) as i64))).collect();
                if ab != ba {
                    return Some(format!("graded commutativity in degrees {j},{k}"));
                }
                for l in 0..=top - j - k {
                    for z in 0..r.dims[l] {
                        let c = r.basis(l, z);
                        if r.mul(j + k, &ab, l, &c) != r.mul(j, &a, k + l, &r.mul(k, &b, l, &c)) {
                            return Some(format!("associativity in degrees {j},{k},{l}"));
                        }
                    }
                }
            }
        }
    }
    None
}

/// On `P^{2p} = ker ℓ^{d-2p+1}`, the form `(-1)^p t(a·ℓ^{d-2p}·b)` must be
/// positive definite.
fn hodge_riemann_witness(st: &Stratum, d: usize) -> Option<String> {
    let r = &st.ring;
    for p in 0..=d / 2 {
        let j = 2 * p;
        if r.dims[j] == 0 {
            continue;
        }
        let prim = kernel(&r.power_map(&st.ample, d - j + 1, j));
        if prim.dim() == 0 {
            continue;
        }
        let lp = r.power_map(&st.ample, d - j, j);
        let basis = prim.basis();
        let mut form = Matrix::zeros(prim.dim(), prim.dim());
        for a in 0..prim.dim() {
            for b in 0..prim.dim() {
                let v = st.trace_of(&r.mul(j, basis.row(a), 2 * d - j, &lp.apply(basis.row(b))));
                form.set(a, b, v * rat(sign(p as i64)));
            }
        }
        match is_positive_definite(&form) {
            Ok(true) => {}
            Ok(false) => return Some(format!("primitive degree {j} form is not positive definite")),
            Err(e) => return Some(format!("primitive degree {j}: {e}")),
        }
    }
    None
}

/// Class of a point on a stratum: the unique top-degree class of trace 1
/// when the stratum is connected.
fn point_class(st: &Stratum) -> Vec<Rational> {
    let t = st.trace[0].clone();
    let mut v = vec![Rational::zero(); st.trace.len()];
    v[0] = t.recip();
    v
}

/// Projective space `P^n` as a single component.
pub fn fixture_projective_space(n: usize) -> Result<StrataDatum, StrataError> {
    if n < 1 {
        return Err(StrataError::Parameter("projective space needs n ≥ 1".into()));
    }
    let ring = Ring::projective_space(n);
    let st = Stratum { trace: vec![rat(1)], ample: vec![rat(1)], ring };
    Ok(StrataDatum {
        n,
        index: IndexSet::numbered(1),
        strata: BTreeMap::from([(Subset::singleton(0), st)]),
        restrictions: BTreeMap::new(),
        gysin: BTreeMap::new(),
        hodge_tate: true,
    })
}

/// Cycle of `N ≥ 3` projective lines, each meeting its two neighbours in a
/// point: the semistable model of a degenerating elliptic curve.
pub fn fixture_cycle_of_p1(count: usize) -> Result<StrataDatum, StrataError> {
    if count < 3 {
        return Err(StrataError::Parameter(format!("a cycle needs at least 3 components, got {count}")));
    }
    let line = Stratum { ring: Ring::projective_space(1), trace: vec![rat(1)], ample: vec![rat(1)] };
    let point = Stratum { ring: Ring::point(), trace: vec![rat(1)], ample: vec![] };
    let mut strata = BTreeMap::new();
    let mut restrictions = BTreeMap::new();
    for i in 0..count {
        strata.insert(Subset::singleton(i), line.clone());
        let j = (i + 1) % count;
        let e = Subset::singleton(i).with(j);
        strata.insert(e, point.clone());
        for (a, b) in [(i, j), (j, i)] {
            restrictions.insert((Subset::singleton(a), b), vec![Matrix::from_i64(1, 1, &[1]), Matrix::zeros(0, 0), Matrix::zeros(0, 1)]);
        }
    }
    let mut s = StrataDatum {
        n: 1,
        index: IndexSet::numbered(count),
        strata,
        restrictions,
        gysin: BTreeMap::new(),
        hodge_tate: true,
    };
    s.derive_missing_gysin()?;
    Ok(s)
}

/// `S × P^1`: every stratum multiplied by a projective line, Künneth rings,
/// maps tensored with the identity, ample class `ℓ ⊗ 1 + 1 ⊗ h`.
pub fn fixture_product_p1(s: &StrataDatum) -> StrataDatum {
    let p1 = Ring::projective_space(1);
    let p1_trace = vec![rat(1)];
    let p1_ample = vec![rat(1)];
    let mut strata = BTreeMap::new();
    for (&x, st) in &s.strata {
        let ring = st.ring.tensor(&p1);
        let top = ring.top();
        let trace: Vec<Rational> = {
            let blocks = st.ring.kunneth_blocks(&p1, top);
            let mut v = vec![Rational::zero(); ring.dims[top]];
            for (a, b, off) in blocks {
                if a == st.ring.top() && b == p1.top() {
                    for i in 0..st.ring.dims[a] {
                        for k in 0..p1.dims[b] {
                            v[off + i * p1.dims[b] + k] = &st.trace[i] * &p1_trace[k];
                        }
                    }
                }
            }
            v
        };
        let mut ample = vec![Rational::zero(); ring.dim(2)];
        for (a, _, off) in st.ring.kunneth_blocks(&p1, 2) {
            let (u, w) = if a == 2 { (st.ample.clone(), p1.unit.clone()) } else { (st.ring.unit.clone(), p1_ample.clone()) };
            for i in 0..u.len() {
                for k in 0..w.len() {
                    ample[off + i * w.len() + k] += &u[i] * &w[k];
                }
            }
        }
        strata.insert(x, Stratum { ring, trace, ample });
    }
    let lift = |src: &Ring, dst: &Ring, shift: usize, maps: &[Matrix]| -> Vec<Matrix> {
        let ps = src.tensor(&p1);
        let pd = dst.tensor(&p1);
        (0..=ps.top())
            .map(|j| {
                let mut m = Matrix::zeros(pd.dim((j + shift) as i64), ps.dims[j]);
                for (a, b, o1) in src.kunneth_blocks(&p1, j) {
                    if let Some((_, _, o2)) = dst.kunneth_blocks(&p1, j + shift).into_iter().find(|t| t.0 == a + shift && t.1 == b) {
                        m.set_block(o2, o1, &kron(&maps[a], &Matrix::identity(p1.dims[b])));
                    }
                }
                m
            })
            .collect()
    };
    let restrictions = s
        .restrictions
        .iter()
        .map(|(&(x, nu), maps)| ((x, nu), lift(s.ring(x), s.ring(x.with(nu)), 0, maps)))
        .collect();
    let gysin = s
        .gysin
        .iter()
        .map(|(&(x, nu), maps)| ((x, nu), lift(s.ring(x.with(nu)), s.ring(x), 2, maps)))
        .collect();
    StrataDatum { n: s.n + 1, index: s.index.clone(), strata, restrictions, gysin, hodge_tate: s.hodge_tate }
}

/// Point classes of every stratum, for tests and reports.
pub fn point_classes(s: &StrataDatum) -> BTreeMap<Subset, Vec<Rational>> {
    s.strata.iter().filter(|(_, st)| st.trace.len() == 1).map(|(&x, st)| (x, point_class(st))).collect()
}

// JSON persistence.

type RawMatrix = Vec<Vec<String>>;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
struct RawStratum {
    dims: Vec<usize>,
    unit: Vec<String>,
    products: BTreeMap<String, RawMatrix>,
    trace: Option<Vec<String>>,
    ample: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
struct RawDatum {
    n: usize,
    components: Vec<String>,
    #[serde(default = "default_true")]
    hodge_tate: bool,
    strata: BTreeMap<String, RawStratum>,
    #[serde(default)]
    restrictions: BTreeMap<String, Vec<RawMatrix>>,
    #[serde(default)]
    gysin: BTreeMap<String, Vec<RawMatrix>>,
}

fn default_true() -> bool {
    true
}

fn raw_matrix(m: &Matrix) -> RawMatrix {
    m.to_strings()
}

fn parse_vec(v: &[String], path: &str) -> Result<Vec<Rational>, StrataError> {
    v.iter()
        .enumerate()
        .map(|(i, x)| parse_rational(x).map_err(|e| schema(format!("{path}/{i}"), e.to_string())))
        .collect()
}

fn parse_matrix(m: &RawMatrix, rows: usize, cols: usize, path: &str) -> Result<Matrix, StrataError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(schema(path, format!("expected a {rows}x{cols} matrix")));
    }
    Matrix::from_strings(m, cols).map_err(|e| schema(path, e.to_string()))
}

fn sorted_key(index: &IndexSet, key: &str, path: &str) -> Result<Subset, StrataError> {
    let s = index.parse_key(key).ok_or_else(|| schema(path, format!("unknown or repeated label in {key:?}")))?;
    if index.key(s) != key {
        return Err(schema(path, format!("labels of {key:?} must be listed in component order")));
    }
    Ok(s)
}

impl StrataDatum {
    pub fn to_json(&self) -> String {
        let k = |s: Subset| self.index.key(s);
        let strata = self
            .strata
            .iter()
            .map(|(&x, st)| {
                let products = st
                    .ring
                    .products
                    .iter()
                    .map(|(&(a, b), m)| (format!("{a},{b}"), raw_matrix(m)))
                    .collect();
                let raw = RawStratum {
                    dims: st.ring.dims.clone(),
                    unit: st.ring.unit.iter().map(format_rational).collect(),
                    products,
                    trace: Some(st.trace.iter().map(format_rational).collect()),
                    ample: Some(st.ample.iter().map(format_rational).collect()),
                };
                (k(x), raw)
            })
            .collect();
        let restrictions = self
            .restrictions
            .iter()
            .map(|(&(x, nu), v)| (format!("{}->{}", k(x), k(x.with(nu))), v.iter().map(raw_matrix).collect()))
            .collect();
        let gysin = self
            .gysin
            .iter()
            .map(|(&(x, nu), v)| (format!("{}<-{}", k(x), k(x.with(nu))), v.iter().map(raw_matrix).collect()))
            .collect();
        let raw = RawDatum {
            n: self.n,
            components: self.index.labels().to_vec(),
            hodge_tate: self.hodge_tate,
            strata,
            restrictions,
            gysin,
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("serializable");
        s.push('\n');
        s
    }

    /// Parses a datum; Gysin maps that are omitted are derived from the
    /// adjunction.
    pub fn from_json(text: &str) -> Result<StrataDatum, StrataError> {
        let raw: RawDatum = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
        let index = IndexSet::new(raw.components.clone()).map_err(|e| schema("components", e.to_string()))?;
        let mut strata = BTreeMap::new();
        for (key, rs) in &raw.strata {
            let path = format!("strata/{key}");
            let x = sorted_key(&index, key, &path)?;
            let dims = rs.dims.clone();
            if dims.is_empty() {
                return Err(schema(format!("{path}/dims"), "empty"));
            }
            let top = dims.len() - 1;
            let mut products = BTreeMap::new();
            for (pk, m) in &rs.products {
                let pp = format!("{path}/products/{pk}");
                let (a, b) = pk
                    .split_once(',')
                    .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
                    .ok_or_else(|| schema(&pp, "key must be \"a,b\""))?;
                if a + b > top {
                    return Err(schema(&pp, "degree beyond the top"));
                }
                products.insert((a, b), parse_matrix(m, dims[a + b], dims[a] * dims[b], &pp)?);
            }
            for a in 0..=top {
                for b in 0..=top - a {
                    if dims[a] * dims[b] * dims[a + b] > 0 && !products.contains_key(&(a, b)) {
                        return Err(schema(format!("{path}/products/{a},{b}"), "missing"));
                    }
                }
            }
            let unit = parse_vec(&rs.unit, &format!("{path}/unit"))?;
            let trace = parse_vec(rs.trace.as_ref().ok_or_else(|| schema(format!("{path}/trace"), "missing"))?, &format!("{path}/trace"))?;
            let ample = parse_vec(rs.ample.as_ref().ok_or_else(|| schema(format!("{path}/ample"), "missing"))?, &format!("{path}/ample"))?;
            strata.insert(x, Stratum { ring: Ring { dims, unit, products }, trace, ample });
        }
        let dims_of = |x: Subset, path: &str| -> Result<Vec<usize>, StrataError> {
            strata.get(&x).map(|st: &Stratum| st.ring.dims.clone()).ok_or_else(|| schema(path, "stratum not in the nerve"))
        };
        let parse_pair = |key: &str, sep: &str, path: &str| -> Result<(Subset, usize), StrataError> {
            let (a, b) = key.split_once(sep).ok_or_else(|| schema(path, format!("key must be \"σ{sep}τ\"")))?;
            let (s, t) = (sorted_key(&index, a, path)?, sorted_key(&index, b, path)?);
            let diff = t.minus(s);
            if !s.is_subset_of(t) || diff.len() != 1 {
                return Err(schema(path, "maps are given for codimension one inclusions"));
            }
            Ok((s, diff.elements()[0]))
        };
        let mut restrictions = BTreeMap::new();
        for (key, v) in &raw.restrictions {
            let path = format!("restrictions/{key}");
            let (s, nu) = parse_pair(key, "->", &path)?;
            let (ds, dt) = (dims_of(s, &path)?, dims_of(s.with(nu), &path)?);
            if v.len() != ds.len() {
                return Err(schema(&path, "one matrix per degree of the source is required"));
            }
            let ms = v
                .iter()
                .enumerate()
                .map(|(j, m)| parse_matrix(m, dt.get(j).copied().unwrap_or(0), ds[j], &format!("{path}/{j}")))
                .collect::<Result<Vec<_>, _>>()?;
            restrictions.insert((s, nu), ms);
        }
        let mut gysin = BTreeMap::new();
        for (key, v) in &raw.gysin {
            let path = format!("gysin/{key}");
            let (s, nu) = parse_pair(key, "<-", &path)?;
            let (ds, dt) = (dims_of(s, &path)?, dims_of(s.with(nu), &path)?);
            if v.len() != dt.len() {
                return Err(schema(&path, "one matrix per degree of the source is required"));
            }
            let ms = v
                .iter()
                .enumerate()
                .map(|(j, m)| parse_matrix(m, ds.get(j + 2).copied().unwrap_or(0), dt[j], &format!("{path}/{j}")))
                .collect::<Result<Vec<_>, _>>()?;
            gysin.insert((s, nu), ms);
        }
        let mut s = StrataDatum { n: raw.n, index, strata, restrictions, gysin, hodge_tate: raw.hodge_tate };
        for &x in s.strata.keys() {
            for i in x.iter() {
                let f = x.without(i);
                if !f.is_empty() && !s.restrictions.contains_key(&(f, i)) {
                    return Err(schema(format!("restrictions/{}->{}", s.index.key(f), s.index.key(x)), "missing"));
                }
            }
        }
        s.check_structure_but_gysin()?;
        s.derive_missing_gysin()?;
        s.check_structure()?;
        Ok(s)
    }

    fn check_structure_but_gysin(&self) -> Result<(), StrataError> {
        let mut t = self.clone();
        let pairs: Vec<(Subset, usize)> = t
            .strata
            .keys()
            .flat_map(|&x| x.iter().map(move |i| (x.without(i), i)))
            .filter(|(f, _)| !f.is_empty())
            .collect();
        for (f, i) in pairs {
            let (rf, rt) = (&t.strata[&f].ring, &t.strata[&f.with(i)].ring);
            let zeros = (0..rt.dims.len()).map(|j| Matrix::zeros(rf.dim(j as i64 + 2), rt.dims[j])).collect();
            t.gysin.entry((f, i)).or_insert(zeros);
        }
        t.check_structure()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<StrataDatum, StrataError> {
        let p = path.as_ref();
        let text = fs::read_to_string(p).map_err(|e| StrataError::Io { path: p.display().to_string(), source: e })?;
        StrataDatum::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StrataError> {
        let p = path.as_ref();
        fs::write(p, self.to_json()).map_err(|e| StrataError::Io { path: p.display().to_string(), source: e })
    }

    /// Multiplies every trace by `c`.
    pub fn scale_traces(&mut self, c: &Rational) {
        for st in self.strata.values_mut() {
            for t in &mut st.trace {
                *t *= c;
            }
        }
    }

    /// Whether every stratum has positive trace on its point class.
    pub fn traces_positive(&self) -> bool {
        self.strata.values().all(|st| st.trace.iter().all(|t| t.is_positive()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projective_space_fixture_validates() {
        for n in 1..=3 {
            let s = fixture_projective_space(n).unwrap();
            let r = validate(&s).unwrap();
            assert!(r.passed(), "{:?}", r.failures());
        }
        assert_eq!(fixture_projective_space(1).unwrap().ring(Subset(1)).dims, vec![1, 0, 1]);
    }

    #[test]
    fn cycle_fixture_shape_and_validity() {
        let s = fixture_cycle_of_p1(3).unwrap();
        assert_eq!(s.strata.len(), 6);
        assert_eq!(s.h(Subset(0b011), 0), 1);
        let r = validate(&s).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        let s4 = fixture_cycle_of_p1(4).unwrap();
        assert_eq!(s4.strata.keys().filter(|x| x.len() == 2).count(), 4);
        assert!(!s4.in_nerve(Subset(0b0101)));
        assert!(fixture_cycle_of_p1(2).is_err());
    }

    #[test]
    fn cycle_gysin_is_minus_point_class() {
        let s = fixture_cycle_of_p1(3).unwrap();
        let g = s.gysin_map(Subset(1), 1, 0);
        assert_eq!(g, Matrix::from_i64(1, 1, &[-1]));
        // self-intersection of each line is -2
        assert_eq!(s.kappa(Subset(1), 0), vec![rat(2)]);
    }

    #[test]
    fn negated_gysin_breaks_adjunction() {
        let mut s = fixture_cycle_of_p1(3).unwrap();
        let g = s.gysin.get_mut(&(Subset(1), 1)).unwrap();
        g[0] = g[0].neg();
        let r = validate(&s).unwrap();
        let c = r.get(CHECK_ADJUNCTION).unwrap();
        assert!(!c.passed);
        assert!(c.witness.as_ref().unwrap().contains("0<-0,1"));
    }

    #[test]
    fn product_fixture() {
        let s = fixture_product_p1(&fixture_cycle_of_p1(3).unwrap());
        assert_eq!(s.n, 2);
        assert_eq!(s.ring(Subset(1)).dims, vec![1, 0, 2, 0, 1]);
        let r = validate(&s).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
    }

    #[test]
    fn json_round_trip() {
        for s in [fixture_cycle_of_p1(3).unwrap(), fixture_projective_space(2).unwrap()] {
            let text = s.to_json();
            let t = StrataDatum::from_json(&text).unwrap();
            assert_eq!(s, t);
            assert_eq!(text, t.to_json());
        }
    }

    #[test]
    fn missing_trace_is_named() {
        let text = fixture_projective_space(1).unwrap().to_json();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["strata"]["0"].as_object_mut().unwrap().remove("trace");
        let err = StrataDatum::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("strata/0/trace"), "{err}");
    }

    #[test]
    fn unknown_label_is_rejected() {
        let text = fixture_cycle_of_p1(3).unwrap().to_json();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let st = v["strata"]["0,1"].clone();
        v["strata"].as_object_mut().unwrap().insert("0,9".into(), st);
        assert!(StrataDatum::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn omitted_gysin_is_derived() {
        let s = fixture_cycle_of_p1(3).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        v.as_object_mut().unwrap().remove("gysin");
        assert_eq!(StrataDatum::from_json(&v.to_string()).unwrap(), s);
    }

    #[test]
    fn euler_oracle_of_fixtures() {
        assert_eq!(fixture_cycle_of_p1(3).unwrap().euler_oracle(), 0);
        assert_eq!(fixture_projective_space(2).unwrap().euler_oracle(), 3);
        assert_eq!(fixture_product_p1(&fixture_cycle_of_p1(3).unwrap()).euler_oracle(), 0);
    }
}
