//! Bounded cochain complexes of finite dimensional rational spaces.
//!
//! Sign conventions: `K[m]^p = K^{p+m}` with differential `(-1)^m d`; the
//! tensor product has differential `d ⊗ 1 + (-1)^p 1 ⊗ d`; the cone of
//! `f: K -> L` is `K^{p+1} ⊕ L^p` with `d(x, y) = (-dx, f x + dy)`.
//! Connecting maps lift, differentiate and pull back with a plus sign.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exactlin::{kernel, quotient, rat, solve, LinError, Matrix, Quotient, Subspace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomError {
    #[error("d∘d ≠ 0 at degree {0}")]
    NotComplex(i64),
    #[error("differential at degree {degree} has shape {got:?}, expected {want:?}")]
    Shape { degree: i64, got: (usize, usize), want: (usize, usize) },
    #[error("map does not commute with differentials at degree {0}")]
    NotChainMap(i64),
    #[error("sequence is not short exact at degree {degree}: {reason}")]
    NotExact { degree: i64, reason: String },
    #[error("invalid filtration: {0}")]
    Filtration(String),
    #[error(transparent)]
    Lin(#[from] LinError),
}

pub fn sign(e: i64) -> i64 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// A complex concentrated in degrees `lo..lo + dims.len()`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Complex {
    lo: i64,
    dims: Vec<usize>,
    diffs: Vec<Matrix>,
}

impl Complex {
    /// `diffs[i]` maps degree `lo + i` to `lo + i + 1`.
    pub fn new(lo: i64, dims: Vec<usize>, diffs: Vec<Matrix>) -> Result<Self, HomError> {
        if diffs.len() != dims.len().saturating_sub(1) {
            return Err(HomError::Filtration(format!(
                "{} differentials for {} degrees",
                diffs.len(),
                dims.len()
            )));
        }
        for (i, d) in diffs.iter().enumerate() {
            let want = (dims[i + 1], dims[i]);
            if (d.rows(), d.cols()) != want {
                return Err(HomError::Shape { degree: lo + i as i64, got: (d.rows(), d.cols()), want });
            }
        }
        for i in 1..diffs.len() {
            if !diffs[i].mul(&diffs[i - 1]).is_zero() {
                return Err(HomError::NotComplex(lo + i as i64 - 1));
            }
        }
        Ok(Complex { lo, dims, diffs })
    }

    pub fn zero() -> Self {
        Complex { lo: 0, dims: Vec::new(), diffs: Vec::new() }
    }

    /// One space in degree `p`.
    pub fn concentrated(p: i64, dim: usize) -> Self {
        Complex { lo: p, dims: vec![dim], diffs: Vec::new() }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Last degree; `lo - 1` for the empty complex.
    pub fn hi(&self) -> i64 {
        self.lo + self.dims.len() as i64 - 1
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi()
    }

    pub fn dim(&self, p: i64) -> usize {
        if p < self.lo || p > self.hi() {
            0
        } else {
            self.dims[(p - self.lo) as usize]
        }
    }

    /// `d^p: K^p -> K^{p+1}`, zero outside the stored range.
    pub fn d(&self, p: i64) -> Matrix {
        if p >= self.lo && p < self.hi() {
            self.diffs[(p - self.lo) as usize].clone()
        } else {
            Matrix::zeros(self.dim(p + 1), self.dim(p))
        }
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn cohomology(&self, p: i64) -> Quotient {
        let z = kernel(&self.d(p));
        let b = crate::exactlin::image(&self.d(p - 1));
        quotient(&z, &b).expect("boundaries lie in cycles")
    }

    pub fn betti(&self, p: i64) -> usize {
        let n = self.dim(p);
        n - self.d(p).rank() - self.d(p - 1).rank()
    }

    pub fn is_acyclic(&self) -> bool {
        self.degrees().all(|p| self.betti(p) == 0)
    }

    /// Euler characteristic of the cohomology.
    pub fn euler(&self) -> i64 {
        self.degrees().map(|p| sign(p) * self.dim(p) as i64).sum()
    }
}

/// Builds a complex over `lo..=hi` from a dimension function and a
/// differential function.
pub fn complex_from_fn(
    lo: i64,
    hi: i64,
    dim: impl Fn(i64) -> usize,
    d: impl Fn(i64) -> Matrix,
) -> Result<Complex, HomError> {
    if hi < lo {
        return Ok(Complex { lo, dims: Vec::new(), diffs: Vec::new() });
    }
    let dims = (lo..=hi).map(&dim).collect();
    let diffs = (lo..hi).map(&d).collect();
    Complex::new(lo, dims, diffs)
}

/// A degree-preserving morphism of complexes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainMap {
    source: Complex,
    target: Complex,
    lo: i64,
    components: Vec<Matrix>,
}

impl ChainMap {
    pub fn from_fn(source: &Complex, target: &Complex, f: impl Fn(i64) -> Matrix) -> Result<Self, HomError> {
        let lo = source.lo().min(target.lo());
        let hi = source.hi().max(target.hi());
        let mut components = Vec::new();
        for p in lo..=hi {
            let m = f(p);
            let want = (target.dim(p), source.dim(p));
            if (m.rows(), m.cols()) != want {
                return Err(HomError::Shape { degree: p, got: (m.rows(), m.cols()), want });
            }
            components.push(m);
        }
        let map = ChainMap { source: source.clone(), target: target.clone(), lo, components };
        for p in lo - 1..=hi {
            let lhs = map.target.d(p).mul(&map.component(p));
            let rhs = map.component(p + 1).mul(&map.source.d(p));
            if lhs != rhs {
                return Err(HomError::NotChainMap(p));
            }
        }
        Ok(map)
    }

    pub fn identity(k: &Complex) -> Self {
        ChainMap::from_fn(k, k, |p| Matrix::identity(k.dim(p))).expect("identity commutes")
    }

    pub fn zero(source: &Complex, target: &Complex) -> Self {
        ChainMap::from_fn(source, target, |p| Matrix::zeros(target.dim(p), source.dim(p))).expect("zero commutes")
    }

    pub fn source(&self) -> &Complex {
        &self.source
    }

    pub fn target(&self) -> &Complex {
        &self.target
    }

    pub fn component(&self, p: i64) -> Matrix {
        let i = p - self.lo;
        if i >= 0 && (i as usize) < self.components.len() {
            self.components[i as usize].clone()
        } else {
            Matrix::zeros(self.target.dim(p), self.source.dim(p))
        }
    }

    pub fn compose(&self, first: &ChainMap) -> ChainMap {
        assert_eq!(first.target, self.source, "composable maps");
        ChainMap::from_fn(&first.source, &self.target, |p| self.component(p).mul(&first.component(p)))
            .expect("composite of chain maps")
    }

    pub fn scale(&self, c: i64) -> ChainMap {
        let c = rat(c);
        ChainMap::from_fn(&self.source, &self.target, |p| self.component(p).scale(&c)).expect("scaled chain map")
    }

    /// `f[m]`, with components `f^{p+m}` and no sign.
    pub fn shift(&self, m: i64) -> ChainMap {
        ChainMap::from_fn(&shift(&self.source, m), &shift(&self.target, m), |p| self.component(p + m))
            .expect("shifted chain map")
    }

    /// Induced map `H^p(source) -> H^p(target)` in the chosen quotient bases.
    pub fn on_cohomology(&self, p: i64) -> Matrix {
        let hs = self.source.cohomology(p);
        let ht = self.target.cohomology(p);
        ht.projection.mul(&self.component(p)).mul(&hs.section)
    }
}

pub fn shift(k: &Complex, m: i64) -> Complex {
    let s = rat(sign(m));
    Complex { lo: k.lo - m, dims: k.dims.clone(), diffs: k.diffs.iter().map(|d| d.scale(&s)).collect() }
}

/// Offsets of the blocks `K^p ⊗ L^{n-p}` inside `(K ⊗ L)^n`, ordered by `p`.
pub fn tensor_blocks(k: &Complex, l: &Complex, n: i64) -> Vec<(i64, usize)> {
    let mut out = Vec::new();
    let mut off = 0;
    for p in k.degrees() {
        let q = n - p;
        let sz = k.dim(p) * l.dim(q);
        if sz > 0 {
            out.push((p, off));
        }
        off += sz;
    }
    out
}

fn tensor_dim(k: &Complex, l: &Complex, n: i64) -> usize {
    k.degrees().map(|p| k.dim(p) * l.dim(n - p)).sum()
}

/// Total complex of `K ⊗ L`. Within a block the index of `K` is major.
pub fn tensor(k: &Complex, l: &Complex) -> Complex {
    if k.dims.is_empty() || l.dims.is_empty() {
        return Complex::zero();
    }
    let lo = k.lo + l.lo;
    let hi = k.hi() + l.hi();
    complex_from_fn(
        lo,
        hi,
        |n| tensor_dim(k, l, n),
        |n| {
            let mut d = Matrix::zeros(tensor_dim(k, l, n + 1), tensor_dim(k, l, n));
            let src = tensor_blocks(k, l, n);
            let dst = tensor_blocks(k, l, n + 1);
            let off = |p: i64| dst.iter().find(|b| b.0 == p).map(|b| b.1);
            for &(p, o) in &src {
                let q = n - p;
                if let Some(t) = off(p + 1) {
                    let blk = crate::exactlin::kron(&k.d(p), &Matrix::identity(l.dim(q)));
                    d.set_block(t, o, &blk);
                }
                if let Some(t) = off(p) {
                    let blk = crate::exactlin::kron(&Matrix::identity(k.dim(p)), &l.d(q)).scale(&rat(sign(p)));
                    d.set_block(t, o, &blk);
                }
            }
            d
        },
    )
    .expect("Koszul sign rule gives a complex")
}

/// Tensor product of chain maps.
pub fn tensor_map(f: &ChainMap, g: &ChainMap) -> ChainMap {
    let (s1, s2) = (f.source(), g.source());
    let (t1, t2) = (f.target(), g.target());
    let src = tensor(s1, s2);
    let tgt = tensor(t1, t2);
    ChainMap::from_fn(&src, &tgt, |n| {
        let mut m = Matrix::zeros(tgt.dim(n), src.dim(n));
        let so = tensor_blocks(s1, s2, n);
        let to = tensor_blocks(t1, t2, n);
        for &(p, o) in &so {
            if let Some(&(_, t)) = to.iter().find(|b| b.0 == p) {
                m.set_block(t, o, &crate::exactlin::kron(&f.component(p), &g.component(n - p)));
            }
        }
        m
    })
    .expect("tensor of chain maps")
}

/// The isomorphism `K[a] ⊗ L[b] -> (K ⊗ L)[a + b]`, `x ⊗ y ↦ (-1)^{pb} x ⊗ y`
/// for `x ∈ K[a]^p`.
pub fn shift_tensor_iso(k: &Complex, l: &Complex, a: i64, b: i64) -> ChainMap {
    let ka = shift(k, a);
    let lb = shift(l, b);
    let src = tensor(&ka, &lb);
    let tgt = shift(&tensor(k, l), a + b);
    ChainMap::from_fn(&src, &tgt, |n| {
        let mut m = Matrix::zeros(tgt.dim(n), src.dim(n));
        for (p, o) in tensor_blocks(&ka, &lb, n) {
            let sz = ka.dim(p) * lb.dim(n - p);
            m.set_block(o, o, &Matrix::scalar(sz, rat(sign(p * b))));
        }
        m
    })
    .expect("shift-tensor identification is a chain map")
}

#[derive(Clone, Debug)]
pub struct Cone {
    pub complex: Complex,
    /// `L -> C(f)`, `y ↦ (0, y)`.
    pub alpha: ChainMap,
    /// `C(f) -> K[1]`, `(x, y) ↦ -x`.
    pub beta: ChainMap,
}

pub fn cone(f: &ChainMap) -> Cone {
    let k = f.source();
    let l = f.target();
    let lo = (k.lo() - 1).min(l.lo());
    let hi = (k.hi() - 1).max(l.hi());
    let dim = |p: i64| k.dim(p + 1) + l.dim(p);
    let complex = complex_from_fn(lo, hi, dim, |p| {
        let (kp, lp) = (k.dim(p + 1), l.dim(p));
        let (kq, lq) = (k.dim(p + 2), l.dim(p + 1));
        let mut d = Matrix::zeros(kq + lq, kp + lp);
        d.set_block(0, 0, &k.d(p + 1).neg());
        d.set_block(kq, 0, &f.component(p + 1));
        d.set_block(kq, kp, &l.d(p));
        d
    })
    .expect("cone differential squares to zero");
    let alpha = ChainMap::from_fn(l, &complex, |p| {
        let mut m = Matrix::zeros(dim(p), l.dim(p));
        m.set_block(k.dim(p + 1), 0, &Matrix::identity(l.dim(p)));
        m
    })
    .expect("alpha is a chain map");
    let k1 = shift(k, 1);
    let beta = ChainMap::from_fn(&complex, &k1, |p| {
        let mut m = Matrix::zeros(k.dim(p + 1), dim(p));
        m.set_block(0, 0, &Matrix::identity(k.dim(p + 1)).neg());
        m
    })
    .expect("beta is a chain map");
    Cone { complex, alpha, beta }
}

/// `ζ_m: C(f)[m] -> C(f[m])`, `(x, y) ↦ ((-1)^m x, y)`.
pub fn zeta(f: &ChainMap, m: i64) -> ChainMap {
    let src = shift(&cone(f).complex, m);
    let tgt = cone(&f.shift(m)).complex;
    let k = f.source();
    ChainMap::from_fn(&src, &tgt, |p| {
        let kp = k.dim(p + m + 1);
        let n = src.dim(p);
        let mut z = Matrix::identity(n);
        z.set_block(0, 0, &Matrix::scalar(kp, rat(sign(m))));
        z
    })
    .expect("zeta is a chain map")
}

/// Connecting morphism of `0 -> K -f-> L -g-> M -> 0`: for each degree `p`,
/// the matrix `H^p(M) -> H^{p+1}(K)`.
pub fn connecting(f: &ChainMap, g: &ChainMap) -> Result<BTreeMap<i64, Matrix>, HomError> {
    let (k, l, m) = (f.source(), f.target(), g.target());
    if g.source() != l {
        return Err(HomError::NotExact { degree: 0, reason: "maps are not composable".into() });
    }
    let lo = k.lo().min(l.lo()).min(m.lo());
    let hi = k.hi().max(l.hi()).max(m.hi());
    for p in lo..=hi {
        let (fp, gp) = (f.component(p), g.component(p));
        let bad = |reason: &str| HomError::NotExact { degree: p, reason: reason.into() };
        if !gp.mul(&fp).is_zero() {
            return Err(bad("g∘f ≠ 0"));
        }
        if fp.rank() != k.dim(p) {
            return Err(bad("f is not injective"));
        }
        if gp.rank() != m.dim(p) {
            return Err(bad("g is not surjective"));
        }
        if l.dim(p) != k.dim(p) + m.dim(p) {
            return Err(bad("ker g ≠ im f"));
        }
    }
    let mut out = BTreeMap::new();
    for p in lo..=hi {
        let hm = m.cohomology(p);
        let hk = k.cohomology(p + 1);
        let lifted = solve(&g.component(p), &hm.section).expect("g is surjective");
        let dy = l.d(p).mul(&lifted);
        let x = solve(&f.component(p + 1), &dy).expect("dy lies in the image of f");
        out.insert(p, hk.projection.mul(&x));
    }
    Ok(out)
}

/// Increasing filtration stored as explicit subspaces per degree.
/// `W_m = 0` below `lo` and `W_m` is everything from `hi` on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Filtration {
    lo: i64,
    hi: i64,
    steps: BTreeMap<i64, Vec<Subspace>>,
}

impl Filtration {
    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    fn get(&self, k: &Complex, p: i64, m: i64) -> Subspace {
        let n = k.dim(p);
        if m < self.lo {
            Subspace::zero(n)
        } else if m >= self.hi {
            Subspace::full(n)
        } else {
            match self.steps.get(&p) {
                Some(v) => v[(m - self.lo) as usize].clone(),
                None => Subspace::zero(n),
            }
        }
    }
}

/// A complex with an increasing weight filtration `W` and an optional
/// decreasing filtration `F`. `F` is stored as the increasing filtration
/// `m ↦ F^{-m}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilteredComplex {
    complex: Complex,
    w: Filtration,
    f: Option<Filtration>,
}

fn check_filtration(k: &Complex, fil: &Filtration, what: &str) -> Result<(), HomError> {
    for p in k.degrees() {
        let mut prev = Subspace::zero(k.dim(p));
        for m in fil.lo..=fil.hi {
            let cur = fil.get(k, p, m);
            if cur.ambient_dim() != k.dim(p) {
                return Err(HomError::Filtration(format!("{what}: wrong ambient dimension at degree {p}")));
            }
            if !cur.contains(&prev) {
                return Err(HomError::Filtration(format!("{what}: not monotone at degree {p}, index {m}")));
            }
            let image = cur.image_under(&k.d(p));
            if !fil.get(k, p + 1, m).contains(&image) {
                return Err(HomError::Filtration(format!("{what}: d does not preserve index {m} at degree {p}")));
            }
            prev = cur;
        }
    }
    Ok(())
}

fn filtration_from_levels(k: &Complex, levels: &BTreeMap<i64, Vec<i64>>) -> Result<Filtration, HomError> {
    let all: Vec<i64> = levels.values().flatten().copied().collect();
    let lo = all.iter().copied().min().unwrap_or(0);
    let hi = all.iter().copied().max().unwrap_or(0);
    let mut steps = BTreeMap::new();
    for p in k.degrees() {
        let lv = levels.get(&p).cloned().unwrap_or_default();
        if lv.len() != k.dim(p) {
            return Err(HomError::Filtration(format!("degree {p}: {} levels for dimension {}", lv.len(), k.dim(p))));
        }
        let v = (lo..=hi)
            .map(|m| {
                let vs = (0..k.dim(p))
                    .filter(|&i| lv[i] <= m)
                    .map(|i| {
                        let mut e = vec![rat(0); k.dim(p)];
                        e[i] = rat(1);
                        e
                    })
                    .collect();
                Subspace::from_vectors(k.dim(p), vs)
            })
            .collect();
        steps.insert(p, v);
    }
    Ok(Filtration { lo, hi, steps })
}

impl FilteredComplex {
    /// `w[p][m - w_lo]` is `W_m K^p` for `m` in `w_lo..w_lo + len`; the last
    /// step must be all of `K^p`.
    pub fn new(complex: Complex, w_lo: i64, w: BTreeMap<i64, Vec<Subspace>>) -> Result<Self, HomError> {
        let len = w.values().map(Vec::len).max().unwrap_or(1).max(1);
        if w.values().any(|v| v.len() != len) {
            return Err(HomError::Filtration("ragged weight filtration".into()));
        }
        let hi = w_lo + len as i64 - 1;
        for p in complex.degrees() {
            if let Some(v) = w.get(&p) {
                if v.last().map(Subspace::dim) != Some(complex.dim(p)) {
                    return Err(HomError::Filtration(format!("W is not exhaustive at degree {p}")));
                }
            } else if complex.dim(p) > 0 {
                return Err(HomError::Filtration(format!("no weight steps for degree {p}")));
            }
        }
        let fil = Filtration { lo: w_lo, hi, steps: w };
        check_filtration(&complex, &fil, "W")?;
        Ok(FilteredComplex { complex, w: fil, f: None })
    }

    /// `W_m` spanned by the standard basis vectors of weight at most `m`.
    pub fn from_basis_weights(complex: Complex, weights: BTreeMap<i64, Vec<i64>>) -> Result<Self, HomError> {
        let fil = filtration_from_levels(&complex, &weights)?;
        check_filtration(&complex, &fil, "W")?;
        Ok(FilteredComplex { complex, w: fil, f: None })
    }

    /// Adds `F^p` spanned by the standard basis vectors of level at least `p`.
    pub fn with_basis_levels(mut self, levels: BTreeMap<i64, Vec<i64>>) -> Result<Self, HomError> {
        let neg: BTreeMap<i64, Vec<i64>> = levels.into_iter().map(|(p, v)| (p, v.into_iter().map(|x| -x).collect())).collect();
        let fil = filtration_from_levels(&self.complex, &neg)?;
        check_filtration(&self.complex, &fil, "F")?;
        self.f = Some(fil);
        Ok(self)
    }

    pub fn complex(&self) -> &Complex {
        &self.complex
    }

    pub fn weight_range(&self) -> (i64, i64) {
        (self.w.lo, self.w.hi)
    }

    pub fn w(&self, p: i64, m: i64) -> Subspace {
        self.w.get(&self.complex, p, m)
    }

    pub fn f(&self, p: i64, level: i64) -> Option<Subspace> {
        self.f.as_ref().map(|f| f.get(&self.complex, p, -level))
    }

    /// `(K[m], W, F)` with the filtrations carried along unchanged.
    pub fn shift(&self, m: i64) -> FilteredComplex {
        let move_steps = |fil: &Filtration| Filtration {
            lo: fil.lo,
            hi: fil.hi,
            steps: fil.steps.iter().map(|(p, v)| (p - m, v.clone())).collect(),
        };
        FilteredComplex { complex: shift(&self.complex, m), w: move_steps(&self.w), f: self.f.as_ref().map(move_steps) }
    }

    /// `W[k]_m = W_{m-k}` and `F[k]^p = F^{p+k}`.
    pub fn reindex(&self, k: i64) -> FilteredComplex {
        let w = Filtration { lo: self.w.lo + k, hi: self.w.hi + k, steps: self.w.steps.clone() };
        let f = self.f.as_ref().map(|f| Filtration { lo: f.lo + k, hi: f.hi + k, steps: f.steps.clone() });
        FilteredComplex { complex: self.complex.clone(), w, f }
    }

    /// `gr_m^W` with the quotient data of every degree.
    pub fn gr(&self, m: i64) -> GradedPiece {
        let k = &self.complex;
        let quotients: BTreeMap<i64, Quotient> = k
            .degrees()
            .map(|p| (p, quotient(&self.w(p, m), &self.w(p, m - 1)).expect("W is increasing")))
            .collect();
        let q = |p: i64| quotients.get(&p);
        let complex = complex_from_fn(
            k.lo(),
            k.hi(),
            |p| q(p).map_or(0, |x| x.dim),
            |p| q(p + 1).unwrap().projection.mul(&k.d(p)).mul(&q(p).unwrap().section),
        )
        .expect("graded differential squares to zero");
        GradedPiece { weight: m, complex, quotients }
    }

    /// Gysin morphism `γ_m: H^p(gr_m) -> H^{p+1}(gr_{m-1})` for every `p`,
    /// the connecting map of `0 -> gr_{m-1} -> W_m/W_{m-2} -> gr_m -> 0`.
    pub fn gysin(&self, m: i64) -> BTreeMap<i64, Matrix> {
        let top = self.gr(m);
        let bot = self.gr(m - 1);
        let k = &self.complex;
        k.degrees()
            .map(|p| {
                let h_top = top.complex.cohomology(p);
                let h_bot = bot.complex.cohomology(p + 1);
                let lift = top.section(p).mul(&h_top.section);
                let dz = k.d(p).mul(&lift);
                (p, h_bot.projection.mul(&bot.projection(p + 1)).mul(&dz))
            })
            .collect()
    }

    pub fn spectral(&self) -> SpectralSequence {
        spectral(self)
    }
}

#[derive(Clone, Debug)]
pub struct GradedPiece {
    pub weight: i64,
    pub complex: Complex,
    quotients: BTreeMap<i64, Quotient>,
}

impl GradedPiece {
    /// `K^p -> gr^p` (meaningful on `W_m K^p`).
    pub fn projection(&self, p: i64) -> Matrix {
        match self.quotients.get(&p) {
            Some(q) => q.projection.clone(),
            None => Matrix::zeros(0, 0),
        }
    }

    /// `gr^p -> W_m K^p`.
    pub fn section(&self, p: i64) -> Matrix {
        match self.quotients.get(&p) {
            Some(q) => q.section.clone(),
            None => Matrix::zeros(0, 0),
        }
    }
}

/// One cell of a page, as a quotient of subspaces of `K^{p+q}`.
#[derive(Clone, Debug)]
pub struct PageCell {
    pub dim: usize,
    pub projection: Matrix,
    pub section: Matrix,
}

#[derive(Clone, Debug)]
pub struct SpectralPage {
    pub r: usize,
    pub cells: BTreeMap<(i64, i64), PageCell>,
    /// `d_r: E_r^{p,q} -> E_r^{p+r,q-r+1}`, keyed by source.
    pub differentials: BTreeMap<(i64, i64), Matrix>,
}

impl SpectralPage {
    pub fn dim(&self, p: i64, q: i64) -> usize {
        self.cells.get(&(p, q)).map_or(0, |c| c.dim)
    }

    /// Nonzero cell dimensions.
    pub fn dims(&self) -> BTreeMap<(i64, i64), usize> {
        self.cells.iter().filter(|(_, c)| c.dim > 0).map(|(k, c)| (*k, c.dim)).collect()
    }

    pub fn total(&self, n: i64) -> usize {
        self.cells.iter().filter(|((p, q), _)| p + q == n).map(|(_, c)| c.dim).sum()
    }

    pub fn squares_to_zero(&self) -> bool {
        let r = self.r as i64;
        self.differentials.iter().all(|(&(p, q), d)| match self.differentials.get(&(p + r, q - r + 1)) {
            Some(e) => e.mul(d).is_zero(),
            None => true,
        })
    }

    /// Dimension of the cohomology of `(E_r, d_r)` at `(p, q)`.
    pub fn homology_dim(&self, p: i64, q: i64) -> usize {
        let r = self.r as i64;
        let out = self.differentials.get(&(p, q)).map_or(0, Matrix::rank);
        let inc = self.differentials.get(&(p - r, q + r - 1)).map_or(0, Matrix::rank);
        self.dim(p, q) - out - inc
    }
}

/// All pages `E_1, E_2, ...` of the spectral sequence of `(K, W)` up to
/// stabilization, indexed with `F^p = W_{-p}` so that
/// `E_1^{p,q} = H^{p+q}(gr_{-p})`.
#[derive(Clone, Debug)]
pub struct SpectralSequence {
    pub pages: Vec<SpectralPage>,
    pub abutment: BTreeMap<i64, usize>,
}

impl SpectralSequence {
    pub fn page(&self, r: usize) -> &SpectralPage {
        &self.pages[r - 1]
    }

    pub fn infinity(&self) -> &SpectralPage {
        self.pages.last().expect("at least one page")
    }

    /// First `r` from which all differentials vanish.
    pub fn degenerates_at(&self) -> usize {
        self.pages
            .iter()
            .find(|pg| pg.differentials.values().all(Matrix::is_zero))
            .map_or(self.pages.len(), |pg| pg.r)
    }

    /// `Σ_{p+q=n} dim E_2^{p,q} = dim H^n` for every `n`.
    pub fn e2_matches_abutment(&self) -> bool {
        self.pages.len() >= 2 && self.abutment.iter().all(|(&n, &h)| self.page(2).total(n) == h)
    }

    pub fn converges(&self) -> bool {
        self.abutment.iter().all(|(&n, &h)| self.infinity().total(n) == h)
    }
}

pub fn spectral(kf: &FilteredComplex) -> SpectralSequence {
    let k = &kf.complex;
    let (wlo, whi) = kf.weight_range();
    // filtration index p ranges over -whi..=-wlo
    let fil = |n: i64, p: i64| kf.w(n, -p);
    let z = |r: i64, n: i64, p: i64| -> Subspace {
        let f = fil(n, p);
        if r <= 0 {
            return f;
        }
        f.intersection(&fil(n + 1, p + r).preimage(&k.d(n)))
    };
    let last = (whi - wlo + 2).max(1) as usize;
    let keys: Vec<(i64, i64)> =
        k.degrees().flat_map(|n| (-whi..=-wlo + 1).map(move |p| (p, n - p))).collect();
    let mut pages = Vec::new();
    for r in 1..=last as i64 {
        let cells: BTreeMap<(i64, i64), PageCell> = keys
            .par_iter()
            .map(|&(p, q)| {
                let n = p + q;
                let num = z(r, n, p);
                let b1 = z(r - 1, n, p + 1);
                let b2 = z(r - 1, n - 1, p - r + 1).image_under(&k.d(n - 1));
                let den = b1.sum(&b2).intersection(&num);
                let qt = quotient(&num, &den).expect("denominator lies in numerator");
                ((p, q), PageCell { dim: qt.dim, projection: qt.projection, section: qt.section })
            })
            .collect();
        let differentials = cells
            .iter()
            .filter_map(|(&(p, q), c)| {
                let t = cells.get(&(p + r, q - r + 1))?;
                if c.dim == 0 || t.dim == 0 {
                    return None;
                }
                Some(((p, q), t.projection.mul(&k.d(p + q)).mul(&c.section)))
            })
            .collect();
        pages.push(SpectralPage { r: r as usize, cells, differentials });
    }
    let abutment = k.degrees().map(|n| (n, k.betti(n))).collect();
    SpectralSequence { pages, abutment }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id_complex() -> Complex {
        Complex::new(0, vec![1, 1], vec![Matrix::from_i64(1, 1, &[1])]).unwrap()
    }

    #[test]
    fn shift_sign_and_composition() {
        let k = id_complex();
        let k1 = shift(&k, 1);
        assert_eq!(k1.lo(), -1);
        assert_eq!(k1.d(-1), Matrix::from_i64(1, 1, &[-1]));
        assert_eq!(shift(&k, 0), k);
        assert_eq!(shift(&shift(&k, 2), -3), shift(&k, -1));
    }

    #[test]
    fn rejects_non_complex() {
        let one = Matrix::from_i64(1, 1, &[1]);
        assert_eq!(Complex::new(0, vec![1, 1, 1], vec![one.clone(), one]), Err(HomError::NotComplex(0)));
    }

    #[test]
    fn tensor_of_points() {
        let p = Complex::concentrated(0, 1);
        let t = tensor(&p, &p);
        assert_eq!((t.lo(), t.hi(), t.dim(0)), (0, 0, 1));
    }

    #[test]
    fn shift_tensor_iso_signs() {
        let p = Complex::concentrated(0, 1);
        let l = Complex::concentrated(0, 1);
        let iso = shift_tensor_iso(&p, &l, 1, 1);
        // K[1] lives in degree -1, so the single block has p = -1
        assert_eq!(iso.component(-2), Matrix::from_i64(1, 1, &[-1]));
        let iso = shift_tensor_iso(&p, &l, 0, 1);
        assert_eq!(iso.component(-1), Matrix::from_i64(1, 1, &[1]));
    }

    #[test]
    fn cone_of_identity_is_acyclic() {
        let p = Complex::concentrated(0, 1);
        let c = cone(&ChainMap::identity(&p));
        assert_eq!((c.complex.lo(), c.complex.hi()), (-1, 0));
        assert_eq!((c.complex.dim(-1), c.complex.dim(0)), (1, 1));
        assert!(c.complex.is_acyclic());
    }

    #[test]
    fn cone_of_zero_splits() {
        let k = id_complex();
        let l = Complex::concentrated(0, 2);
        let c = cone(&ChainMap::zero(&k, &l));
        for p in -2..=1 {
            assert_eq!(c.complex.betti(p), shift(&k, 1).betti(p) + l.betti(p));
        }
    }

    #[test]
    fn zeta_square_commutes() {
        let k = id_complex();
        let f = ChainMap::identity(&k);
        for m in -2..=2 {
            let z = zeta(&f, m);
            let alpha_shift = cone(&f).alpha.shift(m);
            let fm = f.shift(m);
            let cm = cone(&fm);
            assert_eq!(z.compose(&alpha_shift), cm.alpha);
            let beta_shift = cone(&f).beta.shift(m).scale(sign(m));
            let lhs = cm.beta.compose(&z);
            for p in -4..=3 {
                assert_eq!(lhs.component(p), beta_shift.component(p));
            }
        }
    }

    fn interval_sequence() -> (ChainMap, ChainMap) {
        let k = Complex::new(0, vec![0, 1], vec![Matrix::zeros(1, 0)]).unwrap();
        let l = id_complex();
        let m = Complex::concentrated(0, 1);
        let f = ChainMap::from_fn(&k, &l, |p| if p == 1 { Matrix::identity(1) } else { Matrix::zeros(l.dim(p), k.dim(p)) })
            .unwrap();
        let g = ChainMap::from_fn(&l, &m, |p| if p == 0 { Matrix::identity(1) } else { Matrix::zeros(m.dim(p), l.dim(p)) })
            .unwrap();
        (f, g)
    }

    #[test]
    fn connecting_is_iso_and_shift_rule() {
        let (f, g) = interval_sequence();
        let c = connecting(&f, &g).unwrap();
        assert_eq!(c[&0], Matrix::from_i64(1, 1, &[1]));
        for m in -2..=2 {
            let cm = connecting(&f.shift(m), &g.shift(m)).unwrap();
            assert_eq!(c[&0], cm[&(-m)].scale(&rat(sign(m))));
        }
    }

    #[test]
    fn connecting_of_split_sequence_vanishes() {
        let a = Complex::concentrated(0, 1);
        let b = Complex::concentrated(0, 2);
        let f = ChainMap::from_fn(&a, &b, |_| Matrix::from_i64(2, 1, &[1, 0])).unwrap();
        let g = ChainMap::from_fn(&b, &a, |_| Matrix::from_i64(1, 2, &[0, 1])).unwrap();
        assert!(connecting(&f, &g).unwrap().values().all(Matrix::is_zero));
    }

    #[test]
    fn connecting_rejects_non_exact() {
        let a = Complex::concentrated(0, 1);
        let f = ChainMap::identity(&a);
        assert!(matches!(connecting(&f, &f), Err(HomError::NotExact { .. })));
    }

    fn two_step() -> FilteredComplex {
        let w = BTreeMap::from([(0, vec![1]), (1, vec![0])]);
        FilteredComplex::from_basis_weights(id_complex(), w).unwrap()
    }

    #[test]
    fn two_step_gysin_and_spectral() {
        let kf = two_step();
        let g = kf.gysin(1);
        assert_eq!(g[&0].rank(), 1);
        let ss = kf.spectral();
        assert_eq!(ss.page(1).dims().values().sum::<usize>(), 2);
        assert!(ss.page(2).dims().is_empty());
        assert!(ss.converges());
        assert!(ss.e2_matches_abutment());
    }

    #[test]
    fn pure_weight_has_no_gysin() {
        let w = BTreeMap::from([(0, vec![3]), (1, vec![3])]);
        let kf = FilteredComplex::from_basis_weights(id_complex(), w).unwrap();
        for m in -1..=5 {
            assert!(kf.gysin(m).values().all(Matrix::is_zero));
        }
    }

    #[test]
    fn zero_differential_spectral_is_graded() {
        let k = Complex::new(0, vec![2, 1], vec![Matrix::zeros(1, 2)]).unwrap();
        let w = BTreeMap::from([(0, vec![0, 1]), (1, vec![1])]);
        let kf = FilteredComplex::from_basis_weights(k, w).unwrap();
        let ss = kf.spectral();
        assert_eq!(ss.page(1).dims(), ss.page(2).dims());
        assert_eq!(ss.page(1).dim(0, 0), 1);
        assert_eq!(ss.page(1).dim(-1, 1), 1);
        assert_eq!(ss.page(1).dim(-1, 2), 1);
    }

    #[test]
    fn filtration_must_be_preserved() {
        let w = BTreeMap::from([(0, vec![0]), (1, vec![1])]);
        assert!(FilteredComplex::from_basis_weights(id_complex(), w).is_err());
    }

    #[test]
    fn twisted_differential_gysin() {
        // K = [Q^2 -> Q^2] with weights (1,0) in both degrees and d = 0;
        // f maps the weight-1 vector of degree 0 to the weight-0 vector of degree 1.
        let w = BTreeMap::from([(0, vec![1, 0]), (1, vec![1, 0])]);
        let k0 = Complex::new(0, vec![2, 2], vec![Matrix::zeros(2, 2)]).unwrap();
        let f = Matrix::from_i64(2, 2, &[0, 0, 1, 0]);
        let k1 = Complex::new(0, vec![2, 2], vec![f.clone()]).unwrap();
        let a = FilteredComplex::from_basis_weights(k0, w.clone()).unwrap();
        let b = FilteredComplex::from_basis_weights(k1, w).unwrap();
        let g0 = a.gysin(1)[&0].clone();
        let g1 = b.gysin(1)[&0].clone();
        // gr_1(f) in the natural bases: gr_1^0 = span(e0) -> gr_0^1 = span(e1)
        let grf = a.gr(0).projection(1).mul(&f).mul(&a.gr(1).section(0));
        let ha = a.gr(1).complex.cohomology(0);
        let hb = a.gr(0).complex.cohomology(1);
        let via = hb.projection.mul(&grf).mul(&ha.section);
        assert_eq!(g1, g0.add(&via));
    }
}
