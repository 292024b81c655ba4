//! Index combinatorics and Čech complexes of co-cubical complexes.
//!
//! Two Čech models are provided. The ordered model is indexed by injective
//! tuples and carries the cup-type product `τ`. The alternating model is
//! indexed by subsets `A` with values `ε(A) ⊗ K(A)`; its basis vector
//! `e_A ⊗ x` uses the generator `e_A = e_{a_0} ∧ ... ∧ e_{a_k}` for the
//! elements of `A` in label order. No sign depends on that order beyond
//! the choice of generator.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{kron, rat, ratio, Matrix, Subspace};
use crate::homalg::{complex_from_fn, sign, tensor, tensor_blocks, tensor_map, ChainMap, Complex, FilteredComplex, HomError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CubicalError {
    #[error("index {index} out of range for a tuple of length {len}")]
    OutOfRange { index: usize, len: usize },
    #[error("repeated label in {0}")]
    Repeated(String),
    #[error("sets are not disjoint")]
    NotDisjoint,
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("index set is empty")]
    Empty,
    #[error("functoriality fails on {0}")]
    NotFunctorial(String),
    #[error("missing data for {0}")]
    Missing(String),
    #[error("the product is only defined on the ordered model")]
    ModelMismatch,
    #[error(transparent)]
    Hom(#[from] HomError),
}

/// A finite subset of the index set, as a bit mask over label positions.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Subset(pub u64);

impl Subset {
    pub fn empty() -> Self {
        Subset(0)
    }

    pub fn singleton(i: usize) -> Self {
        Subset(1 << i)
    }

    pub fn from_indices(ix: &[usize]) -> Self {
        Subset(ix.iter().fold(0, |m, &i| m | (1 << i)))
    }

    pub fn full(n: usize) -> Self {
        Subset(if n == 64 { u64::MAX } else { (1u64 << n) - 1 })
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        Subset(self.0 | 1 << i)
    }

    pub fn without(self, i: usize) -> Self {
        Subset(self.0 & !(1 << i))
    }

    pub fn union(self, o: Subset) -> Self {
        Subset(self.0 | o.0)
    }

    pub fn minus(self, o: Subset) -> Self {
        Subset(self.0 & !o.0)
    }

    pub fn is_subset_of(self, o: Subset) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_disjoint(self, o: Subset) -> bool {
        self.0 & o.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }

    pub fn elements(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Number of elements strictly below `i`.
    pub fn rank_below(self, i: usize) -> usize {
        (self.0 & ((1u64 << i) - 1)).count_ones() as usize
    }

    /// All subsets, including the empty set.
    pub fn subsets(self) -> impl Iterator<Item = Subset> {
        let full = self.0;
        let mut cur = Some(0u64);
        std::iter::from_fn(move || {
            let c = cur?;
            cur = if c == full { None } else { Some((c.wrapping_sub(full)) & full) };
            Some(Subset(c))
        })
    }
}

impl Ord for Subset {
    fn cmp(&self, o: &Self) -> Ordering {
        self.len().cmp(&o.len()).then_with(|| self.elements().cmp(&o.elements()))
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.elements())
    }
}

/// `e_ν ∧ e_A = wedge_sign(ν, A) · e_{A ∪ ν}` for `ν ∉ A`.
pub fn wedge_sign(nu: usize, a: Subset) -> i64 {
    sign(a.rank_below(nu) as i64)
}

/// Contraction `ι_ν e_A = contract_sign(ν, A) · e_{A ∖ ν}` for `ν ∈ A`; the
/// inverse of `e_ν ∧`.
pub fn contract_sign(nu: usize, a: Subset) -> i64 {
    sign(a.rank_below(nu) as i64)
}

/// Distinct labels of the components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSet {
    labels: Vec<String>,
}

impl IndexSet {
    pub fn new(labels: Vec<String>) -> Result<Self, CubicalError> {
        if labels.is_empty() {
            return Err(CubicalError::Empty);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(CubicalError::DuplicateLabel(l.clone()));
            }
        }
        assert!(labels.len() <= 64, "at most 64 labels");
        Ok(IndexSet { labels })
    }

    pub fn numbered(n: usize) -> Self {
        IndexSet::new((0..n).map(|i| i.to_string()).collect()).expect("distinct labels")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn full(&self) -> Subset {
        Subset::full(self.len())
    }

    /// Comma-joined labels in index-set order.
    pub fn key(&self, s: Subset) -> String {
        s.iter().map(|i| self.labels[i].as_str()).collect::<Vec<_>>().join(",")
    }

    pub fn parse_key(&self, key: &str) -> Option<Subset> {
        let mut s = Subset::empty();
        for part in key.split(',') {
            let i = self.position(part.trim())?;
            if s.contains(i) {
                return None;
            }
            s = s.with(i);
        }
        Some(s)
    }
}

/// `λ = (λ(0), ..., λ(k))` over label positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tuple(pub Vec<usize>);

impl Tuple {
    /// `d(λ) = k`.
    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn underlying(&self) -> Subset {
        Subset::from_indices(&self.0)
    }

    pub fn is_injective(&self) -> bool {
        self.underlying().len() == self.0.len()
    }

    /// `λ_i`, the tuple with entry `i` removed.
    pub fn drop(&self, i: usize) -> Result<Tuple, CubicalError> {
        self.check(i)?;
        let mut v = self.0.clone();
        v.remove(i);
        Ok(Tuple(v))
    }

    /// `h_i(λ) = (λ(0), ..., λ(i))`.
    pub fn head(&self, i: usize) -> Result<Tuple, CubicalError> {
        self.check(i)?;
        Ok(Tuple(self.0[..=i].to_vec()))
    }

    /// `t_i(λ) = (λ(i), ..., λ(k))`.
    pub fn tail(&self, i: usize) -> Result<Tuple, CubicalError> {
        self.check(i)?;
        Ok(Tuple(self.0[i..].to_vec()))
    }

    fn check(&self, i: usize) -> Result<(), CubicalError> {
        if i >= self.0.len() {
            Err(CubicalError::OutOfRange { index: i, len: self.0.len() })
        } else {
            Ok(())
        }
    }

    /// `e_λ = orientation_sign(λ) · e_{λ̲}`.
    pub fn orientation_sign(&self) -> Result<i64, CubicalError> {
        if !self.is_injective() {
            return Err(CubicalError::Repeated(format!("{:?}", self.0)));
        }
        let inv = (0..self.0.len())
            .flat_map(|i| (i + 1..self.0.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| self.0[i] > self.0[j])
            .count();
        Ok(sign(inv as i64))
    }
}

/// `χ(A, B)(e_A ⊗ e_B) = e_A ∧ e_B = s · e_{A ∪ B}`; returns `(A ∪ B, s)`.
pub fn chi(a: Subset, b: Subset) -> Result<(Subset, i64), CubicalError> {
    if !a.is_disjoint(b) {
        return Err(CubicalError::NotDisjoint);
    }
    let mut v = a.elements();
    v.extend(b.elements());
    Ok((a.union(b), Tuple(v).orientation_sign()?))
}

/// `ϑ(σ)(e_λ ⊗ e_λ)` for any ordering `λ` of `σ`; always 1.
pub fn theta(lambda: &Tuple) -> Result<i64, CubicalError> {
    let s = lambda.orientation_sign()?;
    Ok(s * s)
}

/// Injective tuples of length `k + 1` with underlying set in `support`.
pub fn injective_tuples(n: usize, k: usize, support: &dyn Fn(Subset) -> bool) -> Vec<Tuple> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Tuple>, support: &dyn Fn(Subset) -> bool) {
        if cur.len() == len {
            out.push(Tuple(cur.clone()));
            return;
        }
        for i in 0..n {
            if !cur.contains(&i) {
                cur.push(i);
                if support(Subset::from_indices(cur)) {
                    rec(n, len, cur, out, support);
                }
                cur.pop();
            }
        }
    }
    rec(n, k + 1, &mut cur, &mut out, support);
    out
}

/// Weights of the standard basis vectors of a complex, per degree.
pub type BasisWeights = BTreeMap<i64, Vec<i64>>;

/// A functor from nonempty subsets to complexes. Objects outside the
/// support are zero; the support is closed under taking nonempty subsets.
/// Maps are stored for codimension one inclusions `σ ⊂ σ ∪ ν`.
#[derive(Clone, Debug)]
pub struct CoCubical {
    index: IndexSet,
    objects: BTreeMap<Subset, Complex>,
    weights: Option<BTreeMap<Subset, BasisWeights>>,
    edges: BTreeMap<(Subset, usize), ChainMap>,
}

impl CoCubical {
    pub fn new(
        index: IndexSet,
        objects: BTreeMap<Subset, Complex>,
        edges: BTreeMap<(Subset, usize), ChainMap>,
        weights: Option<BTreeMap<Subset, BasisWeights>>,
    ) -> Result<Self, CubicalError> {
        for &s in objects.keys() {
            for i in s.iter() {
                let t = s.without(i);
                if !t.is_empty() && !objects.contains_key(&t) {
                    return Err(CubicalError::Missing(format!("face {:?} of {:?}", t, s)));
                }
                if !t.is_empty() && !edges.contains_key(&(t, i)) {
                    return Err(CubicalError::Missing(format!("map {:?} -> {:?}", t, s)));
                }
            }
        }
        let k = CoCubical { index, objects, weights, edges };
        for (&(s, i), f) in &k.edges {
            if f.source() != &k.object(s) || f.target() != &k.object(s.with(i)) {
                return Err(CubicalError::Missing(format!("map {:?} + {} has wrong ends", s, i)));
            }
        }
        for &s in k.objects.keys() {
            let free: Vec<usize> = (0..k.index.len()).filter(|&i| !s.contains(i)).collect();
            for (x, &i) in free.iter().enumerate() {
                for &j in &free[x + 1..] {
                    if !k.objects.contains_key(&s.with(i).with(j)) {
                        continue;
                    }
                    let a = k.edge(s.with(i), j).compose(&k.edge(s, i));
                    let b = k.edge(s.with(j), i).compose(&k.edge(s, j));
                    if a != b {
                        return Err(CubicalError::NotFunctorial(format!("{:?} + {} + {}", s, i, j)));
                    }
                }
            }
        }
        if let Some(w) = &k.weights {
            for (&s, c) in &k.objects {
                let ws = w.get(&s).ok_or_else(|| CubicalError::Missing(format!("weights of {:?}", s)))?;
                FilteredComplex::from_basis_weights(c.clone(), ws.clone())?;
            }
        }
        Ok(k)
    }

    /// `K(σ) = Q^dim` in degree 0 on every nonempty subset, identity maps.
    pub fn constant(index: IndexSet, dim: usize) -> Self {
        let full = index.full();
        let objects: BTreeMap<Subset, Complex> =
            full.subsets().filter(|s| !s.is_empty()).map(|s| (s, Complex::concentrated(0, dim))).collect();
        let c = Complex::concentrated(0, dim);
        let edges = objects
            .keys()
            .flat_map(|&s| full.minus(s).iter().map(move |i| (s, i)))
            .map(|(s, i)| ((s, i), ChainMap::identity(&c)))
            .collect();
        CoCubical::new(index, objects, edges, None).expect("constant functor")
    }

    pub fn index(&self) -> &IndexSet {
        &self.index
    }

    pub fn support(&self) -> impl Iterator<Item = Subset> + '_ {
        self.objects.keys().copied()
    }

    pub fn in_support(&self, s: Subset) -> bool {
        self.objects.contains_key(&s)
    }

    pub fn object(&self, s: Subset) -> Complex {
        self.objects.get(&s).cloned().unwrap_or_else(Complex::zero)
    }

    pub fn weights(&self, s: Subset) -> Option<&BasisWeights> {
        self.weights.as_ref().and_then(|w| w.get(&s))
    }

    pub fn is_filtered(&self) -> bool {
        self.weights.is_some()
    }

    fn edge(&self, s: Subset, i: usize) -> ChainMap {
        match self.edges.get(&(s, i)) {
            Some(f) => f.clone(),
            None => ChainMap::zero(&self.object(s), &self.object(s.with(i))),
        }
    }

    /// `K(ι_{τ,σ})` for `σ ⊆ τ`, composed along increasing labels.
    pub fn map(&self, sigma: Subset, tau: Subset) -> ChainMap {
        assert!(sigma.is_subset_of(tau), "map along an inclusion");
        let mut f = ChainMap::identity(&self.object(sigma));
        let mut cur = sigma;
        for i in tau.minus(sigma).iter() {
            f = self.edge(cur, i).compose(&f);
            cur = cur.with(i);
        }
        f
    }

    /// `(K ⊗ L)(σ) = K(σ) ⊗ L(σ)`; weights add.
    pub fn tensor(&self, other: &CoCubical) -> CoCubical {
        assert_eq!(self.index, other.index, "same index set");
        let objects: BTreeMap<Subset, Complex> = self
            .objects
            .iter()
            .filter(|(s, _)| other.in_support(**s))
            .map(|(&s, k)| (s, tensor(k, &other.object(s))))
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|((s, i), _)| objects.contains_key(&s.with(*i)))
            .map(|(&(s, i), f)| ((s, i), tensor_map(f, &other.edge(s, i))))
            .collect();
        let weights = match (&self.weights, &other.weights) {
            (Some(a), Some(b)) => Some(
                objects
                    .keys()
                    .map(|&s| (s, tensor_weights(&self.object(s), &a[&s], &other.object(s), &b[&s])))
                    .collect(),
            ),
            _ => None,
        };
        CoCubical::new(self.index.clone(), objects, edges, weights).expect("tensor of co-cubical complexes")
    }
}

/// Basis weights of `K ⊗ L` in the block layout of `homalg::tensor`.
pub fn tensor_weights(k: &Complex, wk: &BasisWeights, l: &Complex, wl: &BasisWeights) -> BasisWeights {
    let t = tensor(k, l);
    t.degrees()
        .map(|n| {
            let mut v = vec![0; t.dim(n)];
            for (p, off) in tensor_blocks(k, l, n) {
                let (a, b) = (&wk[&p], &wl[&(n - p)]);
                for (i, x) in a.iter().enumerate() {
                    for (j, y) in b.iter().enumerate() {
                        v[off + i * b.len() + j] = x + y;
                    }
                }
            }
            (n, v)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ordered,
    Alternating,
}

/// Cell key: a tuple in the ordered model, a subset in the alternating one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellKey {
    Tuple(Tuple),
    Set(Subset),
}

impl CellKey {
    pub fn underlying(&self) -> Subset {
        match self {
            CellKey::Tuple(t) => t.underlying(),
            CellKey::Set(s) => *s,
        }
    }
}

/// A block `K(λ̲)^l` in cell `k` of total degree `k + l`.
#[derive(Clone, Debug)]
pub struct CechBlock {
    pub k: usize,
    pub key: CellKey,
    pub l: i64,
    pub offset: usize,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct CechComplex {
    pub model: Model,
    pub complex: Complex,
    /// Blocks of each total degree, ordered by `(k, key)`.
    pub blocks: BTreeMap<i64, Vec<CechBlock>>,
    /// `W_m` on each block is `W_m K(λ̲)`.
    pub w: Option<FilteredComplex>,
    /// `(δW)_m` on cell `k` is `W_{m+k} K(λ̲)`.
    pub delta_w: Option<FilteredComplex>,
}

impl CechComplex {
    pub fn block(&self, n: i64, key: &CellKey) -> Option<&CechBlock> {
        self.blocks.get(&n)?.iter().find(|b| &b.key == key)
    }
}

fn cells(k: &CoCubical, model: Model) -> Vec<(usize, CellKey)> {
    let n = k.index.len();
    let support = |s: Subset| k.in_support(s);
    let max = k.support().map(Subset::len).max().unwrap_or(0);
    let mut out = Vec::new();
    for c in 0..max {
        match model {
            Model::Ordered => {
                out.extend(injective_tuples(n, c, &support).into_iter().map(|t| (c, CellKey::Tuple(t))));
            }
            Model::Alternating => {
                let mut sets: Vec<Subset> = k.support().filter(|s| s.len() == c + 1).collect();
                sets.sort();
                out.extend(sets.into_iter().map(|s| (c, CellKey::Set(s))));
            }
        }
    }
    out
}

/// Čech complex with `d = δ + (-1)^k ∂` on cell `k`.
pub fn cech(k: &CoCubical, model: Model) -> CechComplex {
    let cells = cells(k, model);
    let lo = k.objects.values().filter(|c| c.total_dim() > 0).map(Complex::lo).min().unwrap_or(0);
    let hi = cells
        .iter()
        .map(|(c, key)| *c as i64 + k.object(key.underlying()).hi())
        .max()
        .unwrap_or(lo - 1);
    let mut blocks: BTreeMap<i64, Vec<CechBlock>> = BTreeMap::new();
    for n in lo..=hi {
        let mut off = 0;
        let mut v = Vec::new();
        for (c, key) in &cells {
            let l = n - *c as i64;
            let dim = k.object(key.underlying()).dim(l);
            if dim > 0 {
                v.push(CechBlock { k: *c, key: key.clone(), l, offset: off, dim });
                off += dim;
            }
        }
        blocks.insert(n, v);
    }
    let total = |n: i64| blocks.get(&n).map_or(0, |v| v.iter().map(|b| b.dim).sum());
    let find = |n: i64, key: &CellKey| blocks.get(&n).and_then(|v| v.iter().find(|b| &b.key == key).cloned());
    let complex = complex_from_fn(lo, hi, total, |n| {
        let mut d = Matrix::zeros(total(n + 1), total(n));
        for b in blocks.get(&n).into_iter().flatten() {
            let s = b.key.underlying();
            let obj = k.object(s);
            if let Some(t) = find(n + 1, &b.key) {
                d.set_block(t.offset, b.offset, &obj.d(b.l).scale(&rat(sign(b.k as i64))));
            }
            match &b.key {
                CellKey::Tuple(lam) => {
                    for nu in 0..k.index.len() {
                        if s.contains(nu) || !k.in_support(s.with(nu)) {
                            continue;
                        }
                        // every position i at which ν can be inserted gives λ' with λ'_i = λ
                        for i in 0..=lam.0.len() {
                            let mut v = lam.0.clone();
                            v.insert(i, nu);
                            let key = CellKey::Tuple(Tuple(v));
                            if let Some(t) = find(n + 1, &key) {
                                let f = k.map(s, s.with(nu)).component(b.l).scale(&rat(sign(i as i64)));
                                d.set_block(t.offset, b.offset, &f);
                            }
                        }
                    }
                }
                CellKey::Set(a) => {
                    for nu in 0..k.index.len() {
                        if a.contains(nu) {
                            continue;
                        }
                        if let Some(t) = find(n + 1, &CellKey::Set(a.with(nu))) {
                            let f = k.map(*a, a.with(nu)).component(b.l).scale(&rat(wedge_sign(nu, *a)));
                            d.set_block(t.offset, b.offset, &f);
                        }
                    }
                }
            }
        }
        d
    })
    .expect("Čech differential squares to zero");
    let (w, delta_w) = if k.is_filtered() {
        let levels = |shift: bool| block_weights(k, &complex, &blocks, shift);
        let w = FilteredComplex::from_basis_weights(complex.clone(), levels(false)).expect("W is preserved");
        let dw = FilteredComplex::from_basis_weights(complex.clone(), levels(true)).expect("δW is preserved");
        (Some(w), Some(dw))
    } else {
        (None, None)
    };
    CechComplex { model, complex, blocks, w, delta_w }
}

/// The product `τ = Σ (-1)^{(p-k)l} τ_{k,l}: C(K) ⊗ C(L) -> C(K ⊗ L)` on the
/// ordered model.
pub fn tau(k: &CoCubical, l: &CoCubical) -> Result<ChainMap, CubicalError> {
    let ck = cech(k, Model::Ordered);
    let cl = cech(l, Model::Ordered);
    let kl = k.tensor(l);
    let ckl = cech(&kl, Model::Ordered);
    let src = tensor(&ck.complex, &cl.complex);
    let tgt = ckl.complex.clone();
    let map = ChainMap::from_fn(&src, &tgt, |n| {
        let mut m = Matrix::zeros(tgt.dim(n), src.dim(n));
        for (p, off) in tensor_blocks(&ck.complex, &cl.complex, n) {
            let q = n - p;
            let wq = cl.complex.dim(q);
            for bf in ck.blocks.get(&p).into_iter().flatten() {
                for bg in cl.blocks.get(&q).into_iter().flatten() {
                    let (CellKey::Tuple(lf), CellKey::Tuple(lg)) = (&bf.key, &bg.key) else { continue };
                    if lf.0.last() != lg.0.first() {
                        continue;
                    }
                    let mut v = lf.0.clone();
                    v.extend_from_slice(&lg.0[1..]);
                    let lam = Tuple(v);
                    if !lam.is_injective() {
                        continue;
                    }
                    let s = lam.underlying();
                    let Some(bt) = ckl.block(n, &CellKey::Tuple(lam.clone())) else { continue };
                    let fk = k.map(lf.underlying(), s).component(bf.l);
                    let gl = l.map(lg.underlying(), s).component(bg.l);
                    let blk = kron(&fk, &gl).scale(&rat(sign(bf.l * bg.k as i64)));
                    // position of K(λ̲)^{bf.l} ⊗ L(λ̲)^{bg.l} inside (K ⊗ L)(λ̲)^{bt.l}
                    let inner = tensor_blocks(&k.object(s), &l.object(s), bt.l)
                        .into_iter()
                        .find(|b| b.0 == bf.l)
                        .map(|b| b.1)
                        .expect("tensor block present");
                    for i in 0..bf.dim {
                        for j in 0..bg.dim {
                            let col = off + (bf.offset + i) * wq + bg.offset + j;
                            for r in 0..blk.rows() {
                                let x = blk.get(r, i * bg.dim + j);
                                if *x != rat(0) {
                                    m.add_at(bt.offset + inner + r, col, x);
                                }
                            }
                        }
                    }
                }
            }
        }
        m
    })?;
    Ok(map)
}

/// Antisymmetrization `f_A = (1/(k+1)!) Σ_λ sign(λ) f_λ` from the ordered
/// to the alternating model.
pub fn antisymmetrize(k: &CoCubical) -> ChainMap {
    let ord = cech(k, Model::Ordered);
    let alt = cech(k, Model::Alternating);
    ChainMap::from_fn(&ord.complex, &alt.complex, |n| {
        let mut m = Matrix::zeros(alt.complex.dim(n), ord.complex.dim(n));
        for b in ord.blocks.get(&n).into_iter().flatten() {
            let CellKey::Tuple(t) = &b.key else { continue };
            let a = alt.block(n, &CellKey::Set(t.underlying())).expect("alternating cell");
            let fact: i64 = (1..=t.0.len() as i64).product();
            let c = ratio(t.orientation_sign().expect("injective"), fact);
            for i in 0..b.dim {
                m.set(a.offset + i, b.offset + i, c.clone());
            }
        }
        m
    })
    .expect("antisymmetrization is a chain map")
}

/// Associativity isomorphism `(A ⊗ B) ⊗ C -> A ⊗ (B ⊗ C)`; no signs.
pub fn associator(a: &Complex, b: &Complex, c: &Complex) -> ChainMap {
    let ab = tensor(a, b);
    let bc = tensor(b, c);
    let src = tensor(&ab, c);
    let tgt = tensor(a, &bc);
    ChainMap::from_fn(&src, &tgt, |n| {
        let mut m = Matrix::zeros(tgt.dim(n), src.dim(n));
        for (s, o1) in tensor_blocks(&ab, c, n) {
            let wc = c.dim(n - s);
            for (p, o2) in tensor_blocks(a, b, s) {
                let q = s - p;
                let (da, db) = (a.dim(p), b.dim(q));
                let (t_off, _) = tensor_blocks(a, &bc, n).into_iter().find(|x| x.0 == p).map(|x| (x.1, ())).unwrap();
                let inner = tensor_blocks(b, c, n - p).into_iter().find(|x| x.0 == q).unwrap().1;
                let wbc = bc.dim(n - p);
                for i in 0..da {
                    for j in 0..db {
                        for r in 0..wc {
                            let col = o1 + (o2 + i * db + j) * wc + r;
                            let row = t_off + i * wbc + inner + j * wc + r;
                            m.set(row, col, rat(1));
                        }
                    }
                }
            }
        }
        m
    })
    .expect("associator is a chain map")
}

/// Per-cell associator `C((K ⊗ L) ⊗ M) -> C(K ⊗ (L ⊗ M))` on the ordered model.
pub fn cech_associator(k: &CoCubical, l: &CoCubical, m: &CoCubical) -> ChainMap {
    let left = cech(&k.tensor(l).tensor(m), Model::Ordered);
    let right = cech(&k.tensor(&l.tensor(m)), Model::Ordered);
    ChainMap::from_fn(&left.complex, &right.complex, |n| {
        let mut out = Matrix::zeros(right.complex.dim(n), left.complex.dim(n));
        for b in left.blocks.get(&n).into_iter().flatten() {
            let s = b.key.underlying();
            let t = right.block(n, &b.key).expect("same cells");
            let a = associator(&k.object(s), &l.object(s), &m.object(s)).component(b.l);
            out.set_block(t.offset, b.offset, &a);
        }
        out
    })
    .expect("cellwise associator is a chain map")
}

/// Subspace of `(X ⊗ Y)^n` spanned by basis pairs with weights at most `a`
/// and `b`.
pub fn product_filtration_piece(
    x: &Complex,
    xw: &BasisWeights,
    y: &Complex,
    yw: &BasisWeights,
    n: i64,
    a: i64,
    b: i64,
) -> Subspace {
    let t = tensor(x, y);
    let mut vs = Vec::new();
    for (p, off) in tensor_blocks(x, y, n) {
        let (wa, wb) = (&xw[&p], &yw[&(n - p)]);
        for (i, u) in wa.iter().enumerate() {
            for (j, v) in wb.iter().enumerate() {
                if *u <= a && *v <= b {
                    let mut e = vec![rat(0); t.dim(n)];
                    e[off + i * wb.len() + j] = rat(1);
                    vs.push(e);
                }
            }
        }
    }
    Subspace::from_vectors(t.dim(n), vs)
}

/// Basis weights of a Čech complex: `W` or, with `delta`, `δW`.
pub fn cech_basis_weights(k: &CoCubical, c: &CechComplex, delta: bool) -> BasisWeights {
    block_weights(k, &c.complex, &c.blocks, delta)
}

fn block_weights(k: &CoCubical, complex: &Complex, blocks: &BTreeMap<i64, Vec<CechBlock>>, delta: bool) -> BasisWeights {
    complex
        .degrees()
        .map(|n| {
            let mut v = Vec::new();
            for b in blocks.get(&n).into_iter().flatten() {
                let ws = &k.weights(b.key.underlying()).expect("filtered")[&b.l];
                v.extend(ws.iter().map(|&x| if delta { x - b.k as i64 } else { x }));
            }
            (n, v)
        })
        .collect()
}
