//! Weight spectral sequence pages of the complexes `A` and `K` built from
//! strata data, the operators `N` and `l`, the comparison `φ`, the trace,
//! the pairing and the polarization checks.
//!
//! Cells are indexed by `(m, q)`: the cell `E_1^{-m, q+m}` contributes to
//! `gr^W_{q+m} H^q`. `d1` maps `(m, q)` to `(m - 1, q + 1)`, `N` maps
//! `(m, q)` to `(m - 2, q)` and `l` maps `(m, q)` to `(m, q + 2)`.
//!
//! A summand of the `A` page is `(r, σ)` with `|σ| = m + 2r + 1`,
//! `r ≥ max(0, -m)`, carrying `H^{q-m-2r}(Y_σ)` with Tate twist `m + r`.
//! A summand of the `K` page is `(A, r, σ')` with `|σ'| = m + k - 2r`,
//! `|A| = k + 1`, `r ≥ 0`, carrying `H^{q-m-2k+2r}(Y_{A∪σ'})` with twist
//! `m + k - r`; its `u`-direction is unbounded, so the page is built on a
//! window of `m`.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cubical::{chi, contract_sign, wedge_sign, Subset};
use crate::exactlin::{format_rational, image, is_positive_definite, kernel, quotient, rat, Matrix, Rational, Subspace};
use crate::homalg::sign;
use crate::strata::{validate, Check, StrataDatum, StrataError, ValidationReport};

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("strata datum failed validation: {}", failed_names(.0))]
    Invalid(ValidationReport),
    #[error(transparent)]
    Strata(#[from] StrataError),
    #[error("sign ledger violation: {0}")]
    Ledger(String),
    #[error("polarization needs a Hodge-Tate datum")]
    NotHodgeTate,
}

fn failed_names(r: &ValidationReport) -> String {
    r.failures().iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")
}

/// `ε(a) = (-1)^{a(a-1)/2}`.
pub fn epsilon(a: i64) -> i64 {
    sign(a * (a - 1) / 2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    A,
    K,
}

/// One direct summand of an `E_1` cell. `cech` is empty on the `A` page.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summand {
    #[serde(skip)]
    pub cech: Subset,
    pub r: i64,
    #[serde(skip)]
    pub sigma: Subset,
    pub degree: usize,
    pub twist: i64,
    pub offset: usize,
    pub dim: usize,
}

type SummandKey = (Subset, i64, Subset);

impl Summand {
    pub fn stratum(&self) -> Subset {
        self.cech.union(self.sigma)
    }

    pub fn key(&self) -> SummandKey {
        (self.cech, self.r, self.sigma)
    }

    /// Hodge level `p` of the type `(p, p)`; `None` for odd degree.
    pub fn level(&self) -> Option<i64> {
        (self.degree % 2 == 0).then(|| self.degree as i64 / 2 + self.twist)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct E1Cell {
    pub m: i64,
    pub q: i64,
    pub summands: Vec<Summand>,
    pub dim: usize,
    #[serde(skip)]
    index: HashMap<SummandKey, usize>,
}

impl E1Cell {
    fn new(m: i64, q: i64, mut summands: Vec<Summand>) -> Self {
        summands.sort_by(|a, b| (a.cech, a.r, a.sigma).cmp(&(b.cech, b.r, b.sigma)));
        let mut off = 0;
        for s in &mut summands {
            s.offset = off;
            off += s.dim;
        }
        let index = summands.iter().enumerate().map(|(i, s)| (s.key(), i)).collect();
        E1Cell { m, q, summands, dim: off, index }
    }

    pub fn find(&self, key: &SummandKey) -> Option<&Summand> {
        self.index.get(key).map(|&i| &self.summands[i])
    }
}

/// Range of cells present on a page; `E_2` is computed on the cells whose
/// neighbours under `d1` are present.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub m_lo: i64,
    pub m_hi: i64,
    pub q_lo: i64,
    pub q_hi: i64,
}

impl Window {
    fn contains(&self, m: i64, q: i64) -> bool {
        (self.m_lo..=self.m_hi).contains(&m) && (self.q_lo..=self.q_hi).contains(&q)
    }
}

#[derive(Clone, Debug)]
pub struct E1Page {
    pub variant: Variant,
    pub n: usize,
    pub window: Window,
    /// Whether the page is complete rather than truncated in `m`.
    pub complete: bool,
    pub cells: BTreeMap<(i64, i64), E1Cell>,
    /// `(m, q) -> (m - 1, q + 1)`.
    pub d1: BTreeMap<(i64, i64), Matrix>,
    /// `(m, q) -> (m - 2, q)`.
    pub n_op: BTreeMap<(i64, i64), Matrix>,
    /// `(m, q) -> (m, q + 2)`.
    pub l_op: BTreeMap<(i64, i64), Matrix>,
}

type Component = (SummandKey, Matrix);

impl E1Page {
    pub fn dim(&self, m: i64, q: i64) -> usize {
        self.cells.get(&(m, q)).map_or(0, |c| c.dim)
    }

    pub fn dims(&self) -> BTreeMap<(i64, i64), usize> {
        self.cells.iter().filter(|(_, c)| c.dim > 0).map(|(&k, c)| (k, c.dim)).collect()
    }

    /// Whether `E_2` at `(m, q)` is determined by the cells present.
    pub fn reliable(&self, m: i64, q: i64) -> bool {
        self.complete || (self.window.contains(m + 1, q - 1) && self.window.contains(m - 1, q + 1))
    }

    fn assemble(
        &self,
        src: (i64, i64),
        tgt: (i64, i64),
        f: &(dyn Fn(&Summand) -> Vec<Component> + Sync),
    ) -> Option<Matrix> {
        let s = self.cells.get(&src)?;
        let t = self.cells.get(&tgt)?;
        let mut m = Matrix::zeros(t.dim, s.dim);
        for x in &s.summands {
            for (key, blk) in f(x) {
                if let Some(y) = t.find(&key) {
                    for i in 0..blk.rows() {
                        for j in 0..blk.cols() {
                            let v = blk.get(i, j);
                            if !v.is_zero() {
                                m.add_at(y.offset + i, x.offset + j, v);
                            }
                        }
                    }
                }
            }
        }
        Some(m)
    }

    fn assemble_all(
        &mut self,
        step: (i64, i64),
        f: &(dyn Fn(&Summand) -> Vec<Component> + Sync),
    ) -> BTreeMap<(i64, i64), Matrix> {
        let keys: Vec<(i64, i64)> = self.cells.keys().copied().collect();
        keys.par_iter()
            .filter_map(|&(m, q)| {
                let t = (m + step.0, q + step.1);
                self.assemble((m, q), t, f).map(|mat| ((m, q), mat))
            })
            .collect()
    }

    fn d1_at(&self, m: i64, q: i64) -> Option<&Matrix> {
        self.d1.get(&(m, q))
    }

    /// `d1 ∘ d1 = 0` on every cell; returns the first offending cell.
    pub fn d1_squared_witness(&self) -> Option<String> {
        self.d1.iter().find_map(|(&(m, q), d)| {
            let e = self.d1.get(&(m - 1, q + 1))?;
            (!e.mul(d).is_zero()).then(|| format!("{:?} page, cell (m={m}, q={q})", self.variant))
        })
    }

    /// Commutator witness of an operator with `d1`; `step` is the operator's
    /// cell displacement.
    pub fn commutes_with_d1(&self, op: &BTreeMap<(i64, i64), Matrix>, step: (i64, i64)) -> Option<String> {
        op.iter().find_map(|(&(m, q), t)| {
            let (d_src, d_tgt) = (self.d1.get(&(m, q))?, self.d1.get(&(m + step.0, q + step.1))?);
            let t_next = op.get(&(m - 1, q + 1))?;
            (d_tgt.mul(t) != t_next.mul(d_src)).then(|| format!("cell (m={m}, q={q})"))
        })
    }
}

fn restrict_block(s: &StrataDatum, from: Subset, to: Subset, j: usize) -> Matrix {
    s.restrict(from, to, j)
}

/// Builds the `A` page; the datum must pass validation.
pub fn build_e1_a(s: &StrataDatum) -> Result<E1Page, LimitError> {
    require_valid(s)?;
    Ok(build_e1_a_unchecked(s))
}

fn require_valid(s: &StrataDatum) -> Result<(), LimitError> {
    let r = validate(s)?;
    if r.passed() {
        Ok(())
    } else {
        Err(LimitError::Invalid(r))
    }
}

/// The `A` page without validating the datum first, for diagnostics on
/// corrupted input.
pub fn build_e1_a_unchecked(s: &StrataDatum) -> E1Page {
    let n = s.n as i64;
    let mut cells: BTreeMap<(i64, i64), Vec<Summand>> = BTreeMap::new();
    for sigma in s.nerve() {
        for m in -n..=n {
            let twice_r = sigma.len() as i64 - 1 - m;
            if twice_r < 0 || twice_r % 2 != 0 {
                continue;
            }
            let r = twice_r / 2;
            if r < (-m).max(0) {
                continue;
            }
            let ring = s.ring(sigma);
            for j in 0..=ring.top() {
                if ring.dims[j] == 0 {
                    continue;
                }
                let q = j as i64 + m + 2 * r;
                let sm = Summand { cech: Subset::empty(), r, sigma, degree: j, twist: m + r, offset: 0, dim: ring.dims[j] };
                cells.entry((m, q)).or_default().push(sm);
            }
        }
    }
    let cells: BTreeMap<(i64, i64), E1Cell> = cells.into_iter().map(|((m, q), v)| ((m, q), E1Cell::new(m, q, v))).collect();
    let window = Window { m_lo: -n, m_hi: n, q_lo: 0, q_hi: 2 * n };
    let mut page = E1Page {
        variant: Variant::A,
        n: s.n,
        window,
        complete: true,
        cells,
        d1: BTreeMap::new(),
        n_op: BTreeMap::new(),
        l_op: BTreeMap::new(),
    };
    let labels = s.index.len();
    let d1 = |x: &Summand| -> Vec<Component> {
        let mut out = Vec::new();
        let (sigma, r, j) = (x.sigma, x.r, x.degree);
        let m = sigma.len() as i64 - 1 - 2 * r;
        for nu in sigma.iter() {
            let t = sigma.without(nu);
            if t.is_empty() || r < (1 - m).max(0) {
                continue;
            }
            let g = s.gysin_map(t, nu, j).scale(&rat(-contract_sign(nu, sigma)));
            out.push(((Subset::empty(), r, t), g));
        }
        for mu in 0..labels {
            let t = sigma.with(mu);
            if sigma.contains(mu) || !s.in_nerve(t) {
                continue;
            }
            let res = restrict_block(s, sigma, t, j).scale(&rat(-wedge_sign(mu, sigma)));
            out.push(((Subset::empty(), r + 1, t), res));
        }
        out
    };
    let n_map = |x: &Summand| -> Vec<Component> {
        vec![((Subset::empty(), x.r + 1, x.sigma), Matrix::identity(x.dim))]
    };
    let l_map = |x: &Summand| -> Vec<Component> {
        let st = s.stratum(x.sigma);
        vec![((Subset::empty(), x.r, x.sigma), st.ring.left_mult(2, &st.ample, x.degree))]
    };
    page.d1 = page.assemble_all((-1, 1), &d1);
    page.n_op = page.assemble_all((-2, 0), &n_map);
    page.l_op = page.assemble_all((0, 2), &l_map);
    page
}

/// Builds the `K` page on the window `m ∈ [-2n-3, 2n+3]`, `q ∈ [-1, 2n+1]`;
/// `q = -1` is always empty.
pub fn build_e1_k(s: &StrataDatum) -> Result<E1Page, LimitError> {
    require_valid(s)?;
    Ok(build_e1_k_unchecked(s))
}

pub fn build_e1_k_unchecked(s: &StrataDatum) -> E1Page {
    let n = s.n as i64;
    let window = Window { m_lo: -2 * n - 3, m_hi: 2 * n + 3, q_lo: -1, q_hi: 2 * n + 1 };
    let labels = s.index.len();
    let all = s.index.full();
    let mut cells: BTreeMap<(i64, i64), Vec<Summand>> = BTreeMap::new();
    for a in s.nerve() {
        let k = a.len() as i64 - 1;
        for sp in all.subsets() {
            let st = a.union(sp);
            if !s.in_nerve(st) {
                continue;
            }
            let ring = s.ring(st);
            for r in 0.. {
                let m = sp.len() as i64 - k + 2 * r;
                if m > window.m_hi {
                    break;
                }
                if m < window.m_lo {
                    continue;
                }
                for j in 0..=ring.top() {
                    let q = j as i64 + m + 2 * k - 2 * r;
                    if ring.dims[j] == 0 || !(window.q_lo..=window.q_hi).contains(&q) {
                        continue;
                    }
                    let sm = Summand { cech: a, r, sigma: sp, degree: j, twist: m + k - r, offset: 0, dim: ring.dims[j] };
                    cells.entry((m, q)).or_default().push(sm);
                }
            }
        }
    }
    let cells = cells.into_iter().map(|((m, q), v)| ((m, q), E1Cell::new(m, q, v))).collect();
    let mut page = E1Page {
        variant: Variant::K,
        n: s.n,
        window,
        complete: false,
        cells,
        d1: BTreeMap::new(),
        n_op: BTreeMap::new(),
        l_op: BTreeMap::new(),
    };
    let d1 = |x: &Summand| -> Vec<Component> {
        let mut out = Vec::new();
        let (a, r, sp, j) = (x.cech, x.r, x.sigma, x.degree);
        let k = a.len() as i64 - 1;
        let st = x.stratum();
        let sk = rat(sign(k));
        // Čech coface on e_A
        for mu in 0..labels {
            let (na, nst) = (a.with(mu), st.with(mu));
            if a.contains(mu) || !s.in_nerve(nst) {
                continue;
            }
            let res = s.restrict(st, nst, j).scale(&rat(wedge_sign(mu, a)));
            out.push(((na, r, sp), res));
        }
        // residue contraction on e_σ'
        for nu in sp.iter() {
            let nsp = sp.without(nu);
            let c = &sk * rat(contract_sign(nu, sp));
            let blk = if a.contains(nu) {
                let kappa = s.kappa(st, nu);
                s.ring(st).left_mult(2, &kappa, j)
            } else {
                s.gysin_map(st.without(nu), nu, j)
            };
            out.push(((a, r, nsp), blk.scale(&c)));
        }
        // u-derivative paired with dlog t
        if r >= 1 {
            for mu in 0..labels {
                let (nsp, nst) = (sp.with(mu), st.with(mu));
                if sp.contains(mu) || !s.in_nerve(nst) {
                    continue;
                }
                let c = &sk * rat(wedge_sign(mu, sp));
                out.push(((a, r - 1, nsp), s.restrict(st, nst, j).scale(&c)));
            }
        }
        out
    };
    let n_map = |x: &Summand| -> Vec<Component> {
        if x.r == 0 {
            return Vec::new();
        }
        vec![((x.cech, x.r - 1, x.sigma), Matrix::identity(x.dim))]
    };
    let l_map = |x: &Summand| -> Vec<Component> {
        let st = s.stratum(x.stratum());
        vec![((x.cech, x.r, x.sigma), st.ring.left_mult(2, &st.ample, x.degree))]
    };
    page.d1 = page.assemble_all((-1, 1), &d1);
    page.n_op = page.assemble_all((-2, 0), &n_map);
    page.l_op = page.assemble_all((0, 2), &l_map);
    page
}

/// `φ: E_1(A) -> E_1(K)`, cellwise.
pub fn phi_e1(a: &E1Page, k: &E1Page) -> BTreeMap<(i64, i64), Matrix> {
    let f = |x: &Summand| -> Vec<Component> {
        let sigma = x.sigma;
        let mut out = Vec::new();
        for sub in sigma.subsets() {
            if sub.is_empty() {
                continue;
            }
            let kk = sub.len() as i64 - 1;
            if kk < x.r {
                continue;
            }
            let rest = sigma.minus(sub);
            let (_, s) = chi(sub, rest).expect("disjoint");
            let c = rat(sign(kk) * s);
            out.push(((sub, kk - x.r, rest), Matrix::scalar(x.dim, c)));
        }
        out
    };
    a.cells
        .keys()
        .filter_map(|&key| {
            let s = a.cells.get(&key)?;
            let t = k.cells.get(&key)?;
            let mut m = Matrix::zeros(t.dim, s.dim);
            for x in &s.summands {
                for (tk, blk) in f(x) {
                    if let Some(y) = t.find(&tk) {
                        m.set_block(y.offset, x.offset, &blk);
                    }
                }
            }
            Some((key, m))
        })
        .collect()
}

/// `Θ` on `E_1^{0,2n}(K)`: on the summands `(A, 0, A ∖ a)` of top degree it
/// is `ε(k)(-1)^k s(a, A) t_A`, where `e_a ∧ e_{A∖a} = s(a, A) e_A`.
pub fn trace_theta(s: &StrataDatum, k: &E1Page) -> Vec<Rational> {
    let n = s.n as i64;
    let Some(cell) = k.cells.get(&(0, 2 * n)) else { return Vec::new() };
    let mut v = vec![Rational::zero(); cell.dim];
    for x in &cell.summands {
        let a = x.cech;
        let kk = a.len() as i64 - 1;
        if x.r != 0 || !x.sigma.is_subset_of(a) || x.sigma.len() + 1 != a.len() {
            continue;
        }
        let top = s.ring(a).top();
        if x.degree != top {
            continue;
        }
        let lone = a.minus(x.sigma).elements()[0];
        let (_, sg) = chi(Subset::singleton(lone), x.sigma).expect("disjoint");
        let c = rat(epsilon(kk) * sign(kk) * sg);
        for (i, t) in s.stratum(a).trace.iter().enumerate() {
            v[x.offset + i] = t * &c;
        }
    }
    v
}

#[derive(Clone, Debug)]
pub struct E2Cell {
    pub dim: usize,
    pub projection: Matrix,
    pub section: Matrix,
    /// Cycles of `d1` in the `E_1` cell.
    pub cycles: Subspace,
    /// Boundaries of `d1` in the `E_1` cell.
    pub boundaries: Subspace,
}

#[derive(Clone, Debug)]
pub struct E2Page {
    pub variant: Variant,
    pub cells: BTreeMap<(i64, i64), E2Cell>,
}

impl E2Page {
    pub fn dim(&self, m: i64, q: i64) -> usize {
        self.cells.get(&(m, q)).map_or(0, |c| c.dim)
    }

    pub fn dims(&self) -> BTreeMap<(i64, i64), usize> {
        self.cells.iter().filter(|(_, c)| c.dim > 0).map(|(&k, c)| (k, c.dim)).collect()
    }

    /// Matrix of an `E_1` operator `src -> tgt` on `E_2`.
    pub fn induced(&self, src: (i64, i64), tgt: (i64, i64), op: Option<&Matrix>) -> Matrix {
        let (ds, dt) = (self.dim(src.0, src.1), self.dim(tgt.0, tgt.1));
        match (op, self.cells.get(&src), self.cells.get(&tgt)) {
            (Some(op), Some(s), Some(t)) if ds > 0 && dt > 0 => t.projection.mul(op).mul(&s.section),
            _ => Matrix::zeros(dt, ds),
        }
    }
}

/// `E_2 = ker d1 / im d1` on every reliable cell.
pub fn e2(page: &E1Page) -> E2Page {
    let keys: Vec<(i64, i64)> = page.cells.keys().copied().filter(|&(m, q)| page.reliable(m, q)).collect();
    let cells = keys
        .par_iter()
        .map(|&(m, q)| {
            let c = &page.cells[&(m, q)];
            let cycles = match page.d1_at(m, q) {
                Some(d) => kernel(d),
                None => Subspace::full(c.dim),
            };
            let boundaries = match page.d1_at(m + 1, q - 1) {
                Some(d) => image(d),
                None => Subspace::zero(c.dim),
            };
            let qt = quotient(&cycles, &boundaries).expect("d1 squares to zero");
            ((m, q), E2Cell { dim: qt.dim, projection: qt.projection, section: qt.section, cycles, boundaries })
        })
        .collect();
    E2Page { variant: page.variant, cells }
}

/// Pairing of `E_1` cells `(a, q)` and `(-a, 2n - q)` on the `A` page:
/// components `(σ, r)` against `(σ, r + a)`, coefficient
/// `(-1)^{qa} ε(a) t_σ(x·y)`. Fails if a nonzero component is not twist
/// balanced.
pub fn pairing_e1(s: &StrataDatum, page: &E1Page, a: i64, q: i64) -> Result<Matrix, LimitError> {
    let n = s.n as i64;
    let (Some(cx), Some(cy)) = (page.cells.get(&(a, q)), page.cells.get(&(-a, 2 * n - q))) else {
        return Ok(Matrix::zeros(page.dim(a, q), page.dim(-a, 2 * n - q)));
    };
    let coef = rat(sign(q * a) * epsilon(a));
    let mut out = Matrix::zeros(cx.dim, cy.dim);
    for x in &cx.summands {
        let Some(y) = cy.find(&(Subset::empty(), x.r + a, x.sigma)) else { continue };
        let st = s.stratum(x.sigma);
        let ring = &st.ring;
        if x.degree + y.degree != ring.top() {
            continue;
        }
        let balanced = x.level().zip(y.level()).map(|(u, v)| u + v == n).unwrap_or(false);
        for i in 0..x.dim {
            for j in 0..y.dim {
                let v = st.trace_of(&ring.mul(x.degree, &ring.basis(x.degree, i), y.degree, &ring.basis(y.degree, j)));
                if v.is_zero() {
                    continue;
                }
                if !balanced {
                    return Err(LimitError::Ledger(format!(
                        "pairing component on Y_{{{}}} (r={}, r'={}) is not twist balanced",
                        s.index.key(x.sigma),
                        x.r,
                        y.r
                    )));
                }
                out.set(x.offset + i, y.offset + j, v * &coef);
            }
        }
    }
    Ok(out)
}

/// Weight-graded data of `H^q`.
#[derive(Clone, Debug, Serialize)]
pub struct DegreeData {
    pub q: i64,
    /// `w ↦ dim gr^W_w H^q`.
    pub weights: BTreeMap<i64, usize>,
    /// `p ↦ h^{p,p}`.
    pub hodge: BTreeMap<i64, usize>,
    /// Jordan type of `N`: block sizes in decreasing order.
    pub jordan: Vec<usize>,
    /// `rank l: H^q -> H^{q+2}`.
    pub l_rank: usize,
}

/// Limiting mixed Hodge structure computed from the `A` page with all
/// operators descended to `E_2`.
#[derive(Clone, Debug)]
pub struct LimitMhs {
    pub n: usize,
    pub degrees: Vec<DegreeData>,
    pub e1_a: E1Page,
    pub e2_a: E2Page,
    /// `N` on `E_2`, `(m, q) -> (m - 2, q)`.
    pub n_e2: BTreeMap<(i64, i64), Matrix>,
    /// `l` on `E_2`, `(m, q) -> (m, q + 2)`.
    pub l_e2: BTreeMap<(i64, i64), Matrix>,
    pub euler: i64,
    pub euler_oracle: i64,
    pub checks: Vec<Check>,
}

impl LimitMhs {
    pub fn betti(&self, q: i64) -> usize {
        self.degrees.get(q as usize).map_or(0, |d| d.weights.values().sum())
    }

    /// Dimension of `gr^W_w H^q`.
    pub fn weight_dim(&self, q: i64, w: i64) -> usize {
        self.e2_a.dim(w - q, q)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `N^i: gr_{q+i} H^q -> gr_{q-i} H^q` on `E_2`.
    pub fn n_power(&self, q: i64, m: i64, i: usize) -> Matrix {
        let mut out = Matrix::identity(self.e2_a.dim(m, q));
        for k in 0..i as i64 {
            let step = self.n_e2.get(&(m - 2 * k, q)).cloned().unwrap_or_else(|| {
                Matrix::zeros(self.e2_a.dim(m - 2 * k - 2, q), self.e2_a.dim(m - 2 * k, q))
            });
            out = step.mul(&out);
        }
        out
    }

    /// `l^i: gr H^q -> gr H^{q+2i}` at fixed `m`.
    pub fn l_power(&self, q: i64, m: i64, i: usize) -> Matrix {
        let mut out = Matrix::identity(self.e2_a.dim(m, q));
        for k in 0..i as i64 {
            let step = self.l_e2.get(&(m, q + 2 * k)).cloned().unwrap_or_else(|| {
                Matrix::zeros(self.e2_a.dim(m, q + 2 * k + 2), self.e2_a.dim(m, q + 2 * k))
            });
            out = step.mul(&out);
        }
        out
    }
}

pub const CHECK_D1_SQUARED: &str = "d1∘d1";
pub const CHECK_N_D1: &str = "[N,d1]";
pub const CHECK_L_D1: &str = "[l,d1]";
pub const CHECK_N_L: &str = "[N,l]";
pub const CHECK_WEIGHT_BOUNDS: &str = "weight support";
pub const CHECK_EULER: &str = "Euler oracle";
pub const CHECK_TOP_PURE: &str = "H^2n pure of weight 2n";

fn check(name: &str, w: Option<String>) -> Check {
    Check { name: name.to_string(), passed: w.is_none(), witness: w }
}

fn commutator_witness(
    x: &BTreeMap<(i64, i64), Matrix>,
    sx: (i64, i64),
    y: &BTreeMap<(i64, i64), Matrix>,
    sy: (i64, i64),
) -> Option<String> {
    x.iter().find_map(|(&(m, q), a)| {
        let b = y.get(&(m, q))?;
        let a2 = x.get(&(m + sy.0, q + sy.1))?;
        let b2 = y.get(&(m + sx.0, q + sx.1))?;
        (a2.mul(b) != b2.mul(a)).then(|| format!("cell (m={m}, q={q})"))
    })
}

/// Jordan type of a nilpotent map given as a graded string of maps.
fn jordan_type(lim: &LimitMhs, q: i64) -> Vec<usize> {
    // number of blocks of length ≥ j equals rank N^{j-1} - rank N^j on H^q
    let ms: Vec<i64> = lim.e2_a.cells.keys().filter(|k| k.1 == q).map(|k| k.0).collect();
    let rank_pow = |i: usize| -> usize { ms.iter().map(|&m| lim.n_power(q, m, i).rank()).sum() };
    let total: usize = ms.iter().map(|&m| lim.e2_a.dim(m, q)).sum();
    let mut ranks = vec![total];
    let mut i = 1;
    loop {
        let r = rank_pow(i);
        ranks.push(r);
        if r == 0 {
            break;
        }
        i += 1;
    }
    let mut blocks = Vec::new();
    for j in 1..ranks.len() {
        let at_least_j = ranks[j - 1] - ranks[j];
        let at_least_next = if j + 1 < ranks.len() { ranks[j] - ranks[j + 1] } else { 0 };
        for _ in 0..at_least_j - at_least_next {
            blocks.push(j);
        }
    }
    blocks.sort_unstable_by(|a, b| b.cmp(a));
    blocks
}

/// `H^q = ⊕_m E_2^{-m,q+m}` with weights, Hodge numbers and descended
/// operators, plus consistency checks of the pages.
pub fn compute_limit(s: &StrataDatum) -> Result<LimitMhs, LimitError> {
    let page = build_e1_a(s)?;
    Ok(limit_from_page(s, page))
}

pub fn limit_from_page(s: &StrataDatum, page: E1Page) -> LimitMhs {
    let n = s.n as i64;
    let e2a = e2(&page);
    let induced = |op: &BTreeMap<(i64, i64), Matrix>, step: (i64, i64)| -> BTreeMap<(i64, i64), Matrix> {
        e2a.cells
            .keys()
            .filter_map(|&(m, q)| {
                let t = (m + step.0, q + step.1);
                e2a.cells.contains_key(&t).then(|| ((m, q), e2a.induced((m, q), t, op.get(&(m, q)))))
            })
            .collect()
    };
    let n_e2 = induced(&page.n_op, (-2, 0));
    let l_e2 = induced(&page.l_op, (0, 2));
    let mut checks = vec![
        check(CHECK_D1_SQUARED, page.d1_squared_witness()),
        check(CHECK_N_D1, page.commutes_with_d1(&page.n_op, (-2, 0))),
        check(CHECK_L_D1, page.commutes_with_d1(&page.l_op, (0, 2))),
        check(CHECK_N_L, commutator_witness(&page.n_op, (-2, 0), &page.l_op, (0, 2))),
    ];
    let bound_witness = e2a.dims().keys().find_map(|&(m, q)| {
        let ok = -q <= m && m <= q && -2 * n + q <= m && m <= 2 * n - q;
        (!ok).then(|| format!("E2 cell (m={m}, q={q}) is nonzero"))
    });
    checks.push(check(CHECK_WEIGHT_BOUNDS, bound_witness));
    let mut degrees = Vec::new();
    let mut euler = 0;
    for q in 0..=2 * n {
        let mut weights = BTreeMap::new();
        let mut hodge = BTreeMap::new();
        for (&(m, qq), c) in &e2a.cells {
            if qq != q || c.dim == 0 {
                continue;
            }
            *weights.entry(q + m).or_insert(0) += c.dim;
            if (q + m) % 2 == 0 {
                *hodge.entry((q + m) / 2).or_insert(0) += c.dim;
            }
        }
        euler += sign(q) * weights.values().sum::<usize>() as i64;
        let l_rank = l_e2.iter().filter(|(k, _)| k.1 == q).map(|(_, m)| m.rank()).sum();
        degrees.push(DegreeData { q, weights, hodge, jordan: Vec::new(), l_rank });
    }
    let oracle = s.euler_oracle();
    checks.push(check(CHECK_EULER, (euler != oracle).then(|| format!("Σ(-1)^q dim H^q = {euler}, strata give {oracle}"))));
    let top = &degrees[2 * n as usize].weights;
    checks.push(check(
        CHECK_TOP_PURE,
        top.keys().any(|&w| w != 2 * n).then(|| format!("weights {:?} on H^{}", top.keys().collect::<Vec<_>>(), 2 * n)),
    ));
    let mut lim = LimitMhs { n: s.n, degrees, e1_a: page, e2_a: e2a, n_e2, l_e2, euler, euler_oracle: oracle, checks };
    for q in 0..=2 * n {
        lim.degrees[q as usize].jordan = jordan_type(&lim, q);
    }
    lim
}

/// Comparison of the two pages through `φ`.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub e1_k: E1Page,
    pub e2_k: E2Page,
    pub phi: BTreeMap<(i64, i64), Matrix>,
    pub checks: Vec<Check>,
    /// `(m, q) ↦ (dim E_2(A), dim E_2(K), rank of the induced map)`.
    pub cells: BTreeMap<(i64, i64), (usize, usize, usize)>,
}

pub const CHECK_D1_SQUARED_K: &str = "d1∘d1 (K)";
pub const CHECK_PHI_D1: &str = "φ∘d1 = d1∘φ";
pub const CHECK_PHI_N: &str = "φ∘N = N∘φ";
pub const CHECK_PHI_ISO: &str = "E2(A) ≅ E2(K)";
pub const CHECK_THETA: &str = "Θ∘d1";
pub const CHECK_N_D1_K: &str = "[N,d1] (K)";
pub const CHECK_L_D1_K: &str = "[l,d1] (K)";

pub fn compare(s: &StrataDatum, lim: &LimitMhs) -> Result<Comparison, LimitError> {
    require_valid(s)?;
    Ok(compare_unchecked(s, lim))
}

pub fn compare_unchecked(s: &StrataDatum, lim: &LimitMhs) -> Comparison {
    let a = &lim.e1_a;
    let k = build_e1_k_unchecked(s);
    let e2k = e2(&k);
    let phi = phi_e1(a, &k);
    let mut checks = vec![
        check(CHECK_D1_SQUARED_K, k.d1_squared_witness()),
        check(CHECK_N_D1_K, k.commutes_with_d1(&k.n_op, (-2, 0))),
        check(CHECK_L_D1_K, k.commutes_with_d1(&k.l_op, (0, 2))),
    ];
    let phi_d1 = phi.iter().find_map(|(&(m, q), f)| {
        let da = a.d1.get(&(m, q));
        let dk = k.d1.get(&(m, q));
        let f2 = phi.get(&(m - 1, q + 1));
        let lhs = match (f2, da) {
            (Some(f2), Some(da)) => f2.mul(da),
            _ => Matrix::zeros(k.dim(m - 1, q + 1), a.dim(m, q)),
        };
        let rhs = match dk {
            Some(dk) => dk.mul(f),
            None => Matrix::zeros(k.dim(m - 1, q + 1), a.dim(m, q)),
        };
        (k.cells.contains_key(&(m - 1, q + 1)) && lhs != rhs).then(|| format!("cell (m={m}, q={q})"))
    });
    checks.push(check(CHECK_PHI_D1, phi_d1));
    let phi_n = phi.iter().find_map(|(&(m, q), f)| {
        let lhs = match (phi.get(&(m - 2, q)), a.n_op.get(&(m, q))) {
            (Some(f2), Some(na)) => f2.mul(na),
            _ => Matrix::zeros(k.dim(m - 2, q), a.dim(m, q)),
        };
        let rhs = match k.n_op.get(&(m, q)) {
            Some(nk) => nk.mul(f),
            None => Matrix::zeros(k.dim(m - 2, q), a.dim(m, q)),
        };
        (k.cells.contains_key(&(m - 2, q)) && lhs != rhs).then(|| format!("cell (m={m}, q={q})"))
    });
    checks.push(check(CHECK_PHI_N, phi_n));
    let mut cells = BTreeMap::new();
    let mut iso = None;
    let keys: Vec<(i64, i64)> = lim.e2_a.cells.keys().chain(e2k.cells.keys()).copied().collect();
    for key in keys {
        if cells.contains_key(&key) || !(0..=2 * s.n as i64).contains(&key.1) {
            continue;
        }
        let (da, dk) = (lim.e2_a.dim(key.0, key.1), e2k.dim(key.0, key.1));
        let rank = match (lim.e2_a.cells.get(&key), e2k.cells.get(&key), phi.get(&key)) {
            (Some(ca), Some(ck), Some(f)) if da > 0 && dk > 0 => ck.projection.mul(f).mul(&ca.section).rank(),
            _ => 0,
        };
        if (da != dk || rank != da) && iso.is_none() {
            iso = Some(format!("cell (m={}, q={}): dim A = {da}, dim K = {dk}, rank φ = {rank}", key.0, key.1));
        }
        cells.insert(key, (da, dk, rank));
    }
    checks.push(check(CHECK_PHI_ISO, iso));
    let theta = trace_theta(s, &k);
    let n = s.n as i64;
    let theta_w = k.d1.get(&(1, 2 * n - 1)).and_then(|d| {
        let row = Matrix::from_rows(vec![theta.clone()], theta.len()).ok()?;
        (!row.mul(d).is_zero()).then(|| "Θ∘d1 ≠ 0 on E1^{-1,2n}".to_string())
    });
    checks.push(check(CHECK_THETA, theta_w));
    Comparison { e1_k: k, e2_k: e2k, phi, checks, cells }
}

/// Pairing data on `E_2` of the `A` page.
#[derive(Clone, Debug)]
pub struct Pairing {
    /// `(a, q) ↦ Q: gr_a H^q × gr_{-a} H^{2n-q} -> Q` in `E_2` bases.
    pub blocks: BTreeMap<(i64, i64), Matrix>,
    /// Trace functional on `E_2^{0,2n}` of the `A` page, through `φ` and `Θ`.
    pub trace: Vec<Rational>,
    pub checks: Vec<Check>,
}

pub const CHECK_TWIST: &str = "twist balance";
pub const CHECK_DESCENT: &str = "pairing descends to E2";
pub const CHECK_SYMMETRY: &str = "Q_K symmetry";
pub const CHECK_N_ANTI: &str = "N-antisymmetry";
pub const CHECK_F_ORTH: &str = "F-orthogonality";
pub const CHECK_W_ORTH: &str = "W-orthogonality";
pub const CHECK_TRACE_POINT: &str = "tr(point) = 1";
pub const CHECK_TRACE_UNIT: &str = "Q_K(1⊗y) = tr(y)";

pub fn pairing(s: &StrataDatum, lim: &LimitMhs, cmp: &Comparison) -> Pairing {
    let n = s.n as i64;
    let page = &lim.e1_a;
    let e2a = &lim.e2_a;
    let mut checks = Vec::new();
    let mut twist_w = None;
    let mut descent_w = None;
    let mut blocks = BTreeMap::new();
    let mut e1_blocks = BTreeMap::new();
    for &(a, q) in e2a.cells.keys() {
        if !e2a.cells.contains_key(&(-a, 2 * n - q)) {
            continue;
        }
        let p = match pairing_e1(s, page, a, q) {
            Ok(p) => p,
            Err(e) => {
                twist_w.get_or_insert(e.to_string());
                continue;
            }
        };
        let (cx, cy) = (&e2a.cells[&(a, q)], &e2a.cells[&(-a, 2 * n - q)]);
        // boundaries pair to zero against cycles, in both slots
        let left = cx.boundaries.basis().mul(&p).mul(&cy.cycles.basis().transpose());
        let right = cx.cycles.basis().mul(&p).mul(&cy.boundaries.basis().transpose());
        if (!left.is_zero() || !right.is_zero()) && descent_w.is_none() {
            descent_w = Some(format!("cell (m={a}, q={q})"));
        }
        blocks.insert((a, q), cx.section.transpose().mul(&p).mul(&cy.section));
        e1_blocks.insert((a, q), p);
    }
    checks.push(check(CHECK_TWIST, twist_w));
    checks.push(check(CHECK_DESCENT, descent_w));
    let sym = blocks.iter().find_map(|(&(a, q), b)| {
        let other = blocks.get(&(-a, 2 * n - q))?;
        (other.transpose().scale(&rat(sign(q))) != *b).then(|| format!("(m={a}, q={q})"))
    });
    checks.push(check(CHECK_SYMMETRY, sym));
    let anti = blocks.iter().find_map(|(&(a, q), _)| {
        // Q(Nx ⊗ y) + Q(x ⊗ Ny) for x ∈ gr_a H^q, y ∈ gr_{2-a} H^{2n-q}
        let nx = lim.n_e2.get(&(a, q))?;
        let ny = lim.n_e2.get(&(2 - a, 2 * n - q))?;
        let q1 = blocks.get(&(a - 2, q))?;
        let q2 = blocks.get(&(a, q))?;
        let lhs = nx.transpose().mul(q1).add(&q2.mul(ny));
        (!lhs.is_zero()).then(|| format!("(m={a}, q={q})"))
    });
    checks.push(check(CHECK_N_ANTI, anti));
    // Hodge level of gr_a H^q is (q + a) / 2; levels of paired pieces sum to n
    let f_orth = e1_blocks.iter().find_map(|(&(a, q), p)| {
        let level = (q + a) + (2 * n - q - a);
        (level != 2 * n && !p.is_zero()).then(|| format!("(m={a}, q={q})"))
    });
    checks.push(check(CHECK_F_ORTH, f_orth));
    let w_orth = e1_blocks.iter().find_map(|(&(a, q), p)| {
        // only gr_a against gr_{-a}: weight sum relative to the middle is zero
        let _ = q;
        (a + (-a) != 0 && !p.is_zero()).then(|| format!("(m={a}, q={q})"))
    });
    checks.push(check(CHECK_W_ORTH, w_orth));
    // trace on H^{2n} through φ and Θ
    let theta = trace_theta(s, &cmp.e1_k);
    let trace = match (e2a.cells.get(&(0, 2 * n)), cmp.phi.get(&(0, 2 * n))) {
        (Some(c), Some(f)) if !theta.is_empty() => {
            let row = Matrix::from_rows(vec![theta], f.rows()).expect("Θ length").mul(f).mul(&c.section);
            row.row(0).to_vec()
        }
        (Some(c), _) => vec![Rational::zero(); c.dim],
        _ => Vec::new(),
    };
    // every point class has trace 1
    let pt_w = match (e2a.cells.get(&(0, 2 * n)), page.cells.get(&(0, 2 * n)), cmp.phi.get(&(0, 2 * n))) {
        (Some(_), Some(cell), Some(f)) => {
            let th = trace_theta(s, &cmp.e1_k);
            let row = Matrix::from_rows(vec![th], f.rows()).expect("Θ length").mul(f);
            cell.summands.iter().find_map(|x| {
                let st = s.stratum(x.sigma);
                if x.degree != st.ring.top() || st.trace.len() != 1 {
                    return None;
                }
                let v = row.get(0, x.offset) / &st.trace[0];
                (!v.is_one()).then(|| format!("Y_{{{}}}: tr = {}", s.index.key(x.sigma), format_rational(&v)))
            })
        }
        _ => Some("no top cell".into()),
    };
    checks.push(check(CHECK_TRACE_POINT, pt_w));
    let unit_w = match (blocks.get(&(0, 0)), e2a.cells.get(&(0, 0))) {
        (Some(q0), Some(c0)) if c0.dim > 0 => {
            // the unit: 1 on every component
            let cell = &page.cells[&(0, 0)];
            let mut one = vec![Rational::zero(); cell.dim];
            for x in &cell.summands {
                for (i, u) in s.ring(x.sigma).unit.iter().enumerate() {
                    one[x.offset + i] = u.clone();
                }
            }
            let coords = c0.projection.apply(&one);
            let lhs = Matrix::from_rows(vec![coords], c0.dim).expect("row").mul(q0);
            (lhs.row(0) != trace.as_slice()).then(|| "Q_K(1⊗y) differs from tr(y)".to_string())
        }
        _ => None,
    };
    checks.push(check(CHECK_TRACE_UNIT, unit_w));
    Pairing { blocks, trace, checks }
}

/// Verdicts for one degree `q ≤ n`.
#[derive(Clone, Debug, Serialize)]
pub struct PrimitivePiece {
    pub q: i64,
    pub i: usize,
    pub dim: usize,
    /// Gram matrix of `x ↦ S_q(x ⊗ N_mon^i x)` on the primitive piece.
    #[serde(serialize_with = "ser_matrix_strings")]
    pub form: Matrix,
    /// The same form with `N` in place of `N_mon = -N`.
    #[serde(serialize_with = "ser_matrix_strings")]
    pub literal_form: Matrix,
    pub positive: bool,
    pub literal_positive: bool,
}

fn ser_matrix_strings<S: serde::Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
    m.to_strings().serialize(s)
}

#[derive(Clone, Debug)]
pub struct Polarization {
    pub checks: Vec<Check>,
    pub pieces: Vec<PrimitivePiece>,
}

impl Polarization {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Checks the polarized mixed Hodge structure axioms degree by degree:
/// nilpotency, monodromy weight filtration, hard Lefschetz and positivity
/// of `S_q(x ⊗ N_mon^i x)` on primitive pieces, with `N_mon = -N`.
pub fn verify_polarized(s: &StrataDatum, lim: &LimitMhs, pr: &Pairing) -> Result<Polarization, LimitError> {
    if !s.hodge_tate || !s.is_hodge_tate() {
        return Err(LimitError::NotHodgeTate);
    }
    let n = s.n as i64;
    let e2a = &lim.e2_a;
    let mut checks = Vec::new();
    let mut pieces = Vec::new();
    for q in 0..=n {
        let ms: Vec<i64> = e2a.cells.keys().filter(|k| k.1 == q).map(|k| k.0).collect();
        let nil = ms.iter().find_map(|&m| (!lim.n_power(q, m, q as usize + 1).is_zero()).then(|| format!("gr_{} H^{q}", q + m)));
        checks.push(check(&format!("N^{}=0 at q={q}", q + 1), nil));
        let mut wf = None;
        for i in 0..=q {
            let src = e2a.dim(i, q);
            let tgt = e2a.dim(-i, q);
            let m = lim.n_power(q, i, i as usize);
            if src != tgt || m.rank() != src {
                wf.get_or_insert(format!("N^{i}: gr_{} -> gr_{} at q={q} (dims {src}, {tgt}, rank {})", q + i, q - i, m.rank()));
            }
        }
        checks.push(check(&format!("monodromy weight filtration at q={q}"), wf));
        let mut hl = None;
        let steps = (n - q) as usize;
        for &m in &ms {
            let l = lim.l_power(q, m, steps);
            let (src, tgt) = (e2a.dim(m, q), e2a.dim(m, 2 * n - q));
            if src != tgt || l.rank() != src {
                hl.get_or_insert(format!("l^{steps} on gr_{} H^{q}", q + m));
            }
        }
        checks.push(check(&format!("hard Lefschetz l^{} at q={q}", n - q), hl));
        for i in 0..=q {
            let dim_i = e2a.dim(i, q);
            if dim_i == 0 {
                continue;
            }
            let kn = kernel(&lim.n_power(q, i, i as usize + 1));
            let kl = kernel(&lim.l_power(q, i, steps + 1));
            let prim = kn.intersection(&kl);
            let name = format!("HL-positivity P_{i} at q={q}");
            if prim.dim() == 0 {
                checks.push(check(&name, None));
                continue;
            }
            let Some(qb) = pr.blocks.get(&(i, q)) else {
                checks.push(check(&name, Some("pairing block missing".into())));
                continue;
            };
            let ni = lim.n_power(q, i, i as usize);
            let li = lim.l_power(q, -i, steps);
            let basis = prim.basis().transpose();
            let core = basis.transpose().mul(qb).mul(&li).mul(&ni).mul(&basis).scale(&rat(epsilon(q)));
            let form = core.scale(&rat(sign(i)));
            let sym = |f: &Matrix| -> (bool, Option<String>) {
                match is_positive_definite(f) {
                    Ok(v) => (v, None),
                    Err(e) => (false, Some(e.to_string())),
                }
            };
            let (positive, err) = sym(&form);
            let (literal_positive, _) = sym(&core);
            let witness = if positive {
                None
            } else {
                Some(match err {
                    Some(e) => format!("P_{i} at q={q}: {e}"),
                    None => format!("P_{i} at q={q}: form {:?} is not positive definite", form.to_strings()),
                })
            };
            checks.push(check(&name, witness));
            pieces.push(PrimitivePiece { q, i: i as usize, dim: prim.dim(), form, literal_form: core, positive, literal_positive });
        }
    }
    Ok(Polarization { checks, pieces })
}

/// Everything the command line reports, computed once.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub validation: ValidationReport,
    pub limit: LimitMhs,
    pub comparison: Comparison,
    pub pairing: Pairing,
    pub polarization: Option<Polarization>,
}

impl Analysis {
    pub fn all_checks(&self) -> Vec<&Check> {
        let mut v: Vec<&Check> = self.validation.checks.iter().collect();
        v.extend(&self.limit.checks);
        v.extend(&self.comparison.checks);
        v.extend(&self.pairing.checks);
        if let Some(p) = &self.polarization {
            v.extend(&p.checks);
        }
        v
    }

    pub fn passed(&self) -> bool {
        self.all_checks().iter().all(|c| c.passed)
    }
}

/// Runs the whole pipeline. Validation failures are reported rather than
/// aborting, so corrupted data still yields page diagnostics.
pub fn analyze(s: &StrataDatum) -> Result<Analysis, LimitError> {
    let validation = validate(s)?;
    let page = build_e1_a_unchecked(s);
    let limit = limit_from_page(s, page);
    let comparison = compare_unchecked(s, &limit);
    let pairing = pairing(s, &limit, &comparison);
    let polarization = if s.hodge_tate && s.is_hodge_tate() { Some(verify_polarized(s, &limit, &pairing)?) } else { None };
    Ok(Analysis { validation, limit, comparison, pairing, polarization })
}
