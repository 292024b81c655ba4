//! Random generators shared by the property and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use limhodge::cubical::{BasisWeights, CoCubical, IndexSet, Subset};
use limhodge::exactlin::{kernel, rat, Matrix};
use limhodge::homalg::{ChainMap, Complex};
use limhodge::strata::{fixture_cycle_of_p1, fixture_product_p1, fixture_projective_space, StrataDatum};
use proptest::prelude::*;

/// Elementary summand of a complex: `[Q -> Q]` from degree `p` with source
/// weight `ws` and target weight `wt ≤ ws`, or `[Q]` in degree `p`.
#[derive(Clone, Debug)]
pub enum Piece {
    Arrow { p: i64, ws: i64, wt: i64 },
    Point { p: i64, w: i64 },
}

/// A complex with basis weights defining a filtration preserved by `d`.
#[derive(Clone, Debug)]
pub struct Filtered {
    pub complex: Complex,
    pub weights: BasisWeights,
}

fn piece(lo: i64, hi: i64) -> impl Strategy<Value = Piece> {
    prop_oneof![
        (lo..hi, -1i64..=2, 0i64..=2).prop_map(|(p, ws, drop)| Piece::Arrow { p, ws, wt: ws - drop }),
        (lo..=hi, -1i64..=2).prop_map(|(p, w)| Piece::Point { p, w }),
    ]
}

/// Assembles pieces into a complex on `[lo, hi]`, keeping at most `cap`
/// basis vectors per degree.
fn assemble(lo: i64, hi: i64, cap: usize, pieces: &[Piece]) -> (Vec<usize>, Vec<Vec<i64>>, Vec<Vec<(usize, usize)>>) {
    let len = (hi - lo + 1) as usize;
    let mut weights: Vec<Vec<i64>> = vec![Vec::new(); len];
    let mut arrows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); len];
    for pc in pieces {
        match *pc {
            Piece::Arrow { p, ws, wt } => {
                let i = (p - lo) as usize;
                if weights[i].len() < cap && weights[i + 1].len() < cap {
                    arrows[i].push((weights[i].len(), weights[i + 1].len()));
                    weights[i].push(ws);
                    weights[i + 1].push(wt);
                }
            }
            Piece::Point { p, w } => {
                let i = (p - lo) as usize;
                if weights[i].len() < cap {
                    weights[i].push(w);
                }
            }
        }
    }
    (weights.iter().map(Vec::len).collect(), weights, arrows)
}

/// Unitriangular change of basis that preserves the weight filtration.
fn triangular(ws: &[i64], coeffs: &[i64]) -> Matrix {
    let n = ws.len();
    let mut g = Matrix::identity(n);
    let mut c = coeffs.iter().cycle();
    for i in 0..n {
        for j in 0..n {
            if i != j && ws[i] <= ws[j] {
                g.set(i, j, rat(*c.next().unwrap_or(&0)));
            }
        }
    }
    // strict weight order keeps the matrix triangular; ties are made upper
    for i in 0..n {
        for j in 0..i {
            if ws[i] == ws[j] {
                g.set(i, j, rat(0));
            }
        }
    }
    g
}

/// Filtered complexes on at most four degrees with dims ≤ `cap`.
pub fn filtered_complex(cap: usize) -> impl Strategy<Value = Filtered> {
    (-1i64..=1, 1i64..=3)
        .prop_flat_map(move |(lo, len)| {
            let hi = lo + len - 1;
            let pieces = if hi > lo {
                proptest::collection::vec(piece(lo, hi), 1..=6).boxed()
            } else {
                proptest::collection::vec((-1i64..=2).prop_map(move |w| Piece::Point { p: lo, w }), 1..=3).boxed()
            };
            (Just(lo), Just(hi), pieces, proptest::collection::vec(-2i64..=2, 12))
        })
        .prop_map(move |(lo, hi, pieces, coeffs)| {
            let (dims, ws, arrows) = assemble(lo, hi, cap, &pieces);
            let gs: Vec<Matrix> = ws.iter().map(|w| triangular(w, &coeffs)).collect();
            let diffs = (0..dims.len().saturating_sub(1))
                .map(|i| {
                    let mut d = Matrix::zeros(dims[i + 1], dims[i]);
                    for &(s, t) in &arrows[i] {
                        d.set(t, s, rat(1));
                    }
                    gs[i + 1].mul(&d).mul(&gs[i].inverse().expect("unitriangular"))
                })
                .collect();
            let complex = Complex::new(lo, dims, diffs).expect("conjugate of a complex");
            let weights = complex.degrees().map(|p| (p, ws[(p - lo) as usize].clone())).collect();
            Filtered { complex, weights }
        })
}

pub fn complex(cap: usize) -> impl Strategy<Value = Complex> {
    filtered_complex(cap).prop_map(|f| f.complex)
}

/// Basis of the space of chain maps `k -> l`, flattened degree by degree.
fn chain_map_basis(k: &Complex, l: &Complex, shift: i64, sign: i64) -> (Vec<(i64, usize, usize)>, Matrix) {
    // unknown blocks f_p: k^p -> l^{p+shift}, constraint d_l f_p = sign f_{p+1} d_k
    let lo = k.lo().min(l.lo() - shift) - 1;
    let hi = k.hi().max(l.hi() - shift) + 1;
    let mut layout = Vec::new();
    let mut off = 0;
    for p in lo..=hi {
        let (r, c) = (l.dim(p + shift), k.dim(p));
        layout.push((p, off, r * c));
        off += r * c;
    }
    let unknowns = off;
    let mut rows: Vec<Vec<limhodge::Rational>> = Vec::new();
    for p in lo..=hi {
        let dl = l.d(p + shift);
        let dk = k.d(p);
        let (tr, tc) = (l.dim(p + shift + 1), k.dim(p));
        let at = |q: i64| layout.iter().find(|x| x.0 == q).map(|x| x.1);
        for i in 0..tr {
            for j in 0..tc {
                let mut row = vec![rat(0); unknowns];
                if let Some(o) = at(p) {
                    let cols = k.dim(p);
                    for a in 0..l.dim(p + shift) {
                        row[o + a * cols + j] += dl.get(i, a);
                    }
                }
                if let Some(o) = at(p + 1) {
                    let cols = k.dim(p + 1);
                    for b in 0..k.dim(p + 1) {
                        row[o + i * cols + b] -= dk.get(b, j) * rat(sign);
                    }
                }
                rows.push(row);
            }
        }
    }
    let cons = Matrix::from_rows(rows.clone(), unknowns).unwrap_or_else(|_| Matrix::zeros(0, unknowns));
    let ker = if rows.is_empty() { limhodge::exactlin::Subspace::full(unknowns) } else { kernel(&cons) };
    (layout, ker.basis().clone())
}

fn combine(layout: &[(i64, usize, usize)], basis: &Matrix, coeffs: &[i64], k: &Complex, l: &Complex, shift: i64) -> BTreeMap<i64, Matrix> {
    let mut v = vec![rat(0); basis.cols()];
    for (i, c) in coeffs.iter().enumerate().take(basis.rows()) {
        for (x, b) in v.iter_mut().zip(basis.row(i)) {
            *x += b * rat(*c);
        }
    }
    layout
        .iter()
        .map(|&(p, off, _)| {
            let (r, c) = (l.dim(p + shift), k.dim(p));
            let mut m = Matrix::zeros(r, c);
            for i in 0..r {
                for j in 0..c {
                    m.set(i, j, v[off + i * c + j].clone());
                }
            }
            (p, m)
        })
        .collect()
}

/// A random chain map between two random complexes.
pub fn chain_map(cap: usize) -> impl Strategy<Value = ChainMap> {
    (complex(cap), complex(cap), proptest::collection::vec(-2i64..=2, 16)).prop_map(|(k, l, coeffs)| {
        let (layout, basis) = chain_map_basis(&k, &l, 0, 1);
        let comps = combine(&layout, &basis, &coeffs, &k, &l, 0);
        ChainMap::from_fn(&k, &l, |p| comps.get(&p).cloned().unwrap_or_else(|| Matrix::zeros(l.dim(p), k.dim(p))))
            .expect("solution of the chain map equations")
    })
}

/// A short exact sequence `0 -> K -> L -> M -> 0` with `L = K ⊕ M` twisted
/// by a random `h: M -> K[1]` with `d_K h + h d_M = 0`.
pub fn short_exact(cap: usize) -> impl Strategy<Value = (ChainMap, ChainMap)> {
    (complex(cap), complex(cap), proptest::collection::vec(-2i64..=2, 16)).prop_map(|(k, m, coeffs)| {
        let (layout, basis) = chain_map_basis(&m, &k, 1, -1);
        let h = combine(&layout, &basis, &coeffs, &m, &k, 1);
        let lo = k.lo().min(m.lo());
        let hi = k.hi().max(m.hi());
        let dims: Vec<usize> = (lo..=hi).map(|p| k.dim(p) + m.dim(p)).collect();
        let diffs = (lo..hi)
            .map(|p| {
                let mut d = Matrix::zeros(k.dim(p + 1) + m.dim(p + 1), k.dim(p) + m.dim(p));
                d.set_block(0, 0, &k.d(p));
                if let Some(hp) = h.get(&p) {
                    d.set_block(0, k.dim(p), hp);
                }
                d.set_block(k.dim(p + 1), k.dim(p), &m.d(p));
                d
            })
            .collect();
        let l = Complex::new(lo, dims, diffs).expect("twisted sum is a complex");
        let f = ChainMap::from_fn(&k, &l, |p| {
            let mut x = Matrix::zeros(l.dim(p), k.dim(p));
            x.set_block(0, 0, &Matrix::identity(k.dim(p)));
            x
        })
        .expect("inclusion");
        let g = ChainMap::from_fn(&l, &m, |p| {
            let mut x = Matrix::zeros(m.dim(p), l.dim(p));
            x.set_block(0, k.dim(p), &Matrix::identity(m.dim(p)));
            x
        })
        .expect("projection");
        (f, g)
    })
}

/// Co-cubical complex on `labels` indices with support a random simplicial
/// complex, every object the same filtered complex and edge maps `a_ν · id`.
pub fn cocubical(labels: usize, cap: usize) -> impl Strategy<Value = CoCubical> {
    (filtered_complex(cap), proptest::collection::vec(prop_oneof![Just(1i64), Just(-1), Just(2)], labels), any::<u8>())
        .prop_map(move |(f, scalars, mask)| build_cocubical(labels, &f, &scalars, mask))
}

pub fn build_cocubical(labels: usize, f: &Filtered, scalars: &[i64], mask: u8) -> CoCubical {
    let index = IndexSet::numbered(labels);
    let full = index.full();
    // keep all vertices, drop faces of size ≥ 2 according to the mask
    let mut support: Vec<Subset> = full.subsets().filter(|s| !s.is_empty()).collect();
    support.sort();
    let mut kept: Vec<Subset> = Vec::new();
    for (i, s) in support.iter().enumerate() {
        let closed = s.iter().all(|x| {
            let t = s.without(x);
            t.is_empty() || kept.contains(&t)
        });
        if s.len() == 1 || (closed && mask >> (i % 8) & 1 == 1) {
            kept.push(*s);
        }
    }
    let objects: BTreeMap<Subset, Complex> = kept.iter().map(|&s| (s, f.complex.clone())).collect();
    let mut edges = BTreeMap::new();
    for &s in &kept {
        for nu in full.minus(s).iter() {
            if kept.contains(&s.with(nu)) {
                edges.insert((s, nu), ChainMap::identity(&f.complex).scale(scalars[nu]));
            }
        }
    }
    let weights = kept.iter().map(|&s| (s, f.weights.clone())).collect();
    CoCubical::new(index, objects, edges, Some(weights)).expect("scalar functor")
}

/// Valid strata data: cycles of lines, projective spaces, products with a
/// line, with random relabeling and ample rescaling.
pub fn strata_datum() -> impl Strategy<Value = StrataDatum> {
    (0usize..4, 3usize..=5, 1usize..=3, any::<u64>(), 1i64..=3).prop_map(|(kind, len, dim, perm_seed, scale)| {
        let base = match kind {
            0 => fixture_cycle_of_p1(len).expect("cycle"),
            1 => fixture_projective_space(dim).expect("projective space"),
            2 => fixture_product_p1(&fixture_cycle_of_p1(3).expect("cycle")),
            _ => fixture_product_p1(&fixture_projective_space(1).expect("line")),
        };
        let perm = permutation(base.index.len(), perm_seed);
        scale_ample(&relabel(&base, &perm), scale)
    })
}

/// Deterministic permutation of `0..n` from a seed.
pub fn permutation(n: usize, mut seed: u64) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (seed % (i as u64 + 1)) as usize;
        seed /= i as u64 + 1;
        v.swap(i, j);
    }
    v
}

fn map_subset(s: Subset, perm: &[usize]) -> Subset {
    Subset::from_indices(&s.iter().map(|i| perm[i]).collect::<Vec<_>>())
}

/// Renames component `i` to position `perm[i]`.
pub fn relabel(s: &StrataDatum, perm: &[usize]) -> StrataDatum {
    let mut labels = vec![String::new(); perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        labels[p] = format!("c{}", s.index.labels()[i]);
    }
    StrataDatum {
        n: s.n,
        index: IndexSet::new(labels).expect("distinct labels"),
        strata: s.strata.iter().map(|(&k, v)| (map_subset(k, perm), v.clone())).collect(),
        restrictions: s.restrictions.iter().map(|(&(k, nu), v)| ((map_subset(k, perm), perm[nu]), v.clone())).collect(),
        gysin: s.gysin.iter().map(|(&(k, nu), v)| ((map_subset(k, perm), perm[nu]), v.clone())).collect(),
        hodge_tate: s.hodge_tate,
    }
}

/// Replaces every ample class `ℓ` by `c ℓ`.
pub fn scale_ample(s: &StrataDatum, c: i64) -> StrataDatum {
    let mut out = s.clone();
    for st in out.strata.values_mut() {
        for x in &mut st.ample {
            *x *= rat(c);
        }
    }
    out
}

pub fn fixtures() -> Vec<(&'static str, StrataDatum)> {
    let cycle = fixture_cycle_of_p1(3).expect("cycle");
    vec![
        ("projective_space(1)", fixture_projective_space(1).expect("P1")),
        ("projective_space(2)", fixture_projective_space(2).expect("P2")),
        ("cycle_of_p1(3)", cycle.clone()),
        ("cycle_of_p1(3) x P1", fixture_product_p1(&cycle)),
    ]
}

use limhodge::cubical::{associator, cech, cech_associator, cech_basis_weights, product_filtration_piece, tau, tensor_weights, Model};
use limhodge::homalg::{cone, connecting, shift, sign, tensor, tensor_map, zeta};

pub fn squares_to_zero(c: &Complex) -> Result<(), String> {
    for p in c.lo() - 1..=c.hi() {
        if !c.d(p + 1).mul(&c.d(p)).is_zero() {
            return Err(format!("d∘d ≠ 0 in degree {p}"));
        }
    }
    Ok(())
}

fn same_components(a: &ChainMap, b: &ChainMap, what: &str) -> Result<(), String> {
    let lo = a.source().lo().min(a.target().lo()) - 1;
    let hi = a.source().hi().max(a.target().hi()) + 1;
    for p in lo..=hi {
        if a.component(p) != b.component(p) {
            return Err(format!("{what} differs in degree {p}"));
        }
    }
    Ok(())
}

/// `d² = 0` on cones, shifts and tensor products built from `f`.
pub fn check_constructions(f: &ChainMap) -> Result<(), String> {
    let c = cone(f);
    squares_to_zero(&c.complex)?;
    for m in -2..=2 {
        squares_to_zero(&shift(&c.complex, m))?;
    }
    squares_to_zero(&tensor(f.source(), f.target()))?;
    squares_to_zero(&tensor(&c.complex, f.source()))?;
    let tf = tensor_map(f, &ChainMap::identity(f.target()));
    squares_to_zero(tf.target())
}

/// `ζ_m ∘ α(f)[m] = α(f[m])` and `β(f[m]) ∘ ζ_m = (-1)^m β(f)[m]`.
pub fn check_zeta(f: &ChainMap, m: i64) -> Result<(), String> {
    let z = zeta(f, m);
    let (c, cm) = (cone(f), cone(&f.shift(m)));
    same_components(&z.compose(&c.alpha.shift(m)), &cm.alpha, "ζ∘α")?;
    same_components(&cm.beta.compose(&z), &c.beta.shift(m).scale(sign(m)), "β∘ζ")
}

/// `γ(f, g)[m] = (-1)^m γ(f[m], g[m])` degree by degree.
pub fn check_connecting_shift(f: &ChainMap, g: &ChainMap, m: i64) -> Result<(), String> {
    let c = connecting(f, g).map_err(|e| e.to_string())?;
    let cm = connecting(&f.shift(m), &g.shift(m)).map_err(|e| e.to_string())?;
    for (p, x) in &c {
        let y = cm.get(&(p - m)).cloned().unwrap_or_else(|| x.clone());
        if *x != y.scale(&rat(sign(m))) {
            return Err(format!("degree {p}, shift {m}"));
        }
    }
    Ok(())
}

pub fn check_tau_chain_map(k: &CoCubical, l: &CoCubical) -> Result<(), String> {
    tau(k, l).map(|_| ()).map_err(|e| format!("τ is not a chain map: {e}"))
}

/// `τ` is associative up to the associators of the tensor products.
pub fn check_tau_associative(k: &CoCubical, l: &CoCubical, m: &CoCubical) -> Result<(), String> {
    let err = |e: limhodge::cubical::CubicalError| e.to_string();
    let (ck, cl, cm) = (cech(k, Model::Ordered).complex, cech(l, Model::Ordered).complex, cech(m, Model::Ordered).complex);
    let kl = k.tensor(l);
    let lm = l.tensor(m);
    let left = cech_associator(k, l, m)
        .compose(&tau(&kl, m).map_err(err)?)
        .compose(&tensor_map(&tau(k, l).map_err(err)?, &ChainMap::identity(&cm)));
    let right = tau(k, &lm)
        .map_err(err)?
        .compose(&tensor_map(&ChainMap::identity(&ck), &tau(l, m).map_err(err)?))
        .compose(&associator(&ck, &cl, &cm));
    same_components(&left, &right, "τ associativity square")
}

/// `τ(F_a ⊗ F_b) ⊆ F_{a+b}` for `F = W` and `F = δW`. The product
/// filtration is spanned by basis pairs, so it suffices that each pair of
/// weights `(u, v)` lands in `F_{u+v}`; one piece is also checked directly.
pub fn check_tau_filtration(k: &CoCubical, l: &CoCubical) -> Result<(), String> {
    let t = tau(k, l).map_err(|e| e.to_string())?;
    let (ck, cl) = (cech(k, Model::Ordered), cech(l, Model::Ordered));
    let kl = k.tensor(l);
    let ckl = cech(&kl, Model::Ordered);
    for delta in [false, true] {
        let name = if delta { "δW" } else { "W" };
        let (wk, wl) = (cech_basis_weights(k, &ck, delta), cech_basis_weights(l, &cl, delta));
        let ws = tensor_weights(&ck.complex, &wk, &cl.complex, &wl);
        let wt = cech_basis_weights(&kl, &ckl, delta);
        for n in t.source().degrees() {
            let tn = t.component(n);
            let (src_w, tgt_w) = (ws.get(&n).cloned().unwrap_or_default(), wt.get(&n).cloned().unwrap_or_default());
            for (c, &u) in src_w.iter().enumerate() {
                if let Some(r) = (0..tn.rows()).find(|&r| tgt_w[r] > u && *tn.get(r, c) != rat(0)) {
                    return Err(format!("τ in degree {n}: basis pair of {name}-weight {u} hits weight {}", tgt_w[r]));
                }
            }
            let piece = product_filtration_piece(&ck.complex, &wk, &cl.complex, &wl, n, 0, 0);
            let img = tn.mul(&piece.basis().transpose());
            if (0..img.rows()).any(|r| tgt_w[r] > 0 && (0..img.cols()).any(|c| *img.get(r, c) != rat(0))) {
                return Err(format!("τ({name}_0 ⊗ {name}_0) ⊄ {name}_0 in degree {n}"));
            }
        }
    }
    Ok(())
}
