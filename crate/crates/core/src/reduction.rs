//! Term tables for the degree-6 kernel and their evaluation as matrix
//! contractions.
//!
//! `h(z_1..z_6) = f_X(x_1,x_2,x_3,x_4) f_Y(y_1,y_2,y_5,y_6)` expands into 16
//! signed products `A[z_p, z_q] B[z_r, z_s]` over argument positions. The
//! symmetrized kernel is the average of those products over all 720
//! relabelings of the positions, which collapses to a short table once
//! products with the same position pattern are merged.
//!
//! Integrating a product against a weighted measure in some positions while
//! holding others fixed only ever needs a handful of precomputed
//! contractions of `A` and `B` ([`Contractions`]), so every partial integral
//! of the symmetrized kernel is a fixed linear combination of [`Atom`]s.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::distances::DistanceMatrix;
use crate::summation::{sum, Neumaier};

/// Number of kernel arguments.
pub const DEGREE: usize = 6;

/// One product `A[z_a.0, z_a.1] * B[z_b.0, z_b.1]` over argument positions.
/// Both edges are stored with the smaller position first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub a: (u8, u8),
    pub b: (u8, u8),
}

impl Term {
    fn new(a: (u8, u8), b: (u8, u8)) -> Self {
        let sort = |(p, q): (u8, u8)| if p <= q { (p, q) } else { (q, p) };
        Self { a: sort(a), b: sort(b) }
    }

    fn relabel(&self, sigma: &[usize; DEGREE]) -> Self {
        let m = |p: u8| sigma[p as usize] as u8;
        Self::new((m(self.a.0), m(self.a.1)), (m(self.b.0), m(self.b.1)))
    }

    /// Number of distinct positions the product touches (2, 3 or 4).
    pub fn arity(&self) -> usize {
        let mut seen = [false; DEGREE];
        for p in [self.a.0, self.a.1, self.b.0, self.b.1] {
            seen[p as usize] = true;
        }
        seen.iter().filter(|s| **s).count()
    }
}

/// Signed products making up the kernel (not symmetrized).
pub fn h_terms() -> Vec<(Term, f64)> {
    let fx = [(1.0, (0, 1)), (-1.0, (0, 2)), (-1.0, (1, 3)), (1.0, (2, 3))];
    let fy = [(1.0, (0, 1)), (-1.0, (0, 4)), (-1.0, (1, 5)), (1.0, (4, 5))];
    let mut out = Vec::with_capacity(16);
    for (sa, ea) in fx {
        for (sb, eb) in fy {
            out.push((Term::new(ea, eb), sa * sb));
        }
    }
    out
}

/// All permutations of `0..6` in lexicographic order.
pub fn permutations() -> &'static [[usize; DEGREE]] {
    static PERMS: OnceLock<Vec<[usize; DEGREE]>> = OnceLock::new();
    PERMS.get_or_init(|| {
        let mut p = [0, 1, 2, 3, 4, 5];
        let mut out = vec![p];
        while next_permutation(&mut p) {
            out.push(p);
        }
        out
    })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Merged term table of the symmetrized kernel, built once on first use.
pub fn h_bar_terms() -> &'static [(Term, f64)] {
    static TABLE: OnceLock<Vec<(Term, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let base = h_terms();
        let perms = permutations();
        let mut merged: BTreeMap<Term, f64> = BTreeMap::new();
        for sigma in perms {
            for (t, c) in &base {
                *merged.entry(t.relabel(sigma)).or_insert(0.0) += c;
            }
        }
        let scale = 1.0 / perms.len() as f64;
        merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(t, c)| (t, c * scale))
            .collect()
    })
}

/// Contractions of `A` and `B` against a weight vector.
///
/// With `a = A w`, `b = B w`:
/// `cross[v][u] = sum_t w_t A[t][v] B[t][u]`.
#[derive(Debug, Clone)]
pub struct Contractions<'a> {
    pub(crate) a: &'a DistanceMatrix,
    pub(crate) b: &'a DistanceMatrix,
    a_row: Vec<f64>,
    b_row: Vec<f64>,
    a_mean: f64,
    b_mean: f64,
    ab_row: Vec<f64>,
    ab_mean: f64,
    cross: Vec<f64>,
    cross_row_a: Vec<f64>,
    cross_row_b: Vec<f64>,
    cross_mean: f64,
}

impl<'a> Contractions<'a> {
    /// Precomputes every contraction. The cross matrix costs O(n^3); rows are
    /// filled in parallel with a fixed summation order per entry.
    pub fn new(a: &'a DistanceMatrix, b: &'a DistanceMatrix, w: &[f64]) -> Self {
        let n = a.n();
        assert_eq!(b.n(), n);
        assert_eq!(w.len(), n);
        let dot = |x: &[f64], y: &[f64]| sum(x.iter().zip(y).zip(w).map(|((p, q), wt)| p * q * wt));
        let a_row: Vec<f64> = (0..n)
            .map(|i| sum(a.row(i).iter().zip(w).map(|(x, wt)| x * wt)))
            .collect();
        let b_row: Vec<f64> = (0..n)
            .map(|i| sum(b.row(i).iter().zip(w).map(|(x, wt)| x * wt)))
            .collect();
        let a_mean = sum(a_row.iter().zip(w).map(|(x, wt)| x * wt));
        let b_mean = sum(b_row.iter().zip(w).map(|(x, wt)| x * wt));
        let ab_row: Vec<f64> = (0..n).map(|i| dot(a.row(i), b.row(i))).collect();
        let ab_mean = sum(ab_row.iter().zip(w).map(|(x, wt)| x * wt));

        // A and B are symmetric, so column t of either is row t.
        let cross: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|v| {
                let av = a.row(v);
                (0..n).map(move |u| {
                    let bu = b.row(u);
                    let mut acc = Neumaier::new();
                    for t in 0..n {
                        acc.add(w[t] * av[t] * bu[t]);
                    }
                    acc.total()
                })
            })
            .collect();
        let cross_row_a: Vec<f64> = (0..n).map(|v| dot(a.row(v), &b_row)).collect();
        let cross_row_b: Vec<f64> = (0..n).map(|u| dot(b.row(u), &a_row)).collect();
        let cross_mean = sum(a_row.iter().zip(&b_row).zip(w).map(|((x, y), wt)| x * y * wt));

        Self {
            a,
            b,
            a_row,
            b_row,
            a_mean,
            b_mean,
            ab_row,
            ab_mean,
            cross,
            cross_row_a,
            cross_row_b,
            cross_mean,
        }
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    #[inline]
    fn cross(&self, v: usize, u: usize) -> f64 {
        self.cross[v * self.n() + u]
    }
}

/// Half of a product whose two edges share no position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Half {
    /// Both endpoints fixed to arguments.
    Pair(u8, u8),
    /// One endpoint fixed, the other integrated.
    Row(u8),
    /// Both endpoints integrated.
    Mean,
}

/// A product of distances with some positions integrated out, expressed
/// through fixed argument ids. Each variant evaluates in O(1) from
/// [`Contractions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// `A[x,y] B[x,y]`
    Same(u8, u8),
    /// `sum_t w_t A[x,t] B[x,t]`
    SameRow(u8),
    /// `sum_st w_s w_t A[s,t] B[s,t]`
    SameMean,
    /// `A[s,p] B[s,q]` with shared position `s` fixed.
    Hinge { s: u8, pa: Option<u8>, pb: Option<u8> },
    /// Shared position integrated: `sum_t w_t A[t,pa] B[t,pb]`, each of
    /// `pa`, `pb` either fixed or integrated as well.
    Cross { pa: Option<u8>, pb: Option<u8> },
    /// Edges on disjoint positions factorize.
    Split(Half, Half),
}

impl Atom {
    #[inline]
    pub fn eval(&self, c: &Contractions<'_>, args: &[usize]) -> f64 {
        let g = |id: u8| args[id as usize];
        match *self {
            Atom::Same(x, y) => c.a.get(g(x), g(y)) * c.b.get(g(x), g(y)),
            Atom::SameRow(x) => c.ab_row[g(x)],
            Atom::SameMean => c.ab_mean,
            Atom::Hinge { s, pa, pb } => {
                let s = g(s);
                let fa = pa.map_or(c.a_row[s], |p| c.a.get(s, g(p)));
                let fb = pb.map_or(c.b_row[s], |p| c.b.get(s, g(p)));
                fa * fb
            }
            Atom::Cross { pa, pb } => match (pa, pb) {
                (Some(x), Some(y)) => c.cross(g(x), g(y)),
                (Some(x), None) => c.cross_row_a[g(x)],
                (None, Some(y)) => c.cross_row_b[g(y)],
                (None, None) => c.cross_mean,
            },
            Atom::Split(ha, hb) => {
                let fa = match ha {
                    Half::Pair(x, y) => c.a.get(g(x), g(y)),
                    Half::Row(x) => c.a_row[g(x)],
                    Half::Mean => c.a_mean,
                };
                let fb = match hb {
                    Half::Pair(x, y) => c.b.get(g(x), g(y)),
                    Half::Row(x) => c.b_row[g(x)],
                    Half::Mean => c.b_mean,
                };
                fa * fb
            }
        }
    }
}

fn half(p: Option<u8>, q: Option<u8>) -> Half {
    match (p, q) {
        (Some(x), Some(y)) => Half::Pair(x.min(y), x.max(y)),
        (Some(x), None) | (None, Some(x)) => Half::Row(x),
        (None, None) => Half::Mean,
    }
}

/// Which argument id (if any) sits in each kernel position.
pub type SlotPattern = [Option<u8>; DEGREE];

/// Integrates every free position of `term` against the measure.
pub fn classify(term: &Term, slots: &SlotPattern) -> Atom {
    let s = |p: u8| slots[p as usize];
    let (p, q) = term.a;
    let (r, t) = term.b;
    let shared: Vec<u8> = [p, q].into_iter().filter(|x| *x == r || *x == t).collect();
    match shared.as_slice() {
        [_, _] => match (s(p), s(q)) {
            (Some(x), Some(y)) => Atom::Same(x.min(y), x.max(y)),
            (Some(x), None) | (None, Some(x)) => Atom::SameRow(x),
            (None, None) => Atom::SameMean,
        },
        [h] => {
            let pa = if *h == p { q } else { p };
            let pb = if *h == r { t } else { r };
            match s(*h) {
                Some(x) => Atom::Hinge {
                    s: x,
                    pa: s(pa),
                    pb: s(pb),
                },
                None => Atom::Cross { pa: s(pa), pb: s(pb) },
            }
        }
        _ => Atom::Split(half(s(p), s(q)), half(s(r), s(t))),
    }
}

/// A term table integrated over the free positions of a slot pattern.
#[derive(Debug, Clone)]
pub struct Plan {
    atoms: Vec<(Atom, f64)>,
}

impl Plan {
    pub fn compile(table: &[(Term, f64)], slots: &SlotPattern) -> Self {
        let mut merged: BTreeMap<Atom, f64> = BTreeMap::new();
        for (t, c) in table {
            *merged.entry(classify(t, slots)).or_insert(0.0) += c;
        }
        Self {
            atoms: merged.into_iter().filter(|(_, c)| *c != 0.0).collect(),
        }
    }

    /// Pattern with the first `fixed` positions bound to argument ids
    /// `0..fixed` and the rest integrated.
    pub fn leading(table: &[(Term, f64)], fixed: usize) -> Self {
        let mut slots = [None; DEGREE];
        for (i, s) in slots.iter_mut().enumerate().take(fixed) {
            *s = Some(i as u8);
        }
        Self::compile(table, &slots)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Fixed summation order: atoms are evaluated in table order.
    #[inline]
    pub fn eval(&self, c: &Contractions<'_>, args: &[usize]) -> f64 {
        let mut acc = Neumaier::new();
        for (atom, coef) in &self.atoms {
            acc.add(coef * atom.eval(c, args));
        }
        acc.total()
    }
}
