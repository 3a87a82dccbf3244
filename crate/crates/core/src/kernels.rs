//! The kernels `f`, `h`, and symmetrized `h_bar`, their Hoeffding
//! projections under a discrete measure, and the empirically modified
//! second-order kernel used by the bootstrap.
//!
//! Indices are zero-based sample (or support) positions. Everything except
//! [`h2_empirical_matrix`] evaluates the kernels literally and is meant for
//! verification at small n only.

use std::cell::RefCell;
use std::collections::HashMap;

use rayon::prelude::*;

use crate::distances::DistanceMatrix;
use crate::reduction::{h_bar_terms, permutations, Contractions, Plan, DEGREE};
use crate::summation::Neumaier;

/// Six sample indices (repeats allowed).
pub type IndexTuple6 = [usize; DEGREE];

/// `d(i1,i2) - d(i1,i3) - d(i2,i4) + d(i3,i4)`.
#[inline]
pub fn f_dist(d: &DistanceMatrix, i1: usize, i2: usize, i3: usize, i4: usize) -> f64 {
    d.get(i1, i2) - d.get(i1, i3) - d.get(i2, i4) + d.get(i3, i4)
}

/// `f_X(t1,t2,t3,t4) * f_Y(t1,t2,t5,t6)`. Not symmetric in its arguments.
#[inline]
pub fn h_kernel(a: &DistanceMatrix, b: &DistanceMatrix, t: &IndexTuple6) -> f64 {
    f_dist(a, t[0], t[1], t[2], t[3]) * f_dist(b, t[0], t[1], t[4], t[5])
}

/// Mean of [`h_kernel`] over all 720 orderings of `t`.
pub fn h_bar(a: &DistanceMatrix, b: &DistanceMatrix, t: &IndexTuple6) -> f64 {
    let mut acc = Neumaier::new();
    for sigma in permutations() {
        let p = [
            t[sigma[0]],
            t[sigma[1]],
            t[sigma[2]],
            t[sigma[3]],
            t[sigma[4]],
            t[sigma[5]],
        ];
        acc.add(h_kernel(a, b, &p));
    }
    acc.total() / 720.0
}

/// Brute-force Hoeffding machinery for `h_bar` under a discrete measure
/// with weights `w` on the rows of `a`/`b`.
///
/// Conditional expectations are memoized by argument multiset, which is
/// valid because `h_bar` and all its projections are symmetric.
pub struct HoeffdingOracle<'a> {
    a: &'a DistanceMatrix,
    b: &'a DistanceMatrix,
    w: Vec<f64>,
    conditional: RefCell<HashMap<Vec<usize>, f64>>,
    canonical: RefCell<HashMap<Vec<usize>, f64>>,
}

impl<'a> HoeffdingOracle<'a> {
    pub fn new(a: &'a DistanceMatrix, b: &'a DistanceMatrix, w: &[f64]) -> Self {
        assert_eq!(a.n(), b.n());
        assert_eq!(a.n(), w.len());
        Self {
            a,
            b,
            w: w.to_vec(),
            conditional: RefCell::default(),
            canonical: RefCell::default(),
        }
    }

    /// Uniform weights: the empirical measure of the paired sample.
    pub fn empirical(a: &'a DistanceMatrix, b: &'a DistanceMatrix) -> Self {
        let n = a.n();
        Self::new(a, b, &vec![1.0 / n as f64; n])
    }

    /// `h_c(z_1..z_c)`: `h_bar` with the first `c = fixed.len()` arguments
    /// held and the remaining `6 - c` integrated against the measure.
    pub fn h_c(&self, fixed: &[usize]) -> f64 {
        assert!(fixed.len() <= DEGREE);
        let mut key = fixed.to_vec();
        key.sort_unstable();
        if let Some(v) = self.conditional.borrow().get(&key) {
            return *v;
        }
        let v = self.integrate(&key);
        self.conditional.borrow_mut().insert(key, v);
        v
    }

    fn integrate(&self, fixed: &[usize]) -> f64 {
        let m = self.w.len();
        let free = DEGREE - fixed.len();
        let mut t = [0usize; DEGREE];
        t[..fixed.len()].copy_from_slice(fixed);
        let mut counter = vec![0usize; free];
        let mut acc = Neumaier::new();
        loop {
            let mut weight = 1.0;
            for (slot, &idx) in counter.iter().enumerate() {
                t[fixed.len() + slot] = idx;
                weight *= self.w[idx];
            }
            if weight != 0.0 {
                acc.add(weight * h_bar(self.a, self.b, &t));
            }
            // odometer over the free slots
            let mut pos = 0;
            loop {
                if pos == free {
                    return acc.total();
                }
                counter[pos] += 1;
                if counter[pos] < m {
                    break;
                }
                counter[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Plug-in value of the functional: `h_bar` integrated in all arguments.
    pub fn mean(&self) -> f64 {
        self.h_c(&[])
    }

    /// Canonical projection `h_bar^(k)` with `k = args.len()`, from the
    /// recursion `h^(k) = h_k - mean - sum over proper nonempty subsets S of
    /// h^(|S|)(args_S)`.
    pub fn canonical(&self, args: &[usize]) -> f64 {
        let k = args.len();
        assert!((1..=DEGREE).contains(&k), "projection order must be in 1..=6");
        let mut key = args.to_vec();
        key.sort_unstable();
        if let Some(v) = self.canonical.borrow().get(&key) {
            return *v;
        }
        let mut v = self.h_c(&key) - self.mean();
        for mask in 1u32..(1 << k) - 1 {
            let sub: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| key[i]).collect();
            v -= self.canonical(&sub);
        }
        self.canonical.borrow_mut().insert(key, v);
        v
    }

    /// [`h_mc`] applied to `h_bar` (degree 6).
    pub fn h_mc_bar(&self, args: &[usize]) -> f64 {
        let (a, b) = (self.a, self.b);
        h_mc(|t| h_bar(a, b, t.try_into().unwrap()), args, DEGREE)
    }

    /// The four-integral form of the empirically modified second-order
    /// kernel, evaluated literally.
    pub fn h2(&self, k: usize, l: usize) -> f64 {
        self.h_c(&[k, l]) - self.h_c(&[k]) - self.h_c(&[l]) + self.mean()
    }
}

/// `h_c` under the empirical measure of the sample (brute force).
pub fn h_c_empirical(a: &DistanceMatrix, b: &DistanceMatrix, fixed: &[usize]) -> f64 {
    HoeffdingOracle::empirical(a, b).h_c(fixed)
}

/// Canonical projection `h_bar^(k)` under the empirical measure, `k =
/// args.len()` (brute force).
pub fn h_k_canonical(a: &DistanceMatrix, b: &DistanceMatrix, args: &[usize]) -> f64 {
    HoeffdingOracle::empirical(a, b).canonical(args)
}

/// `sum over v_1+..+v_d = m, v_j >= 1, of m!/(v_1!..v_d!) K(z_1^(v_1),..,z_d^(v_d))`
/// for a symmetric kernel `K` of degree `m`, `d = args.len()`.
pub fn h_mc<K>(kernel: K, args: &[usize], m: usize) -> f64
where
    K: Fn(&[usize]) -> f64,
{
    let d = args.len();
    assert!(1 <= d && d <= m && m <= DEGREE, "need 1 <= d <= m <= 6");
    let fact = |k: usize| (1..=k).product::<usize>() as f64;
    let mut acc = Neumaier::new();
    let mut parts = vec![1usize; d];
    compositions(m, 0, &mut parts, &mut |v| {
        let coef = fact(m) / v.iter().map(|&x| fact(x)).product::<f64>();
        let repeated: Vec<usize> = v
            .iter()
            .zip(args)
            .flat_map(|(&times, &z)| std::iter::repeat_n(z, times))
            .collect();
        acc.add(coef * kernel(&repeated));
    });
    acc.total()
}

fn compositions(remaining: usize, pos: usize, parts: &mut [usize], visit: &mut dyn FnMut(&[usize])) {
    let d = parts.len();
    if pos == d - 1 {
        if remaining >= 1 {
            parts[pos] = remaining;
            visit(parts);
        }
        return;
    }
    let reserve = d - pos - 1;
    for v in 1..=remaining.saturating_sub(reserve) {
        parts[pos] = v;
        compositions(remaining - v, pos + 1, parts, visit);
    }
}

/// Symmetric matrix `H[k][l] = h_bar^(2)_{theta_n}(z_k, z_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct H2Matrix {
    n: usize,
    data: Vec<f64>,
}

impl H2Matrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.data[k * self.n + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }
}

/// Empirically modified second-order projection of `h_bar` at every pair of
/// sample points, via contractions (O(n^3) setup, O(1) per entry).
pub fn h2_empirical_matrix(a: &DistanceMatrix, b: &DistanceMatrix) -> H2Matrix {
    let n = a.n();
    h2_matrix_weighted(a, b, &vec![1.0 / n as f64; n])
}

/// [`h2_empirical_matrix`] for an arbitrary discrete measure on the rows.
pub fn h2_matrix_weighted(a: &DistanceMatrix, b: &DistanceMatrix, w: &[f64]) -> H2Matrix {
    let n = a.n();
    assert_eq!(b.n(), n, "marginal sizes differ");
    let c = Contractions::new(a, b, w);
    let table = h_bar_terms();
    let pair = Plan::leading(table, 2);
    let single = Plan::leading(table, 1);
    let total = Plan::leading(table, 0).eval(&c, &[]);
    let one: Vec<f64> = (0..n).map(|k| single.eval(&c, &[k])).collect();

    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            (k..n)
                .map(|l| pair.eval(&c, &[k, l]) - one[k] - one[l] + total)
                .collect()
        })
        .collect();
    let mut data = vec![0.0; n * n];
    for (k, row) in upper.iter().enumerate() {
        for (off, v) in row.iter().enumerate() {
            let l = k + off;
            data[k * n + l] = *v;
            data[l * n + k] = *v;
        }
    }
    H2Matrix { n, data }
}
