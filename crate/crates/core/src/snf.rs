//! Smith normal form over the chain ring Z/ℓ^k.

use crate::padic::{invmod, is_prime, mulmod, submod};

/// Dense row-major matrix with entries in Z/ℓ^k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalMatrix {
    ell: u64,
    k: u32,
    modulus: u64,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl LocalMatrix {
    pub fn zeros(ell: u64, k: u32, rows: usize, cols: usize) -> Self {
        assert!(is_prime(ell) && k >= 1, "Z/ell^k needs a prime ell and k >= 1");
        let modulus = ell.checked_pow(k).expect("ell^k overflows u64");
        Self { ell, k, modulus, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_rows(ell: u64, k: u32, rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(ell, k, rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged matrix");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, (v as i128).rem_euclid(m.modulus as i128) as u64);
            }
        }
        m
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.modulus;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn push_row(&mut self, row: &[u64]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend(row.iter().map(|v| v % self.modulus));
        self.rows += 1;
    }

    fn valuation(&self, v: u64) -> u32 {
        if v == 0 {
            return self.k;
        }
        let mut v = v;
        let mut a = 0;
        while v.is_multiple_of(self.ell) {
            v /= self.ell;
            a += 1;
        }
        a
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    fn scale_row(&mut self, r: usize, s: u64, from: usize) {
        let m = self.modulus;
        for v in &mut self.data[r * self.cols + from..(r + 1) * self.cols] {
            *v = mulmod(*v, s, m);
        }
    }

    /// row[dst] -= q * row[src] on columns `from..`.
    fn sub_row_multiple(&mut self, dst: usize, src: usize, q: u64, from: usize) {
        let m = self.modulus;
        let c = self.cols;
        let (src_row, dst_row) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * c);
            (&lo[src * c..src * c + c], &mut hi[..c])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * c);
            (&hi[..c], &mut lo[dst * c..dst * c + c])
        };
        for j in from..c {
            let s = src_row[j];
            if s != 0 {
                dst_row[j] = submod(dst_row[j], mulmod(q, s, m), m);
            }
        }
    }
}

/// Elementary divisors ℓ^{a_i} of a matrix over Z/ℓ^k; a_i = k stands for a zero divisor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnfLocal {
    pub ell: u64,
    pub k: u32,
    pub rows: usize,
    pub cols: usize,
    /// Non-decreasing, one entry per diagonal position (min(rows, cols) entries).
    pub diagonal: Vec<u32>,
}

impl SnfLocal {
    /// Number of nonzero divisors.
    pub fn rank(&self) -> usize {
        self.diagonal.iter().filter(|&&a| a < self.k).count()
    }

    /// Exponents of the nontrivial cyclic factors of the cokernel (Z/ℓ^k)^cols / row span.
    pub fn cokernel_factors(&self) -> Vec<u32> {
        let mut f: Vec<u32> = self.diagonal.iter().copied().filter(|&a| a > 0).collect();
        f.extend(std::iter::repeat_n(self.k, self.cols - self.diagonal.len()));
        f.sort_unstable();
        f
    }

    /// ℓ-exponent of the cokernel order.
    pub fn cokernel_exponent(&self) -> u64 {
        self.cokernel_factors().iter().map(|&a| a as u64).sum()
    }

    /// ℓ-exponent of the order of the row span.
    pub fn image_exponent(&self) -> u64 {
        self.diagonal.iter().map(|&a| (self.k - a) as u64).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PivotRule {
    MinValuation,
    /// Deliberately wrong rule used to check that the self-test notices a broken backend.
    FirstNonzero,
}

pub(crate) struct SnfRun {
    pub result: SnfLocal,
    /// Pivot valuations in elimination order.
    pub pivots: Vec<u32>,
    /// Row transform P with P·A·Q diagonal, when requested.
    pub row_transform: Option<LocalMatrix>,
}

pub fn snf_local(a: &LocalMatrix) -> SnfLocal {
    snf_run(a.clone(), false, PivotRule::MinValuation).result
}

pub(crate) fn snf_run(mut a: LocalMatrix, track_rows: bool, rule: PivotRule) -> SnfRun {
    let (r, c) = (a.rows, a.cols);
    let mut p = track_rows.then(|| {
        let mut id = LocalMatrix::zeros(a.ell, a.k, r, r);
        for i in 0..r {
            id.set(i, i, 1);
        }
        id
    });
    let steps = r.min(c);
    let mut diagonal = Vec::with_capacity(steps);
    let mut floor = 0u32;
    for t in 0..steps {
        let mut best: Option<(usize, usize, u32)> = None;
        'search: for i in t..r {
            for j in t..c {
                let v = a.get(i, j);
                if v == 0 {
                    continue;
                }
                let val = a.valuation(v);
                if best.is_none_or(|b| val < b.2) {
                    best = Some((i, j, val));
                    if val == floor || rule == PivotRule::FirstNonzero {
                        break 'search;
                    }
                }
            }
        }
        let Some((pi, pj, val)) = best else {
            diagonal.extend(std::iter::repeat_n(a.k, steps - t));
            break;
        };
        floor = val;
        a.swap_rows(t, pi);
        a.swap_cols(t, pj);
        if let Some(p) = p.as_mut() {
            p.swap_rows(t, pi);
        }
        let ell_a = a.ell.pow(val);
        let unit = a.get(t, t) / ell_a;
        let unit_inv = invmod(unit, a.modulus).expect("unit part is invertible");
        a.scale_row(t, unit_inv, t);
        if let Some(p) = p.as_mut() {
            p.scale_row(t, unit_inv, 0);
        }
        for i in t + 1..r {
            let e = a.get(i, t);
            if e == 0 {
                continue;
            }
            let q = e / ell_a;
            a.sub_row_multiple(i, t, q, t);
            if let Some(p) = p.as_mut() {
                p.sub_row_multiple(i, t, q, 0);
            }
        }
        // Column t is now clear below the pivot, so column operations only touch row t.
        for j in t + 1..c {
            a.set(t, j, 0);
        }
        diagonal.push(val);
    }
    let mut sorted = diagonal.clone();
    sorted.sort_unstable();
    SnfRun {
        result: SnfLocal { ell: a.ell, k: a.k, rows: r, cols: c, diagonal: sorted },
        pivots: diagonal,
        row_transform: p,
    }
}

/// Generators of {y : y·A ≡ 0 mod ℓ^k} for A over Z/ℓ^k.
pub(crate) fn left_kernel(a: &LocalMatrix) -> Vec<Vec<u64>> {
    let run = snf_run(a.clone(), true, PivotRule::MinValuation);
    let p = run.row_transform.expect("row transform requested");
    let mut gens = Vec::new();
    for i in 0..a.rows {
        // With D = P·A·Q diagonal, y·A = 0 iff (y·P⁻¹)·D = 0.
        let factor = match run.pivots.get(i) {
            Some(&0) => continue,
            Some(&ai) if ai < a.k => a.ell.pow(a.k - ai),
            _ => 1,
        };
        let row: Vec<u64> = p.row(i).iter().map(|&v| mulmod(v, factor, a.modulus)).collect();
        if row.iter().any(|&v| v != 0) {
            gens.push(row);
        }
    }
    gens
}
