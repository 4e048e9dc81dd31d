//! Exact sparse linear algebra over any [`Field`]: Gaussian elimination,
//! rank, nullspace, linear solves, dense inversion, and congruence
//! diagonalization of symmetric rational matrices.

use crate::scalar::{Field, Rat, ScalarError};
use num_traits::Zero;
use std::collections::BTreeMap;

/// Sparse vector: strictly nonzero entries, keyed by index.
pub type SparseVec<F> = BTreeMap<usize, F>;

pub fn sv_from_dense<F: Field>(v: &[F]) -> SparseVec<F> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

pub fn sv_to_dense<F: Field>(v: &SparseVec<F>, n: usize) -> Vec<F> {
    let mut out = vec![F::zero(); n];
    for (&i, x) in v {
        out[i] = x.clone();
    }
    out
}

pub fn sv_axpy<F: Field>(dst: &mut SparseVec<F>, c: &F, src: &SparseVec<F>) {
    if c.is_zero() {
        return;
    }
    for (&i, x) in src {
        let add = c.clone() * x.clone();
        match dst.get_mut(&i) {
            Some(e) => {
                let t = e.clone() + add;
                if t.is_zero() {
                    dst.remove(&i);
                } else {
                    *e = t;
                }
            }
            None => {
                dst.insert(i, add);
            }
        }
    }
}

pub fn sv_scale<F: Field>(v: &mut SparseVec<F>, c: &F) {
    if c.is_zero() {
        v.clear();
        return;
    }
    for x in v.values_mut() {
        let t = x.clone() * c.clone();
        *x = t;
    }
}

/// Incremental row-echelon eliminator. Rows are reduced against the pivots
/// seen so far; fully reduced rows are dropped, so `rank` is the number of
/// retained rows.
pub struct RowReducer<F: Field> {
    /// Pivot column -> normalized row (leading coefficient 1 at that column).
    rows: BTreeMap<usize, SparseVec<F>>,
}

impl<F: Field> Default for RowReducer<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Field> RowReducer<F> {
    pub fn new() -> Self {
        RowReducer {
            rows: BTreeMap::new(),
        }
    }

    /// Reduce `row` against the current pivots, in place; afterwards either
    /// empty or with a leading column not yet used as a pivot.
    pub fn reduce(&self, row: &mut SparseVec<F>) {
        loop {
            let Some((&lead, lc)) = row.iter().next() else {
                return;
            };
            let Some(pivot) = self.rows.get(&lead) else {
                return;
            };
            let c = -lc.clone();
            let lead_key = lead;
            sv_axpy(row, &c, pivot);
            row.remove(&lead_key);
        }
    }

    /// Insert a row; returns true if it increased the rank.
    pub fn add_row(&mut self, mut row: SparseVec<F>) -> bool {
        self.reduce(&mut row);
        let Some((&lead, lc)) = row.iter().next() else {
            return false;
        };
        let inv = lc.inv().expect("nonzero leading coefficient");
        sv_scale(&mut row, &inv);
        row.insert(lead, F::one());
        self.rows.insert(lead, row);
        true
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivot_cols(&self) -> Vec<usize> {
        self.rows.keys().copied().collect()
    }

    /// Back-substitute to a fully reduced echelon form.
    pub fn normalize(&mut self) {
        let cols: Vec<usize> = self.rows.keys().copied().collect();
        for &p in cols.iter().rev() {
            let prow = self.rows.get(&p).unwrap().clone();
            for &q in cols.iter() {
                if q >= p {
                    break;
                }
                let row = self.rows.get_mut(&q).unwrap();
                if let Some(c) = row.get(&p).cloned() {
                    sv_axpy(row, &(-c), &prow);
                    row.remove(&p);
                }
            }
        }
    }

    /// The current echelon rows, densified.
    pub fn dense_rows(&self, ncols: usize) -> Vec<Vec<F>> {
        self.rows.values().map(|r| sv_to_dense(r, ncols)).collect()
    }

    /// Basis of the solution space of `R x = 0` over `ncols` unknowns.
    pub fn nullspace(&mut self, ncols: usize) -> Vec<Vec<F>> {
        self.normalize();
        let pivots: Vec<usize> = self.rows.keys().copied().collect();
        let is_pivot: std::collections::HashSet<usize> = pivots.iter().copied().collect();
        let mut basis = Vec::new();
        for free in 0..ncols {
            if is_pivot.contains(&free) {
                continue;
            }
            let mut v = vec![F::zero(); ncols];
            v[free] = F::one();
            for (&p, row) in &self.rows {
                if let Some(c) = row.get(&free) {
                    v[p] = -c.clone();
                }
            }
            basis.push(v);
        }
        basis
    }
}

/// Rank of a sparse matrix given as rows.
pub fn rank<F: Field>(rows: impl IntoIterator<Item = SparseVec<F>>) -> usize {
    let mut rr = RowReducer::new();
    for r in rows {
        rr.add_row(r);
    }
    rr.rank()
}

/// Basis of the nullspace of the matrix given as rows over `ncols` unknowns.
pub fn nullspace<F: Field>(
    rows: impl IntoIterator<Item = SparseVec<F>>,
    ncols: usize,
) -> Vec<Vec<F>> {
    let mut rr = RowReducer::new();
    for r in rows {
        rr.add_row(r);
    }
    rr.nullspace(ncols)
}

/// Solve `A x = b` for one solution (rows of `A` sparse, `b` dense);
/// `None` if inconsistent.
pub fn solve<F: Field>(
    rows: &[SparseVec<F>],
    rhs: &[F],
    ncols: usize,
) -> Option<Vec<F>> {
    assert_eq!(rows.len(), rhs.len());
    // Augment with the right-hand side in column `ncols`.
    let mut rr = RowReducer::new();
    for (r, b) in rows.iter().zip(rhs) {
        let mut row = r.clone();
        if !b.is_zero() {
            row.insert(ncols, b.clone());
        }
        rr.add_row(row);
    }
    if rr.rows.contains_key(&ncols) {
        return None; // a row reduced to 0 = 1
    }
    rr.normalize();
    let mut x = vec![F::zero(); ncols];
    for (&p, row) in &rr.rows {
        // Free variables are set to zero: x_p equals the augmented entry.
        let val = row.get(&ncols).cloned().unwrap_or_else(F::zero);
        x[p] = val;
    }
    Some(x)
}

/// Dense matrix inverse by Gauss-Jordan; `None` if singular.
/// `m` is row-major, `n x n`.
pub fn invert_dense<F: Field>(m: &[Vec<F>]) -> Option<Vec<Vec<F>>> {
    let n = m.len();
    let mut a: Vec<Vec<F>> = m.to_vec();
    let mut inv: Vec<Vec<F>> = (0..n)
        .map(|i| {
            let mut r = vec![F::zero(); n];
            r[i] = F::one();
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col].inv().ok()?;
        for j in 0..n {
            let t = a[col][j].clone() * d.clone();
            a[col][j] = t;
            let t = inv[col][j].clone() * d.clone();
            inv[col][j] = t;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let c = a[r][col].clone();
            for j in 0..n {
                let t = a[r][j].clone() - c.clone() * a[col][j].clone();
                a[r][j] = t;
                let t = inv[r][j].clone() - c.clone() * inv[col][j].clone();
                inv[r][j] = t;
            }
        }
    }
    Some(inv)
}

/// Signature (p - n) of a symmetric rational matrix by congruence
/// diagonalization (exact; no eigenvalues required).
pub fn signature_symmetric(m: &[Vec<Rat>]) -> Result<i64, ScalarError> {
    let n = m.len();
    for row in m {
        if row.len() != n {
            return Err(ScalarError::Encoding("matrix is not square".into()));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if m[i][j] != m[j][i] {
                return Err(ScalarError::Encoding("matrix is not symmetric".into()));
            }
        }
    }
    let mut a: Vec<Vec<Rat>> = m.to_vec();
    let mut sig = 0i64;
    let mut k = 0usize;
    while k < n {
        if a[k][k].is_zero() {
            // Find a usable diagonal or off-diagonal entry below.
            if let Some(r) = (k + 1..n).find(|&r| !a[r][r].is_zero()) {
                a.swap(k, r);
                for row in a.iter_mut() {
                    row.swap(k, r);
                }
            } else if let Some((r, c)) = (k..n)
                .flat_map(|r| (r + 1..n).map(move |c| (r, c)))
                .find(|&(r, c)| !a[r][c].is_zero())
            {
                // Congruence by adding row/col c to row/col r puts
                // 2*a[r][c] on the diagonal.
                for j in 0..n {
                    let t = a[r][j].clone() + a[c][j].clone();
                    a[r][j] = t;
                }
                for i in 0..n {
                    let t = a[i][r].clone() + a[i][c].clone();
                    a[i][r] = t;
                }
                a.swap(k, r);
                for row in a.iter_mut() {
                    row.swap(k, r);
                }
            } else {
                // Remaining block is zero.
                break;
            }
        }
        let d = a[k][k].clone();
        sig += if d > Rat::zero() { 1 } else { -1 };
        // Clear row/column k below the pivot by congruence.
        for r in k + 1..n {
            if a[r][k].is_zero() {
                continue;
            }
            let c = &a[r][k] / &d;
            for j in 0..n {
                let t = &a[k][j] * &c;
                a[r][j] -= t;
            }
            for i in 0..n {
                let t = &a[i][k] * &c;
                a[i][r] -= t;
            }
        }
        k += 1;
    }
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64) -> Rat {
        Rat::from(BigInt::from(n))
    }

    fn row(entries: &[(usize, i64)]) -> SparseVec<Rat> {
        entries.iter().map(|&(i, v)| (i, q(v))).collect()
    }

    #[test]
    fn rank_and_nullspace_basic() {
        // x + y + z = 0; x - z = 0  => nullspace span (1, -2, 1).
        let rows = vec![row(&[(0, 1), (1, 1), (2, 1)]), row(&[(0, 1), (2, -1)])];
        assert_eq!(rank(rows.clone()), 2);
        let ns = nullspace(rows, 3);
        assert_eq!(ns.len(), 1);
        let v = &ns[0];
        // Verify both equations.
        assert!((v[0].clone() + v[1].clone() + v[2].clone()).is_zero());
        assert!((v[0].clone() - v[2].clone()).is_zero());
        assert!(v.iter().any(|c| !c.is_zero()));
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let rows = vec![row(&[(0, 2), (1, 1)]), row(&[(0, 1), (1, 1)])];
        let x = solve(&rows, &[q(5), q(3)], 2).unwrap();
        assert_eq!(x, vec![q(2), q(1)]);

        let rows = vec![row(&[(0, 1), (1, 1)]), row(&[(0, 1), (1, 1)])];
        assert!(solve(&rows, &[q(1), q(2)], 2).is_none());

        // Underdetermined: any solution must satisfy the equation.
        let rows = vec![row(&[(0, 1), (1, 2), (2, 3)])];
        let x = solve(&rows, &[q(6)], 3).unwrap();
        let lhs = x[0].clone() + q(2) * x[1].clone() + q(3) * x[2].clone();
        assert_eq!(lhs, q(6));
    }

    #[test]
    fn dense_inverse_round_trip() {
        let m = vec![
            vec![q(2), q(1), q(0)],
            vec![q(1), q(1), q(1)],
            vec![q(0), q(3), q(1)],
        ];
        let inv = invert_dense(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = Rat::zero();
                for k in 0..3 {
                    s += &m[i][k] * &inv[k][j];
                }
                assert_eq!(s, if i == j { q(1) } else { q(0) });
            }
        }
        let sing = vec![vec![q(1), q(2)], vec![q(2), q(4)]];
        assert!(invert_dense(&sing).is_none());
    }

    #[test]
    fn signature_examples() {
        // diag(1, -1) has signature 0; diag(2, 3) has 2.
        assert_eq!(
            signature_symmetric(&[vec![q(1), q(0)], vec![q(0), q(-1)]]).unwrap(),
            0
        );
        assert_eq!(
            signature_symmetric(&[vec![q(2), q(0)], vec![q(0), q(3)]]).unwrap(),
            2
        );
        // Hyperbolic plane [[0,1],[1,0]]: signature 0.
        assert_eq!(
            signature_symmetric(&[vec![q(0), q(1)], vec![q(1), q(0)]]).unwrap(),
            0
        );
        // Hopf-link style [[0,1],[1,1]] ~ eigen signs (+,-)? det = -1 < 0,
        // trace 1: one positive, one negative => 0.
        assert_eq!(
            signature_symmetric(&[vec![q(0), q(1)], vec![q(1), q(1)]]).unwrap(),
            0
        );
        // +1-framed unknot.
        assert_eq!(signature_symmetric(&[vec![q(1)]]).unwrap(), 1);
        assert!(signature_symmetric(&[vec![q(0), q(1)], vec![q(2), q(0)]]).is_err());
    }

    #[test]
    fn reducer_matches_brute_force_on_random_matrices() {
        // Oracle: dense textbook elimination, written independently.
        fn dense_rank(mut m: Vec<Vec<Rat>>) -> usize {
            let rows = m.len();
            if rows == 0 {
                return 0;
            }
            let cols = m[0].len();
            let mut r = 0;
            for c in 0..cols {
                if r == rows {
                    break;
                }
                if let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) {
                    m.swap(r, p);
                    for i in 0..rows {
                        if i != r && !m[i][c].is_zero() {
                            let f = &m[i][c] / &m[r][c];
                            for j in 0..cols {
                                let t = &m[r][j] * &f;
                                m[i][j] -= t;
                            }
                        }
                    }
                    r += 1;
                }
            }
            r
        }

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let rows = rng.gen_range(1..7);
            let cols = rng.gen_range(1..7);
            let m: Vec<Vec<Rat>> = (0..rows)
                .map(|_| (0..cols).map(|_| q(rng.gen_range(-2..3))).collect())
                .collect();
            let sparse_rows: Vec<SparseVec<Rat>> =
                m.iter().map(|r| sv_from_dense(r)).collect();
            assert_eq!(rank(sparse_rows.clone()), dense_rank(m.clone()));
            // Every nullspace vector annihilates every row.
            for v in nullspace(sparse_rows, cols) {
                for r in &m {
                    let mut s = Rat::zero();
                    for (x, y) in r.iter().zip(&v) {
                        s += x * y;
                    }
                    assert!(s.is_zero());
                }
            }
        }
    }
}
