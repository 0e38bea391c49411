//! Exact feasibility of small linear systems over the nonnegative
//! rationals (two-phase simplex, phase one only, Bland's rule).

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Ge,
    Le,
}

/// A linear constraint `coeffs · x (cmp) rhs`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<i64>,
    pub cmp: Cmp,
    pub rhs: i64,
}

impl Constraint {
    pub fn new(coeffs: Vec<i64>, cmp: Cmp, rhs: i64) -> Self {
        Constraint { coeffs, cmp, rhs }
    }
}

fn q(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

/// Returns a rational point `x >= 0` satisfying every constraint, or `None`
/// if the system is infeasible.
pub fn feasible(nvars: usize, cons: &[Constraint]) -> Option<Vec<BigRational>> {
    let m = cons.len();
    let nslack = cons.iter().filter(|c| c.cmp != Cmp::Eq).count();
    // columns: original | slack | artificial | rhs
    let ncols = nvars + nslack + m;
    let mut tab: Vec<Vec<BigRational>> = Vec::with_capacity(m + 1);
    let mut basis = Vec::with_capacity(m);
    let mut s = nvars;
    for (i, c) in cons.iter().enumerate() {
        assert_eq!(c.coeffs.len(), nvars, "constraint width");
        let mut row = vec![BigRational::zero(); ncols + 1];
        for (j, &a) in c.coeffs.iter().enumerate() {
            row[j] = q(a);
        }
        match c.cmp {
            Cmp::Eq => {}
            Cmp::Ge => {
                row[s] = q(-1);
                s += 1;
            }
            Cmp::Le => {
                row[s] = q(1);
                s += 1;
            }
        }
        row[ncols] = q(c.rhs);
        if c.rhs < 0 {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        row[nvars + nslack + i] = BigRational::one();
        basis.push(nvars + nslack + i);
        tab.push(row);
    }
    // objective: minimise the sum of artificials, stored as reduced costs
    let mut obj = vec![BigRational::zero(); ncols + 1];
    for row in &tab {
        for (j, v) in row.iter().enumerate() {
            if j < nvars + nslack || j == ncols {
                obj[j] -= v;
            }
        }
    }
    loop {
        let Some(enter) = (0..ncols).find(|&j| obj[j].is_negative()) else { break };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if tab[i][enter].is_positive() {
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let a = &tab[i][ncols] / &tab[i][enter];
                        let b = &tab[l][ncols] / &tab[l][enter];
                        a < b || (a == b && basis[i] < basis[l])
                    }
                };
                if better {
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else { break };
        let piv = tab[l][enter].clone();
        for v in tab[l].iter_mut() {
            *v /= &piv;
        }
        let prow = tab[l].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != l && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= &f * p;
                }
            }
        }
        if !obj[enter].is_zero() {
            let f = obj[enter].clone();
            for (v, p) in obj.iter_mut().zip(&prow) {
                *v -= &f * p;
            }
        }
        basis[l] = enter;
    }
    if !obj[ncols].is_zero() {
        return None;
    }
    let mut x = vec![BigRational::zero(); nvars];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < nvars {
            x[bv] = tab[i][ncols].clone();
        }
    }
    Some(x)
}

/// Checks a candidate point against the constraints.
pub fn satisfies(x: &[BigRational], cons: &[Constraint]) -> bool {
    x.iter().all(|v| !v.is_negative())
        && cons.iter().all(|c| {
            let lhs: BigRational = c.coeffs.iter().zip(x).map(|(&a, v)| q(a) * v).sum();
            let r = q(c.rhs);
            match c.cmp {
                Cmp::Eq => lhs == r,
                Cmp::Ge => lhs >= r,
                Cmp::Le => lhs <= r,
            }
        })
}
