//! Dense Gauss-Jordan elimination over exact scalars, and exact policy
//! evaluation `ν^d = (1 - λP_d)^{-1} r^d` built on it.

use crate::error::{MdpError, Result};
use crate::model::{DecisionRule, ExplicitMdp, Mode};
use crate::numerics::{Scalar, ValueFunction};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseMatrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(MdpError::Dimension {
                expected: n,
                found: bad.len(),
            });
        }
        Ok(DenseMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// The transition matrix `P_d`.
    pub fn transition(m: &ExplicitMdp<S>, d: &DecisionRule) -> Result<Self> {
        d.check(m)?;
        let n = m.n_states();
        let mut p = Self::zeros(n);
        for s in 0..n {
            for (t, prob) in m.actions(s)[&d[s]].transition.iter() {
                p.data[s * n + t] = prob.clone();
            }
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut S {
        &mut self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn scale(&self, k: &S) -> Self {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().map(|x| x.clone() * k).collect(),
        }
    }

    /// `self - other`; both must have the same dimension.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        DenseMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(MdpError::Dimension {
                expected: self.n,
                found: other.n,
            });
        }
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let prod = a.clone() * other.get(k, j);
                    let cell = &mut out.data[i * n + j];
                    *cell = cell.clone() + prod;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &ValueFunction<S>) -> Result<ValueFunction<S>> {
        if x.len() != self.n {
            return Err(MdpError::Dimension {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok((0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x.iter())
                    .filter(|(a, _)| !a.is_zero())
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b)
            })
            .collect())
    }

    /// Coordinates of the first negative entry in row-major order.
    pub fn first_negative(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(Scalar::is_negative)
            .map(|k| (k / self.n, k % self.n))
    }

    /// Exact inverse by Gauss-Jordan on `[A | I]`.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let identity = Self::identity(n);
        let rows: Vec<Vec<S>> = (0..n)
            .map(|i| self.row(i).iter().chain(identity.row(i)).cloned().collect())
            .collect();
        let reduced = eliminate(rows, n)?;
        Self::from_rows(reduced.into_iter().map(|r| r[n..].to_vec()).collect())
    }
}

fn require_exact<S: Scalar>(what: &str) -> Result<()> {
    if S::is_exact() {
        Ok(())
    } else {
        Err(MdpError::UnsupportedBackend(format!(
            "{what} requires exact backend"
        )))
    }
}

/// Reduces the left `n` columns of an augmented system to the identity.
///
/// The pivot is the first row (from the diagonal down) with a nonzero entry
/// in the column; exact arithmetic needs no magnitude pivoting.
fn eliminate<S: Scalar>(mut rows: Vec<Vec<S>>, n: usize) -> Result<Vec<Vec<S>>> {
    for col in 0..n {
        let pivot_row = (col..n)
            .find(|&r| !rows[r][col].is_zero())
            .ok_or(MdpError::Singular { column: col })?;
        rows.swap(col, pivot_row);
        let pivot = rows[col][col].clone();
        if pivot != S::one() {
            for x in rows[col].iter_mut().skip(col) {
                *x = x.checked_div(&pivot)?;
            }
        }
        let (before, rest) = rows.split_at_mut(col);
        let (pivot_slice, after) = rest.split_first_mut().expect("col < n");
        for row in before.iter_mut().chain(after.iter_mut()) {
            let factor = row[col].clone();
            if factor.is_zero() {
                continue;
            }
            for (x, p) in row.iter_mut().zip(pivot_slice.iter()).skip(col) {
                if !p.is_zero() {
                    *x = x.clone() - factor.clone() * p;
                }
            }
        }
    }
    Ok(rows)
}

/// Solves `A·x = b` exactly.
pub fn gauss_jordan_solve<S: Scalar>(a: &DenseMatrix<S>, b: &ValueFunction<S>) -> Result<ValueFunction<S>> {
    require_exact::<S>("Gauss-Jordan elimination")?;
    let n = a.dim();
    if b.len() != n {
        return Err(MdpError::Dimension {
            expected: n,
            found: b.len(),
        });
    }
    let rows: Vec<Vec<S>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i].clone());
            r
        })
        .collect();
    Ok(eliminate(rows, n)?.into_iter().map(|mut r| r.swap_remove(n)).collect())
}

/// `ν^d`, the exact value of following `d` forever.
pub fn policy_value_exact<S: Scalar>(m: &ExplicitMdp<S>, d: &DecisionRule) -> Result<ValueFunction<S>> {
    require_exact::<S>("exact policy evaluation")?;
    m.validate(Mode::Infinite)?;
    policy_value_unchecked(m, d)
}

/// `policy_value_exact` without re-validating the MDP.
pub(crate) fn policy_value_unchecked<S: Scalar>(
    m: &ExplicitMdp<S>,
    d: &DecisionRule,
) -> Result<ValueFunction<S>> {
    let n = m.n_states();
    let system = DenseMatrix::identity(n).sub(&DenseMatrix::transition(m, d)?.scale(m.discount()));
    let rewards = m.reward_vector(d)?;
    gauss_jordan_solve(&system, &rewards).map_err(|e| match e {
        // I - λP is strictly diagonally dominant for λ < 1
        MdpError::Singular { column } => MdpError::Domain(format!(
            "internal invariant violated: I - λP_d singular at column {column}"
        )),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::bellman_rule;
    use crate::fixtures;
    use crate::numerics::{sup_dist, Float, Rational};
    use proptest::prelude::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::from_ratio(p, d).unwrap()
    }

    #[test]
    fn identity_and_diagonal_solves() {
        let b: ValueFunction<Rational> = [q(3, 1), q(-1, 7)].into_iter().collect();
        assert_eq!(gauss_jordan_solve(&DenseMatrix::identity(2), &b).unwrap(), b);
        let a = DenseMatrix::from_rows(vec![vec![q(2, 1), q(0, 1)], vec![q(0, 1), q(4, 1)]]).unwrap();
        let ones = ValueFunction::constant(2, q(1, 1));
        assert_eq!(
            gauss_jordan_solve(&a, &ones).unwrap(),
            [q(1, 2), q(1, 4)].into_iter().collect()
        );
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DenseMatrix::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]]).unwrap();
        assert_eq!(
            gauss_jordan_solve(&a, &ValueFunction::zeros(2)).unwrap_err(),
            MdpError::Singular { column: 1 }
        );
    }

    #[test]
    fn pivot_requires_row_swap() {
        let a = DenseMatrix::from_rows(vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]]).unwrap();
        let b: ValueFunction<Rational> = [q(5, 1), q(6, 1)].into_iter().collect();
        assert_eq!(
            gauss_jordan_solve(&a, &b).unwrap(),
            [q(6, 1), q(5, 1)].into_iter().collect()
        );
        assert_eq!(a.inverse().unwrap(), a);
    }

    #[test]
    fn policy_value_examples() {
        let m = fixtures::self_loop::<Rational>();
        let v = policy_value_exact(&m, &DecisionRule::new(vec![0])).unwrap();
        assert_eq!(v, ValueFunction::new(vec![q(2, 1)]));

        let m = fixtures::chain_reward_then_absorb::<Rational>();
        let v = policy_value_exact(&m, &DecisionRule::new(vec![0, 0])).unwrap();
        assert_eq!(v, ValueFunction::new(vec![q(1, 1), q(0, 1)]));
    }

    #[test]
    fn float_backend_is_refused() {
        let m = fixtures::self_loop::<Float>();
        assert!(matches!(
            policy_value_exact(&m, &DecisionRule::new(vec![0])),
            Err(MdpError::UnsupportedBackend(_))
        ));
        assert!(matches!(
            gauss_jordan_solve(&DenseMatrix::<Float>::identity(1), &ValueFunction::zeros(1)),
            Err(MdpError::UnsupportedBackend(_))
        ));
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-20i64..20, 1i64..9).prop_map(|(p, d)| q(p, d))
    }

    proptest! {
        #[test]
        fn random_solves_multiply_back(
            entries in proptest::collection::vec(small_rational(), 25),
            rhs in proptest::collection::vec(small_rational(), 5),
        ) {
            let rows: Vec<Vec<Rational>> = entries.chunks(5).map(<[Rational]>::to_vec).collect();
            let a = DenseMatrix::from_rows(rows).unwrap();
            let b = ValueFunction::new(rhs);
            match gauss_jordan_solve(&a, &b) {
                Ok(x) => prop_assert_eq!(a.mul_vec(&x).unwrap(), b),
                // random integer-ish matrices are rarely singular; check it really is
                Err(MdpError::Singular { .. }) => prop_assert!(a.inverse().is_err()),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }

        #[test]
        fn policy_value_has_zero_residual(seed in any::<u64>()) {
            let m = crate::generate::random_mdp::<Rational>(4, seed, q(9, 10)).unwrap();
            let d = DecisionRule::first_enabled(&m);
            let v = policy_value_exact(&m, &d).unwrap();
            prop_assert!(sup_dist(&bellman_rule(&m, &d, &v).unwrap(), &v).unwrap().is_zero());
            let rmax = m.states().iter().flat_map(|a| a.values()).map(|e| e.reward.abs()).max().unwrap();
            let bound = rmax.checked_div(&(q(1, 1) - m.discount())).unwrap();
            prop_assert!(v.sup_norm() <= bound);
        }
    }
}
