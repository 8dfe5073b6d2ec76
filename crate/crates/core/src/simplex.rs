//! Exact feasibility solver for small linear systems.
//!
//! Phase-1 simplex over arbitrary-precision rationals with Bland's rule, so
//! the answer is a certificate, not a tolerance call. Problems here stay at
//! tens of variables; the tableau is dense.

use num_traits::{Signed, Zero};

use crate::model::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// One constraint row: sparse coefficients over variable indices.
#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<(usize, Rat)>,
    pub sense: Sense,
    pub rhs: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimplexError {
    /// A rational in the tableau outgrew the configured bit bound.
    NumericOverflow,
}

impl std::fmt::Display for SimplexError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimplexError::NumericOverflow => write!(f, "rational magnitude exceeded bit bound"),
        }
    }
}

impl std::error::Error for SimplexError {}

/// Default cap on numerator/denominator bit length during pivoting.
pub const DEFAULT_BIT_BOUND: u64 = 65536;

/// Decides feasibility of `{ x >= 0 : rows hold }` exactly. On success the
/// witness satisfies every row under rational arithmetic.
pub fn feasible_point(
    num_vars: usize,
    rows: &[Row],
    bit_bound: u64,
) -> Result<Option<Vec<Rat>>, SimplexError> {
    let m = rows.len();
    if m == 0 {
        return Ok(Some(vec![Rat::zero(); num_vars]));
    }

    // Normalize to rhs >= 0, then add slack/surplus and artificial columns.
    let mut senses: Vec<Sense> = Vec::with_capacity(m);
    let mut dense: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut rhs: Vec<Rat> = Vec::with_capacity(m);
    for row in rows {
        let mut coeffs = vec![Rat::zero(); num_vars];
        for (col, c) in &row.coeffs {
            assert!(*col < num_vars, "coefficient column out of range");
            coeffs[*col] += c.clone();
        }
        if row.rhs.is_negative() {
            for c in &mut coeffs {
                *c = -c.clone();
            }
            rhs.push(-row.rhs.clone());
            senses.push(match row.sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            });
        } else {
            rhs.push(row.rhs.clone());
            senses.push(row.sense);
        }
        dense.push(coeffs);
    }

    let n_slack = senses.iter().filter(|s| !matches!(s, Sense::Eq)).count();
    let n_art = senses.iter().filter(|s| !matches!(s, Sense::Le)).count();
    let total = num_vars + n_slack + n_art;

    // tableau[r] = coefficients ++ [rhs]
    let mut tab: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut slack_at = num_vars;
    let mut art_at = num_vars + n_slack;
    let mut art_cols: Vec<usize> = Vec::new();
    for r in 0..m {
        let mut trow = vec![Rat::zero(); total + 1];
        trow[..num_vars].clone_from_slice(&dense[r]);
        trow[total] = rhs[r].clone();
        match senses[r] {
            Sense::Le => {
                trow[slack_at] = Rat::from_integer(1.into());
                basis.push(slack_at);
                slack_at += 1;
            }
            Sense::Ge => {
                trow[slack_at] = Rat::from_integer((-1).into());
                slack_at += 1;
                trow[art_at] = Rat::from_integer(1.into());
                basis.push(art_at);
                art_cols.push(art_at);
                art_at += 1;
            }
            Sense::Eq => {
                trow[art_at] = Rat::from_integer(1.into());
                basis.push(art_at);
                art_cols.push(art_at);
                art_at += 1;
            }
        }
        tab.push(trow);
    }

    // Phase-1 objective row: minimize the sum of artificials. With the
    // artificials basic, the reduced-cost row is the negated sum of their
    // rows over non-artificial columns; obj[total] tracks the current sum.
    let mut obj = vec![Rat::zero(); total + 1];
    for (r, b) in basis.iter().enumerate() {
        if art_cols.contains(b) {
            for c in 0..=total {
                let v = tab[r][c].clone();
                obj[c] -= v;
            }
        }
    }
    for &a in &art_cols {
        obj[a] = Rat::zero();
    }

    loop {
        // Bland: entering = smallest column with negative reduced cost.
        let entering = (0..total).find(|&c| obj[c].is_negative());
        let Some(col) = entering else { break };
        // Ratio test; Bland tie-break on the smallest basis variable.
        let mut pivot: Option<(usize, Rat)> = None;
        for r in 0..m {
            if tab[r][col].is_positive() {
                let ratio = &tab[r][total] / &tab[r][col];
                let better = match &pivot {
                    None => true,
                    Some((pr, prat)) => {
                        ratio < *prat || (ratio == *prat && basis[r] < basis[*pr])
                    }
                };
                if better {
                    pivot = Some((r, ratio));
                }
            }
        }
        let Some((prow, _)) = pivot else {
            // Unbounded phase-1 cannot happen (objective bounded below by 0);
            // defend anyway.
            break;
        };

        let piv = tab[prow][col].clone();
        if bits_of(&piv) > bit_bound {
            return Err(SimplexError::NumericOverflow);
        }
        for c in 0..=total {
            let v = &tab[prow][c] / &piv;
            tab[prow][c] = v;
        }
        for r in 0..m {
            if r != prow && !tab[r][col].is_zero() {
                let factor = tab[r][col].clone();
                for c in 0..=total {
                    let delta = &factor * &tab[prow][c];
                    tab[r][c] -= delta;
                }
            }
        }
        if !obj[col].is_zero() {
            let factor = obj[col].clone();
            for c in 0..=total {
                let delta = &factor * &tab[prow][c];
                obj[c] -= delta;
            }
        }
        basis[prow] = col;
        if bits_of(&tab[prow][total]) > bit_bound {
            return Err(SimplexError::NumericOverflow);
        }
    }

    // Remaining artificial mass decides feasibility. obj[total] holds the
    // negated current objective value.
    let artificial_mass = -obj[total].clone();
    if !artificial_mass.is_zero() {
        return Ok(None);
    }

    let mut x = vec![Rat::zero(); num_vars];
    for (r, &b) in basis.iter().enumerate() {
        if b < num_vars {
            x[b] = tab[r][total].clone();
        }
    }

    // The witness must satisfy the original system exactly.
    for row in rows {
        let lhs: Rat = row
            .coeffs
            .iter()
            .map(|(col, c)| c * &x[*col])
            .fold(Rat::zero(), |acc, v| acc + v);
        let ok = match row.sense {
            Sense::Le => lhs <= row.rhs,
            Sense::Eq => lhs == row.rhs,
            Sense::Ge => lhs >= row.rhs,
        };
        assert!(ok, "simplex witness violates a row");
    }
    Ok(Some(x))
}

fn bits_of(r: &Rat) -> u64 {
    r.numer().bits() + r.denom().bits()
}
