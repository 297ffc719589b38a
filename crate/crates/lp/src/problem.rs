use std::fmt::Write as _;

use thiserror::Error;

use crate::scalar::Scalar;

/// Sense of a linear constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable<T> {
    pub lower: T,
    pub upper: T,
    pub cost: T,
    pub integer: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<(usize, T)>,
    pub sense: RowSense,
    pub rhs: T,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable {0}: lower bound exceeds upper bound")]
    InvertedBounds(usize),
    #[error("variable {0}: both bounds are infinite")]
    FreeVariable(usize),
    #[error("variable {0}: cost or bound is NaN")]
    NotANumber(usize),
    #[error("row {row}: references unknown variable {var}")]
    UnknownVariable { row: usize, var: usize },
    #[error("row {0}: non-finite coefficient or right-hand side")]
    NonFiniteRow(usize),
}

/// A minimization problem `min c'x` subject to rows and variable bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T = f64> {
    vars: Vec<Variable<T>>,
    rows: Vec<Constraint<T>>,
}

impl<T: Scalar> Default for LinearProgram<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new() -> Self {
        Self {
            vars: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Adds a continuous variable and returns its index.
    pub fn add_var(&mut self, lower: T, upper: T, cost: T) -> usize {
        self.vars.push(Variable {
            lower,
            upper,
            cost,
            integer: false,
        });
        self.vars.len() - 1
    }

    /// Adds an integer variable and returns its index.
    pub fn add_int_var(&mut self, lower: T, upper: T, cost: T) -> usize {
        let j = self.add_var(lower, upper, cost);
        self.vars[j].integer = true;
        j
    }

    /// Adds a row. Repeated indices are summed and zero coefficients dropped.
    pub fn add_row<I>(&mut self, coeffs: I, sense: RowSense, rhs: T) -> usize
    where
        I: IntoIterator<Item = (usize, T)>,
    {
        let mut merged: Vec<(usize, T)> = coeffs.into_iter().collect();
        merged.sort_by_key(|&(j, _)| j);
        let mut out: Vec<(usize, T)> = Vec::with_capacity(merged.len());
        for (j, a) in merged {
            match out.last_mut() {
                Some((lj, la)) if *lj == j => *la += a,
                _ => out.push((j, a)),
            }
        }
        out.retain(|&(_, a)| a != T::zero());
        self.rows.push(Constraint {
            coeffs: out,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    /// Adds `a` to the coefficient of variable `j` in row `i`.
    pub fn add_coeff(&mut self, i: usize, j: usize, a: T) {
        let coeffs = &mut self.rows[i].coeffs;
        match coeffs.binary_search_by_key(&j, |&(v, _)| v) {
            Ok(p) => {
                coeffs[p].1 += a;
                if coeffs[p].1 == T::zero() {
                    coeffs.remove(p);
                }
            }
            Err(p) => {
                if a != T::zero() {
                    coeffs.insert(p, (j, a));
                }
            }
        }
    }

    pub fn set_bounds(&mut self, j: usize, lower: T, upper: T) {
        self.vars[j].lower = lower;
        self.vars[j].upper = upper;
    }

    pub fn set_cost(&mut self, j: usize, cost: T) {
        self.vars[j].cost = cost;
    }

    pub fn set_integer(&mut self, j: usize, integer: bool) {
        self.vars[j].integer = integer;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var(&self, j: usize) -> &Variable<T> {
        &self.vars[j]
    }

    pub fn row(&self, i: usize) -> &Constraint<T> {
        &self.rows[i]
    }

    pub fn vars(&self) -> &[Variable<T>] {
        &self.vars
    }

    pub fn rows(&self) -> &[Constraint<T>] {
        &self.rows
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.vars
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (v, &xj)| acc + v.cost * xj)
    }

    pub fn row_activity(&self, i: usize, x: &[T]) -> T {
        self.rows[i]
            .coeffs
            .iter()
            .fold(T::zero(), |acc, &(j, a)| acc + a * x[j])
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for (v, &xj) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xj).max(xj - v.upper);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let act = self.row_activity(i, x);
            let viol = match row.sense {
                RowSense::Le => act - row.rhs,
                RowSense::Ge => row.rhs - act,
                RowSense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || !v.cost.is_finite() {
                return Err(LpError::NotANumber(j));
            }
            if v.lower > v.upper {
                return Err(LpError::InvertedBounds(j));
            }
            if !v.lower.is_finite() && !v.upper.is_finite() {
                return Err(LpError::FreeVariable(j));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFiniteRow(i));
            }
            for &(j, a) in &row.coeffs {
                if j >= self.vars.len() {
                    return Err(LpError::UnknownVariable { row: i, var: j });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFiniteRow(i));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump in a CPLEX-LP-like layout, for debugging.
    pub fn to_lp_string(&self) -> String {
        let mut s = String::from("Minimize\n obj:");
        for (j, v) in self.vars.iter().enumerate() {
            if v.cost != T::zero() {
                let _ = write!(s, " {:+} x{}", v.cost, j);
            }
        }
        s.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(s, " r{}:", i);
            for &(j, a) in &row.coeffs {
                let _ = write!(s, " {:+} x{}", a, j);
            }
            let op = match row.sense {
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
                RowSense::Eq => "=",
            };
            let _ = writeln!(s, " {} {}", op, row.rhs);
        }
        s.push_str("Bounds\n");
        for (j, v) in self.vars.iter().enumerate() {
            let _ = writeln!(s, " {} <= x{} <= {}", v.lower, j, v.upper);
        }
        let ints: Vec<String> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.integer)
            .map(|(j, _)| format!("x{}", j))
            .collect();
        if !ints.is_empty() {
            let _ = writeln!(s, "General\n {}", ints.join(" "));
        }
        s.push_str("End\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_row_merges_duplicates_and_drops_zeros() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var(0.0, 1.0, 1.0);
        let y = lp.add_var(0.0, 1.0, 1.0);
        lp.add_row([(y, 2.0), (x, 1.0), (y, -2.0), (x, 0.5)], RowSense::Le, 3.0);
        assert_eq!(lp.row(0).coeffs, vec![(x, 1.5)]);
    }

    #[test]
    fn validation_rejects_free_and_inverted() {
        let mut lp = LinearProgram::<f64>::new();
        lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        assert_eq!(lp.validate(), Err(LpError::FreeVariable(0)));
        let mut lp = LinearProgram::<f64>::new();
        lp.add_var(2.0, 1.0, 0.0);
        assert_eq!(lp.validate(), Err(LpError::InvertedBounds(0)));
        let mut lp = LinearProgram::<f64>::new();
        lp.add_var(0.0, 1.0, 0.0);
        lp.add_row([(3, 1.0)], RowSense::Le, 1.0);
        assert!(matches!(lp.validate(), Err(LpError::UnknownVariable { .. })));
    }

    #[test]
    fn violation_measures_rows_and_bounds() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var(0.0, 2.0, 1.0);
        lp.add_row([(x, 1.0)], RowSense::Ge, 1.5);
        assert_eq!(lp.max_violation(&[1.0]), 0.5);
        assert_eq!(lp.max_violation(&[3.0]), 1.0);
        assert!(lp.to_lp_string().contains(">= 1.5"));
    }
}
