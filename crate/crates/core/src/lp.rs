//! Dense two-phase simplex over exact rationals.
//!
//! All variables are nonnegative. Pivoting follows Bland's rule (lowest
//! eligible column enters, ratio ties leave by lowest basic column), so runs
//! are deterministic and terminate on degenerate problems.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<Rational>,
    pub objective: Rational,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpStatus {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpStatus::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<Rational>) -> Self {
        Self {
            sense,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(
        &mut self,
        terms: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) {
        debug_assert!(terms.iter().all(|(j, _)| *j < self.num_vars()));
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> LpStatus {
        Tableau::build(self).solve(self)
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    n_struct: usize,
    first_artificial: usize,
    width: usize,
    pivots: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.constraints.len();
        // Normalize to nonnegative right-hand sides.
        let normalized: Vec<(Vec<Rational>, Relation, Rational)> = lp
            .constraints
            .iter()
            .map(|c| {
                let mut dense = vec![Rational::zero(); n];
                for (j, a) in &c.terms {
                    dense[*j] += a;
                }
                if c.rhs.is_negative() {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (
                        dense.into_iter().map(|a| -a).collect(),
                        flipped,
                        -c.rhs.clone(),
                    )
                } else {
                    (dense, c.relation, c.rhs.clone())
                }
            })
            .collect();
        let n_slack = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Eq)
            .count();
        let n_art = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Le)
            .count();
        let first_artificial = n + n_slack;
        let width = first_artificial + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut slack, mut art) = (n, first_artificial);
        for (dense, relation, b) in normalized {
            let mut row = dense;
            row.resize(width, Rational::zero());
            match relation {
                Relation::Le => {
                    row[slack] = Rational::one();
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -Rational::one();
                    slack += 1;
                    row[art] = Rational::one();
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = Rational::one();
                    basis.push(art);
                    art += 1;
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        Self {
            rows,
            rhs,
            basis,
            n_struct: n,
            first_artificial,
            width,
            pivots: 0,
        }
    }

    fn solve(mut self, lp: &LinearProgram) -> LpStatus {
        if self.first_artificial < self.width {
            let mut cost = vec![Rational::zero(); self.width];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = -Rational::one();
            }
            let allowed = vec![true; self.width];
            // Phase one is bounded by zero, so it always reaches optimality.
            let _ = self.optimize(&cost, &allowed);
            let infeasibility: Rational = self
                .basis
                .iter()
                .zip(&self.rhs)
                .filter(|(j, _)| **j >= self.first_artificial)
                .map(|(_, b)| b.clone())
                .sum();
            if infeasibility.is_positive() {
                return LpStatus::Infeasible;
            }
            self.drive_out_artificials();
        }

        let mut cost = vec![Rational::zero(); self.width];
        for (j, c) in lp.objective.iter().enumerate() {
            cost[j] = match lp.sense {
                Sense::Maximize => c.clone(),
                Sense::Minimize => -c.clone(),
            };
        }
        let allowed: Vec<bool> = (0..self.width).map(|j| j < self.first_artificial).collect();
        if let Phase::Unbounded = self.optimize(&cost, &allowed) {
            return LpStatus::Unbounded;
        }

        let mut values = vec![Rational::zero(); self.n_struct];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.n_struct {
                values[j] = self.rhs[i].clone();
            }
        }
        let objective = values
            .iter()
            .zip(&lp.objective)
            .filter(|(x, _)| !x.is_zero())
            .map(|(x, c)| x * c)
            .sum();
        LpStatus::Optimal(LpSolution {
            values,
            objective,
            pivots: self.pivots,
        })
    }

    /// Pivots zero-valued artificial variables out of the basis, dropping rows
    /// that turn out to be redundant.
    fn drive_out_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                let entering = (0..self.first_artificial).find(|&j| !self.rows[i][j].is_zero());
                match entering {
                    Some(j) => self.pivot(i, j, None),
                    None => {
                        self.rows.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    fn optimize(&mut self, cost: &[Rational], allowed: &[bool]) -> Phase {
        // Reduced costs d_j = c_j - sum_i c_{B_i} a_ij.
        let mut reduced: Vec<Rational> = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for (j, a) in self.rows[i].iter().enumerate() {
                if !a.is_zero() {
                    reduced[j] -= &cost[b] * a;
                }
            }
        }
        loop {
            let Some(entering) = (0..self.width).find(|&j| allowed[j] && reduced[j].is_positive())
            else {
                return Phase::Optimal;
            };
            let mut leaving: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][entering];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leaving {
                    None => true,
                    Some((r, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*r])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
            let Some((row, _)) = leaving else {
                return Phase::Unbounded;
            };
            self.pivot(row, entering, Some(&mut reduced));
        }
    }

    fn pivot(&mut self, row: usize, col: usize, reduced: Option<&mut Vec<Rational>>) {
        self.pivots += 1;
        let inv = Rational::one() / &self.rows[row][col];
        for a in self.rows[row].iter_mut() {
            if !a.is_zero() {
                *a *= &inv;
            }
        }
        self.rhs[row] *= &inv;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        let support: Vec<usize> = (0..self.width)
            .filter(|&j| !pivot_row[j].is_zero())
            .collect();
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let factor = self.rows[i][col].clone();
            for &j in &support {
                let delta = &factor * &pivot_row[j];
                self.rows[i][j] -= delta;
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        if let Some(reduced) = reduced {
            if !reduced[col].is_zero() {
                let factor = reduced[col].clone();
                for &j in &support {
                    let delta = &factor * &pivot_row[j];
                    reduced[j] -= delta;
                }
            }
        }
        self.basis[row] = col;
    }
}
