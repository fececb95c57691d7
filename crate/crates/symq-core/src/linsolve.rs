//! Exact linear solving: systems affine in designated unknowns, with
//! coefficients that are themselves expressions in the remaining variables.
//!
//! Elimination is deterministic (column order = unknown order, first nonzero
//! pivot), so repeated runs produce identical results. When every
//! coefficient is a constant the elimination runs on bare scalars instead of
//! full expressions; large ansatz systems hit that path.

use crate::expr::{collect_by, collect_coefficients, Expr, ExprError, VarCtx};
use crate::gaussian::GaussianRational;
use crate::poly::{Atom, VarId};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SolveStatus {
    /// Every unknown is pinned to a unique value.
    Unique,
    /// Solutions form an affine family over the `free` unknowns.
    Parametrized,
    /// No solution; `witness` holds a nonzero constant an elimination row
    /// reduced to.
    Inconsistent,
}

/// Outcome of `solve_linear`.
///
/// `assignments` maps each pivot unknown to an expression that may reference
/// the `free` unknowns; substituting any values for the free unknowns
/// satisfies the input system exactly.
#[derive(Clone, Debug)]
pub struct LinSolveResult {
    pub status: SolveStatus,
    pub assignments: Vec<(VarId, Expr)>,
    pub free: Vec<VarId>,
    pub witness: Option<Expr>,
}

/// Minimal field interface for the shared elimination core.
trait Scalar: Clone {
    fn is_zero(&self) -> bool;
    fn sub_mul(&self, factor: &Self, other: &Self) -> Self; // self - factor*other
    fn div(&self, by: &Self) -> Self;
}

impl Scalar for GaussianRational {
    fn is_zero(&self) -> bool {
        GaussianRational::is_zero(self)
    }
    fn sub_mul(&self, factor: &Self, other: &Self) -> Self {
        self - &(factor * other)
    }
    fn div(&self, by: &Self) -> Self {
        self / by
    }
}

impl Scalar for Expr {
    fn is_zero(&self) -> bool {
        Expr::is_zero(self)
    }
    fn sub_mul(&self, factor: &Self, other: &Self) -> Self {
        self - &(factor * other)
    }
    fn div(&self, by: &Self) -> Self {
        self.checked_div(by).expect("pivot is nonzero")
    }
}

/// Reduced row echelon form of an augmented matrix (`cols` unknown columns
/// plus one right-hand-side column). Returns the pivot columns in order.
fn rref<S: Scalar>(rows: &mut [Vec<S>], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        let Some(p) = (r..rows.len()).find(|&k| !rows[k][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r][col].clone();
        for v in rows[r].iter_mut() {
            *v = v.div(&pivot);
        }
        for k in 0..rows.len() {
            if k == r || rows[k][col].is_zero() {
                continue;
            }
            let factor = rows[k][col].clone();
            for c in 0..rows[k].len() {
                let updated = rows[k][c].sub_mul(&factor, &rows[r][c]);
                rows[k][c] = updated;
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

/// Solves a system of equations `e = 0`, each affine in the given unknowns
/// with expression coefficients.
///
/// Errors with `NotAffine` when an equation has quadratic (or higher)
/// dependence on the unknowns, or hides an unknown inside a log atom or a
/// denominator coefficient.
pub fn solve_linear(
    ctx: &VarCtx,
    eqs: &[Expr],
    unknowns: &[VarId],
) -> Result<LinSolveResult, ExprError> {
    let n = unknowns.len();
    let mut rows: Vec<Vec<Expr>> = Vec::with_capacity(eqs.len());
    for (k, eq) in eqs.iter().enumerate() {
        if eq.is_zero() {
            continue;
        }
        let groups = collect_coefficients(eq, unknowns).map_err(|e| match e {
            ExprError::NotPolynomial(d) => {
                ExprError::NotAffine(format!("equation {}: {}", k + 1, d))
            }
            other => other,
        })?;
        let mut row = vec![Expr::zero(); n + 1];
        for (mono, coeff) in groups {
            if mono.total_degree() > 1 {
                return Err(ExprError::NotAffine(format!(
                    "equation {} contains the unknown monomial {}",
                    k + 1,
                    mono
                )));
            }
            for u in unknowns {
                if !coeff.free_of(*u) {
                    return Err(ExprError::NotAffine(format!(
                        "equation {}: a coefficient depends on {}",
                        k + 1,
                        ctx.name(*u)
                    )));
                }
            }
            if mono.is_one() {
                row[n] = -&coeff; // constant part moves to the right-hand side
            } else {
                let (atom, _) = &mono.factors()[0];
                let id = atom.var_id().expect("kept atoms are named variables");
                let col = unknowns.iter().position(|u| *u == id).expect("kept var");
                row[col] = coeff;
            }
        }
        rows.push(row);
    }

    // Scalar fast path when no coefficient mentions any other variable.
    let pivots = if rows
        .iter()
        .all(|row| row.iter().all(|e| e.is_constant()))
    {
        let mut srows: Vec<Vec<GaussianRational>> = rows
            .iter()
            .map(|row| row.iter().map(|e| e.as_constant().expect("constant")).collect())
            .collect();
        let pivots = rref(&mut srows, n);
        for (row, srow) in rows.iter_mut().zip(srows) {
            *row = srow.into_iter().map(Expr::constant).collect();
        }
        pivots
    } else {
        rref(&mut rows, n)
    };

    // Inconsistency: a row with zero unknown part but nonzero right side.
    for row in &rows {
        if row[..n].iter().all(|e| e.is_zero()) && !row[n].is_zero() {
            return Ok(LinSolveResult {
                status: SolveStatus::Inconsistent,
                assignments: Vec::new(),
                free: Vec::new(),
                witness: Some(row[n].clone()),
            });
        }
    }

    let free: Vec<VarId> = (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|c| unknowns[c])
        .collect();
    let mut assignments = Vec::with_capacity(pivots.len());
    for (r, &col) in pivots.iter().enumerate() {
        let mut value = rows[r][n].clone();
        for c in 0..n {
            if c != col && !rows[r][c].is_zero() {
                let contribution = &rows[r][c] * &Expr::var(ctx, unknowns[c]);
                value = &value - &contribution;
            }
        }
        assignments.push((unknowns[col], value));
    }
    let status = if free.is_empty() {
        SolveStatus::Unique
    } else {
        SolveStatus::Parametrized
    };
    Ok(LinSolveResult {
        status,
        assignments,
        free,
        witness: None,
    })
}

impl LinSolveResult {
    /// Full valuation of every unknown given values for the free unknowns.
    /// Free unknowns missing from `free_values` default to zero.
    pub fn valuation(
        &self,
        free_values: &[(VarId, Expr)],
    ) -> Result<Vec<(VarId, Expr)>, ExprError> {
        let mut subs: Vec<(VarId, Expr)> = self
            .free
            .iter()
            .map(|f| {
                let val = free_values
                    .iter()
                    .find(|(v, _)| v == f)
                    .map(|(_, e)| e.clone())
                    .unwrap_or_else(Expr::zero);
                (*f, val)
            })
            .collect();
        for (pivot, expr) in &self.assignments {
            let value = expr.substitute(&subs)?;
            subs.push((*pivot, value));
        }
        Ok(subs)
    }

    /// One valuation per free unknown (that unknown 1, the rest 0): for a
    /// homogeneous system this spans the solution space.
    pub fn basis_valuations(&self) -> Result<Vec<Vec<(VarId, Expr)>>, ExprError> {
        self.free
            .iter()
            .map(|f| self.valuation(&[(*f, Expr::one())]))
            .collect()
    }
}

/// Reduced row echelon form of a matrix of constants; returns the rank.
/// Afterwards the first `rank` rows are the canonical basis of the row
/// space and the remaining rows are zero. Used to canonicalize bases of
/// solution spaces.
pub fn rref_constant_rows(rows: &mut [Vec<GaussianRational>]) -> usize {
    let cols = rows.first().map(|r| r.len()).unwrap_or(0);
    rref(rows, cols).len()
}

/// Conditions forcing `e ≡ 0` as a function of everything except `params`:
/// the numerator is collected over all non-parameter atoms, and each
/// coefficient (affine in the parameters) must vanish.
///
/// Requires the denominator to be free of the parameters and no parameter to
/// occur inside a log argument; both are rejected with `NotAffine`.
pub fn vanishing_conditions(e: &Expr, params: &[VarId]) -> Result<Vec<Expr>, ExprError> {
    let den = Expr::from_poly(e.den_poly().clone());
    for p in params {
        if !den.free_of(*p) {
            return Err(ExprError::NotAffine(format!(
                "denominator {} depends on a parameter",
                den
            )));
        }
    }
    let num = Expr::from_poly(e.num_poly().clone());
    for atom in num.atoms() {
        if let Some(arg) = atom.log_arg() {
            if params.iter().any(|p| !arg.free_of(*p)) {
                return Err(ExprError::NotAffine(format!(
                    "parameter occurs inside {}",
                    atom
                )));
            }
        }
    }
    let groups = collect_by(&num, &|a: &Atom| match a {
        Atom::Var { id, .. } => !params.contains(id),
        Atom::Log(_) => true,
    })?;
    Ok(groups
        .into_iter()
        .map(|(_, c)| c)
        .filter(|c| !c.is_zero())
        .collect())
}
