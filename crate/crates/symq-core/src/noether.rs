//! Noether point symmetries of a Lagrangian and their first integrals.
//!
//! A point symmetry `X = V ∂t + G ∂q` is a Noether symmetry of `L` when
//! `X^{(1)}(L) + L·Dt(V) = Dt(g)` for some gauge function `g(t, q)`. The
//! left side (the invariance defect) must therefore be affine in `q̇` with
//! integrable coefficients; both the test and the gauge itself are computed
//! constructively, with no ansatz. The associated first integral is
//! `I = (q̇ V - G)·∂L/∂q̇ - V·L + g`, conserved on solutions.
//!
//! For a whole symmetry basis, the Noether condition is linear in the
//! combination coefficients, so the admissible directions form a subspace;
//! `noether_analysis` returns its dimension and a row-echelon-canonical
//! basis with certificates (gauge + verified first integral) for each
//! direction.

use crate::expr::{collect_by, Expr, ExprError, VarCtx, VarRole};
use crate::gaussian::GaussianRational;
use crate::integrate::{integrate_power, upoly_divmod, upoly_is_zero};
use crate::linsolve::{
    rref_constant_rows, solve_linear, vanishing_conditions, SolveStatus,
};
use crate::multiplier::constant_ratio;
use crate::ode::{prolong, DtMode, Ode2, PointSymmetry};
use crate::poly::Atom;

/// `X^{(1)}(L) + L·Dt(V)`: zero gauge invariance defect. `X` is a Noether
/// symmetry exactly when this equals `Dt(g)` for some point function `g`.
pub fn invariance_defect(ode: &Ode2, l: &Expr, sym: &PointSymmetry) -> Expr {
    let pr = prolong(ode, sym);
    let mut r = &pr.v * &l.diff(ode.t);
    r = &r + &(&pr.g * &l.diff(ode.q));
    r = &r + &(&pr.eta1 * &l.diff(ode.qd));
    // V is a point function, so the mode of the total derivative is moot.
    &r + &(l * &ode.total_derivative(&sym.v, DtMode::OnShell))
}

/// Splits `r` as `A(t,q) + B(t,q)·q̇ + (obstructions)`: polynomial division
/// in `q̇` plus separation of any `q̇`-dependent log atoms. The expression is
/// a total derivative of a point function only if every obstruction
/// vanishes and `(A, B)` is integrable.
fn affine_split(ode: &Ode2, r: &Expr) -> Result<(Expr, Expr, Vec<Expr>), ExprError> {
    for atom in r.den_poly().atoms() {
        if let Some(arg) = atom.log_arg() {
            if !arg.free_of(ode.qd) {
                return Err(ExprError::NotPolynomial(format!(
                    "denominator contains {}",
                    atom
                )));
            }
        }
    }
    let va = r
        .num_poly()
        .atoms()
        .into_iter()
        .chain(r.den_poly().atoms())
        .find(|a| a.var_id() == Some(ode.qd));
    let Some(va) = va else {
        // No explicit q̇ anywhere outside logs: A = r, B = 0, but q̇-logs in
        // the numerator are still obstructions.
        let (clean, dirty) = split_qd_logs(ode, r)?;
        return Ok((clean, Expr::zero(), dirty));
    };

    let num: Vec<Expr> = r
        .num_poly()
        .to_univar(&va)
        .into_iter()
        .map(Expr::from_poly)
        .collect();
    let den: Vec<Expr> = r
        .den_poly()
        .to_univar(&va)
        .into_iter()
        .map(Expr::from_poly)
        .collect();
    let (quot, rem) = upoly_divmod(&num, &den);

    let mut obstructions: Vec<Expr> = Vec::new();
    // A proper remainder cannot contribute an affine part.
    if !upoly_is_zero(&rem) {
        obstructions.extend(rem.into_iter().filter(|c| !c.is_zero()));
    }
    // Quadratic and higher powers of q̇ cannot be Dt of a point function.
    for c in quot.iter().skip(2) {
        if !c.is_zero() {
            obstructions.push(c.clone());
        }
    }
    let (a, mut dirty_a) = split_qd_logs(ode, quot.first().unwrap_or(&Expr::zero()))?;
    let (b, mut dirty_b) = split_qd_logs(ode, quot.get(1).unwrap_or(&Expr::zero()))?;
    obstructions.append(&mut dirty_a);
    obstructions.append(&mut dirty_b);
    Ok((a, b, obstructions))
}

/// Separates an expression into its part free of `q̇`-dependent log atoms
/// and the coefficients of such atoms (which must vanish for the expression
/// to be a point function).
fn split_qd_logs(ode: &Ode2, e: &Expr) -> Result<(Expr, Vec<Expr>), ExprError> {
    let has_qd_log = e.num_poly().atoms().into_iter().any(|a| {
        a.log_arg()
            .map(|arg| !arg.free_of(ode.qd))
            .unwrap_or(false)
    });
    if !has_qd_log {
        return Ok((e.clone(), Vec::new()));
    }
    let groups = collect_by(e, &|a: &Atom| {
        a.log_arg()
            .map(|arg| !arg.free_of(ode.qd))
            .unwrap_or(false)
    })?;
    let mut clean = Expr::zero();
    let mut dirty = Vec::new();
    for (mono, coeff) in groups {
        if mono.is_one() {
            clean = coeff;
        } else if !coeff.is_zero() {
            dirty.push(coeff);
        }
    }
    Ok((clean, dirty))
}

/// Gauge function with `Dt(g) = A + B·q̇`, when the pair is integrable
/// (`∂A/∂q = ∂B/∂t`); `None` otherwise.
fn gauge_from_parts(
    ctx: &VarCtx,
    ode: &Ode2,
    a: &Expr,
    b: &Expr,
) -> Result<Option<Expr>, ExprError> {
    if !(&a.diff(ode.q) - &b.diff(ode.t)).is_zero() {
        return Ok(None);
    }
    let g1 = integrate_power(ctx, b, ode.q)?;
    let residue = a - &g1.diff(ode.t);
    debug_assert!(residue.free_of(ode.q), "integrability guarantees q-freeness");
    let g2 = integrate_power(ctx, &residue, ode.t)?;
    let g = &g1 + &g2;
    debug_assert!({
        let dt = ode.total_derivative(&g, DtMode::OnShell);
        (&dt - &(a + &(b * ode.qd_expr()))).is_zero()
    });
    Ok(Some(g))
}

/// Decides the Noether condition for one symmetry and returns its gauge
/// function when it holds (`None` when `X` is not a Noether symmetry of
/// `l`). The zero gauge comes back as the zero expression.
pub fn noether_gauge(
    ctx: &VarCtx,
    ode: &Ode2,
    l: &Expr,
    sym: &PointSymmetry,
) -> Result<Option<Expr>, ExprError> {
    let r = invariance_defect(ode, l, sym);
    let (a, b, obstructions) = affine_split(ode, &r)?;
    if obstructions.iter().any(|o| !o.is_zero()) {
        return Ok(None);
    }
    gauge_from_parts(ctx, ode, &a, &b)
}

/// Noether first integral `I = (q̇ V - G)·∂L/∂q̇ - V·L + g`.
pub fn first_integral(ode: &Ode2, l: &Expr, sym: &PointSymmetry, gauge: &Expr) -> Expr {
    let l_qd = l.diff(ode.qd);
    let momentum_arg = &(ode.qd_expr() * &sym.v) - &sym.g;
    &(&(&momentum_arg * &l_qd) - &(&sym.v * l)) + gauge
}

/// Conservation on solutions: `Dt(e) ≡ 0` with `q̈ → F`.
pub fn is_conserved(ode: &Ode2, e: &Expr) -> bool {
    ode.total_derivative(e, DtMode::OnShell).is_zero()
}

/// One admissible Noether direction inside a symmetry basis.
#[derive(Clone, Debug)]
pub struct NoetherCertificate {
    /// Coefficients of the direction over the input basis.
    pub coefficients: Vec<GaussianRational>,
    /// Human-readable combination, e.g. `X4 + 2*X5`.
    pub label: String,
    /// The combined generator.
    pub symmetry: PointSymmetry,
    /// Gauge function certifying the Noether condition.
    pub gauge: Expr,
    /// First integral, verified conserved on solutions.
    pub integral: Expr,
}

/// The Noether subspace of a symmetry basis with respect to a Lagrangian.
#[derive(Clone, Debug)]
pub struct NoetherAnalysis {
    /// Dimension of the subspace.
    pub count: usize,
    /// Canonical (reduced row echelon) basis of the subspace, one
    /// certificate per direction.
    pub certificates: Vec<NoetherCertificate>,
}

/// Computes the subspace of `span(basis)` consisting of Noether symmetries
/// of `l`, with a certificate for each canonical direction.
///
/// The Noether condition on a combination `Σ cᵢ Xᵢ` is linear in the `cᵢ`:
/// the invariance defect must be affine in `q̇` (obstruction coefficients
/// vanish) with integrable affine part. Those conditions are solved exactly,
/// the solution space is canonicalized, and each direction's gauge and first
/// integral are reconstructed and re-verified.
pub fn noether_analysis(
    ctx: &VarCtx,
    ode: &Ode2,
    l: &Expr,
    basis: &[PointSymmetry],
) -> Result<NoetherAnalysis, ExprError> {
    let mut work = ctx.clone();
    let coeffs: Vec<_> = (0..basis.len())
        .map(|_| work.fresh("nc", VarRole::Auxiliary))
        .collect();
    let mut r = Expr::zero();
    for (c, sym) in coeffs.iter().zip(basis) {
        let cx = Expr::var(&work, *c);
        r = &r + &(&cx * &invariance_defect(ode, l, sym));
    }

    let (a, b, obstructions) = affine_split(ode, &r)?;
    let mut eqs = Vec::new();
    for o in &obstructions {
        eqs.extend(vanishing_conditions(o, &coeffs)?);
    }
    let integrability = &a.diff(ode.q) - &b.diff(ode.t);
    eqs.extend(vanishing_conditions(&integrability, &coeffs)?);

    let solved = solve_linear(&work, &eqs, &coeffs)?;
    debug_assert!(solved.status != SolveStatus::Inconsistent);

    // Canonicalize the solution space over the coefficient coordinates.
    let mut rows: Vec<Vec<GaussianRational>> = Vec::new();
    for valuation in solved.basis_valuations()? {
        let row = coeffs
            .iter()
            .map(|c| {
                valuation
                    .iter()
                    .find(|(v, _)| v == c)
                    .and_then(|(_, e)| e.as_constant())
                    .expect("homogeneous scalar solution")
            })
            .collect();
        rows.push(row);
    }
    let rank = rref_constant_rows(&mut rows);
    rows.truncate(rank);

    let mut certificates = Vec::new();
    for row in rows {
        let mut v = Expr::zero();
        let mut g = Expr::zero();
        for (c, sym) in row.iter().zip(basis) {
            if c.is_zero() {
                continue;
            }
            let cx = Expr::constant(c.clone());
            v = &v + &(&cx * &sym.v);
            g = &g + &(&cx * &sym.g);
        }
        let label = combination_label(basis, &row);
        let symmetry = PointSymmetry::new(label.clone(), v, g);
        let gauge = noether_gauge(ctx, ode, l, &symmetry)?
            .expect("solved directions satisfy the Noether condition");
        let integral = first_integral(ode, l, &symmetry, &gauge);
        assert!(
            is_conserved(ode, &integral),
            "first integral of {} is not conserved",
            label
        );
        certificates.push(NoetherCertificate {
            coefficients: row,
            label,
            symmetry,
            gauge,
            integral,
        });
    }
    Ok(NoetherAnalysis {
        count: certificates.len(),
        certificates,
    })
}

/// Whether two first integrals agree up to sign and an additive constant.
pub fn same_integral_up_to_sign_and_constant(a: &Expr, b: &Expr) -> bool {
    let d = a - b;
    let s = a + b;
    d.is_constant() || s.is_constant() || {
        // Allow an overall constant rescaling as well (conserved quantities
        // carry no preferred normalization).
        constant_ratio(a, b).is_some()
    }
}

fn combination_label(basis: &[PointSymmetry], coeffs: &[GaussianRational]) -> String {
    let mut out = String::new();
    for (c, sym) in coeffs.iter().zip(basis) {
        if c.is_zero() {
            continue;
        }
        let rendered = format!("{}", c);
        let (negative, magnitude) = match rendered.strip_prefix('-') {
            Some(rest) => (true, rest.to_string()),
            None => (false, rendered),
        };
        if out.is_empty() {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        if magnitude != "1" {
            out.push_str(&magnitude);
            out.push('*');
        }
        out.push_str(&sym.label);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}
