//! Second-order ODEs `q̈ = F(t, q, q̇)` and their Lie point symmetries.
//!
//! A point symmetry is a vector field `X = V(t,q) ∂t + G(t,q) ∂q`; its
//! second prolongation acts on the jet variables, and `X` is a symmetry when
//! the prolonged action annihilates `q̈ - F` on solutions. Everything here is
//! exact: residuals are canonical expressions and "is a symmetry" means the
//! residual is identically zero.

use crate::expr::{Expr, ExprError, VarCtx, VarRole};
use crate::linsolve::{solve_linear, vanishing_conditions, SolveStatus};
use crate::poly::VarId;

/// A second-order ODE `q̈ = rhs(t, q, q̇)`.
///
/// Owns the jet structure: `t` independent, `q` dependent, `qd` the first
/// derivative, and `qdd` a symbol for the second derivative used when total
/// derivatives are taken off-shell. `rhs` must be free of `qdd`.
#[derive(Clone, Debug)]
pub struct Ode2 {
    pub t: VarId,
    pub q: VarId,
    pub qd: VarId,
    pub qdd: VarId,
    pub rhs: Expr,
    qd_x: Expr,
    qdd_x: Expr,
}

/// Whether a total time derivative replaces `q̈` by the right-hand side
/// (on solutions) or keeps it as a symbol.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DtMode {
    OnShell,
    Symbolic,
}

impl Ode2 {
    /// Declares the internal `qdd` symbol in `ctx` and checks the
    /// right-hand side only involves the jet up to first order.
    pub fn new(
        ctx: &mut VarCtx,
        t: VarId,
        q: VarId,
        qd: VarId,
        rhs: Expr,
    ) -> Result<Self, ExprError> {
        let qdd = ctx.fresh("qdd", VarRole::Jet);
        if !rhs.free_of(qdd) {
            return Err(ExprError::InvalidVariable(
                "right-hand side mentions the second derivative".into(),
            ));
        }
        let qd_x = Expr::var(ctx, qd);
        let qdd_x = Expr::var(ctx, qdd);
        Ok(Ode2 {
            t,
            q,
            qd,
            qdd,
            rhs,
            qd_x,
            qdd_x,
        })
    }

    /// `q̇` as an expression.
    pub fn qd_expr(&self) -> &Expr {
        &self.qd_x
    }

    /// The symbolic `q̈` as an expression.
    pub fn qdd_expr(&self) -> &Expr {
        &self.qdd_x
    }

    /// Total derivative along solutions of an expression in `(t, q, q̇)`:
    /// `∂t + q̇ ∂q + q̈ ∂q̇`, with `q̈` either substituted by the right-hand
    /// side or kept symbolic. The input must be free of `qdd`.
    pub fn total_derivative(&self, e: &Expr, mode: DtMode) -> Expr {
        debug_assert!(e.free_of(self.qdd), "input already mentions qdd");
        let mut out = e.diff(self.t);
        out = &out + &(&self.qd_x * &e.diff(self.q));
        let dqd = e.diff(self.qd);
        if !dqd.is_zero() {
            let accel = match mode {
                DtMode::OnShell => &self.rhs,
                DtMode::Symbolic => &self.qdd_x,
            };
            out = &out + &(accel * &dqd);
        }
        out
    }
}

/// A candidate point symmetry `X = v(t,q) ∂t + g(t,q) ∂q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSymmetry {
    pub label: String,
    pub v: Expr,
    pub g: Expr,
}

impl PointSymmetry {
    pub fn new(label: impl Into<String>, v: Expr, g: Expr) -> Self {
        PointSymmetry {
            label: label.into(),
            v,
            g,
        }
    }
}

/// A point symmetry together with its prolongation coefficients: `eta1` is
/// the `∂q̇` coefficient (a function of `t, q, q̇`), `eta2` the `∂q̈`
/// coefficient (linear in the symbolic `q̈`).
#[derive(Clone, Debug)]
pub struct ProlongedSymmetry {
    pub v: Expr,
    pub g: Expr,
    pub eta1: Expr,
    pub eta2: Expr,
}

/// Second prolongation of `X = v ∂t + g ∂q`:
/// `eta1 = Dt(g) - q̇ Dt(v)` and `eta2 = Dt(eta1) - q̈ Dt(v)`, with the
/// total derivatives taken symbolically.
pub fn prolong(ode: &Ode2, sym: &PointSymmetry) -> ProlongedSymmetry {
    let dv = ode.total_derivative(&sym.v, DtMode::Symbolic);
    let dg = ode.total_derivative(&sym.g, DtMode::Symbolic);
    let eta1 = &dg - &(&ode.qd_x * &dv);
    // eta1 is a function of (t, q, qd) only when v, g are point functions;
    // Dt(eta1) then brings in qdd linearly through the qd-derivative.
    let d_eta1 = ode.total_derivative(&eta1, DtMode::Symbolic);
    let eta2 = &d_eta1 - &(&ode.qdd_x * &dv);
    ProlongedSymmetry {
        v: sym.v.clone(),
        g: sym.g.clone(),
        eta1,
        eta2,
    }
}

/// Defect of the symmetry condition on solutions:
/// `eta2|_{q̈=F} - (v F_t + g F_q + eta1 F_q̇)`. Zero exactly when `X`
/// generates a point symmetry of the ODE.
pub fn symmetry_residual(ode: &Ode2, sym: &PointSymmetry) -> Result<Expr, ExprError> {
    let pr = prolong(ode, sym);
    let eta2_onshell = pr.eta2.substitute(&[(ode.qdd, ode.rhs.clone())])?;
    let mut action = &pr.v * &ode.rhs.diff(ode.t);
    action = &action + &(&pr.g * &ode.rhs.diff(ode.q));
    action = &action + &(&pr.eta1 * &ode.rhs.diff(ode.qd));
    Ok(&eta2_onshell - &action)
}

/// True exactly when the symmetry condition holds identically.
pub fn is_point_symmetry(ode: &Ode2, sym: &PointSymmetry) -> Result<bool, ExprError> {
    Ok(symmetry_residual(ode, sym)?.is_zero())
}

/// Finds all point symmetries whose coefficients are polynomials of total
/// degree at most `degree` in `(t, q)`. Returns an echelonized basis of the
/// solution space; every returned generator is re-verified against the
/// symmetry condition.
pub fn find_point_symmetries(
    ctx: &VarCtx,
    ode: &Ode2,
    degree: u32,
) -> Result<Vec<PointSymmetry>, ExprError> {
    let mut work = ctx.clone();
    let t_x = Expr::var(&work, ode.t);
    let q_x = Expr::var(&work, ode.q);

    let mut params = Vec::new();
    let mut v = Expr::zero();
    let mut g = Expr::zero();
    for a in 0..=degree {
        for b in 0..=(degree - a) {
            let mono = &t_x.pow(a as i32).expect("nonnegative power")
                * &q_x.pow(b as i32).expect("nonnegative power");
            let pv = work.fresh("av", VarRole::Auxiliary);
            params.push(pv);
            v = &v + &(&Expr::var(&work, pv) * &mono);
            let pg = work.fresh("ag", VarRole::Auxiliary);
            params.push(pg);
            g = &g + &(&Expr::var(&work, pg) * &mono);
        }
    }

    let ansatz = PointSymmetry::new("ansatz", v.clone(), g.clone());
    let residual = symmetry_residual(ode, &ansatz)?;
    let eqs = vanishing_conditions(&residual, &params)?;
    let solved = solve_linear(&work, &eqs, &params)?;
    debug_assert!(
        solved.status != SolveStatus::Inconsistent,
        "homogeneous system cannot be inconsistent"
    );

    let mut basis = Vec::new();
    for (k, valuation) in solved.basis_valuations()?.into_iter().enumerate() {
        let vi = v.substitute(&valuation)?;
        let gi = g.substitute(&valuation)?;
        if vi.is_zero() && gi.is_zero() {
            continue;
        }
        let sym = PointSymmetry::new(format!("S{}", k + 1), vi, gi);
        assert!(
            is_point_symmetry(ode, &sym)?,
            "solver returned a non-symmetry"
        );
        basis.push(sym);
    }
    Ok(basis)
}

/// Whether `cand` lies in the constant-coefficient span of `basis` (as a
/// vector field; labels are ignored).
pub fn in_symmetry_span(
    ctx: &VarCtx,
    basis: &[PointSymmetry],
    cand: &PointSymmetry,
) -> Result<bool, ExprError> {
    let mut work = ctx.clone();
    let coeffs: Vec<VarId> = (0..basis.len())
        .map(|_| work.fresh("c", VarRole::Auxiliary))
        .collect();
    let mut dv = cand.v.clone();
    let mut dg = cand.g.clone();
    for (c, sym) in coeffs.iter().zip(basis) {
        let cx = Expr::var(&work, *c);
        dv = &dv - &(&cx * &sym.v);
        dg = &dg - &(&cx * &sym.g);
    }
    let mut eqs = vanishing_conditions(&dv, &coeffs)?;
    eqs.extend(vanishing_conditions(&dg, &coeffs)?);
    let solved = solve_linear(&work, &eqs, &coeffs)?;
    Ok(solved.status != SolveStatus::Inconsistent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_expr;

    /// Free particle `q̈ = 0` with its full eight-generator algebra.
    fn free_particle() -> (VarCtx, Ode2, Vec<PointSymmetry>) {
        let mut ctx = VarCtx::new();
        let t = ctx.declare("t", VarRole::Independent).unwrap();
        let q = ctx.declare("q", VarRole::Dependent).unwrap();
        let qd = ctx.declare("qd", VarRole::Jet).unwrap();
        let ode = Ode2::new(&mut ctx, t, q, qd, Expr::zero()).unwrap();
        let gens = [
            ("X1", "q*t", "q^2"),
            ("X2", "q", "0"),
            ("X3", "t^2", "q*t"),
            ("X4", "0", "q"),
            ("X5", "t", "0"),
            ("X6", "1", "0"),
            ("X7", "0", "t"),
            ("X8", "0", "1"),
        ]
        .iter()
        .map(|(l, v, g)| {
            PointSymmetry::new(
                *l,
                parse_expr(v, &ctx).unwrap(),
                parse_expr(g, &ctx).unwrap(),
            )
        })
        .collect();
        (ctx, ode, gens)
    }

    #[test]
    fn free_particle_generators_are_symmetries() {
        let (_, ode, gens) = free_particle();
        for sym in &gens {
            assert!(
                is_point_symmetry(&ode, sym).unwrap(),
                "{} failed the symmetry condition",
                sym.label
            );
        }
        // A non-symmetry is rejected.
        let bad = PointSymmetry::new("bad", gens[0].v.clone(), Expr::zero());
        assert!(!is_point_symmetry(&ode, &bad).unwrap());
    }

    #[test]
    fn prolongation_coefficients_match_hand_results() {
        let (ctx, ode, gens) = free_particle();
        let expected = [
            "q*qd - t*qd^2",
            "-qd^2",
            "q - t*qd",
            "qd",
            "-qd",
            "0",
            "1",
            "0",
        ];
        for (sym, want) in gens.iter().zip(expected) {
            let pr = prolong(&ode, sym);
            assert_eq!(
                pr.eta1,
                parse_expr(want, &ctx).unwrap(),
                "eta1 of {}",
                sym.label
            );
        }
    }

    #[test]
    fn free_particle_search_recovers_the_eight_dimensional_algebra() {
        let (ctx, ode, gens) = free_particle();
        let basis = find_point_symmetries(&ctx, &ode, 2).unwrap();
        assert_eq!(basis.len(), 8);
        for sym in &gens {
            assert!(
                in_symmetry_span(&ctx, &basis, sym).unwrap(),
                "{} missing from the computed span",
                sym.label
            );
        }
        // And the reverse inclusion: computed basis sits in the known span.
        for sym in &basis {
            assert!(in_symmetry_span(&ctx, &gens, sym).unwrap());
        }
        // Scaling symmetry of q alone is not a new direction.
        let outside = PointSymmetry::new(
            "cube",
            parse_expr("t^3", &ctx).unwrap(),
            Expr::zero(),
        );
        assert!(!in_symmetry_span(&ctx, &basis, &outside).unwrap());
    }

    #[test]
    fn cubic_autonomous_equation_admits_the_scaling_pair() {
        let mut ctx = VarCtx::new();
        let t = ctx.declare("t", VarRole::Independent).unwrap();
        let x = ctx.declare("x", VarRole::Dependent).unwrap();
        let xd = ctx.declare("xd", VarRole::Jet).unwrap();
        let rhs = parse_expr("-3*x*xd - x^3", &ctx).unwrap();
        let ode = Ode2::new(&mut ctx, t, x, xd, rhs).unwrap();

        let g5 = PointSymmetry::new(
            "G5",
            parse_expr("x", &ctx).unwrap(),
            parse_expr("-x^3", &ctx).unwrap(),
        );
        let g6 = PointSymmetry::new("G6", Expr::one(), Expr::zero());
        assert!(is_point_symmetry(&ode, &g5).unwrap());
        assert!(is_point_symmetry(&ode, &g6).unwrap());

        let basis = find_point_symmetries(&ctx, &ode, 3).unwrap();
        assert!(in_symmetry_span(&ctx, &basis, &g5).unwrap());
        assert!(in_symmetry_span(&ctx, &basis, &g6).unwrap());
    }

    #[test]
    fn total_derivative_modes_differ_off_shell() {
        let (ctx, ode, _) = free_particle();
        let e = parse_expr("t*qd", &ctx).unwrap();
        let on = ode.total_derivative(&e, DtMode::OnShell);
        assert_eq!(on, parse_expr("qd", &ctx).unwrap());
        let sym = ode.total_derivative(&e, DtMode::Symbolic);
        assert!(!(&sym - &on).is_zero());
        assert!(sym
            .substitute(&[(ode.qdd, Expr::zero())])
            .unwrap()
            .eq(&on));
    }
}
