//! Last multipliers of a second-order ODE from pairs of point symmetries.
//!
//! For `q̈ = F(t,q,q̇)` and two prolonged symmetries, the determinant
//!
//! ```text
//!       | 1    q̇    F     |
//! Δ  =  | V_n  G_n  eta1_n |
//!       | V_m  G_m  eta1_m |
//! ```
//!
//! either vanishes identically (degenerate pair) or its reciprocal
//! `M = 1/Δ` satisfies the multiplier equation `Dt(M) + M ∂F/∂q̇ = 0` on
//! solutions. Multipliers are canonical expressions; two multipliers that
//! differ by a nonzero constant factor are the same up to normalization, and
//! the pair sweep groups them that way.

use crate::expr::{Expr, ExprError};
use crate::ode::{prolong, DtMode, Ode2, PointSymmetry};

/// Result of forming the multiplier of one symmetry pair.
#[derive(Clone, Debug)]
pub enum PairMultiplier {
    /// The determinant vanished identically.
    Degenerate,
    /// `M = 1/Δ`, verified against the multiplier equation.
    Multiplier(Expr),
}

/// The 3×3 determinant `Δ` for an ordered pair of symmetries. Antisymmetric
/// under swapping the pair.
pub fn pair_determinant(ode: &Ode2, sn: &PointSymmetry, sm: &PointSymmetry) -> Expr {
    let n = prolong(ode, sn);
    let m = prolong(ode, sm);
    let qd = ode.qd_expr();
    let f = &ode.rhs;
    let minor_gh = &(&n.g * &m.eta1) - &(&n.eta1 * &m.g);
    let minor_vh = &(&n.v * &m.eta1) - &(&n.eta1 * &m.v);
    let minor_vg = &(&n.v * &m.g) - &(&n.g * &m.v);
    &(&minor_gh - &(qd * &minor_vh)) + &(f * &minor_vg)
}

/// Forms `M = 1/Δ` for an ordered symmetry pair, or reports degeneracy.
/// The returned multiplier always satisfies the multiplier equation; that is
/// checked here and a failure is a bug in the caller's symmetries (e.g. a
/// vector field that is not actually a symmetry of `ode`).
pub fn multiplier_from_pair(
    ode: &Ode2,
    sn: &PointSymmetry,
    sm: &PointSymmetry,
) -> Result<PairMultiplier, ExprError> {
    let delta = pair_determinant(ode, sn, sm);
    if delta.is_zero() {
        return Ok(PairMultiplier::Degenerate);
    }
    let m = Expr::one()
        .checked_div(&delta)
        .expect("determinant is nonzero");
    if !is_multiplier(ode, &m) {
        return Err(ExprError::InvalidVariable(format!(
            "pair ({}, {}) produced a non-multiplier; are both inputs symmetries?",
            sn.label, sm.label
        )));
    }
    Ok(PairMultiplier::Multiplier(m))
}

/// Multiplier equation on solutions: `Dt(M) + M ∂F/∂q̇ ≡ 0`.
pub fn is_multiplier(ode: &Ode2, m: &Expr) -> bool {
    let defect = &ode.total_derivative(m, DtMode::OnShell) + &(m * &ode.rhs.diff(ode.qd));
    defect.is_zero()
}

/// Constant ratio `a/b` when the two expressions agree up to a nonzero
/// constant factor; `None` otherwise (including `a ≡ 0`).
pub fn constant_ratio(a: &Expr, b: &Expr) -> Option<Expr> {
    let r = a.checked_div(b).ok()?;
    if !r.is_zero() && r.is_constant() {
        Some(r)
    } else {
        None
    }
}

/// One pair's entry in a sweep over all unordered symmetry pairs.
#[derive(Clone, Debug)]
pub struct SweepEntry {
    /// `M{n}{m}` with 1-based positions into the input list.
    pub label: String,
    /// 0-based positions of the pair.
    pub pair: (usize, usize),
    pub outcome: SweepOutcome,
}

#[derive(Clone, Debug)]
pub enum SweepOutcome {
    Degenerate,
    /// First member of its constant-ratio class.
    Representative { multiplier: Expr },
    /// Same multiplier as an earlier entry, up to the recorded constant.
    Duplicate { of: String, ratio: Expr },
}

/// Forms the multiplier of every pair `n < m`, groups the results into
/// constant-ratio classes, and labels entries by position.
pub fn multiplier_sweep(
    ode: &Ode2,
    syms: &[PointSymmetry],
) -> Result<Vec<SweepEntry>, ExprError> {
    let mut entries = Vec::new();
    let mut reps: Vec<(String, Expr)> = Vec::new();
    for n in 0..syms.len() {
        for m in (n + 1)..syms.len() {
            let label = pair_label(n, m);
            let outcome = match multiplier_from_pair(ode, &syms[n], &syms[m])? {
                PairMultiplier::Degenerate => SweepOutcome::Degenerate,
                PairMultiplier::Multiplier(mult) => {
                    let dup = reps.iter().find_map(|(rl, re)| {
                        constant_ratio(&mult, re).map(|r| (rl.clone(), r))
                    });
                    match dup {
                        Some((of, ratio)) => SweepOutcome::Duplicate { of, ratio },
                        None => {
                            reps.push((label.clone(), mult.clone()));
                            SweepOutcome::Representative { multiplier: mult }
                        }
                    }
                }
            };
            entries.push(SweepEntry {
                label,
                pair: (n, m),
                outcome,
            });
        }
    }
    Ok(entries)
}

fn pair_label(n: usize, m: usize) -> String {
    if n < 9 && m < 9 {
        format!("M{}{}", n + 1, m + 1)
    } else {
        format!("M{}_{}", n + 1, m + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{VarCtx, VarRole};
    use crate::parse::parse_expr;

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

    fn expect_multiplier(
        ctx: &VarCtx,
        ode: &Ode2,
        syms: &[PointSymmetry],
        n: usize,
        m: usize,
        want: &str,
    ) {
        match multiplier_from_pair(ode, &syms[n - 1], &syms[m - 1]).unwrap() {
            PairMultiplier::Multiplier(got) => {
                assert_eq!(got, parse_expr(want, ctx).unwrap(), "pair ({n},{m})");
                assert!(is_multiplier(ode, &got));
            }
            PairMultiplier::Degenerate => panic!("pair ({n},{m}) unexpectedly degenerate"),
        }
    }

    #[test]
    fn ten_hand_checked_multipliers() {
        let (ctx, ode, syms) = free_particle();
        expect_multiplier(&ctx, &ode, &syms, 1, 3, "-1/(t*qd - q)^3");
        expect_multiplier(&ctx, &ode, &syms, 1, 5, "-1/(qd*(t*qd - q)^2)");
        expect_multiplier(&ctx, &ode, &syms, 1, 6, "-1/(qd^2*(t*qd - q))");
        expect_multiplier(&ctx, &ode, &syms, 1, 7, "1/(t*qd - q)^2");
        expect_multiplier(&ctx, &ode, &syms, 1, 8, "1/(qd*(t*qd - q))");
        expect_multiplier(&ctx, &ode, &syms, 2, 6, "-1/qd^3");
        expect_multiplier(&ctx, &ode, &syms, 2, 8, "1/qd^2");
        expect_multiplier(&ctx, &ode, &syms, 3, 8, "1/(t*qd - q)");
        expect_multiplier(&ctx, &ode, &syms, 4, 8, "-1/qd");
        // Ordered so the constant multiplier comes out +1.
        expect_multiplier(&ctx, &ode, &syms, 8, 7, "1");
    }

    #[test]
    fn sweep_partitions_every_pair() {
        let (_, ode, syms) = free_particle();
        let entries = multiplier_sweep(&ode, &syms).unwrap();
        assert_eq!(entries.len(), 28);

        let by_kind = |keep: fn(&SweepOutcome) -> bool| -> Vec<String> {
            entries
                .iter()
                .filter(|e| keep(&e.outcome))
                .map(|e| e.label.clone())
                .collect()
        };
        let degenerate = by_kind(|o| matches!(o, SweepOutcome::Degenerate));
        assert_eq!(
            degenerate,
            ["M12", "M14", "M24", "M35", "M37", "M57", "M68"]
        );
        let reps = by_kind(|o| matches!(o, SweepOutcome::Representative { .. }));
        assert_eq!(
            reps,
            ["M13", "M15", "M16", "M17", "M18", "M26", "M28", "M38", "M48", "M78"]
        );
        let dups = by_kind(|o| matches!(o, SweepOutcome::Duplicate { .. }));
        assert_eq!(
            dups,
            ["M23", "M25", "M27", "M34", "M36", "M45", "M46", "M47", "M56", "M58", "M67"]
        );
        // Every recorded duplicate ratio is exact.
        for e in &entries {
            if let SweepOutcome::Duplicate { of, ratio } = &e.outcome {
                let rep = entries
                    .iter()
                    .find_map(|r| match (&r.label == of, &r.outcome) {
                        (true, SweepOutcome::Representative { multiplier }) => {
                            Some(multiplier.clone())
                        }
                        _ => None,
                    })
                    .expect("duplicate points at a representative");
                let this = match multiplier_from_pair(&ode, &syms[e.pair.0], &syms[e.pair.1])
                    .unwrap()
                {
                    PairMultiplier::Multiplier(m) => m,
                    _ => unreachable!(),
                };
                assert_eq!(this, &rep * ratio);
            }
        }
    }

    #[test]
    fn determinant_is_antisymmetric() {
        let (_, ode, syms) = free_particle();
        let a = pair_determinant(&ode, &syms[0], &syms[4]);
        let b = pair_determinant(&ode, &syms[4], &syms[0]);
        assert_eq!(a, -&b);
        assert!(!a.is_zero());
    }

    #[test]
    fn non_multipliers_are_rejected() {
        let (ctx, ode, _) = free_particle();
        assert!(!is_multiplier(&ode, &parse_expr("t", &ctx).unwrap()));
        assert!(!is_multiplier(&ode, &parse_expr("q + qd", &ctx).unwrap()));
        // Constants trivially satisfy the equation for the free particle.
        assert!(is_multiplier(&ode, &Expr::one()));
    }

    #[test]
    fn cubic_equation_scaling_pair_multiplier() {
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
        match multiplier_from_pair(&ode, &g5, &g6).unwrap() {
            PairMultiplier::Multiplier(m) => {
                assert_eq!(m, parse_expr("-1/(xd + x^2)^3", &ctx).unwrap());
                assert!(is_multiplier(&ode, &m));
            }
            PairMultiplier::Degenerate => panic!("scaling pair is not degenerate"),
        }
    }
}
