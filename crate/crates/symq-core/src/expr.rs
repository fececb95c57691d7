//! Exact symbolic expressions: ratios of multivariate polynomials over the
//! Gaussian rationals, with `log(...)` subterms carried as opaque atoms.
//!
//! Every `Expr` is canonical by construction: numerator and denominator are
//! coprime, the denominator's leading coefficient (graded-lex order) is
//! exactly 1, and log atoms are keyed by their canonicalized arguments.
//! Structural equality therefore decides mathematical equality on this class.

use crate::gaussian::GaussianRational;
use crate::poly::{gcd, Atom, Mono, Poly, VarId};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

/// How a declared variable is used. Roles matter to the problem loaders and
/// reports; the algebra below treats all named variables alike.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VarRole {
    /// The base variable differentiation runs over (e.g. time).
    Independent,
    /// An unknown function of the independent variable(s).
    Dependent,
    /// A derivative coordinate (e.g. the velocity in a second-order problem).
    Jet,
    /// Anything else: reduction coordinates, ansatz parameters, scratch.
    Auxiliary,
}

/// Declaration table mapping variable names to ids; ids are declaration
/// order, and that order pins the monomial order used everywhere.
#[derive(Clone, Debug, Default)]
pub struct VarCtx {
    entries: Vec<(Arc<str>, VarRole)>,
}

impl VarCtx {
    pub fn new() -> Self {
        VarCtx::default()
    }

    /// Declares a new variable. Names must be grammar identifiers, unique,
    /// and must avoid the reserved words `i` and `log`.
    pub fn declare(&mut self, name: &str, role: VarRole) -> Result<VarId, ExprError> {
        if !is_identifier(name) {
            return Err(ExprError::InvalidVariable(format!(
                "`{}` is not a valid identifier",
                name
            )));
        }
        if name == "i" || name == "log" {
            return Err(ExprError::InvalidVariable(format!(
                "`{}` is reserved",
                name
            )));
        }
        if self.lookup(name).is_some() {
            return Err(ExprError::InvalidVariable(format!(
                "`{}` is already declared",
                name
            )));
        }
        let id = VarId(self.entries.len() as u32);
        self.entries.push((Arc::from(name), role));
        Ok(id)
    }

    /// Declares `prefix0`, `prefix1`, ... picking the first free name.
    pub fn fresh(&mut self, prefix: &str, role: VarRole) -> VarId {
        for k in 0.. {
            let name = format!("{}{}", prefix, k);
            if self.lookup(&name).is_none() {
                return self.declare(&name, role).expect("fresh name is valid");
            }
        }
        unreachable!()
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.entries
            .iter()
            .position(|(n, _)| n.as_ref() == name)
            .map(|k| VarId(k as u32))
    }

    pub fn name(&self, id: VarId) -> Arc<str> {
        self.entries[id.0 as usize].0.clone()
    }

    pub fn role(&self, id: VarId) -> VarRole {
        self.entries[id.0 as usize].1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn atom(&self, id: VarId) -> Atom {
        Atom::var(id, self.name(id))
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.entries.len()).map(|k| VarId(k as u32))
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric())
}

/// Errors from expression construction and the symbolic operations.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ExprError {
    /// Division by an identically zero expression.
    DivisionByZero,
    /// `log` of an identically zero expression.
    LogOfZero,
    /// `0^n` with `n < 0`.
    ZeroToNegativePower,
    /// Numeric evaluation hit a zero denominator.
    PoleAtPoint,
    /// The expression is not polynomial in the requested variables.
    NotPolynomial(String),
    /// An equation handed to the linear solver is not affine in the unknowns.
    NotAffine(String),
    /// The integrand falls outside the supported shifted-power class.
    UnsupportedIntegrand(String),
    /// A bad variable declaration or reference.
    InvalidVariable(String),
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprError::DivisionByZero => write!(f, "division by zero expression"),
            ExprError::LogOfZero => write!(f, "log of zero expression"),
            ExprError::ZeroToNegativePower => write!(f, "zero raised to a negative power"),
            ExprError::PoleAtPoint => write!(f, "evaluation point is a pole"),
            ExprError::NotPolynomial(d) => write!(f, "not polynomial: {}", d),
            ExprError::NotAffine(d) => write!(f, "not affine: {}", d),
            ExprError::UnsupportedIntegrand(d) => write!(f, "unsupported integrand: {}", d),
            ExprError::InvalidVariable(d) => write!(f, "invalid variable: {}", d),
        }
    }
}

impl std::error::Error for ExprError {}

/// A canonical rational expression `num/den`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

impl Expr {
    /// Canonicalizes `num/den`: reduces the fraction and normalizes the
    /// denominator's leading coefficient to 1.
    pub fn new(num: Poly, den: Poly) -> Result<Expr, ExprError> {
        if den.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Expr {
                num: Poly::zero(),
                den: Poly::one(),
            });
        }
        if let Some(c) = den.as_constant() {
            return Ok(Expr {
                num: num.scale(&c.inv()),
                den: Poly::one(),
            });
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.exact_div(&g).expect("gcd divides numerator"),
                den.exact_div(&g).expect("gcd divides denominator"),
            )
        };
        let lc = den.leading().1.clone();
        if lc.is_one() {
            Ok(Expr { num, den })
        } else {
            let inv = lc.inv();
            Ok(Expr {
                num: num.scale(&inv),
                den: den.scale(&inv),
            })
        }
    }

    pub fn from_poly(p: Poly) -> Expr {
        Expr {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn zero() -> Expr {
        Expr::from_poly(Poly::zero())
    }

    pub fn one() -> Expr {
        Expr::from_poly(Poly::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::from_poly(Poly::constant(GaussianRational::from_int(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::from_poly(Poly::constant(GaussianRational::from_ratio(n, d)))
    }

    /// The imaginary unit as an expression.
    pub fn imag() -> Expr {
        Expr::from_poly(Poly::constant(GaussianRational::i()))
    }

    pub fn constant(c: GaussianRational) -> Expr {
        Expr::from_poly(Poly::constant(c))
    }

    pub fn var(ctx: &VarCtx, id: VarId) -> Expr {
        Expr::from_poly(Poly::from_atom(ctx.atom(id)))
    }

    pub fn from_atom(a: Atom) -> Expr {
        Expr::from_poly(Poly::from_atom(a))
    }

    /// `log` of a nonzero expression, as an opaque atom keyed by the
    /// canonical argument. No log laws are applied — even `log(1)` stays an
    /// atom — so distinct arguments give independent symbols.
    pub fn log(arg: &Expr) -> Result<Expr, ExprError> {
        if arg.is_zero() {
            return Err(ExprError::LogOfZero);
        }
        Ok(Expr::from_atom(Atom::Log(Arc::new(arg.clone()))))
    }

    pub fn num_poly(&self) -> &Poly {
        &self.num
    }

    pub fn den_poly(&self) -> &Poly {
        &self.den
    }

    /// Identical-zero test. Sound and complete on this class: canonical form
    /// reduces it to a numerator check.
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    /// `Some(c)` when the expression is the constant `c`.
    pub fn as_constant(&self) -> Option<GaussianRational> {
        if !self.den.is_one() {
            return None;
        }
        self.num.as_constant()
    }

    /// True when no named variable and no log atom occurs.
    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    /// True when neither side mentions `v`, including inside log arguments.
    pub fn free_of(&self, v: VarId) -> bool {
        poly_free_of(&self.num, v) && poly_free_of(&self.den, v)
    }

    /// True when any log atom occurs (at any nesting depth).
    pub fn contains_log(&self) -> bool {
        poly_has_log(&self.num) || poly_has_log(&self.den)
    }

    pub fn checked_div(&self, rhs: &Expr) -> Result<Expr, ExprError> {
        if rhs.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Expr::new(&self.num * &rhs.den, &self.den * &rhs.num)
    }

    /// Integer power; negative exponents invert, and `0^n` with `n < 0`
    /// errors out.
    pub fn pow(&self, n: i32) -> Result<Expr, ExprError> {
        if n == 0 {
            return Ok(Expr::one());
        }
        if n < 0 {
            if self.is_zero() {
                return Err(ExprError::ZeroToNegativePower);
            }
            let k = n.unsigned_abs();
            // num and den are coprime, so the swap is already reduced; only
            // the leading-coefficient normalization needs redoing.
            let new_den = self.num.pow(k);
            let new_num = self.den.pow(k);
            let lc = new_den.leading().1.inv();
            return Ok(Expr {
                num: new_num.scale(&lc),
                den: new_den.scale(&lc),
            });
        }
        Ok(Expr {
            num: self.num.pow(n as u32),
            den: self.den.pow(n as u32),
        })
    }

    /// Partial derivative by a named variable, with the chain rule applied
    /// to log atoms: `d log(u) = (du)/u`.
    pub fn diff(&self, v: VarId) -> Expr {
        if self.free_of(v) {
            return Expr::zero();
        }
        let dn = poly_diff(&self.num, v);
        let dd = poly_diff(&self.den, v);
        // (N/D)' = (N' D - N D') / D^2
        let num_part = &(&dn * &Expr::from_poly(self.den.clone()))
            - &(&Expr::from_poly(self.num.clone()) * &dd);
        let den_sq = Expr::from_poly(&self.den * &self.den);
        num_part
            .checked_div(&den_sq)
            .expect("denominator square is nonzero")
    }

    /// Simultaneous substitution of named variables. Log arguments are
    /// substituted recursively and re-canonicalized; substitution may fail on
    /// a resulting zero denominator or zero log argument.
    pub fn substitute(&self, subs: &[(VarId, Expr)]) -> Result<Expr, ExprError> {
        if subs.iter().all(|(v, _)| self.free_of(*v)) {
            return Ok(self.clone());
        }
        let n = subst_poly(&self.num, subs)?;
        let d = subst_poly(&self.den, subs)?;
        n.checked_div(&d)
    }

    /// Numeric evaluation. `vars` supplies values for named variables;
    /// `logv` supplies a value for each log atom given the exact value of
    /// its argument (tests use seeded random values here, which keeps
    /// distinct atoms independent).
    pub fn eval(
        &self,
        vars: &dyn Fn(VarId) -> GaussianRational,
        logv: &mut dyn FnMut(&GaussianRational) -> GaussianRational,
    ) -> Result<GaussianRational, ExprError> {
        let d = eval_poly(&self.den, vars, logv)?;
        if d.is_zero() {
            return Err(ExprError::PoleAtPoint);
        }
        let n = eval_poly(&self.num, vars, logv)?;
        Ok(&n / &d)
    }

    /// Exact square root, when the expression is a perfect square on this
    /// class (both numerator and denominator are polynomial squares).
    pub fn sqrt(&self) -> Option<Expr> {
        let n = self.num.sqrt()?;
        let d = self.den.sqrt()?;
        // num and den are coprime, so their roots are as well; the root of a
        // monic polynomial is monic, hence the result is already canonical.
        Some(Expr { num: n, den: d })
    }

    /// All atoms mentioned anywhere, including inside log arguments.
    pub fn atoms(&self) -> std::collections::BTreeSet<Atom> {
        let mut out = self.num.atoms();
        out.extend(self.den.atoms());
        let logs: Vec<Atom> = out.iter().filter(|a| a.is_log()).cloned().collect();
        for l in logs {
            if let Some(arg) = l.log_arg() {
                out.extend(arg.atoms());
            }
        }
        out
    }
}

fn poly_free_of(p: &Poly, v: VarId) -> bool {
    for (m, _) in p.terms() {
        for (a, _) in m.factors() {
            match a {
                Atom::Var { id, .. } if *id == v => return false,
                Atom::Log(arg) => {
                    if !arg.free_of(v) {
                        return false;
                    }
                }
                _ => {}
            }
        }
    }
    true
}

fn poly_has_log(p: &Poly) -> bool {
    p.terms()
        .iter()
        .any(|(m, _)| m.factors().iter().any(|(a, _)| a.is_log()))
}

/// Derivative of a polynomial as an expression: formal partials times the
/// chain-rule derivative of each atom.
fn poly_diff(p: &Poly, v: VarId) -> Expr {
    let mut acc = Expr::zero();
    for a in p.atoms() {
        let da = match &a {
            Atom::Var { id, .. } => {
                if *id == v {
                    Expr::one()
                } else {
                    continue;
                }
            }
            Atom::Log(arg) => {
                if arg.free_of(v) {
                    continue;
                }
                arg.diff(v)
                    .checked_div(arg)
                    .expect("log argument is nonzero")
            }
        };
        let partial = Expr::from_poly(p.partial(&a));
        acc = &acc + &(&partial * &da);
    }
    acc
}

fn subst_poly(p: &Poly, subs: &[(VarId, Expr)]) -> Result<Expr, ExprError> {
    let lookup = |id: VarId| subs.iter().find(|(v, _)| *v == id).map(|(_, e)| e);
    let touched = |m: &Mono| {
        m.factors().iter().any(|(a, _)| match a {
            Atom::Var { id, .. } => lookup(*id).is_some(),
            Atom::Log(arg) => subs.iter().any(|(v, _)| !arg.free_of(*v)),
        })
    };
    // Terms whose atoms are all unaffected pass through verbatim; only the
    // rest are rebuilt, and the pieces are summed pairwise so intermediate
    // operands stay balanced.
    let mut plain = Vec::new();
    let mut parts = Vec::new();
    for (m, c) in p.terms() {
        if !touched(m) {
            plain.push((m.clone(), c.clone()));
            continue;
        }
        let mut term = Expr::constant(c.clone());
        for (a, e) in m.factors() {
            let base = match a {
                Atom::Var { id, .. } => match lookup(*id) {
                    Some(b) => b.clone(),
                    None => Expr::from_atom(a.clone()),
                },
                Atom::Log(arg) => {
                    let new_arg = arg.substitute(subs)?;
                    Expr::log(&new_arg)?
                }
            };
            // Positive powers only inside monomials; this cannot hit the
            // zero-to-negative-power error.
            let powed = base.pow(*e as i32)?;
            term = &term * &powed;
        }
        parts.push(term);
    }
    if !plain.is_empty() {
        parts.push(Expr::from_poly(Poly::from_terms(plain)));
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len() / 2 + 1);
        let mut iter = parts.into_iter();
        while let Some(a) = iter.next() {
            match iter.next() {
                Some(b) => next.push(&a + &b),
                None => next.push(a),
            }
        }
        parts = next;
    }
    Ok(parts.pop().unwrap_or_else(Expr::zero))
}

fn eval_poly(
    p: &Poly,
    vars: &dyn Fn(VarId) -> GaussianRational,
    logv: &mut dyn FnMut(&GaussianRational) -> GaussianRational,
) -> Result<GaussianRational, ExprError> {
    let mut acc = GaussianRational::zero();
    for (m, c) in p.terms() {
        let mut val = c.clone();
        for (a, e) in m.factors() {
            let base = match a {
                Atom::Var { id, .. } => vars(*id),
                Atom::Log(arg) => {
                    let argv = arg.eval(vars, logv)?;
                    if argv.is_zero() {
                        return Err(ExprError::LogOfZero);
                    }
                    logv(&argv)
                }
            };
            val = &val * &base.pow(*e as i32);
        }
        acc = &acc + &val;
    }
    Ok(acc)
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        // Use the denominator gcd to keep the common denominator small.
        let g = gcd(&self.den, &rhs.den);
        let (da, db) = if g.is_one() {
            (self.den.clone(), rhs.den.clone())
        } else {
            (
                self.den.exact_div(&g).expect("gcd divides"),
                rhs.den.exact_div(&g).expect("gcd divides"),
            )
        };
        let num = &(&self.num * &db) + &(&rhs.num * &da);
        let den = &(&self.den * &db);
        Expr::new(num, den.clone()).expect("nonzero denominator")
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        // Cross-reduce before multiplying to keep intermediate sizes down.
        let g1 = gcd(&self.num, &rhs.den);
        let g2 = gcd(&rhs.num, &self.den);
        let na = self.num.exact_div(&g1).expect("gcd divides");
        let db = rhs.den.exact_div(&g1).expect("gcd divides");
        let nb = rhs.num.exact_div(&g2).expect("gcd divides");
        let da = self.den.exact_div(&g2).expect("gcd divides");
        Expr::new(&na * &nb, &da * &db).expect("nonzero denominator")
    }
}

/// Collects an expression as a polynomial in the atoms selected by `keep`,
/// returning (monomial over kept atoms, coefficient) pairs in descending
/// graded-lex order, with the constant-key entry always present (last).
///
/// Errors when the denominator contains a kept atom: the expression is then
/// not polynomial in the requested variables.
pub fn collect_by(e: &Expr, keep: &dyn Fn(&Atom) -> bool) -> Result<Vec<(Mono, Expr)>, ExprError> {
    for (m, _) in e.den_poly().terms() {
        for (a, _) in m.factors() {
            if keep(a) {
                return Err(ExprError::NotPolynomial(format!(
                    "denominator contains {}",
                    a
                )));
            }
        }
    }
    let mut groups: BTreeMap<Mono, Poly> = BTreeMap::new();
    for (m, c) in e.num_poly().terms() {
        let mut key_factors: Vec<(Atom, u32)> = Vec::new();
        let mut rest: Vec<(Atom, u32)> = Vec::new();
        for (a, k) in m.factors() {
            if keep(a) {
                key_factors.push((a.clone(), *k));
            } else {
                rest.push((a.clone(), *k));
            }
        }
        let key = key_factors
            .into_iter()
            .fold(Mono::one(), |acc, (a, k)| acc.mul(&Mono::atom(a, k)));
        let rest = rest
            .into_iter()
            .fold(Mono::one(), |acc, (a, k)| acc.mul(&Mono::atom(a, k)));
        let entry = groups.entry(key).or_insert_with(Poly::zero);
        *entry = &*entry + &Poly::term(rest, c.clone());
    }
    groups.entry(Mono::one()).or_insert_with(Poly::zero);
    let den = Expr::from_poly(e.den_poly().clone());
    let mut out = Vec::with_capacity(groups.len());
    for (key, val) in groups.into_iter().rev() {
        let coeff = Expr::from_poly(val)
            .checked_div(&den)
            .expect("denominator nonzero");
        out.push((key, coeff));
    }
    Ok(out)
}

/// Collects coefficients of monomials in the given named variables.
pub fn collect_coefficients(
    e: &Expr,
    vars: &[VarId],
) -> Result<Vec<(Mono, Expr)>, ExprError> {
    collect_by(e, &|a: &Atom| match a {
        Atom::Var { id, .. } => vars.contains(id),
        Atom::Log(_) => false,
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return self.num.fmt_sum(f);
        }
        let num_txt = format!("{}", self.num);
        let den_txt = format!("{}", self.den);
        // The numerator as a product prefix is safe unless it is a sum;
        // the denominator needs parens unless it is a single bare factor.
        if self.num.terms().len() > 1 {
            write!(f, "({})", num_txt)?;
        } else {
            write!(f, "{}", num_txt)?;
        }
        if self.den.terms().len() == 1 && !den_txt.contains('*') && !den_txt.contains('/') {
            write!(f, "/{}", den_txt)
        } else {
            write!(f, "/({})", den_txt)
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx_tq() -> (VarCtx, VarId, VarId, VarId) {
        let mut ctx = VarCtx::new();
        let t = ctx.declare("t", VarRole::Independent).unwrap();
        let q = ctx.declare("q", VarRole::Dependent).unwrap();
        let qd = ctx.declare("qd", VarRole::Jet).unwrap();
        (ctx, t, q, qd)
    }

    #[test]
    fn declaration_rules() {
        let mut ctx = VarCtx::new();
        ctx.declare("t", VarRole::Independent).unwrap();
        assert!(ctx.declare("t", VarRole::Jet).is_err());
        assert!(ctx.declare("i", VarRole::Auxiliary).is_err());
        assert!(ctx.declare("log", VarRole::Auxiliary).is_err());
        assert!(ctx.declare("2x", VarRole::Auxiliary).is_err());
        let c0 = ctx.fresh("c", VarRole::Auxiliary);
        let c1 = ctx.fresh("c", VarRole::Auxiliary);
        assert_ne!(c0, c1);
        assert_eq!(ctx.name(c1).as_ref(), "c1");
    }

    #[test]
    fn canonical_fraction_reduction() {
        let (ctx, t, q, qd) = ctx_tq();
        let tv = Expr::var(&ctx, t);
        let qv = Expr::var(&ctx, q);
        let qdv = Expr::var(&ctx, qd);
        // (t*qd - q)^3 / (t*qd - q) reduces to the square.
        let u = &(&tv * &qdv) - &qv;
        let cube = u.pow(3).unwrap();
        let red = cube.checked_div(&u).unwrap();
        assert_eq!(red, u.pow(2).unwrap());
        // Denominator normalization: leading coefficient becomes 1.
        let e = Expr::one().checked_div(&(&u * &Expr::int(2))).unwrap();
        assert!(e.den_poly().leading().1.is_one());
        assert_eq!(e.to_string(), "1/2/(t*qd - q)");
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e = Expr::int(3);
        assert_eq!(
            e.checked_div(&Expr::zero()).unwrap_err(),
            ExprError::DivisionByZero
        );
        assert_eq!(
            Expr::zero().pow(-2).unwrap_err(),
            ExprError::ZeroToNegativePower
        );
    }

    #[test]
    fn gaussian_constants_fold() {
        let i = Expr::imag();
        // (1+i)/(1-i) = i
        let n = &Expr::one() + &i;
        let d = &Expr::one() - &i;
        assert_eq!(n.checked_div(&d).unwrap(), i);
        assert_eq!((&i * &i), Expr::int(-1));
    }

    #[test]
    fn logs_stay_opaque() {
        let (ctx, t, ..) = ctx_tq();
        let tv = Expr::var(&ctx, t);
        let l_t2 = Expr::log(&tv.pow(2).unwrap()).unwrap();
        let l_t = Expr::log(&tv).unwrap();
        // No log laws: log(t^2) - 2 log(t) does not vanish.
        let diff = &l_t2 - &(&Expr::int(2) * &l_t);
        assert!(!diff.is_zero());
        // log(1) is also kept as an atom.
        let l1 = Expr::log(&Expr::one()).unwrap();
        assert!(!l1.is_zero());
        assert_eq!(Expr::log(&Expr::zero()).unwrap_err(), ExprError::LogOfZero);
    }

    #[test]
    fn diff_applies_chain_rule_through_log() {
        let (ctx, t, q, qd) = ctx_tq();
        let tv = Expr::var(&ctx, t);
        let qv = Expr::var(&ctx, q);
        let qdv = Expr::var(&ctx, qd);
        let u = &(&tv * &qdv) - &qv;
        // d/dqd (t*qd - q)^2 = 2t(t*qd - q)
        let sq = u.pow(2).unwrap();
        assert_eq!(sq.diff(qd), &(&Expr::int(2) * &tv) * &u);
        // d/dt log(t*qd - q) = qd/(t*qd - q)
        let l = Expr::log(&u).unwrap();
        assert_eq!(l.diff(t), qdv.checked_div(&u).unwrap());
        // d/dq log(t*qd - q) = -1/(t*qd - q)
        assert_eq!(
            l.diff(q),
            Expr::int(-1).checked_div(&u).unwrap()
        );
    }

    #[test]
    fn substitute_rebuilds_atoms() {
        let (ctx, t, q, qd) = ctx_tq();
        let tv = Expr::var(&ctx, t);
        let qv = Expr::var(&ctx, q);
        let u = &(&tv * &Expr::var(&ctx, qd)) - &qv;
        let l = Expr::log(&u).unwrap();
        // qd := q/t collapses the argument to zero: log-of-zero error.
        let qt = qv.checked_div(&tv).unwrap();
        assert_eq!(
            l.substitute(&[(qd, qt)]).unwrap_err(),
            ExprError::LogOfZero
        );
        // qd := 1 gives log(t - q).
        let l2 = l.substitute(&[(qd, Expr::one())]).unwrap();
        assert_eq!(l2, Expr::log(&(&tv - &qv)).unwrap());
        // 1/t at t := 0 is a division-by-zero error.
        let inv = Expr::one().checked_div(&tv).unwrap();
        assert_eq!(
            inv.substitute(&[(t, Expr::zero())]).unwrap_err(),
            ExprError::DivisionByZero
        );
    }

    #[test]
    fn collect_includes_constant_key() {
        let (ctx, t, q, qd) = ctx_tq();
        let tv = Expr::var(&ctx, t);
        let qdv = Expr::var(&ctx, qd);
        // qd^2 + t*qd over {qd}: {qd^2: 1, qd: t, 1: 0}
        let e = &qdv.pow(2).unwrap() + &(&tv * &qdv);
        let groups = collect_coefficients(&e, &[qd]).unwrap();
        assert_eq!(groups.len(), 3);
        assert_eq!(groups[0].1, Expr::one());
        assert_eq!(groups[1].1, tv.clone());
        assert!(groups[2].0.is_one());
        assert!(groups[2].1.is_zero());
        // Zero expression: only the constant key, zero.
        let z = collect_coefficients(&Expr::zero(), &[qd]).unwrap();
        assert_eq!(z.len(), 1);
        assert!(z[0].1.is_zero());
        // Non-polynomial dependence errors.
        let bad = Expr::one().checked_div(&qdv).unwrap();
        assert!(matches!(
            collect_coefficients(&bad, &[qd]),
            Err(ExprError::NotPolynomial(_))
        ));
        let _ = q;
    }

    #[test]
    fn eval_detects_poles() {
        let (ctx, t, q, _) = ctx_tq();
        let tv = Expr::var(&ctx, t);
        let e = Expr::one().checked_div(&tv).unwrap();
        let at_zero = e.eval(&|_| GaussianRational::zero(), &mut |_| {
            GaussianRational::zero()
        });
        assert_eq!(at_zero.unwrap_err(), ExprError::PoleAtPoint);
        let at_two = e.eval(
            &|id| {
                if id == t {
                    GaussianRational::from_int(2)
                } else {
                    GaussianRational::zero()
                }
            },
            &mut |_| GaussianRational::zero(),
        );
        assert_eq!(at_two.unwrap(), GaussianRational::from_ratio(1, 2));
        let _ = q;
    }
}
