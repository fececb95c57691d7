//! Sparse multivariate polynomials over Gaussian rationals.
//!
//! A polynomial is a sorted term list in graded-lexicographic order, leading
//! term first. Besides named variables, a monomial may contain opaque `log`
//! atoms keyed by their (canonicalized) argument expression; the polynomial
//! layer treats those as formal symbols and never looks inside them.

use crate::expr::Expr;
use crate::gaussian::GaussianRational;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

/// Index of a named variable inside a `VarCtx` (declaration order).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VarId(pub u32);

/// A multiplicand inside a monomial: a declared variable or an opaque
/// `log` atom.
///
/// Named atoms carry their display name alongside the id, but identity,
/// ordering, and hashing use the id alone; all expressions that meet in one
/// operation must come from the same variable context. Named atoms order
/// before log atoms, and ids follow declaration order, so the monomial order
/// is pinned by the context.
#[derive(Clone, Debug)]
pub enum Atom {
    Var { id: VarId, name: Arc<str> },
    Log(Arc<Expr>),
}

impl Atom {
    pub fn var(id: VarId, name: Arc<str>) -> Self {
        Atom::Var { id, name }
    }

    pub fn is_log(&self) -> bool {
        matches!(self, Atom::Log(_))
    }

    pub fn var_id(&self) -> Option<VarId> {
        match self {
            Atom::Var { id, .. } => Some(*id),
            Atom::Log(_) => None,
        }
    }

    pub fn log_arg(&self) -> Option<&Expr> {
        match self {
            Atom::Var { .. } => None,
            Atom::Log(arg) => Some(arg),
        }
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Atom::Var { id: a, .. }, Atom::Var { id: b, .. }) => a == b,
            (Atom::Log(a), Atom::Log(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Atom {}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Atom::Var { id: a, .. }, Atom::Var { id: b, .. }) => a.cmp(b),
            (Atom::Var { .. }, Atom::Log(_)) => Ordering::Less,
            (Atom::Log(_), Atom::Var { .. }) => Ordering::Greater,
            (Atom::Log(a), Atom::Log(b)) => a.cmp(b),
        }
    }
}

impl std::hash::Hash for Atom {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            Atom::Var { id, .. } => {
                0u8.hash(state);
                id.hash(state);
            }
            Atom::Log(arg) => {
                1u8.hash(state);
                arg.hash(state);
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var { name, .. } => write!(f, "{}", name),
            Atom::Log(arg) => write!(f, "log({})", arg),
        }
    }
}

/// A power product of atoms, kept sorted by atom with positive exponents.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Mono(Vec<(Atom, u32)>);

impl Mono {
    pub fn one() -> Self {
        Mono(Vec::new())
    }

    pub fn atom(a: Atom, exp: u32) -> Self {
        if exp == 0 {
            Mono::one()
        } else {
            Mono(vec![(a, exp)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent_of(&self, a: &Atom) -> u32 {
        self.0
            .iter()
            .find(|(b, _)| b == a)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Mono(out)
    }

    /// Exact monomial quotient, or `None` when some exponent would go
    /// negative.
    pub fn try_div(&self, other: &Mono) -> Option<Mono> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (a, e) in &self.0 {
            let mut e = *e;
            if j < other.0.len() && other.0[j].0 < *a {
                return None; // divisor has an atom we lack
            }
            if j < other.0.len() && other.0[j].0 == *a {
                if other.0[j].1 > e {
                    return None;
                }
                e -= other.0[j].1;
                j += 1;
            }
            if e > 0 {
                out.push((a.clone(), e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    /// Removes every power of `a`, returning the remaining monomial.
    pub fn without(&self, a: &Atom) -> Mono {
        Mono(self.0.iter().filter(|(b, _)| b != a).cloned().collect())
    }

    /// Halves every exponent; `None` if any is odd.
    pub fn half(&self) -> Option<Mono> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, e) in &self.0 {
            if e % 2 != 0 {
                return None;
            }
            out.push((a.clone(), e / 2));
        }
        Some(Mono(out))
    }

    /// Graded-lexicographic comparison: total degree first, then the earliest
    /// atom with a differing exponent decides (larger exponent wins).
    pub fn cmp_grlex(&self, other: &Mono) -> Ordering {
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => match self.0[i].1.cmp(&other.0[j].1) {
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                    }
                    ord => return ord,
                },
            }
        }
        if i < self.0.len() {
            Ordering::Greater
        } else if j < other.0.len() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_grlex(other)
    }
}

impl fmt::Display for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (a, e) in &self.0 {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{}", a)?;
            } else {
                write!(f, "{}^{}", a, e)?;
            }
        }
        Ok(())
    }
}

/// A sparse polynomial: term list sorted descending in graded-lex order.
///
/// Invariants: no zero coefficients, no duplicate monomials, leading term
/// first.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly {
    terms: Vec<(Mono, GaussianRational)>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(GaussianRational::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(Mono::one(), c)],
            }
        }
    }

    pub fn from_atom(a: Atom) -> Self {
        Poly {
            terms: vec![(Mono::atom(a, 1), GaussianRational::one())],
        }
    }

    pub fn term(m: Mono, c: GaussianRational) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    /// Builds from unsorted (monomial, coefficient) pairs, merging duplicates.
    pub fn from_terms(pairs: impl IntoIterator<Item = (Mono, GaussianRational)>) -> Self {
        let mut map: BTreeMap<Mono, GaussianRational> = BTreeMap::new();
        for (m, c) in pairs {
            if c.is_zero() {
                continue;
            }
            match map.entry(m) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(c);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let s = &*e.get() + &c;
                    if s.is_zero() {
                        e.remove();
                    } else {
                        *e.get_mut() = s;
                    }
                }
            }
        }
        let mut terms: Vec<_> = map.into_iter().collect();
        terms.reverse(); // BTreeMap ascends; we keep the leading term first
        Poly { terms }
    }

    pub fn terms(&self) -> &[(Mono, GaussianRational)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(c)` when the polynomial is the constant `c` (including zero).
    pub fn as_constant(&self) -> Option<GaussianRational> {
        match self.terms.len() {
            0 => Some(GaussianRational::zero()),
            1 if self.terms[0].0.is_one() => Some(self.terms[0].1.clone()),
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }

    /// Leading (monomial, coefficient) in graded-lex order. Panics on zero.
    pub fn leading(&self) -> (&Mono, &GaussianRational) {
        let (m, c) = &self.terms[0];
        (m, c)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.first().map(|(m, _)| m.total_degree()).unwrap_or(0)
    }

    pub fn degree_in(&self, a: &Atom) -> u32 {
        self.terms
            .iter()
            .map(|(m, _)| m.exponent_of(a))
            .max()
            .unwrap_or(0)
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.terms.iter().any(|(m, _)| m.exponent_of(a) > 0)
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        for (m, _) in &self.terms {
            for (a, _) in m.factors() {
                out.insert(a.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &GaussianRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    /// Divides by the leading coefficient so it becomes exactly 1.
    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let inv = self.leading().1.inv();
        self.scale(&inv)
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            if k > 1 {
                base = &base * &base;
            }
            k >>= 1;
        }
        acc
    }

    /// Formal partial derivative with respect to one atom (log atoms are
    /// treated as independent symbols here; the chain rule lives in the
    /// expression layer).
    pub fn partial(&self, a: &Atom) -> Poly {
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            let e = m.exponent_of(a);
            if e == 0 {
                continue;
            }
            let mut reduced: Vec<(Atom, u32)> = Vec::with_capacity(m.factors().len());
            for (b, k) in m.factors() {
                if b == a {
                    if *k > 1 {
                        reduced.push((b.clone(), k - 1));
                    }
                } else {
                    reduced.push((b.clone(), *k));
                }
            }
            out.push((Mono(reduced), c * &GaussianRational::from_int(e as i64)));
        }
        Poly::from_terms(out)
    }

    /// Replaces `a` by a polynomial and re-expands.
    pub fn subst_atom(&self, a: &Atom, value: &Poly) -> Poly {
        if !self.contains(a) {
            return self.clone();
        }
        // Group by the power of `a`, then fold with Horner to bound the
        // number of multiplications.
        let deg = self.degree_in(a);
        let mut buckets: Vec<Poly> = vec![Poly::zero(); (deg + 1) as usize];
        for (m, c) in &self.terms {
            let e = m.exponent_of(a) as usize;
            let rest = Poly::term(m.without(a), c.clone());
            buckets[e] = &buckets[e] + &rest;
        }
        let mut acc = Poly::zero();
        for b in buckets.into_iter().rev() {
            acc = &(&acc * value) + &b;
        }
        acc
    }

    /// Dense list of coefficients of powers of `a`: index `k` holds the
    /// coefficient polynomial of `a^k` (free of `a`).
    pub fn to_univar(&self, a: &Atom) -> Vec<Poly> {
        let deg = self.degree_in(a) as usize;
        let mut out = vec![Poly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let e = m.exponent_of(a) as usize;
            out[e] = &out[e] + &Poly::term(m.without(a), c.clone());
        }
        out
    }

    /// Rebuilds from a dense coefficient list in `a` (inverse of
    /// `to_univar`). Coefficients must be free of `a`.
    pub fn from_univar(coeffs: &[Poly], a: &Atom) -> Poly {
        let mut acc = Poly::zero();
        for (e, c) in coeffs.iter().enumerate() {
            let pow = Poly::term(Mono::atom(a.clone(), e as u32), GaussianRational::one());
            acc = &acc + &(c * &pow);
        }
        acc
    }

    /// Exact division: `Some(q)` with `self == q * div`, else `None`.
    pub fn exact_div(&self, div: &Poly) -> Option<Poly> {
        assert!(!div.is_zero(), "division by zero polynomial");
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = div.as_constant() {
            return Some(self.scale(&c.inv()));
        }
        let mut rem = self.clone();
        let mut q = Vec::new();
        let (dm, dc) = (div.terms[0].0.clone(), div.terms[0].1.clone());
        while !rem.is_zero() {
            let (rm, rc) = rem.leading();
            let m = rm.try_div(&dm)?;
            let c = rc / &dc;
            let t = Poly::term(m, c);
            rem = &rem - &(&t * div);
            q.push(t);
        }
        let mut acc = Poly::zero();
        for t in q {
            acc = &acc + &t;
        }
        Some(acc)
    }

    /// Evaluates with atom values supplied by `point`.
    pub fn eval(&self, point: &dyn Fn(&Atom) -> GaussianRational) -> GaussianRational {
        let mut acc = GaussianRational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (a, e) in m.factors() {
                v = &v * &point(a).pow(*e as i32);
            }
            acc = &acc + &v;
        }
        acc
    }

    /// Content with respect to `a`: the gcd of the coefficient polynomials
    /// of the powers of `a`.
    pub fn content_in(&self, a: &Atom) -> Poly {
        let coeffs = self.to_univar(a);
        let mut g = Poly::zero();
        for c in coeffs.iter().filter(|c| !c.is_zero()) {
            g = gcd(&g, c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Exact square root, if the polynomial is a perfect square.
    pub fn sqrt(&self) -> Option<Poly> {
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let (lm, lc) = self.leading();
        let root_m = lm.half()?;
        let root_c = lc.sqrt()?;
        let mut r = Poly::term(root_m, root_c);
        let lead2 = r.scale(&GaussianRational::from_int(2));
        let mut last: Option<Mono> = None;
        loop {
            let d = self - &(&r * &r);
            if d.is_zero() {
                return Some(r);
            }
            let (dm, dc) = d.leading();
            // Next correction term: leading(d) / (2 * leading(r)).
            let m = dm.try_div(r.leading().0)?;
            let c = dc / lead2.leading().1;
            // Strict graded-lex descent of the correction terms is what a
            // true square produces; anything else means "not a square".
            if let Some(prev) = &last {
                if m.cmp_grlex(prev) != Ordering::Less {
                    return None;
                }
            }
            last = Some(m.clone());
            r = &r + &Poly::term(m, c);
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + rhs.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < rhs.terms.len() {
            match self.terms[i].0.cmp_grlex(&rhs.terms[j].0) {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(rhs.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &rhs.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&rhs.terms[j..]);
        Poly { terms: out }
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut pairs = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                pairs.push((ma.mul(mb), ca * cb));
            }
        }
        Poly::from_terms(pairs)
    }
}

/// Greatest common divisor, normalized monic (leading coefficient 1).
///
/// Recursive primitive pseudo-remainder sequences: pick a shared atom as the
/// main variable, strip contents, run the PRS, and put the content gcd back.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    // Single-term input: the gcd is its common monomial factor with every
    // term of the other side.
    if a.terms().len() == 1 || b.terms().len() == 1 {
        let (m, other) = if a.terms().len() == 1 {
            (&a.terms()[0].0, b)
        } else {
            (&b.terms()[0].0, a)
        };
        let mut g = m.clone();
        for (om, _) in other.terms() {
            g = mono_gcd(&g, om);
            if g.is_one() {
                break;
            }
        }
        return Poly::term(g, GaussianRational::one());
    }
    let atoms_a = a.atoms();
    let atoms_b = b.atoms();
    // Main variable: first atom shared by both, preferring low degrees to
    // keep the PRS short.
    let shared: Vec<&Atom> = atoms_a.intersection(&atoms_b).collect();
    let v = match shared
        .iter()
        .min_by_key(|v| a.degree_in(v).max(b.degree_in(v)))
    {
        Some(v) => (*v).clone(),
        None => {
            // Disjoint atom sets: a common divisor could only use atoms
            // present on both sides, so the monic gcd is 1.
            return Poly::one();
        }
    };
    let ca = a.content_in(&v);
    let cb = b.content_in(&v);
    let pa = a.exact_div(&ca).expect("content divides");
    let pb = b.exact_div(&cb).expect("content divides");
    let cg = gcd(&ca, &cb);
    let pg = prs_gcd(&pa, &pb, &v);
    (&cg * &pg).monic()
}

/// Componentwise minimum of two monomials.
pub(crate) fn mono_gcd(a: &Mono, b: &Mono) -> Mono {
    let mut out = Mono::one();
    for (atom, ea) in a.factors() {
        let k = (*ea).min(b.exponent_of(atom));
        if k > 0 {
            out = out.mul(&Mono::atom(atom.clone(), k));
        }
    }
    out
}

/// Primitive pseudo-remainder sequence for inputs primitive in `v`.
fn prs_gcd(a: &Poly, b: &Poly, v: &Atom) -> Poly {
    let (mut f, mut g) = if a.degree_in(v) >= b.degree_in(v) {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    };
    loop {
        if g.is_zero() {
            break;
        }
        if g.degree_in(v) == 0 {
            return Poly::one();
        }
        let r = pseudo_rem(&f, &g, v);
        if r.is_zero() {
            return g.monic();
        }
        let content = r.content_in(v);
        let r = r.exact_div(&content).expect("content divides");
        f = g;
        g = r;
    }
    f.monic()
}

/// Pseudo-remainder of `f` by `g` in the variable `v`.
fn pseudo_rem(f: &Poly, g: &Poly, v: &Atom) -> Poly {
    let dg = g.degree_in(v);
    let g_coeffs = g.to_univar(v);
    let lc = g_coeffs[dg as usize].clone();
    let mut r = f.clone();
    while !r.is_zero() && r.degree_in(v) >= dg {
        let dr = r.degree_in(v);
        let r_coeffs = r.to_univar(v);
        let lead = &r_coeffs[dr as usize];
        let shift = Poly::term(Mono::atom(v.clone(), dr - dg), GaussianRational::one());
        r = &(&r * &lc) - &(&(lead * g) * &shift);
    }
    r
}

impl Poly {
    /// Renders as a sum of terms; used by the expression printer.
    pub fn fmt_sum(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let txt = render_term(m, c);
            if k == 0 {
                write!(f, "{}", txt)?;
            } else if let Some(rest) = txt.strip_prefix('-') {
                write!(f, " - {}", rest)?;
            } else {
                write!(f, " + {}", txt)?;
            }
        }
        Ok(())
    }
}

/// One term in grammar-compatible form, with a leading `-` when the
/// coefficient is "negative" (negative real part, or zero real part and
/// negative imaginary part).
fn render_term(m: &Mono, c: &GaussianRational) -> String {
    use num::traits::{Signed, Zero};
    let neg = c.re().is_negative() || (c.re().is_zero() && c.im().is_negative());
    let (sign, c) = if neg {
        ("-".to_string(), -c)
    } else {
        (String::new(), c.clone())
    };
    if m.is_one() {
        let body = c.to_string();
        // A two-part constant needs no parens as a standalone term; the sum
        // structure still parses associatively.
        return format!("{}{}", sign, body);
    }
    if c.is_one() {
        return format!("{}{}", sign, m);
    }
    let body = c.to_string();
    if body.contains(' ') {
        format!("{}({})*{}", sign, body, m)
    } else {
        format!("{}{}*{}", sign, body, m)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_sum(f)
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_sum(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(id: u32, name: &str) -> Atom {
        Atom::var(VarId(id), Arc::from(name))
    }

    fn c(n: i64) -> GaussianRational {
        GaussianRational::from_int(n)
    }

    /// `coef * a^ea * b^eb` over two fixed test variables.
    fn t2(coef: i64, ea: u32, eb: u32) -> Poly {
        let m = Mono::atom(v(0, "t"), ea).mul(&Mono::atom(v(1, "q"), eb));
        Poly::term(m, c(coef))
    }

    #[test]
    fn grlex_orders_by_degree_then_early_variable() {
        let t2q = t2(1, 2, 1).leading().0.clone(); // t^2*q, degree 3
        let tq2 = t2(1, 1, 2).leading().0.clone(); // t*q^2, degree 3
        let q2 = t2(1, 0, 2).leading().0.clone(); // q^2, degree 2
        assert_eq!(t2q.cmp_grlex(&tq2), Ordering::Greater);
        assert_eq!(tq2.cmp_grlex(&q2), Ordering::Greater);
        assert_eq!(q2.cmp_grlex(&q2), Ordering::Equal);
    }

    #[test]
    fn arithmetic_keeps_canonical_term_order() {
        let p = &(&t2(3, 2, 0) + &t2(-1, 0, 1)) + &t2(5, 0, 0);
        assert_eq!(p.to_string(), "3*t^2 - q + 5");
        let sq = &p * &p;
        assert_eq!(
            &(&sq - &(&p * &p)),
            &Poly::zero(),
        );
    }

    #[test]
    fn exact_division_round_trips() {
        let a = &t2(1, 1, 1) - &t2(1, 0, 0); // t*q - 1
        let b = &t2(2, 0, 1) + &t2(3, 1, 0); // 2q + 3t
        let prod = &a * &b;
        assert_eq!(prod.exact_div(&a).unwrap(), b);
        assert_eq!(prod.exact_div(&b).unwrap(), a);
        assert!(prod.exact_div(&(&a + &Poly::one())).is_none());
    }

    #[test]
    fn gcd_of_common_factor() {
        let f = &t2(1, 1, 1) - &t2(1, 0, 0); // t*q - 1
        let g = &t2(1, 1, 0) + &t2(1, 0, 1); // t + q
        let a = &f.pow(2) * &g;
        let b = &f * &g.pow(2);
        let d = gcd(&a, &b);
        assert_eq!(d, (&f * &g).monic());
        // Coprime inputs give 1; a zero side returns the other, monic.
        assert!(gcd(&f, &g).is_one());
        assert_eq!(gcd(&Poly::zero(), &f), f.monic());
    }

    #[test]
    fn content_and_univar_views() {
        let t = v(0, "t");
        // (q+1)*t^2 + (q^2+q)*t = t*(q+1)*(t + q)
        let p = &(&t2(1, 2, 1) + &t2(1, 2, 0)) + &(&t2(1, 1, 2) + &t2(1, 1, 1));
        let content = p.content_in(&t);
        assert_eq!(content.to_string(), "q + 1");
        let coeffs = p.to_univar(&t);
        assert_eq!(coeffs.len(), 3);
        assert_eq!(Poly::from_univar(&coeffs, &t), p);
    }

    #[test]
    fn sqrt_recognizes_squares() {
        let p = &(&t2(2, 1, 0) - &t2(3, 0, 1)) + &t2(1, 0, 0); // 2t - 3q + 1
        let sq = &p * &p;
        assert_eq!(sq.sqrt().unwrap(), p);
        assert!((&sq + &Poly::one()).sqrt().is_none());
        assert_eq!(Poly::zero().sqrt().unwrap(), Poly::zero());
    }

    #[test]
    fn partial_derivative_is_formal() {
        let t = v(0, "t");
        let q = v(1, "q");
        let p = &t2(1, 2, 1) + &t2(4, 0, 3); // t^2*q + 4q^3
        assert_eq!(p.partial(&t).to_string(), "2*t*q");
        assert_eq!(p.partial(&q).to_string(), "t^2 + 12*q^2");
        assert!(p.partial(&v(2, "z")).is_zero());
    }

    #[test]
    fn subst_atom_expands() {
        let q = v(1, "q");
        let p = &t2(1, 0, 2) + &t2(1, 1, 0); // q^2 + t
        let val = &t2(1, 1, 0) + &t2(1, 0, 0); // t + 1
        let s = p.subst_atom(&q, &val);
        assert_eq!(s.to_string(), "t^2 + 3*t + 1");
    }
}
