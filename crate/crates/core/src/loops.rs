//! Loop operations: quotients, modified products, associators, nuclei and identity suites.

use crate::algebra::{AlgebraTag, AlgebraValue, MulTable};
use crate::error::Result;
use crate::numerics::{nullspace, Matrix, Rational, Scalar};
use crate::report::{Check, Report};
use crate::sampling::Sampler;

/// Which elements the loop lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    UnitNorm,
    Invertible,
}

/// Loop structure on a composition algebra with a given multiplication table.
#[derive(Clone, Debug)]
pub struct LoopContext {
    pub tag: AlgebraTag,
    pub table: MulTable,
    pub constraint: Constraint,
}

type V<S> = AlgebraValue<S>;

impl LoopContext {
    pub fn new(tag: AlgebraTag) -> Self {
        LoopContext { tag, table: MulTable::standard(tag).clone(), constraint: Constraint::Invertible }
    }

    pub fn unit(tag: AlgebraTag) -> Self {
        LoopContext { constraint: Constraint::UnitNorm, ..Self::new(tag) }
    }

    /// Context over a modified (e.g. deliberately corrupted) table.
    pub fn with_table(tag: AlgebraTag, table: MulTable) -> Self {
        LoopContext { tag, table, constraint: Constraint::Invertible }
    }

    pub fn one<S: Scalar>(&self) -> V<S> {
        V::one(self.tag)
    }

    pub fn mul<S: Scalar>(&self, p: &V<S>, q: &V<S>) -> V<S> {
        V::new(self.tag, self.table.mul(&p.coords, &q.coords))
    }

    /// `x` with `q x = p`.
    pub fn ldiv<S: Scalar>(&self, q: &V<S>, p: &V<S>) -> Result<V<S>> {
        let x = self.table.left_matrix(&q.coords).solve(&p.coords)?;
        Ok(V::new(self.tag, x))
    }

    /// `x` with `x q = p`.
    pub fn rdiv<S: Scalar>(&self, p: &V<S>, q: &V<S>) -> Result<V<S>> {
        let x = self.table.right_matrix(&q.coords).solve(&p.coords)?;
        Ok(V::new(self.tag, x))
    }

    /// `p ∘_r q = (p (q r)) / r`.
    pub fn mod_product<S: Scalar>(&self, r: &V<S>, p: &V<S>, q: &V<S>) -> Result<V<S>> {
        self.rdiv(&self.mul(p, &self.mul(q, r)), r)
    }

    /// `p /_r q = (p r) / (q r)`.
    pub fn mod_rdiv<S: Scalar>(&self, r: &V<S>, p: &V<S>, q: &V<S>) -> Result<V<S>> {
        self.rdiv(&self.mul(p, r), &self.mul(q, r))
    }

    /// `p \_r q = (p \ (q r)) / r`.
    pub fn mod_ldiv<S: Scalar>(&self, r: &V<S>, p: &V<S>, q: &V<S>) -> Result<V<S>> {
        self.rdiv(&self.ldiv(p, &self.mul(q, r))?, r)
    }

    /// Left inverse in `(L, ∘_r)`: `r / (q r)`.
    pub fn mod_left_inverse<S: Scalar>(&self, r: &V<S>, q: &V<S>) -> Result<V<S>> {
        self.rdiv(r, &self.mul(q, r))
    }

    /// Right inverse in `(L, ∘_r)`: `(q \ r) / r`.
    pub fn mod_right_inverse<S: Scalar>(&self, r: &V<S>, q: &V<S>) -> Result<V<S>> {
        self.rdiv(&self.ldiv(q, r)?, r)
    }

    /// `[p,q,r] = (p ∘_r q) / (p q)`.
    pub fn loop_associator<S: Scalar>(&self, p: &V<S>, q: &V<S>, r: &V<S>) -> Result<V<S>> {
        self.rdiv(&self.mod_product(r, p, q)?, &self.mul(p, q))
    }

    /// `[p,q] = ((p q) / p) / q`.
    pub fn loop_commutator<S: Scalar>(&self, p: &V<S>, q: &V<S>) -> Result<V<S>> {
        self.rdiv(&self.rdiv(&self.mul(p, q), p)?, q)
    }

    /// Stacked matrix of `r -> (e_a e_b) r - e_a (e_b r)` over all basis pairs.
    pub fn nucleus_matrix<S: Scalar>(&self) -> Matrix<S> {
        let n = self.tag.dim();
        let mut blocks = Vec::with_capacity(n * n);
        for a in 0..n {
            let ea = V::<S>::basis(self.tag, a);
            let la = self.table.left_matrix(&ea.coords);
            for b in 0..n {
                let eb = V::<S>::basis(self.tag, b);
                let ab = self.mul(&ea, &eb);
                let lab = self.table.left_matrix(&ab.coords);
                let lb = self.table.left_matrix(&eb.coords);
                blocks.push(lab.sub(&la.mul(&lb)));
            }
        }
        Matrix::vstack(&blocks)
    }

    /// Exact basis of the right-nucleus direction space.
    pub fn nucleus_basis(&self) -> Vec<V<Rational>> {
        nullspace(&self.nucleus_matrix::<Rational>(), 0.0)
            .into_iter()
            .map(|v| V::new(self.tag, v))
            .collect()
    }

    /// Checks `Ad_q` is a right pseudoautomorphism with companion `q^3` on the given pairs.
    pub fn adq_companion_check<S: Scalar>(&self, q: &V<S>, xy: &[(V<S>, V<S>)]) -> Result<Check> {
        let qi = self.rdiv(&self.one(), q)?;
        let ad = |x: &V<S>| self.mul(&self.mul(q, x), &qi);
        let q3 = self.mul(q, &self.mul(q, q));
        let mut worst = 0.0f64;
        for (x, y) in xy {
            let lhs = self.mul(&ad(&self.mul(x, y)), &q3);
            let rhs = self.mul(&ad(x), &self.mul(&ad(y), &q3));
            worst = worst.max((lhs - rhs).max_abs());
        }
        Ok(Check::new("adq-companion-q3", "Moufang-Adq", xy.len(), worst, tol_for::<S>()))
    }
}

/// Default residual tolerance for a scalar mode: zero when exact.
pub fn tol_for<S: Scalar>() -> f64 {
    if S::EXACT {
        0.0
    } else {
        1e-12
    }
}

/// Identity-suite sample triples.
pub fn rational_triples(tag: AlgebraTag, n: usize, seed: u64) -> Vec<[V<Rational>; 3]> {
    let mut s = Sampler::new(seed);
    (0..n).map(|_| [s.rational_value(tag), s.rational_value(tag), s.rational_value(tag)]).collect()
}

pub fn float_triples(tag: AlgebraTag, n: usize, seed: u64) -> Vec<[V<f64>; 3]> {
    let mut s = Sampler::new(seed);
    (0..n).map(|_| [s.unit(tag), s.unit(tag), s.unit(tag)]).collect()
}

type Ident<S> = (&'static str, &'static str, fn(&LoopContext, &V<S>, &V<S>, &V<S>) -> Result<V<S>>);

fn identities<S: Scalar>() -> Vec<Ident<S>> {
    vec![
        ("identity-element", "loop-identity", |c, p, _, _| {
            let one = c.one();
            Ok((c.mul(&one, p) - p.clone()) + (c.mul(p, &one) - p.clone()))
        }),
        ("quasigroup-ldiv-mul", "quasigroup-1", |c, p, q, _| Ok(c.ldiv(q, &c.mul(q, p))? - p.clone())),
        ("quasigroup-mul-ldiv", "quasigroup-2", |c, p, q, _| Ok(c.mul(q, &c.ldiv(q, p)?) - p.clone())),
        ("quasigroup-rdiv-mul", "quasigroup-3", |c, p, q, _| Ok(c.rdiv(&c.mul(p, q), q)? - p.clone())),
        ("quasigroup-mul-rdiv", "quasigroup-4", |c, p, q, _| Ok(c.mul(&c.rdiv(p, q)?, q) - p.clone())),
        ("two-sided-inverse", "inverses", |c, p, _, _| {
            let one = c.one();
            Ok(c.ldiv(p, &one)? - c.rdiv(&one, p)?)
        }),
        ("left-inverse-property", "LIP", |c, p, q, _| {
            let pl = c.rdiv(&c.one(), p)?;
            Ok(c.mul(&pl, &c.mul(p, q)) - q.clone())
        }),
        ("right-inverse-property", "RIP", |c, p, q, _| {
            let pr = c.ldiv(p, &c.one())?;
            Ok(c.mul(&c.mul(q, p), &pr) - q.clone())
        }),
        ("rdiv-is-inverse-product", "RIP-quotient", |c, p, q, _| {
            let qi = c.ldiv(q, &c.one())?;
            Ok(c.rdiv(p, q)? - c.mul(p, &qi))
        }),
        ("left-alternative", "alternativity", |c, p, q, _| Ok(c.mul(&c.mul(p, p), q) - c.mul(p, &c.mul(p, q)))),
        ("right-alternative", "alternativity", |c, p, q, _| Ok(c.mul(q, &c.mul(p, p)) - c.mul(&c.mul(q, p), p))),
        ("flexible", "flexibility", |c, p, q, _| Ok(c.mul(&c.mul(p, q), p) - c.mul(p, &c.mul(q, p)))),
        ("left-bol", "leftBol", |c, p, q, r| {
            Ok(c.mul(p, &c.mul(q, &c.mul(p, r))) - c.mul(&c.mul(p, &c.mul(q, p)), r))
        }),
        ("right-bol", "rightBol", |c, p, q, r| {
            Ok(c.mul(&c.mul(&c.mul(r, p), q), p) - c.mul(r, &c.mul(&c.mul(p, q), p)))
        }),
        ("moufang-middle", "Moufang", |c, p, q, r| {
            Ok(c.mul(&c.mul(p, q), &c.mul(r, p)) - c.mul(&c.mul(p, &c.mul(q, r)), p))
        }),
        ("power-associative", "power-assoc", |c, p, _, _| {
            let p2 = c.mul(p, p);
            let p3l = c.mul(&p2, p);
            let p3r = c.mul(p, &p2);
            let p4a = c.mul(&p2, &p2);
            let p4b = c.mul(&p3l, p);
            Ok((p3l - p3r) + (p4a - p4b))
        }),
    ]
}

/// Exact (or tolerance-based) pass/fail for every loop identity on the given triples.
pub fn identity_suite<S: Scalar>(ctx: &LoopContext, samples: &[[V<S>; 3]]) -> Result<Report> {
    let mut report = Report::new(&format!("loop-identities-{}", ctx.tag));
    for (name, tag, f) in identities::<S>() {
        let mut worst = 0.0f64;
        for [p, q, r] in samples {
            let res = f(ctx, p, q, r)?;
            let scale = if S::EXACT { 1.0 } else { 1.0 + p.max_abs().max(q.max_abs()).max(r.max_abs()).powi(4) };
            worst = worst.max(res.max_abs() / scale);
        }
        report.push(Check::new(name, tag, samples.len(), worst, tol_for::<S>()));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = V<Rational>;

    #[test]
    fn quotients_exact() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let mut s = Sampler::new(1);
        let p = s.rational_value(AlgebraTag::O);
        let q = s.rational_value(AlgebraTag::O);
        assert_eq!(ctx.rdiv(&p, &Q::one(AlgebraTag::O)).unwrap(), p);
        assert_eq!(ctx.rdiv(&ctx.mul(&p, &q), &q).unwrap(), p);
        assert_eq!(ctx.rdiv(&p, &q).unwrap(), ctx.mul(&p, &q.inverse().unwrap()));
    }

    #[test]
    fn modified_product_basics() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let mut s = Sampler::new(2);
        let (p, q, r, x) = (
            s.rational_value(AlgebraTag::O),
            s.rational_value(AlgebraTag::O),
            s.rational_value(AlgebraTag::O),
            s.rational_value(AlgebraTag::O),
        );
        let one = Q::one(AlgebraTag::O);
        assert_eq!(ctx.mod_product(&one, &p, &q).unwrap(), ctx.mul(&p, &q));
        let real = Q::real(AlgebraTag::O, Rational::from_ratio(3, 7));
        assert_eq!(ctx.mod_product(&real, &p, &q).unwrap(), ctx.mul(&p, &q));
        assert_eq!(ctx.mod_product(&r, &one, &q).unwrap(), q);
        let pq = ctx.mod_product(&r, &p, &q).unwrap();
        assert_eq!(ctx.mod_rdiv(&r, &pq, &q).unwrap(), p);
        assert_eq!(ctx.mod_rdiv(&one, &p, &q).unwrap(), ctx.rdiv(&p, &q).unwrap());
        let rho = ctx.mod_right_inverse(&r, &q).unwrap();
        assert_eq!(ctx.mod_product(&r, &q, &rho).unwrap(), one);
        let lam = ctx.mod_left_inverse(&r, &q).unwrap();
        assert_eq!(ctx.mod_product(&r, &lam, &q).unwrap(), one);
        // p ∘_{rx} q = (p ∘_x (q ∘_x r)) /_x r
        let rx = ctx.mul(&r, &x);
        let lhs = ctx.mod_product(&rx, &p, &q).unwrap();
        let inner = ctx.mod_product(&x, &q, &r).unwrap();
        let rhs = ctx.mod_rdiv(&x, &ctx.mod_product(&x, &p, &inner).unwrap(), &r).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn associator_and_commutator() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let mut s = Sampler::new(4);
        let p = s.rational_value(AlgebraTag::O);
        let q = s.rational_value(AlgebraTag::O);
        let one = Q::one(AlgebraTag::O);
        assert_eq!(ctx.loop_associator(&p, &q, &one).unwrap(), one);
        let e = |i| Q::basis(AlgebraTag::O, i);
        assert_ne!(ctx.loop_associator(&e(1), &e(2), &e(4)).unwrap(), one);
        assert_eq!(ctx.loop_associator(&e(1), &e(2), &e(3)).unwrap(), one);
        let h = LoopContext::new(AlgebraTag::H);
        for _ in 0..20 {
            let [a, b, c] = [s.rational_value(AlgebraTag::H), s.rational_value(AlgebraTag::H), s.rational_value(AlgebraTag::H)];
            assert_eq!(h.loop_associator(&a, &b, &c).unwrap(), Q::one(AlgebraTag::H));
        }
        assert_eq!(ctx.loop_commutator(&p, &p).unwrap(), one);
    }

    #[test]
    fn nucleus_dimensions() {
        assert_eq!(LoopContext::new(AlgebraTag::O).nucleus_basis().len(), 1);
        assert_eq!(LoopContext::new(AlgebraTag::H).nucleus_basis().len(), 4);
        assert_eq!(LoopContext::new(AlgebraTag::C).nucleus_basis().len(), 2);
        let b = LoopContext::new(AlgebraTag::O).nucleus_basis();
        assert!(b[0].im().is_zero());
    }

    #[test]
    fn suites_pass_and_mutation_fails() {
        let samples = rational_triples(AlgebraTag::O, 30, 11);
        let ok = identity_suite(&LoopContext::new(AlgebraTag::O), &samples).unwrap();
        assert!(ok.passed(), "{:?}", ok.failures());
        let bad = LoopContext::with_table(AlgebraTag::O, MulTable::standard(AlgebraTag::O).corrupted(3, 5));
        let r = identity_suite(&bad, &samples).unwrap();
        assert!(!r.get("left-bol").unwrap().passed);
        let hs = rational_triples(AlgebraTag::H, 30, 12);
        assert!(identity_suite(&LoopContext::new(AlgebraTag::H), &hs).unwrap().passed());
    }

    #[test]
    fn adq_companion() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let mut s = Sampler::new(5);
        let xy: Vec<_> = (0..10).map(|_| (s.rational_value(AlgebraTag::O), s.rational_value(AlgebraTag::O))).collect();
        let q = s.rational_value(AlgebraTag::O);
        assert!(ctx.adq_companion_check(&q, &xy).unwrap().passed);
        assert!(ctx.adq_companion_check(&Q::one(AlgebraTag::O), &xy).unwrap().passed);
    }
}
