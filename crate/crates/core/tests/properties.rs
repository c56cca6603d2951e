use proptest::prelude::*;

use loopforge::config::RunConfig;
use loopforge::loops::LoopContext;
use loopforge::numerics::{Rational, Scalar};
use loopforge::report::Check;
use loopforge::tangent::{bracket_closed, bracket_transport, exp_closed};
use loopforge::{AlgebraTag, AlgebraValue as V};

fn ints(n: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-9i64..=9, n)
}

fn floats(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

fn exact(tag: AlgebraTag, c: &[i64]) -> V<Rational> {
    V::new(tag, c.iter().map(|&x| Rational::from_i64(x)).collect())
}

fn unit(tag: AlgebraTag, c: &[f64]) -> Option<V<f64>> {
    let v = V::new(tag, c.to_vec());
    let n = v.norm2().sqrt();
    (n > 1e-3).then(|| v.scale(&(1.0 / n)))
}

fn close(a: &V<f64>, b: &V<f64>, tol: f64) -> bool {
    (a.clone() - b.clone()).max_abs() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn octonion_moufang_exact(p in ints(8), q in ints(8), r in ints(8)) {
        let ctx = LoopContext::new(AlgebraTag::O);
        let (p, q, r) = (exact(AlgebraTag::O, &p), exact(AlgebraTag::O, &q), exact(AlgebraTag::O, &r));
        // (pq)(rp) = p((qr)p)
        let lhs = ctx.mul(&ctx.mul(&p, &q), &ctx.mul(&r, &p));
        let rhs = ctx.mul(&p, &ctx.mul(&ctx.mul(&q, &r), &p));
        prop_assert_eq!(lhs, rhs);
        // left Bol: p(q(pr)) = (p(qp))r
        let lhs = ctx.mul(&p, &ctx.mul(&q, &ctx.mul(&p, &r)));
        let rhs = ctx.mul(&ctx.mul(&p, &ctx.mul(&q, &p)), &r);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn divisions_invert_products_exact(p in ints(8), q in ints(8)) {
        let ctx = LoopContext::new(AlgebraTag::O);
        let (p, q) = (exact(AlgebraTag::O, &p), exact(AlgebraTag::O, &q));
        prop_assume!(!q.is_zero());
        let pq = ctx.mul(&p, &q);
        prop_assert_eq!(ctx.rdiv(&pq, &q).unwrap(), p.clone());
        let qp = ctx.mul(&q, &p);
        prop_assert_eq!(ctx.ldiv(&q, &qp).unwrap(), p);
    }

    #[test]
    fn quaternions_associate_exact(p in ints(4), q in ints(4), r in ints(4)) {
        let (p, q, r) = (exact(AlgebraTag::H, &p), exact(AlgebraTag::H, &q), exact(AlgebraTag::H, &r));
        prop_assert!(p.associator(&q, &r).is_zero());
    }

    #[test]
    fn norm_is_multiplicative(p in floats(8), q in floats(8)) {
        let (p, q) = (V::new(AlgebraTag::O, p), V::new(AlgebraTag::O, q));
        let lhs = p.mul(&q).norm2();
        let rhs = p.norm2() * q.norm2();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn bracket_forms_agree(s in floats(8), x in floats(7), y in floats(7)) {
        let Some(s) = unit(AlgebraTag::O, &s) else { return Ok(()) };
        let ctx = LoopContext::new(AlgebraTag::O);
        let (x, y) = (V::from_im(AlgebraTag::O, &x), V::from_im(AlgebraTag::O, &y));
        let a = bracket_closed(&ctx, &s, &x, &y).unwrap();
        let b = bracket_transport(&ctx, &s, &x, &y).unwrap();
        let c = bracket_closed(&ctx, &s, &y, &x).unwrap();
        prop_assert!(close(&a, &b, 1e-12));
        prop_assert!(close(&a, &(-c), 1e-12));
        // the bracket stays in the tangent space at the identity
        prop_assert!(a.re().abs() <= 1e-12);
    }

    #[test]
    fn exponential_lands_on_the_sphere(x in floats(7)) {
        let e = exp_closed(&V::from_im(AlgebraTag::O, &x));
        prop_assert!((e.norm2() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), grid in 3usize..200, spectral in any::<bool>(), tol in 1e-12f64..1.0) {
        let text = format!("seed = {seed}\n[flow]\ngrid = {grid}\nspectral_step = {spectral}\ntol = {tol:e}\n[run]\nalgebra = H\n");
        let c = RunConfig::parse(&text).unwrap();
        prop_assert_eq!((c.seed, c.flow.grid, c.flow.settings.spectral_step, c.algebra), (seed, grid, spectral, AlgebraTag::H));
        prop_assert_eq!(c.flow.settings.tol, tol);
        let mut d = RunConfig::default();
        d.set("run", "seed", &seed.to_string()).unwrap();
        d.set("flow", "grid", &grid.to_string()).unwrap();
        d.set("flow", "spectral_step", &spectral.to_string()).unwrap();
        d.set("flow", "tol", &format!("{tol:e}")).unwrap();
        d.set("run", "algebra", "H").unwrap();
        prop_assert_eq!(c, d);
    }

    #[test]
    fn check_verdict_matches_tolerance(r in prop_oneof![Just(f64::NAN), Just(f64::INFINITY), 0.0f64..1.0], tol in 0.0f64..1.0) {
        let c = Check::new("x", "x", 1, r, tol);
        prop_assert_eq!(c.passed, r.is_finite() && r <= tol);
    }
}
