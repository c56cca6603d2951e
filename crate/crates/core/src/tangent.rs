//! Exponential maps, brackets and associators at a base point, Akivis/Malcev identities and the Killing form.

use crate::algebra::{tensors, AlgebraTag, AlgebraValue};
use crate::error::{Error, Result};
use crate::loops::LoopContext;
use crate::numerics::{fd_derivative, fd_mixed, nullspace, DiffConfig, FdEstimate, Matrix, Real, Scalar};
use crate::pseudoauto::{PGroupElement, PLieElement};

type V<S> = AlgebraValue<S>;

/// `exp(ξ) = cos|ξ| + sin|ξ| ξ/|ξ|` for imaginary `ξ`.
pub fn exp_closed<S: Real>(xi: &V<S>) -> V<S> {
    let r2 = xi.im().norm2();
    let (c, sinc) = if r2.to_f64() < 1e-4 {
        // even series in r2 avoid the branch point of sqrt at zero
        let t = |k: &[f64]| -> S {
            k.iter().rev().fold(S::zero(), |acc, a| acc * r2.clone() + S::from_f64(*a))
        };
        (
            t(&[1.0, -1.0 / 2.0, 1.0 / 24.0, -1.0 / 720.0, 1.0 / 40320.0]),
            t(&[1.0, -1.0 / 6.0, 1.0 / 120.0, -1.0 / 5040.0, 1.0 / 362880.0]),
        )
    } else {
        let r = r2.sqrt();
        (r.clone().cos(), r.clone().sin() / r)
    };
    let mut out = xi.im().scale(&sinc);
    out.coords[0] = c;
    out
}

/// Integrates `dp/dt = ξ p` from `p(0) = 1` with classical RK4 and step at most `max_step`.
pub fn exp_ode(ctx: &LoopContext, xi: &V<f64>, t: f64, max_step: f64) -> V<f64> {
    let rhs = |p: &V<f64>| ctx.mul(xi, p);
    rk4(&rhs, V::one(ctx.tag), t, max_step)
}

fn rk4(rhs: &dyn Fn(&V<f64>) -> V<f64>, mut p: V<f64>, t: f64, max_step: f64) -> V<f64> {
    let n = (t.abs() / max_step).ceil().max(1.0) as usize;
    let h = t / n as f64;
    for _ in 0..n {
        let k1 = rhs(&p);
        let k2 = rhs(&(p.clone() + k1.scale(&(h / 2.0))));
        let k3 = rhs(&(p.clone() + k2.scale(&(h / 2.0))));
        let k4 = rhs(&(p.clone() + k3.scale(&h)));
        p = p + (k1 + k2.scale(&2.0) + k3.scale(&2.0) + k4).scale(&(h / 6.0));
    }
    p
}

/// Flow of `ξ` in `(L, ∘_q)`: returns `(exp_q(tξ), exp_q(tξ) q)`.
pub fn exp_at(ctx: &LoopContext, q: &V<f64>, xi: &V<f64>, t: f64, max_step: f64) -> Result<(V<f64>, V<f64>)> {
    // dp/dt = ξ ∘_q p
    let rhs = |p: &V<f64>| ctx.mod_product(q, xi, p).expect("q invertible");
    let p = rk4(&rhs, V::one(ctx.tag), t, max_step);
    if !p.coords.iter().all(|x| x.is_finite()) {
        return Err(Error::Consistency("flow diverged".into()));
    }
    let full = ctx.mul(&p, q);
    Ok((p, full))
}

/// Closed-form bracket `[ξ,η]^{(s)} = (ξ(ηs) - η(ξs))/s`.
pub fn bracket_closed<S: Scalar>(ctx: &LoopContext, s: &V<S>, xi: &V<S>, eta: &V<S>) -> Result<V<S>> {
    let a = ctx.mul(xi, &ctx.mul(eta, s));
    let b = ctx.mul(eta, &ctx.mul(xi, s));
    ctx.rdiv(&(a - b), s)
}

/// Mixed associator `x(yz) - (xy)z`.
pub fn l_assoc<S: Scalar>(ctx: &LoopContext, x: &V<S>, y: &V<S>, z: &V<S>) -> V<S> {
    ctx.mul(x, &ctx.mul(y, z)) - ctx.mul(&ctx.mul(x, y), z)
}

/// Bracket at `s` transported from `s = 1`: `[ξ,η]^{(1)} + (R_s)^{-1} a_1(ξ,η,s)`.
pub fn bracket_transport<S: Scalar>(ctx: &LoopContext, s: &V<S>, xi: &V<S>, eta: &V<S>) -> Result<V<S>> {
    let base = ctx.mul(xi, eta) - ctx.mul(eta, xi);
    let a1 = l_assoc(ctx, xi, eta, s) - l_assoc(ctx, eta, xi, s);
    Ok(base + ctx.rdiv(&a1, s)?)
}

/// Bracket at `s` by nested central differences of the modified-product commutator.
pub fn bracket_fd(ctx: &LoopContext, s: &V<f64>, xi: &V<f64>, eta: &V<f64>, cfg: &DiffConfig) -> Result<FdEstimate> {
    let f = |t: &[f64]| -> Vec<f64> {
        let p = exp_closed(&xi.scale(&t[0]));
        let q = exp_closed(&eta.scale(&t[1]));
        let a = ctx.mod_product(s, &p, &q).expect("invertible");
        let b = ctx.mod_product(s, &q, &p).expect("invertible");
        (a - b).coords
    };
    fd_mixed(&f, 2, cfg)
}

/// Which evaluation path `bracket_at` uses as its answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BracketPath {
    FiniteDifference,
    Transport,
    Commutator,
}

/// Bracket at `s`, cross-checking the closed form against the requested path.
pub fn bracket_at(
    ctx: &LoopContext,
    s: &V<f64>,
    xi: &V<f64>,
    eta: &V<f64>,
    path: BracketPath,
    tol: f64,
) -> Result<V<f64>> {
    let closed = bracket_closed(ctx, s, xi, eta)?;
    let other = match path {
        BracketPath::FiniteDifference => V::new(ctx.tag, bracket_fd(ctx, s, xi, eta, &DiffConfig::default())?.value),
        BracketPath::Transport => bracket_transport(ctx, s, xi, eta)?,
        BracketPath::Commutator => {
            if (s.clone() - V::one(ctx.tag)).max_abs() > 0.0 {
                return Err(Error::Consistency("commutator path only at s = 1".into()));
            }
            ctx.mul(xi, eta) - ctx.mul(eta, xi)
        }
    };
    let err = (closed.clone() - other.clone()).max_abs();
    if err > tol {
        return Err(Error::Consistency(format!("bracket paths disagree by {err:e}")));
    }
    Ok(other.im())
}

/// Closed-form associator `[η,γ,ξ]^{(s)} = (η(γ(ξs)))/s - (((η(γs))/s)(ξs))/s`.
pub fn associator_closed<S: Scalar>(ctx: &LoopContext, s: &V<S>, eta: &V<S>, gamma: &V<S>, xi: &V<S>) -> Result<V<S>> {
    let xs = ctx.mul(xi, s);
    let left = ctx.rdiv(&ctx.mul(eta, &ctx.mul(gamma, &xs)), s)?;
    let eg = ctx.rdiv(&ctx.mul(eta, &ctx.mul(gamma, s)), s)?;
    let right = ctx.rdiv(&ctx.mul(&eg, &xs), s)?;
    Ok(left - right)
}

/// Associator at `s` by third-order nested differences.
pub fn associator_fd(
    ctx: &LoopContext,
    s: &V<f64>,
    eta: &V<f64>,
    gamma: &V<f64>,
    xi: &V<f64>,
    cfg: &DiffConfig,
) -> Result<FdEstimate> {
    let f = |t: &[f64]| -> Vec<f64> {
        let a = exp_closed(&eta.scale(&t[0]));
        let b = exp_closed(&gamma.scale(&t[1]));
        let c = exp_closed(&xi.scale(&t[2]));
        let l = ctx.mod_product(s, &a, &ctx.mod_product(s, &b, &c).unwrap()).unwrap();
        let r = ctx.mod_product(s, &ctx.mod_product(s, &a, &b).unwrap(), &c).unwrap();
        (l - r).coords
    };
    fd_mixed(&f, 3, cfg)
}

/// Left-alternating associator `a_s(η,γ,ξ) = [η,γ,ξ] - [γ,η,ξ]`.
pub fn left_alt_assoc<S: Scalar>(ctx: &LoopContext, s: &V<S>, eta: &V<S>, gamma: &V<S>, xi: &V<S>) -> Result<V<S>> {
    Ok(associator_closed(ctx, s, eta, gamma, xi)? - associator_closed(ctx, s, gamma, eta, xi)?)
}

/// `Jac^{(s)}(ξ,η,γ)` composed from the bracket.
pub fn jacobiator<S: Scalar>(ctx: &LoopContext, s: &V<S>, x: &V<S>, y: &V<S>, z: &V<S>) -> Result<V<S>> {
    let b = |u: &V<S>, v: &V<S>| bracket_closed(ctx, s, u, v);
    Ok(b(x, &b(y, z)?)? + b(y, &b(z, x)?)? + b(z, &b(x, y)?)?)
}

/// Max-abs of `Jac - a(ξ,η,γ) - a(η,γ,ξ) - a(γ,ξ,η)` with closed forms.
pub fn akivis_residual<S: Scalar>(ctx: &LoopContext, s: &V<S>, x: &V<S>, y: &V<S>, z: &V<S>) -> Result<f64> {
    let jac = jacobiator(ctx, s, x, y, z)?;
    let a = left_alt_assoc(ctx, s, x, y, z)? + left_alt_assoc(ctx, s, y, z, x)? + left_alt_assoc(ctx, s, z, x, y)?;
    Ok((jac - a).max_abs())
}

/// Akivis residual with every bracket and associator taken by finite differences.
///
/// The identity is trilinear, so the inputs are scaled to unit length first; the residual is
/// the one for the unit vectors.
pub fn akivis_residual_fd(ctx: &LoopContext, s: &V<f64>, x: &V<f64>, y: &V<f64>, z: &V<f64>) -> Result<f64> {
    let unit = |v: &V<f64>| {
        let n = v.norm2().sqrt();
        if n > 0.0 {
            v.scale(&(1.0 / n))
        } else {
            v.clone()
        }
    };
    let (x, y, z) = (&unit(x), &unit(y), &unit(z));
    let c2 = DiffConfig { h: 5e-2, levels: 3, ..DiffConfig::default() };
    let c3 = DiffConfig::third_order();
    let b = |u: &V<f64>, v: &V<f64>| -> Result<V<f64>> { Ok(V::new(ctx.tag, bracket_fd(ctx, s, u, v, &c2)?.value).im()) };
    let asc = |u: &V<f64>, v: &V<f64>, w: &V<f64>| -> Result<V<f64>> {
        Ok(V::new(ctx.tag, associator_fd(ctx, s, u, v, w, &c3)?.value))
    };
    let a = |u: &V<f64>, v: &V<f64>, w: &V<f64>| -> Result<V<f64>> { Ok(asc(u, v, w)? - asc(v, u, w)?) };
    let jac = b(x, &b(y, z)?)? + b(y, &b(z, x)?)? + b(z, &b(x, y)?)?;
    let rhs = a(x, y, z)? + a(y, z, x)? + a(z, x, y)?;
    Ok((jac - rhs).max_abs())
}

/// Closed forms at `s = 1` from the structure tensors: `2φ` bracket and `2ψ` associator.
pub fn tensor_bracket<S: Scalar>(tag: AlgebraTag, x: &V<S>, y: &V<S>) -> V<S> {
    V::from_im(tag, &tensors(tag).phi_bracket(&x.im_coords(), &y.im_coords()))
}

pub fn tensor_associator<S: Scalar>(tag: AlgebraTag, psi: &[Vec<Vec<Vec<i64>>>], x: &V<S>, y: &V<S>, z: &V<S>) -> V<S> {
    let n = tag.im_dim();
    let (xc, yc, zc) = (x.im_coords(), y.im_coords(), z.im_coords());
    let mut out = vec![S::zero(); n];
    for b in 0..n {
        for c in 0..n {
            let xy = xc[b].clone() * yc[c].clone();
            if xy.is_zero() {
                continue;
            }
            for d in 0..n {
                let t = xy.clone() * zc[d].clone();
                if t.is_zero() {
                    continue;
                }
                for (a, o) in out.iter_mut().enumerate() {
                    let f = psi[a][b][c][d];
                    if f != 0 {
                        *o = o.clone() + S::from_i64(2 * f) * t.clone();
                    }
                }
            }
        }
    }
    V::from_im(tag, &out)
}

/// `‖[ξ,η,[ξ,γ]] - [[ξ,η,γ],ξ]‖` from the tensor closed forms with the given `ψ`.
pub fn malcev_residual_with<S: Scalar>(psi: &[Vec<Vec<Vec<i64>>>], x: &V<S>, y: &V<S>, z: &V<S>) -> f64 {
    let tag = x.tag;
    let br = |u: &V<S>, v: &V<S>| tensor_bracket(tag, u, v);
    let asc = |u: &V<S>, v: &V<S>, w: &V<S>| tensor_associator(tag, psi, u, v, w);
    let lhs = asc(x, y, &br(x, z));
    let rhs = br(&asc(x, y, z), x);
    (lhs - rhs).max_abs()
}

pub fn malcev_residual<S: Scalar>(x: &V<S>, y: &V<S>, z: &V<S>) -> f64 {
    malcev_residual_with(&tensors(AlgebraTag::O).psi, x, y, z)
}

/// `d/dτ b_{exp(τξ)p}(η,γ)` at `τ = 0` versus `a_p(η,γ,ξ)`; returns `(fd, closed)`.
pub fn db_check(ctx: &LoopContext, p: &V<f64>, eta: &V<f64>, gamma: &V<f64>, xi: &V<f64>) -> Result<(V<f64>, V<f64>)> {
    let f = |t: f64| -> Vec<f64> {
        let pt = ctx.mul(&exp_closed(&xi.scale(&t)), p);
        bracket_closed(ctx, &pt, eta, gamma).expect("invertible").coords
    };
    let d = fd_derivative(&f, 0.0, 1, &DiffConfig::default())?;
    Ok((V::new(ctx.tag, d.value), left_alt_assoc(ctx, p, eta, gamma, xi)?))
}

/// Matrix of `ad_ξ = [ξ, ·]^{(s)}` on imaginary coordinates.
pub fn ad_matrix<S: Scalar>(ctx: &LoopContext, s: &V<S>, xi: &V<S>) -> Result<Matrix<S>> {
    let n = ctx.tag.im_dim();
    let cols: Result<Vec<Vec<S>>> = (0..n)
        .map(|k| Ok(bracket_closed(ctx, s, xi, &V::basis(ctx.tag, k + 1))?.im_coords()))
        .collect();
    Ok(Matrix::from_columns(&cols?))
}

/// Killing form `K^{(s)}(e_i, e_j) = Tr(ad_i ad_j)` on the imaginary units.
pub fn killing_form<S: Scalar>(ctx: &LoopContext, s: &V<S>) -> Result<Matrix<S>> {
    let n = ctx.tag.im_dim();
    let ads: Result<Vec<Matrix<S>>> = (0..n).map(|k| ad_matrix(ctx, s, &V::basis(ctx.tag, k + 1))).collect();
    let ads = ads?;
    Ok(Matrix::from_fn(n, n, |i, j| ads[i].mul(&ads[j]).trace()))
}

pub fn killing<S: Scalar>(k: &Matrix<S>, x: &V<S>, y: &V<S>) -> S {
    let kx = k.mul_vec(&y.im_coords());
    x.im_coords().into_iter().zip(kx).fold(S::zero(), |a, (u, v)| a + u * v)
}

/// Residuals of the three Killing-form properties at `s`.
pub struct KillingInvariance {
    pub kpsi: f64,
    pub kad: f64,
    pub klie: f64,
}

/// Checks `K^{(h(s))}(h'ξ,h'η) = K^{(s)}(ξ,η)`, the `ad`-relation with Jacobiator traces,
/// and the `𝔭`-relation with associator traces.
pub fn killing_invariance_report(
    ctx: &LoopContext,
    s: &V<f64>,
    h: &PGroupElement<f64>,
    alpha: &PLieElement<f64>,
    xi: &V<f64>,
    eta: &V<f64>,
    gamma: &V<f64>,
) -> Result<KillingInvariance> {
    let n = ctx.tag.im_dim();
    let ks = killing_form(ctx, s)?;
    let hs = h.act(s);
    let khs = killing_form(ctx, &hs)?;
    let kpsi = (killing(&khs, &h.act_partial(xi), &h.act_partial(eta)) - killing(&ks, xi, eta)).abs();

    let ad = |x: &V<f64>| ad_matrix(ctx, s, x);
    let lin = |f: &dyn Fn(&V<f64>) -> Result<V<f64>>| -> Result<Matrix<f64>> {
        let cols: Result<Vec<Vec<f64>>> = (0..n).map(|k| Ok(f(&V::basis(ctx.tag, k + 1))?.im_coords())).collect();
        Ok(Matrix::from_columns(&cols?))
    };
    let br = |u: &V<f64>, v: &V<f64>| bracket_closed(ctx, s, u, v).map(|w| w.im());
    // Jac_{a,b}(x) = Jac(x, a, b)
    let jac_xg = lin(&|x: &V<f64>| jacobiator(ctx, s, x, xi, gamma))?;
    let jac_eg = lin(&|x: &V<f64>| jacobiator(ctx, s, x, eta, gamma))?;
    let lhs = killing(&ks, &br(gamma, eta)?, xi);
    let rhs = -killing(&ks, eta, &br(gamma, xi)?) + jac_xg.mul(&ad(eta)?).trace() + jac_eg.mul(&ad(xi)?).trace();
    let kad = (lhs - rhs).abs();

    let alg = alpha.algebra();
    let hat = crate::phi::phi_at(ctx, s, alpha)?;
    let act = |v: &V<f64>| alg.vector_apply(&alpha.coords, v);
    // a_{u,w}(x) = [x,u,w] - [u,x,w]
    let a_map = |u: &V<f64>| {
        let u = u.clone();
        let hat = hat.clone();
        move |x: &V<f64>| -> Result<V<f64>> {
            Ok(associator_closed(ctx, s, x, &u, &hat)? - associator_closed(ctx, s, &u, x, &hat)?)
        }
    };
    let a_eta = lin(&a_map(eta))?;
    let a_xi = lin(&a_map(xi))?;
    let lhs = killing(&ks, &act(xi), eta);
    let rhs = -killing(&ks, xi, &act(eta)) + a_eta.mul(&ad(xi)?).trace() + a_xi.mul(&ad(eta)?).trace();
    let klie = (lhs - rhs).abs();
    Ok(KillingInvariance { kpsi, kad, klie })
}

/// Residual of `ξ·[η,γ] = [ξ·η,γ] + [η,ξ·γ] + a_s(η,γ,φ_s(ξ))` for `ξ ∈ 𝔭`.
pub fn xilbrack_check<S: Scalar>(ctx: &LoopContext, s: &V<S>, xi: &PLieElement<S>, eta: &V<S>, gamma: &V<S>) -> Result<f64> {
    let alg = xi.algebra();
    let act = |v: &V<S>| alg.vector_apply(&xi.coords, v);
    let br = |u: &V<S>, v: &V<S>| bracket_closed(ctx, s, u, v).map(|w| w.im());
    let hat = crate::phi::phi_at(ctx, s, xi)?;
    let lhs = act(&br(eta, gamma)?);
    let rhs = br(&act(eta), gamma)? + br(eta, &act(gamma))? + left_alt_assoc(ctx, s, eta, gamma, &hat)?.im();
    Ok((lhs - rhs).max_abs())
}

/// Basis of `N^R(𝔩^{(s)}) = {ξ : a_s(η,γ,ξ) = 0 for all η, γ}`.
pub fn tangent_nucleus<S: Scalar>(ctx: &LoopContext, s: &V<S>) -> Result<Vec<V<S>>> {
    let n = ctx.tag.im_dim();
    let mut blocks = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let ei = V::basis(ctx.tag, i + 1);
            let ej = V::basis(ctx.tag, j + 1);
            let cols: Result<Vec<Vec<S>>> = (0..n)
                .map(|k| Ok(left_alt_assoc(ctx, s, &ei, &ej, &V::basis(ctx.tag, k + 1))?.im_coords()))
                .collect();
            blocks.push(Matrix::from_columns(&cols?));
        }
    }
    let m = Matrix::vstack(&blocks);
    Ok(nullspace(&m, 1e-10).into_iter().map(|v| V::from_im(ctx.tag, &v)).collect())
}

/// Dimension of the tangent space at 1 of the loop's right nucleus (imaginary directions of its span).
pub fn loop_nucleus_tangent_dim(ctx: &LoopContext) -> usize {
    let basis = ctx.nucleus_basis();
    let im: Vec<Vec<crate::numerics::Rational>> = basis.iter().map(|b| b.im_coords()).collect();
    if im.is_empty() {
        return 0;
    }
    Matrix::from_columns(&im).rank(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rational;
    use crate::sampling::Sampler;

    const O: AlgebraTag = AlgebraTag::O;

    #[test]
    fn exp_basics() {
        let one = exp_closed(&V::<f64>::zero(O));
        assert_eq!(one, V::one(O));
        let e = exp_closed(&V::<f64>::basis(O, 1).scale(&std::f64::consts::PI));
        assert!((e + V::one(O)).max_abs() < 1e-15);
        let ctx = LoopContext::new(O);
        let mut s = Sampler::new(2);
        let mut xi: V<f64> = s.float_im(O, 1.0);
        xi = xi.scale(&(1.7 / xi.norm2().sqrt()));
        let ode = exp_ode(&ctx, &xi, 1.0, 1e-3);
        assert!((ode - exp_closed(&xi)).max_abs() < 1e-8);
        let q: V<f64> = s.unit(O);
        let (p, full) = exp_at(&ctx, &q, &xi, 1.0, 1e-3).unwrap();
        assert!((p.clone() - exp_closed(&xi)).max_abs() < 1e-8);
        assert!((full - ctx.mul(&p, &q)).max_abs() < 1e-12);
    }

    #[test]
    fn brackets_at_one() {
        let ctx = LoopContext::new(O);
        let one = V::<Rational>::one(O);
        let e = |i| V::<Rational>::basis(O, i);
        assert_eq!(bracket_closed(&ctx, &one, &e(1), &e(2)).unwrap(), e(3).scale(&Rational::from_i64(2)));
        let mut s = Sampler::new(3);
        for _ in 0..20 {
            let x = s.rational_im(O);
            let y = s.rational_im(O);
            let z = s.rational_im(O);
            assert_eq!(bracket_closed(&ctx, &one, &x, &y).unwrap(), tensor_bracket(O, &x, &y));
            assert_eq!(
                associator_closed(&ctx, &one, &x, &y, &z).unwrap(),
                tensor_associator(O, &tensors(O).psi, &x, &y, &z)
            );
        }
    }

    #[test]
    fn bracket_paths_agree() {
        let ctx = LoopContext::new(O);
        let mut smp = Sampler::new(4);
        let s: V<f64> = smp.unit(O);
        let x = smp.float_im(O, 1.0);
        let y = smp.float_im(O, 1.0);
        bracket_at(&ctx, &s, &x, &y, BracketPath::FiniteDifference, 1e-6).unwrap();
        bracket_at(&ctx, &s, &x, &y, BracketPath::Transport, 1e-12).unwrap();
        assert!(bracket_closed(&ctx, &s, &x, &x).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn akivis_and_malcev_exact() {
        let ctx = LoopContext::new(O);
        let mut smp = Sampler::new(5);
        let one = V::<Rational>::one(O);
        for _ in 0..5 {
            let (x, y, z) = (smp.rational_im(O), smp.rational_im(O), smp.rational_im(O));
            assert_eq!(akivis_residual(&ctx, &one, &x, &y, &z).unwrap(), 0.0);
            assert_eq!(malcev_residual(&x, &y, &z), 0.0);
            let s = smp.rational_unit(O);
            assert_eq!(akivis_residual(&ctx, &s, &x, &y, &z).unwrap(), 0.0);
        }
    }

    #[test]
    fn killing_at_one() {
        let ctx = LoopContext::new(O);
        let k = killing_form(&ctx, &V::<Rational>::one(O)).unwrap();
        assert_eq!(k, Matrix::identity(7).scale(&Rational::from_i64(-24)));
    }

    #[test]
    fn malcev_detects_a_bad_psi() {
        let mut psi = tensors(O).psi.clone();
        psi[0][1][2][3] += 1;
        let mut smp = Sampler::new(6);
        let worst = (0..10)
            .map(|_| {
                let (x, y, z): (V<Rational>, _, _) = (smp.rational_im(O), smp.rational_im(O), smp.rational_im(O));
                malcev_residual_with(&psi, &x, &y, &z)
            })
            .fold(0.0, f64::max);
        assert!(worst > 1e-3);
    }

    #[test]
    fn fd_akivis_and_bracket_derivative() {
        let ctx = LoopContext::new(O);
        let mut smp = Sampler::new(7);
        let s: V<f64> = smp.unit(O);
        let (x, y, z) = (smp.float_im(O, 1.0), smp.float_im(O, 1.0), smp.float_im(O, 1.0));
        assert!(akivis_residual_fd(&ctx, &s, &x, &y, &z).unwrap() < 1e-5);
        let (fd, closed) = db_check(&ctx, &s, &x, &y, &z).unwrap();
        assert!((fd - closed).max_abs() < 1e-6);
    }

    #[test]
    fn killing_and_lie_action_identities() {
        let ctx = LoopContext::new(O);
        let alg = crate::pseudoauto::PGroup::So7.algebra();
        let mut smp = Sampler::new(8);
        let s: V<f64> = smp.unit(O);
        let h = alg.exp(&smp.coords(alg.dim(), 0.4)).unwrap();
        let alpha = alg.element(smp.coords(alg.dim(), 1.0));
        let (x, y, z) = (smp.float_im(O, 1.0), smp.float_im(O, 1.0), smp.float_im(O, 1.0));
        let r = killing_invariance_report(&ctx, &s, &h, &alpha, &x, &y, &z).unwrap();
        assert!(r.kpsi < 1e-10 && r.kad < 1e-10 && r.klie < 1e-10, "{} {} {}", r.kpsi, r.kad, r.klie);
        assert!(xilbrack_check(&ctx, &s, &alpha, &y, &z).unwrap() < 1e-12);
    }

    #[test]
    fn tangent_nucleus_dims() {
        let ctx = LoopContext::new(O);
        assert!(tangent_nucleus(&ctx, &V::<Rational>::one(O)).unwrap().is_empty());
        assert_eq!(loop_nucleus_tangent_dim(&ctx), 0);
        let h = LoopContext::new(AlgebraTag::H);
        assert_eq!(tangent_nucleus(&h, &V::<Rational>::one(AlgebraTag::H)).unwrap().len(), 3);
        assert_eq!(loop_nucleus_tangent_dim(&h), 3);
    }
}
