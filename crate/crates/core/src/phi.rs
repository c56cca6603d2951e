//! The map `φ_s: 𝔭 → 𝔩`, its adjoint, `λ_s`, the `φ`-bracket and annihilator subspaces.

use crate::algebra::{tensors, AlgebraTag, AlgebraValue};
use crate::error::{Error, Result};
use crate::loops::LoopContext;
use crate::numerics::{fd_derivative, mat_exp, nullspace, DiffConfig, Matrix, Scalar};
use crate::pseudoauto::{PAlgebra, PGroup, PGroupElement, PLieElement};
use crate::tangent::{bracket_closed, left_alt_assoc};

type V<S> = AlgebraValue<S>;

/// `φ_s(γ) = Im((full(γ) s)/s)`.
pub fn phi_at<S: Scalar>(ctx: &LoopContext, s: &V<S>, gamma: &PLieElement<S>) -> Result<V<S>> {
    phi_coords(ctx, gamma.algebra(), s, &gamma.coords)
}

pub fn phi_coords<S: Scalar>(ctx: &LoopContext, alg: &PAlgebra, s: &V<S>, coords: &[S]) -> Result<V<S>> {
    Ok(ctx.rdiv(&alg.full_apply(coords, s), s)?.im())
}

/// `d/dt (exp(tγ)s)/s` at `t = 0` by central differences through `mat_exp`.
pub fn phi_fd(ctx: &LoopContext, s: &V<f64>, gamma: &PLieElement<f64>) -> Result<V<f64>> {
    let full = gamma.full_rep();
    let f = |t: f64| -> Vec<f64> {
        let g = mat_exp(&full.scale(&t)).expect("finite");
        let gs = V::new(s.tag, g.mul_vec(&s.coords));
        ctx.rdiv(&gs, s).expect("invertible").coords
    };
    let d = fd_derivative(&f, 0.0, 1, &DiffConfig::default())?;
    Ok(V::new(s.tag, d.value))
}

/// `φ_s` on a fixed base point, with its adjoint for the Euclidean metric on `𝔩`
/// and `metric_p` on `𝔭`.
#[derive(Clone, Debug)]
pub struct PhiMap<S> {
    pub s: V<S>,
    pub group: PGroup,
    /// `dim 𝔩 × dim 𝔭`.
    pub matrix: Matrix<S>,
    /// `φ^t = G⁻¹Φᵀ`, `dim 𝔭 × dim 𝔩`.
    pub adjoint: Matrix<S>,
}

impl<S: Scalar> PhiMap<S> {
    pub fn new(ctx: &LoopContext, s: &V<S>) -> Result<Self> {
        let group = PGroup::for_tag(ctx.tag)?;
        let alg = group.algebra();
        let cols: Result<Vec<Vec<S>>> = (0..alg.dim())
            .map(|k| Ok(phi_at(ctx, s, &alg.basis::<S>(k))?.im_coords()))
            .collect();
        let matrix = Matrix::from_columns(&cols?);
        let adjoint = alg.gram_inv_s::<S>().mul(&matrix.transpose());
        Ok(PhiMap { s: s.clone(), group, matrix, adjoint })
    }

    pub fn algebra(&self) -> &'static PAlgebra {
        self.group.algebra()
    }

    pub fn apply(&self, gamma: &[S]) -> V<S> {
        V::from_im(self.s.tag, &self.matrix.mul_vec(gamma))
    }

    pub fn adjoint_apply(&self, xi: &V<S>) -> PLieElement<S> {
        self.algebra().element(self.adjoint.mul_vec(&xi.im_coords()))
    }

    pub fn rank(&self) -> usize {
        self.matrix.rank(1e-10)
    }

    /// Basis of `𝔥_s = ker φ_s`.
    pub fn kernel(&self) -> Vec<Vec<S>> {
        nullspace(&self.matrix, 1e-10)
    }

    /// `λ_s` as the eigenvalue of `φφ^t` on its image; errors when that spectrum is not a single value.
    pub fn lambda(&self) -> Result<S> {
        let m = self.matrix.mul(&self.adjoint);
        let r = m.rank(1e-10);
        if r == 0 {
            return Ok(S::zero());
        }
        let lambda = m.trace() / S::from_i64(r as i64);
        // M = λπ with π an orthogonal projection iff M² = λM
        let tol = if S::EXACT { 0.0 } else { 1e-10 };
        let res = m.mul(&m).sub(&m.scale(&lambda)).max_abs();
        let p = self.adjoint.mul(&self.matrix);
        let res2 = p.mul(&p).sub(&p.scale(&lambda)).max_abs();
        if res > tol || res2 > tol {
            return Err(Error::Consistency(format!("φφ^t is not scalar on its image (residual {:e})", res.max(res2))));
        }
        Ok(lambda)
    }

    /// `[ξ,η]_φ = φ([φ^tξ, φ^tη]_𝔭)`.
    pub fn bracket(&self, xi: &V<S>, eta: &V<S>) -> V<S> {
        let a = self.adjoint_apply(xi);
        let b = self.adjoint_apply(eta);
        self.apply(&a.bracket(&b).coords)
    }

    /// `(ξ·φ_s)(η) = ξ·φ_s(η) - φ_s([ξ,η]_𝔭)`.
    pub fn action_on_phi(&self, xi: &PLieElement<S>, eta: &PLieElement<S>) -> V<S> {
        let alg = self.algebra();
        alg.vector_apply(&xi.coords, &self.apply(&eta.coords)) - self.apply(&xi.bracket(eta).coords)
    }
}

/// Least-squares `k` in `φ_1(η)_a = k φ_abc η^{bc}` over the `so(7)` basis; returns `(k, residual)`.
pub fn fit_k() -> Result<(f64, f64)> {
    let ctx = LoopContext::new(AlgebraTag::O);
    let phi: PhiMap<f64> = PhiMap::new(&ctx, &V::one(AlgebraTag::O))?;
    let alg = phi.algebra();
    let t = tensors(AlgebraTag::O);
    let (mut num, mut den) = (0.0, 0.0);
    let mut pairs = Vec::new();
    for k in 0..alg.dim() {
        let e = alg.basis::<f64>(k);
        let m = e.vector_rep();
        let v: Vec<f64> = (0..7)
            .map(|a| {
                let mut acc = 0.0;
                for b in 0..7 {
                    for c in 0..7 {
                        acc += t.phi_at(a, b, c) as f64 * m[(b, c)];
                    }
                }
                acc
            })
            .collect();
        let w = phi.apply(&e.coords).im_coords();
        num += v.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>();
        den += v.iter().map(|x| x * x).sum::<f64>();
        pairs.push((v, w));
    }
    let kk = num / den;
    let res = pairs
        .iter()
        .flat_map(|(v, w)| v.iter().zip(w).map(|(x, y)| (kk * x - y).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    Ok((kk, res))
}

/// Constant `c` with `[ξ,η]_φ = c[ξ,η]^{(s)}` on sampled pairs; returns `(c, residual)`.
pub fn phi_bracket_ratio(ctx: &LoopContext, phi: &PhiMap<f64>, pairs: &[(V<f64>, V<f64>)]) -> Result<(f64, f64)> {
    let mut data = Vec::new();
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in pairs {
        let p = phi.bracket(x, y);
        let b = bracket_closed(ctx, &phi.s, x, y)?.im();
        num += p.dot(&b);
        den += b.dot(&b);
        data.push((p, b));
    }
    // abelian case: both brackets vanish
    let c = if den > 0.0 { num / den } else { 0.0 };
    let res = data.iter().map(|(p, b)| (p.clone() - b.scale(&c)).max_abs()).fold(0.0, f64::max);
    Ok((c, res))
}

/// `⟨[ξ,η]_φ, γ⟩ + ⟨η, [ξ,γ]_φ⟩`.
pub fn phi_bracket_invariance<S: Scalar>(phi: &PhiMap<S>, x: &V<S>, y: &V<S>, z: &V<S>) -> f64 {
    (phi.bracket(x, y).dot(z) + y.dot(&phi.bracket(x, z))).to_f64().abs()
}

/// Residual of `ξ·φ(η) - η·φ(ξ) = φ([ξ,η]_𝔭) + [φ(ξ),φ(η)]^{(s)}`.
pub fn xiphi_check<S: Scalar>(ctx: &LoopContext, phi: &PhiMap<S>, xi: &PLieElement<S>, eta: &PLieElement<S>) -> Result<f64> {
    let alg = phi.algebra();
    let (px, py) = (phi.apply(&xi.coords), phi.apply(&eta.coords));
    let lhs = alg.vector_apply(&xi.coords, &py) - alg.vector_apply(&eta.coords, &px);
    let rhs = phi.apply(&xi.bracket(eta).coords) + bracket_closed(ctx, &phi.s, &px, &py)?.im();
    Ok((lhs - rhs).max_abs())
}

/// Residual of `π_q(φ^t(ξ)·η) = (1/2λ)[ξ,η]_φ + (λ/2)π_q[ξ,η]^{(s)}` for surjective `φ_s`.
pub fn piqsact_check<S: Scalar>(ctx: &LoopContext, phi: &PhiMap<S>, xi: &V<S>, eta: &V<S>) -> Result<f64> {
    let lambda = phi.lambda()?;
    if phi.rank() != ctx.tag.im_dim() {
        return Err(Error::Unsupported("φ_s is not surjective".into()));
    }
    let a = phi.adjoint_apply(xi);
    let lhs = phi.algebra().vector_apply(&a.coords, eta);
    let two = S::from_i64(2);
    let rhs = phi.bracket(xi, eta).scale(&(S::one() / (two.clone() * lambda.clone())))
        + bracket_closed(ctx, &phi.s, xi, eta)?.im().scale(&(lambda / two));
    Ok((lhs - rhs).max_abs())
}

/// The three nested subalgebras `ker φ_s ⊂ Ann(φ_s) ⊂ Ann(b_s)` of `𝔭`.
#[derive(Clone, Debug)]
pub struct Annihilators<S> {
    pub kernel: Vec<Vec<S>>,
    pub ann_phi: Vec<Vec<S>>,
    pub ann_b: Vec<Vec<S>>,
    pub chain_holds: bool,
}

fn stacked<S: Scalar>(blocks: Vec<Matrix<S>>) -> Matrix<S> {
    Matrix::vstack(&blocks)
}

fn contained<S: Scalar>(sub: &[Vec<S>], sup: &[Vec<S>], tol: f64) -> bool {
    if sub.is_empty() {
        return true;
    }
    if sup.is_empty() {
        return false;
    }
    let both: Vec<Vec<S>> = sup.iter().chain(sub.iter()).cloned().collect();
    Matrix::from_columns(&both).rank(tol) == Matrix::from_columns(sup).rank(tol)
}

pub fn annihilators<S: Scalar>(ctx: &LoopContext, phi: &PhiMap<S>) -> Result<Annihilators<S>> {
    let alg = phi.algebra();
    let (np, nl) = (alg.dim(), ctx.tag.im_dim());
    let tol = if S::EXACT { 0.0 } else { 1e-9 };
    // ξ ↦ (ξ·φ_s)(e_j) for every basis element e_j
    let mut blocks = Vec::new();
    for j in 0..np {
        let ej = alg.basis::<S>(j);
        let cols: Vec<Vec<S>> = (0..np).map(|k| phi.action_on_phi(&alg.basis(k), &ej).im_coords()).collect();
        blocks.push(Matrix::from_columns(&cols));
    }
    let ann_phi = nullspace(&stacked(blocks), 1e-10);
    // ξ ↦ a_s(e_i, e_j, φ_s ξ)
    let mut blocks = Vec::new();
    for i in 0..nl {
        for j in (i + 1)..nl {
            let (ei, ej) = (V::basis(ctx.tag, i + 1), V::basis(ctx.tag, j + 1));
            let cols: Result<Vec<Vec<S>>> = (0..np)
                .map(|k| Ok(left_alt_assoc(ctx, &phi.s, &ei, &ej, &phi.apply(&alg.basis::<S>(k).coords))?.im_coords()))
                .collect();
            blocks.push(Matrix::from_columns(&cols?));
        }
    }
    let ann_b = if blocks.is_empty() {
        (0..np).map(|k| alg.basis::<S>(k).coords).collect()
    } else {
        nullspace(&stacked(blocks), 1e-10)
    };
    let kernel = phi.kernel();
    let chain_holds = contained(&kernel, &ann_phi, tol) && contained(&ann_phi, &ann_b, tol);
    Ok(Annihilators { kernel, ann_phi, ann_b, chain_holds })
}

/// `Ad_h γ` in `𝔭` coordinates.
pub fn adjoint_action<S: Scalar>(h: &PGroupElement<S>, gamma: &PLieElement<S>) -> Result<PLieElement<S>> {
    let alg = gamma.algebra();
    let m = h.def.mul(&gamma.def_rep()).mul(&h.def.inverse()?);
    Ok(alg.element(alg.coords_of_def(&m)))
}

/// Residual of `φ_{h(s)}(Ad_h γ) = h'φ_s(γ)`.
pub fn phihs_residual<S: Scalar>(ctx: &LoopContext, s: &V<S>, h: &PGroupElement<S>, gamma: &PLieElement<S>) -> Result<f64> {
    let lhs = phi_at(ctx, &h.act(s), &adjoint_action(h, gamma)?)?;
    let rhs = h.act_partial(&phi_at(ctx, s, gamma)?);
    Ok((lhs - rhs).max_abs())
}

/// Residual of `φ_{As}(γ) = (R_A^{(s)})^{-1}(γ'·A) + (Ad_A^{(s)})φ_s(γ)`,
/// with `(R_A^{(s)})^{-1}Y = (Ys)/(As)` and `Ad_A^{(s)}ξ = (A(ξs))/(As)`.
pub fn phi_as_residual<S: Scalar>(ctx: &LoopContext, s: &V<S>, a: &V<S>, gamma: &PLieElement<S>) -> Result<f64> {
    let alg = gamma.algebra();
    let as_ = ctx.mul(a, s);
    let lhs = phi_at(ctx, &as_, gamma)?;
    let act = alg.partial_apply(&gamma.coords, a);
    let t1 = ctx.rdiv(&ctx.mul(&act, s), &as_)?;
    let ps = phi_at(ctx, s, gamma)?;
    let t2 = ctx.rdiv(&ctx.mul(a, &ctx.mul(&ps, s)), &as_)?;
    Ok((lhs - (t1 + t2).im()).max_abs())
}

/// Quaternionic check: `(ξ·φ_s)(η) = sign·Ad_s[ξ₁,η₁]` where `ξ₁ = φ_1(ξ)` is the `sp(1)` part.
/// Returns the residual for the given sign.
pub fn quat_action_residual<S: Scalar>(ctx: &LoopContext, s: &V<S>, xi: &PLieElement<S>, eta: &PLieElement<S>, sign: i64) -> Result<f64> {
    if ctx.tag != AlgebraTag::H {
        return Err(Error::Unsupported("quaternion check needs H".into()));
    }
    let phi = PhiMap::new(ctx, s)?;
    let one = V::one(ctx.tag);
    let x1 = phi_at(ctx, &one, xi)?;
    let y1 = phi_at(ctx, &one, eta)?;
    let br = ctx.mul(&x1, &y1) - ctx.mul(&y1, &x1);
    let ad = ctx.rdiv(&ctx.mul(s, &br), s)?;
    Ok((phi.action_on_phi(xi, eta) - ad.scale(&S::from_i64(sign))).max_abs())
}

/// Complex check: `max |φ_s - φ_1|` over the given base points.
pub fn complex_phi_independence<S: Scalar>(ctx: &LoopContext, points: &[V<S>]) -> Result<f64> {
    if ctx.tag != AlgebraTag::C {
        return Err(Error::Unsupported("complex check needs C".into()));
    }
    let p1 = PhiMap::new(ctx, &V::one(ctx.tag))?;
    let mut worst = 0.0f64;
    for s in points {
        worst = worst.max(PhiMap::new(ctx, s)?.matrix.sub(&p1.matrix).max_abs());
    }
    Ok(worst)
}

/// `Σ_i |φ_s(X_i)|²` over a `metric_p`-orthonormal basis.
pub fn hat_norm_sum(phi: &PhiMap<f64>) -> f64 {
    phi.algebra().orthonormal_basis().iter().map(|x| phi.apply(x).norm2()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rational;
    use crate::sampling::Sampler;

    #[test]
    fn octonion_constants() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let (k, res) = fit_k().unwrap();
        assert!((k + 0.25).abs() < 1e-12, "k = {k}");
        assert!(res < 1e-12);
        let phi: PhiMap<Rational> = PhiMap::new(&ctx, &V::one(AlgebraTag::O)).unwrap();
        assert_eq!(phi.lambda().unwrap(), Rational::new(3.into(), 8.into()));
        assert_eq!(phi.kernel().len(), 14);
        let mut smp = Sampler::new(9);
        let s = smp.rational_unit(AlgebraTag::O);
        let phi: PhiMap<Rational> = PhiMap::new(&ctx, &s).unwrap();
        assert_eq!(phi.lambda().unwrap(), Rational::new(3.into(), 8.into()));
        assert_eq!(phi.rank(), 7);
    }

    #[test]
    fn phi_bracket_constant() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let mut smp = Sampler::new(10);
        let s: V<f64> = smp.unit(AlgebraTag::O);
        let phi = PhiMap::new(&ctx, &s).unwrap();
        let pairs: Vec<_> = (0..5).map(|_| (smp.float_im(AlgebraTag::O, 1.0), smp.float_im(AlgebraTag::O, 1.0))).collect();
        let (c, res) = phi_bracket_ratio(&ctx, &phi, &pairs).unwrap();
        assert!((c + 3.0 / 64.0).abs() < 1e-12, "c = {c}");
        assert!(res < 1e-12);
        for (x, y) in &pairs {
            assert!(piqsact_check(&ctx, &phi, x, y).unwrap() < 1e-12);
            assert!(phi_bracket_invariance(&phi, x, y, &pairs[0].0) < 1e-12);
        }
    }

    #[test]
    fn fd_agrees_and_identities() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let alg = PGroup::So7.algebra();
        let mut smp = Sampler::new(11);
        let s: V<f64> = smp.unit(AlgebraTag::O);
        let g = alg.element(smp.coords(21, 0.3));
        let e = alg.element(smp.coords(21, 1.0));
        let fd = phi_fd(&ctx, &s, &g).unwrap();
        let d = (fd - phi_at(&ctx, &s, &g).unwrap()).max_abs();
        assert!(d < 1e-9, "{d}");
        let phi = PhiMap::new(&ctx, &s).unwrap();
        assert!(xiphi_check(&ctx, &phi, &g, &e).unwrap() < 1e-12);
        let h = alg.exp(&smp.coords(21, 0.5)).unwrap();
        assert!(phihs_residual(&ctx, &s, &h, &g).unwrap() < 1e-12);
        let a: V<f64> = smp.unit(AlgebraTag::O);
        assert!(phi_as_residual(&ctx, &s, &a, &g).unwrap() < 1e-12);
    }

    #[test]
    fn annihilator_dims() {
        for (tag, ker, ann_phi, ann_b) in [(AlgebraTag::O, 14, 14, 14), (AlgebraTag::H, 10, 10, 13), (AlgebraTag::C, 3, 4, 4)] {
            let ctx = LoopContext::new(tag);
            let mut smp = Sampler::new(12);
            let s = smp.rational_unit(tag);
            let phi: PhiMap<Rational> = PhiMap::new(&ctx, &s).unwrap();
            let ann = annihilators(&ctx, &phi).unwrap();
            assert_eq!((ann.kernel.len(), ann.ann_phi.len(), ann.ann_b.len()), (ker, ann_phi, ann_b), "{tag}");
            assert!(ann.chain_holds);
        }
    }

    #[test]
    fn quaternion_and_complex() {
        let ctx = LoopContext::new(AlgebraTag::H);
        let alg = PGroup::Sp2Sp1.algebra();
        let mut smp = Sampler::new(13);
        let s = smp.rational_unit(AlgebraTag::H);
        let x = alg.element((0..alg.dim()).map(|_| smp.small_rational()).collect());
        let y = alg.element((0..alg.dim()).map(|_| smp.small_rational()).collect());
        assert_eq!(quat_action_residual(&ctx, &s, &x, &y, 1).unwrap(), 0.0);
        let phi = PhiMap::new(&ctx, &s).unwrap();
        assert_eq!(phi.lambda().unwrap(), Rational::from_i64(1));
        let c = LoopContext::new(AlgebraTag::C);
        let pts: Vec<V<Rational>> = (0..10).map(|_| smp.rational_unit(AlgebraTag::C)).collect();
        assert_eq!(complex_phi_independence(&c, &pts).unwrap(), 0.0);
        let phi = PhiMap::new(&c, &pts[0]).unwrap();
        assert_eq!(phi.lambda().unwrap(), Rational::from_i64(2));
    }
}
