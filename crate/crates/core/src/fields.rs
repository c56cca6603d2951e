//! Loop-, `𝔩`- and `𝔭`-valued fields on flat tori: Darboux derivatives, torsion, curvature and
//! the identities relating them.
//!
//! Everything is expressed in a global trivialization: a loop field `s`, a `𝔭`-valued connection
//! form `A`, with `T_i = ((∂_i + A_i) s)/s` and `F_ij = ∂_iA_j - ∂_jA_i + [A_i, A_j]_𝔭`.

use crate::algebra::{AlgebraTag, AlgebraValue};
use crate::error::{Error, Result};
use crate::loops::LoopContext;
use crate::numerics::{fd_derivative, DiffConfig, Jet, Matrix, JET_DIM};
use crate::phi::{phi_coords, PhiMap};
use crate::pseudoauto::{PAlgebra, PGroup};
use crate::report::{Check, Report};
use crate::sampling::Sampler;
use crate::tangent::{associator_closed, bracket_closed, exp_closed, left_alt_assoc};
use rayon::prelude::*;
use std::f64::consts::PI;

type V<S> = AlgebraValue<S>;

/// Coefficient `c₀` of `[A_i, A_j]_𝔭` in the curvature.
///
/// Calibrated against the structure equation and the abelian anchor; see the tests.
pub const CURVATURE_BRACKET: f64 = 1.0;

/// Periodic domain `[0, 2π)^dim` with an optional grid resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusDomain {
    pub dim: usize,
    pub n: usize,
}

impl TorusDomain {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=JET_DIM).contains(&dim) {
            return Err(Error::Config(format!("torus dimension {dim} not in 1..=3")));
        }
        Ok(TorusDomain { dim, n })
    }

    pub fn h(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim);
        let mut r = idx;
        for _ in 0..self.dim {
            out.push((r % self.n) as f64 * self.h());
            r /= self.n;
        }
        out
    }

    /// Index of the neighbour `idx + step e_axis` with periodic wrap.
    pub fn shift(&self, idx: usize, axis: usize, step: isize) -> usize {
        let stride = self.n.pow(axis as u32);
        let c = (idx / stride) % self.n;
        let nc = (c as isize + step).rem_euclid(self.n as isize) as usize;
        idx - c * stride + nc * stride
    }
}

/// Tensor grid of 5-point Gauss–Legendre nodes on `[0, 2π)` per axis.
pub fn gauss_points(dim: usize, per_axis: usize) -> Vec<Vec<f64>> {
    const NODES: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
    let nodes: Vec<f64> = NODES.iter().take(per_axis.clamp(1, 5)).map(|t| PI * (1.0 + t)).collect();
    let m = nodes.len();
    (0..m.pow(dim as u32))
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let v = nodes[k % m];
                    k /= m;
                    v
                })
                .collect()
        })
        .collect()
}

/// Truncated real Fourier series with `ncomp` components.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticField {
    pub dim: usize,
    pub ncomp: usize,
    waves: Vec<[i32; JET_DIM]>,
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
}

impl AnalyticField {
    pub fn zero(dim: usize, ncomp: usize) -> Self {
        AnalyticField { dim, ncomp, waves: vec![], cos: vec![], sin: vec![] }
    }

    pub fn constant(dim: usize, values: Vec<f64>) -> Self {
        let ncomp = values.len();
        AnalyticField { dim, ncomp, waves: vec![[0; JET_DIM]], cos: vec![values], sin: vec![vec![0.0; ncomp]] }
    }

    /// Adds `c cos(k·x) + s sin(k·x)` to every component.
    pub fn with_mode(mut self, k: [i32; JET_DIM], c: Vec<f64>, s: Vec<f64>) -> Self {
        assert_eq!(c.len(), self.ncomp);
        assert_eq!(s.len(), self.ncomp);
        self.waves.push(k);
        self.cos.push(c);
        self.sin.push(s);
        self
    }

    /// Random coefficients on all wave vectors with `|k_i| ≤ max_freq`, damped by `1/(1+|k|²)`.
    pub fn random(dim: usize, ncomp: usize, max_freq: i32, amp: f64, smp: &mut Sampler) -> Self {
        let mut f = Self::zero(dim, ncomp);
        let range = |i: usize| if i < dim { -max_freq..=max_freq } else { 0..=0 };
        for k0 in range(0) {
            for k1 in range(1) {
                for k2 in range(2) {
                    let k = [k0, k1, k2];
                    // one representative of each ±k pair
                    if k.iter().find(|c| **c != 0).is_some_and(|c| *c < 0) {
                        continue;
                    }
                    let w = amp / (1.0 + k.iter().map(|c| (c * c) as f64).sum::<f64>());
                    let c = (0..ncomp).map(|_| w * smp.normal()).collect();
                    let s = (0..ncomp).map(|_| if k == [0; 3] { 0.0 } else { w * smp.normal() }).collect();
                    f = f.with_mode(k, c, s);
                }
            }
        }
        f
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.cos.iter_mut().chain(out.sin.iter_mut()) {
            v.iter_mut().for_each(|x| *x *= c);
        }
        out
    }

    /// Values together with exact first and second derivatives.
    pub fn eval_jet(&self, x: &[f64]) -> Vec<Jet> {
        let vars: Vec<Jet> = (0..self.dim).map(|i| Jet::variable(x[i], i)).collect();
        let mut out = vec![Jet::constant(0.0); self.ncomp];
        for (w, k) in self.waves.iter().enumerate() {
            let phase = vars.iter().zip(k).fold(Jet::constant(0.0), |a, (v, ki)| a + v.scale(*ki as f64));
            let (c, s) = (crate::numerics::Real::cos(phase), crate::numerics::Real::sin(phase));
            for (o, (cc, sc)) in out.iter_mut().zip(self.cos[w].iter().zip(&self.sin[w])) {
                *o = *o + c.scale(*cc) + s.scale(*sc);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.eval_jet(x).iter().map(|j| j.v).collect()
    }
}

/// Unit loop field `s(x) = exp(t_k ξ_k(x)) ... exp(t_1 ξ_1(x)) W(x) exp(ζ(x)) s₀`, where the winding
/// factor `W(x) = Π exp(x_a w_a)` is periodic when each `|w_a|` is an integer.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopField {
    pub tag: AlgebraTag,
    pub pre: AnalyticField,
    pub base: V<f64>,
    pub flows: Vec<(AnalyticField, f64)>,
    pub winding: Vec<(usize, Vec<f64>)>,
}

impl LoopField {
    pub fn new(tag: AlgebraTag, pre: AnalyticField, base: V<f64>) -> Result<Self> {
        if pre.ncomp != tag.im_dim() {
            return Err(Error::Dimension(format!("pre-field has {} components, 𝔩 has {}", pre.ncomp, tag.im_dim())));
        }
        if (base.norm2() - 1.0).abs() > 1e-12 {
            return Err(Error::Consistency("base point must have unit norm".into()));
        }
        Ok(LoopField { tag, pre, base, flows: vec![], winding: vec![] })
    }

    pub fn random(tag: AlgebraTag, dim: usize, amp: f64, smp: &mut Sampler) -> Self {
        let pre = AnalyticField::random(dim, tag.im_dim(), 2, amp, smp);
        let base = smp.unit(tag);
        LoopField { tag, pre, base, flows: vec![], winding: vec![] }
    }

    pub fn constant(tag: AlgebraTag, dim: usize, s: V<f64>) -> Self {
        LoopField { tag, pre: AnalyticField::zero(dim, tag.im_dim()), base: s, flows: vec![], winding: vec![] }
    }

    /// `s(x) = exp(x_axis ξ)`.
    pub fn winding(tag: AlgebraTag, dim: usize, axis: usize, xi: Vec<f64>) -> Self {
        let mut s = LoopField::constant(tag, dim, V::one(tag));
        s.winding.push((axis, xi));
        s
    }

    pub fn dim(&self) -> usize {
        self.pre.dim
    }

    pub fn eval_jet(&self, ctx: &LoopContext, x: &[f64]) -> V<Jet> {
        let zeta = V::from_im(self.tag, &self.pre.eval_jet(x));
        let base = self.base.map(|c| Jet::constant(*c));
        let mut s = ctx.mul(&exp_closed(&zeta), &base);
        for (axis, w) in &self.winding {
            let x = Jet::variable(x[*axis], *axis);
            let v = V::from_im(self.tag, &jets(w)).scale(&x);
            s = ctx.mul(&exp_closed(&v), &s);
        }
        for (xi, t) in &self.flows {
            let v = V::from_im(self.tag, &xi.eval_jet(x));
            s = ctx.mul(&exp_closed(&v.scale(&Jet::constant(*t))), &s);
        }
        s
    }

    pub fn eval(&self, ctx: &LoopContext, x: &[f64]) -> V<f64> {
        self.eval_jet(ctx, x).map(|j| j.v)
    }
}

/// `𝔭`-valued 1-form `A = A_i dx^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionField {
    pub group: PGroup,
    pub dim: usize,
    pub field: AnalyticField,
}

impl ConnectionField {
    pub fn new(group: PGroup, field: AnalyticField) -> Result<Self> {
        let dp = group.algebra().dim();
        if field.ncomp % dp != 0 || field.ncomp / dp != field.dim {
            return Err(Error::Dimension(format!("connection needs {} components", dp * field.dim)));
        }
        Ok(ConnectionField { group, dim: field.dim, field })
    }

    pub fn zero(group: PGroup, dim: usize) -> Self {
        ConnectionField { group, dim, field: AnalyticField::zero(dim, dim * group.algebra().dim()) }
    }

    pub fn random(group: PGroup, dim: usize, amp: f64, smp: &mut Sampler) -> Self {
        let dp = group.algebra().dim();
        ConnectionField { group, dim, field: AnalyticField::random(dim, dim * dp, 2, amp, smp) }
    }

    /// Components restricted to a subspace spanned by `basis` (coordinate vectors in `𝔭`).
    pub fn random_in(group: PGroup, dim: usize, amp: f64, basis: &[Vec<f64>], smp: &mut Sampler) -> Self {
        let dp = group.algebra().dim();
        let coef = AnalyticField::random(dim, dim * basis.len(), 2, amp, smp);
        let mut f = AnalyticField::zero(dim, dim * dp);
        for (w, k) in coef.waves.iter().enumerate() {
            let lift = |v: &[f64]| -> Vec<f64> {
                let mut out = vec![0.0; dim * dp];
                for i in 0..dim {
                    for (b, bv) in basis.iter().enumerate() {
                        for (c, x) in bv.iter().enumerate() {
                            out[i * dp + c] += v[i * basis.len() + b] * x;
                        }
                    }
                }
                out
            };
            f = f.with_mode(*k, lift(&coef.cos[w]), lift(&coef.sin[w]));
        }
        ConnectionField { group, dim, field: f }
    }

    pub fn eval_jet(&self, x: &[f64]) -> Vec<Vec<Jet>> {
        let dp = self.group.algebra().dim();
        self.field.eval_jet(x).chunks(dp).map(|c| c.to_vec()).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let dp = self.group.algebra().dim();
        self.field.eval(x).chunks(dp).map(|c| c.to_vec()).collect()
    }
}

/// `∂_i` of a jet-valued algebra element.
pub fn partial(v: &V<Jet>, i: usize) -> V<Jet> {
    v.map(|j| j.d(i))
}

pub fn value(v: &V<Jet>) -> V<f64> {
    v.map(|j| j.v)
}

fn values(c: &[Jet]) -> Vec<f64> {
    c.iter().map(|j| j.v).collect()
}

fn jets(c: &[f64]) -> Vec<Jet> {
    c.iter().map(|x| Jet::constant(*x)).collect()
}

/// Torsion, curvature and `F̂` at one point, with first derivatives carried in the jets.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub dim: usize,
    pub s: V<Jet>,
    pub a: Vec<Vec<Jet>>,
    pub theta: Vec<V<Jet>>,
    pub t: Vec<V<Jet>>,
    /// `F[i][j]` in `𝔭` coordinates.
    pub f: Vec<Vec<Vec<Jet>>>,
    pub fhat: Vec<Vec<V<Jet>>>,
}

/// Builds the point geometry from jet values of `s` and `A`.
pub fn geometry(ctx: &LoopContext, alg: &PAlgebra, dim: usize, s: &V<Jet>, a: &[Vec<Jet>]) -> Result<PointGeometry> {
    let mut theta = Vec::with_capacity(dim);
    let mut t = Vec::with_capacity(dim);
    for i in 0..dim {
        let ds = partial(s, i);
        theta.push(ctx.rdiv(&ds, s)?.im());
        t.push(ctx.rdiv(&(ds + alg.full_apply(&a[i], s)), s)?.im());
    }
    let c0 = Jet::constant(CURVATURE_BRACKET);
    let mut f = vec![vec![vec![Jet::constant(0.0); alg.dim()]; dim]; dim];
    let mut fhat = vec![vec![V::zero(ctx.tag); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let br = alg.bracket(&a[i], &a[j]);
            let fij: Vec<Jet> = (0..alg.dim()).map(|k| a[j][k].d(i) - a[i][k].d(j) + c0 * br[k]).collect();
            fhat[i][j] = phi_coords(ctx, alg, s, &fij)?;
            f[i][j] = fij;
        }
    }
    Ok(PointGeometry { dim, s: s.clone(), a: a.to_vec(), theta, t, f, fhat })
}

impl PointGeometry {
    pub fn s_value(&self) -> V<f64> {
        value(&self.s)
    }

    pub fn a_value(&self, i: usize) -> Vec<f64> {
        values(&self.a[i])
    }

    pub fn f_value(&self, i: usize, j: usize) -> Vec<f64> {
        values(&self.f[i][j])
    }

    pub fn t_value(&self, i: usize) -> V<f64> {
        value(&self.t[i])
    }

    pub fn fhat_value(&self, i: usize, j: usize) -> V<f64> {
        value(&self.fhat[i][j])
    }

    /// `∂_i` of a jet quantity evaluated as plain values.
    fn grad(v: &V<Jet>, i: usize) -> V<f64> {
        v.map(|j| j.g[i])
    }
}

/// Evaluates the geometry of `(s, A)` at `x`.
pub fn geometry_at(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, x: &[f64]) -> Result<PointGeometry> {
    if s.dim() != a.dim {
        return Err(Error::Dimension("loop field and connection live on different tori".into()));
    }
    geometry(ctx, a.group.algebra(), a.dim, &s.eval_jet(ctx, x), &a.eval_jet(x))
}

/// Right Darboux derivative `θ_s(∂_dir) = (∂_dir s)/s`.
pub fn darboux(ctx: &LoopContext, s: &LoopField, x: &[f64], dir: usize) -> Result<V<f64>> {
    let sj = s.eval_jet(ctx, x);
    Ok(value(&ctx.rdiv(&partial(&sj, dir), &sj)?))
}

/// `T_i` at `x`.
pub fn torsion(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, x: &[f64]) -> Result<Vec<V<f64>>> {
    let g = geometry_at(ctx, s, a, x)?;
    Ok((0..g.dim).map(|i| g.t_value(i)).collect())
}

/// `F_ij` in `𝔭` coordinates at `x`.
pub fn curvature(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let g = geometry_at(ctx, s, a, x)?;
    Ok((0..g.dim).map(|i| (0..g.dim).map(|j| g.f_value(i, j)).collect()).collect())
}

/// `F̂_ij = φ_s(F_ij)` at `x`.
pub fn fhat(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, x: &[f64]) -> Result<Vec<Vec<V<f64>>>> {
    let g = geometry_at(ctx, s, a, x)?;
    Ok((0..g.dim).map(|i| (0..g.dim).map(|j| g.fhat_value(i, j)).collect()).collect())
}

/// Maximum over points of a pointwise residual, reduced in point order.
pub fn max_over<F>(points: &[Vec<f64>], f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let r: Result<Vec<f64>> = points.par_iter().map(|x| f(x)).collect();
    Ok(r?.into_iter().fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) }))
}

fn act(alg: &PAlgebra, gamma: &[f64], v: &V<f64>) -> V<f64> {
    alg.vector_apply(gamma, v)
}

fn br(ctx: &LoopContext, s: &V<f64>, x: &V<f64>, y: &V<f64>) -> Result<V<f64>> {
    Ok(bracket_closed(ctx, s, x, y)?.im())
}

/// `dθ_s - ½[θ_s, θ_s]^{(s)}` at `x`, max over pairs of directions.
pub fn maurer_cartan_point(ctx: &LoopContext, g: &PointGeometry) -> Result<f64> {
    let s = g.s_value();
    let mut worst = 0.0f64;
    for i in 0..g.dim {
        for j in (i + 1)..g.dim {
            let d = PointGeometry::grad(&g.theta[j], i) - PointGeometry::grad(&g.theta[i], j);
            let b = br(ctx, &s, &value(&g.theta[i]), &value(&g.theta[j]))?;
            worst = worst.max((d - b).max_abs());
        }
    }
    Ok(worst)
}

/// `F̂ - d^H T + ½[T, T]^{(s)}` at a point.
pub fn structure_point(ctx: &LoopContext, alg: &PAlgebra, g: &PointGeometry) -> Result<f64> {
    let s = g.s_value();
    let mut worst = 0.0f64;
    for i in 0..g.dim {
        for j in (i + 1)..g.dim {
            let (ti, tj) = (g.t_value(i), g.t_value(j));
            let dht = PointGeometry::grad(&g.t[j], i) - PointGeometry::grad(&g.t[i], j) + act(alg, &g.a_value(i), &tj)
                - act(alg, &g.a_value(j), &ti);
            let r = g.fhat_value(i, j) - dht + br(ctx, &s, &ti, &tj)?;
            worst = worst.max(r.max_abs());
        }
    }
    Ok(worst)
}

/// `(d^H_i φ_s)(γ) = γ·T_i - [φ_s(γ), T_i]^{(s)}`.
fn dh_phi(ctx: &LoopContext, alg: &PAlgebra, s: &V<f64>, t: &V<f64>, gamma: &[f64]) -> Result<V<f64>> {
    let p = phi_coords(ctx, alg, s, gamma)?;
    Ok(act(alg, gamma, t) - br(ctx, s, &p, t)?)
}

/// `dω̂ + ½[ω̂, ω̂]^{(s)} - F̂ - d^Hφ_s ∧ A` at a point, with `ω̂ = φ_s(A)` and
/// `(d^Hφ_s ∧ A)_ij = (d^H_iφ_s)(A_j) - (d^H_jφ_s)(A_i)`.
pub fn dwstruct_point(ctx: &LoopContext, alg: &PAlgebra, g: &PointGeometry) -> Result<f64> {
    let s = g.s_value();
    let what: Result<Vec<V<Jet>>> = (0..g.dim).map(|i| phi_coords(ctx, alg, &g.s, &g.a[i])).collect();
    let what = what?;
    let mut worst = 0.0f64;
    for i in 0..g.dim {
        for j in (i + 1)..g.dim {
            let dw = PointGeometry::grad(&what[j], i) - PointGeometry::grad(&what[i], j);
            let b = br(ctx, &s, &value(&what[i]), &value(&what[j]))?;
            let wedge = dh_phi(ctx, alg, &s, &g.t_value(i), &g.a_value(j))? - dh_phi(ctx, alg, &s, &g.t_value(j), &g.a_value(i))?;
            let r = dw + b - g.fhat_value(i, j) - wedge;
            worst = worst.max(r.max_abs());
        }
    }
    Ok(worst)
}

/// Cyclic sum of `∂_i F̂_jk + A_i·F̂_jk - F_jk·T_i + [F̂_jk, T_i]^{(s)}` on a 3-torus.
pub fn bianchi_point(ctx: &LoopContext, alg: &PAlgebra, g: &PointGeometry) -> Result<f64> {
    if g.dim != 3 {
        return Err(Error::Dimension("Bianchi identity needs a 3-torus".into()));
    }
    let s = g.s_value();
    let mut total = V::zero(ctx.tag);
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        let fh = g.fhat_value(j, k);
        let ti = g.t_value(i);
        total = total + PointGeometry::grad(&g.fhat[j][k], i) + act(alg, &g.a_value(i), &fh) - act(alg, &g.f_value(j, k), &ti)
            + br(ctx, &s, &fh, &ti)?;
    }
    Ok(total.max_abs())
}

pub fn structural_residual(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, points: &[Vec<f64>], tol: f64) -> Result<Report> {
    let alg = a.group.algebra();
    let mut r = Report::new("structure");
    let mc = max_over(points, |x| maurer_cartan_point(ctx, &geometry_at(ctx, s, a, x)?))?;
    r.push(Check::new("maurer-cartan", "Eq-DarbouxMC", points.len(), mc, tol));
    let st = max_over(points, |x| structure_point(ctx, alg, &geometry_at(ctx, s, a, x)?))?;
    r.push(Check::new("structure-equation", "Eq-dHT", points.len(), st, tol));
    let dw = max_over(points, |x| dwstruct_point(ctx, alg, &geometry_at(ctx, s, a, x)?))?;
    r.push(Check::new("structure-equation-omega-hat", "Eq-dwstruct", points.len(), dw, tol));
    Ok(r)
}

pub fn bianchi_residual(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, points: &[Vec<f64>], tol: f64) -> Result<Check> {
    let alg = a.group.algebra();
    let b = max_over(points, |x| bianchi_point(ctx, alg, &geometry_at(ctx, s, a, x)?))?;
    Ok(Check::new("bianchi", "Eq-Bianchi", points.len(), b, tol))
}

/// Gauge transform by `u = exp(γ(x))`: `s' = u^{-1}(s)`, `A' = u^{-1}Au + u^{-1}du`.
/// Returns the transformed jets at `x` together with `u'` (partial action) and `full(u)`.
pub fn gauge_transform_at(
    ctx: &LoopContext,
    s: &LoopField,
    a: &ConnectionField,
    u: &AnalyticField,
    x: &[f64],
) -> Result<(PointGeometry, PointGeometry, Matrix<f64>)> {
    let alg = a.group.algebra();
    let sj = s.eval_jet(ctx, x);
    let aj = a.eval_jet(x);
    let ue = alg.exp(&u.eval_jet(x))?;
    let uinv = ue.inverse()?;
    let s2 = V::new(ctx.tag, uinv.full.mul_vec(&sj.coords));
    let mut a2 = Vec::with_capacity(a.dim);
    for (i, ai) in aj.iter().enumerate() {
        let du = Matrix::from_fn(ue.def.rows(), ue.def.cols(), |r, c| ue.def[(r, c)].d(i));
        let m = uinv.def.mul(&alg.def_rep(ai)).mul(&ue.def).add(&uinv.def.mul(&du));
        a2.push(alg.coords_of_def(&m));
    }
    let before = geometry(ctx, alg, a.dim, &sj, &aj)?;
    let after = geometry(ctx, alg, a.dim, &s2, &a2)?;
    Ok((before, after, uinv.vector.map(|j| j.v)))
}

/// Checks `T' = (u')^{-1} T` and `F̂' = (u')^{-1} F̂` under a gauge transform.
pub fn gauge_transform(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, u: &AnalyticField, points: &[Vec<f64>], tol: f64) -> Result<Report> {
    let res = |x: &[f64]| -> Result<(f64, f64)> {
        let (g, g2, uinv) = gauge_transform_at(ctx, s, a, u, x)?;
        let rot = |v: V<f64>| V::from_im(ctx.tag, &uinv.mul_vec(&v.im_coords()));
        let mut wt = 0.0f64;
        let mut wf = 0.0f64;
        for i in 0..g.dim {
            wt = wt.max((g2.t_value(i) - rot(g.t_value(i))).max_abs());
            for j in 0..g.dim {
                if i != j {
                    wf = wf.max((g2.fhat_value(i, j) - rot(g.fhat_value(i, j))).max_abs());
                }
            }
        }
        Ok((wt, wf))
    };
    let rs: Result<Vec<(f64, f64)>> = points.par_iter().map(|x| res(x)).collect();
    let rs = rs?;
    let mut r = Report::new("gauge");
    r.push(Check::new("torsion-gauge-equivariance", "Eq-Tuom", points.len(), rs.iter().map(|p| p.0).fold(0.0, f64::max), tol));
    r.push(Check::new("fhat-gauge-equivariance", "Eq-Tuom", points.len(), rs.iter().map(|p| p.1).fold(0.0, f64::max), tol));
    Ok(r)
}

/// Compares `T^{(Bs)}` and `F̂^{(Bs)}` computed directly against the translation formulas, where
/// `(R_B^{(s)})^{-1}Y = (Ys)/(Bs)`, `Ad_B^{(s)}ξ = (B(ξs))/(Bs)`, `DB = dB + A·B`, `D^{(s)}B = DB + (B(Ts))/s`.
pub fn left_translate(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, b: &LoopField, points: &[Vec<f64>], tol: f64) -> Result<Report> {
    let alg = a.group.algebra();
    let res = |x: &[f64]| -> Result<[f64; 3]> {
        let sj = s.eval_jet(ctx, x);
        let bj = b.eval_jet(ctx, x);
        let aj = a.eval_jet(x);
        let g = geometry(ctx, alg, a.dim, &sj, &aj)?;
        let g2 = geometry(ctx, alg, a.dim, &ctx.mul(&bj, &sj), &aj)?;
        let (sv, bv) = (value(&sj), value(&bj));
        let bs = ctx.mul(&bv, &sv);
        let rinv = |y: &V<f64>| ctx.rdiv(&ctx.mul(y, &sv), &bs);
        let ad = |xi: &V<f64>| ctx.rdiv(&ctx.mul(&bv, &ctx.mul(xi, &sv)), &bs);
        let mut w = [0.0f64; 3];
        for i in 0..a.dim {
            let ai = g.a_value(i);
            let db = value(&partial(&bj, i)) + alg.partial_apply(&ai, &bv);
            let t = g.t_value(i);
            let f1 = rinv(&db)? + ad(&t)?;
            let dsb = db.clone() + ctx.rdiv(&ctx.mul(&bv, &ctx.mul(&t, &sv)), &sv)?;
            let f2 = rinv(&dsb)?;
            w[0] = w[0].max((g2.t_value(i) - f1.im()).max_abs());
            w[1] = w[1].max((g2.t_value(i) - f2.im()).max_abs());
            for j in 0..a.dim {
                if i == j {
                    continue;
                }
                let fj = g.f_value(i, j);
                let ff = rinv(&alg.partial_apply(&fj, &bv))? + ad(&g.fhat_value(i, j))?;
                w[2] = w[2].max((g2.fhat_value(i, j) - ff.im()).max_abs());
            }
        }
        Ok(w)
    };
    let rs: Result<Vec<[f64; 3]>> = points.par_iter().map(|x| res(x)).collect();
    let rs = rs?;
    let m = |k: usize| rs.iter().map(|w| w[k]).fold(0.0, f64::max);
    let mut r = Report::new("left-translation");
    r.push(Check::new("torsion-left-translation", "Eq-Trom", points.len(), m(0), tol));
    r.push(Check::new("torsion-adapted-derivative", "Eq-Dsderiv", points.len(), m(1), tol));
    r.push(Check::new("fhat-left-translation", "Eq-From", points.len(), m(2), tol));
    Ok(r)
}

/// Advances `s ← exp(dt ξ) s` (the flow of a time-independent `ξ`).
pub fn deformation_step(s: &LoopField, xi: &AnalyticField, dt: f64) -> Result<LoopField> {
    if xi.ncomp != s.tag.im_dim() || xi.dim != s.dim() {
        return Err(Error::Dimension("deformation field does not match the loop field".into()));
    }
    let mut out = s.clone();
    out.flows.push((xi.clone(), dt));
    Ok(out)
}

/// `t`-derivatives of `θ`, `T` and `F̂` along `s(t) = exp(tξ)s`, by Richardson differences,
/// against `dξ - [θ, ξ]`, `d^Hξ - [T, ξ]` and `F·ξ - [F̂, ξ]`.
pub fn deformation_rates(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, xi: &AnalyticField, points: &[Vec<f64>], tol: f64) -> Result<Report> {
    let alg = a.group.algebra();
    let dim = a.dim;
    let res = |x: &[f64]| -> Result<[f64; 3]> {
        let pack = |t: f64| -> Vec<f64> {
            let st = deformation_step(s, xi, t).expect("matching dims");
            let g = geometry_at(ctx, &st, a, x).expect("invertible");
            let mut out = Vec::new();
            for i in 0..dim {
                out.extend(value(&g.theta[i]).coords);
                out.extend(g.t_value(i).coords);
            }
            for i in 0..dim {
                for j in 0..dim {
                    out.extend(g.fhat_value(i, j).coords);
                }
            }
            out
        };
        let cfg = DiffConfig { h: 1e-2, levels: 3, tol: 1e-8 };
        let d = fd_derivative(&pack, 0.0, 1, &cfg)?.value;
        let g = geometry_at(ctx, s, a, x)?;
        let sv = g.s_value();
        let xj = V::from_im(ctx.tag, &xi.eval_jet(x));
        let xv = value(&xj);
        let n = ctx.tag.dim();
        let chunk = |k: usize| V::new(ctx.tag, d[k * n..(k + 1) * n].to_vec());
        let mut w = [0.0f64; 3];
        for i in 0..dim {
            let dxi = value(&partial(&xj, i));
            let th = dxi.clone() - br(ctx, &sv, &value(&g.theta[i]), &xv)?;
            let tt = dxi + act(alg, &g.a_value(i), &xv) - br(ctx, &sv, &g.t_value(i), &xv)?;
            w[0] = w[0].max((chunk(2 * i) - th).max_abs());
            w[1] = w[1].max((chunk(2 * i + 1) - tt).max_abs());
        }
        for i in 0..dim {
            for j in 0..dim {
                if i == j {
                    continue;
                }
                let ff = act(alg, &g.f_value(i, j), &xv) - br(ctx, &sv, &g.fhat_value(i, j), &xv)?;
                w[2] = w[2].max((chunk(2 * dim + i * dim + j) - ff).max_abs());
            }
        }
        Ok(w)
    };
    let rs: Result<Vec<[f64; 3]>> = points.par_iter().map(|x| res(x)).collect();
    let rs = rs?;
    let m = |k: usize| rs.iter().map(|w| w[k]).fold(0.0, f64::max);
    let mut r = Report::new("deformation");
    r.push(Check::new("darboux-rate", "Eq-dtthetas", points.len(), m(0), tol));
    r.push(Check::new("torsion-rate", "Eq-dtTF", points.len(), m(1), tol));
    r.push(Check::new("fhat-rate", "Eq-dtTF", points.len(), m(2), tol));
    Ok(r)
}

/// Pointwise residuals of the product, quotient, bracket and `φ_s` derivative identities.
pub struct CalculusFields {
    pub s: LoopField,
    pub a: LoopField,
    pub b: LoopField,
    pub xi: AnalyticField,
    pub eta: AnalyticField,
    pub conn: ConnectionField,
}

impl CalculusFields {
    pub fn random(tag: AlgebraTag, dim: usize, seed: u64) -> Result<Self> {
        let mut smp = Sampler::new(seed);
        let group = PGroup::for_tag(tag)?;
        Ok(CalculusFields {
            s: LoopField::random(tag, dim, 0.4, &mut smp),
            a: LoopField::random(tag, dim, 0.4, &mut smp),
            b: LoopField::random(tag, dim, 0.4, &mut smp),
            xi: AnalyticField::random(dim, tag.im_dim(), 2, 0.5, &mut smp),
            eta: AnalyticField::random(dim, tag.im_dim(), 2, 0.5, &mut smp),
            conn: ConnectionField::random(group, dim, 0.3, &mut smp),
        })
    }
}

const CALCULUS_NAMES: [(&str, &str); 15] = [
    ("product-derivative", "Eq-dAsB1"),
    ("right-quotient-derivative", "Eq-drquot"),
    ("left-quotient-derivative", "Eq-dlquot"),
    ("bracket-derivative", "Eq-dbrack"),
    ("phi-derivative", "Eq-dphis0"),
    ("modified-darboux", "Eq-thetafs2"),
    ("modified-darboux-structure", "Eq-dthetafs"),
    ("darboux-uniqueness", "Eq-thetaAB"),
    ("alpha-structure", "Eq-alphastruct2"),
    ("quotient-curve-derivative", "Eq-ddtrighquot"),
    ("adjoint-curve-derivative", "Eq-dAdfs"),
    ("theta-phi-projection", "Eq-dphistheta4"),
    ("covariant-bracket-derivative", "Eq-dHbrack"),
    ("modified-exterior-derivation", "Eq-dsbrack"),
    ("covariant-phi-derivative", "Eq-dhphis"),
];

fn calculus_point(ctx: &LoopContext, fl: &CalculusFields, x: &[f64]) -> Result<[f64; 15]> {
    let tag = ctx.tag;
    let dim = fl.s.dim();
    let alg = fl.conn.group.algebra();
    let sj = fl.s.eval_jet(ctx, x);
    let aj = fl.a.eval_jet(ctx, x);
    let bj = fl.b.eval_jet(ctx, x);
    let xij = V::from_im(tag, &fl.xi.eval_jet(x));
    let etaj = V::from_im(tag, &fl.eta.eval_jet(x));
    let (s, a, b, xi, eta) = (value(&sj), value(&aj), value(&bj), value(&xij), value(&etaj));
    let conn = fl.conn.eval_jet(x);
    let g = geometry(ctx, alg, dim, &sj, &conn)?;
    let mp = |r: &V<f64>, p: &V<f64>, q: &V<f64>| ctx.mod_product(r, p, q);
    // [x,y,z]^{(s)} with bilinear extension of ∘_s
    let asc = |x: &V<f64>, y: &V<f64>, z: &V<f64>| -> Result<V<f64>> { Ok(mp(&s, x, &mp(&s, y, z)?)? - mp(&s, &mp(&s, x, y)?, z)?) };
    let rq = |p: &V<f64>, q: &V<f64>| ctx.mod_rdiv(&s, p, q);
    let lq = |p: &V<f64>, q: &V<f64>| ctx.mod_ldiv(&s, p, q);
    let mut w = [0.0f64; 15];
    let up = |w: &mut [f64; 15], k: usize, v: f64| w[k] = w[k].max(v);
    for i in 0..dim {
        let th = value(&g.theta[i]);
        let t = g.t_value(i);
        let (da, db) = (value(&partial(&aj, i)), value(&partial(&bj, i)));
        let (dxi, deta) = (value(&partial(&xij, i)), value(&partial(&etaj, i)));
        // d(A∘_sB)
        let lhs = value(&partial(&ctx.mod_product(&sj, &aj, &bj)?, i));
        let rhs = mp(&s, &da, &b)? + mp(&s, &a, &db)? + asc(&a, &b, &th)?;
        up(&mut w, 0, (lhs - rhs).max_abs());
        // d(A/_sB)
        let q = rq(&a, &b)?;
        let lhs = value(&partial(&ctx.mod_rdiv(&sj, &aj, &bj)?, i));
        let rhs = rq(&da, &b)? - rq(&mp(&s, &q, &db)?, &b)? - rq(&asc(&q, &b, &th)?, &b)?;
        up(&mut w, 1, (lhs - rhs).max_abs());
        // d(B\_sA)
        let q = lq(&b, &a)?;
        let lhs = value(&partial(&ctx.mod_ldiv(&sj, &bj, &aj)?, i));
        let rhs = lq(&b, &da)? - lq(&b, &mp(&s, &db, &q)?)? - lq(&b, &asc(&b, &q, &th)?)?;
        up(&mut w, 2, (lhs - rhs).max_abs());
        // d[ξ,η]
        let lhs = value(&partial(&bracket_closed(ctx, &sj, &xij, &etaj)?, i)).im();
        let rhs = br(ctx, &s, &dxi, &eta)? + br(ctx, &s, &xi, &deta)? + left_alt_assoc(ctx, &s, &xi, &eta, &th)?.im();
        up(&mut w, 3, (lhs - rhs).max_abs());
        // dφ_s(γ) = γ·θ - [φ_s(γ), θ]
        for k in 0..alg.dim() {
            let e: Vec<f64> = (0..alg.dim()).map(|m| (m == k) as i64 as f64).collect();
            let lhs = value(&partial(&phi_coords(ctx, alg, &sj, &jets(&e))?, i));
            let rhs = act(alg, &e, &th) - br(ctx, &s, &phi_coords(ctx, alg, &s, &e)?, &th)?;
            up(&mut w, 4, (lhs - rhs).max_abs());
            // d^H φ_s(γ) = d(φ_s γ) + A·φ_s(γ) - φ_s([A, γ]) against γ·T - [φ_s γ, T]
            let ai = g.a_value(i);
            let lhs = value(&partial(&phi_coords(ctx, alg, &sj, &jets(&e))?, i)) + act(alg, &ai, &phi_coords(ctx, alg, &s, &e)?)
                - phi_coords(ctx, alg, &s, &alg.bracket(&ai, &e))?;
            let rhs = act(alg, &e, &t) - br(ctx, &s, &phi_coords(ctx, alg, &s, &e)?, &t)?;
            up(&mut w, 14, (lhs - rhs).max_abs());
        }
        // θ_A^{(s)} = θ_{As} - Ad_A^{(s)} θ_s, with θ_A^{(s)} = (dA s)/(As)
        let asj = ctx.mul(&aj, &sj);
        let asv = value(&asj);
        let theta_as = value(&ctx.rdiv(&partial(&asj, i), &asj)?);
        let theta_a_s = ctx.rdiv(&ctx.mul(&da, &s), &asv)?;
        let ad_th = ctx.rdiv(&ctx.mul(&a, &ctx.mul(&th, &s)), &asv)?;
        up(&mut w, 5, (theta_a_s - (theta_as - ad_th)).max_abs());
        // A = BC with C constant: θ_A = θ_B^{(C)}
        let c = fl.s.base.clone();
        let cj = c.map(|v| Jet::constant(*v));
        let a2 = ctx.mul(&bj, &cj);
        let lhs = value(&ctx.rdiv(&partial(&a2, i), &a2)?);
        let rhs = ctx.rdiv(&ctx.mul(&db, &c), &ctx.mul(&b, &c))?;
        up(&mut w, 7, (lhs - rhs).max_abs());
        // d/dt (A/B) along the curve x + t e_i
        let lhs = value(&partial(&ctx.rdiv(&aj, &bj)?, i));
        let q = ctx.rdiv(&a, &b)?;
        let rhs = ctx.rdiv(&da, &b)? - ctx.rdiv(&ctx.mul(&q, &db), &b)?;
        up(&mut w, 9, (lhs - rhs).max_abs());
        // d/dt Ad_f^{(s)} ξ with f = A, ξ constant
        let adj = |fj: &V<Jet>, sj: &V<Jet>, x: &V<Jet>| ctx.rdiv(&ctx.mul(fj, &ctx.mul(x, sj)), &ctx.mul(fj, sj));
        let xic = xi.map(|v| Jet::constant(*v));
        let lhs = value(&partial(&adj(&aj, &sj, &xic)?, i));
        let rf = |y: &V<f64>| ctx.rdiv(&ctx.mul(y, &s), &asv);
        let fdot = rf(&da)?;
        let adxi = ctx.rdiv(&ctx.mul(&a, &ctx.mul(&xi, &s)), &asv)?;
        let rhs = bracket_closed(ctx, &asv, &fdot, &adxi)? - rf(&asc(&fdot, &a, &xi)?)? + rf(&asc(&a, &xi, &th)?)?
            - rf(&asc(&adxi, &a, &th)?)?;
        up(&mut w, 10, (lhs - rhs).max_abs());
        for j in 0..dim {
            if i == j {
                continue;
            }
            let thj = value(&g.theta[j]);
            let tj = g.t_value(j);
            // dθ_A^{(s)} = ½[θ_A, θ_A]^{(As)} + (R_A^{(s)})^{-1}(θ_A ∧ A ∧ θ_s associator), componentwise
            // [θ_A(∂_i), A, θ_s(∂_j)] - [θ_A(∂_j), A, θ_s(∂_i)]
            let ta = |k: usize| -> Result<V<Jet>> { ctx.rdiv(&ctx.mul(&partial(&aj, k), &sj), &asj) };
            let (tai, taj) = (ta(i)?, ta(j)?);
            let d = value(&partial(&taj, i)) - value(&partial(&tai, j));
            let (tai, taj) = (value(&tai), value(&taj));
            let rhs = bracket_closed(ctx, &asv, &tai, &taj)? + rf(&(asc(&tai, &a, &thj)? - asc(&taj, &a, &th)?))?;
            up(&mut w, 6, (d - rhs).max_abs());
            // [α, α, α - θ] with α = θ_s
            let z = V::zero(tag);
            up(&mut w, 8, (associator_closed(ctx, &s, &th, &thj, &z)? - associator_closed(ctx, &s, &thj, &th, &z)?).max_abs());
            // d^H [ξ,η] with the associator terms
            let dh = |v: &V<Jet>| -> V<f64> { value(&partial(v, i)) + act(alg, &g.a_value(i), &value(v)) };
            let bj2 = bracket_closed(ctx, &sj, &xij, &etaj)?.im();
            let lhs = dh(&bj2);
            let rhs = br(ctx, &s, &dh(&xij), &eta)? + br(ctx, &s, &xi, &dh(&etaj))? + left_alt_assoc(ctx, &s, &xi, &eta, &t)?.im();
            up(&mut w, 12, (lhs - rhs).max_abs());
            if tag == AlgebraTag::O {
                // d^{(s)} = d^H + ⅓[·, T] is a derivation of the bracket
                let third = 1.0 / 3.0;
                let ds = |v: &V<Jet>| -> Result<V<f64>> { Ok(dh(v) + br(ctx, &s, &value(v), &t)?.scale(&third)) };
                let lhs = ds(&bj2)?;
                let rhs = br(ctx, &s, &ds(&xij)?, &eta)? + br(ctx, &s, &xi, &ds(&etaj)?)?;
                up(&mut w, 13, (lhs - rhs).max_abs());
            }
            let _ = tj;
        }
    }
    // φ_s(dΘ - ½[Θ,Θ]_𝔭) with Θ = λ^{-1} φ_s^t(θ_s), for surjective φ_s
    let phi_j = PhiMap::new(ctx, &sj)?;
    if phi_j.rank() == tag.im_dim() {
        let lambda = phi_j.lambda()?;
        let big: Vec<Vec<Jet>> = (0..dim)
            .map(|i| phi_j.adjoint.mul_vec(&g.theta[i].im_coords()).into_iter().map(|c| c / lambda).collect())
            .collect();
        let phi_v = PhiMap::new(ctx, &s)?;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let d: Vec<f64> = (0..alg.dim()).map(|k| big[j][k].g[i] - big[i][k].g[j]).collect();
                let b = alg.bracket(&values(&big[i]), &values(&big[j]));
                let r: Vec<f64> = d.iter().zip(&b).map(|(x, y)| x - y).collect();
                up(&mut w, 11, phi_v.apply(&r).max_abs());
            }
        }
    }
    Ok(w)
}

pub fn calculus_suite(ctx: &LoopContext, fl: &CalculusFields, points: &[Vec<f64>], tol: f64) -> Result<Report> {
    let rs: Result<Vec<[f64; 15]>> = points.par_iter().map(|x| calculus_point(ctx, fl, x)).collect();
    let rs = rs?;
    let mut r = Report::new("calculus");
    for (k, (name, tag)) in CALCULUS_NAMES.iter().enumerate() {
        if k == 13 && ctx.tag != AlgebraTag::O {
            continue;
        }
        r.push(Check::new(name, tag, points.len(), rs.iter().map(|w| w[k]).fold(0.0, f64::max), tol));
    }
    Ok(r)
}

/// Sampled loop field on a periodic grid with second-order central differences.
#[derive(Clone, Debug)]
pub struct GridField {
    pub domain: TorusDomain,
    pub tag: AlgebraTag,
    pub values: Vec<V<f64>>,
}

impl GridField {
    pub fn sample(ctx: &LoopContext, s: &LoopField, domain: TorusDomain) -> Self {
        let values = (0..domain.len()).into_par_iter().map(|k| s.eval(ctx, &domain.point(k))).collect();
        GridField { domain, tag: s.tag, values }
    }

    pub fn diff(&self, idx: usize, axis: usize) -> V<f64> {
        let p = self.domain.shift(idx, axis, 1);
        let m = self.domain.shift(idx, axis, -1);
        (self.values[p].clone() - self.values[m].clone()).scale(&(0.5 / self.domain.h()))
    }
}

fn grid_diff(domain: &TorusDomain, data: &[Vec<f64>], idx: usize, axis: usize) -> Vec<f64> {
    let p = &data[domain.shift(idx, axis, 1)];
    let m = &data[domain.shift(idx, axis, -1)];
    p.iter().zip(m).map(|(a, b)| (a - b) * 0.5 / domain.h()).collect()
}

/// Structure-equation residual with every derivative replaced by grid differences, as
/// `(max, rms)` over the grid nodes.
pub fn structural_grid_residual(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, n: usize) -> Result<(f64, f64)> {
    let alg = a.group.algebra();
    let domain = TorusDomain::new(a.dim, n)?;
    let dim = a.dim;
    let grid = GridField::sample(ctx, s, domain);
    let conn: Vec<Vec<Vec<f64>>> = (0..domain.len()).map(|k| a.eval(&domain.point(k))).collect();
    // T_i at every node
    let t: Result<Vec<Vec<Vec<f64>>>> = (0..domain.len())
        .into_par_iter()
        .map(|k| {
            let sv = &grid.values[k];
            (0..dim)
                .map(|i| Ok(ctx.rdiv(&(grid.diff(k, i) + alg.full_apply(&conn[k][i], sv)), sv)?.im().coords))
                .collect()
        })
        .collect();
    let t = t?;
    let comp = |data: &Vec<Vec<Vec<f64>>>, i: usize| -> Vec<Vec<f64>> { data.iter().map(|v| v[i].clone()).collect() };
    let tcomp: Vec<Vec<Vec<f64>>> = (0..dim).map(|i| comp(&t, i)).collect();
    let acomp: Vec<Vec<Vec<f64>>> = (0..dim).map(|i| comp(&conn, i)).collect();
    let r: Result<Vec<(f64, f64)>> = (0..domain.len())
        .into_par_iter()
        .map(|k| {
            let sv = &grid.values[k];
            let mut worst = 0.0f64;
            let mut sq = 0.0;
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let daj = grid_diff(&domain, &acomp[j], k, i);
                    let dai = grid_diff(&domain, &acomp[i], k, j);
                    let b = alg.bracket(&conn[k][i], &conn[k][j]);
                    let f: Vec<f64> = (0..alg.dim()).map(|m| daj[m] - dai[m] + CURVATURE_BRACKET * b[m]).collect();
                    let fh = phi_coords(ctx, alg, sv, &f)?;
                    let ti = V::new(ctx.tag, tcomp[i][k].clone());
                    let tj = V::new(ctx.tag, tcomp[j][k].clone());
                    let dtj = V::new(ctx.tag, grid_diff(&domain, &tcomp[j], k, i));
                    let dti = V::new(ctx.tag, grid_diff(&domain, &tcomp[i], k, j));
                    let dht = dtj - dti + act(alg, &conn[k][i], &tj) - act(alg, &conn[k][j], &ti);
                    let r = fh - dht + br(ctx, sv, &ti, &tj)?;
                    worst = worst.max(r.max_abs());
                    sq += r.norm2();
                }
            }
            Ok((worst, sq))
        })
        .collect();
    let r = r?;
    let max = r.iter().map(|p| p.0).fold(0.0, f64::max);
    let rms = (r.iter().map(|p| p.1).sum::<f64>() / r.len() as f64).sqrt();
    Ok((max, rms))
}

/// RMS grid residuals at each resolution and the observed orders between consecutive ones.
///
/// The RMS over a periodic grid is exact for band-limited residuals; the nodal max under-samples
/// peaks on coarse grids and biases the order low.
pub fn grid_convergence(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, ns: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let res: Result<Vec<f64>> = ns.iter().map(|n| Ok(structural_grid_residual(ctx, s, a, *n)?.1)).collect();
    let res = res?;
    let orders = res
        .windows(2)
        .zip(ns.windows(2))
        .map(|(r, n)| (r[0] / r[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect();
    Ok((res, orders))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(tag: AlgebraTag, dim: usize, seed: u64) -> (LoopContext, LoopField, ConnectionField) {
        let ctx = LoopContext::new(tag);
        let mut smp = Sampler::new(seed);
        let s = LoopField::random(tag, dim, 0.5, &mut smp);
        let a = ConnectionField::random(PGroup::for_tag(tag).unwrap(), dim, 0.3, &mut smp);
        (ctx, s, a)
    }

    #[test]
    fn jets_match_finite_differences() {
        let mut smp = Sampler::new(1);
        let f = AnalyticField::random(3, 2, 2, 1.0, &mut smp);
        let x = [0.3, 1.1, 2.0];
        let j = f.eval_jet(&x);
        let h = 1e-5;
        let xp = [0.3, 1.1 + h, 2.0];
        let xm = [0.3, 1.1 - h, 2.0];
        let d = (f.eval(&xp)[1] - f.eval(&xm)[1]) / (2.0 * h);
        assert!((d - j[1].g[1]).abs() < 1e-8);
    }

    #[test]
    fn unit_norm_and_flow_darboux() {
        let (ctx, s, _) = setup(AlgebraTag::O, 3, 2);
        let v = s.eval(&ctx, &[0.1, 0.2, 0.3]);
        assert!((v.norm2() - 1.0).abs() < 1e-13);
        let xi = vec![0.4, -0.2, 0.1, 0.5, 0.0, 0.2, -0.7];
        let flow = LoopField::winding(AlgebraTag::O, 2, 0, xi.clone());
        let d = darboux(&ctx, &flow, &[0.7, 1.3], 0).unwrap();
        assert!((d - V::from_im(AlgebraTag::O, &xi)).max_abs() < 1e-14);
        assert!(darboux(&ctx, &flow, &[0.7, 1.3], 1).unwrap().max_abs() < 1e-15);
        let c = LoopField::constant(AlgebraTag::O, 2, v);
        assert!(darboux(&ctx, &c, &[0.2, 0.2], 1).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn structure_and_bianchi_octonion() {
        let (ctx, s, a) = setup(AlgebraTag::O, 3, 3);
        let pts = gauss_points(3, 2);
        let r = structural_residual(&ctx, &s, &a, &pts, 1e-8).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        let b = bianchi_residual(&ctx, &s, &a, &pts, 1e-8).unwrap();
        assert!(b.passed, "{b:?}");
    }

    #[test]
    fn gauge_and_translation() {
        let (ctx, s, a) = setup(AlgebraTag::O, 2, 4);
        let mut smp = Sampler::new(40);
        let u = AnalyticField::random(2, 21, 1, 0.3, &mut smp);
        let pts = gauss_points(2, 2);
        let r = gauge_transform(&ctx, &s, &a, &u, &pts, 1e-7).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        let b = LoopField::random(AlgebraTag::O, 2, 0.5, &mut smp);
        let r = left_translate(&ctx, &s, &a, &b, &pts, 1e-7).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
    }

    #[test]
    fn deformation_rates_agree() {
        let (ctx, s, a) = setup(AlgebraTag::O, 2, 5);
        let mut smp = Sampler::new(50);
        let xi = AnalyticField::random(2, 7, 1, 0.5, &mut smp);
        let r = deformation_rates(&ctx, &s, &a, &xi, &gauss_points(2, 2), 1e-5).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
    }

    #[test]
    fn calculus_identities() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let fl = CalculusFields::random(AlgebraTag::O, 2, 6).unwrap();
        let r = calculus_suite(&ctx, &fl, &gauss_points(2, 2), 1e-7).unwrap();
        assert!(r.passed(), "{:#?}", r.failures());
    }

    fn with_constant(mut f: AnalyticField, c: Vec<f64>) -> AnalyticField {
        let c = AnalyticField::constant(f.dim, c);
        f.waves.extend(c.waves);
        f.cos.extend(c.cos);
        f.sin.extend(c.sin);
        f
    }

    #[test]
    fn grid_structure_is_second_order() {
        // Truncation errors linear in the fields cancel identically, so the residual is at least
        // quadratic and carries frequency-two content; for that, the 8 -> 16 central-difference
        // order is capped near 1.87.
        let ctx = LoopContext::new(AlgebraTag::O);
        let mut smp = Sampler::new(7);
        let s = LoopField::new(AlgebraTag::O, AnalyticField::random(2, 7, 1, 0.1, &mut smp), smp.unit(AlgebraTag::O)).unwrap();
        let f = with_constant(AnalyticField::random(2, 42, 1, 0.1, &mut smp), smp.coords(42, 0.5));
        let a = ConnectionField::new(PGroup::for_tag(AlgebraTag::O).unwrap(), f).unwrap();
        let (res, orders) = grid_convergence(&ctx, &s, &a, &[8, 16, 32, 64]).unwrap();
        assert!(orders[0] >= 1.75 && orders[1] >= 1.9 && orders[2] >= 1.95, "{res:?} {orders:?}");
    }

    #[test]
    fn abelian_anchor() {
        let (ctx, s, a) = setup(AlgebraTag::C, 3, 8);
        let pts = gauss_points(3, 3);
        let r = structural_residual(&ctx, &s, &a, &pts, 1e-12).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        let b = bianchi_residual(&ctx, &s, &a, &pts, 1e-12).unwrap();
        assert!(b.passed);
    }

    #[test]
    fn quaternion_fields() {
        let (ctx, s, a) = setup(AlgebraTag::H, 3, 9);
        let pts = gauss_points(3, 2);
        assert!(structural_residual(&ctx, &s, &a, &pts, 1e-8).unwrap().passed());
        assert!(bianchi_residual(&ctx, &s, &a, &pts, 1e-8).unwrap().passed);
        let fl = CalculusFields::random(AlgebraTag::H, 2, 10).unwrap();
        let r = calculus_suite(&ctx, &fl, &gauss_points(2, 2), 1e-7).unwrap();
        assert!(r.passed(), "{:#?}", r.failures());
    }

    #[test]
    fn kernel_connection_has_flat_fhat() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let mut smp = Sampler::new(11);
        let s0: V<f64> = smp.unit(AlgebraTag::O);
        let ker = PhiMap::new(&ctx, &s0).unwrap().kernel();
        assert_eq!(ker.len(), 14);
        let a = ConnectionField::random_in(PGroup::for_tag(AlgebraTag::O).unwrap(), 2, 0.5, &ker, &mut smp);
        let s = LoopField::constant(AlgebraTag::O, 2, s0);
        let x = [0.4, 2.2];
        let fh = fhat(&ctx, &s, &a, &x).unwrap();
        let f = curvature(&ctx, &s, &a, &x).unwrap();
        assert!(fh[0][1].max_abs() < 1e-12);
        assert!(f[0][1].iter().any(|c| c.abs() > 1e-3));
        assert!(torsion(&ctx, &s, &a, &x).unwrap().iter().all(|t| t.max_abs() < 1e-12));
    }

    #[test]
    fn identity_gauge_is_trivial() {
        let (ctx, s, a) = setup(AlgebraTag::O, 2, 12);
        let u = AnalyticField::zero(2, 21);
        let (g, g2, _) = gauge_transform_at(&ctx, &s, &a, &u, &[0.5, 0.6]).unwrap();
        assert_eq!(g.t_value(1), g2.t_value(1));
    }
}
