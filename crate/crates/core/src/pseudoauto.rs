//! Pseudoautomorphism pairs and the Lie algebra `𝔭` in defining, vector and full representations.
//!
//! Instances: `so(7)` acting on the unit octonions through the spin lift,
//! `u(2)` acting on the unit complex numbers through the determinant, and
//! `sp(2) ⊕ sp(1)` acting on the unit quaternions through right multiplication.

use crate::algebra::{AlgebraTag, AlgebraValue, MulTable};
use crate::error::{Error, Result};
use crate::loops::LoopContext;
use crate::numerics::{mat_exp, nullspace, rational_to, Matrix, Rational, Scalar};
use crate::report::Check;
use std::sync::OnceLock;

type V<S> = AlgebraValue<S>;

/// Which Lie algebra `𝔭` is realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PGroup {
    /// `so(7)` with its spin representation on `𝕆`.
    So7,
    /// `u(2)` acting on `Uℂ` through the trace.
    U2,
    /// `sp(2) ⊕ sp(1)` acting on `Uℍ` by right multiplication.
    Sp2Sp1,
}

impl PGroup {
    pub fn for_tag(tag: AlgebraTag) -> Result<Self> {
        match tag {
            AlgebraTag::O => Ok(PGroup::So7),
            AlgebraTag::C => Ok(PGroup::U2),
            AlgebraTag::H => Ok(PGroup::Sp2Sp1),
            AlgebraTag::R => Err(Error::Unsupported("no pseudoautomorphism algebra for R".into())),
        }
    }

    pub fn tag(self) -> AlgebraTag {
        match self {
            PGroup::So7 => AlgebraTag::O,
            PGroup::U2 => AlgebraTag::C,
            PGroup::Sp2Sp1 => AlgebraTag::H,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PGroup::So7 => "so(7)",
            PGroup::U2 => "u(2)",
            PGroup::Sp2Sp1 => "sp(2)+sp(1)",
        }
    }

    /// The cached realization.
    pub fn algebra(self) -> &'static PAlgebra {
        static CACHE: OnceLock<[PAlgebra; 3]> = OnceLock::new();
        let all = CACHE.get_or_init(|| [PAlgebra::build(PGroup::So7), PAlgebra::build(PGroup::U2), PAlgebra::build(PGroup::Sp2Sp1)]);
        match self {
            PGroup::So7 => &all[0],
            PGroup::U2 => &all[1],
            PGroup::Sp2Sp1 => &all[2],
        }
    }
}

/// Sparse matrix stored as `(row, col, value)` triples.
#[derive(Clone, Debug)]
struct Sparse {
    rows: usize,
    cols: usize,
    q: Vec<(usize, usize, Rational)>,
    f: Vec<(usize, usize, f64)>,
}

impl Sparse {
    fn from_dense(m: &Matrix<Rational>) -> Self {
        let mut q = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if !m[(i, j)].is_zero() {
                    q.push((i, j, m[(i, j)].clone()));
                }
            }
        }
        let f = q.iter().map(|(i, j, v)| (*i, *j, v.to_f64())).collect();
        Sparse { rows: m.rows(), cols: m.cols(), q, f }
    }

    fn entries<S: Scalar>(&self) -> Vec<(usize, usize, S)> {
        if S::EXACT {
            self.q.iter().map(|(i, j, v)| (*i, *j, rational_to::<S>(v))).collect()
        } else {
            self.f.iter().map(|(i, j, v)| (*i, *j, S::from_f64(*v))).collect()
        }
    }
}

/// A concrete realization of `𝔭` with a fixed basis.
#[derive(Debug)]
pub struct PAlgebra {
    pub group: PGroup,
    pub tag: AlgebraTag,
    def: Vec<Sparse>,
    vector: Vec<Sparse>,
    full: Vec<Sparse>,
    /// `metric_p` on the basis: Frobenius pairing of defining matrices divided by `norm_c`.
    pub gram: Matrix<Rational>,
    gram_inv: Matrix<Rational>,
    gram_f: Matrix<f64>,
    gram_inv_f: Matrix<f64>,
    pub norm_c: i64,
    /// `[X_a, X_b] = sum_k structure[a][b][k] X_k`.
    structure: Vec<Vec<Vec<(usize, Rational, f64)>>>,
}

fn q(n: i64) -> Rational {
    Rational::from_i64(n)
}

/// Embed a matrix on `𝔩` into the algebra, fixing the real axis.
pub fn embed_im<S: Scalar>(m: &Matrix<S>) -> Matrix<S> {
    let n = m.rows() + 1;
    Matrix::from_fn(n, n, |i, j| if i == 0 || j == 0 { S::zero() } else { m[(i - 1, j - 1)].clone() })
}

fn so7_basis() -> Vec<Matrix<Rational>> {
    let mut out = Vec::new();
    for a in 0..7 {
        for b in a + 1..7 {
            let mut m = Matrix::zeros(7, 7);
            m[(b, a)] = q(1);
            m[(a, b)] = q(-1);
            out.push(m);
        }
    }
    out
}

/// Real 2x2 block of a complex number `x + iy`.
fn cblock(m: &mut Matrix<Rational>, r: usize, c: usize, x: i64, y: i64) {
    m[(2 * r, 2 * c)] = q(x);
    m[(2 * r, 2 * c + 1)] = q(-y);
    m[(2 * r + 1, 2 * c)] = q(y);
    m[(2 * r + 1, 2 * c + 1)] = q(x);
}

/// Real 4x4 block of left multiplication by a quaternion basis unit times `sign`.
fn hblock(m: &mut Matrix<Rational>, r: usize, c: usize, unit: usize, sign: i64) {
    let l = MulTable::standard(AlgebraTag::H).left_matrix(&V::<Rational>::basis(AlgebraTag::H, unit).coords);
    for i in 0..4 {
        for j in 0..4 {
            m[(4 * r + i, 4 * c + j)] = l[(i, j)].clone() * q(sign);
        }
    }
}

impl PAlgebra {
    fn build(group: PGroup) -> Self {
        let tag = group.tag();
        let n = tag.dim();
        let mut def: Vec<Matrix<Rational>> = Vec::new();
        let mut vector: Vec<Matrix<Rational>> = Vec::new();
        let mut full: Vec<Matrix<Rational>> = Vec::new();
        let norm_c;
        match group {
            PGroup::So7 => {
                norm_c = 1;
                for m in so7_basis() {
                    full.push(spin_lift(&m).expect("so(7) basis lifts"));
                    vector.push(m.clone());
                    def.push(m);
                }
            }
            PGroup::U2 => {
                norm_c = 2;
                // i E11, i E22, E12 - E21, i (E12 + E21)
                let gens: [[(i64, i64); 4]; 4] = [
                    [(0, 1), (0, 0), (0, 0), (0, 0)],
                    [(0, 0), (0, 0), (0, 0), (0, 1)],
                    [(0, 0), (1, 0), (-1, 0), (0, 0)],
                    [(0, 0), (0, 1), (0, 1), (0, 0)],
                ];
                for g in gens {
                    let mut m = Matrix::zeros(4, 4);
                    for (k, (x, y)) in g.iter().enumerate() {
                        cblock(&mut m, k / 2, k % 2, *x, *y);
                    }
                    let tr_im = g[0].1 + g[3].1;
                    let mut f = Matrix::zeros(2, 2);
                    f[(0, 1)] = q(-tr_im);
                    f[(1, 0)] = q(tr_im);
                    def.push(m);
                    vector.push(Matrix::zeros(1, 1));
                    full.push(f);
                }
            }
            PGroup::Sp2Sp1 => {
                norm_c = 4;
                let zero_full = Matrix::zeros(4, 4);
                for r in 0..2 {
                    for u in 1..4 {
                        let mut m = Matrix::zeros(12, 12);
                        hblock(&mut m, r, r, u, 1);
                        def.push(m);
                        vector.push(Matrix::zeros(3, 3));
                        full.push(zero_full.clone());
                    }
                }
                for u in 0..4 {
                    // off-diagonal q and -conj(q)
                    let mut m = Matrix::zeros(12, 12);
                    hblock(&mut m, 0, 1, u, 1);
                    hblock(&mut m, 1, 0, u, if u == 0 { -1 } else { 1 });
                    def.push(m);
                    vector.push(Matrix::zeros(3, 3));
                    full.push(zero_full.clone());
                }
                for u in 1..4 {
                    let r = MulTable::standard(AlgebraTag::H).right_matrix(&V::<Rational>::basis(AlgebraTag::H, u).coords);
                    let mut m = Matrix::zeros(12, 12);
                    for i in 0..4 {
                        for j in 0..4 {
                            m[(8 + i, 8 + j)] = r[(i, j)].clone();
                        }
                    }
                    def.push(m);
                    vector.push(Matrix::zeros(3, 3));
                    full.push(r);
                }
            }
        }
        let dim = def.len();
        let gram = Matrix::from_fn(dim, dim, |a, b| def[a].frobenius_dot(&def[b]) / q(norm_c));
        let gram_inv = gram.inverse().expect("gram invertible");
        let mut structure = vec![vec![Vec::new(); dim]; dim];
        for a in 0..dim {
            for b in 0..dim {
                let c = def[a].commutator(&def[b]);
                if c.is_zero() {
                    continue;
                }
                let rhs: Vec<Rational> = def.iter().map(|m| m.frobenius_dot(&c) / q(norm_c)).collect();
                let coords = gram_inv.mul_vec(&rhs);
                let back = def.iter().zip(&coords).fold(Matrix::zeros(c.rows(), c.cols()), |acc, (m, x)| acc.add(&m.scale(x)));
                assert_eq!(back, c, "{} not closed under brackets", group.name());
                structure[a][b] = coords
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(k, x)| (k, x.clone(), x.to_f64()))
                    .collect();
            }
        }
        let _ = n;
        PAlgebra {
            group,
            tag,
            def: def.iter().map(Sparse::from_dense).collect(),
            vector: vector.iter().map(Sparse::from_dense).collect(),
            full: full.iter().map(Sparse::from_dense).collect(),
            gram_f: gram.map(|x| x.to_f64()),
            gram_inv_f: gram_inv.map(|x| x.to_f64()),
            gram,
            gram_inv,
            norm_c,
            structure,
        }
    }

    pub fn dim(&self) -> usize {
        self.def.len()
    }

    fn combine<S: Scalar>(mats: &[Sparse], coords: &[S]) -> Matrix<S> {
        let (r, c) = (mats[0].rows, mats[0].cols);
        let mut m: Matrix<S> = Matrix::zeros(r, c);
        for (sp, x) in mats.iter().zip(coords) {
            if x.is_zero() {
                continue;
            }
            for (i, j, v) in sp.entries::<S>() {
                m[(i, j)] = m[(i, j)].clone() + v * x.clone();
            }
        }
        m
    }

    fn apply<S: Scalar>(mats: &[Sparse], coords: &[S], v: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); mats[0].rows];
        for (sp, x) in mats.iter().zip(coords) {
            if x.is_zero() {
                continue;
            }
            for (i, j, e) in sp.entries::<S>() {
                if v[j].is_zero() {
                    continue;
                }
                out[i] = out[i].clone() + e * x.clone() * v[j].clone();
            }
        }
        out
    }

    pub fn def_rep<S: Scalar>(&self, coords: &[S]) -> Matrix<S> {
        Self::combine(&self.def, coords)
    }

    /// Partial action on `𝔩`, as a matrix on imaginary coordinates.
    pub fn vector_rep<S: Scalar>(&self, coords: &[S]) -> Matrix<S> {
        Self::combine(&self.vector, coords)
    }

    /// Full action on the algebra.
    pub fn full_rep<S: Scalar>(&self, coords: &[S]) -> Matrix<S> {
        Self::combine(&self.full, coords)
    }

    pub fn full_apply<S: Scalar>(&self, coords: &[S], v: &V<S>) -> V<S> {
        V::new(self.tag, Self::apply(&self.full, coords, &v.coords))
    }

    /// Partial action on an imaginary element.
    pub fn vector_apply<S: Scalar>(&self, coords: &[S], xi: &V<S>) -> V<S> {
        let im = Self::apply(&self.vector, coords, &xi.im_coords());
        V::from_im(self.tag, &im)
    }

    /// Partial action on an algebra element (the real axis is fixed).
    pub fn partial_apply<S: Scalar>(&self, coords: &[S], a: &V<S>) -> V<S> {
        self.vector_apply(coords, &a.im())
    }

    /// Coordinates of the `𝔭`-bracket.
    pub fn bracket<S: Scalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim()];
        for (a, xa) in x.iter().enumerate() {
            if xa.is_zero() {
                continue;
            }
            for (b, yb) in y.iter().enumerate() {
                if yb.is_zero() || self.structure[a][b].is_empty() {
                    continue;
                }
                let w = xa.clone() * yb.clone();
                for (k, cq, cf) in &self.structure[a][b] {
                    let c = if S::EXACT { rational_to::<S>(cq) } else { S::from_f64(*cf) };
                    out[*k] = out[*k].clone() + c * w.clone();
                }
            }
        }
        out
    }

    /// `metric_p` pairing.
    pub fn metric<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let g = self.gram_s::<S>();
        let gy = g.mul_vec(y);
        x.iter().zip(gy).fold(S::zero(), |a, (u, v)| a + u.clone() * v)
    }

    pub fn gram_s<S: Scalar>(&self) -> Matrix<S> {
        if S::EXACT {
            self.gram.map(rational_to::<S>)
        } else {
            self.gram_f.map(|x| S::from_f64(*x))
        }
    }

    pub fn gram_inv_s<S: Scalar>(&self) -> Matrix<S> {
        if S::EXACT {
            self.gram_inv.map(rational_to::<S>)
        } else {
            self.gram_inv_f.map(|x| S::from_f64(*x))
        }
    }

    /// Coordinates of a defining-representation matrix lying in `𝔭`.
    pub fn coords_of_def<S: Scalar>(&self, m: &Matrix<S>) -> Vec<S> {
        let c = S::from_i64(self.norm_c);
        let rhs: Vec<S> = self
            .def
            .iter()
            .map(|sp| {
                sp.entries::<S>().into_iter().fold(S::zero(), |a, (i, j, v)| a + v * m[(i, j)].clone()) / c.clone()
            })
            .collect();
        self.gram_inv_s::<S>().mul_vec(&rhs)
    }

    /// Orthonormal basis for `metric_p`, as coordinate vectors (floats).
    pub fn orthonormal_basis(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out: Vec<Vec<f64>> = Vec::new();
        for k in 0..n {
            let mut v: Vec<f64> = (0..n).map(|i| (i == k) as i64 as f64).collect();
            for u in &out {
                let d = self.metric(&v, u);
                for (a, b) in v.iter_mut().zip(u) {
                    *a -= d * b;
                }
            }
            let nn = self.metric(&v, &v).sqrt();
            out.push(v.iter().map(|x| x / nn).collect());
        }
        out
    }

    pub fn element<S: Scalar>(&self, coords: Vec<S>) -> PLieElement<S> {
        assert_eq!(coords.len(), self.dim());
        PLieElement { group: self.group, coords }
    }

    pub fn basis<S: Scalar>(&self, k: usize) -> PLieElement<S> {
        self.element((0..self.dim()).map(|i| if i == k { S::one() } else { S::zero() }).collect())
    }

    /// Group element `exp(γ)` in all three representations.
    pub fn exp<S: Scalar>(&self, coords: &[S]) -> Result<PGroupElement<S>> {
        Ok(PGroupElement {
            group: self.group,
            def: mat_exp(&self.def_rep(coords))?,
            vector: mat_exp(&self.vector_rep(coords))?,
            full: mat_exp(&self.full_rep(coords))?,
        })
    }
}

/// Element of `𝔭` as coordinates on the fixed basis of its realization.
#[derive(Clone, Debug, PartialEq)]
pub struct PLieElement<S> {
    pub group: PGroup,
    pub coords: Vec<S>,
}

impl<S: Scalar> PLieElement<S> {
    pub fn algebra(&self) -> &'static PAlgebra {
        self.group.algebra()
    }

    pub fn vector_rep(&self) -> Matrix<S> {
        self.algebra().vector_rep(&self.coords)
    }

    pub fn full_rep(&self) -> Matrix<S> {
        self.algebra().full_rep(&self.coords)
    }

    pub fn def_rep(&self) -> Matrix<S> {
        self.algebra().def_rep(&self.coords)
    }

    pub fn bracket(&self, o: &Self) -> Self {
        PLieElement { group: self.group, coords: self.algebra().bracket(&self.coords, &o.coords) }
    }
}

/// Element of the pseudoautomorphism group in all three representations.
#[derive(Clone, Debug, PartialEq)]
pub struct PGroupElement<S> {
    pub group: PGroup,
    pub def: Matrix<S>,
    pub vector: Matrix<S>,
    pub full: Matrix<S>,
}

impl<S: Scalar> PGroupElement<S> {
    /// Full action `h(p)`.
    pub fn act(&self, p: &V<S>) -> V<S> {
        V::new(p.tag, self.full.mul_vec(&p.coords))
    }

    /// Partial action `h'(ξ)` on an imaginary element.
    pub fn act_partial(&self, xi: &V<S>) -> V<S> {
        V::from_im(xi.tag, &self.vector.mul_vec(&xi.im_coords()))
    }

    pub fn pair(&self) -> PseudoPair<S> {
        let tag = self.group.tag();
        PseudoPair { alpha: embed_im_id(&self.vector), companion: self.act(&V::one(tag)) }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(PGroupElement {
            group: self.group,
            def: self.def.inverse()?,
            vector: self.vector.inverse()?,
            full: self.full.inverse()?,
        })
    }
}

/// Embed a matrix on `𝔩` into the algebra with `1` on the real axis.
pub fn embed_im_id<S: Scalar>(m: &Matrix<S>) -> Matrix<S> {
    let mut e = embed_im(m);
    e[(0, 0)] = S::one();
    e
}

/// Pseudoautomorphism pair `(α, A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoPair<S> {
    pub alpha: Matrix<S>,
    pub companion: V<S>,
}

impl<S: Scalar> PseudoPair<S> {
    pub fn identity(tag: AlgebraTag) -> Self {
        PseudoPair { alpha: Matrix::identity(tag.dim()), companion: V::one(tag) }
    }

    pub fn alpha_of(&self, p: &V<S>) -> V<S> {
        V::new(p.tag, self.alpha.mul_vec(&p.coords))
    }

    /// Full action `h(p) = α(p) A`.
    pub fn act(&self, ctx: &LoopContext, p: &V<S>) -> V<S> {
        ctx.mul(&self.alpha_of(p), &self.companion)
    }

    /// Max residual of `α(e_a)(α(e_b) A) - α(e_a e_b) A` over basis pairs.
    pub fn pair_residual(&self, ctx: &LoopContext) -> f64 {
        let n = ctx.tag.dim();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let ea = V::basis(ctx.tag, a);
                let eb = V::basis(ctx.tag, b);
                let lhs = ctx.mul(&self.alpha_of(&ea), &ctx.mul(&self.alpha_of(&eb), &self.companion));
                let rhs = ctx.mul(&self.alpha_of(&ctx.mul(&ea, &eb)), &self.companion);
                worst = worst.max((lhs - rhs).max_abs());
            }
        }
        worst
    }

    pub fn validate(&self, ctx: &LoopContext, tol: f64) -> Result<()> {
        let r = self.pair_residual(ctx);
        if r <= tol {
            Ok(())
        } else {
            Err(Error::InvalidPair(format!("residual {r:e}")))
        }
    }
}

/// `(α₁,A₁)(α₂,A₂) = (α₁∘α₂, α₁(A₂)A₁)`.
pub fn pair_compose<S: Scalar>(ctx: &LoopContext, h1: &PseudoPair<S>, h2: &PseudoPair<S>) -> PseudoPair<S> {
    PseudoPair { alpha: h1.alpha.mul(&h2.alpha), companion: ctx.mul(&h1.alpha_of(&h2.companion), &h1.companion) }
}

/// `(α,A)⁻¹ = (α⁻¹, α⁻¹(A^λ))` with `A^λ = 1/A`.
pub fn pair_inverse<S: Scalar>(ctx: &LoopContext, h: &PseudoPair<S>) -> Result<PseudoPair<S>> {
    let ai = h.alpha.inverse()?;
    let al = ctx.rdiv(&V::one(ctx.tag), &h.companion)?;
    Ok(PseudoPair { companion: V::new(ctx.tag, ai.mul_vec(&al.coords)), alpha: ai })
}

/// Linear map `A -> α(e_a)(α(e_b)A) - α(e_a e_b)A`, stacked over basis pairs.
pub fn companion_system<S: Scalar>(ctx: &LoopContext, alpha: &Matrix<S>) -> Matrix<S> {
    let n = ctx.tag.dim();
    let img = |p: &V<S>| V::new(ctx.tag, alpha.mul_vec(&p.coords));
    let mut blocks = Vec::with_capacity(n * n);
    for a in 0..n {
        let ea = V::<S>::basis(ctx.tag, a);
        let la = ctx.table.left_matrix(&img(&ea).coords);
        for b in 0..n {
            let eb = V::<S>::basis(ctx.tag, b);
            let lb = ctx.table.left_matrix(&img(&eb).coords);
            let lab = ctx.table.left_matrix(&img(&ctx.mul(&ea, &eb)).coords);
            blocks.push(la.mul(&lb).sub(&lab));
        }
    }
    Matrix::vstack(&blocks)
}

/// Basis of the companion space of `α` (empty when `α` is not a right pseudoautomorphism).
pub fn companions_of<S: Scalar>(ctx: &LoopContext, alpha: &Matrix<S>) -> Vec<V<S>> {
    nullspace(&companion_system(ctx, alpha), 1e-10).into_iter().map(|v| V::new(ctx.tag, v)).collect()
}

/// Linear system for the full representation of a vector-representation element.
///
/// Rows encode `F(uv) - u F(v) = γ(u) v` for imaginary units `u` and all basis `v`;
/// when `antisym` is set, `F + F^T = 0` rows are appended.
pub fn spin_lift_system<S: Scalar>(gamma: &Matrix<S>, antisym: bool) -> (Matrix<S>, Vec<S>) {
    let tag = AlgebraTag::O;
    let n = tag.dim();
    let t = MulTable::standard(tag);
    let g8 = embed_im(gamma);
    let mut rows: Vec<Vec<S>> = Vec::new();
    let mut rhs: Vec<S> = Vec::new();
    for u in 1..n {
        let eu = V::<S>::basis(tag, u);
        let lu = t.left_matrix(&eu.coords);
        let gu = g8.mul_vec(&eu.coords);
        for v in 0..n {
            let ev = V::<S>::basis(tag, v);
            let uv = t.mul(&eu.coords, &ev.coords);
            let target = t.mul(&gu, &ev.coords);
            // unknown F[i][j] at index i*n + j
            for i in 0..n {
                let mut row = vec![S::zero(); n * n];
                for (j, c) in uv.iter().enumerate() {
                    if !c.is_zero() {
                        row[i * n + j] = row[i * n + j].clone() + c.clone();
                    }
                }
                // - (u F(v))_i = - sum_k lu[i][k] F[k][v]
                for k in 0..n {
                    if !lu[(i, k)].is_zero() {
                        row[k * n + v] = row[k * n + v].clone() - lu[(i, k)].clone();
                    }
                }
                rows.push(row);
                rhs.push(target[i].clone());
            }
        }
    }
    if antisym {
        for i in 0..n {
            for j in i..n {
                let mut row = vec![S::zero(); n * n];
                row[i * n + j] = S::one();
                row[j * n + i] = row[j * n + i].clone() + S::one();
                rows.push(row);
                rhs.push(S::zero());
            }
        }
    }
    let m = Matrix::from_fn(rows.len(), n * n, |i, j| rows[i][j].clone());
    (m, rhs)
}

/// Full (spin) representation of an element of `so(7)` given on `Im 𝕆`.
pub fn spin_lift<S: Scalar>(gamma: &Matrix<S>) -> Result<Matrix<S>> {
    if gamma.rows() != 7 || gamma.cols() != 7 {
        return Err(Error::Dimension("spin_lift expects a 7x7 matrix".into()));
    }
    let (a, b) = spin_lift_system(gamma, true);
    let mut aug = Matrix::zeros(a.rows(), a.cols() + 1);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            aug[(i, j)] = a[(i, j)].clone();
        }
        aug[(i, a.cols())] = b[i].clone();
    }
    let (r, pivots) = aug.rref(1e-12);
    if pivots.contains(&a.cols()) {
        return Err(Error::InvalidLieElement("spin lift system inconsistent".into()));
    }
    if pivots.len() != a.cols() {
        return Err(Error::Consistency("spin lift not unique".into()));
    }
    let mut f = Matrix::zeros(8, 8);
    for (row, &p) in pivots.iter().enumerate() {
        f[(p / 8, p % 8)] = r[(row, a.cols())].clone();
    }
    Ok(f)
}

/// Max residual of `full(uv) = vector(u) v + u full(v)` over basis pairs.
pub fn compatibility_residual<S: Scalar>(alg: &PAlgebra, coords: &[S]) -> f64 {
    let tag = alg.tag;
    let ctx = LoopContext::new(tag);
    let mut worst = 0.0f64;
    for u in 1..tag.dim() {
        for v in 0..tag.dim() {
            let eu = V::<S>::basis(tag, u);
            let ev = V::<S>::basis(tag, v);
            let lhs = alg.full_apply(coords, &ctx.mul(&eu, &ev));
            let rhs = ctx.mul(&alg.vector_apply(coords, &eu), &ev) + ctx.mul(&eu, &alg.full_apply(coords, &ev));
            worst = worst.max((lhs - rhs).max_abs());
        }
    }
    worst
}

/// `β(p ∘_r q) = β(p) ∘_{h(r)} β(q)` and `h(A)/r = h_r(A/r)` residuals.
pub fn pseudo_hom_check<S: Scalar>(
    ctx: &LoopContext,
    h: &PseudoPair<S>,
    r: &V<S>,
    p: &V<S>,
    q: &V<S>,
    a: &V<S>,
) -> Result<(f64, f64)> {
    let beta = |x: &V<S>| h.alpha_of(x);
    let hr = h.act(ctx, r);
    let lhs = beta(&ctx.mod_product(r, p, q)?);
    let rhs = ctx.mod_product(&hr, &beta(p), &beta(q))?;
    let hom = (lhs - rhs).max_abs();
    // h_r = (β, h(r)/r) acting in (L, ∘_r)
    let c = ctx.rdiv(&hr, r)?;
    let g_lhs = ctx.rdiv(&h.act(ctx, a), r)?;
    let g_rhs = ctx.mod_product(r, &beta(&ctx.rdiv(a, r)?), &c)?;
    Ok((hom, (g_lhs - g_rhs).max_abs()))
}

/// `h(sC) = h(s) h''(C)` with `h''(C) = A \ h(C)`, for `C` in the right nucleus.
pub fn nuclear_action_residual<S: Scalar>(ctx: &LoopContext, h: &PseudoPair<S>, s: &V<S>, c: &V<S>) -> Result<f64> {
    let hc = ctx.ldiv(&h.companion, &h.act(ctx, c))?;
    let lhs = h.act(ctx, &ctx.mul(s, c));
    let rhs = ctx.mul(&h.act(ctx, s), &hc);
    Ok((lhs - rhs).max_abs())
}

/// Infinitesimal action of `γ` on `A` by the partial action and by `(R_A)_* γ̂^{(A)} - (L_A)_* γ̂^{(1)}`.
pub fn infinitesimal_action_on_loop<S: Scalar>(
    ctx: &LoopContext,
    gamma: &PLieElement<S>,
    a: &V<S>,
) -> Result<(V<S>, V<S>)> {
    let alg = gamma.algebra();
    let direct = alg.partial_apply(&gamma.coords, a);
    let hat_a = ctx.rdiv(&alg.full_apply(&gamma.coords, a), a)?;
    let hat_1 = alg.full_apply(&gamma.coords, &V::one(ctx.tag));
    let formula = ctx.mul(&hat_a, a) - ctx.mul(a, &hat_1);
    Ok((direct, formula))
}

/// Infinitesimal action of `γ` on `ξ ∈ 𝔩` by the partial action and by `dγ̂|₁(ξ) + [γ̂^{(1)}, ξ]`.
pub fn infinitesimal_action_on_tangent<S: Scalar>(
    ctx: &LoopContext,
    gamma: &PLieElement<S>,
    xi: &V<S>,
) -> Result<(V<S>, V<S>)> {
    let alg = gamma.algebra();
    let direct = alg.vector_apply(&gamma.coords, xi);
    let hat_1 = alg.full_apply(&gamma.coords, &V::one(ctx.tag));
    // derivative of p -> γ̂^{(p)} = full(γ)p / p at p = 1 along ξ
    let d_hat = alg.full_apply(&gamma.coords, xi) - ctx.mul(&hat_1, xi);
    let formula = (d_hat + ctx.mul(&hat_1, xi) - ctx.mul(xi, &hat_1)).im();
    Ok((direct, formula))
}

/// Exact pair-law check on a sample of pairs.
pub fn group_law_check<S: Scalar>(ctx: &LoopContext, pairs: &[PseudoPair<S>], tol: f64) -> Result<Check> {
    let mut worst = 0.0f64;
    for w in pairs.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let ab_c = pair_compose(ctx, &pair_compose(ctx, a, b), c);
        let a_bc = pair_compose(ctx, a, &pair_compose(ctx, b, c));
        worst = worst.max(ab_c.alpha.sub(&a_bc.alpha).max_abs());
        worst = worst.max((ab_c.companion - a_bc.companion).max_abs());
        let inv = pair_inverse(ctx, a)?;
        let id = pair_compose(ctx, a, &inv);
        worst = worst.max(id.alpha.sub(&Matrix::identity(ctx.tag.dim())).max_abs());
        worst = worst.max((id.companion - V::one(ctx.tag)).max_abs());
        worst = worst.max(pair_compose(ctx, a, b).pair_residual(ctx));
    }
    Ok(Check::new("pair-group-law", "PsAutprod", pairs.len(), worst, tol))
}

/// Pair `(Ad_q, q^3)` of a Moufang loop.
pub fn adq_pair<S: Scalar>(ctx: &LoopContext, q: &V<S>) -> Result<PseudoPair<S>> {
    let qi = ctx.rdiv(&V::one(ctx.tag), q)?;
    let n = ctx.tag.dim();
    let cols: Vec<Vec<S>> = (0..n)
        .map(|k| ctx.mul(&ctx.mul(q, &V::basis(ctx.tag, k)), &qi).coords)
        .collect();
    Ok(PseudoPair { alpha: Matrix::from_columns(&cols), companion: ctx.mul(q, &ctx.mul(q, q)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampler;

    #[test]
    fn so7_lift_compatible_and_homomorphic() {
        let alg = PGroup::So7.algebra();
        assert_eq!(alg.dim(), 21);
        for k in 0..21 {
            let e: PLieElement<Rational> = alg.basis(k);
            assert_eq!(compatibility_residual(alg, &e.coords), 0.0);
            let f = e.full_rep();
            assert!(f.add(&f.transpose()).is_zero());
        }
        for a in [0usize, 4, 9] {
            for b in [1usize, 13, 20] {
                let x: PLieElement<Rational> = alg.basis(a);
                let y: PLieElement<Rational> = alg.basis(b);
                let lhs = x.bracket(&y).full_rep();
                let rhs = x.full_rep().commutator(&y.full_rep());
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn bare_lift_system_has_scalar_kernel() {
        let g = so7_basis()[3].clone();
        let (a, _) = spin_lift_system(&g, false);
        assert_eq!(nullspace(&a, 0.0).len(), 1);
        assert!(spin_lift(&Matrix::<Rational>::zeros(7, 7)).unwrap().is_zero());
        let mut bad = Matrix::<Rational>::zeros(7, 7);
        bad[(0, 0)] = Rational::from_i64(1);
        assert!(matches!(spin_lift(&bad), Err(Error::InvalidLieElement(_))));
    }

    #[test]
    fn other_instances_compatible() {
        for g in [PGroup::U2, PGroup::Sp2Sp1] {
            let alg = g.algebra();
            for k in 0..alg.dim() {
                let e: PLieElement<Rational> = alg.basis(k);
                assert_eq!(compatibility_residual(alg, &e.coords), 0.0);
                for j in 0..alg.dim() {
                    let o: PLieElement<Rational> = alg.basis(j);
                    assert_eq!(e.bracket(&o).full_rep(), e.full_rep().commutator(&o.full_rep()));
                }
            }
        }
        assert_eq!(PGroup::U2.algebra().dim(), 4);
        assert_eq!(PGroup::Sp2Sp1.algebra().dim(), 13);
    }

    #[test]
    fn spin7_pairs() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let alg = PGroup::So7.algebra();
        let mut s = Sampler::new(8);
        let pairs: Vec<PseudoPair<f64>> = (0..5)
            .map(|_| alg.exp(&s.coords(21, 0.5)).unwrap().pair())
            .collect();
        for p in &pairs {
            assert!(p.pair_residual(&ctx) < 1e-12);
            let c = companions_of(&ctx, &p.alpha);
            assert_eq!(c.len(), 1);
            let cross = c[0].to_f64();
            let par = cross.dot(&p.companion).abs() / (cross.norm2().sqrt() * p.companion.norm2().sqrt());
            assert!((par - 1.0).abs() < 1e-10);
        }
        assert!(group_law_check(&ctx, &pairs, 1e-11).unwrap().passed);
    }

    #[test]
    fn companions_of_identity_is_real_axis() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let c = companions_of(&ctx, &Matrix::<Rational>::identity(8));
        assert_eq!(c.len(), 1);
        assert!(c[0].im().is_zero());
    }

    #[test]
    fn adq_pairs_exact() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let mut s = Sampler::new(10);
        let q = s.rational_unit(AlgebraTag::O);
        let h = adq_pair(&ctx, &q).unwrap();
        assert_eq!(h.pair_residual(&ctx), 0.0);
        let c = companions_of(&ctx, &h.alpha);
        assert_eq!(c.len(), 1);
        let (r, p, qq, a) = (s.rational_value(AlgebraTag::O), s.rational_value(AlgebraTag::O), s.rational_value(AlgebraTag::O), s.rational_value(AlgebraTag::O));
        let (hom, gset) = pseudo_hom_check(&ctx, &h, &r, &p, &qq, &a).unwrap();
        assert_eq!((hom, gset), (0.0, 0.0));
        let one = V::<Rational>::one(AlgebraTag::O);
        let creal = V::real(AlgebraTag::O, Rational::from_ratio(-2, 3));
        assert_eq!(nuclear_action_residual(&ctx, &h, &p, &creal).unwrap(), 0.0);
        let hi = pair_inverse(&ctx, &h).unwrap();
        let id = pair_compose(&ctx, &h, &hi);
        assert_eq!(id.alpha, Matrix::identity(8));
        assert_eq!(id.companion, one);
    }

    #[test]
    fn infinitesimal_actions_agree() {
        let ctx = LoopContext::new(AlgebraTag::O);
        let alg = PGroup::So7.algebra();
        let mut s = Sampler::new(12);
        let g = alg.element(s.coords(21, 1.0));
        let a: V<f64> = s.unit(AlgebraTag::O);
        let (d, f) = infinitesimal_action_on_loop(&ctx, &g, &a).unwrap();
        assert!((d - f).max_abs() < 1e-12);
        let xi: V<f64> = s.float_im(AlgebraTag::O, 1.0);
        let (d, f) = infinitesimal_action_on_tangent(&ctx, &g, &xi).unwrap();
        assert!((d - f).max_abs() < 1e-12);
    }
}
