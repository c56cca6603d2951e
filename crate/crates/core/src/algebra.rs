//! Cayley–Dickson composition algebras and their structure tensors.
//!
//! Doubling convention: `(a,b)(c,d) = (ac - conj(d) b, d a + b conj(c))`, so
//! for the quaternions `e1 e2 = e3` and `e4` is the octonion doubling unit.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Scalar};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgebraTag {
    R,
    C,
    H,
    O,
}

impl AlgebraTag {
    pub const ALL: [AlgebraTag; 4] = [AlgebraTag::R, AlgebraTag::C, AlgebraTag::H, AlgebraTag::O];

    pub fn level(self) -> u32 {
        match self {
            AlgebraTag::R => 0,
            AlgebraTag::C => 1,
            AlgebraTag::H => 2,
            AlgebraTag::O => 3,
        }
    }

    pub fn dim(self) -> usize {
        1 << self.level()
    }

    /// Dimension of the imaginary part.
    pub fn im_dim(self) -> usize {
        self.dim() - 1
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "R" | "r" => Ok(AlgebraTag::R),
            "C" | "c" => Ok(AlgebraTag::C),
            "H" | "h" => Ok(AlgebraTag::H),
            "O" | "o" => Ok(AlgebraTag::O),
            other => Err(Error::Config(format!("unknown algebra '{other}'"))),
        }
    }
}

impl fmt::Display for AlgebraTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// Reference recursive Cayley–Dickson product on coordinate slices.
pub fn cayley_dickson_mul<S: Scalar>(p: &[S], q: &[S]) -> Vec<S> {
    let n = p.len();
    assert_eq!(n, q.len());
    if n == 1 {
        return vec![p[0].clone() * q[0].clone()];
    }
    let h = n / 2;
    let (a, b) = p.split_at(h);
    let (c, d) = q.split_at(h);
    let conj = |x: &[S]| -> Vec<S> {
        x.iter().enumerate().map(|(i, v)| if i == 0 { v.clone() } else { -v.clone() }).collect()
    };
    let ac = cayley_dickson_mul(a, c);
    let db = cayley_dickson_mul(&conj(d), b);
    let da = cayley_dickson_mul(d, a);
    let bc = cayley_dickson_mul(b, &conj(c));
    let mut out: Vec<S> = ac.into_iter().zip(db).map(|(x, y)| x - y).collect();
    out.extend(da.into_iter().zip(bc).map(|(x, y)| x + y));
    out
}

/// Signed multiplication table on basis units: `e_a e_b = sign * e_c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MulTable {
    dim: usize,
    entries: Vec<(i8, u8)>,
}

impl MulTable {
    fn build(tag: AlgebraTag) -> Self {
        let n = tag.dim();
        let mut entries = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let ea: Vec<i64> = (0..n).map(|i| (i == a) as i64).collect();
                let eb: Vec<i64> = (0..n).map(|i| (i == b) as i64).collect();
                let prod = cd_int(&ea, &eb);
                let c = prod.iter().position(|x| *x != 0).expect("basis product nonzero");
                entries.push((prod[c] as i8, c as u8));
            }
        }
        MulTable { dim: n, entries }
    }

    pub fn standard(tag: AlgebraTag) -> &'static MulTable {
        static TABLES: OnceLock<Vec<MulTable>> = OnceLock::new();
        &TABLES.get_or_init(|| AlgebraTag::ALL.iter().map(|t| MulTable::build(*t)).collect())
            [tag.level() as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, a: usize, b: usize) -> (i8, usize) {
        let (s, c) = self.entries[a * self.dim + b];
        (s, c as usize)
    }

    /// Copy with the sign of `e_a e_b` flipped (mutation fixture).
    pub fn corrupted(&self, a: usize, b: usize) -> Self {
        let mut t = self.clone();
        t.entries[a * self.dim + b].0 *= -1;
        t
    }

    pub fn mul<S: Scalar>(&self, p: &[S], q: &[S]) -> Vec<S> {
        let n = self.dim;
        let mut out = vec![S::zero(); n];
        for (a, pa) in p.iter().enumerate() {
            if pa.is_zero() {
                continue;
            }
            for (b, qb) in q.iter().enumerate() {
                if qb.is_zero() {
                    continue;
                }
                let (s, c) = self.entry(a, b);
                let t = pa.clone() * qb.clone();
                out[c] = if s > 0 { out[c].clone() + t } else { out[c].clone() - t };
            }
        }
        out
    }

    /// Matrix of `x -> p x`.
    pub fn left_matrix<S: Scalar>(&self, p: &[S]) -> Matrix<S> {
        let n = self.dim;
        let mut m: Matrix<S> = Matrix::zeros(n, n);
        for (a, pa) in p.iter().enumerate() {
            if pa.is_zero() {
                continue;
            }
            for b in 0..n {
                let (s, c) = self.entry(a, b);
                let t = if s > 0 { pa.clone() } else { -pa.clone() };
                m[(c, b)] = m[(c, b)].clone() + t;
            }
        }
        m
    }

    /// Matrix of `x -> x q`.
    pub fn right_matrix<S: Scalar>(&self, q: &[S]) -> Matrix<S> {
        let n = self.dim;
        let mut m: Matrix<S> = Matrix::zeros(n, n);
        for (b, qb) in q.iter().enumerate() {
            if qb.is_zero() {
                continue;
            }
            for a in 0..n {
                let (s, c) = self.entry(a, b);
                let t = if s > 0 { qb.clone() } else { -qb.clone() };
                m[(c, a)] = m[(c, a)].clone() + t;
            }
        }
        m
    }
}

fn cd_int(p: &[i64], q: &[i64]) -> Vec<i64> {
    let n = p.len();
    if n == 1 {
        return vec![p[0] * q[0]];
    }
    let h = n / 2;
    let (a, b) = p.split_at(h);
    let (c, d) = q.split_at(h);
    let conj = |x: &[i64]| -> Vec<i64> { x.iter().enumerate().map(|(i, v)| if i == 0 { *v } else { -v }).collect() };
    let ac = cd_int(a, c);
    let db = cd_int(&conj(d), b);
    let da = cd_int(d, a);
    let bc = cd_int(b, &conj(c));
    let mut out: Vec<i64> = ac.iter().zip(&db).map(|(x, y)| x - y).collect();
    out.extend(da.iter().zip(&bc).map(|(x, y)| x + y));
    out
}

/// Element of a composition algebra; `coords[0]` is the real part.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraValue<S> {
    pub tag: AlgebraTag,
    pub coords: Vec<S>,
}

/// Element of the imaginary part, stored as an algebra value with zero real part.
pub type TangentVec<S> = AlgebraValue<S>;

impl<S: Scalar> AlgebraValue<S> {
    pub fn new(tag: AlgebraTag, coords: Vec<S>) -> Self {
        assert_eq!(coords.len(), tag.dim(), "coordinate count for {tag}");
        AlgebraValue { tag, coords }
    }

    pub fn zero(tag: AlgebraTag) -> Self {
        Self::new(tag, vec![S::zero(); tag.dim()])
    }

    pub fn one(tag: AlgebraTag) -> Self {
        Self::basis(tag, 0)
    }

    pub fn real(tag: AlgebraTag, x: S) -> Self {
        let mut v = Self::zero(tag);
        v.coords[0] = x;
        v
    }

    pub fn basis(tag: AlgebraTag, i: usize) -> Self {
        let mut v = Self::zero(tag);
        v.coords[i] = S::one();
        v
    }

    /// Imaginary element from its coordinates on `e_1, ..., e_{n-1}`.
    pub fn from_im(tag: AlgebraTag, im: &[S]) -> Self {
        let mut coords = Vec::with_capacity(tag.dim());
        coords.push(S::zero());
        coords.extend(im.iter().cloned());
        Self::new(tag, coords)
    }

    pub fn re(&self) -> S {
        self.coords[0].clone()
    }

    pub fn im_coords(&self) -> Vec<S> {
        self.coords[1..].to_vec()
    }

    /// Imaginary part.
    pub fn im(&self) -> Self {
        let mut v = self.clone();
        v.coords[0] = S::zero();
        v
    }

    pub fn conj(&self) -> Self {
        let mut v = -self.clone();
        v.coords[0] = self.coords[0].clone();
        v
    }

    pub fn norm2(&self) -> S {
        self.dot(self)
    }

    pub fn dot(&self, o: &Self) -> S {
        self.coords.iter().zip(&o.coords).fold(S::zero(), |a, (x, y)| a + x.clone() * y.clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        Self::new(self.tag, self.coords.iter().map(|x| x.clone() * c.clone()).collect())
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        if self.tag != o.tag {
            return Err(Error::TagMismatch(format!("{} * {}", self.tag, o.tag)));
        }
        Ok(Self::new(self.tag, MulTable::standard(self.tag).mul(&self.coords, &o.coords)))
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.try_mul(o).expect("same algebra")
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.norm2();
        if n.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        Ok(self.conj().scale(&(S::one() / n)))
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o) - o.mul(self)
    }

    /// `(pq)r - p(qr)`.
    pub fn associator(&self, q: &Self, r: &Self) -> Self {
        self.mul(q).mul(r) - self.mul(&q.mul(r))
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|x| x.is_zero())
    }

    /// Max-abs coordinate, as `f64`.
    pub fn max_abs(&self) -> f64 {
        self.coords.iter().map(|x| x.magnitude()).fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> AlgebraValue<f64> {
        AlgebraValue::new(self.tag, self.coords.iter().map(|x| x.to_f64()).collect())
    }

    pub fn cast<T: Scalar>(&self) -> AlgebraValue<T> {
        AlgebraValue::new(self.tag, self.coords.iter().map(|x| T::from_f64(x.to_f64())).collect())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> AlgebraValue<T> {
        AlgebraValue::new(self.tag, self.coords.iter().map(f).collect())
    }
}

impl<S: Scalar> std::ops::Add for AlgebraValue<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        assert_eq!(self.tag, o.tag);
        AlgebraValue::new(self.tag, self.coords.into_iter().zip(o.coords).map(|(a, b)| a + b).collect())
    }
}

impl<S: Scalar> std::ops::Sub for AlgebraValue<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        assert_eq!(self.tag, o.tag);
        AlgebraValue::new(self.tag, self.coords.into_iter().zip(o.coords).map(|(a, b)| a - b).collect())
    }
}

impl<S: Scalar> std::ops::Neg for AlgebraValue<S> {
    type Output = Self;
    fn neg(self) -> Self {
        AlgebraValue::new(self.tag, self.coords.into_iter().map(|a| -a).collect())
    }
}

/// Multiplication table with `φ` and `ψ` on the imaginary units.
///
/// Indices of `phi`, `psi` and `cross` run over `0..im_dim`, standing for `e_1, e_2, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureTensors {
    pub tag: AlgebraTag,
    pub table: MulTable,
    /// `phi[a][b][c] = <e_a e_b, e_c>`.
    pub phi: Vec<Vec<Vec<i64>>>,
    /// `psi[a][b][c][d] = 1/2 <(e_a e_b) e_c - e_a (e_b e_c), e_d>`.
    pub psi: Vec<Vec<Vec<Vec<i64>>>>,
    /// `cross[a][b] = Im(e_a e_b)` as imaginary coordinates.
    pub cross: Vec<Vec<Vec<i64>>>,
}

impl StructureTensors {
    pub fn phi_at(&self, a: usize, b: usize, c: usize) -> i64 {
        self.phi[a][b][c]
    }

    /// Number of unordered triples `a<b<c` with nonzero `φ`.
    pub fn phi_support(&self) -> usize {
        let n = self.tag.im_dim();
        let mut count = 0;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if self.phi[a][b][c] != 0 {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    pub fn phi_is_antisymmetric(&self) -> bool {
        let n = self.tag.im_dim();
        (0..n).all(|a| {
            (0..n).all(|b| {
                (0..n).all(|c| {
                    let v = self.phi[a][b][c];
                    v == -self.phi[b][a][c] && v == -self.phi[a][c][b] && v == self.phi[b][c][a]
                })
            })
        })
    }

    pub fn psi_is_antisymmetric(&self) -> bool {
        let n = self.tag.im_dim();
        let p = &self.psi;
        (0..n).all(|a| {
            (0..n).all(|b| {
                (0..n).all(|c| {
                    (0..n).all(|d| {
                        let v = p[a][b][c][d];
                        v == -p[b][a][c][d] && v == -p[a][c][b][d] && v == -p[a][b][d][c]
                    })
                })
            })
        })
    }

    /// `[X,Y]^a = 2 φ_{bca} X^b Y^c` on imaginary coordinates.
    pub fn phi_bracket<S: Scalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let n = self.tag.im_dim();
        let mut out = vec![S::zero(); n];
        for b in 0..n {
            for c in 0..n {
                let xy = x[b].clone() * y[c].clone();
                if xy.is_zero() {
                    continue;
                }
                for (a, o) in out.iter_mut().enumerate() {
                    let f = self.phi[b][c][a];
                    if f != 0 {
                        *o = o.clone() + S::from_i64(2 * f) * xy.clone();
                    }
                }
            }
        }
        out
    }

    /// `[X,Y,Z]^a = 2 ψ_{abcd} X^b Y^c Z^d` on imaginary coordinates.
    pub fn psi_associator<S: Scalar>(&self, x: &[S], y: &[S], z: &[S]) -> Vec<S> {
        let n = self.tag.im_dim();
        let mut out = vec![S::zero(); n];
        for b in 0..n {
            for c in 0..n {
                let xy = x[b].clone() * y[c].clone();
                if xy.is_zero() {
                    continue;
                }
                for d in 0..n {
                    let t = xy.clone() * z[d].clone();
                    if t.is_zero() {
                        continue;
                    }
                    for (a, o) in out.iter_mut().enumerate() {
                        let f = self.psi[a][b][c][d];
                        if f != 0 {
                            *o = o.clone() + S::from_i64(2 * f) * t.clone();
                        }
                    }
                }
            }
        }
        out
    }
}

/// Build `φ`, `ψ` and the cross table from a multiplication table.
pub fn build_tensors_from(tag: AlgebraTag, table: &MulTable) -> StructureTensors {
    let n = tag.im_dim();
    let dim = tag.dim();
    let unit = |i: usize| -> Vec<i64> { (0..dim).map(|k| (k == i + 1) as i64).collect() };
    let prod = |x: &[i64], y: &[i64]| -> Vec<i64> {
        let mut out = vec![0i64; dim];
        for (a, xa) in x.iter().enumerate() {
            for (b, yb) in y.iter().enumerate() {
                let (s, c) = table.entry(a, b);
                out[c] += s as i64 * xa * yb;
            }
        }
        out
    };
    let mut phi = vec![vec![vec![0i64; n]; n]; n];
    let mut cross = vec![vec![vec![0i64; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            let ab = prod(&unit(a), &unit(b));
            for c in 0..n {
                phi[a][b][c] = ab[c + 1];
                cross[a][b][c] = ab[c + 1];
            }
        }
    }
    let mut psi = vec![vec![vec![vec![0i64; n]; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            let ab = prod(&unit(a), &unit(b));
            for c in 0..n {
                let lhs = prod(&ab, &unit(c));
                let rhs = prod(&unit(a), &prod(&unit(b), &unit(c)));
                for d in 0..n {
                    let v = lhs[d + 1] - rhs[d + 1];
                    debug_assert!(v % 2 == 0);
                    psi[a][b][c][d] = v / 2;
                }
            }
        }
    }
    StructureTensors { tag, table: table.clone(), phi, psi, cross }
}

pub fn build_tensors(tag: AlgebraTag) -> StructureTensors {
    build_tensors_from(tag, MulTable::standard(tag))
}

/// Cached structure tensors of the standard tables.
pub fn tensors(tag: AlgebraTag) -> &'static StructureTensors {
    static T: OnceLock<Vec<StructureTensors>> = OnceLock::new();
    &T.get_or_init(|| AlgebraTag::ALL.iter().map(|t| build_tensors(*t)).collect())[tag.level() as usize]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rational;

    type Q = AlgebraValue<Rational>;

    fn e(i: usize) -> Q {
        Q::basis(AlgebraTag::O, i)
    }

    #[test]
    fn doubling_convention() {
        assert_eq!(e(1).mul(&e(2)), e(3));
        assert_eq!(e(1).commutator(&e(2)), e(3).scale(&Rational::from_i64(2)));
        assert_eq!(e(1).mul(&e(1)), -Q::one(AlgebraTag::O));
        assert!(!e(1).associator(&e(2), &e(4)).is_zero());
    }

    #[test]
    fn inverses_of_units() {
        assert_eq!(Q::one(AlgebraTag::O).inverse().unwrap(), Q::one(AlgebraTag::O));
        assert_eq!(e(5).inverse().unwrap(), -e(5));
        assert_eq!(Q::zero(AlgebraTag::O).inverse(), Err(Error::ZeroDivisor));
    }

    #[test]
    fn quaternions_associate() {
        let t = MulTable::standard(AlgebraTag::H);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let x = Q::basis(AlgebraTag::H, a);
                    let y = Q::basis(AlgebraTag::H, b);
                    let z = Q::basis(AlgebraTag::H, c);
                    assert!(x.associator(&y, &z).is_zero());
                }
            }
        }
        assert_eq!(t.dim(), 4);
    }

    #[test]
    fn octonion_tensors() {
        let t = tensors(AlgebraTag::O);
        assert_eq!(t.phi_support(), 7);
        assert!(t.phi_is_antisymmetric());
        assert!(t.psi_is_antisymmetric());
        let h = tensors(AlgebraTag::H);
        assert_eq!(h.phi_support(), 1);
        assert!(h.psi.iter().flatten().flatten().flatten().all(|x| *x == 0));
    }
}
