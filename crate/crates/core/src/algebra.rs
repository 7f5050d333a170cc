//! Linear algebra for the neutral metric `dx1² + dx2² - dx3² - dx4²` and its
//! two three-dimensional restrictions.
//!
//! Storage is plain coordinates; the signature travels with the operation.
//! The one exception is [`Vec3`], which must say whether it lives in
//! `span{e1,e2,e3}` (signature `(+,+,-)`) or `span{e2,e3,e4}` (signature
//! `(+,-,-)`), since both restrictions occur.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Diagonal metric signature with `±1` entries, of length 3 or 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    signs: [i8; 4],
    len: usize,
}

impl Signature {
    /// `(+,+,-,-)`, the neutral metric on 4-space.
    pub const NEUTRAL: Signature = Signature {
        signs: [1, 1, -1, -1],
        len: 4,
    };
    /// `(+,+,-)` on `span{e1,e2,e3}`.
    pub const E31: Signature = Signature {
        signs: [1, 1, -1, 0],
        len: 3,
    };
    /// `(+,-,-)` on `span{e2,e3,e4}`.
    pub const E32: Signature = Signature {
        signs: [1, -1, -1, 0],
        len: 3,
    };
    /// Plain Euclidean 4-space; used where a statement is metric independent.
    pub const EUCLIDEAN4: Signature = Signature {
        signs: [1, 1, 1, 1],
        len: 4,
    };

    pub fn new(signs: &[i8]) -> Result<Self> {
        if !(3..=4).contains(&signs.len()) {
            return Err(GeomError::usage(format!(
                "signature must have 3 or 4 entries, got {}",
                signs.len()
            )));
        }
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(GeomError::usage("signature entries must be +1 or -1"));
        }
        let mut out = [0i8; 4];
        out[..signs.len()].copy_from_slice(signs);
        Ok(Signature {
            signs: out,
            len: signs.len(),
        })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn sign(&self, i: usize) -> f64 {
        f64::from(self.signs[i])
    }
}

/// Anything that exposes a coordinate slice.
pub trait Coords {
    fn coords(&self) -> &[f64];
}

impl<const N: usize> Coords for [f64; N] {
    fn coords(&self) -> &[f64] {
        self
    }
}

impl Coords for [f64] {
    fn coords(&self) -> &[f64] {
        self
    }
}

impl Coords for Vec<f64> {
    fn coords(&self) -> &[f64] {
        self
    }
}

/// `Σ sigᵢ·xᵢ·yᵢ`.
pub fn inner<A, B>(x: &A, y: &B, sig: &Signature) -> Result<f64>
where
    A: Coords + ?Sized,
    B: Coords + ?Sized,
{
    let (xs, ys) = (x.coords(), y.coords());
    if xs.len() != sig.len() || ys.len() != sig.len() {
        return Err(GeomError::usage(format!(
            "dimension mismatch: vectors of length {} and {} against signature of length {}",
            xs.len(),
            ys.len(),
            sig.len()
        )));
    }
    Ok(signed_dot(xs, ys, sig))
}

#[inline]
fn signed_dot(xs: &[f64], ys: &[f64], sig: &Signature) -> f64 {
    xs.iter()
        .zip(ys)
        .enumerate()
        .map(|(i, (a, b))| sig.sign(i) * a * b)
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalCharacter {
    Spacelike,
    Timelike,
    Lightlike,
}

impl fmt::Display for CausalCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CausalCharacter::Spacelike => "spacelike",
            CausalCharacter::Timelike => "timelike",
            CausalCharacter::Lightlike => "lightlike",
        };
        f.write_str(s)
    }
}

/// Classify `v` with an absolute tolerance `eps`.
///
/// `|⟨v,v⟩| ≤ eps` with `‖v‖∞ > eps` is lightlike; a vector with `‖v‖∞ ≤ eps`
/// counts as the zero vector, which is spacelike.
pub fn causal_character<A: Coords + ?Sized>(
    v: &A,
    sig: &Signature,
    eps: f64,
) -> Result<CausalCharacter> {
    let q = inner(v, v, sig)?;
    let sup = v.coords().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(classify(q, sup, eps))
}

fn classify(q: f64, sup: f64, eps: f64) -> CausalCharacter {
    if sup <= eps {
        CausalCharacter::Spacelike
    } else if q.abs() <= eps {
        CausalCharacter::Lightlike
    } else if q > 0.0 {
        CausalCharacter::Spacelike
    } else {
        CausalCharacter::Timelike
    }
}

/// Scale-aware classification: the lightlike band is `1e-9·‖v‖₂²` and only
/// the exact zero vector is treated as zero.
pub fn causal_character_scaled<A: Coords + ?Sized>(
    v: &A,
    sig: &Signature,
) -> Result<CausalCharacter> {
    let q = inner(v, v, sig)?;
    let xs = v.coords();
    if xs.iter().all(|x| *x == 0.0) {
        return Ok(CausalCharacter::Spacelike);
    }
    let scale: f64 = xs.iter().map(|x| x * x).sum();
    let eps = DEFAULT_CAUSAL_EPS * scale;
    Ok(if q.abs() <= eps {
        CausalCharacter::Lightlike
    } else if q > 0.0 {
        CausalCharacter::Spacelike
    } else {
        CausalCharacter::Timelike
    })
}

pub const DEFAULT_CAUSAL_EPS: f64 = 1e-9;

/// Max entrywise distance between the Gram matrix of `frame` and
/// `diag(expected_signs)`.
pub fn orthonormality_deviation<V: Coords>(
    frame: &[V],
    expected_signs: &[i8],
    sig: &Signature,
) -> Result<f64> {
    if frame.len() != expected_signs.len() {
        return Err(GeomError::usage(format!(
            "frame has {} vectors but {} expected signs",
            frame.len(),
            expected_signs.len()
        )));
    }
    let mut worst = 0.0f64;
    for (i, a) in frame.iter().enumerate() {
        for (j, b) in frame.iter().enumerate() {
            let target = if i == j {
                f64::from(expected_signs[i])
            } else {
                0.0
            };
            worst = worst.max((inner(a, b, sig)? - target).abs());
        }
    }
    Ok(worst)
}

/// Indefinite Gram-Schmidt in the given order.
///
/// Each partial vector is normalised by `√|⟨w,w⟩|`; its sign is returned
/// alongside. A partial vector with `|⟨w,w⟩| < tol·max(1, ‖w‖₂²)` aborts with
/// [`GeomError::Degenerate`].
pub fn gram_schmidt<const N: usize>(
    vectors: &[[f64; N]],
    sig: &Signature,
    tol: f64,
) -> Result<Vec<([f64; N], i8)>> {
    if sig.len() != N {
        return Err(GeomError::usage(format!(
            "vectors of length {N} against signature of length {}",
            sig.len()
        )));
    }
    let mut out: Vec<([f64; N], i8)> = Vec::with_capacity(vectors.len());
    for (k, v) in vectors.iter().enumerate() {
        let mut w = *v;
        for (e, s) in &out {
            let c = f64::from(*s) * signed_dot(&w, e, sig);
            for i in 0..N {
                w[i] -= c * e[i];
            }
        }
        let q = signed_dot(&w, &w, sig);
        let euclid: f64 = w.iter().map(|x| x * x).sum();
        if q.abs() < tol * euclid.max(1.0) {
            return Err(GeomError::degenerate(format!(
                "vector {k} is (near) lightlike after projection: <w,w> = {q:e}"
            )));
        }
        let scale = q.abs().sqrt();
        for x in w.iter_mut() {
            *x /= scale;
        }
        out.push((w, if q > 0.0 { 1 } else { -1 }));
    }
    Ok(out)
}

/// Result of [`affine_rank`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineRank {
    pub rank: usize,
    /// First discarded singular value over the largest one (0 if none).
    pub residual: f64,
}

/// Numerical dimension of the affine hull of `points`.
///
/// Uses the Euclidean SVD of the mean-centred point matrix: affine
/// containment does not depend on the metric.
pub fn affine_rank(points: &[Vec4], tol: f64) -> Result<AffineRank> {
    if points.len() < 5 {
        return Err(GeomError::usage(format!(
            "affine_rank needs at least 5 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mut mean = [0.0; 4];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p.0.iter()) {
            *m += x / n;
        }
    }
    let m = DMatrix::from_fn(points.len(), 4, |r, c| points[r].0[c] - mean[c]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv[0];
    if top == 0.0 {
        return Ok(AffineRank {
            rank: 0,
            residual: 0.0,
        });
    }
    let rank = sv.iter().filter(|s| **s > tol * top).count();
    let residual = sv.get(rank).map_or(0.0, |s| s / top);
    Ok(AffineRank { rank, residual })
}

/// A point or vector of 4-space in the standard basis `e1..e4`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec4(pub [f64; 4]);

impl Vec4 {
    pub const ZERO: Vec4 = Vec4([0.0; 4]);

    pub const fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        Vec4([x1, x2, x3, x4])
    }

    /// Standard basis vector `e_{i+1}` (zero based index).
    pub fn basis(i: usize) -> Self {
        let mut x = [0.0; 4];
        x[i] = 1.0;
        Vec4(x)
    }

    /// Neutral inner product `⟨self, other⟩`.
    #[inline]
    pub fn dot(&self, other: &Vec4) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1]
            - self.0[2] * other.0[2]
            - self.0[3] * other.0[3]
    }

    #[inline]
    pub fn euclid_dot(&self, other: &Vec4) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn euclid_norm(&self) -> f64 {
        self.euclid_dot(self).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn causal(&self) -> CausalCharacter {
        causal_character_scaled(self, &Signature::NEUTRAL).expect("length 4")
    }
}

impl Coords for Vec4 {
    fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vec4 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Vec4 {
    type Output = Vec4;
    fn add(self, o: Vec4) -> Vec4 {
        Vec4(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl AddAssign for Vec4 {
    fn add_assign(&mut self, o: Vec4) {
        for i in 0..4 {
            self.0[i] += o.0[i];
        }
    }
}

impl Sub for Vec4 {
    type Output = Vec4;
    fn sub(self, o: Vec4) -> Vec4 {
        Vec4(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl SubAssign for Vec4 {
    fn sub_assign(&mut self, o: Vec4) {
        for i in 0..4 {
            self.0[i] -= o.0[i];
        }
    }
}

impl Neg for Vec4 {
    type Output = Vec4;
    fn neg(self) -> Vec4 {
        Vec4(self.0.map(|x| -x))
    }
}

impl Mul<f64> for Vec4 {
    type Output = Vec4;
    fn mul(self, k: f64) -> Vec4 {
        Vec4(self.0.map(|x| x * k))
    }
}

impl Mul<Vec4> for f64 {
    type Output = Vec4;
    fn mul(self, v: Vec4) -> Vec4 {
        v * self
    }
}

impl Div<f64> for Vec4 {
    type Output = Vec4;
    fn div(self, k: f64) -> Vec4 {
        Vec4(self.0.map(|x| x / k))
    }
}

/// The 3-dimensional subspace a [`Vec3`] lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space3 {
    /// `span{e1,e2,e3}`, signature `(+,+,-)`.
    E31,
    /// `span{e2,e3,e4}`, signature `(+,-,-)`.
    E32,
}

impl Space3 {
    pub fn signature(self) -> Signature {
        match self {
            Space3::E31 => Signature::E31,
            Space3::E32 => Signature::E32,
        }
    }
}

/// Three coordinates tagged with the subspace they belong to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub c: [f64; 3],
    pub space: Space3,
}

impl Vec3 {
    pub const fn new(c: [f64; 3], space: Space3) -> Self {
        Vec3 { c, space }
    }

    pub const fn e31(x: f64, y: f64, z: f64) -> Self {
        Vec3 {
            c: [x, y, z],
            space: Space3::E31,
        }
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        debug_assert_eq!(self.space, other.space, "mixed 3-spaces");
        signed_dot(&self.c, &other.c, &self.space.signature())
    }

    /// Place into 4-space: `E31 → (c, 0)`, `E32 → (0, c)`.
    pub fn embed(&self) -> Vec4 {
        match self.space {
            Space3::E31 => Vec4::new(self.c[0], self.c[1], self.c[2], 0.0),
            Space3::E32 => Vec4::new(0.0, self.c[0], self.c[1], self.c[2]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Vec3 {
        Vec3 {
            c: self.c.map(f),
            space: self.space,
        }
    }

    fn zip(self, o: Vec3, f: impl Fn(f64, f64) -> f64) -> Vec3 {
        debug_assert_eq!(self.space, o.space, "mixed 3-spaces");
        Vec3 {
            c: std::array::from_fn(|i| f(self.c[i], o.c[i])),
            space: self.space,
        }
    }
}

impl Coords for Vec3 {
    fn coords(&self) -> &[f64] {
        &self.c
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        self.zip(o, |a, b| a + b)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        self.zip(o, |a, b| a - b)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self.map(|x| -x)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        self.map(|x| x * k)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}
