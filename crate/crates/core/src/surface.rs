//! Meridian surfaces `z(u,v) = f(u) l(v) + g(u) e₄` and their images under
//! the anti-isometry `T`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Vec3, Vec4};
use crate::curves::{chart_coords, chart4, ChartKind, CurveFamily, FrameField};
use crate::error::{GeomError, Result};
use crate::profiles::{MeridianProfile, ProfileFamily, ProfilePoint, RADICAND_MARGIN, F_MARGIN};

/// Anything that maps `(u, v)` into `E⁴₂`.
pub trait Immersion: Sync {
    fn eval(&self, u: f64, v: f64) -> Result<Vec4>;
}

/// Wraps a closure as an [`Immersion`].
pub struct FnImmersion<F>(pub F);

impl<F> Immersion for FnImmersion<F>
where
    F: Fn(f64, f64) -> Result<Vec4> + Sync,
{
    fn eval(&self, u: f64, v: f64) -> Result<Vec4> {
        (self.0)(u, v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceFamily {
    /// Meridian surface on `M^I` over a spacelike curve on `S²₁`.
    Ma,
    /// Meridian surface on `M^I` over a timelike curve on `S²₁`.
    Mb,
    /// Meridian surface on `M^II` over a spacelike curve on `H²₁`.
    Mpp,
}

impl SurfaceFamily {
    /// `(⟨X,X⟩, ⟨Y,Y⟩, ⟨n₁,n₁⟩, ⟨n₂,n₂⟩)`.
    pub fn frame_signs(self) -> [i8; 4] {
        match self {
            SurfaceFamily::Ma => [-1, 1, -1, 1],
            SurfaceFamily::Mb => [1, -1, 1, -1],
            SurfaceFamily::Mpp => [-1, 1, 1, -1],
        }
    }

    pub fn curve_family(self) -> CurveFamily {
        match self {
            SurfaceFamily::Ma => CurveFamily::SpacelikeOnS21,
            SurfaceFamily::Mb => CurveFamily::TimelikeOnS21,
            SurfaceFamily::Mpp => CurveFamily::SpacelikeOnH21,
        }
    }

    pub fn profile_family(self) -> ProfileFamily {
        match self {
            SurfaceFamily::Ma => ProfileFamily::Ma,
            SurfaceFamily::Mb => ProfileFamily::Mb,
            SurfaceFamily::Mpp => ProfileFamily::Mpp,
        }
    }

    pub fn from_profile_family(p: ProfileFamily) -> Self {
        match p {
            ProfileFamily::Ma => SurfaceFamily::Ma,
            ProfileFamily::Mb => SurfaceFamily::Mb,
            ProfileFamily::Mpp => SurfaceFamily::Mpp,
        }
    }

    /// Meridian curvature `κ_m` from `f''` and `g'`: `f''/g'` for `Ma` and
    /// `Mb`, `-f''/g'` for `Mpp`.
    pub fn meridian_curvature(self, ddf: f64, dg: f64) -> f64 {
        match self {
            SurfaceFamily::Ma | SurfaceFamily::Mb => ddf / dg,
            SurfaceFamily::Mpp => -ddf / dg,
        }
    }
}

impl fmt::Display for SurfaceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.profile_family().name())
    }
}

impl FromStr for SurfaceFamily {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        s.parse::<ProfileFamily>().map(SurfaceFamily::from_profile_family)
    }
}

/// `f l + g e₄` with `l` placed in `span{e₁,e₂,e₃}`.
pub fn immersion_point(f: f64, g: f64, l: &Vec3) -> Vec4 {
    f * l.embed() + g * Vec4::basis(3)
}

/// Meridian surface built from a curve frame field and a profile.
#[derive(Clone, Debug)]
pub struct MeridianSurface {
    family: SurfaceFamily,
    curve: FrameField,
    profile: MeridianProfile,
}

/// Analytic frame `(X, Y, n₁, n₂)` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFrame {
    pub x: Vec4,
    pub y: Vec4,
    pub n1: Vec4,
    pub n2: Vec4,
}

impl SurfaceFrame {
    pub fn as_array(&self) -> [Vec4; 4] {
        [self.x, self.y, self.n1, self.n2]
    }
}

/// `H = h1 n₁ + h2 n₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCurvatureDecomp {
    pub h1: f64,
    pub h2: f64,
    #[serde(rename = "H")]
    pub h: Vec4,
    pub norm2: f64,
}

pub fn assemble(
    family: SurfaceFamily,
    curve: FrameField,
    profile: MeridianProfile,
) -> Result<MeridianSurface> {
    if curve.family() != family.curve_family() {
        return Err(GeomError::usage(format!(
            "surface {family} needs a {:?} curve, got {:?}",
            family.curve_family(),
            curve.family()
        )));
    }
    if profile.family() != family.profile_family() {
        return Err(GeomError::usage(format!(
            "surface {family} needs a {} profile, got {}",
            family.profile_family(),
            profile.family()
        )));
    }
    if curve.samples().iter().any(|s| !curve.kappa(s.v).is_finite()) {
        return Err(GeomError::usage("curve curvature has non-finite samples"));
    }
    Ok(MeridianSurface {
        family,
        curve,
        profile,
    })
}

impl MeridianSurface {
    pub fn family(&self) -> SurfaceFamily {
        self.family
    }

    pub fn curve(&self) -> &FrameField {
        &self.curve
    }

    pub fn profile(&self) -> &MeridianProfile {
        &self.profile
    }

    pub fn u_span(&self) -> (f64, f64) {
        self.profile.span()
    }

    pub fn v_span(&self) -> (f64, f64) {
        self.curve.span()
    }

    pub fn eval_immersion(&self, u: f64, v: f64) -> Result<Vec4> {
        let p = self.profile.eval(u)?;
        let c = self.curve.eval(v)?;
        let z = immersion_point(p.f, p.g, &c.l);
        if !z.is_finite() {
            return Err(GeomError::domain(format!("non-finite immersion at ({u}, {v})")));
        }
        Ok(z)
    }

    fn profile_point(&self, u: f64) -> Result<ProfilePoint> {
        let p = self.profile.eval(u)?;
        if !(p.f > F_MARGIN) {
            return Err(GeomError::domain(format!(
                "degenerate profile point f = {} at u = {u}",
                p.f
            )));
        }
        Ok(p)
    }

    pub fn analytic_frames(&self, u: f64, v: f64) -> Result<SurfaceFrame> {
        let p = self.profile_point(u)?;
        let c = self.curve.eval(v)?;
        let l = c.l.embed();
        let e4 = Vec4::basis(3);
        let n2 = match self.family {
            SurfaceFamily::Ma | SurfaceFamily::Mb => p.dg * l + p.df * e4,
            SurfaceFamily::Mpp => -p.dg * l + p.df * e4,
        };
        Ok(SurfaceFrame {
            x: p.df * l + p.dg * e4,
            y: c.t.embed(),
            n1: c.n.embed(),
            n2,
        })
    }

    /// `κ_m` at `u`, guarded against a vanishing `g'`.
    pub fn meridian_curvature(&self, u: f64) -> Result<f64> {
        let p = self.profile_point(u)?;
        self.kappa_m(&p, u)
    }

    fn kappa_m(&self, p: &ProfilePoint, u: f64) -> Result<f64> {
        let q = self.family.profile_family().g_prime_sq(p.df);
        if q.abs() <= RADICAND_MARGIN {
            return Err(GeomError::domain(format!(
                "singular g' radicand {q:e} at u = {u}"
            )));
        }
        Ok(self.family.meridian_curvature(p.ddf, p.dg))
    }

    /// Mean curvature vector from the closed-form coefficients.
    ///
    /// `h1 = ∓κ/(2f)` and `h2 = ∓(f κ_m + g')/(2f)` with the family signs;
    /// on the `g' = +√(…)` branch `f κ_m + g' = (f f'' + f'² ± 1)/√(…)`,
    /// which is the familiar closed form.
    pub fn analytic_h(&self, u: f64, v: f64) -> Result<MeanCurvatureDecomp> {
        let p = self.profile_point(u)?;
        let km = self.kappa_m(&p, u)?;
        let kappa = self.curve.kappa(v);
        let frame = self.analytic_frames(u, v)?;
        let f = p.f;
        let (h1, h2) = match self.family {
            SurfaceFamily::Ma => (-kappa / (2.0 * f), -(f * km + p.dg) / (2.0 * f)),
            SurfaceFamily::Mb => (-kappa / (2.0 * f), (f * km + p.dg) / (2.0 * f)),
            SurfaceFamily::Mpp => (kappa / (2.0 * f), -(f * km + p.dg) / (2.0 * f)),
        };
        let s = self.family.frame_signs();
        Ok(MeanCurvatureDecomp {
            h1,
            h2,
            h: h1 * frame.n1 + h2 * frame.n2,
            norm2: f64::from(s[2]) * h1 * h1 + f64::from(s[3]) * h2 * h2,
        })
    }

    /// Ambient derivatives of the analytic frame along `X = ∂_u` and
    /// `Y = (1/f)∂_v`, by central differences with step `h`, compared with
    /// the derivative table of the family.
    pub fn frame_equation_residuals(&self, u: f64, v: f64, h: f64) -> Result<FrameResiduals> {
        let p = self.profile_point(u)?;
        let km = self.kappa_m(&p, u)?;
        let kappa = self.curve.kappa(v);
        let fr = self.analytic_frames(u, v)?;
        let fu = (self.analytic_frames(u + h, v)?, self.analytic_frames(u - h, v)?);
        let fv = (self.analytic_frames(u, v + h)?, self.analytic_frames(u, v - h)?);
        let d_u = |sel: fn(&SurfaceFrame) -> Vec4| (sel(&fu.0) - sel(&fu.1)) / (2.0 * h);
        let d_v = |sel: fn(&SurfaceFrame) -> Vec4| (sel(&fv.0) - sel(&fv.1)) / (2.0 * h * p.f);

        let (yy_n1, y_n1, x_n2) = match self.family {
            SurfaceFamily::Ma => (-1.0, -1.0, 1.0),
            SurfaceFamily::Mb => (1.0, 1.0, 1.0),
            SurfaceFamily::Mpp => (1.0, -1.0, -1.0),
        };
        let f = p.f;
        let x = |s: &SurfaceFrame| s.x;
        let y = |s: &SurfaceFrame| s.y;
        let n1 = |s: &SurfaceFrame| s.n1;
        let n2 = |s: &SurfaceFrame| s.n2;
        let entries = vec![
            ("D_X X", d_u(x) - km * fr.n2),
            ("D_X Y", d_u(y)),
            ("D_Y X", d_v(x) - (p.df / f) * fr.y),
            (
                "D_Y Y",
                d_v(y) - ((p.df / f) * fr.x + yy_n1 * (kappa / f) * fr.n1 - (p.dg / f) * fr.n2),
            ),
            ("D_X n1", d_u(n1)),
            ("D_Y n1", d_v(n1) - y_n1 * (kappa / f) * fr.y),
            ("D_X n2", d_u(n2) - x_n2 * km * fr.x),
            ("D_Y n2", d_v(n2) - x_n2 * (p.dg / f) * fr.y),
        ];
        Ok(FrameResiduals {
            entries: entries
                .into_iter()
                .map(|(name, r)| (name.to_string(), r.norm_inf()))
                .collect(),
        })
    }

    /// Sample on a rectangular grid, in parallel, row-major in `u`.
    pub fn sample(&self, u_span: (f64, f64), v_span: (f64, f64), nu: usize, nv: usize) -> Result<SurfaceGrid> {
        SurfaceGrid::sample(self, u_span, v_span, nu, nv)
    }
}

impl Immersion for MeridianSurface {
    fn eval(&self, u: f64, v: f64) -> Result<Vec4> {
        self.eval_immersion(u, v)
    }
}

/// Per-entry sup-norm residuals of the frame derivative table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameResiduals {
    pub entries: Vec<(String, f64)>,
}

impl FrameResiduals {
    pub fn max(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, (_, r)| m.max(*r))
    }
}

/// Left multiplication by the anti-isometry
/// `T = [[0,0,0,1],[0,0,1,0],[1,0,0,0],[0,1,0,0]]`.
pub fn transform_t(x: Vec4) -> Vec4 {
    Vec4::new(x[3], x[2], x[0], x[1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TildeKind {
    /// Image of an `Mpp` surface.
    TildePrime,
    /// Image of an `Mb` surface.
    TildeDoubleA,
    /// Image of an `Ma` surface.
    TildeDoubleB,
}

impl TildeKind {
    pub fn source_family(self) -> SurfaceFamily {
        match self {
            TildeKind::TildePrime => SurfaceFamily::Mpp,
            TildeKind::TildeDoubleA => SurfaceFamily::Mb,
            TildeKind::TildeDoubleB => SurfaceFamily::Ma,
        }
    }

    /// Chart of the image curve `l̃ = (l₃, l₁, l₂)` in `span{e₂,e₃,e₄}`,
    /// in the same coordinates as the source curve.
    pub fn image_chart(self) -> ChartKind {
        match self {
            TildeKind::TildePrime => ChartKind::S21Tilde,
            TildeKind::TildeDoubleA | TildeKind::TildeDoubleB => ChartKind::H21Tilde,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TildeKind::TildePrime => "tilde-prime",
            TildeKind::TildeDoubleA => "tilde-double-a",
            TildeKind::TildeDoubleB => "tilde-double-b",
        }
    }
}

/// `T ∘ z` for a source meridian surface. Only the immersion is exposed;
/// frames and curvature of the image come from the numeric oracle.
#[derive(Clone, Debug)]
pub struct TildeSurface {
    kind: TildeKind,
    source: MeridianSurface,
}

pub fn tilde_surface(kind: TildeKind, source: MeridianSurface) -> Result<TildeSurface> {
    if source.family() != kind.source_family() {
        return Err(GeomError::usage(format!(
            "{} is the image of an {} surface, got {}",
            kind.name(),
            kind.source_family(),
            source.family()
        )));
    }
    Ok(TildeSurface { kind, source })
}

impl TildeSurface {
    pub fn kind(&self) -> TildeKind {
        self.kind
    }

    pub fn source(&self) -> &MeridianSurface {
        &self.source
    }

    /// The image point written directly as `g e₁ + f l̃(w₁, w₂)`, with
    /// `(w₁, w₂)` the chart coordinates of the source curve at `v`.
    pub fn display_point(&self, u: f64, v: f64) -> Result<Vec4> {
        let p = self.source.profile().eval(u)?;
        let l = self.source.curve().eval(v)?.l;
        let (w1, w2) = chart_coords(self.source.family().curve_family().chart_kind(), &l)?;
        Ok(p.g * Vec4::basis(0) + p.f * chart4(self.kind.image_chart(), w1, w2))
    }

    pub fn sample(&self, u_span: (f64, f64), v_span: (f64, f64), nu: usize, nv: usize) -> Result<SurfaceGrid> {
        SurfaceGrid::sample(self, u_span, v_span, nu, nv)
    }
}

impl Immersion for TildeSurface {
    fn eval(&self, u: f64, v: f64) -> Result<Vec4> {
        self.source.eval_immersion(u, v).map(transform_t)
    }
}

/// Immersion sampled on a rectangular grid; `points[i * nv + j]` is
/// `z(u[i], v[j])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub points: Vec<Vec4>,
}

fn linspace((a, b): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

impl SurfaceGrid {
    pub fn sample<S: Immersion + ?Sized>(
        surface: &S,
        u_span: (f64, f64),
        v_span: (f64, f64),
        nu: usize,
        nv: usize,
    ) -> Result<Self> {
        if nu < 2 || nv < 2 {
            return Err(GeomError::usage(format!("grid needs nu, nv >= 2, got {nu} x {nv}")));
        }
        let u = linspace(u_span, nu);
        let v = linspace(v_span, nv);
        let points = (0..nu * nv)
            .into_par_iter()
            .map(|k| surface.eval(u[k / nv], v[k % nv]))
            .collect::<Result<Vec<_>>>()?;
        Ok(SurfaceGrid { u, v, points })
    }

    pub fn nu(&self) -> usize {
        self.u.len()
    }

    pub fn nv(&self) -> usize {
        self.v.len()
    }

    pub fn at(&self, i: usize, j: usize) -> Vec4 {
        self.points[i * self.nv() + j]
    }

    /// Pointwise image under [`transform_t`].
    pub fn transform_t(&self) -> SurfaceGrid {
        SurfaceGrid {
            u: self.u.clone(),
            v: self.v.clone(),
            points: self.points.iter().copied().map(transform_t).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{orthonormality_deviation, CausalCharacter, Signature};
    use crate::curves::{integrate_frenet, standard_initial_frame, CurvatureLaw};
    use crate::profiles::{minimal_profile, BranchSigns, ProfileParams};

    fn curve(family: CurveFamily, kappa: f64) -> FrameField {
        integrate_frenet(
            family,
            CurvatureLaw::Constant(kappa),
            standard_initial_frame(family),
            (-0.5, 2.0),
            1e-3,
        )
        .unwrap()
    }

    /// `f ≡ 2`, `g(u) = u`.
    fn flat_profile() -> MeridianProfile {
        MeridianProfile::user_supplied(ProfileFamily::Ma, (0.0, 1.0), 101, 0.0, |_| (2.0, 0.0, 0.0))
            .unwrap()
    }

    fn ma_minimal() -> MeridianSurface {
        let p = ProfileParams {
            a: 0.0,
            b: 1.0,
            ..Default::default()
        };
        let prof = minimal_profile(ProfileFamily::Ma, p, (-0.8, 0.8), 161).unwrap();
        assemble(SurfaceFamily::Ma, curve(CurveFamily::SpacelikeOnS21, 0.0), prof).unwrap()
    }

    fn mb_minimal(kappa: f64) -> MeridianSurface {
        let p = ProfileParams {
            a: 2.0,
            b: 1.0,
            ..Default::default()
        };
        let prof = minimal_profile(ProfileFamily::Mb, p, (0.0, 2.0), 201).unwrap();
        assemble(SurfaceFamily::Mb, curve(CurveFamily::TimelikeOnS21, kappa), prof).unwrap()
    }

    fn mpp_minimal(kappa: f64) -> MeridianSurface {
        let p = ProfileParams {
            a: 0.0,
            b: 1.0,
            ..Default::default()
        };
        let prof = minimal_profile(ProfileFamily::Mpp, p, (-1.0, 1.0), 201).unwrap();
        assemble(SurfaceFamily::Mpp, curve(CurveFamily::SpacelikeOnH21, kappa), prof).unwrap()
    }

    #[test]
    fn immersion_examples() {
        let s = assemble(SurfaceFamily::Ma, curve(CurveFamily::SpacelikeOnS21, 0.0), flat_profile())
            .unwrap();
        assert_eq!(s.eval_immersion(0.0, 0.0).unwrap(), Vec4::new(2.0, 0.0, 0.0, 0.0));
        let m = mpp_minimal(0.7);
        for u in [-0.5, 0.0, 0.9] {
            let p = m.profile().eval(u).unwrap();
            let z = m.eval_immersion(u, 0.0).unwrap();
            assert!((z - Vec4::new(0.0, 0.0, p.f, p.g)).norm_inf() < 1e-15);
        }
        assert!(matches!(m.eval_immersion(0.0, 3.0), Err(GeomError::Domain(_))));
    }

    #[test]
    fn immersion_is_linear_in_the_profile() {
        let l = Vec3::e31(0.3, -1.2, 0.9);
        let z = immersion_point(1.7, -0.4, &l);
        assert_eq!(immersion_point(3.4, -0.8, &l), 2.0 * z);
    }

    #[test]
    fn assemble_checks_tags() {
        let prof = flat_profile();
        assert!(matches!(
            assemble(SurfaceFamily::Ma, curve(CurveFamily::TimelikeOnS21, 0.0), prof.clone()),
            Err(GeomError::Usage(_))
        ));
        assert!(matches!(
            assemble(SurfaceFamily::Mb, curve(CurveFamily::TimelikeOnS21, 0.0), prof),
            Err(GeomError::Usage(_))
        ));
    }

    #[test]
    fn frames_have_family_signs() {
        let cases = [ma_minimal(), mb_minimal(0.8), mpp_minimal(1.3)];
        for s in &cases {
            let sig = s.family().frame_signs();
            for (u, v) in [(0.2, 0.3), (0.5, 1.1)] {
                let fr = s.analytic_frames(u, v).unwrap();
                let dev = orthonormality_deviation(&fr.as_array(), &sig, &Signature::NEUTRAL).unwrap();
                assert!(dev <= 1e-8, "{}: {dev:e}", s.family());
            }
        }
    }

    #[test]
    fn n2_collapses_when_profile_is_flat() {
        let s = assemble(SurfaceFamily::Ma, curve(CurveFamily::SpacelikeOnS21, 0.4), flat_profile())
            .unwrap();
        let fr = s.analytic_frames(0.1, 0.7).unwrap();
        let l = s.curve().eval(0.7).unwrap().l.embed();
        assert!((fr.n2 - l).norm_inf() < 1e-15);
    }

    #[test]
    fn x_matches_finite_difference() {
        for s in [ma_minimal(), mb_minimal(0.8), mpp_minimal(1.3)] {
            let (u, v, h) = (0.4, 0.9, 1e-5);
            let fd = (s.eval_immersion(u + h, v).unwrap() - s.eval_immersion(u - h, v).unwrap())
                / (2.0 * h);
            let x = s.analytic_frames(u, v).unwrap().x;
            assert!((fd - x).norm_inf() < 1e-6, "{}", s.family());
        }
    }

    #[test]
    fn minimal_surface_has_zero_h() {
        let s = ma_minimal();
        for (u, v) in [(0.0, 0.0), (0.5, 1.0), (-0.7, 1.9)] {
            let h = s.analytic_h(u, v).unwrap();
            assert!(h.h1.abs() <= 1e-9 && h.h2.abs() <= 1e-9, "{h:?}");
        }
    }

    #[test]
    fn flat_profile_h_values() {
        for a in [1.0, 0.5, 2.0] {
            let s = assemble(SurfaceFamily::Ma, curve(CurveFamily::SpacelikeOnS21, a), flat_profile())
                .unwrap();
            let h = s.analytic_h(0.3, 0.5).unwrap();
            assert!((h.h1 + a / 4.0).abs() < 1e-14);
            assert!((h.h2 + 0.25).abs() < 1e-14);
            assert!((h.norm2 - (1.0 - a * a) / 16.0).abs() < 1e-14);
        }
    }

    #[test]
    fn decomposition_is_consistent() {
        for s in [ma_minimal(), mb_minimal(0.8), mpp_minimal(1.3)] {
            let h = s.analytic_h(0.3, 0.6).unwrap();
            let fr = s.analytic_frames(0.3, 0.6).unwrap();
            assert!((h.h - (h.h1 * fr.n1 + h.h2 * fr.n2)).norm_inf() <= 1e-10);
            assert!((h.h.dot(&h.h) - h.norm2).abs() <= 1e-10);
        }
    }

    #[test]
    fn frame_tables_hold() {
        for s in [ma_minimal(), mb_minimal(0.8), mpp_minimal(1.3)] {
            for (u, v) in [(0.1, 0.4), (0.6, 1.5)] {
                let r = s.frame_equation_residuals(u, v, 1e-4).unwrap();
                assert!(r.max() <= 1e-5, "{}: {:?}", s.family(), r.entries);
            }
        }
    }

    #[test]
    fn negative_g_branch_keeps_tables() {
        let p = ProfileParams {
            a: 0.3,
            b: 2.0,
            c0: 0.1,
            signs: BranchSigns {
                slope: crate::profiles::Sign::Minus,
                ..Default::default()
            },
            ..Default::default()
        };
        let prof = minimal_profile(ProfileFamily::Mpp, p, (-1.0, 1.0), 201).unwrap();
        let s = assemble(SurfaceFamily::Mpp, curve(CurveFamily::SpacelikeOnH21, 0.0), prof).unwrap();
        let r = s.frame_equation_residuals(0.2, 0.5, 1e-4).unwrap();
        assert!(r.max() <= 1e-5, "{:?}", r.entries);
        let h = s.analytic_h(0.2, 0.5).unwrap();
        assert!(h.h1.abs() < 1e-12 && h.h2.abs() < 1e-9, "{h:?}");
    }

    #[test]
    fn t_matrix_properties() {
        assert_eq!(transform_t(Vec4::basis(0)), Vec4::basis(2));
        for i in 0..4 {
            for j in 0..4 {
                let (x, y) = (Vec4::basis(i), Vec4::basis(j));
                assert_eq!(transform_t(x).dot(&transform_t(y)), -x.dot(&y));
            }
        }
        let x = Vec4::new(0.3, -1.0, 2.5, 7.0);
        let t4 = transform_t(transform_t(transform_t(transform_t(x))));
        assert_eq!(t4, x);
        let orbit: Vec<Vec4> = (0..4)
            .scan(Vec4::basis(0), |e, _| {
                *e = transform_t(*e);
                Some(*e)
            })
            .collect();
        assert_eq!(
            orbit,
            vec![Vec4::basis(2), Vec4::basis(1), Vec4::basis(3), Vec4::basis(0)]
        );
    }

    #[test]
    fn tilde_matches_display() {
        let cases = [
            (TildeKind::TildePrime, mpp_minimal(1.3)),
            (TildeKind::TildeDoubleA, mb_minimal(0.8)),
            (TildeKind::TildeDoubleB, ma_minimal()),
        ];
        for (kind, src) in cases {
            let t = tilde_surface(kind, src).unwrap();
            for (u, v) in [(0.1, 0.2), (0.7, 1.6)] {
                let img = t.eval(u, v).unwrap();
                let disp = t.display_point(u, v).unwrap();
                assert!((img - disp).norm_inf() < 1e-9, "{}", kind.name());
            }
        }
        assert!(matches!(
            tilde_surface(TildeKind::TildePrime, ma_minimal()),
            Err(GeomError::Usage(_))
        ));
    }

    #[test]
    fn tilde_flips_causal_character() {
        let s = mb_minimal(0.8);
        let fr = s.analytic_frames(0.5, 0.5).unwrap();
        assert_eq!(fr.x.causal(), CausalCharacter::Spacelike);
        assert_eq!(fr.y.causal(), CausalCharacter::Timelike);
        assert_eq!(transform_t(fr.x).causal(), CausalCharacter::Timelike);
        assert_eq!(transform_t(fr.y).causal(), CausalCharacter::Spacelike);
    }

    #[test]
    fn grid_sampling() {
        let s = ma_minimal();
        let g = s.sample((-0.5, 0.5), (0.0, 1.0), 5, 4).unwrap();
        assert_eq!(g.points.len(), 20);
        assert_eq!(g.at(4, 3), s.eval_immersion(0.5, 1.0).unwrap());
        let t = tilde_surface(TildeKind::TildeDoubleB, s).unwrap();
        let tg = t.sample((-0.5, 0.5), (0.0, 1.0), 5, 4).unwrap();
        assert_eq!(tg, g.transform_t());
        let closure = FnImmersion(|u: f64, v: f64| Ok(Vec4::new(u, v, 0.0, 0.0)));
        assert!(SurfaceGrid::sample(&closure, (0.0, 1.0), (0.0, 1.0), 1, 3).is_err());
    }
}
