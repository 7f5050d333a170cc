//! Theorem-level verification cases, reports and mesh export.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{affine_rank, AffineRank, CausalCharacter, Vec4};
use crate::curves::{integrate_frenet, standard_initial_frame, CurvatureLaw};
use crate::error::{GeomError, Result};
use crate::oracle::{default_step, fd_jet, fundamental_forms, mean_curvature_fd};
use crate::profiles::{
    anchored_params, integrate_profile, minimal_profile, phi_closed_form, profile_residuals,
    BranchSigns, MeridianProfile, PhiKind, ProfileFamily, ProfileParams, ResidualKind,
    Truncation,
};
use crate::surface::{
    assemble, tilde_surface, transform_t, Immersion, MeridianSurface, SurfaceFamily, SurfaceGrid,
    TildeKind,
};

pub const SCHEMA: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Smallest `‖H‖∞` accepted as "non-zero" for quasi-minimal cases.
pub const H_NONZERO: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    MinimalA,
    MinimalB,
    MinimalC,
    QuasiA,
    QuasiB,
    QuasiC,
    CmcA,
    CmcB,
    CmcC,
    CongruenceTilde,
    NegativeControl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TheoremKind {
    Minimal,
    Quasi,
    Cmc,
    Congruence,
    Control,
}

impl Theorem {
    pub const ALL: [Theorem; 11] = [
        Theorem::MinimalA,
        Theorem::MinimalB,
        Theorem::MinimalC,
        Theorem::QuasiA,
        Theorem::QuasiB,
        Theorem::QuasiC,
        Theorem::CmcA,
        Theorem::CmcB,
        Theorem::CmcC,
        Theorem::CongruenceTilde,
        Theorem::NegativeControl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::MinimalA => "minimal-a",
            Theorem::MinimalB => "minimal-b",
            Theorem::MinimalC => "minimal-c",
            Theorem::QuasiA => "quasi-a",
            Theorem::QuasiB => "quasi-b",
            Theorem::QuasiC => "quasi-c",
            Theorem::CmcA => "cmc-a",
            Theorem::CmcB => "cmc-b",
            Theorem::CmcC => "cmc-c",
            Theorem::CongruenceTilde => "congruence-tilde",
            Theorem::NegativeControl => "negative-control",
        }
    }

    pub fn kind(self) -> TheoremKind {
        use Theorem::*;
        match self {
            MinimalA | MinimalB | MinimalC => TheoremKind::Minimal,
            QuasiA | QuasiB | QuasiC => TheoremKind::Quasi,
            CmcA | CmcB | CmcC => TheoremKind::Cmc,
            CongruenceTilde => TheoremKind::Congruence,
            NegativeControl => TheoremKind::Control,
        }
    }

    /// Surface family fixed by the theorem, if any.
    pub fn family(self) -> Option<SurfaceFamily> {
        use Theorem::*;
        match self {
            MinimalA | QuasiA | CmcA | NegativeControl => Some(SurfaceFamily::Ma),
            MinimalB | QuasiB | CmcB => Some(SurfaceFamily::Mb),
            MinimalC | QuasiC | CmcC => Some(SurfaceFamily::Mpp),
            CongruenceTilde => None,
        }
    }

    pub fn minimal_for(family: SurfaceFamily) -> Theorem {
        match family {
            SurfaceFamily::Ma => Theorem::MinimalA,
            SurfaceFamily::Mb => Theorem::MinimalB,
            SurfaceFamily::Mpp => Theorem::MinimalC,
        }
    }

    pub fn quasi_for(family: SurfaceFamily) -> Theorem {
        match family {
            SurfaceFamily::Ma => Theorem::QuasiA,
            SurfaceFamily::Mb => Theorem::QuasiB,
            SurfaceFamily::Mpp => Theorem::QuasiC,
        }
    }

    pub fn cmc_for(family: SurfaceFamily) -> Theorem {
        match family {
            SurfaceFamily::Ma => Theorem::CmcA,
            SurfaceFamily::Mb => Theorem::CmcB,
            SurfaceFamily::Mpp => Theorem::CmcC,
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Theorem::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Theorem::ALL.iter().map(|t| t.name()).collect();
                GeomError::usage(format!("unknown theorem '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nu: usize,
    pub nv: usize,
    pub u_span: (f64, f64),
    pub v_span: (f64, f64),
}

impl GridSpec {
    /// Cell-centred sample points, row-major in `u`.
    pub fn centres(&self) -> Vec<(f64, f64)> {
        let du = (self.u_span.1 - self.u_span.0) / self.nu as f64;
        let dv = (self.v_span.1 - self.v_span.0) / self.nv as f64;
        (0..self.nu)
            .flat_map(|i| {
                (0..self.nv).map(move |j| {
                    (
                        self.u_span.0 + (i as f64 + 0.5) * du,
                        self.v_span.0 + (j as f64 + 0.5) * dv,
                    )
                })
            })
            .collect()
    }

    fn half_cells(&self) -> (f64, f64) {
        (
            0.5 * (self.u_span.1 - self.u_span.0) / self.nu as f64,
            0.5 * (self.v_span.1 - self.v_span.0) / self.nv as f64,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub tol_h: f64,
    /// Absolute `⟨H,H⟩` tolerance, used while `|target| <= 1`.
    pub tol_norm2: f64,
    /// Relative `⟨H,H⟩` tolerance, used while `|target| > 1`.
    pub tol_norm2_rel: f64,
    pub tol_frame: f64,
    /// Bound on the closed-form `(h1, h2)` of minimal cases.
    pub tol_analytic: f64,
    /// Governing-equation residual; `None` picks 1e-8 for closed forms and
    /// 1e-6 for ODE profiles.
    pub tol_residual: Option<f64>,
    pub tol_constraint: f64,
    pub tol_affine: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_h: 1e-5,
            tol_norm2: 1e-5,
            tol_norm2_rel: 1e-4,
            tol_frame: 1e-5,
            tol_analytic: 1e-9,
            tol_residual: None,
            tol_constraint: 1e-8,
            tol_affine: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn norm2_tolerance(&self, target: f64) -> f64 {
        if target.abs() <= 1.0 {
            self.tol_norm2
        } else {
            self.tol_norm2_rel * target.abs()
        }
    }

    fn residual_tolerance(&self, kind: TheoremKind) -> f64 {
        self.tol_residual.unwrap_or(match kind {
            TheoremKind::Minimal | TheoremKind::Control => 1e-8,
            _ => 1e-6,
        })
    }
}

fn default_step_size() -> f64 {
    1e-3
}

fn default_random_points() -> usize {
    20
}

/// One verification case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub theorem: Theorem,
    /// Source family for `congruence-tilde`; must match the theorem otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<SurfaceFamily>,
    pub params: ProfileParams,
    /// Curvature of the spherical curve; defaults to 0 for minimal cases and
    /// to `params.a` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(default = "default_step_size")]
    pub step: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_random_points")]
    pub random_points: usize,
}

fn grid(u_span: (f64, f64), v_span: (f64, f64)) -> GridSpec {
    GridSpec {
        nu: 21,
        nv: 21,
        u_span,
        v_span,
    }
}

impl CaseSpec {
    /// Defaults for a theorem: a known admissible parameter set.
    pub fn for_theorem(theorem: Theorem) -> CaseSpec {
        let base = |params: ProfileParams, f0: Option<f64>, u_span| CaseSpec {
            theorem,
            family: None,
            params,
            curve_kappa: None,
            f0,
            step: default_step_size(),
            grid: grid(u_span, (0.0, 1.5)),
            tolerances: Tolerances::default(),
            seed: 0,
            random_points: default_random_points(),
        };
        let p = |a, b, c| ProfileParams {
            a,
            b,
            c,
            ..ProfileParams::default()
        };
        let anchored = |family, a, c, f0, rho| {
            anchored_params(PhiKind::Cmc, family, a, c, BranchSigns::default(), f0, rho)
                .expect("default CMC anchor is admissible")
        };
        match theorem {
            Theorem::MinimalA => {
                let mut s = base(p(0.0, 1.0, 0.0), None, (-0.8, 0.8));
                s.grid.v_span = (0.0, 2.0);
                s
            }
            Theorem::MinimalB => base(p(2.0, 1.0, 0.0), None, (0.0, 2.0)),
            Theorem::MinimalC => base(p(0.0, 1.0, 0.0), None, (-1.0, 1.0)),
            Theorem::QuasiA => base(p(1.0, 0.0, 2.0), Some(3.0), (0.0, 1.0)),
            Theorem::QuasiB => base(p(1.0, 0.0, 1.0), Some(1.0), (0.0, 0.5)),
            Theorem::QuasiC => base(p(0.5, 0.0, 0.5), Some(3.0), (0.0, 1.0)),
            Theorem::CmcA => base(p(2.0, 0.0, 1.0), Some(1.0), (0.0, 0.5)),
            Theorem::CmcB => base(anchored(ProfileFamily::Mb, 1.5, -0.5, 1.0, 1.0), Some(1.0), (0.0, 0.5)),
            Theorem::CmcC => base(anchored(ProfileFamily::Mpp, 1.5, -0.5, 1.0, 0.5), Some(1.0), (0.0, 0.5)),
            Theorem::CongruenceTilde => {
                let mut s = base(anchored(ProfileFamily::Mpp, 1.5, -0.5, 1.0, 0.5), Some(1.0), (0.0, 0.5));
                s.family = Some(SurfaceFamily::Mpp);
                s
            }
            Theorem::NegativeControl => base(p(0.0, 1.0, 0.0), None, (0.0, 1.0)),
        }
    }

    pub fn surface_family(&self) -> Result<SurfaceFamily> {
        match (self.theorem.family(), self.family) {
            (Some(t), Some(f)) if t != f => Err(GeomError::usage(format!(
                "theorem {} fixes family {t}, got {f}",
                self.theorem
            ))),
            (Some(t), _) => Ok(t),
            (None, f) => Ok(f.unwrap_or(SurfaceFamily::Mpp)),
        }
    }

    pub fn kappa(&self) -> f64 {
        self.curve_kappa.unwrap_or(match self.theorem.kind() {
            TheoremKind::Minimal | TheoremKind::Control => 0.0,
            _ => self.params.a,
        })
    }

    /// Target `⟨H,H⟩` of the source surface: 0 for minimal and
    /// quasi-minimal cases, `c` for CMC ones.
    pub fn target_norm2(&self) -> f64 {
        match self.theorem.kind() {
            TheoremKind::Cmc | TheoremKind::Congruence => self.params.c,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.nu < 5 || g.nv < 5 {
            return Err(GeomError::usage(format!("grid must be at least 5x5, got {}x{}", g.nu, g.nv)));
        }
        for (name, (a, b)) in [("u", g.u_span), ("v", g.v_span)] {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(GeomError::usage(format!("invalid {name} span [{a}, {b}]")));
            }
        }
        let t = &self.tolerances;
        let tols = [
            t.tol_h,
            t.tol_norm2,
            t.tol_norm2_rel,
            t.tol_frame,
            t.tol_analytic,
            t.tol_residual.unwrap_or(1.0),
            t.tol_constraint,
            t.tol_affine,
        ];
        if tols.iter().any(|x| !(*x > 0.0)) {
            return Err(GeomError::usage("tolerances must be positive"));
        }
        if !(self.step > 0.0) {
            return Err(GeomError::usage(format!("step must be positive, got {}", self.step)));
        }
        let (hu, hv) = g.half_cells();
        let reach = |x: f64| 2.5 * default_step(x, 0.0);
        if hu < reach(g.u_span.0.abs().max(g.u_span.1.abs())) || hv < reach(g.v_span.0.abs().max(g.v_span.1.abs())) {
            return Err(GeomError::usage(
                "grid is too fine: finite-difference stencils leave the sampled span",
            ));
        }
        self.surface_family()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    DomainTruncated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cmp {
    Le,
    Lt,
    Ge,
    Eq,
}

impl Cmp {
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Cmp::Le => value <= bound,
            Cmp::Lt => value < bound,
            Cmp::Ge => value >= bound,
            Cmp::Eq => value == bound,
        }
    }
}

/// One statistic against its bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub cmp: Cmp,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, value: f64, cmp: Cmp, bound: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            cmp,
            bound,
            passed: cmp.holds(value, bound),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_h1_analytic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_h2_analytic: Option<f64>,
    pub max_h_fd: f64,
    pub min_h_fd: f64,
    pub target_norm2: f64,
    pub max_norm2_deviation: f64,
    pub max_norm2_fd: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_analytic_fd_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_frame_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_mixed_h: Option<f64>,
    pub max_governing_residual: f64,
    pub max_constraint_residual: f64,
    pub max_metric_det: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub affine: Option<AffineRank>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_causal: Option<CausalCharacter>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub congruence: Option<CongruenceStats>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CongruenceStats {
    pub kind: String,
    pub anti_isometry_defect: f64,
    pub max_display_gap: f64,
    pub max_norm2_flip_gap: f64,
    pub causal_mismatches: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub tool_version: String,
    pub case: CaseSpec,
    pub status: Status,
    pub statistics: Statistics,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
    pub warnings: Vec<String>,
    pub runtime_ms: u64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Recompute the status from the recorded checks.
    pub fn recomputed_status(&self) -> Status {
        if self.truncation.is_some() {
            Status::DomainTruncated
        } else if self.checks.iter().all(|c| c.cmp.holds(c.value, c.bound)) {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// A surface built from a case, with the profile's residual kind.
pub struct BuiltCase {
    pub surface: MeridianSurface,
    pub residual_kind: ResidualKind,
    pub truncation: Option<Truncation>,
}

const CURVE_STEP: f64 = 1e-3;
const CURVE_PAD: f64 = 0.05;
const MINIMAL_SAMPLES: usize = 2001;

fn build_profile(spec: &CaseSpec, family: SurfaceFamily) -> Result<(MeridianProfile, ResidualKind)> {
    let pf = family.profile_family();
    let span = spec.grid.u_span;
    let ode = |kind: PhiKind| -> Result<MeridianProfile> {
        let f0 = spec.f0.unwrap_or(1.0);
        let window = (1e-6, 10.0 * f0.max(1.0) + 10.0);
        let phi = phi_closed_form(kind, pf, spec.params, window)?;
        integrate_profile(&phi, f0, span, spec.step, spec.params.c0)
    };
    match spec.theorem.kind() {
        TheoremKind::Minimal => Ok((
            minimal_profile(pf, spec.params, span, MINIMAL_SAMPLES)?,
            ResidualKind::Minimal,
        )),
        TheoremKind::Quasi => Ok((ode(PhiKind::Quasi)?, ResidualKind::Quasi)),
        TheoremKind::Cmc => Ok((ode(PhiKind::Cmc)?, ResidualKind::Cmc)),
        TheoremKind::Congruence => {
            if spec.params.c == 0.0 {
                Ok((ode(PhiKind::Quasi)?, ResidualKind::Quasi))
            } else {
                Ok((ode(PhiKind::Cmc)?, ResidualKind::Cmc))
            }
        }
        TheoremKind::Control => {
            // f = u + 2 forced into the minimal Ma pipeline
            let n = MINIMAL_SAMPLES;
            let prof = MeridianProfile::user_supplied(pf, span, n, spec.params.c0, |u| (u + 2.0, 1.0, 0.0))?;
            Ok((prof, ResidualKind::Minimal))
        }
    }
}

/// Build the curve, profile and surface of a case.
pub fn build_case(spec: &CaseSpec) -> Result<BuiltCase> {
    spec.validate()?;
    let family = spec.surface_family()?;
    let (profile, residual_kind) = build_profile(spec, family)?;
    let truncation = profile.truncation();
    let kappa = spec.kappa();
    if !kappa.is_finite() {
        return Err(GeomError::usage(format!("curve curvature must be finite, got {kappa}")));
    }
    let cf = family.curve_family();
    let (v0, v1) = spec.grid.v_span;
    let curve = integrate_frenet(
        cf,
        CurvatureLaw::Constant(kappa),
        standard_initial_frame(cf),
        (v0 - CURVE_PAD, v1 + CURVE_PAD),
        CURVE_STEP,
    )?;
    Ok(BuiltCase {
        surface: assemble(family, curve, profile)?,
        residual_kind,
        truncation,
    })
}

struct PointEval {
    h_fd: f64,
    norm2_fd: f64,
    det: f64,
    h1: f64,
    h2: f64,
    gap: f64,
    mixed: f64,
}

fn eval_point(surface: &MeridianSurface, u: f64, v: f64) -> Result<PointEval> {
    let jet = fd_jet(surface, u, v, None)?;
    let forms = fundamental_forms(&jet)?;
    let an = surface.analytic_h(u, v)?;
    let frame = surface.analytic_frames(u, v)?;
    let s = surface.family().frame_signs();
    let h = forms.mean_curvature;
    let h1_fd = f64::from(s[2]) * h.dot(&frame.n1);
    let h2_fd = f64::from(s[3]) * h.dot(&frame.n2);
    let f = surface.profile().eval(u)?.f;
    Ok(PointEval {
        h_fd: h.norm_inf(),
        norm2_fd: forms.norm2_h,
        det: forms.det(),
        h1: an.h1,
        h2: an.h2,
        gap: (h1_fd - an.h1).abs().max((h2_fd - an.h2).abs()),
        mixed: forms.h_uv.norm_inf() / f,
    })
}

fn fold_max(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(f64::NEG_INFINITY, f64::max)
}

fn fold_min(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(f64::INFINITY, f64::min)
}

fn random_points(spec: &CaseSpec) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (hu, hv) = spec.grid.half_cells();
    let (u0, u1) = spec.grid.u_span;
    let (v0, v1) = spec.grid.v_span;
    (0..spec.random_points)
        .map(|_| (rng.gen_range(u0 + hu..u1 - hu), rng.gen_range(v0 + hv..v1 - hv)))
        .collect()
}

/// Run every check of a case.
pub fn verify_case(spec: &CaseSpec) -> Result<VerificationReport> {
    let started = Instant::now();
    let built = build_case(spec)?;
    let mut report = VerificationReport {
        schema: SCHEMA,
        tool_version: TOOL_VERSION.to_string(),
        case: spec.clone(),
        status: Status::Pass,
        statistics: Statistics::default(),
        checks: Vec::new(),
        truncation: built.truncation,
        warnings: Vec::new(),
        runtime_ms: 0,
    };
    if built.truncation.is_some() {
        report.status = Status::DomainTruncated;
        report.runtime_ms = started.elapsed().as_millis() as u64;
        return Ok(report);
    }
    let surface = &built.surface;
    let kind = spec.theorem.kind();
    let tol = &spec.tolerances;
    let centres = spec.grid.centres();
    let evals = centres
        .par_iter()
        .map(|&(u, v)| eval_point(surface, u, v))
        .collect::<Result<Vec<_>>>()?;

    let target = spec.target_norm2();
    let st = &mut report.statistics;
    st.points = evals.len();
    st.max_abs_h1_analytic = Some(fold_max(evals.iter().map(|e| e.h1.abs())));
    st.max_abs_h2_analytic = Some(fold_max(evals.iter().map(|e| e.h2.abs())));
    st.max_h_fd = fold_max(evals.iter().map(|e| e.h_fd));
    st.min_h_fd = fold_min(evals.iter().map(|e| e.h_fd));
    st.target_norm2 = target;
    st.max_norm2_deviation = fold_max(evals.iter().map(|e| (e.norm2_fd - target).abs()));
    st.max_norm2_fd = fold_max(evals.iter().map(|e| e.norm2_fd));
    st.max_analytic_fd_gap = Some(fold_max(evals.iter().map(|e| e.gap)));
    st.max_mixed_h = Some(fold_max(evals.iter().map(|e| e.mixed)));
    st.max_metric_det = fold_max(evals.iter().map(|e| e.det));

    let frame = random_points(spec)
        .par_iter()
        .map(|&(u, v)| surface.frame_equation_residuals(u, v, 1e-4).map(|r| r.max()))
        .collect::<Result<Vec<_>>>()?;
    st.max_frame_residual = Some(fold_max(frame.into_iter()));

    let res = profile_residuals(surface.profile(), built.residual_kind, &spec.params);
    st.max_governing_residual = res.max_governing();
    st.max_constraint_residual = res.max_constraint();
    report.warnings.extend(res.warnings);

    let points: Vec<Vec4> = centres
        .iter()
        .map(|&(u, v)| surface.eval_immersion(u, v))
        .collect::<Result<_>>()?;
    st.affine = Some(affine_rank(&points, tol.tol_affine)?);

    let mut checks = vec![
        Check::new("max_analytic_fd_gap", st.max_analytic_fd_gap.unwrap_or(0.0), Cmp::Le, tol.tol_h),
        Check::new("max_frame_residual", st.max_frame_residual.unwrap_or(0.0), Cmp::Le, tol.tol_frame),
        Check::new("max_mixed_h", st.max_mixed_h.unwrap_or(0.0), Cmp::Le, tol.tol_frame),
        Check::new(
            "max_governing_residual",
            st.max_governing_residual,
            Cmp::Le,
            tol.residual_tolerance(kind),
        ),
        Check::new("max_constraint_residual", st.max_constraint_residual, Cmp::Le, tol.tol_constraint),
        Check::new("max_metric_det", st.max_metric_det, Cmp::Lt, 0.0),
    ];
    match kind {
        TheoremKind::Minimal | TheoremKind::Control => {
            let an = st.max_abs_h1_analytic.unwrap_or(0.0).max(st.max_abs_h2_analytic.unwrap_or(0.0));
            let aff = st.affine.expect("affine rank computed");
            checks.push(Check::new("max_h_fd", st.max_h_fd, Cmp::Le, tol.tol_h));
            checks.push(Check::new("max_h_analytic", an, Cmp::Le, tol.tol_analytic));
            checks.push(Check::new("affine_rank", aff.rank as f64, Cmp::Eq, 3.0));
            checks.push(Check::new("affine_residual", aff.residual, Cmp::Le, tol.tol_affine));
        }
        TheoremKind::Quasi => {
            checks.push(Check::new("max_norm2_deviation", st.max_norm2_deviation, Cmp::Le, tol.norm2_tolerance(0.0)));
            checks.push(Check::new("min_h_fd", st.min_h_fd, Cmp::Ge, H_NONZERO));
        }
        TheoremKind::Cmc => {
            checks.push(Check::new(
                "max_norm2_deviation",
                st.max_norm2_deviation,
                Cmp::Le,
                tol.norm2_tolerance(target),
            ));
            if target < 0.0 {
                st.h_causal = Some(if st.max_norm2_fd < 0.0 {
                    CausalCharacter::Timelike
                } else {
                    CausalCharacter::Spacelike
                });
                checks.push(Check::new("max_norm2_fd", st.max_norm2_fd, Cmp::Lt, 0.0));
            }
        }
        TheoremKind::Congruence => {
            let cong = congruence_stats(surface, &centres)?;
            checks.push(Check::new(
                "max_norm2_deviation",
                st.max_norm2_deviation,
                Cmp::Le,
                tol.norm2_tolerance(target),
            ));
            checks.push(Check::new("anti_isometry_defect", cong.anti_isometry_defect, Cmp::Eq, 0.0));
            checks.push(Check::new("max_display_gap", cong.max_display_gap, Cmp::Le, 1e-10));
            checks.push(Check::new(
                "max_norm2_flip_gap",
                cong.max_norm2_flip_gap,
                Cmp::Le,
                tol.norm2_tolerance(spec.params.c),
            ));
            checks.push(Check::new("causal_mismatches", cong.causal_mismatches as f64, Cmp::Eq, 0.0));
            st.congruence = Some(cong);
        }
    }
    report.checks = checks;
    report.status = report.recomputed_status();
    report.runtime_ms = started.elapsed().as_millis() as u64;
    Ok(report)
}

pub fn tilde_kind_for(family: SurfaceFamily) -> TildeKind {
    match family {
        SurfaceFamily::Ma => TildeKind::TildeDoubleB,
        SurfaceFamily::Mb => TildeKind::TildeDoubleA,
        SurfaceFamily::Mpp => TildeKind::TildePrime,
    }
}

fn congruence_stats(source: &MeridianSurface, centres: &[(f64, f64)]) -> Result<CongruenceStats> {
    let kind = tilde_kind_for(source.family());
    let tilde = tilde_surface(kind, source.clone())?;
    let mut defect: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let (x, y) = (Vec4::basis(i), Vec4::basis(j));
            defect = defect.max((transform_t(x).dot(&transform_t(y)) + x.dot(&y)).abs());
        }
    }
    let per_point = centres
        .par_iter()
        .map(|&(u, v)| -> Result<(f64, f64, usize)> {
            let display = (tilde.eval(u, v)? - tilde.display_point(u, v)?).norm_inf();
            let (_, n_src) = mean_curvature_fd(source, u, v, None)?;
            let (_, n_img) = mean_curvature_fd(&tilde, u, v, None)?;
            let fr = source.analytic_frames(u, v)?;
            let flips = [fr.x, fr.y]
                .iter()
                .filter(|t| transform_t(**t).causal() == t.causal())
                .count();
            Ok((display, (n_img + n_src).abs(), flips))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CongruenceStats {
        kind: kind.name().to_string(),
        anti_isometry_defect: defect,
        max_display_gap: fold_max(per_point.iter().map(|p| p.0)),
        max_norm2_flip_gap: fold_max(per_point.iter().map(|p| p.1)),
        causal_mismatches: per_point.iter().map(|p| p.2).sum(),
    })
}

/// Anchored CMC case: `b` is chosen so that `f'(0) = ±√(ρ² ∓ 1)` at `f0`.
/// When the CMC root caps `t` (the `arcsin` branch), `f0` sits at half the
/// cap. The curve is sampled on `v ∈ [0, 1]`:
/// timelike curves on `S²₁` grow like `e^{√(1+κ²) v}`.
pub fn cmc_case(family: SurfaceFamily, a: f64, c: f64, rho: f64, span: f64) -> Result<CaseSpec> {
    let pf = family.profile_family();
    let q = pf.cmc_coefficient(c);
    let f0 = if q < 0.0 { 0.5 * a.abs() / (-q).sqrt() } else { 1.0 };
    let params = anchored_params(PhiKind::Cmc, pf, a, c, BranchSigns::default(), f0, rho)?;
    let mut spec = CaseSpec::for_theorem(Theorem::cmc_for(family));
    spec.params = params;
    spec.f0 = Some(f0);
    spec.grid.u_span = (0.0, span);
    spec.grid.v_span = (0.0, 1.0);
    Ok(spec)
}

/// Quasi-minimal case anchored so that `z(f0) = |ρ|`.
pub fn quasi_case(family: SurfaceFamily, a: f64, f0: f64, rho: f64, span: f64) -> Result<CaseSpec> {
    let params = anchored_params(
        PhiKind::Quasi,
        family.profile_family(),
        a,
        0.0,
        BranchSigns::default(),
        f0,
        rho,
    )?;
    let mut spec = CaseSpec::for_theorem(Theorem::quasi_for(family));
    spec.params = params;
    spec.f0 = Some(f0);
    spec.grid.u_span = (0.0, span);
    spec.grid.v_span = (0.0, 1.0);
    Ok(spec)
}

/// One entry of the built-in suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub label: String,
    pub expect_pass: bool,
    pub report: VerificationReport,
    pub as_expected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub tool_version: String,
    pub entries: Vec<SuiteEntry>,
    /// Minimal cases lie in a hyperplane; some quasi-minimal case does not.
    pub corollary: Vec<Check>,
    pub all_as_expected: bool,
}

/// Cases of the built-in suite: every theorem, both CMC sign branches, the
/// three congruences and the negative control.
pub fn builtin_cases() -> Vec<(String, CaseSpec, bool)> {
    let mut out = Vec::new();
    let mut push = |label: String, spec: CaseSpec, expect: bool| out.push((label, spec, expect));
    for t in [Theorem::MinimalA, Theorem::MinimalB, Theorem::MinimalC, Theorem::QuasiA, Theorem::QuasiB, Theorem::QuasiC] {
        push(t.name().to_string(), CaseSpec::for_theorem(t), true);
    }
    let cmc = [
        (SurfaceFamily::Ma, 2.0, 1.5),
        (SurfaceFamily::Mb, 2.0, 1.0),
        (SurfaceFamily::Mpp, 3.0, 0.5),
    ];
    for (family, a, rho) in cmc {
        for c in [0.5, -0.5] {
            let spec = cmc_case(family, a, c, rho, 0.3).expect("built-in CMC case");
            push(format!("{} c={c}", spec.theorem), spec, true);
        }
    }
    for family in [SurfaceFamily::Mpp, SurfaceFamily::Mb, SurfaceFamily::Ma] {
        let (a, rho) = match family {
            SurfaceFamily::Ma => (2.0, 1.5),
            SurfaceFamily::Mb => (2.0, 1.0),
            SurfaceFamily::Mpp => (3.0, 0.5),
        };
        let mut spec = cmc_case(family, a, 0.5, rho, 0.3).expect("built-in congruence case");
        spec.theorem = Theorem::CongruenceTilde;
        spec.family = Some(family);
        push(format!("congruence-tilde {}", tilde_kind_for(family).name()), spec, true);
    }
    push(
        "negative-control".to_string(),
        CaseSpec::for_theorem(Theorem::NegativeControl),
        false,
    );
    out
}

pub fn run_suite() -> Result<SuiteReport> {
    let mut entries = Vec::new();
    for (label, spec, expect_pass) in builtin_cases() {
        let report = verify_case(&spec)?;
        let as_expected = report.passed() == expect_pass;
        entries.push(SuiteEntry {
            label,
            expect_pass,
            report,
            as_expected,
        });
    }
    let minimal_ranks: Vec<f64> = entries
        .iter()
        .filter(|e| e.report.case.theorem.kind() == TheoremKind::Minimal)
        .filter_map(|e| e.report.statistics.affine.map(|a| a.rank as f64))
        .collect();
    let quasi_max_rank = fold_max(
        entries
            .iter()
            .filter(|e| e.report.case.theorem.kind() == TheoremKind::Quasi)
            .filter_map(|e| e.report.statistics.affine.map(|a| a.rank as f64)),
    );
    let corollary = vec![
        Check::new("minimal_max_affine_rank", fold_max(minimal_ranks.iter().copied()), Cmp::Eq, 3.0),
        Check::new("minimal_min_affine_rank", fold_min(minimal_ranks.iter().copied()), Cmp::Eq, 3.0),
        Check::new("quasi_max_affine_rank", quasi_max_rank, Cmp::Eq, 4.0),
    ];
    let all_as_expected = entries.iter().all(|e| e.as_expected) && corollary.iter().all(|c| c.passed);
    Ok(SuiteReport {
        schema: SCHEMA,
        tool_version: TOOL_VERSION.to_string(),
        entries,
        corollary,
        all_as_expected,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Csv,
    Obj,
    Json,
}

impl FromStr for MeshFormat {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MeshFormat::Csv),
            "obj" => Ok(MeshFormat::Obj),
            "json" => Ok(MeshFormat::Json),
            other => Err(GeomError::usage(format!("unknown mesh format '{other}' (csv, obj, json)"))),
        }
    }
}

impl MeshFormat {
    /// Format implied by a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

/// Metadata written alongside JSON meshes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshMeta {
    pub family: String,
    pub theorem: String,
    pub params: ProfileParams,
}

#[derive(Serialize)]
struct JsonSample {
    u: f64,
    v: f64,
    x: [f64; 4],
}

#[derive(Serialize)]
struct JsonMesh<'a> {
    schema: u32,
    tool_version: &'a str,
    #[serde(flatten)]
    meta: &'a MeshMeta,
    nu: usize,
    nv: usize,
    samples: Vec<JsonSample>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> GeomError + '_ {
    move |source| GeomError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// CSV text: header `u,v,x1,x2,x3,x4`, rows in `u`-major order.
pub fn mesh_csv(grid: &SurfaceGrid) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["u", "v", "x1", "x2", "x3", "x4"]).expect("in-memory write");
    for (i, u) in grid.u.iter().enumerate() {
        for (j, v) in grid.v.iter().enumerate() {
            let x = grid.at(i, j).0;
            let row = [*u, *v, x[0], x[1], x[2], x[3]].map(|f| f.to_string());
            w.write_record(&row).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

/// Parse CSV text written by [`mesh_csv`].
pub fn parse_mesh_csv(text: &str) -> Result<SurfaceGrid> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| GeomError::usage(format!("bad csv: {e}")))?;
        let vals = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| GeomError::usage(format!("bad number '{s}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != 6 {
            return Err(GeomError::usage(format!("expected 6 columns, got {}", vals.len())));
        }
        rows.push(vals);
    }
    let mut u: Vec<f64> = Vec::new();
    for row in &rows {
        if u.last() != Some(&row[0]) {
            u.push(row[0]);
        }
    }
    if u.is_empty() || rows.len() % u.len() != 0 {
        return Err(GeomError::usage("csv rows do not form a rectangular grid"));
    }
    let nv = rows.len() / u.len();
    let v = rows[..nv].iter().map(|r| r[1]).collect();
    let points = rows.iter().map(|r| Vec4::new(r[2], r[3], r[4], r[5])).collect();
    Ok(SurfaceGrid { u, v, points })
}

/// OBJ text: `(x1, x2, x3)` vertices and two triangles per grid cell.
pub fn mesh_obj(grid: &SurfaceGrid) -> String {
    let mut out = String::from("# projection: vertices are (x1, x2, x3); x4 dropped\n");
    for p in &grid.points {
        out.push_str(&format!("v {} {} {}\n", p[0], p[1], p[2]));
    }
    let (nu, nv) = (grid.nu(), grid.nv());
    let id = |i: usize, j: usize| i * nv + j + 1;
    for i in 0..nu - 1 {
        for j in 0..nv - 1 {
            out.push_str(&format!("f {} {} {}\n", id(i, j), id(i + 1, j), id(i + 1, j + 1)));
            out.push_str(&format!("f {} {} {}\n", id(i, j), id(i + 1, j + 1), id(i, j + 1)));
        }
    }
    out
}

pub fn mesh_json(grid: &SurfaceGrid, meta: &MeshMeta) -> String {
    let samples = (0..grid.nu())
        .flat_map(|i| (0..grid.nv()).map(move |j| (i, j)))
        .map(|(i, j)| JsonSample {
            u: grid.u[i],
            v: grid.v[j],
            x: grid.at(i, j).0,
        })
        .collect();
    let mesh = JsonMesh {
        schema: SCHEMA,
        tool_version: TOOL_VERSION,
        meta,
        nu: grid.nu(),
        nv: grid.nv(),
        samples,
    };
    serde_json::to_string_pretty(&mesh).expect("mesh serialises")
}

pub fn export_mesh(grid: &SurfaceGrid, format: MeshFormat, meta: &MeshMeta, path: &Path) -> Result<()> {
    let text = match format {
        MeshFormat::Csv => mesh_csv(grid),
        MeshFormat::Obj => mesh_obj(grid),
        MeshFormat::Json => mesh_json(grid, meta),
    };
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Surface of a case sampled on the inclusive `nu × nv` grid; the tilde
/// image for `congruence-tilde`.
pub fn sample_case(spec: &CaseSpec) -> Result<(SurfaceGrid, MeshMeta)> {
    let built = build_case(spec)?;
    if let Some(t) = built.truncation {
        return Err(GeomError::domain(format!(
            "profile integration stopped at u = {} before {}",
            t.reached, t.requested_end
        )));
    }
    let g = &spec.grid;
    let grid = built.surface.sample(g.u_span, g.v_span, g.nu, g.nv)?;
    let family = built.surface.family();
    let (grid, family_name) = if spec.theorem == Theorem::CongruenceTilde {
        (grid.transform_t(), tilde_kind_for(family).name().to_string())
    } else {
        (grid, family.to_string())
    };
    Ok((
        grid,
        MeshMeta {
            family: family_name,
            theorem: spec.theorem.name().to_string(),
            params: spec.params,
        },
    ))
}
