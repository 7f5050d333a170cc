//! Meridian curves `u ↦ (f(u), g(u))` for the three surface families.
//!
//! Minimal meridians come in closed form. Quasi-minimal and constant mean
//! curvature meridians are given implicitly by `f' = φ(f)`, where `φ` is
//! known in closed form; the profile is then produced by integrating that
//! autonomous ODE and recovering `g` from the family's unit-speed rule.
//!
//! Every `±` in the closed forms is an explicit [`BranchSigns`] entry.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::interp::{locate, quintic_hermite, Jet1};
use crate::ode::rk4_step;

/// Smallest admissible radicand on a profile grid.
pub const RADICAND_MARGIN: f64 = 1e-10;
/// Smallest admissible value of `f`.
pub const F_MARGIN: f64 = 1e-8;

/// Meridian family, carrying its unit-speed normalisation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileFamily {
    /// Timelike meridian, `f'² - g'² = -1`.
    Ma,
    /// Spacelike meridian, `f'² - g'² = 1`.
    Mb,
    /// Meridian on the second-type hypersurface, `f'² + g'² = 1`.
    Mpp,
}

impl ProfileFamily {
    /// `g'²` as a function of `f'`: `f'²+1`, `f'²-1` or `1-f'²`.
    pub fn g_prime_sq(self, df: f64) -> f64 {
        match self {
            ProfileFamily::Ma => df * df + 1.0,
            ProfileFamily::Mb => df * df - 1.0,
            ProfileFamily::Mpp => 1.0 - df * df,
        }
    }

    pub fn constraint_residual(self, df: f64, dg: f64) -> f64 {
        match self {
            ProfileFamily::Ma => df * df - dg * dg + 1.0,
            ProfileFamily::Mb => df * df - dg * dg - 1.0,
            ProfileFamily::Mpp => df * df + dg * dg - 1.0,
        }
    }

    /// `g''` implied by the unit-speed rule.
    pub fn g_second(self, df: f64, ddf: f64, dg: f64) -> f64 {
        match self {
            ProfileFamily::Ma | ProfileFamily::Mb => df * ddf / dg,
            ProfileFamily::Mpp => -df * ddf / dg,
        }
    }

    /// `f f'' + f'² + 1` for `Ma`, `f f'' + f'² - 1` otherwise.
    pub fn governing_lhs(self, f: f64, df: f64, ddf: f64) -> f64 {
        match self {
            ProfileFamily::Ma => f * ddf + df * df + 1.0,
            ProfileFamily::Mb | ProfileFamily::Mpp => f * ddf + df * df - 1.0,
        }
    }

    /// Coefficient `q` with `a² + q t²` under the root of the reduced CMC
    /// equation: `4c` for `Ma`, `-4c` for `Mb` and `Mpp`.
    pub fn cmc_coefficient(self, c: f64) -> f64 {
        match self {
            ProfileFamily::Ma => 4.0 * c,
            ProfileFamily::Mb | ProfileFamily::Mpp => -4.0 * c,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProfileFamily::Ma => "ma",
            ProfileFamily::Mb => "mb",
            ProfileFamily::Mpp => "mpp",
        }
    }
}

impl fmt::Display for ProfileFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileFamily {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ma" => Ok(ProfileFamily::Ma),
            "mb" => Ok(ProfileFamily::Mb),
            "mpp" => Ok(ProfileFamily::Mpp),
            other => Err(GeomError::usage(format!(
                "unknown family '{other}' (expected ma, mb or mpp)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[default]
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// The `±` choices of the closed forms.
///
/// * minimal: `phi` is the sign of `f`, `slope` the sign in front of `g`;
/// * quasi-minimal: `phi` is the outer sign of `φ`, `slope` the sign of `a t`;
/// * CMC: `phi` is the outer sign of `φ`, `slope` the sign of the
///   `(t/2)√(a²+qt²)` term and `log_term` the sign of the `ln`/`arcsin` term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchSigns {
    pub phi: Sign,
    pub slope: Sign,
    pub log_term: Sign,
}

impl BranchSigns {
    pub fn new(phi: Sign, slope: Sign, log_term: Sign) -> Self {
        BranchSigns {
            phi,
            slope,
            log_term,
        }
    }

    /// Whether the two inner signs of a CMC antiderivative agree, which is
    /// what makes `b ± ∫√(a²+qt²)dt` an antiderivative at all.
    pub fn is_consistent(&self) -> bool {
        self.slope == self.log_term
    }
}

impl fmt::Display for BranchSigns {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{}",
            self.phi.symbol(),
            self.slope.symbol(),
            self.log_term.symbol()
        )
    }
}

impl FromStr for BranchSigns {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.is_empty() || parts.len() > 3 {
            return Err(GeomError::usage(format!("bad branch signs '{s}'")));
        }
        let mut out = [Sign::Plus; 3];
        for (slot, p) in out.iter_mut().zip(&parts) {
            *slot = match *p {
                "+" | "plus" => Sign::Plus,
                "-" | "minus" => Sign::Minus,
                other => {
                    return Err(GeomError::usage(format!(
                        "bad branch sign '{other}' in '{s}' (expected + or -)"
                    )))
                }
            };
        }
        Ok(BranchSigns::new(out[0], out[1], out[2]))
    }
}

/// Theorem constants. `c` is the integration constant of the quasi-minimal
/// forms and the target `⟨H,H⟩` of the CMC forms; `c0` is the additive
/// constant of `g`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub c0: f64,
    #[serde(default)]
    pub signs: BranchSigns,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    ClosedFormMinimal,
    OdeQuasiMinimal,
    OdeCmc,
    UserSupplied,
}

/// One grid sample of a profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub u: f64,
    pub f: f64,
    pub df: f64,
    pub ddf: f64,
    pub g: f64,
    pub dg: f64,
}

/// Profile values with derivatives at an arbitrary `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfilePoint {
    pub f: f64,
    pub df: f64,
    pub ddf: f64,
    pub g: f64,
    pub dg: f64,
    pub ddg: f64,
}

/// Where an ODE profile stopped short of its requested span.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub requested_end: f64,
    pub reached: f64,
}

/// Closed-form minimal meridian.
#[derive(Clone, Copy, Debug, PartialEq)]
struct MinimalClosedForm {
    family: ProfileFamily,
    a: f64,
    b: f64,
    c0: f64,
    g_sign: f64,
}

impl MinimalClosedForm {
    fn radicand(&self, u: f64) -> f64 {
        match self.family {
            ProfileFamily::Ma => -u * u + 2.0 * self.a * u + self.b,
            ProfileFamily::Mb | ProfileFamily::Mpp => u * u + 2.0 * self.a * u + self.b,
        }
    }

    /// The constant under the root in front of `g`.
    fn g_scale(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        match self.family {
            ProfileFamily::Ma => (a * a + b).sqrt(),
            ProfileFamily::Mb => (a * a - b).sqrt(),
            ProfileFamily::Mpp => (b - a * a).sqrt(),
        }
    }

    fn eval(&self, u: f64) -> ProfilePoint {
        let f = self.radicand(u).sqrt();
        let r = self.g_scale();
        let (df, ddf, g) = match self.family {
            ProfileFamily::Ma => {
                let df = (self.a - u) / f;
                let g = self.g_sign * r * ((u - self.a) / r).asin() + self.c0;
                (df, -(1.0 + df * df) / f, g)
            }
            ProfileFamily::Mb | ProfileFamily::Mpp => {
                let df = (u + self.a) / f;
                let g = self.g_sign * r * (u + self.a + f).abs().ln() + self.c0;
                (df, (1.0 - df * df) / f, g)
            }
        };
        let dg = self.g_sign * r / f;
        ProfilePoint {
            f,
            df,
            ddf,
            g,
            dg,
            ddg: -dg * df / f,
        }
    }
}

/// Sampled meridian `(f, g)` on a uniform `u` grid.
#[derive(Clone, Debug)]
pub struct MeridianProfile {
    family: ProfileFamily,
    params: ProfileParams,
    provenance: Provenance,
    start: f64,
    step: f64,
    samples: Vec<ProfileSample>,
    exact: Option<MinimalClosedForm>,
    truncation: Option<Truncation>,
}

impl MeridianProfile {
    pub fn family(&self) -> ProfileFamily {
        self.family
    }

    pub fn params(&self) -> &ProfileParams {
        &self.params
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn span(&self) -> (f64, f64) {
        (
            self.start,
            self.start + self.step * (self.samples.len() - 1) as f64,
        )
    }

    /// `Some` when ODE integration stopped early.
    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    /// Evaluate at `u`. Closed-form profiles are evaluated exactly; sampled
    /// ones by quintic Hermite interpolation of `(f, f', f'')` and
    /// `(g, g', g'')`.
    pub fn eval(&self, u: f64) -> Result<ProfilePoint> {
        let (cell, s) = locate(u, self.start, self.step, self.samples.len()).ok_or_else(|| {
            let (a, b) = self.span();
            GeomError::domain(format!("u = {u} outside profile grid [{a}, {b}]"))
        })?;
        if let Some(exact) = &self.exact {
            return Ok(exact.eval(u));
        }
        let (l, r) = (&self.samples[cell], &self.samples[cell + 1]);
        let f_jet = |p: &ProfileSample| Jet1 {
            value: p.f,
            d1: p.df,
            d2: p.ddf,
        };
        let g_jet = |p: &ProfileSample| Jet1 {
            value: p.g,
            d1: p.dg,
            d2: self.family.g_second(p.df, p.ddf, p.dg),
        };
        let (f, df, ddf) = quintic_hermite(s, self.step, f_jet(l), f_jet(r));
        let (g, dg, ddg) = quintic_hermite(s, self.step, g_jet(l), g_jet(r));
        Ok(ProfilePoint {
            f,
            df,
            ddf,
            g,
            dg,
            ddg,
        })
    }

    /// Build a profile from a user-supplied `u ↦ (f, f', f'')`. `g` follows
    /// the family rule `g' = √(…)` by composite Simpson quadrature from `g0`.
    pub fn user_supplied(
        family: ProfileFamily,
        u_span: (f64, f64),
        n_samples: usize,
        g0: f64,
        meridian: impl Fn(f64) -> (f64, f64, f64),
    ) -> Result<Self> {
        let (start, step) = uniform_grid(u_span, n_samples)?;
        let dg_of = |u: f64, df: f64| -> Result<f64> {
            let rad = family.g_prime_sq(df);
            if rad < 0.0 {
                return Err(GeomError::domain(format!(
                    "g' radicand {rad:e} < 0 at u = {u} for family {family}"
                )));
            }
            Ok(rad.sqrt())
        };
        let mut samples = Vec::with_capacity(n_samples);
        let mut g = g0;
        for k in 0..n_samples {
            let u = start + k as f64 * step;
            let (f, df, ddf) = meridian(u);
            if !(f > F_MARGIN) || !f.is_finite() {
                return Err(GeomError::domain(format!("f = {f} at u = {u} is not positive")));
            }
            let dg = dg_of(u, df)?;
            if k > 0 {
                let prev: &ProfileSample = &samples[k - 1];
                let mid = 0.5 * (prev.u + u);
                let dg_mid = dg_of(mid, meridian(mid).1)?;
                g += step / 6.0 * (prev.dg + 4.0 * dg_mid + dg);
            }
            samples.push(ProfileSample {
                u,
                f,
                df,
                ddf,
                g,
                dg,
            });
        }
        Ok(MeridianProfile {
            family,
            params: ProfileParams {
                c0: g0,
                ..ProfileParams::default()
            },
            provenance: Provenance::UserSupplied,
            start,
            step,
            samples,
            exact: None,
            truncation: None,
        })
    }
}

fn uniform_grid(u_span: (f64, f64), n_samples: usize) -> Result<(f64, f64)> {
    let (a, b) = u_span;
    if n_samples < 2 {
        return Err(GeomError::usage("a profile needs at least 2 samples"));
    }
    if !(a.is_finite() && b.is_finite()) || !(b > a) {
        return Err(GeomError::usage(format!("invalid u span [{a}, {b}]")));
    }
    Ok((a, (b - a) / (n_samples - 1) as f64))
}

/// Closed-form minimal meridian of the given family, sampled on `u_span`.
///
/// Admissibility: `Ma` needs `a²+b > 0`, `Mb` needs `a²-b > 0`, `Mpp` needs
/// `b-a² > 0`; the span must keep the radicand of `f` above the margin.
/// `signs.phi` is the sign of `f`, which must be `+` (profiles have `f > 0`).
pub fn minimal_profile(
    family: ProfileFamily,
    params: ProfileParams,
    u_span: (f64, f64),
    n_samples: usize,
) -> Result<MeridianProfile> {
    let (a, b) = (params.a, params.b);
    let disc = match family {
        ProfileFamily::Ma => a * a + b,
        ProfileFamily::Mb => a * a - b,
        ProfileFamily::Mpp => b - a * a,
    };
    if !(disc > 0.0) {
        let cond = match family {
            ProfileFamily::Ma => "a^2 + b > 0",
            ProfileFamily::Mb => "a^2 - b > 0",
            ProfileFamily::Mpp => "b - a^2 > 0",
        };
        return Err(GeomError::domain(format!(
            "minimal {family} profile needs {cond}; got a = {a}, b = {b}"
        )));
    }
    if params.signs.phi == Sign::Minus {
        return Err(GeomError::domain(
            "minimal profile with negative f branch: profiles require f > 0",
        ));
    }
    let (start, step) = uniform_grid(u_span, n_samples)?;
    let form = MinimalClosedForm {
        family,
        a,
        b,
        c0: params.c0,
        g_sign: params.signs.slope.value(),
    };
    let min_rad = F_MARGIN * F_MARGIN;
    for (label, u) in [("start", u_span.0), ("end", u_span.1)] {
        let r = form.radicand(u);
        if !(r > RADICAND_MARGIN.max(min_rad)) {
            return Err(GeomError::domain(format!(
                "u span {label} {u} reaches the f radicand zero (radicand = {r:e})"
            )));
        }
    }
    if family != ProfileFamily::Ma && u_span.0 < -a && -a < u_span.1 {
        let r = form.radicand(-a);
        if !(r > RADICAND_MARGIN) {
            return Err(GeomError::domain(format!(
                "f radicand vanishes inside the span near u = {}",
                -a
            )));
        }
    }
    let samples = (0..n_samples)
        .map(|k| {
            let u = start + k as f64 * step;
            let p = form.eval(u);
            ProfileSample {
                u,
                f: p.f,
                df: p.df,
                ddf: p.ddf,
                g: p.g,
                dg: p.dg,
            }
        })
        .collect();
    Ok(MeridianProfile {
        family,
        params,
        provenance: Provenance::ClosedFormMinimal,
        start,
        step,
        samples,
        exact: Some(form),
        truncation: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhiKind {
    Quasi,
    Cmc,
}

/// Closed-form slope function `φ` with `f' = φ(f)`.
///
/// Internally `φ` is written through `Z(t)`:
///
/// * quasi-minimal: `Z = c ± a t`;
/// * CMC: `Z = b ± (t/2)√(a²+qt²) ± J(t)`, where `J` is the `ln` term for
///   `q > 0` and the `arcsin` term for `q < 0` (see
///   [`ProfileFamily::cmc_coefficient`]);
///
/// and `φ = ±(1/t)√(Z² - t²)` (`Ma`), `±(1/t)√(Z² + t²)` (`Mb`),
/// `±(1/t)√(t² - Z²)` (`Mpp`). The substitution `z = |Z|/t` is the function
/// satisfying the reduced linear equation.
#[derive(Clone, Debug)]
pub struct PhiFunction {
    kind: PhiKind,
    family: ProfileFamily,
    params: ProfileParams,
    window: (f64, f64),
    domain: Vec<(f64, f64)>,
    degenerate: bool,
}

const DOMAIN_SCAN_POINTS: usize = 4000;
const T_MIN: f64 = 1e-8;

impl PhiFunction {
    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    pub fn family(&self) -> ProfileFamily {
        self.family
    }

    pub fn params(&self) -> &ProfileParams {
        &self.params
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// Admissible `t` intervals inside the window.
    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    /// The `φ` radicand vanishes identically (for example `c = 0`, `|a| = 1`
    /// in the quasi-minimal `Ma` case), so `φ ≡ 0`.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    fn cmc_q(&self) -> f64 {
        self.family.cmc_coefficient(self.params.c)
    }

    /// `Z(t)`, or `None` where the CMC antiderivative is undefined.
    pub fn z_numerator(&self, t: f64) -> Option<f64> {
        let p = &self.params;
        let s = &p.signs;
        match self.kind {
            PhiKind::Quasi => Some(p.c + s.slope.value() * p.a * t),
            PhiKind::Cmc => {
                let q = self.cmc_q();
                let a2 = p.a * p.a;
                let s2 = a2 + q * t * t;
                if s2 < 0.0 {
                    return None;
                }
                let root = s2.sqrt();
                let half = 0.5 * t * root;
                let tail = if q > 0.0 {
                    let sq = q.sqrt();
                    a2 / (2.0 * sq) * (sq * t + root).abs().ln()
                } else {
                    let sp = (-q).sqrt();
                    let arg = sp * t / p.a.abs();
                    if arg.abs() > 1.0 {
                        return None;
                    }
                    a2 / (2.0 * sp) * arg.asin()
                };
                Some(p.b + s.slope.value() * half + s.log_term.value() * tail)
            }
        }
    }

    /// `Z²/t²`, the squared substitution variable.
    fn z_ratio_sq(&self, t: f64) -> Option<f64> {
        self.z_numerator(t).map(|z| (z / t) * (z / t))
    }

    /// Radicand of `φ` in `φ²` units: `φ² = Z²/t² ∓ 1` or `1 - Z²/t²`.
    fn phi_sq(&self, t: f64) -> Option<f64> {
        let r = self.z_ratio_sq(t)?;
        Some(match self.family {
            ProfileFamily::Ma => r - 1.0,
            ProfileFamily::Mb => r + 1.0,
            ProfileFamily::Mpp => 1.0 - r,
        })
    }

    /// Signed admissibility margin: the smallest of the `φ` radicand and the
    /// `g'` radicand (both in `φ²` units); negative outside the domain.
    pub fn margin(&self, t: f64) -> f64 {
        if !(t >= T_MIN) || !t.is_finite() {
            return -1.0;
        }
        let Some(r) = self.z_ratio_sq(t) else {
            return -1.0;
        };
        let phi_part = if self.degenerate {
            f64::INFINITY
        } else {
            match self.family {
                ProfileFamily::Ma => r - 1.0,
                ProfileFamily::Mb => f64::INFINITY,
                ProfileFamily::Mpp => 1.0 - r,
            }
        };
        let g_part = match self.family {
            ProfileFamily::Ma => f64::INFINITY,
            ProfileFamily::Mb | ProfileFamily::Mpp => r,
        };
        phi_part.min(g_part)
    }

    /// Index of the domain interval holding `t`.
    pub fn interval_of(&self, t: f64) -> Option<usize> {
        if !self.is_admissible(t) {
            return None;
        }
        self.domain.iter().position(|&(lo, hi)| lo <= t && t <= hi)
    }

    pub fn is_admissible(&self, t: f64) -> bool {
        self.margin(t) >= RADICAND_MARGIN
    }

    /// `φ(t)`, or `None` outside the admissible domain.
    pub fn eval(&self, t: f64) -> Option<f64> {
        if !self.is_admissible(t) {
            return None;
        }
        Some(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        let sq = self.phi_sq(t).unwrap_or(0.0).max(0.0);
        self.params.signs.phi.value() * sq.sqrt()
    }

    /// `φ'(t)` by central differences with `h = 1e-6·max(1, t)`, falling
    /// back to a one-sided quotient next to the domain boundary.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        let h = 1e-6 * t.max(1.0);
        let mid = self.eval(t)?;
        match (self.eval(t + h), self.eval(t - h)) {
            (Some(p), Some(m)) => Some((p - m) / (2.0 * h)),
            (Some(p), None) => Some((p - mid) / h),
            (None, Some(m)) => Some((mid - m) / h),
            (None, None) => None,
        }
    }

    /// `φ φ' = ½ (φ²)'`, differencing the smooth radicand rather than `φ`,
    /// whose derivative blows up where `φ → 0`. Five-point stencil, falling
    /// back to a narrow central or one-sided quotient where `Z` ends.
    pub fn half_sq_derivative(&self, t: f64) -> Option<f64> {
        if self.degenerate {
            return Some(0.0);
        }
        let q = |x: f64| self.phi_sq(x);
        let wide = 1e-3 * t.max(1.0);
        if let (Some(p2), Some(p1), Some(m1), Some(m2)) =
            (q(t + 2.0 * wide), q(t + wide), q(t - wide), q(t - 2.0 * wide))
        {
            return Some((8.0 * (p1 - m1) - (p2 - m2)) / (24.0 * wide));
        }
        let h = 1e-6 * t.max(1.0);
        let mid = q(t)?;
        match (q(t + h), q(t - h)) {
            (Some(p), Some(m)) => Some(0.25 * (p - m) / h),
            (Some(p), None) => Some(0.5 * (p - mid) / h),
            (None, Some(m)) => Some(0.5 * (mid - m) / h),
            (None, None) => None,
        }
    }

    /// Substitution variable computed from `φ`: `√(φ²+1)` (`Ma`),
    /// `√(φ²-1)` (`Mb`), `√(1-φ²)` (`Mpp`).
    pub fn substitution(&self, t: f64) -> Option<f64> {
        let phi = self.eval(t)?;
        let rad = self.family.g_prime_sq(phi);
        Some(rad.max(0.0).sqrt())
    }

    /// Right-hand side of the reduced equation `z' + z/t = ±a/t` (quasi) or
    /// `±√(a²+qt²)/t` (CMC). The `±` is the `slope` branch times the sign of
    /// `Z`, which is what `z = |Z|/t` carries.
    pub fn reduced_rhs(&self, t: f64) -> Option<f64> {
        let z = self.z_numerator(t)?;
        let sign = z.signum() * self.params.signs.slope.value();
        let p = &self.params;
        let magnitude = match self.kind {
            PhiKind::Quasi => p.a,
            PhiKind::Cmc => {
                let s2 = p.a * p.a + self.cmc_q() * t * t;
                if s2 < 0.0 {
                    return None;
                }
                s2.sqrt()
            }
        };
        Some(sign * magnitude / t)
    }
}

/// Build `φ` for the given theorem family, computing its admissible domain
/// inside `window` by scanning the margin and bisecting every sign change.
pub fn phi_closed_form(
    kind: PhiKind,
    family: ProfileFamily,
    params: ProfileParams,
    window: (f64, f64),
) -> Result<PhiFunction> {
    if params.a == 0.0 || !params.a.is_finite() {
        return Err(GeomError::usage(
            "the curve curvature a must be a non-zero constant",
        ));
    }
    if kind == PhiKind::Cmc && (params.c == 0.0 || !params.c.is_finite()) {
        return Err(GeomError::usage("CMC profiles need c != 0"));
    }
    let (lo, hi) = (window.0.max(T_MIN), window.1);
    if !(hi > lo) || !hi.is_finite() {
        return Err(GeomError::usage(format!(
            "invalid t window [{}, {}]",
            window.0, window.1
        )));
    }
    let mut phi = PhiFunction {
        kind,
        family,
        params,
        window: (lo, hi),
        domain: Vec::new(),
        degenerate: false,
    };

    let grid: Vec<f64> = (0..=DOMAIN_SCAN_POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / DOMAIN_SCAN_POINTS as f64)
        .collect();
    if family != ProfileFamily::Mb {
        let identically_zero = grid.iter().all(|&t| {
            phi.phi_sq(t)
                .is_some_and(|r| r.abs() <= 1e-12 * phi.z_ratio_sq(t).unwrap_or(1.0).max(1.0))
        });
        phi.degenerate = identically_zero;
    }

    let inside = |t: f64| phi.margin(t) >= RADICAND_MARGIN;
    let refine = |mut a: f64, mut b: f64| {
        // invariant: inside(a) != inside(b)
        let a_in = inside(a);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if inside(m) == a_in {
                a = m;
            } else {
                b = m;
            }
        }
        if a_in {
            a
        } else {
            b
        }
    };
    let mut domain = Vec::new();
    let mut open: Option<f64> = inside(grid[0]).then_some(grid[0]);
    for w in grid.windows(2) {
        let (p, q) = (w[0], w[1]);
        match (inside(p), inside(q)) {
            (false, true) => open = Some(refine(p, q)),
            (true, false) => {
                let end = refine(p, q);
                if let Some(start) = open.take() {
                    if end > start {
                        domain.push((start, end));
                    }
                }
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        domain.push((start, hi));
    }
    if family != ProfileFamily::Ma {
        // g' = |Z|/t: a sign change of Z is a g' zero that the squared
        // margin only touches, so split the domain there
        let sign = |t: f64| phi.z_numerator(t).map_or(0.0, f64::signum);
        let mut split = Vec::new();
        for &(start, end) in &domain {
            let mut from = start;
            for w in grid.windows(2) {
                let (p, q) = (w[0].max(start), w[1].min(end));
                if !(q > p) || sign(p) * sign(q) >= 0.0 {
                    continue;
                }
                let (mut a, mut b) = (p, q);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if sign(m) == sign(a) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let left = if inside(p) { refine(p, a) } else { p };
                let right = if inside(q) { refine(b, q) } else { q };
                if left > from {
                    split.push((from, left));
                }
                from = right;
            }
            if end > from {
                split.push((from, end));
            }
        }
        domain = split;
    }
    if domain.is_empty() {
        return Err(GeomError::domain(format!(
            "phi has an empty admissible domain in [{lo}, {hi}] for {family} {kind:?} with {params:?}"
        )));
    }
    phi.domain = domain;
    Ok(phi)
}

/// Parameters whose `Z(t)` passes through `ρ·t0`, so that `z(t0) = |ρ|`.
///
/// For quasi-minimal forms this solves for `c` (with `c_target` ignored);
/// for CMC forms it keeps `c = c_target` and solves for `b`. Choosing
/// `|ρ| > 1` (`Ma`), `ρ ≠ 0` (`Mb`) or `0 < |ρ| < 1` (`Mpp`) makes `t0`
/// admissible.
pub fn anchored_params(
    kind: PhiKind,
    family: ProfileFamily,
    a: f64,
    c_target: f64,
    signs: BranchSigns,
    t0: f64,
    rho: f64,
) -> Result<ProfileParams> {
    let mut p = ProfileParams {
        a,
        b: 0.0,
        c: if kind == PhiKind::Cmc { c_target } else { 0.0 },
        c0: 0.0,
        signs,
    };
    let probe = PhiFunction {
        kind,
        family,
        params: p,
        window: (t0, t0),
        domain: Vec::new(),
        degenerate: false,
    };
    let z0 = probe.z_numerator(t0).ok_or_else(|| {
        GeomError::domain(format!("t0 = {t0} is outside the CMC antiderivative's domain"))
    })?;
    match kind {
        PhiKind::Quasi => p.c = rho * t0 - z0,
        PhiKind::Cmc => p.b = rho * t0 - z0,
    }
    Ok(p)
}

/// A Runge-Kutta stage left the admissible domain of `φ`.
#[derive(Debug)]
struct LeftDomain;

/// Integrate `f' = φ(f)` from `f(u_span.0) = f0` with RK4, recovering `g`
/// by per-cell Simpson quadrature of the family rule.
///
/// The stepper runs on the equivalent regular system `f' = p`,
/// `p' = ½ (φ²)'(f)` with `p(0) = φ(f0)`, which stays smooth where `φ → 0`;
/// `p² = φ(f)²` is then a conserved quantity whose drift the governing
/// residual reports.
///
/// Integration stops early, recording a [`Truncation`], as soon as a stage
/// leaves the domain interval of `φ` holding `f0`. Intervals are split
/// where `Z` changes sign, so `g'` never passes through zero.
pub fn integrate_profile(
    phi: &PhiFunction,
    f0: f64,
    u_span: (f64, f64),
    step: f64,
    g0: f64,
) -> Result<MeridianProfile> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(GeomError::usage(format!("step must be positive, got {step}")));
    }
    let (u0, u1) = u_span;
    if !(u0.is_finite() && u1.is_finite()) || !(u1 > u0) {
        return Err(GeomError::usage(format!("invalid u span [{u0}, {u1}]")));
    }
    if !(f0 > F_MARGIN) || !phi.is_admissible(f0) {
        return Err(GeomError::domain(format!(
            "f0 = {f0} lies outside the admissible domain {:?}",
            phi.domain()
        )));
    }
    let family = phi.family();
    // the profile stays on the domain interval it starts on
    let home = phi.interval_of(f0).ok_or_else(|| {
        GeomError::domain(format!("f0 = {f0} lies outside the admissible domain {:?}", phi.domain()))
    })?;
    let on_home = |f: f64| phi.interval_of(f) == Some(home);
    let n = ((u1 - u0) / step - 1e-9).ceil().max(1.0) as usize;
    let h = (u1 - u0) / n as f64;

    let branch = phi.params.signs.phi.value();
    let sample_at = |u: f64, f: f64, df: f64, g: f64| -> Option<ProfileSample> {
        // past a turning point f' has left the chosen branch of φ
        if !(df * branch >= 0.0) {
            return None;
        }
        let ddf = phi.half_sq_derivative(f)?;
        let dg = family.g_prime_sq(df).max(0.0).sqrt();
        Some(ProfileSample {
            u,
            f,
            df,
            ddf,
            g,
            dg,
        })
    };
    let df0 = phi
        .eval(f0)
        .ok_or_else(|| GeomError::domain(format!("phi is not evaluable at f0 = {f0}")))?;
    let first = sample_at(u0, f0, df0, g0)
        .ok_or_else(|| GeomError::domain(format!("phi is not evaluable at f0 = {f0}")))?;
    let mut samples = vec![first];
    let mut truncation = None;
    for k in 0..n {
        let prev = samples[k];
        let next = rk4_step(prev.u, &[prev.f, prev.df], h, |_, y| {
            if !on_home(y[0]) {
                return Err(LeftDomain);
            }
            phi.half_sq_derivative(y[0]).map(|a| [y[1], a]).ok_or(LeftDomain)
        });
        let u = u0 + (k + 1) as f64 * h;
        let candidate = match next {
            Ok([f, df]) if f > F_MARGIN && on_home(f) => sample_at(u, f, df, 0.0),
            Ok(_) | Err(LeftDomain) => None,
        };
        let Some(mut s) = candidate else {
            truncation = Some(Truncation {
                requested_end: u1,
                reached: prev.u,
            });
            break;
        };
        // Simpson on the cell, with f at the midpoint from the Hermite
        // interpolant of the two end jets
        let jet = |p: &ProfileSample| Jet1 {
            value: p.f,
            d1: p.df,
            d2: p.ddf,
        };
        let (_, df_mid, _) = quintic_hermite(0.5, h, jet(&prev), jet(&s));
        let dg_mid = family.g_prime_sq(df_mid).max(0.0).sqrt();
        s.g = prev.g + h / 6.0 * (prev.dg + 4.0 * dg_mid + s.dg);
        samples.push(s);
    }
    if samples.len() < 2 {
        return Err(GeomError::domain(format!(
            "profile leaves the admissible domain within the first step from f0 = {f0}"
        )));
    }
    Ok(MeridianProfile {
        family,
        params: phi.params,
        provenance: match phi.kind() {
            PhiKind::Quasi => Provenance::OdeQuasiMinimal,
            PhiKind::Cmc => Provenance::OdeCmc,
        },
        start: u0,
        step: h,
        samples,
        exact: None,
        truncation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResidualKind {
    Minimal,
    Quasi,
    Cmc,
}

/// Per-sample residuals returned by [`profile_residuals`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProfileResiduals {
    pub governing: Vec<f64>,
    pub constraint: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ProfileResiduals {
    pub fn max_governing(&self) -> f64 {
        self.governing.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn max_constraint(&self) -> f64 {
        self.constraint.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Governing-equation and unit-speed residuals at every sample.
///
/// With `L = f f'' + f'² ± 1` and `Q = g'²` from the family rule:
///
/// * minimal: `L`;
/// * quasi-minimal: `|L| - |a|√Q` (the signed equation `L = ±a√Q`);
/// * CMC: `L² = Q(a² + q f²)` with `q` from [`ProfileFamily::cmc_coefficient`],
///   reported as `(L² - R)/(|L| + √R)` with `R = Q(a² + q f²)`, i.e.
///   `|L| - √R` whenever `R ≥ 0`.
///
/// A kind that does not match the profile's provenance is still evaluated
/// and reported in `warnings`.
pub fn profile_residuals(
    profile: &MeridianProfile,
    kind: ResidualKind,
    params: &ProfileParams,
) -> ProfileResiduals {
    let family = profile.family();
    let mut warnings = Vec::new();
    let expected = match profile.provenance() {
        Provenance::ClosedFormMinimal => Some(ResidualKind::Minimal),
        Provenance::OdeQuasiMinimal => Some(ResidualKind::Quasi),
        Provenance::OdeCmc => Some(ResidualKind::Cmc),
        Provenance::UserSupplied => None,
    };
    if let Some(e) = expected {
        if e != kind {
            warnings.push(format!(
                "residual kind {kind:?} does not match profile provenance {:?}",
                profile.provenance()
            ));
        }
    }
    let mut governing = Vec::with_capacity(profile.samples().len());
    let mut constraint = Vec::with_capacity(profile.samples().len());
    for smp in profile.samples() {
        governing.push(governing_residual(family, kind, params, smp.f, smp.df, smp.ddf));
        constraint.push(family.constraint_residual(smp.df, smp.dg));
    }
    ProfileResiduals {
        governing,
        constraint,
        warnings,
    }
}

/// Governing residual of one jet `(f, f', f'')`; see [`profile_residuals`].
pub fn governing_residual(
    family: ProfileFamily,
    kind: ResidualKind,
    params: &ProfileParams,
    f: f64,
    df: f64,
    ddf: f64,
) -> f64 {
    let l = family.governing_lhs(f, df, ddf);
    let q = family.g_prime_sq(df);
    match kind {
        ResidualKind::Minimal => l,
        ResidualKind::Quasi => l.abs() - params.a.abs() * q.max(0.0).sqrt(),
        ResidualKind::Cmc => {
            let r = q * (params.a * params.a + family.cmc_coefficient(params.c) * f * f);
            let denom = l.abs() + r.max(0.0).sqrt();
            if denom > 0.0 {
                (l * l - r) / denom
            } else {
                l * l - r
            }
        }
    }
}

/// Governing residual of the interpolated profile at every cell midpoint,
/// where it also picks up the interpolation error.
pub fn midpoint_residuals(
    profile: &MeridianProfile,
    kind: ResidualKind,
    params: &ProfileParams,
) -> Result<Vec<f64>> {
    profile
        .samples()
        .windows(2)
        .map(|w| {
            let x = profile.eval(0.5 * (w[0].u + w[1].u))?;
            Ok(governing_residual(profile.family(), kind, params, x.f, x.df, x.ddf))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(a: f64, b: f64, c: f64) -> ProfileParams {
        ProfileParams {
            a,
            b,
            c,
            c0: 0.0,
            signs: BranchSigns::default(),
        }
    }

    #[test]
    fn minimal_closed_form_values() {
        let p = minimal_profile(ProfileFamily::Ma, params(0.0, 1.0, 0.0), (-0.9, 0.9), 181).unwrap();
        let x = p.eval(0.5).unwrap();
        assert!((x.f - 0.8660254037844386).abs() < 1e-12);
        assert!((x.g - std::f64::consts::FRAC_PI_6).abs() < 1e-12);

        let p = minimal_profile(ProfileFamily::Mb, params(2.0, 1.0, 0.0), (0.0, 2.0), 201).unwrap();
        let x = p.eval(1.0).unwrap();
        assert!((x.f - 2.449489742783178).abs() < 1e-12);
        assert!((x.g - 2.9367302131762996).abs() < 1e-12);

        let p = minimal_profile(ProfileFamily::Mpp, params(0.0, 1.0, 0.0), (-1.0, 2.0), 301).unwrap();
        let x = p.eval(1.0).unwrap();
        assert!((x.f - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((x.g - 0.8813735870195429).abs() < 1e-12);
    }

    #[test]
    fn minimal_closed_forms_solve_their_equations() {
        let cases = [
            (ProfileFamily::Ma, params(0.0, 1.0, 0.0), (-0.8, 0.8)),
            (ProfileFamily::Ma, params(0.4, 0.7, 0.0), (-0.3, 1.0)),
            (ProfileFamily::Mb, params(2.0, 1.0, 0.0), (0.0, 2.0)),
            (ProfileFamily::Mpp, params(0.5, 1.0, 0.0), (-2.0, 2.0)),
        ];
        for (family, p, span) in cases {
            let prof = minimal_profile(family, p, span, 401).unwrap();
            let res = profile_residuals(&prof, ResidualKind::Minimal, &p);
            assert!(res.max_governing() <= 1e-10, "{family}: {:e}", res.max_governing());
            assert!(res.max_constraint() <= 1e-8, "{family}: {:e}", res.max_constraint());
            assert!(res.warnings.is_empty());
        }
    }

    #[test]
    fn minimal_g_derivative_matches_quadrature() {
        // finite differences of g against the closed-form g'
        let p = params(0.3, 2.0, 0.0);
        for family in [ProfileFamily::Ma, ProfileFamily::Mpp] {
            let prof = minimal_profile(family, p, (-0.5, 0.9), 101).unwrap();
            for u in [-0.3, 0.1, 0.7] {
                let h = 1e-5;
                let fd = (prof.eval(u + h).unwrap().g - prof.eval(u - h).unwrap().g) / (2.0 * h);
                assert!((fd - prof.eval(u).unwrap().dg).abs() < 1e-8, "{family} at {u}");
            }
        }
    }

    #[test]
    fn minimal_rejects_inadmissible() {
        assert!(matches!(
            minimal_profile(ProfileFamily::Mb, params(1.0, 2.0, 0.0), (0.0, 1.0), 10),
            Err(GeomError::Domain(_))
        ));
        assert!(matches!(
            minimal_profile(ProfileFamily::Mpp, params(2.0, 1.0, 0.0), (0.0, 1.0), 10),
            Err(GeomError::Domain(_))
        ));
        // Ma with a = 0, b = 1 lives on |u| < 1
        let err = minimal_profile(ProfileFamily::Ma, params(0.0, 1.0, 0.0), (-1.0, 0.5), 10);
        assert!(matches!(err, Err(GeomError::Domain(m)) if m.contains("start")));
        let mut neg = params(0.0, 1.0, 0.0);
        neg.signs.phi = Sign::Minus;
        assert!(minimal_profile(ProfileFamily::Ma, neg, (-0.5, 0.5), 10).is_err());
        // Mb radicand vanishes inside the span
        assert!(minimal_profile(ProfileFamily::Mb, params(1.0, 0.5, 0.0), (-2.0, 0.0), 10).is_err());
    }

    #[test]
    fn quasi_phi_example() {
        let phi = phi_closed_form(PhiKind::Quasi, ProfileFamily::Ma, params(1.0, 0.0, 2.0), (0.01, 20.0))
            .unwrap();
        assert!((phi.eval(3.0).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert!(!phi.is_degenerate());
    }

    #[test]
    fn degenerate_quasi_phi() {
        let phi = phi_closed_form(PhiKind::Quasi, ProfileFamily::Ma, params(1.0, 0.0, 0.0), (0.1, 10.0))
            .unwrap();
        assert!(phi.is_degenerate());
        assert_eq!(phi.eval(2.0), Some(0.0));
        let prof = integrate_profile(&phi, 2.0, (0.0, 1.0), 1e-3, 0.5).unwrap();
        for s in prof.samples() {
            assert_eq!(s.f, 2.0);
            assert!((s.g - 0.5 - s.u).abs() < 1e-12);
        }
    }

    #[test]
    fn cmc_phi_example() {
        let phi = phi_closed_form(PhiKind::Cmc, ProfileFamily::Ma, params(2.0, 0.0, 1.0), (0.01, 5.0))
            .unwrap();
        // z = √8/2 + ln(2 + √8), φ = √(z² - 1)
        let z = 8f64.sqrt() / 2.0 + (2.0 + 8f64.sqrt()).ln();
        assert!((z - 2.9887343299525835).abs() < 1e-14);
        assert!((phi.eval(1.0).unwrap() - 2.8164752608601265).abs() < 1e-12);
    }

    #[test]
    fn phi_errors() {
        assert!(matches!(
            phi_closed_form(PhiKind::Quasi, ProfileFamily::Ma, params(0.0, 0.0, 2.0), (0.1, 5.0)),
            Err(GeomError::Usage(_))
        ));
        assert!(matches!(
            phi_closed_form(PhiKind::Cmc, ProfileFamily::Ma, params(1.0, 0.0, 0.0), (0.1, 5.0)),
            Err(GeomError::Usage(_))
        ));
        // Mpp quasi with |c + a t| >= t everywhere: (3 + 2t)² > t²
        assert!(matches!(
            phi_closed_form(PhiKind::Quasi, ProfileFamily::Mpp, params(2.0, 0.0, 3.0), (0.1, 5.0)),
            Err(GeomError::Domain(_))
        ));
    }

    #[test]
    fn domain_edges_are_bisected() {
        // Mpp quasi, a = 0.5, c = 0.5: admissible iff 0.5 + 0.5 t < t, i.e. t > 1
        let phi = phi_closed_form(PhiKind::Quasi, ProfileFamily::Mpp, params(0.5, 0.0, 0.5), (0.1, 6.0))
            .unwrap();
        let d = phi.domain();
        assert_eq!(d.len(), 1);
        assert!((d[0].0 - 1.0).abs() < 1e-8, "{d:?}");
        assert_eq!(d[0].1, 6.0);
        // CMC Ma, c < 0: arcsin branch caps t at |a| / (2√-c)
        let phi = phi_closed_form(PhiKind::Cmc, ProfileFamily::Ma, params(2.0, 1.0, -0.5), (0.01, 5.0))
            .unwrap();
        let cap = 2.0 / (2.0 * 0.5f64.sqrt());
        let last = phi.domain().last().unwrap().1;
        assert!(last <= cap + 1e-12 && last > cap - 1e-6, "{:?}", phi.domain());
    }

    #[test]
    fn quasi_integration_residuals() {
        let p = params(1.0, 0.0, 2.0);
        let phi = phi_closed_form(PhiKind::Quasi, ProfileFamily::Ma, p, (0.01, 50.0)).unwrap();
        let prof = integrate_profile(&phi, 3.0, (0.0, 1.0), 1e-3, 0.0).unwrap();
        assert!(prof.truncation().is_none());
        let res = profile_residuals(&prof, ResidualKind::Quasi, &p);
        assert!(res.max_governing() <= 1e-6, "{:e}", res.max_governing());
        assert!(res.max_constraint() <= 1e-8, "{:e}", res.max_constraint());
        assert!(res.warnings.is_empty());
    }

    #[test]
    fn integration_truncates_at_domain_edge() {
        // CMC Ma c < 0 with f growing into the arcsin cap at t ≈ 1.414
        let p = params(2.0, 1.0, -0.5);
        let phi = phi_closed_form(PhiKind::Cmc, ProfileFamily::Ma, p, (0.01, 5.0)).unwrap();
        let prof = integrate_profile(&phi, 1.0, (0.0, 5.0), 1e-3, 0.0).unwrap();
        let t = prof.truncation().expect("must truncate");
        assert!(t.reached < 5.0);
        assert!(prof.samples().last().unwrap().f < 1.4143);
    }

    #[test]
    fn integration_errors() {
        let p = params(0.5, 0.0, 0.5);
        let phi = phi_closed_form(PhiKind::Quasi, ProfileFamily::Mpp, p, (0.1, 6.0)).unwrap();
        assert!(matches!(
            integrate_profile(&phi, 0.5, (0.0, 1.0), 1e-3, 0.0),
            Err(GeomError::Domain(_))
        ));
        assert!(matches!(
            integrate_profile(&phi, 3.0, (0.0, 1.0), 0.0, 0.0),
            Err(GeomError::Usage(_))
        ));
    }

    #[test]
    fn negative_control_residual() {
        let prof = MeridianProfile::user_supplied(ProfileFamily::Ma, (0.0, 2.0), 21, 0.0, |u| {
            (u + 2.0, 1.0, 0.0)
        })
        .unwrap();
        let res = profile_residuals(&prof, ResidualKind::Minimal, &params(0.0, 1.0, 0.0));
        let at_one = prof.samples().iter().position(|s| (s.u - 1.0).abs() < 1e-12).unwrap();
        assert_eq!(res.governing[at_one], 2.0);
        assert!(res.governing.iter().all(|r| *r > 0.5));
    }

    #[test]
    fn mismatched_kind_warns() {
        let p = params(0.0, 1.0, 0.0);
        let prof = minimal_profile(ProfileFamily::Ma, p, (-0.5, 0.5), 11).unwrap();
        let res = profile_residuals(&prof, ResidualKind::Cmc, &p);
        assert_eq!(res.warnings.len(), 1);
        assert_eq!(res.governing.len(), 11);
    }

    fn identity_cases() -> Vec<(PhiKind, ProfileFamily, ProfileParams)> {
        let with = |a, b, c, slope| ProfileParams {
            a,
            b,
            c,
            c0: 0.0,
            signs: BranchSigns::new(Sign::Plus, slope, slope),
        };
        vec![
            (PhiKind::Quasi, ProfileFamily::Ma, with(1.0, 0.0, 2.0, Sign::Plus)),
            (PhiKind::Quasi, ProfileFamily::Ma, with(-0.7, 0.0, 3.0, Sign::Minus)),
            (PhiKind::Quasi, ProfileFamily::Mb, with(1.0, 0.0, 1.0, Sign::Plus)),
            (PhiKind::Quasi, ProfileFamily::Mpp, with(0.5, 0.0, 0.5, Sign::Plus)),
            (PhiKind::Cmc, ProfileFamily::Ma, with(2.0, 0.0, 1.0, Sign::Plus)),
            (PhiKind::Cmc, ProfileFamily::Ma, with(2.0, 1.0, -0.5, Sign::Plus)),
            (PhiKind::Cmc, ProfileFamily::Mb, with(1.5, 0.3, 0.5, Sign::Plus)),
            (PhiKind::Cmc, ProfileFamily::Mb, with(1.0, 0.5, -1.0, Sign::Minus)),
            (PhiKind::Cmc, ProfileFamily::Mpp, with(3.0, 0.2, 0.5, Sign::Minus)),
            (PhiKind::Cmc, ProfileFamily::Mpp, with(1.0, 0.1, -0.5, Sign::Minus)),
        ]
    }

    #[test]
    fn substitution_satisfies_reduced_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (kind, family, p) in identity_cases() {
            let phi = phi_closed_form(kind, family, p, (0.05, 6.0)).unwrap();
            let intervals: Vec<(f64, f64)> = phi
                .domain()
                .iter()
                .map(|(lo, hi)| (lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo)))
                .collect();
            let mut checked = 0;
            while checked < 50 {
                let (lo, hi) = intervals[rng.gen_range(0..intervals.len())];
                let t = rng.gen_range(lo..hi);
                // five-point central stencil scaled to t, since z ~ 1/t near 0
                let h = 1e-3 * t;
                let z_at = |x: f64| phi.substitution(x);
                let (Some(zp2), Some(zp), Some(zm), Some(zm2), Some(z), Some(rhs)) = (
                    z_at(t + 2.0 * h),
                    z_at(t + h),
                    z_at(t - h),
                    z_at(t - 2.0 * h),
                    z_at(t),
                    phi.reduced_rhs(t),
                ) else {
                    continue;
                };
                let dz = (8.0 * (zp - zm) - (zp2 - zm2)) / (12.0 * h);
                let lhs = dz + z / t;
                assert!(
                    (lhs - rhs).abs() <= 1e-7,
                    "{kind:?} {family} {p:?} at t={t}: {lhs} vs {rhs}"
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn inconsistent_cmc_signs_break_the_reduction() {
        let p = ProfileParams {
            a: 2.0,
            b: 0.0,
            c: 1.0,
            c0: 0.0,
            signs: BranchSigns::new(Sign::Plus, Sign::Plus, Sign::Minus),
        };
        assert!(!p.signs.is_consistent());
        let phi = phi_closed_form(PhiKind::Cmc, ProfileFamily::Ma, p, (0.05, 6.0)).unwrap();
        let t = 2.0;
        let h = 1e-5 * t;
        let lhs = (phi.substitution(t + h).unwrap() - phi.substitution(t - h).unwrap()) / (2.0 * h)
            + phi.substitution(t).unwrap() / t;
        assert!((lhs - phi.reduced_rhs(t).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn halving_the_step_shrinks_the_residual() {
        let quasi = params(1.0, 0.0, 2.0);
        let cmc = params(2.0, 0.0, 1.0);
        for (kind, rk, p) in [
            (PhiKind::Quasi, ResidualKind::Quasi, quasi),
            (PhiKind::Cmc, ResidualKind::Cmc, cmc),
        ] {
            let phi = phi_closed_form(kind, ProfileFamily::Ma, p, (0.01, 50.0)).unwrap();
            let worst = |step: f64| {
                let prof = integrate_profile(&phi, 1.5, (0.0, 1.0), step, 0.0).unwrap();
                let mid = midpoint_residuals(&prof, rk, &p)
                    .unwrap()
                    .iter()
                    .fold(0.0f64, |m, r| m.max(r.abs()));
                (profile_residuals(&prof, rk, &p).max_governing(), mid)
            };
            let r = [worst(0.1), worst(0.05), worst(0.025)];
            for pick in [|x: (f64, f64)| x.0, |x: (f64, f64)| x.1] {
                let (a, b, c) = (pick(r[0]), pick(r[1]), pick(r[2]));
                assert!(a / b >= 8.0 && b / c >= 8.0, "{kind:?}: {r:?}");
            }
        }
    }

    #[test]
    fn cmc_integration_residuals() {
        let p = params(2.0, 0.0, 1.0);
        let phi = phi_closed_form(PhiKind::Cmc, ProfileFamily::Ma, p, (0.01, 50.0)).unwrap();
        let prof = integrate_profile(&phi, 1.5, (0.0, 1.0), 1e-3, 0.0).unwrap();
        let res = profile_residuals(&prof, ResidualKind::Cmc, &p);
        assert!(res.max_governing() <= 1e-6, "{:e}", res.max_governing());
        assert!(res.max_constraint() <= 1e-8, "{:e}", res.max_constraint());
    }

    #[test]
    fn domain_splits_where_z_changes_sign() {
        let signs = BranchSigns::new(Sign::Minus, Sign::Plus, Sign::Plus);
        let p = anchored_params(PhiKind::Cmc, ProfileFamily::Mpp, 3.0, 0.5, signs, 1.2728, 0.5).unwrap();
        let phi = phi_closed_form(PhiKind::Cmc, ProfileFamily::Mpp, p, (0.01, 2.2)).unwrap();
        let d = phi.domain();
        assert!(d.len() >= 2, "{d:?}");
        let (gap_lo, gap_hi) = (d[d.len() - 2].1, d[d.len() - 1].0);
        let z_lo = phi.z_numerator(gap_lo).unwrap();
        let z_hi = phi.z_numerator(gap_hi).unwrap();
        assert!(z_lo * z_hi < 0.0 && gap_hi - gap_lo < 1e-4, "{gap_lo} {gap_hi}");
        // descending from f0 the profile stops before g' reaches zero
        let prof = integrate_profile(&phi, 1.2728, (0.0, 0.3), 1e-3, 0.0).unwrap();
        let t = prof.truncation().expect("truncated at the g' zero");
        assert!(t.reached < 0.3);
        assert!(prof.samples().iter().all(|s| s.f > gap_hi && s.dg > 0.0));
    }

    #[test]
    fn integration_is_regular_near_a_turning_point() {
        // φ → 0 near f ≈ 1.11: φ' blows up there but (φ²)' does not
        let p = params(3.0186374455975993, -5.038782020715649, -1.0);
        let phi = phi_closed_form(PhiKind::Cmc, ProfileFamily::Mpp, p, (0.01, 10.0)).unwrap();
        let prof = integrate_profile(&phi, 1.0, (0.0, 0.3), 1e-3, 0.0).unwrap();
        assert!(prof.truncation().is_none());
        assert!(prof.samples().last().unwrap().df < 0.03);
        let mid = midpoint_residuals(&prof, ResidualKind::Cmc, &p).unwrap();
        let worst = mid.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        assert!(worst <= 1e-6, "{worst:e}");
    }

    #[test]
    fn anchored_params_hit_the_target_slope() {
        let signs = BranchSigns::default();
        let p = anchored_params(PhiKind::Cmc, ProfileFamily::Mpp, 1.5, -0.5, signs, 0.8, 0.6).unwrap();
        let phi = phi_closed_form(PhiKind::Cmc, ProfileFamily::Mpp, p, (0.01, 1.0)).unwrap();
        assert!((phi.eval(0.8).unwrap() - 0.8).abs() < 1e-12);
        let p = anchored_params(PhiKind::Quasi, ProfileFamily::Ma, 1.0, 0.0, signs, 3.0, 5.0 / 3.0).unwrap();
        assert!((p.c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn branch_signs_parse() {
        let s: BranchSigns = "+,-,+".parse().unwrap();
        assert_eq!(s, BranchSigns::new(Sign::Plus, Sign::Minus, Sign::Plus));
        assert_eq!(s.to_string(), "+,-,+");
        let s: BranchSigns = "-".parse().unwrap();
        assert_eq!(s.phi, Sign::Minus);
        assert!("+,x".parse::<BranchSigns>().is_err());
        assert!("+,+,+,+".parse::<BranchSigns>().is_err());
    }

    #[test]
    fn interpolated_profile_matches_nodes() {
        let p = params(1.0, 0.0, 2.0);
        let phi = phi_closed_form(PhiKind::Quasi, ProfileFamily::Ma, p, (0.01, 50.0)).unwrap();
        let prof = integrate_profile(&phi, 3.0, (0.0, 1.0), 1e-2, 0.0).unwrap();
        let s = prof.samples()[37];
        let x = prof.eval(s.u).unwrap();
        assert!((x.f - s.f).abs() < 1e-14 && (x.df - s.df).abs() < 1e-12);
        assert!(prof.eval(1.5).is_err());
        // between nodes the governing residual stays small
        let mid = prof.eval(s.u + 0.5 * prof.step()).unwrap();
        let l = ProfileFamily::Ma.governing_lhs(mid.f, mid.df, mid.ddf);
        assert!((l.abs() - (mid.df * mid.df + 1.0).sqrt()).abs() < 1e-7);
    }
}
