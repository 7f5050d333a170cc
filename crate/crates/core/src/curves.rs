//! Frenet frames of unit-speed curves on the de Sitter sphere `S²₁(1)` and
//! the anti-de Sitter sphere `H²₁(-1)` in Minkowski 3-space `span{e1,e2,e3}`.
//!
//! All three curve types share one linear system on the frame `(l, t, n)`:
//!
//! ```text
//! l' = t
//! t' = α l + β κ n
//! n' = γ κ t
//! ```
//!
//! with `(α, β, γ)` fixed by the family (see [`CurveFamily::coefficients`]).
//! Integration is RK4 followed by an indefinite Gram-Schmidt pass on every
//! step.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{gram_schmidt, Signature, Space3, Vec3, Vec4};
use crate::error::{GeomError, Result};
use crate::interp::{locate, quintic_hermite, Jet1};
use crate::ode::rk4_step;

/// Coordinate charts of the unit pseudo-spheres.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChartKind {
    /// `(cosh w1 cos w2, cosh w1 sin w2, sinh w1)` on `S²₁(1) ⊂ span{e1,e2,e3}`.
    S21,
    /// `(sinh w1 cos w2, sinh w1 sin w2, cosh w1)` on `H²₁(-1) ⊂ span{e1,e2,e3}`.
    H21,
    /// `cosh w1 e2 + sinh w1 cos w2 e3 + sinh w1 sin w2 e4` on `S²₂(1) ⊂ span{e2,e3,e4}`.
    S21Tilde,
    /// `sinh w1 e2 + cosh w1 cos w2 e3 + cosh w1 sin w2 e4` on `H²₁(-1) ⊂ span{e2,e3,e4}`.
    H21Tilde,
}

impl ChartKind {
    /// Value of `⟨p, p⟩` on the image of the chart.
    pub fn radius_sign(self) -> f64 {
        match self {
            ChartKind::S21 | ChartKind::S21Tilde => 1.0,
            ChartKind::H21 | ChartKind::H21Tilde => -1.0,
        }
    }
}

/// Evaluate a chart. Untilded charts land in `E31`, tilded ones in `E32`;
/// call [`Vec3::embed`] for the 4-component point.
pub fn chart(kind: ChartKind, w1: f64, w2: f64) -> Vec3 {
    let (ch, sh) = (w1.cosh(), w1.sinh());
    let (c, s) = (w2.cos(), w2.sin());
    match kind {
        ChartKind::S21 => Vec3::new([ch * c, ch * s, sh], Space3::E31),
        ChartKind::H21 => Vec3::new([sh * c, sh * s, ch], Space3::E31),
        ChartKind::S21Tilde => Vec3::new([ch, sh * c, sh * s], Space3::E32),
        ChartKind::H21Tilde => Vec3::new([sh, ch * c, ch * s], Space3::E32),
    }
}

/// Shorthand for `chart(kind, w1, w2).embed()`.
pub fn chart4(kind: ChartKind, w1: f64, w2: f64) -> Vec4 {
    chart(kind, w1, w2).embed()
}

/// Recover `(w1, w2)` for a point of an untilded chart. On `H²₁(-1)` the
/// upper sheet is assumed and `w1 ≥ 0` is returned.
pub fn chart_coords(kind: ChartKind, p: &Vec3) -> Result<(f64, f64)> {
    let [x, y, z] = p.c;
    match kind {
        ChartKind::S21 => Ok((z.asinh(), y.atan2(x))),
        ChartKind::H21 => {
            if z < 1.0 - 1e-12 {
                return Err(GeomError::domain(format!(
                    "point with x3 = {z} is not on the upper sheet of H21"
                )));
            }
            Ok((z.max(1.0).acosh(), y.atan2(x)))
        }
        _ => Err(GeomError::usage("chart_coords is defined for S21 and H21 only")),
    }
}

/// The three curve types carrying meridian surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveFamily {
    /// Spacelike curve on `S²₁(1)`, frame signs `(+,+,-)`.
    SpacelikeOnS21,
    /// Timelike curve on `S²₁(1)`, frame signs `(+,-,+)`.
    TimelikeOnS21,
    /// Spacelike curve on `H²₁(-1)`, frame signs `(-,+,+)`.
    SpacelikeOnH21,
}

impl CurveFamily {
    /// `(⟨l,l⟩, ⟨t,t⟩, ⟨n,n⟩)`.
    pub fn signs(self) -> [i8; 3] {
        match self {
            CurveFamily::SpacelikeOnS21 => [1, 1, -1],
            CurveFamily::TimelikeOnS21 => [1, -1, 1],
            CurveFamily::SpacelikeOnH21 => [-1, 1, 1],
        }
    }

    /// `(α, β, γ)` in `t' = α l + β κ n`, `n' = γ κ t`.
    pub fn coefficients(self) -> (f64, f64, f64) {
        match self {
            CurveFamily::SpacelikeOnS21 => (-1.0, -1.0, -1.0),
            CurveFamily::TimelikeOnS21 => (1.0, 1.0, 1.0),
            CurveFamily::SpacelikeOnH21 => (1.0, 1.0, -1.0),
        }
    }

    pub fn signature(self) -> Signature {
        Signature::E31
    }

    pub fn chart_kind(self) -> ChartKind {
        match self {
            CurveFamily::SpacelikeOnS21 | CurveFamily::TimelikeOnS21 => ChartKind::S21,
            CurveFamily::SpacelikeOnH21 => ChartKind::H21,
        }
    }
}

/// Moving frame at parameter `v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrenetState {
    pub v: f64,
    pub l: Vec3,
    pub t: Vec3,
    pub n: Vec3,
}

impl FrenetState {
    pub fn frame(&self) -> [Vec3; 3] {
        [self.l, self.t, self.n]
    }

    fn to_array(self) -> [f64; 9] {
        let mut y = [0.0; 9];
        y[..3].copy_from_slice(&self.l.c);
        y[3..6].copy_from_slice(&self.t.c);
        y[6..].copy_from_slice(&self.n.c);
        y
    }

    fn from_array(v: f64, y: &[f64; 9]) -> Self {
        let part = |k: usize| Vec3::new([y[k], y[k + 1], y[k + 2]], Space3::E31);
        FrenetState {
            v,
            l: part(0),
            t: part(3),
            n: part(6),
        }
    }

    /// Max entrywise deviation of the Gram matrix from the family's signs.
    pub fn gram_deviation(&self, family: CurveFamily) -> f64 {
        let frame = self.frame();
        let signs = family.signs();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { f64::from(signs[i]) } else { 0.0 };
                worst = worst.max((frame[i].dot(&frame[j]) - target).abs());
            }
        }
        worst
    }
}

/// Canonical seed frame at `v = 0` for each family.
pub fn standard_initial_frame(family: CurveFamily) -> FrenetState {
    let e1 = Vec3::e31(1.0, 0.0, 0.0);
    let e2 = Vec3::e31(0.0, 1.0, 0.0);
    let e3 = Vec3::e31(0.0, 0.0, 1.0);
    let (l, t, n) = match family {
        CurveFamily::SpacelikeOnS21 => (e1, e2, e3),
        CurveFamily::TimelikeOnS21 => (e1, e3, e2),
        CurveFamily::SpacelikeOnH21 => (e3, e1, e2),
    };
    FrenetState { v: 0.0, l, t, n }
}

/// Spherical curvature as a function of the arc-length parameter.
#[derive(Clone)]
pub enum CurvatureLaw {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl CurvatureLaw {
    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CurvatureLaw::Function(Arc::new(f))
    }

    pub fn eval(&self, v: f64) -> f64 {
        match self {
            CurvatureLaw::Constant(k) => *k,
            CurvatureLaw::Function(f) => f(v),
        }
    }

    pub fn derivative(&self, v: f64) -> f64 {
        match self {
            CurvatureLaw::Constant(_) => 0.0,
            CurvatureLaw::Function(f) => {
                let h = 1e-5 * v.abs().max(1.0);
                (f(v + h) - f(v - h)) / (2.0 * h)
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            CurvatureLaw::Constant(k) => Some(*k),
            CurvatureLaw::Function(_) => None,
        }
    }
}

impl fmt::Debug for CurvatureLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurvatureLaw::Constant(k) => write!(f, "Constant({k})"),
            CurvatureLaw::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Frenet samples on a uniform `v` grid, with the law that produced them.
#[derive(Clone, Debug)]
pub struct FrameField {
    family: CurveFamily,
    law: CurvatureLaw,
    start: f64,
    step: f64,
    samples: Vec<FrenetState>,
    max_drift: f64,
}

impl FrameField {
    /// Wrap externally produced samples. They must sit on the uniform grid
    /// `start + k·step` and be consistent with `law` for interpolation to be
    /// meaningful.
    pub fn from_samples(
        family: CurveFamily,
        law: CurvatureLaw,
        start: f64,
        step: f64,
        samples: Vec<FrenetState>,
    ) -> Result<Self> {
        if !(step > 0.0) {
            return Err(GeomError::usage("frame field step must be positive"));
        }
        if samples.len() < 2 {
            return Err(GeomError::usage("frame field needs at least 2 samples"));
        }
        let max_drift = samples
            .iter()
            .map(|s| s.gram_deviation(family))
            .fold(0.0, f64::max);
        Ok(FrameField {
            family,
            law,
            start,
            step,
            samples,
            max_drift,
        })
    }

    pub fn family(&self) -> CurveFamily {
        self.family
    }

    pub fn law(&self) -> &CurvatureLaw {
        &self.law
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn samples(&self) -> &[FrenetState] {
        &self.samples
    }

    /// Worst Gram deviation seen before each Gram-Schmidt correction.
    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    pub fn span(&self) -> (f64, f64) {
        (
            self.start,
            self.start + self.step * (self.samples.len() - 1) as f64,
        )
    }

    pub fn kappa(&self, v: f64) -> f64 {
        self.law.eval(v)
    }

    /// Interpolated frame at `v` (quintic Hermite, with first and second
    /// derivatives taken from the Frenet system itself).
    pub fn eval(&self, v: f64) -> Result<FrenetState> {
        let (cell, s) = locate(v, self.start, self.step, self.samples.len()).ok_or_else(|| {
            let (a, b) = self.span();
            GeomError::domain(format!("v = {v} outside curve grid [{a}, {b}]"))
        })?;
        let left = &self.samples[cell];
        let right = &self.samples[cell + 1];
        let (d1l, d2l) = self.derivatives(left);
        let (d1r, d2r) = self.derivatives(right);
        let (yl, yr) = (left.to_array(), right.to_array());
        let mut out = [0.0; 9];
        for i in 0..9 {
            let a = Jet1 {
                value: yl[i],
                d1: d1l[i],
                d2: d2l[i],
            };
            let b = Jet1 {
                value: yr[i],
                d1: d1r[i],
                d2: d2r[i],
            };
            out[i] = quintic_hermite(s, self.step, a, b).0;
        }
        Ok(FrenetState::from_array(v, &out))
    }

    fn derivatives(&self, state: &FrenetState) -> ([f64; 9], [f64; 9]) {
        let kappa = self.law.eval(state.v);
        let dkappa = self.law.derivative(state.v);
        let y = state.to_array();
        let d1 = frenet_rhs(self.family, kappa, &y);
        let mut d2 = frenet_rhs(self.family, kappa, &d1);
        let (_, beta, gamma) = self.family.coefficients();
        for i in 0..3 {
            d2[3 + i] += dkappa * beta * y[6 + i];
            d2[6 + i] += dkappa * gamma * y[3 + i];
        }
        (d1, d2)
    }
}

fn frenet_rhs(family: CurveFamily, kappa: f64, y: &[f64; 9]) -> [f64; 9] {
    let (alpha, beta, gamma) = family.coefficients();
    let mut d = [0.0; 9];
    for i in 0..3 {
        let (l, t, n) = (y[i], y[3 + i], y[6 + i]);
        d[i] = t;
        d[3 + i] = alpha * l + beta * kappa * n;
        d[6 + i] = gamma * kappa * t;
    }
    d
}

/// Re-orthonormalise `(l, t, n)` in that order against the family signs.
fn reorthonormalise(family: CurveFamily, state: FrenetState) -> Result<FrenetState> {
    let out = gram_schmidt(&[state.l.c, state.t.c, state.n.c], &Signature::E31, 1e-12)
        .map_err(|e| GeomError::degenerate(format!("frame at v = {}: {e}", state.v)))?;
    let signs = family.signs();
    for (k, (_, s)) in out.iter().enumerate() {
        if *s != signs[k] {
            return Err(GeomError::degenerate(format!(
                "frame vector {k} changed causal character at v = {}",
                state.v
            )));
        }
    }
    let part = |k: usize| Vec3::new(out[k].0, Space3::E31);
    Ok(FrenetState {
        v: state.v,
        l: part(0),
        t: part(1),
        n: part(2),
    })
}

/// Integrate the family's Frenet system with fixed-step RK4.
///
/// The grid is `init.v + k·step` and extends in both directions far enough
/// to cover `v_span` (and `init.v`). Every step is followed by Gram-Schmidt;
/// the worst pre-correction deviation is recorded on the field.
pub fn integrate_frenet(
    family: CurveFamily,
    law: CurvatureLaw,
    init: FrenetState,
    v_span: (f64, f64),
    step: f64,
) -> Result<FrameField> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(GeomError::usage(format!("step must be positive, got {step}")));
    }
    let (a, b) = v_span;
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(GeomError::usage(format!("invalid v span [{a}, {b}]")));
    }
    let dev = init.gram_deviation(family);
    if dev > 1e-10 {
        return Err(GeomError::usage(format!(
            "initial frame deviates from {:?} signs by {dev:e}",
            family
        )));
    }
    let lower = a.min(init.v);
    let upper = b.max(init.v);
    let n_back = steps_needed(init.v - lower, step);
    let n_fwd = steps_needed(upper - init.v, step);

    let mut drift = 0.0f64;
    let mut march = |count: usize, h: f64| -> Result<Vec<FrenetState>> {
        let mut out = Vec::with_capacity(count);
        let mut y = init.to_array();
        let mut v = init.v;
        for k in 0..count {
            let next = rk4_step(v, &y, h, |x, y| {
                let kappa = law.eval(x);
                if !kappa.is_finite() {
                    return Err(GeomError::Integration {
                        v: x,
                        reason: format!("curvature sample {kappa} is not finite"),
                    });
                }
                Ok(frenet_rhs(family, kappa, y))
            })?;
            v = init.v + (k + 1) as f64 * h;
            let raw = FrenetState::from_array(v, &next);
            drift = drift.max(raw.gram_deviation(family));
            let fixed = reorthonormalise(family, raw)?;
            y = fixed.to_array();
            out.push(fixed);
        }
        Ok(out)
    };

    let mut backward = march(n_back, -step)?;
    let forward = march(n_fwd, step)?;
    backward.reverse();
    let mut samples = backward;
    samples.push(init);
    samples.extend(forward);
    let start = init.v - n_back as f64 * step;
    Ok(FrameField {
        family,
        law,
        start,
        step,
        samples,
        max_drift: drift,
    })
}

fn steps_needed(length: f64, step: f64) -> usize {
    let n = length / step;
    // tolerate round-off so that an exact multiple does not add a step
    (n - 1e-9).ceil().max(0.0) as usize
}

/// `κ(v) = ⟨t'(v), n(v)⟩` per sample, with `t'` from central differences
/// (second-order one-sided at the ends).
pub fn curvature_estimate(field: &FrameField) -> Result<Vec<f64>> {
    let s = field.samples();
    if s.len() < 3 {
        return Err(GeomError::usage(format!(
            "curvature_estimate needs at least 3 samples, got {}",
            s.len()
        )));
    }
    let h = field.step();
    let last = s.len() - 1;
    Ok((0..s.len())
        .map(|k| {
            let dt = if k == 0 {
                (s[0].t * -3.0 + s[1].t * 4.0 - s[2].t) * (1.0 / (2.0 * h))
            } else if k == last {
                (s[last].t * 3.0 - s[last - 1].t * 4.0 + s[last - 2].t) * (1.0 / (2.0 * h))
            } else {
                (s[k + 1].t - s[k - 1].t) * (1.0 / (2.0 * h))
            };
            dt.dot(&s[k].n)
        })
        .collect())
}
