//! Finite-difference differential geometry of an arbitrary immersion into
//! `E⁴₂`: fundamental forms, mean curvature vector and shape operators.

use nalgebra::Matrix2;

use crate::algebra::{gram_schmidt, Signature, Vec4};
use crate::error::{GeomError, Result};
use crate::surface::Immersion;

/// Position, first and second partials at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub z: Vec4,
    pub zu: Vec4,
    pub zv: Vec4,
    pub zuu: Vec4,
    pub zuv: Vec4,
    pub zvv: Vec4,
    pub h: f64,
    /// Sup-norm gap between the mixed partial on the `h` and `2h` stencils.
    pub mixed_gap: f64,
}

impl Jet2 {
    pub fn is_finite(&self) -> bool {
        [self.z, self.zu, self.zv, self.zuu, self.zuv, self.zvv]
            .iter()
            .all(Vec4::is_finite)
    }
}

pub fn default_step(u: f64, v: f64) -> f64 {
    1e-4 * 1f64.max(u.abs()).max(v.abs())
}

/// Second-order central differences. `h = None` uses [`default_step`].
pub fn fd_jet<S: Immersion + ?Sized>(surface: &S, u: f64, v: f64, h: Option<f64>) -> Result<Jet2> {
    let h = h.unwrap_or_else(|| default_step(u, v));
    if !(h > 0.0) || !h.is_finite() {
        return Err(GeomError::usage(format!("finite-difference step must be positive, got {h}")));
    }
    let at = |i: i32, j: i32| -> Result<Vec4> {
        let (uu, vv) = (u + f64::from(i) * h, v + f64::from(j) * h);
        surface.eval(uu, vv).map_err(|e| {
            GeomError::domain(format!("stencil point ({uu}, {vv}) around ({u}, {v}): {e}"))
        })
    };
    let z = at(0, 0)?;
    let (up, um, vp, vm) = (at(1, 0)?, at(-1, 0)?, at(0, 1)?, at(0, -1)?);
    let (pp, pm, mp, mm) = (at(1, 1)?, at(1, -1)?, at(-1, 1)?, at(-1, -1)?);
    let h2 = h * h;
    let zuv = (pp - pm - mp + mm) / (4.0 * h2);
    let wide = (at(2, 2)? - at(2, -2)? - at(-2, 2)? + at(-2, -2)?) / (16.0 * h2);
    let jet = Jet2 {
        z,
        zu: (up - um) / (2.0 * h),
        zv: (vp - vm) / (2.0 * h),
        zuu: (up - 2.0 * z + um) / h2,
        zuv,
        zvv: (vp - 2.0 * z + vm) / h2,
        h,
        mixed_gap: (zuv - wide).norm_inf(),
    };
    if !jet.is_finite() {
        return Err(GeomError::domain(format!("non-finite jet at ({u}, {v})")));
    }
    Ok(jet)
}

/// First and second fundamental forms at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FundamentalForms {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub zu: Vec4,
    pub zv: Vec4,
    /// Orthonormal normal basis with the sign of each vector.
    pub normals: [(Vec4, i8); 2],
    /// Normal projections of `z_uu`, `z_uv`, `z_vv`.
    pub h_uu: Vec4,
    pub h_uv: Vec4,
    pub h_vv: Vec4,
    /// `⟨h_ij, ν_k⟩ ε_k`: components of the `h_ij` in the normal basis.
    pub h_components: [[f64; 2]; 3],
    pub mean_curvature: Vec4,
    pub norm2_h: f64,
}

impl FundamentalForms {
    pub fn det(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    /// Components of `w` in the normal basis, `ε_k ⟨w, ν_k⟩`.
    pub fn normal_components(&self, w: &Vec4) -> [f64; 2] {
        self.normals
            .map(|(nu, s)| f64::from(s) * w.dot(&nu))
    }
}

const METRIC_EPS: f64 = 1e-10;
const SEED_EPS: f64 = 1e-12;

/// Tangential part removed with the inverse tangent metric.
fn normal_projection(w: &Vec4, zu: &Vec4, zv: &Vec4, e: f64, f: f64, g: f64) -> Vec4 {
    let det = e * g - f * f;
    let (a, b) = (w.dot(zu), w.dot(zv));
    let cu = (g * a - f * b) / det;
    let cv = (-f * a + e * b) / det;
    *w - cu * *zu - cv * *zv
}

/// Canonical basis indices ordered by Euclidean distance from the tangent
/// plane, largest first (ties by index).
fn seed_order(zu: &Vec4, zv: &Vec4) -> Vec<usize> {
    // Euclidean orthonormal basis of the tangent plane
    let a = *zu / zu.euclid_norm();
    let w = *zv - zv.euclid_dot(&a) * a;
    let b = w / w.euclid_norm();
    let mut order: Vec<(usize, f64)> = (0..4)
        .map(|i| {
            let e = Vec4::basis(i);
            let r = e - e.euclid_dot(&a) * a - e.euclid_dot(&b) * b;
            (i, r.euclid_norm())
        })
        .collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    order.into_iter().map(|(i, _)| i).collect()
}

fn check_metric(jet: &Jet2) -> Result<(f64, f64, f64, f64)> {
    let (zu, zv) = (jet.zu, jet.zv);
    let (e, f, g) = (zu.dot(&zu), zu.dot(&zv), zv.dot(&zv));
    let det = e * g - f * f;
    if det.abs() <= METRIC_EPS {
        return Err(GeomError::degenerate(format!(
            "degenerate induced metric, EG - F^2 = {det:e}"
        )));
    }
    Ok((e, f, g, det))
}

/// Fundamental forms with the normal basis seeded from the canonical basis
/// vectors furthest from the tangent plane; other seed pairs are tried if
/// the first pair meets a near-lightlike vector.
pub fn fundamental_forms(jet: &Jet2) -> Result<FundamentalForms> {
    check_metric(jet)?;
    let order = seed_order(&jet.zu, &jet.zv);
    let mut last = None;
    for (p, q) in [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)] {
        let seeds = [Vec4::basis(order[p]), Vec4::basis(order[q])];
        match fundamental_forms_with_seeds(jet, &seeds) {
            Err(e @ GeomError::Degenerate(_)) => last = Some(e),
            other => return other,
        }
    }
    Err(last.unwrap_or_else(|| GeomError::degenerate("no usable normal seeds")))
}

/// Fundamental forms with an explicit pair of normal seeds.
pub fn fundamental_forms_with_seeds(jet: &Jet2, seeds: &[Vec4; 2]) -> Result<FundamentalForms> {
    let (e, f, g, det) = check_metric(jet)?;
    let (zu, zv) = (jet.zu, jet.zv);
    let proj = |w: &Vec4| normal_projection(w, &zu, &zv, e, f, g);
    let raw = [proj(&seeds[0]).0, proj(&seeds[1]).0];
    let basis = gram_schmidt(&raw, &Signature::NEUTRAL, SEED_EPS)
        .map_err(|e| GeomError::degenerate(format!("normal seeds: {e}")))?;
    let normals = [
        (Vec4(basis[0].0), basis[0].1),
        (Vec4(basis[1].0), basis[1].1),
    ];
    let (h_uu, h_uv, h_vv) = (proj(&jet.zuu), proj(&jet.zuv), proj(&jet.zvv));
    let comps = |w: &Vec4| normals.map(|(nu, s)| f64::from(s) * w.dot(&nu));
    let h = (e * h_vv - 2.0 * f * h_uv + g * h_uu) / (2.0 * det);
    Ok(FundamentalForms {
        e,
        f,
        g,
        zu,
        zv,
        normals,
        h_uu,
        h_uv,
        h_vv,
        h_components: [comps(&h_uu), comps(&h_uv), comps(&h_vv)],
        mean_curvature: h,
        norm2_h: h.dot(&h),
    })
}

/// `(H, ⟨H,H⟩)` by finite differences.
pub fn mean_curvature_fd<S: Immersion + ?Sized>(
    surface: &S,
    u: f64,
    v: f64,
    h: Option<f64>,
) -> Result<(Vec4, f64)> {
    let forms = fundamental_forms(&fd_jet(surface, u, v, h)?)?;
    Ok((forms.mean_curvature, forms.norm2_h))
}

/// Matrix of the shape operator `A_ξ` in the basis `(z_u, z_v)`: column `j`
/// holds the components of `A_ξ z_j`.
pub fn shape_operator(forms: &FundamentalForms, xi: &Vec4) -> Result<Matrix2<f64>> {
    let scale = xi.euclid_norm().max(1.0);
    for (name, t) in [("z_u", forms.zu), ("z_v", forms.zv)] {
        let d = xi.dot(&t);
        if d.abs() > 1e-8 * scale * t.euclid_norm().max(1.0) {
            return Err(GeomError::usage(format!(
                "xi is not normal: <xi, {name}> = {d:e}"
            )));
        }
    }
    let metric = Matrix2::new(forms.e, forms.f, forms.f, forms.g);
    let s = Matrix2::new(
        forms.h_uu.dot(xi),
        forms.h_uv.dot(xi),
        forms.h_uv.dot(xi),
        forms.h_vv.dot(xi),
    );
    let inv = metric
        .try_inverse()
        .ok_or_else(|| GeomError::degenerate("singular induced metric"))?;
    Ok(inv * s)
}
