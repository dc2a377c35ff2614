//! Smooth reference measures dm = sigma(x) dx on chart domains.
//!
//! The same `MeasureSpec` type serves the Busemann-Hausdorff volume, the
//! Riemannian volume of quadratic metrics, and weighted measures e^{-psi} dx.
//! Densities evaluate generically over jet scalars, so S-curvature can
//! differentiate straight through the Busemann-Hausdorff quadrature sum.

use crate::error::{Error, Result};
use crate::jets::{c, guard, Real};
use crate::linalg;
use crate::metric::{riemann_g, Metric, MetricKind};
use crate::quad;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub enum MeasureKind {
    /// Canonical Finsler volume: unit-ball volume over indicatrix volume,
    /// evaluated by fixed-order quadrature on the indicatrix boundary.
    BusemannHausdorff { order: usize },
    /// sqrt(det g(x)) for metrics with a quadratic norm.
    RiemannianVolume,
    /// exp(-k |x|^2 / 2) against Lebesgue measure.
    Gaussian { k: f64 },
    /// exp(-psi) with quadratic psi(x) = c + l.x + x'Qx/2.
    CustomExponential { psi0: f64, lin: Vec<f64>, quad: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureSpec {
    name: String,
    kind: MeasureKind,
}

pub const DEFAULT_BH_ORDER: usize = 64;

impl MeasureSpec {
    pub fn busemann_hausdorff() -> MeasureSpec {
        MeasureSpec {
            name: "busemann-hausdorff".into(),
            kind: MeasureKind::BusemannHausdorff { order: DEFAULT_BH_ORDER },
        }
    }

    pub fn busemann_hausdorff_order(order: usize) -> Result<MeasureSpec> {
        if order < 4 {
            return Err(Error::Parameter("quadrature order must be at least 4".into()));
        }
        Ok(MeasureSpec {
            name: format!("busemann-hausdorff({order})"),
            kind: MeasureKind::BusemannHausdorff { order },
        })
    }

    /// Riemannian volume; rejected for metrics without a quadratic norm.
    pub fn riemannian_volume(m: &Metric) -> Result<MeasureSpec> {
        match m.kind() {
            MetricKind::Euclidean | MetricKind::Riemannian(_) => {}
            MetricKind::Asym1d { .. } if m.is_riemannian() => {}
            _ => {
                return Err(Error::Parameter(format!(
                    "riemannian-volume is undefined for the non-quadratic metric {}",
                    m.name()
                )))
            }
        }
        Ok(MeasureSpec { name: "riemannian-volume".into(), kind: MeasureKind::RiemannianVolume })
    }

    pub fn gaussian(k: f64) -> MeasureSpec {
        MeasureSpec { name: format!("gaussian({k})"), kind: MeasureKind::Gaussian { k } }
    }

    pub fn custom_exponential(psi0: f64, lin: Vec<f64>, quad: Vec<Vec<f64>>) -> Result<MeasureSpec> {
        let n = lin.len();
        if quad.len() != n || quad.iter().any(|r| r.len() != n) {
            return Err(Error::Parameter("psi quadratic form shape mismatch".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if (quad[i][j] - quad[j][i]).abs() > 1e-12 {
                    return Err(Error::Parameter("psi quadratic form must be symmetric".into()));
                }
            }
        }
        Ok(MeasureSpec {
            name: "custom-exponential".into(),
            kind: MeasureKind::CustomExponential { psi0, lin, quad },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// Density sigma(x), jet-evaluable.
    pub fn sigma<S: Real>(&self, m: &Metric, x: &[S]) -> S {
        match &self.kind {
            MeasureKind::BusemannHausdorff { order } => bh_density_generic(m, x, *order),
            MeasureKind::RiemannianVolume => riemann_sigma(m, x),
            MeasureKind::Gaussian { .. } | MeasureKind::CustomExponential { .. } => {
                self.log_sigma(m, x).exp()
            }
        }
    }

    /// ln sigma(x); the exponential kinds skip the exp/ln round trip.
    pub fn log_sigma<S: Real>(&self, m: &Metric, x: &[S]) -> S {
        match &self.kind {
            MeasureKind::BusemannHausdorff { order } => bh_density_generic(m, x, *order).ln(),
            MeasureKind::RiemannianVolume => riemann_sigma(m, x).ln(),
            MeasureKind::Gaussian { k } => {
                c::<S>(-0.5 * k) * linalg::dot(x, x)
            }
            MeasureKind::CustomExponential { psi0, lin, quad } => {
                let mut psi = c::<S>(*psi0);
                for i in 0..x.len() {
                    psi = psi + c::<S>(lin[i]) * x[i];
                    for j in 0..x.len() {
                        psi = psi + c::<S>(0.5 * quad[i][j]) * x[i] * x[j];
                    }
                }
                -psi
            }
        }
    }
}

fn riemann_sigma<S: Real>(m: &Metric, x: &[S]) -> S {
    match m.kind() {
        MetricKind::Euclidean => c(1.0),
        MetricKind::Riemannian(k) => {
            let g = riemann_g(k, x, m.dim());
            linalg::det(&g, m.dim()).sqrt()
        }
        MetricKind::Asym1d { a, .. } => a.eval(x[0]),
        _ => unreachable!("riemannian_volume constructor admits only quadratic kinds"),
    }
}

/// Busemann-Hausdorff density as a quadrature sum over the indicatrix:
/// sigma_BH(x) = vol(B^n) / Leb{y : F(x, y) < 1}.
pub(crate) fn bh_density_generic<S: Real>(m: &Metric, x: &[S], order: usize) -> S {
    match m.dim() {
        1 => {
            // Indicatrix is the interval (-1/F(x,-1), 1/F(x,+1)).
            let fwd = m.f(x, &[c::<S>(1.0)]);
            let bwd = m.f(x, &[c::<S>(-1.0)]);
            c::<S>(2.0) / (c::<S>(1.0) / fwd + c::<S>(1.0) / bwd)
        }
        2 => {
            // Area = 1/2 int r(theta)^2 dtheta with r = 1/F on unit directions.
            let mut area = c::<S>(0.0);
            for (t, w) in quad::gauss_legendre(order) {
                let th = std::f64::consts::PI * (t + 1.0);
                let y = [c::<S>(th.cos()), c::<S>(th.sin())];
                let r = c::<S>(1.0) / m.f(x, &y);
                area = area + c::<S>(0.5 * std::f64::consts::PI * w) * r * r;
            }
            c::<S>(std::f64::consts::PI) / area
        }
        3 => {
            // Volume = int over the sphere of r^3/3 in solid angle, on a
            // Gauss-Legendre (cos polar) x uniform (azimuth) product grid.
            let mp = (3 * order / 8).max(6);
            let ma = 2 * mp;
            let wphi = 2.0 * std::f64::consts::PI / ma as f64;
            let mut vol = c::<S>(0.0);
            for (u, wu) in quad::gauss_legendre(mp) {
                let s = (1.0 - u * u).sqrt();
                for k in 0..ma {
                    let phi = wphi * (k as f64 + 0.5);
                    let y = [c::<S>(s * phi.cos()), c::<S>(s * phi.sin()), c::<S>(u)];
                    let r = c::<S>(1.0) / m.f(x, &y);
                    vol = vol + c::<S>(wu * wphi / 3.0) * r * r * r;
                }
            }
            c::<S>(4.0 * std::f64::consts::PI / 3.0) / vol
        }
        _ => unreachable!("dimension out of range"),
    }
}

/// Busemann-Hausdorff density at a point, with an order-doubling stability
/// check.
pub fn bh_density(m: &Metric, x: &[f64], order: usize) -> Result<f64> {
    m.check_inside(x)?;
    let v = guard(|| bh_density_generic(m, x, order))?;
    let v2 = guard(|| bh_density_generic(m, x, 2 * order))?;
    let delta = (v - v2).abs();
    if delta > 1e-8 * v2.abs().max(1.0) {
        return Err(Error::QuadraturePrecision { delta });
    }
    Ok(v)
}

/// omega_{n-1}: volume of the Euclidean unit (n-1)-sphere for an
/// n-dimensional manifold (2, 2 pi, 4 pi, 2 pi^2, ... for n = 1, 2, 3, 4).
pub fn unit_sphere_area(dim: usize) -> f64 {
    match dim {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI * unit_sphere_area(dim - 2) / (dim as f64 - 2.0),
    }
}

/// phi(x) = sigma(x) / sigma_BH(x), the density of dm against dm_BH.
pub fn phi_factor(m: &Metric, mu: &MeasureSpec, x: &[f64]) -> Result<f64> {
    let order = match mu.kind() {
        MeasureKind::BusemannHausdorff { order } => *order,
        _ => DEFAULT_BH_ORDER,
    };
    let bh = bh_density(m, x, order)?;
    let sigma = guard(|| mu.sigma(m, x))?;
    Ok(sigma / bh)
}

/// Distortion tau(x, y) = ln sqrt(det g(x, y)) - ln sigma(x).
pub fn distortion(m: &Metric, mu: &MeasureSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let g = crate::metric::fundamental_tensor(m, x, y)?;
    let det = linalg::det(&g, m.dim());
    let log_sigma = guard(|| mu.log_sigma(m, x))?;
    Ok(0.5 * det.ln() - log_sigma)
}
