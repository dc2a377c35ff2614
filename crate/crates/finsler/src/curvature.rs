//! Spray coefficients, Ricci curvature, S-curvature, and the weighted
//! Ricci curvatures Ric^N.
//!
//! Everything reduces to jets of F^2 in the combined (x, y) variables:
//! the spray is assembled from one second-order jet, and each curvature
//! evaluates the spray itself at jet scalars, so mixed third derivatives
//! come out of nested composition instead of finite differences.

use crate::error::{Error, Result};
use crate::jets::{c, dual2_vars, dual_vars, guard, Dual, Real, D2};
use crate::linalg;
use crate::measure::MeasureSpec;
use crate::metric::Metric;
use rayon::prelude::*;
use serde::Serialize;

/// Spray coefficients G^i(x, y) at any jet scalar.
///
/// G^i = 1/4 g^{il} ( [F^2]_{x^k y^l} y^k - [F^2]_{x^l} ), with g the
/// fundamental tensor at (x, y); one evaluation of F^2 over 2n combined
/// lanes yields every term.
pub(crate) fn spray_generic<S: Real>(m: &Metric, x: &[S], y: &[S]) -> [S; 3] {
    let n = x.len();
    let mut w: Vec<S> = Vec::with_capacity(2 * n);
    w.extend_from_slice(x);
    w.extend_from_slice(y);
    let wd = dual2_vars(&w);
    let a = m.f2(&wd[..n], &wd[n..]);

    let mut g = linalg::zero_mat::<S>();
    for j in 0..n {
        for l in 0..n {
            g[j][l] = a.d[n + j].d[n + l] * c::<S>(0.5);
        }
    }
    let ginv = linalg::inverse(&g, n);

    let mut rhs = [c::<S>(0.0); 3];
    for l in 0..n {
        let mut acc = c::<S>(0.0);
        for k in 0..n {
            acc = acc + a.d[k].d[n + l] * y[k];
        }
        rhs[l] = acc - a.d[l].re;
    }
    let gr = linalg::mat_vec(&ginv, &rhs, n);
    let mut out = [c::<S>(0.0); 3];
    for i in 0..n {
        out[i] = gr[i] * c::<S>(0.25);
    }
    out
}

/// Geodesic spray G^i(x, y); geodesics solve x'' + 2G(x, x') = 0.
pub fn spray(m: &Metric, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    m.check_inside(x)?;
    if linalg::norm2(y) == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let n = m.dim();
    let g = guard(|| spray_generic(m, x, y))?;
    if g[..n].iter().any(|v| !v.is_finite()) {
        return Err(Error::JetDomain { primitive: "non-finite" });
    }
    Ok(g[..n].to_vec())
}

/// Ricci curvature Ric(x, y): trace of the Berwald curvature
/// R^i_k = 2 dG^i/dx^k - y^j d^2G^i/dx^j dy^k + 2 G^j d^2G^i/dy^j dy^k
///         - dG^i/dy^j dG^j/dy^k.
pub fn ricci(m: &Metric, x: &[f64], y: &[f64]) -> Result<f64> {
    m.check_inside(x)?;
    if linalg::norm2(y) == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let n = m.dim();
    let ric = guard(|| {
        let mut w: Vec<f64> = Vec::with_capacity(2 * n);
        w.extend_from_slice(x);
        w.extend_from_slice(y);
        let wd: Vec<D2> = dual2_vars(&w);
        let gj = spray_generic(m, &wd[..n], &wd[n..]);

        let mut ric = 0.0;
        for k in 0..n {
            ric += 2.0 * gj[k].d[k].re;
            for j in 0..n {
                ric -= y[j] * gj[k].d[j].d[n + k];
                ric += 2.0 * gj[j].re.re * gj[k].d[n + j].d[n + k];
                ric -= gj[k].d[n + j].re * gj[j].d[n + k].re;
            }
        }
        ric
    })?;
    if !ric.is_finite() {
        return Err(Error::JetDomain { primitive: "non-finite" });
    }
    Ok(ric)
}

/// S-curvature against the measure at any jet scalar:
/// S = dG^m/dy^m - y^m d(ln sigma)/dx^m.
pub(crate) fn s_curvature_generic<S: Real>(
    m: &Metric,
    mu: &MeasureSpec,
    x: &[S],
    y: &[S],
) -> S {
    let n = x.len();
    let xc: Vec<Dual<S>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let yd = dual_vars(y);
    let gj = spray_generic(m, &xc, &yd);
    let mut div = c::<S>(0.0);
    for i in 0..n {
        div = div + gj[i].d[i];
    }

    let xd = dual_vars(x);
    let yc: Vec<S> = y.to_vec();
    let ls = mu.log_sigma(m, &xd);
    let mut adv = c::<S>(0.0);
    for k in 0..n {
        adv = adv + ls.d[k] * yc[k];
    }
    div - adv
}

/// S-curvature S(x, y), the derivative of the distortion along the geodesic
/// through (x, y).
pub fn s_curvature(m: &Metric, mu: &MeasureSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    m.check_inside(x)?;
    if linalg::norm2(y) == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let s = guard(|| s_curvature_generic(m, mu, x, y))?;
    if !s.is_finite() {
        return Err(Error::JetDomain { primitive: "non-finite" });
    }
    Ok(s)
}

/// Derivative of S along the geodesic flow: seed (x, y) with the flow
/// direction (y, -2G) in one dual lane and read off the derivative.
pub fn s_dot(m: &Metric, mu: &MeasureSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    m.check_inside(x)?;
    if linalg::norm2(y) == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let n = m.dim();
    let g0 = spray(m, x, y)?;
    let sd = guard(|| {
        let xd: Vec<Dual<f64>> = (0..n).map(|i| Dual::seeded(x[i], y[i])).collect();
        let yd: Vec<Dual<f64>> = (0..n).map(|i| Dual::seeded(y[i], -2.0 * g0[i])).collect();
        s_curvature_generic(m, mu, &xd, &yd).d[0]
    })?;
    if !sd.is_finite() {
        return Err(Error::JetDomain { primitive: "non-finite" });
    }
    Ok(sd)
}

/// Effective dimension parameter for the weighted Ricci curvature.
///
/// `Dimension` opts into the N = n convention: the value is -infinity
/// wherever S does not vanish.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum WeightedN {
    Finite(f64),
    Infinity,
    Dimension,
}

/// Weighted Ricci curvature Ric^N = Ric + S' - S^2/(N - n).
pub fn weighted_ricci(
    m: &Metric,
    mu: &MeasureSpec,
    x: &[f64],
    y: &[f64],
    n_param: WeightedN,
) -> Result<f64> {
    let ric = ricci(m, x, y)?;
    let sd = s_dot(m, mu, x, y)?;
    match n_param {
        WeightedN::Infinity => Ok(ric + sd),
        WeightedN::Finite(nn) => {
            let dim = m.dim() as f64;
            if nn <= dim {
                return Err(Error::Parameter(format!(
                    "weighted dimension N = {nn} must exceed the manifold dimension {dim}; \
                     use the Dimension variant for N = n"
                )));
            }
            let s = s_curvature(m, mu, x, y)?;
            Ok(ric + sd - s * s / (nn - dim))
        }
        WeightedN::Dimension => {
            let s = s_curvature(m, mu, x, y)?;
            if s.abs() < 1e-10 {
                Ok(ric + sd)
            } else {
                Ok(f64::NEG_INFINITY)
            }
        }
    }
}

/// One scan sample at a unit-F direction.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub ric: f64,
    pub s: f64,
    pub s_dot: f64,
    pub ric_n: f64,
}

/// Deterministic point/direction grid for curvature scans.
#[derive(Clone, Debug)]
pub struct ScanGrid {
    pub points: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
}

impl ScanGrid {
    pub fn from_chart(m: &Metric, per_axis: usize, scale: f64, dir_count: usize) -> ScanGrid {
        ScanGrid {
            points: m.chart().lattice(per_axis, scale),
            directions: crate::metric::direction_fan(m.dim(), dir_count),
        }
    }
}

/// Sampled lower bound certificate for Ric^N / F^2 (plus the auxiliary
/// bounds the comparison verifiers consume).
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureCertificate {
    pub n_param: WeightedN,
    pub inf_ric_n: f64,
    pub inf_ric: f64,
    pub inf_s: f64,
    pub sup_abs_s: f64,
    pub sup_abs_tau: f64,
    pub worst: CurvatureSample,
    pub samples: usize,
}

/// Scans Ric^N over unit-F directions and reports the sampled infimum.
/// Directions are normalized to F = 1 so the value already is Ric^N / F^2.
pub fn ricci_bound_scan(
    m: &Metric,
    mu: &MeasureSpec,
    grid: &ScanGrid,
    n_param: WeightedN,
) -> Result<CurvatureCertificate> {
    if grid.points.is_empty() || grid.directions.is_empty() {
        return Err(Error::Parameter("curvature scan grid is empty".into()));
    }
    // Parallel over points, then a sequential fold in grid order so the
    // report is byte-identical regardless of thread scheduling.
    let per_point: Vec<Result<Vec<CurvatureSample>>> = grid
        .points
        .par_iter()
        .map(|x| {
            grid.directions
                .iter()
                .map(|dir| {
                    let f = guard(|| m.f(x, dir))?;
                    let y: Vec<f64> = dir.iter().map(|v| v / f).collect();
                    let ric = ricci(m, x, &y)?;
                    let s = s_curvature(m, mu, x, &y)?;
                    let sd = s_dot(m, mu, x, &y)?;
                    let ric_n = match n_param {
                        WeightedN::Infinity => ric + sd,
                        WeightedN::Finite(nn) => {
                            let dim = m.dim() as f64;
                            if nn <= dim {
                                return Err(Error::Parameter(format!(
                                    "weighted dimension N = {nn} must exceed {dim}"
                                )));
                            }
                            ric + sd - s * s / (nn - dim)
                        }
                        WeightedN::Dimension => {
                            if s.abs() < 1e-10 {
                                ric + sd
                            } else {
                                f64::NEG_INFINITY
                            }
                        }
                    };
                    Ok(CurvatureSample { x: x.clone(), y, ric, s, s_dot: sd, ric_n })
                })
                .collect()
        })
        .collect();

    let mut worst: Option<CurvatureSample> = None;
    let mut inf_ric = f64::INFINITY;
    let mut inf_s = f64::INFINITY;
    let mut sup_abs_s: f64 = 0.0;
    let mut sup_abs_tau: f64 = 0.0;
    let mut count = 0;
    for block in per_point {
        for s in block? {
            inf_ric = inf_ric.min(s.ric);
            inf_s = inf_s.min(s.s);
            sup_abs_s = sup_abs_s.max(s.s.abs());
            let tau = crate::measure::distortion(m, mu, &s.x, &s.y)?;
            sup_abs_tau = sup_abs_tau.max(tau.abs());
            if worst.as_ref().is_none_or(|w| s.ric_n < w.ric_n) {
                worst = Some(s.clone());
            }
            count += 1;
        }
    }
    let worst = worst.expect("non-empty grid");
    Ok(CurvatureCertificate {
        n_param,
        inf_ric_n: worst.ric_n,
        inf_ric,
        inf_s,
        sup_abs_s,
        sup_abs_tau,
        worst,
        samples: count,
    })
}
