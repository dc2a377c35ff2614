//! Finsler metric instances on explicit charts.
//!
//! A metric is a positively 1-homogeneous, strongly convex norm F(x, y) on
//! the tangent spaces over a coordinate chart. The zoo covers Euclidean and
//! Riemannian norms (round sphere and hyperbolic plane in concrete charts),
//! Randers perturbations, the Funk norm of the unit ball, and an asymmetric
//! one dimensional family with distinct forward and backward stretches.
//!
//! All evaluations are generic over jet scalars so that every derived
//! quantity (fundamental tensor, spray, curvature) differentiates the same
//! code path that plain evaluation uses. Piecewise definitions dispatch on
//! the base value before entering jet arithmetic.

use crate::error::{Error, Result};
use crate::jets::{c, dual2_vars, guard, Real};
use crate::linalg::{self, Mat};
use serde::Serialize;

/// Coordinate chart with an explicit validity region.
#[derive(Clone, Debug, Serialize)]
pub enum Chart {
    /// Axis-aligned box; periodic axes never trigger a boundary exit.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        periodic: Vec<bool>,
    },
    /// Open disk (or ball) centered at the origin.
    Disk { radius: f64, dim: usize },
}

impl Chart {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Chart {
        let n = lo.len();
        Chart::Box { lo, hi, periodic: vec![false; n] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Chart::Box { lo, .. } => lo.len(),
            Chart::Disk { dim, .. } => *dim,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Chart::Box { lo, hi, periodic } => x
                .iter()
                .enumerate()
                .all(|(i, &xi)| periodic[i] || (xi > lo[i] && xi < hi[i])),
            Chart::Disk { radius, .. } => linalg::norm2(x) < *radius,
        }
    }

    /// Deterministic interior lattice used by scans and sampling tests.
    /// `scale` in (0, 1] shrinks the lattice toward the chart center.
    pub fn lattice(&self, per_axis: usize, scale: f64) -> Vec<Vec<f64>> {
        match self {
            Chart::Box { lo, hi, periodic } => {
                let n = lo.len();
                let mut pts = vec![Vec::new()];
                for axis in 0..n {
                    let mut next = Vec::new();
                    for i in 0..per_axis {
                        let frac = (i as f64 + 0.5) / per_axis as f64;
                        let coord = if periodic[axis] {
                            lo[axis] + (hi[axis] - lo[axis]) * frac
                        } else {
                            let mid = 0.5 * (lo[axis] + hi[axis]);
                            mid + (hi[axis] - lo[axis]) * scale * (frac - 0.5)
                        };
                        for p in &pts {
                            let mut q = p.clone();
                            q.push(coord);
                            next.push(q);
                        }
                    }
                    pts = next;
                }
                pts
            }
            Chart::Disk { radius, dim } => {
                let mut pts = vec![vec![0.0; *dim]];
                for ring in 1..=per_axis {
                    let r = radius * scale * ring as f64 / per_axis as f64;
                    for dir in direction_fan(*dim, (2 * per_axis).max(6)) {
                        pts.push(dir.iter().map(|d| d * r).collect());
                    }
                }
                pts
            }
        }
    }
}

/// Deterministic fan of Euclidean unit directions.
pub fn direction_fan(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci spiral.
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = 2.0 * std::f64::consts::PI * i as f64 / golden;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
        _ => unreachable!("dimension out of range"),
    }
}

/// Trigonometric coefficient field for the 1D asymmetric family:
/// a(x) = c0 + ac cos(2 pi k x / period) + as sin(2 pi k x / period).
#[derive(Clone, Debug, Serialize)]
pub struct Coef1 {
    pub c0: f64,
    pub ac: f64,
    pub asn: f64,
    pub k: u32,
    pub period: f64,
}

impl Coef1 {
    pub fn constant(v: f64) -> Coef1 {
        Coef1 { c0: v, ac: 0.0, asn: 0.0, k: 1, period: 1.0 }
    }

    pub fn eval<S: Real>(&self, x: S) -> S {
        if self.ac == 0.0 && self.asn == 0.0 {
            return c(self.c0);
        }
        let w = 2.0 * std::f64::consts::PI * self.k as f64 / self.period;
        let arg = c::<S>(w) * x;
        c::<S>(self.c0) + c::<S>(self.ac) * arg.cos() + c::<S>(self.asn) * arg.sin()
    }

    fn min_on_period(&self) -> f64 {
        (0..2048)
            .map(|i| self.eval(self.period * i as f64 / 2048.0))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum RiemannKind {
    /// Round sphere of the given radius in stereographic coordinates,
    /// g = (2r/(1+|x|^2))^2 delta. Covers everything but one point.
    SphereStereographic { radius: f64 },
    /// Round sphere in polar coordinates (colatitude, longitude),
    /// g = diag(r^2, r^2 sin^2 theta), restricted to a band away from the poles.
    SpherePolar { radius: f64 },
    /// Hyperbolic plane in the Poincare disk, g = (2/(1-|x|^2))^2 delta.
    HyperbolicPoincare,
    /// Constant diagonal coefficients.
    ConstDiag { diag: Vec<f64> },
}

#[derive(Clone, Debug, Serialize)]
pub enum MetricKind {
    Euclidean,
    Riemannian(RiemannKind),
    /// F = sqrt(y' alpha y) + beta . y with constant coefficients.
    Randers { alpha: Vec<Vec<f64>>, beta: Vec<f64> },
    /// Funk norm of the unit ball; forward geodesics never leave the ball.
    Funk,
    /// F = a(x) y for y > 0, b(x) (-y) for y < 0, on a circle or interval.
    Asym1d { a: Coef1, b: Coef1 },
}

/// A metric instance: named kind plus chart.
#[derive(Clone, Debug, Serialize)]
pub struct Metric {
    name: String,
    dim: usize,
    chart: Chart,
    kind: MetricKind,
}

impl Metric {
    pub fn euclidean(dim: usize) -> Metric {
        assert!((1..=3).contains(&dim));
        Metric {
            name: format!("euclidean-{dim}"),
            dim,
            chart: Chart::boxed(vec![-4.0; dim], vec![4.0; dim]),
            kind: MetricKind::Euclidean,
        }
    }

    pub fn sphere_stereographic(radius: f64) -> Metric {
        Metric {
            name: format!("sphere-stereographic(r={radius})"),
            dim: 2,
            chart: Chart::Disk { radius: 60.0, dim: 2 },
            kind: MetricKind::Riemannian(RiemannKind::SphereStereographic { radius }),
        }
    }

    pub fn sphere_polar(radius: f64) -> Metric {
        Metric {
            name: format!("sphere-polar(r={radius})"),
            dim: 2,
            chart: Chart::Box {
                lo: vec![0.15, 0.0],
                hi: vec![std::f64::consts::PI - 0.15, 2.0 * std::f64::consts::PI],
                periodic: vec![false, true],
            },
            kind: MetricKind::Riemannian(RiemannKind::SpherePolar { radius }),
        }
    }

    pub fn hyperbolic_poincare() -> Metric {
        Metric {
            name: "hyperbolic-poincare".into(),
            dim: 2,
            chart: Chart::Disk { radius: 0.95, dim: 2 },
            kind: MetricKind::Riemannian(RiemannKind::HyperbolicPoincare),
        }
    }

    pub fn const_diag(diag: &[f64]) -> Result<Metric> {
        if diag.is_empty() || diag.len() > 3 || diag.iter().any(|&d| d <= 0.0) {
            return Err(Error::Parameter("diagonal coefficients must be positive".into()));
        }
        let dim = diag.len();
        Ok(Metric {
            name: format!("riemannian-diag{diag:?}"),
            dim,
            chart: Chart::boxed(vec![-4.0; dim], vec![4.0; dim]),
            kind: MetricKind::Riemannian(RiemannKind::ConstDiag { diag: diag.to_vec() }),
        })
    }

    pub fn randers(dim: usize, alpha: Vec<Vec<f64>>, beta: Vec<f64>) -> Result<Metric> {
        if !(1..=3).contains(&dim) || alpha.len() != dim || beta.len() != dim {
            return Err(Error::Parameter("Randers coefficient shapes must match dim".into()));
        }
        let mut a = linalg::zero_mat::<f64>();
        for i in 0..dim {
            if alpha[i].len() != dim {
                return Err(Error::Parameter("alpha must be square".into()));
            }
            for j in 0..dim {
                a[i][j] = alpha[i][j];
                if (alpha[i][j] - alpha[j][i]).abs() > 1e-12 {
                    return Err(Error::Parameter("alpha must be symmetric".into()));
                }
            }
        }
        if !linalg::positive_definite(&a, dim) {
            return Err(Error::Parameter("alpha must be positive definite".into()));
        }
        // || beta ||_alpha uses the inverse matrix since beta is a one form.
        let ainv = linalg::inverse(&a, dim);
        let mut b3 = [0.0; 3];
        b3[..dim].copy_from_slice(&beta);
        let nb2 = linalg::dot(&linalg::mat_vec(&ainv, &b3, dim)[..dim], &b3[..dim]);
        if nb2 >= 1.0 {
            return Err(Error::Parameter(format!(
                "Randers drift too strong: ||beta||_alpha = {:.6} must be < 1",
                nb2.sqrt()
            )));
        }
        Ok(Metric {
            name: format!("randers-{dim}(|beta|={:.3})", nb2.sqrt()),
            dim,
            chart: Chart::boxed(vec![-4.0; dim], vec![4.0; dim]),
            kind: MetricKind::Randers { alpha, beta },
        })
    }

    pub fn funk(dim: usize) -> Metric {
        assert!((2..=3).contains(&dim));
        Metric {
            name: format!("funk-{dim}"),
            dim,
            chart: Chart::Disk { radius: 0.999, dim },
            kind: MetricKind::Funk,
        }
    }

    pub fn asym_1d_circle(a: Coef1, b: Coef1, len: f64) -> Result<Metric> {
        if a.min_on_period() <= 0.0 || b.min_on_period() <= 0.0 {
            return Err(Error::Parameter("asymmetric coefficients must stay positive".into()));
        }
        Ok(Metric {
            name: "asym1d-circle".into(),
            dim: 1,
            chart: Chart::Box { lo: vec![0.0], hi: vec![len], periodic: vec![true] },
            kind: MetricKind::Asym1d { a, b },
        })
    }

    pub fn asym_1d_interval(a: Coef1, b: Coef1, lo: f64, hi: f64) -> Result<Metric> {
        if a.min_on_period() <= 0.0 || b.min_on_period() <= 0.0 {
            return Err(Error::Parameter("asymmetric coefficients must stay positive".into()));
        }
        if lo >= hi {
            return Err(Error::Parameter("empty interval".into()));
        }
        Ok(Metric {
            name: "asym1d-interval".into(),
            dim: 1,
            chart: Chart::Box { lo: vec![lo], hi: vec![hi], periodic: vec![false] },
            kind: MetricKind::Asym1d { a, b },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn is_riemannian(&self) -> bool {
        matches!(self.kind, MetricKind::Euclidean | MetricKind::Riemannian(_))
            || matches!(&self.kind, MetricKind::Asym1d { a, b }
                if a.c0 == b.c0 && a.ac == b.ac && a.asn == b.asn && a.k == b.k && a.period == b.period)
    }

    pub(crate) fn check_inside(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Parameter(format!(
                "point dimension {} does not match metric dimension {}",
                x.len(),
                self.dim
            )));
        }
        if !self.chart.contains(x) {
            return Err(Error::ChartBoundary { x: x.to_vec() });
        }
        Ok(())
    }

    /// The norm F(x, y). Requires y != 0 for the non-quadratic kinds; callers
    /// that may hit y = 0 should use [`Metric::f2`].
    pub fn f<S: Real>(&self, x: &[S], y: &[S]) -> S {
        match &self.kind {
            MetricKind::Euclidean => linalg::dot(y, y).sqrt(),
            MetricKind::Riemannian(k) => {
                let g = riemann_g(k, x, self.dim);
                let mut y3 = [c::<S>(0.0); 3];
                y3[..self.dim].copy_from_slice(y);
                linalg::dot(&linalg::mat_vec(&g, &y3, self.dim)[..self.dim], y).sqrt()
            }
            MetricKind::Randers { alpha, beta } => {
                let mut quad = c::<S>(0.0);
                let mut drift = c::<S>(0.0);
                for i in 0..self.dim {
                    drift = drift + c::<S>(beta[i]) * y[i];
                    for j in 0..self.dim {
                        quad = quad + c::<S>(alpha[i][j]) * y[i] * y[j];
                    }
                }
                quad.sqrt() + drift
            }
            MetricKind::Funk => {
                let xy = linalg::dot(x, y);
                let one = c::<S>(1.0);
                let denom = one - linalg::dot(x, x);
                ((xy * xy + linalg::dot(y, y) * denom).sqrt() + xy) / denom
            }
            MetricKind::Asym1d { a, b } => {
                // Sector dispatch on the base value keeps jets on one branch.
                if y[0].val() >= 0.0 {
                    a.eval(x[0]) * y[0]
                } else {
                    -(b.eval(x[0]) * y[0])
                }
            }
        }
    }

    /// F^2, written so the quadratic kinds stay polynomial in y.
    pub fn f2<S: Real>(&self, x: &[S], y: &[S]) -> S {
        match &self.kind {
            MetricKind::Euclidean => linalg::dot(y, y),
            MetricKind::Riemannian(k) => {
                let g = riemann_g(k, x, self.dim);
                let mut y3 = [c::<S>(0.0); 3];
                y3[..self.dim].copy_from_slice(y);
                linalg::dot(&linalg::mat_vec(&g, &y3, self.dim)[..self.dim], y)
            }
            MetricKind::Asym1d { a, b } => {
                let coef = if y[0].val() >= 0.0 { a.eval(x[0]) } else { b.eval(x[0]) };
                coef * coef * y[0] * y[0]
            }
            _ => {
                let f = self.f(x, y);
                f * f
            }
        }
    }
}

/// Riemannian coefficient matrix g_ij(x) for the quadratic kinds.
pub(crate) fn riemann_g<S: Real>(kind: &RiemannKind, x: &[S], dim: usize) -> Mat<S> {
    let mut g = linalg::zero_mat::<S>();
    match kind {
        RiemannKind::SphereStereographic { radius } => {
            let rr = linalg::dot(x, x);
            let factor = c::<S>(2.0 * radius) / (c::<S>(1.0) + rr);
            let f2 = factor * factor;
            g[0][0] = f2;
            g[1][1] = f2;
        }
        RiemannKind::SpherePolar { radius } => {
            let r2 = c::<S>(radius * radius);
            let s = x[0].sin();
            g[0][0] = r2;
            g[1][1] = r2 * s * s;
        }
        RiemannKind::HyperbolicPoincare => {
            let rr = linalg::dot(x, x);
            let factor = c::<S>(2.0) / (c::<S>(1.0) - rr);
            let f2 = factor * factor;
            g[0][0] = f2;
            g[1][1] = f2;
        }
        RiemannKind::ConstDiag { diag } => {
            for (i, &d) in diag.iter().enumerate().take(dim) {
                g[i][i] = c(d);
            }
        }
    }
    g
}

fn as3(v: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    out[..v.len()].copy_from_slice(v);
    out
}

/// Fundamental tensor g_ij(x, y) = 1/2 d^2 F^2 / dy_i dy_j, with a strong
/// convexity check.
pub fn fundamental_tensor(m: &Metric, x: &[f64], y: &[f64]) -> Result<Mat<f64>> {
    m.check_inside(x)?;
    let n = m.dim();
    if linalg::norm2(y) == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let g = guard(|| fundamental_tensor_raw(m, &as3(x), &as3(y), n))?;
    if g.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::JetDomain { primitive: "non-finite" });
    }
    if !linalg::positive_definite(&g, n) {
        return Err(Error::ConvexityViolation { x: x.to_vec(), y: y.to_vec() });
    }
    Ok(g)
}

/// y-Hessian of F^2 / 2 without guards or checks; shared by the curvature
/// pipeline which differentiates through it.
pub(crate) fn fundamental_tensor_raw(m: &Metric, x: &[f64; 3], y: &[f64; 3], n: usize) -> Mat<f64> {
    let xs: Vec<crate::jets::D2> = x[..n].iter().map(|&v| crate::jets::Dual::constant(crate::jets::Dual::constant(v))).collect();
    let ys = dual2_vars(&y[..n]);
    let f2 = m.f2(&xs, &ys);
    let mut g = linalg::zero_mat::<f64>();
    for i in 0..n {
        for j in 0..n {
            g[i][j] = 0.5 * f2.d[i].d[j];
        }
    }
    g
}

/// Legendre transform xi_i = g_ij(x, y) y^j, extended by L(0) = 0.
pub fn legendre(m: &Metric, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    m.check_inside(x)?;
    let n = m.dim();
    if linalg::norm2(y) == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let g = fundamental_tensor(m, x, y)?;
    let gy = linalg::mat_vec(&g, &as3(y), n);
    Ok(gy[..n].to_vec())
}

/// Inverts the Legendre transform by damped Newton iteration on
/// L(y) = xi. The Jacobian of L in y is exactly the fundamental tensor, so
/// each step solves g(x, y) dy = xi - L(y).
pub fn legendre_inverse(m: &Metric, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    m.check_inside(x)?;
    let n = m.dim();
    let xi_norm = linalg::norm2(xi);
    if xi_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let tol = 1e-12 * xi_norm.max(1.0);

    // Seed: closed form per sector in 1D, Euclidean identification otherwise.
    let mut y: Vec<f64> = if n == 1 {
        let mut probe = vec![if xi[0] > 0.0 { 1.0 } else { -1.0 }];
        let g = fundamental_tensor(m, x, &probe)?;
        probe[0] = xi[0] / g[0][0];
        probe
    } else {
        xi.to_vec()
    };

    let residual = |y: &[f64]| -> Result<Vec<f64>> {
        let lx = legendre(m, x, y)?;
        Ok((0..n).map(|i| lx[i] - xi[i]).collect())
    };

    let mut r = residual(&y)?;
    let mut rnorm = linalg::norm2(&r);
    for it in 0..50 {
        if rnorm <= tol {
            return Ok(y);
        }
        let g = fundamental_tensor(m, x, &y)?;
        let ginv = linalg::inverse(&g, n);
        let step = linalg::mat_vec(&ginv, &as3(&r), n);
        // Backtrack until the residual decreases and the trial stays in the
        // metric's smooth cone.
        let mut t = 1.0;
        let mut advanced = false;
        for _ in 0..30 {
            let trial: Vec<f64> = (0..n).map(|i| y[i] - t * step[i]).collect();
            if linalg::norm2(&trial) > 0.0 {
                if let Ok(rt) = residual(&trial) {
                    let rtn = linalg::norm2(&rt);
                    if rtn < rnorm {
                        y = trial;
                        r = rt;
                        rnorm = rtn;
                        advanced = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !advanced {
            return Err(Error::InversionFailure { residual: rnorm, iters: it + 1 });
        }
    }
    if rnorm <= tol {
        Ok(y)
    } else {
        Err(Error::InversionFailure { residual: rnorm, iters: 50 })
    }
}

/// Dual norm F*(x, xi) = sup_{y != 0} xi(y) / F(x, y), through the Legendre
/// identity F*(L(y)) = F(y).
pub fn dual_norm(m: &Metric, x: &[f64], xi: &[f64]) -> Result<f64> {
    if linalg::norm2(xi) == 0.0 {
        m.check_inside(x)?;
        return Ok(0.0);
    }
    let y = legendre_inverse(m, x, xi)?;
    guard(|| {
        let xs: Vec<f64> = x.to_vec();
        m.f(&xs, &y)
    })
}

/// Brute force dual norm over a dense direction fan; cross check for
/// [`dual_norm`].
pub fn dual_norm_sampled(m: &Metric, x: &[f64], xi: &[f64], count: usize) -> Result<f64> {
    m.check_inside(x)?;
    let mut best = f64::NEG_INFINITY;
    for dir in direction_fan(m.dim(), count) {
        let pairing = linalg::dot(xi, &dir);
        if pairing <= 0.0 {
            continue;
        }
        let f = guard(|| m.f(x, &dir))?;
        best = best.max(pairing / f);
    }
    Ok(best.max(0.0))
}

/// Gradient of a function with differential `du` at x: the Legendre inverse
/// of the covector.
pub fn gradient(m: &Metric, x: &[f64], du: &[f64]) -> Result<Vec<f64>> {
    legendre_inverse(m, x, du)
}

/// Reversibility constant sup F(x, -y) / F(x, y) over a deterministic
/// lattice of points and directions. `budget` bounds the total sample count.
pub fn reversibility(m: &Metric, budget: usize) -> Result<f64> {
    let n = m.dim();
    let per_axis = ((budget as f64).powf(1.0 / (n as f64 + 1.0)).ceil() as usize).clamp(3, 24);
    let points = m.chart().lattice(per_axis, 0.8);
    let dirs = direction_fan(n, (4 * per_axis).max(8));
    let mut best: f64 = 1.0;
    for x in &points {
        for y in &dirs {
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            let (fwd, bwd) = guard(|| (m.f(x, y), m.f(x, &neg)))?;
            best = best.max(bwd / fwd).max(fwd / bwd);
        }
    }
    Ok(best)
}
