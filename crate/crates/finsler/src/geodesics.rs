//! Geodesic integration, Jacobi determinants, the distance Laplacian along
//! geodesics, and geodesic sphere/ball/annulus volumes.
//!
//! A geodesic solves x'' + 2G(x, x') = 0. The density eta_t(y) transported
//! along it comes from Jacobi fields J_a with J_a(0) = 0 and J_a'(0) spanning
//! the indicatrix tangent at y:
//!
//!   eta_t(y) = sigma(x(t)) det[x'(t), J(t)] / (sigma(p) det[y, E])
//!
//! which makes eta_t = t^{n-1} (1 + O(t)) exact near 0, so sphere volumes
//! integrate eta against the measure-induced area element on the indicatrix
//! without any separate normalization constant.

use crate::error::{Error, Result};
use crate::jets::{dual_vars, guard, Dual, Real, D1};
use crate::linalg;
use crate::measure::MeasureSpec;
use crate::metric::Metric;
use crate::quad;
use rayon::prelude::*;
use serde::Serialize;

/// Horizon and step-count policy for the fixed-step integrator.
///
/// The default step is min(0.01, T/2000); scenarios may override the count.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepControl {
    pub horizon: f64,
    pub steps: Option<usize>,
}

impl StepControl {
    pub fn new(horizon: f64) -> StepControl {
        StepControl { horizon, steps: None }
    }

    pub fn with_steps(horizon: f64, steps: usize) -> StepControl {
        StepControl { horizon, steps: Some(steps) }
    }

    pub fn step_count(&self) -> usize {
        match self.steps {
            Some(s) => s.max(2),
            None => {
                let dt = 0.01f64.min(self.horizon / 2000.0);
                (self.horizon / dt).ceil() as usize
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Parameter("horizon must be positive and finite".into()));
        }
        let h = self.horizon / self.step_count() as f64;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::StepSize(format!("step size {h} underflowed")));
        }
        Ok(())
    }
}

/// Integrated geodesic states on a uniform time grid, truncated at chart
/// exit.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub vs: Vec<Vec<f64>>,
    /// Time of the last stored state if the curve left the chart early.
    pub exited: Option<f64>,
}

/// Where a direction stops contributing to volumes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CutValue {
    /// First zero of the Jacobi determinant.
    Conjugate(f64),
    /// Trajectory left the coordinate chart.
    ChartExit(f64),
    /// No cut detected before the horizon.
    Horizon(f64),
}

impl CutValue {
    pub fn time(&self) -> f64 {
        match *self {
            CutValue::Conjugate(t) | CutValue::ChartExit(t) | CutValue::Horizon(t) => t,
        }
    }
}

/// One geodesic with its transported density and distance Laplacian.
#[derive(Clone, Debug)]
pub struct GeodesicTrace {
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    pub ts: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub vs: Vec<Vec<f64>>,
    /// eta_t on the same grid; valid (positive) strictly before the cut.
    pub eta: Vec<f64>,
    pub i_y: CutValue,
    /// d/dt ln eta on the positive prefix (length <= ts.len()).
    pub delta_rho: Vec<f64>,
    /// Per-sample Richardson estimates of the finite-difference error in
    /// `delta_rho` (same indexing).
    pub fd_errors: Vec<f64>,
}

impl GeodesicTrace {
    /// Index range on which eta is positive and delta_rho is defined.
    pub fn valid_len(&self) -> usize {
        self.delta_rho.len()
    }

    /// Largest estimated finite-difference error over t in [lo, hi].
    pub fn fd_error_in(&self, lo: f64, hi: f64) -> f64 {
        self.ts
            .iter()
            .zip(&self.fd_errors)
            .filter(|(t, _)| (lo..=hi).contains(*t))
            .map(|(_, e)| *e)
            .fold(0.0, f64::max)
    }
}

/// Combined RK4 sweep over (x, v) plus `k` Jacobi columns (J, J').
/// Returns states and the signed transversal determinant det[v, J].
struct RawTrace {
    ts: Vec<f64>,
    xs: Vec<Vec<f64>>,
    vs: Vec<Vec<f64>>,
    dets: Vec<f64>,
    exited: Option<f64>,
}

fn rk4_combined(
    m: &Metric,
    x0: &[f64],
    v0: &[f64],
    jac: Option<&[Vec<f64>]>,
    ctrl: StepControl,
) -> Result<RawTrace> {
    ctrl.validate()?;
    m.check_inside(x0)?;
    let n = m.dim();
    let k = jac.map_or(0, |e| e.len());
    let steps = ctrl.step_count();
    let h = ctrl.horizon / steps as f64;

    // Flat state: x | v | J columns | J' columns.
    let mut state = Vec::with_capacity(2 * n * (1 + k));
    state.extend_from_slice(x0);
    state.extend_from_slice(v0);
    if let Some(seeds) = jac {
        for _ in 0..k {
            state.extend(std::iter::repeat_n(0.0, n));
        }
        for col in seeds {
            state.extend_from_slice(col);
        }
    }

    let deriv = |s: &[f64], out: &mut Vec<f64>| -> Result<()> {
        let (x, v) = (&s[..n], &s[n..2 * n]);
        if !m.chart().contains(x) {
            return Err(Error::ChartBoundary { x: x.to_vec() });
        }
        out.clear();
        out.extend_from_slice(v);
        if k == 0 {
            let g = guard(|| crate::curvature::spray_generic(m, x, v))?;
            for gi in &g[..n] {
                if !gi.is_finite() {
                    return Err(Error::JetDomain { primitive: "non-finite" });
                }
                out.push(-2.0 * gi);
            }
            return Ok(());
        }
        // One first-order jet in the 2n combined lanes gives G together
        // with its x- and v-derivatives for the linearized deviation system.
        let mut w = Vec::with_capacity(2 * n);
        w.extend_from_slice(x);
        w.extend_from_slice(v);
        let wd: Vec<D1> = dual_vars(&w);
        let gj = guard(|| crate::curvature::spray_generic(m, &wd[..n], &wd[n..]))?;
        for gi in &gj[..n] {
            if !gi.re.is_finite() {
                return Err(Error::JetDomain { primitive: "non-finite" });
            }
            out.push(-2.0 * gi.re);
        }
        // dJ/dt = J'
        out.extend_from_slice(&s[2 * n + n * k..2 * n + 2 * n * k]);
        // dJ'/dt = -2 (G_x J + G_v J')
        for a in 0..k {
            let jcol = &s[2 * n + a * n..2 * n + (a + 1) * n];
            let jdcol = &s[2 * n + n * k + a * n..2 * n + n * k + (a + 1) * n];
            for gi in gj.iter().take(n) {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += gi.d[j] * jcol[j] + gi.d[n + j] * jdcol[j];
                }
                out.push(-2.0 * acc);
            }
        }
        Ok(())
    };

    let det_of = |s: &[f64]| -> f64 {
        let mut mat = linalg::zero_mat::<f64>();
        for i in 0..n {
            mat[i][0] = s[n + i];
            for a in 0..k {
                mat[i][a + 1] = s[2 * n + a * n + i];
            }
        }
        linalg::det(&mat, n)
    };

    let dim = state.len();
    let mut ts = Vec::with_capacity(steps + 1);
    let mut xs = Vec::with_capacity(steps + 1);
    let mut vs = Vec::with_capacity(steps + 1);
    let mut dets = Vec::with_capacity(steps + 1);
    let mut push = |t: f64, s: &[f64], dets: &mut Vec<f64>| {
        ts.push(t);
        xs.push(s[..n].to_vec());
        vs.push(s[n..2 * n].to_vec());
        dets.push(det_of(s));
    };
    push(0.0, &state, &mut dets);

    let mut k1 = Vec::with_capacity(dim);
    let mut k2 = Vec::with_capacity(dim);
    let mut k3 = Vec::with_capacity(dim);
    let mut k4 = Vec::with_capacity(dim);
    let mut tmp = vec![0.0; dim];
    let mut exited = None;
    'steps: for step in 0..steps {
        let t = step as f64 * h;
        let ok = (|| -> Result<()> {
            deriv(&state, &mut k1)?;
            for i in 0..dim {
                tmp[i] = state[i] + 0.5 * h * k1[i];
            }
            deriv(&tmp, &mut k2)?;
            for i in 0..dim {
                tmp[i] = state[i] + 0.5 * h * k2[i];
            }
            deriv(&tmp, &mut k3)?;
            for i in 0..dim {
                tmp[i] = state[i] + h * k3[i];
            }
            deriv(&tmp, &mut k4)?;
            Ok(())
        })();
        match ok {
            Ok(()) => {}
            Err(Error::ChartBoundary { .. }) => {
                exited = Some(t);
                break 'steps;
            }
            Err(e) => return Err(e),
        }
        for i in 0..dim {
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !m.chart().contains(&state[..n]) {
            exited = Some(t);
            break;
        }
        push(t + h, &state, &mut dets);
    }
    Ok(RawTrace { ts, xs, vs, dets, exited })
}

/// Integrates the geodesic with initial data (x0, y0) up to the horizon.
pub fn integrate_geodesic(m: &Metric, x0: &[f64], y0: &[f64], ctrl: StepControl) -> Result<Trajectory> {
    if guard(|| m.f(x0, y0))? <= 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let raw = rk4_combined(m, x0, y0, None, ctrl)?;
    Ok(Trajectory { ts: raw.ts, xs: raw.xs, vs: raw.vs, exited: raw.exited })
}

/// exp_p(y): geodesic time-1 endpoint. exp_p(0) = p.
pub fn exp_map(m: &Metric, p: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    m.check_inside(p)?;
    if linalg::norm2(y) == 0.0 {
        return Ok(p.to_vec());
    }
    let traj = integrate_geodesic(m, p, y, StepControl::new(1.0))?;
    if let Some(t) = traj.exited {
        return Err(Error::Horizon(format!("geodesic left the chart at t = {t:.4}")));
    }
    Ok(traj.xs.last().expect("non-empty trajectory").clone())
}

/// A unit-F direction with tangent seeds of the indicatrix and the signed
/// reference determinant det[y, E].
pub(crate) struct FramedDirection {
    pub y: Vec<f64>,
    pub tangents: Vec<Vec<f64>>,
    pub d0: f64,
}

/// Frames the unit-F direction along `dir` (any nonzero vector): y = dir/F
/// plus d/du of the indicatrix parametrization through it.
pub(crate) fn frame_direction(m: &Metric, x: &[f64], dir: &[f64]) -> Result<FramedDirection> {
    let n = m.dim();
    if linalg::norm2(dir) == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    match n {
        1 => {
            let f = guard(|| m.f(x, dir))?;
            let y = vec![dir[0] / f];
            Ok(FramedDirection { d0: y[0], y, tangents: vec![] })
        }
        2 => {
            let th0 = dir[1].atan2(dir[0]);
            let xc: Vec<D1> = x.iter().map(|&v| Dual::constant(v)).collect();
            let th = Dual::seeded(th0, 1.0);
            let u = [th.cos(), th.sin()];
            let yj = guard(|| {
                let f = m.f(&xc, &u);
                [u[0] / f, u[1] / f]
            })?;
            let y = vec![yj[0].re, yj[1].re];
            let e = vec![yj[0].d[0], yj[1].d[0]];
            let d0 = y[0] * e[1] - y[1] * e[0];
            Ok(FramedDirection { y, tangents: vec![e], d0 })
        }
        3 => {
            // Parameters (u, phi): u = cos(polar), phi azimuth.
            let r = linalg::norm2(dir);
            let u0 = dir[2] / r;
            let phi0 = dir[1].atan2(dir[0]);
            let xc: Vec<D1> = x.iter().map(|&v| Dual::constant(v)).collect();
            let u = Dual::var(u0, 0);
            let phi = Dual::var(phi0, 1);
            let s = (Dual::constant(1.0) - u * u).sqrt();
            let w = [s * phi.cos(), s * phi.sin(), u];
            let yj = guard(|| {
                let f = m.f(&xc, &w);
                [w[0] / f, w[1] / f, w[2] / f]
            })?;
            let y: Vec<f64> = yj.iter().map(|c| c.re).collect();
            let e1: Vec<f64> = yj.iter().map(|c| c.d[0]).collect();
            let e2: Vec<f64> = yj.iter().map(|c| c.d[1]).collect();
            let mut mat = linalg::zero_mat::<f64>();
            for i in 0..3 {
                mat[i][0] = y[i];
                mat[i][1] = e1[i];
                mat[i][2] = e2[i];
            }
            let d0 = linalg::det(&mat, 3);
            Ok(FramedDirection { y, tangents: vec![e1, e2], d0 })
        }
        _ => unreachable!("dimension out of range"),
    }
}

/// Scans the raw determinant sequence for the first non-positive value and
/// interpolates the crossing time.
fn locate_cut(raw: &RawTrace, horizon: f64, d0: f64) -> Result<(CutValue, usize)> {
    // Signed ratio against d0 so orientation does not matter.
    for k in 1..raw.dets.len() {
        let r = raw.dets[k] / d0;
        if r <= 0.0 {
            if k == 1 {
                return Err(Error::Resolution { t: raw.ts[1] });
            }
            let r_prev = raw.dets[k - 1] / d0;
            let frac = r_prev / (r_prev - r);
            let t = raw.ts[k - 1] + frac * (raw.ts[k] - raw.ts[k - 1]);
            return Ok((CutValue::Conjugate(t), k));
        }
    }
    if let Some(t) = raw.exited {
        return Ok((CutValue::ChartExit(t), raw.dets.len()));
    }
    Ok((CutValue::Horizon(horizon), raw.dets.len()))
}

/// Centered log-derivative of eta on a uniform grid (one-sided at the ends),
/// plus per-sample Richardson error estimates comparing h and 2h stencils.
pub fn laplacian_distance(ts: &[f64], eta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = eta.len();
    if m < 3 {
        return Err(Error::Resolution { t: ts.last().copied().unwrap_or(0.0) });
    }
    if let Some(k) = eta.iter().position(|&e| e <= 0.0) {
        return Err(Error::PastCut { cut: ts[k] });
    }
    let h = ts[1] - ts[0];
    let ln: Vec<f64> = eta.iter().map(|e| e.ln()).collect();
    let mut out = vec![0.0; m];
    // Second-order one-sided stencils keep the endpoint error comparable
    // to the centered interior.
    out[0] = (-3.0 * ln[0] + 4.0 * ln[1] - ln[2]) / (2.0 * h);
    out[m - 1] = (3.0 * ln[m - 1] - 4.0 * ln[m - 2] + ln[m - 3]) / (2.0 * h);
    for k in 1..m - 1 {
        out[k] = (ln[k + 1] - ln[k - 1]) / (2.0 * h);
    }
    let mut errs = vec![0.0; m];
    for k in 2..m.saturating_sub(2) {
        let wide = (ln[k + 2] - ln[k - 2]) / (4.0 * h);
        errs[k] = (out[k] - wide).abs() / 3.0;
    }
    if m >= 5 {
        errs[0] = errs[2];
        errs[1] = errs[2];
        errs[m - 2] = errs[m - 3];
        errs[m - 1] = errs[m - 3];
    }
    Ok((out, errs))
}

/// Transports the Jacobi determinant density along the geodesic from p in
/// the unit-F direction y.
pub fn jacobi_determinant(
    m: &Metric,
    mu: &MeasureSpec,
    p: &[f64],
    y: &[f64],
    ctrl: StepControl,
) -> Result<GeodesicTrace> {
    m.check_inside(p)?;
    let f = guard(|| m.f(p, y))?;
    if (f - 1.0).abs() > 1e-8 {
        return Err(Error::Parameter(format!(
            "direction must be unit-F (got F = {f:.12}); rescale before tracing"
        )));
    }
    let framed = frame_direction(m, p, y)?;
    let raw = rk4_combined(m, p, &framed.y, Some(&framed.tangents), ctrl)?;
    let (i_y, valid_end) = locate_cut(&raw, ctrl.horizon, framed.d0)?;

    let sigma_p: f64 = guard(|| mu.sigma(m, p))?;
    let denom = sigma_p * framed.d0;
    let eta: Vec<f64> = raw
        .xs
        .iter()
        .zip(&raw.dets)
        .map(|(x, det)| guard(|| mu.sigma(m, x)).map(|s| s * det / denom))
        .collect::<Result<_>>()?;

    // Delta rho on the positive prefix, skipping the t = 0 node where
    // eta = 0 by construction.
    let (mut delta_rho, mut fd_errors) = if valid_end > 3 {
        let (mut dr, mut err) = laplacian_distance(&raw.ts[1..valid_end], &eta[1..valid_end])?;
        dr.insert(0, f64::INFINITY);
        err.insert(0, 0.0);
        (dr, err)
    } else {
        (vec![f64::INFINITY], vec![0.0])
    };
    delta_rho.truncate(valid_end);
    fd_errors.truncate(valid_end);

    Ok(GeodesicTrace {
        p: p.to_vec(),
        y: framed.y,
        ts: raw.ts,
        xs: raw.xs,
        vs: raw.vs,
        eta,
        i_y,
        delta_rho,
        fd_errors,
    })
}

/// Direction set over the indicatrix at p with quadrature weights for the
/// induced area element.
pub struct DirectionSet {
    pub seeds: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Deterministic indicatrix quadrature directions: uniform angles for n=2,
/// Gauss-Legendre (cos polar) x uniform azimuth for n=3, both points for
/// n=1. `count` is the angular resolution (total points for n=2).
pub fn indicatrix_directions(dim: usize, count: usize) -> DirectionSet {
    match dim {
        1 => DirectionSet { seeds: vec![vec![1.0], vec![-1.0]], weights: vec![1.0, 1.0] },
        2 => {
            let w = 2.0 * std::f64::consts::PI / count as f64;
            let (seeds, weights) = (0..count)
                .map(|i| {
                    let th = w * i as f64;
                    (vec![th.cos(), th.sin()], w)
                })
                .unzip();
            DirectionSet { seeds, weights }
        }
        3 => {
            let mp = ((count as f64 / 2.0).sqrt().round() as usize).max(4);
            let ma = 2 * mp;
            let wphi = 2.0 * std::f64::consts::PI / ma as f64;
            let mut seeds = Vec::with_capacity(mp * ma);
            let mut weights = Vec::with_capacity(mp * ma);
            for (u, wu) in quad::gauss_legendre(mp) {
                let s = (1.0 - u * u).sqrt();
                for k in 0..ma {
                    let phi = wphi * (k as f64 + 0.5);
                    seeds.push(vec![s * phi.cos(), s * phi.sin(), u]);
                    weights.push(wu * wphi);
                }
            }
            DirectionSet { seeds, weights }
        }
        _ => unreachable!("dimension out of range"),
    }
}

/// Per-direction sphere-volume integrand sampled on the shared time grid:
/// w  sigma(x(t))  |det[v, J]|, zeroed at and past the cut.
struct DirTrace {
    integrand: Vec<f64>,
    cut: CutValue,
}

/// Precomputed volume scan around a base point: geodesic spheres, balls and
/// annuli at any radius up to the horizon.
pub struct VolumeScan {
    ts: Vec<f64>,
    traces: Vec<DirTrace>,
    /// Cumulative trapezoid of the sphere volume, for ball volumes.
    cumulative: Vec<f64>,
    pub direction_count: usize,
    pub time_step: f64,
}

impl VolumeScan {
    pub fn new(
        m: &Metric,
        mu: &MeasureSpec,
        p: &[f64],
        ctrl: StepControl,
        dir_count: usize,
    ) -> Result<VolumeScan> {
        m.check_inside(p)?;
        ctrl.validate()?;
        let dirs = indicatrix_directions(m.dim(), dir_count);
        let steps = ctrl.step_count();
        let grid: Vec<f64> = (0..=steps)
            .map(|k| ctrl.horizon * k as f64 / steps as f64)
            .collect();

        let traces: Vec<Result<DirTrace>> = dirs
            .seeds
            .par_iter()
            .zip(&dirs.weights)
            .map(|(seed, &w)| {
                let framed = frame_direction(m, p, seed)?;
                let raw = rk4_combined(m, p, &framed.y, Some(&framed.tangents), ctrl)?;
                let (cut, valid_end) = locate_cut(&raw, ctrl.horizon, framed.d0)?;
                let sign = framed.d0.signum();
                let mut integrand = vec![0.0; steps + 1];
                for k in 0..valid_end.min(raw.ts.len()) {
                    let sigma: f64 = guard(|| mu.sigma(m, &raw.xs[k]))?;
                    integrand[k] = w * sigma * sign * raw.dets[k];
                }
                Ok(DirTrace { integrand, cut })
            })
            .collect();

        let mut resolved = Vec::with_capacity(traces.len());
        for t in traces {
            resolved.push(t?);
        }

        let mut sphere = vec![0.0; steps + 1];
        for tr in &resolved {
            for (k, v) in tr.integrand.iter().enumerate() {
                sphere[k] += v;
            }
        }
        let h = ctrl.horizon / steps as f64;
        let mut cumulative = vec![0.0; steps + 1];
        for k in 1..=steps {
            cumulative[k] = cumulative[k - 1] + 0.5 * h * (sphere[k - 1] + sphere[k]);
        }

        Ok(VolumeScan {
            ts: grid,
            traces: resolved,
            cumulative,
            direction_count: dirs.seeds.len(),
            time_step: h,
        })
    }

    pub fn horizon(&self) -> f64 {
        *self.ts.last().expect("non-empty grid")
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if !(0.0..=self.horizon() + 1e-12).contains(&t) {
            return Err(Error::Horizon(format!(
                "radius {t} exceeds the scan horizon {}",
                self.horizon()
            )));
        }
        let h = self.time_step;
        let k = ((t / h).floor() as usize).min(self.ts.len() - 2);
        Ok((k, (t - self.ts[k]) / h))
    }

    /// Vol of the forward geodesic sphere of radius t (directions past
    /// their cut contribute zero).
    pub fn sphere_volume(&self, t: f64) -> Result<f64> {
        let (k, frac) = self.locate(t)?;
        let mut acc = 0.0;
        for tr in &self.traces {
            acc += tr.integrand[k] + frac * (tr.integrand[k + 1] - tr.integrand[k]);
        }
        Ok(acc)
    }

    /// Vol of the forward geodesic ball of radius r.
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        let (k, frac) = self.locate(r)?;
        let h = self.time_step;
        let s_k = self.sphere_volume(self.ts[k])?;
        let s_r = self.sphere_volume(r)?;
        Ok(self.cumulative[k] + 0.5 * frac * h * (s_k + s_r))
    }

    /// Vol(B_p(r) \ B_p(rho)).
    pub fn annulus_volume(&self, rho: f64, r: f64) -> Result<f64> {
        if rho > r {
            return Err(Error::Parameter(format!("annulus needs rho <= r, got {rho} > {r}")));
        }
        Ok(self.ball_volume(r)? - self.ball_volume(rho)?)
    }

    pub fn cuts(&self) -> Vec<CutValue> {
        self.traces.iter().map(|t| t.cut).collect()
    }
}

/// Ball/sphere/annulus volume table with quadrature metadata.
#[derive(Clone, Debug, Serialize)]
pub struct BallVolumeReport {
    pub p: Vec<f64>,
    pub radii: Vec<f64>,
    pub sphere_volumes: Vec<f64>,
    pub ball_volumes: Vec<f64>,
    pub rho_o: f64,
    pub annulus_volumes: Vec<f64>,
    pub direction_count: usize,
    pub time_step: f64,
    pub doubling_delta: f64,
}

/// Builds the volume report, including an order-doubling stability check on
/// the direction count (> 1e-4 relative drift is an error).
pub fn ball_volume_report(
    m: &Metric,
    mu: &MeasureSpec,
    p: &[f64],
    radii: &[f64],
    rho_o: f64,
    ctrl: StepControl,
    dir_count: usize,
) -> Result<BallVolumeReport> {
    if radii.is_empty() {
        return Err(Error::Parameter("empty radius grid".into()));
    }
    let scan = VolumeScan::new(m, mu, p, ctrl, dir_count)?;
    let scan2 = VolumeScan::new(m, mu, p, ctrl, 2 * dir_count)?;
    let mut doubling_delta: f64 = 0.0;
    let mut sphere_volumes = Vec::with_capacity(radii.len());
    let mut ball_volumes = Vec::with_capacity(radii.len());
    let mut annulus_volumes = Vec::with_capacity(radii.len());
    for &r in radii {
        let b = scan.ball_volume(r)?;
        let b2 = scan2.ball_volume(r)?;
        doubling_delta = doubling_delta.max((b - b2).abs() / b2.abs().max(1e-300));
        sphere_volumes.push(scan.sphere_volume(r)?);
        ball_volumes.push(b);
        annulus_volumes.push(scan.annulus_volume(rho_o.min(r), r)?);
    }
    if doubling_delta > 1e-4 {
        return Err(Error::QuadraturePrecision { delta: doubling_delta });
    }
    Ok(BallVolumeReport {
        p: p.to_vec(),
        radii: radii.to_vec(),
        sphere_volumes,
        ball_volumes,
        rho_o,
        annulus_volumes,
        direction_count: scan.direction_count,
        time_step: scan.time_step,
        doubling_delta,
    })
}

/// CSV export of a trace: t, coordinates, eta, delta_rho (blank past cut).
pub fn write_trace_csv<W: std::io::Write>(trace: &GeodesicTrace, mut out: W) -> std::io::Result<()> {
    let n = trace.p.len();
    let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    writeln!(out, "t,{},eta,delta_rho", coords.join(","))?;
    for k in 0..trace.ts.len() {
        let xs: Vec<String> = trace.xs[k].iter().map(|v| format!("{v:.12e}")).collect();
        let dr = if k > 0 && k < trace.valid_len() {
            format!("{:.12e}", trace.delta_rho[k])
        } else {
            String::new()
        };
        writeln!(
            out,
            "{:.12e},{},{:.12e},{}",
            trace.ts[k],
            xs.join(","),
            trace.eta[k],
            dr
        )?;
    }
    Ok(())
}
