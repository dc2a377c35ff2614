//! Discrete Finsler calculus on a 1D grid: the nonlinear gradient and
//! Laplacian of an asymmetric metric, the linearized operators with frozen
//! direction field, explicit heat flow with energy diagnostics, and the
//! variance, spectral-gap and integrated-Bochner verifiers built on them.
//!
//! The Laplacian is discretized in flux form on the staggered half-grid:
//! each edge carries a slope, a sector coefficient selected by the slope's
//! sign, and a measure weight. Divergence of edge fluxes makes the discrete
//! weak identity and mass conservation exact by construction, not by
//! tolerance.

use crate::error::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Topology {
    Periodic,
    Reflecting,
}

/// One-dimensional grid carrying an asymmetric metric (slope-dependent
/// coefficients a for forward, b for backward) and a normalized measure.
///
/// Node weights satisfy sum(w) = 1; edge weights `omega` discretize the
/// same measure on the staggered half-grid.
#[derive(Clone, Debug)]
pub struct Grid1D {
    pub topology: Topology,
    pub xs: Vec<f64>,
    pub h: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
    pub a_half: Vec<f64>,
    pub b_half: Vec<f64>,
    pub omega: Vec<f64>,
}

fn normalize_weights(w: &mut [f64], omega: &mut [f64]) {
    let z: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= z;
    }
    for v in omega.iter_mut() {
        *v /= z;
    }
    // Absorb the rounding residual into the heaviest node so the sum is 1
    // to the last bit, not just to m * eps.
    let resid: f64 = w.iter().sum::<f64>() - 1.0;
    let argmax = (0..w.len())
        .max_by(|&i, &j| w[i].partial_cmp(&w[j]).expect("finite weights"))
        .expect("non-empty");
    w[argmax] -= resid;
}

impl Grid1D {
    /// Periodic grid on [0, len) with node-resolved coefficients and
    /// density.
    pub fn circle(
        m: usize,
        len: f64,
        a: impl Fn(f64) -> f64,
        b: impl Fn(f64) -> f64,
        sigma: impl Fn(f64) -> f64,
    ) -> Result<Grid1D> {
        if m < 2 {
            return Err(Error::Parameter("periodic grid needs at least 2 nodes".into()));
        }
        if !(len > 0.0) {
            return Err(Error::Parameter("grid length must be positive".into()));
        }
        let h = len / m as f64;
        let xs: Vec<f64> = (0..m).map(|j| j as f64 * h).collect();
        let an: Vec<f64> = xs.iter().map(|&x| a(x)).collect();
        let bn: Vec<f64> = xs.iter().map(|&x| b(x)).collect();
        let mut w: Vec<f64> = xs.iter().map(|&x| sigma(x) * h).collect();
        let mut omega: Vec<f64> = (0..m).map(|j| sigma(h * (j as f64 + 0.5)) * h).collect();
        let a_half: Vec<f64> = (0..m).map(|j| a(h * (j as f64 + 0.5))).collect();
        let b_half: Vec<f64> = (0..m).map(|j| b(h * (j as f64 + 0.5))).collect();
        normalize_weights(&mut w, &mut omega);
        let g = Grid1D { topology: Topology::Periodic, xs, h, a: an, b: bn, w, a_half, b_half, omega };
        g.validate()?;
        Ok(g)
    }

    /// Uniform reversible circle: a = b = 1, uniform density.
    pub fn uniform_circle(m: usize, len: f64) -> Result<Grid1D> {
        Grid1D::circle(m, len, |_| 1.0, |_| 1.0, |_| 1.0)
    }

    /// Asymmetric circle with constant coefficients and uniform density.
    pub fn asym_circle(m: usize, a: f64, b: f64, len: f64) -> Result<Grid1D> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Parameter("metric coefficients must be positive".into()));
        }
        Grid1D::circle(m, len, move |_| a, move |_| b, |_| 1.0)
    }

    /// Reflecting (zero-flux) interval [lo, hi] with constant metric
    /// coefficients and Gaussian density exp(-k x^2 / 2).
    ///
    /// Edge weights are accumulated from the exact relation
    /// omega_{j+1/2} - omega_{j-1/2} = -k h x_j w_j, which makes the
    /// linear function an exact eigenfunction of the discrete Laplacian
    /// (eigenvalue k/a^2 on positive slopes). Offset from the midpoint
    /// density is O(h^2), so the discretization stays consistent.
    pub fn gaussian_interval_asym(m: usize, a: f64, b: f64, k: f64, half_len: f64) -> Result<Grid1D> {
        if m < 3 {
            return Err(Error::Parameter("reflecting grid needs at least 3 nodes".into()));
        }
        if !(a > 0.0 && b > 0.0 && k > 0.0 && half_len > 0.0) {
            return Err(Error::Parameter(
                "gaussian interval needs a, b, k, half_len > 0".into(),
            ));
        }
        let h = 2.0 * half_len / (m - 1) as f64;
        let xs: Vec<f64> = (0..m).map(|j| -half_len + j as f64 * h).collect();
        let mut w: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let cell = if j == 0 || j == m - 1 { 0.5 * h } else { h };
                (-0.5 * k * x * x).exp() * cell
            })
            .collect();
        let mut omega = vec![0.0; m - 1];
        normalize_weights(&mut w, &mut omega);
        let mut acc = 0.0;
        for j in 0..m - 1 {
            acc -= k * h * xs[j] * w[j];
            omega[j] = acc;
        }
        let g = Grid1D {
            topology: Topology::Reflecting,
            xs,
            h,
            a: vec![a; m],
            b: vec![b; m],
            w,
            a_half: vec![a; m - 1],
            b_half: vec![b; m - 1],
            omega,
        };
        g.validate()?;
        Ok(g)
    }

    /// Reversible Gaussian interval with the conventional half-width
    /// 8/sqrt(k), wide enough that boundary truncation is below rounding.
    pub fn gaussian_interval(m: usize, k: f64) -> Result<Grid1D> {
        Grid1D::gaussian_interval_asym(m, 1.0, 1.0, k, 8.0 / k.sqrt())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn edge_count(&self) -> usize {
        match self.topology {
            Topology::Periodic => self.xs.len(),
            Topology::Reflecting => self.xs.len() - 1,
        }
    }

    /// Endpoints (left, right) of edge e.
    pub fn edge_nodes(&self, e: usize) -> (usize, usize) {
        match self.topology {
            Topology::Periodic => (e, (e + 1) % self.xs.len()),
            Topology::Reflecting => (e, e + 1),
        }
    }

    fn edge_slope(&self, u: &[f64], e: usize) -> f64 {
        let (l, r) = self.edge_nodes(e);
        (u[r] - u[l]) / self.h
    }

    /// Centered node slope; one-sided at reflecting endpoints.
    fn node_slope(&self, u: &[f64], j: usize) -> f64 {
        let m = self.xs.len();
        match self.topology {
            Topology::Periodic => {
                let (p, n) = ((j + m - 1) % m, (j + 1) % m);
                (u[n] - u[p]) / (2.0 * self.h)
            }
            Topology::Reflecting => {
                if j == 0 {
                    (u[1] - u[0]) / self.h
                } else if j == m - 1 {
                    (u[m - 1] - u[m - 2]) / self.h
                } else {
                    (u[j + 1] - u[j - 1]) / (2.0 * self.h)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let sum: f64 = self.w.iter().sum();
        if (sum - 1.0).abs() > 1e-14 {
            return Err(Error::Parameter(format!("weights sum to {sum}, expected 1")));
        }
        for j in 0..self.len() {
            if !(self.a[j] > 0.0 && self.b[j] > 0.0 && self.w[j] > 0.0) {
                return Err(Error::Parameter(format!("non-positive grid data at node {j}")));
            }
        }
        for e in 0..self.edge_count() {
            if !(self.omega[e] > 0.0 && self.a_half[e] > 0.0 && self.b_half[e] > 0.0) {
                return Err(Error::Parameter(format!("non-positive grid data at edge {e}")));
            }
        }
        Ok(())
    }

    /// Largest explicit-Euler step with a 0.4 safety factor against the
    /// diagonal stability bound, using the worst-sector diffusivity.
    pub fn stable_dt(&self) -> f64 {
        let m = self.len();
        let mut coef = vec![0.0; m];
        for e in 0..self.edge_count() {
            let (l, r) = self.edge_nodes(e);
            let c = 1.0 / self.a_half[e].min(self.b_half[e]).powi(2);
            coef[l] += self.omega[e] * c;
            coef[r] += self.omega[e] * c;
        }
        (0..m)
            .map(|j| 0.4 * self.h * self.h * self.w[j] / coef[j])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Sector coefficient 1/a^2 or 1/b^2 by slope sign; zero slope carries no
/// flux, so its value never enters the nonlinear operators.
fn sector_coeff(a: f64, b: f64, slope: f64) -> f64 {
    if slope > 0.0 {
        1.0 / (a * a)
    } else if slope < 0.0 {
        1.0 / (b * b)
    } else {
        0.0
    }
}

/// Frozen-weight coefficient: same sector selection, but zero slopes take
/// the average metric weight so the linearized operator stays elliptic.
fn frozen_coeff(a: f64, b: f64, slope: f64) -> f64 {
    if slope > 0.0 {
        1.0 / (a * a)
    } else if slope < 0.0 {
        1.0 / (b * b)
    } else {
        2.0 / (a * a + b * b)
    }
}

/// Node values of the gradient vector: the slope mapped through the
/// sector's inverse metric (centered differences, one-sided at reflecting
/// ends).
pub fn grid_gradient(g: &Grid1D, u: &[f64]) -> Vec<f64> {
    (0..g.len())
        .map(|j| {
            let s = g.node_slope(u, j);
            sector_coeff(g.a[j], g.b[j], s) * s
        })
        .collect()
}

/// Node values of F(grad u) = F*(du): s/a on positive slopes, |s|/b on
/// negative ones.
pub fn gradient_norm(g: &Grid1D, u: &[f64]) -> Vec<f64> {
    (0..g.len())
        .map(|j| {
            let s = g.node_slope(u, j);
            if s > 0.0 {
                s / g.a[j]
            } else {
                -s / g.b[j]
            }
        })
        .collect()
}

/// Dual norm of du at each node, for the sector-consistency diagnostic
/// F(grad u) = F*(du).
pub fn dual_norm(g: &Grid1D, u: &[f64]) -> Vec<f64> {
    gradient_norm(g, u)
}

fn edge_flux(g: &Grid1D, u: &[f64], e: usize) -> f64 {
    let s = g.edge_slope(u, e);
    sector_coeff(g.a_half[e], g.b_half[e], s) * s
}

/// Nonlinear Laplacian div_m(grad u) in flux form: the weighted divergence
/// of edge fluxes. Adjoint to `gradient_pairing` and mean-zero exactly.
pub fn finsler_laplacian(g: &Grid1D, u: &[f64]) -> Vec<f64> {
    let m = g.len();
    let mut out = vec![0.0; m];
    for e in 0..g.edge_count() {
        let (l, r) = g.edge_nodes(e);
        let flux = g.omega[e] * edge_flux(g, u, e);
        // Node k sees +flux of its right edge and -flux of its left one,
        // so the accumulated value is already the signed divergence.
        out[l] += flux;
        out[r] -= flux;
    }
    for j in 0..m {
        out[j] /= g.h * g.w[j];
    }
    out
}

/// Discrete integral of dphi(grad u) over the half-grid: the pairing whose
/// negative adjoint defines the Laplacian.
pub fn gradient_pairing(g: &Grid1D, phi: &[f64], u: &[f64]) -> f64 {
    (0..g.edge_count())
        .map(|e| g.omega[e] * g.edge_slope(phi, e) * edge_flux(g, u, e))
        .sum()
}

/// Dirichlet energy: integral of F^2(grad u) over the half-grid.
pub fn dirichlet_energy(g: &Grid1D, u: &[f64]) -> f64 {
    gradient_pairing(g, u, u)
}

/// Linearized Laplacian with the direction field frozen at `base`.
pub fn linearized_laplacian(g: &Grid1D, base: &[f64], h_fn: &[f64]) -> Vec<f64> {
    let m = g.len();
    let mut out = vec![0.0; m];
    for e in 0..g.edge_count() {
        let (l, r) = g.edge_nodes(e);
        let c = frozen_coeff(g.a_half[e], g.b_half[e], g.edge_slope(base, e));
        let flux = g.omega[e] * c * g.edge_slope(h_fn, e);
        out[l] += flux;
        out[r] -= flux;
    }
    for j in 0..m {
        out[j] /= g.h * g.w[j];
    }
    out
}

/// Linearized gradient at nodes: slope of h divided by the frozen metric
/// weight of `base`.
pub fn linearized_gradient(g: &Grid1D, base: &[f64], h_fn: &[f64]) -> Vec<f64> {
    (0..g.len())
        .map(|j| {
            let c = frozen_coeff(g.a[j], g.b[j], g.node_slope(base, j));
            c * g.node_slope(h_fn, j)
        })
        .collect()
}

/// Half-grid pairing of the frozen-weight bilinear form. The slopes
/// multiply before the coefficient, so swapping f1 and f2 returns the
/// identical bits.
pub fn linearized_pairing(g: &Grid1D, base: &[f64], f1: &[f64], f2: &[f64]) -> f64 {
    (0..g.edge_count())
        .map(|e| {
            let c = frozen_coeff(g.a_half[e], g.b_half[e], g.edge_slope(base, e));
            g.omega[e] * c * (g.edge_slope(f1, e) * g.edge_slope(f2, e))
        })
        .sum()
}

/// Weak residual of the frozen-weight product rule
/// Delta(f^2) = 2 f Delta f + 2 g(grad f, grad f) paired against phi,
/// with the quadratic term evaluated on the half-grid. Zero to rounding
/// by the discrete product rule of differences.
pub fn weak_product_rule_residual(g: &Grid1D, base: &[f64], f: &[f64], phi: &[f64]) -> f64 {
    let fsq: Vec<f64> = f.iter().map(|v| v * v).collect();
    let lap_fsq = linearized_laplacian(g, base, &fsq);
    let lap_f = linearized_laplacian(g, base, f);
    let lhs: f64 = (0..g.len())
        .map(|j| g.w[j] * phi[j] * (lap_fsq[j] - 2.0 * f[j] * lap_f[j]))
        .sum();
    let rhs: f64 = (0..g.edge_count())
        .map(|e| {
            let (l, r) = g.edge_nodes(e);
            let c = frozen_coeff(g.a_half[e], g.b_half[e], g.edge_slope(base, e));
            let s = g.edge_slope(f, e);
            g.omega[e] * 0.5 * (phi[l] + phi[r]) * c * (s * s)
        })
        .sum::<f64>()
        * 2.0;
    lhs - rhs
}

/// Weighted mean of a grid function (the measure is a probability).
pub fn weighted_mean(g: &Grid1D, f: &[f64]) -> f64 {
    (0..g.len()).map(|j| g.w[j] * f[j]).sum()
}

/// Variance with respect to the normalized measure.
pub fn variance(g: &Grid1D, f: &[f64]) -> f64 {
    let mean = weighted_mean(g, f);
    let second: f64 = (0..g.len()).map(|j| g.w[j] * f[j] * f[j]).sum();
    second - mean * mean
}

/// Heat trajectory snapshots: diagnostics every stride steps plus the
/// final state. Analytic derivative columns come from the energy
/// identities; FD columns from the snapshot grid (NaN at the ends).
#[derive(Clone, Debug)]
pub struct HeatTrajectory {
    pub ts: Vec<f64>,
    pub us: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub phi_prime_analytic: Vec<f64>,
    pub phi_prime_fd: Vec<f64>,
    pub phi_second_analytic: Vec<f64>,
    pub phi_second_fd: Vec<f64>,
    pub energy: Vec<f64>,
    pub variance: Vec<f64>,
    pub mean: Vec<f64>,
    /// Node field g(t) = g_frozen(grad F(grad u), grad F(grad u)).
    pub g_fields: Vec<Vec<f64>>,
    pub total_g: Vec<f64>,
    pub dt: f64,
    /// Largest |mean(u_t) - mean(u_0)| seen at snapshots.
    pub mass_drift: f64,
}

/// Correction field of a heat trajectory at one instant: the frozen-norm
/// squared linearized gradient of F(grad u).
fn g_field(g: &Grid1D, u: &[f64]) -> Vec<f64> {
    let norm = gradient_norm(g, u);
    (0..g.len())
        .map(|j| {
            let c = frozen_coeff(g.a[j], g.b[j], g.node_slope(u, j));
            let d = g.node_slope(&norm, j);
            c * d * d
        })
        .collect()
}

/// Explicit Euler heat flow du/dt = Laplacian(u) with a monotonicity
/// watchdog on Phi(t) = integral of u^2.
pub fn heat_flow(g: &Grid1D, f0: &[f64], t_end: f64, dt: f64) -> Result<HeatTrajectory> {
    if f0.len() != g.len() {
        return Err(Error::Parameter(format!(
            "initial data has {} nodes, grid has {}",
            f0.len(),
            g.len()
        )));
    }
    if !(t_end > 0.0) || !(dt > 0.0) {
        return Err(Error::Parameter("heat flow needs T > 0 and dt > 0".into()));
    }
    let stable = g.stable_dt();
    if dt > stable * (1.0 + 1e-12) {
        return Err(Error::StepSize(format!(
            "dt = {dt:.3e} exceeds the stability bound {stable:.3e}"
        )));
    }

    let steps = (t_end / dt).ceil() as usize;
    let stride = (steps / 2000).max(1);
    let mut u = f0.to_vec();
    let mut traj = HeatTrajectory {
        ts: Vec::new(),
        us: Vec::new(),
        phi: Vec::new(),
        phi_prime_analytic: Vec::new(),
        phi_prime_fd: Vec::new(),
        phi_second_analytic: Vec::new(),
        phi_second_fd: Vec::new(),
        energy: Vec::new(),
        variance: Vec::new(),
        mean: Vec::new(),
        g_fields: Vec::new(),
        total_g: Vec::new(),
        dt,
        mass_drift: 0.0,
    };
    let mean0 = weighted_mean(g, &u);
    let phi0: f64 = (0..g.len()).map(|j| g.w[j] * u[j] * u[j]).sum();
    let watchdog = 1e-12 * (1.0 + phi0.abs());
    let mut phi_prev = phi0;

    let record = |g: &Grid1D, u: &[f64], t: f64, traj: &mut HeatTrajectory| {
        let lap = finsler_laplacian(g, u);
        let e = dirichlet_energy(g, u);
        let phi: f64 = (0..g.len()).map(|j| g.w[j] * u[j] * u[j]).sum();
        let gf = g_field(g, u);
        let tg = weighted_mean(g, &gf);
        let mean = weighted_mean(g, u);
        traj.ts.push(t);
        traj.us.push(u.to_vec());
        traj.phi.push(phi);
        traj.phi_prime_analytic.push(-2.0 * e);
        traj.phi_second_analytic
            .push(4.0 * (0..g.len()).map(|j| g.w[j] * lap[j] * lap[j]).sum::<f64>());
        traj.energy.push(e);
        traj.variance.push(variance(g, u));
        traj.mean.push(mean);
        traj.g_fields.push(gf);
        traj.total_g.push(tg);
        traj.mass_drift = traj.mass_drift.max((mean - mean0).abs());
    };

    record(g, &u, 0.0, &mut traj);
    for step in 0..steps {
        let lap = finsler_laplacian(g, &u);
        for j in 0..g.len() {
            u[j] += dt * lap[j];
        }
        let phi: f64 = (0..g.len()).map(|j| g.w[j] * u[j] * u[j]).sum();
        if phi > phi_prev + watchdog {
            return Err(Error::StepSize(format!(
                "Phi increased by {:.3e} at step {step}; the flow is unstable",
                phi - phi_prev
            )));
        }
        phi_prev = phi;
        if (step + 1) % stride == 0 || step + 1 == steps {
            record(g, &u, (step + 1) as f64 * dt, &mut traj);
        }
    }

    // FD columns on the (possibly uneven at the tail) snapshot grid.
    let n = traj.ts.len();
    traj.phi_prime_fd = vec![f64::NAN; n];
    traj.phi_second_fd = vec![f64::NAN; n];
    for k in 1..n.saturating_sub(1) {
        let (t0, t1, t2) = (traj.ts[k - 1], traj.ts[k], traj.ts[k + 1]);
        let (p0, p1, p2) = (traj.phi[k - 1], traj.phi[k], traj.phi[k + 1]);
        let (dl, dr) = (t1 - t0, t2 - t1);
        traj.phi_prime_fd[k] =
            (p2 * dl * dl - p0 * dr * dr + p1 * (dr * dr - dl * dl)) / (dl * dr * (dl + dr));
        traj.phi_second_fd[k] = 2.0 * (p0 * dr + p2 * dl - p1 * (dl + dr)) / (dl * dr * (dl + dr));
    }
    Ok(traj)
}

/// Time integral of the heat-flow correction field, per node and in total,
/// with an exponential tail fitted past the simulated horizon.
#[derive(Clone, Debug, Serialize)]
pub struct GCorrection {
    pub per_node: Vec<f64>,
    pub total: f64,
    pub tail_share: f64,
    /// Share of the total carried by nodes where the slope changes sign
    /// (where the one-sided sector surrogate is least trustworthy).
    pub sign_change_share: f64,
    pub flagged: bool,
}

/// Integrates g(t) over the trajectory by trapezoid plus a fitted
/// exponential tail. Fails when g has not decayed enough for the tail to
/// stay below 1% of the accumulated integral.
pub fn g_correction(g: &Grid1D, traj: &HeatTrajectory) -> Result<GCorrection> {
    let n = traj.ts.len();
    if n < 4 {
        return Err(Error::Parameter("trajectory too short for tail fitting".into()));
    }
    let m = g.len();
    let mut per_node = vec![0.0; m];
    for k in 1..n {
        let dt = traj.ts[k] - traj.ts[k - 1];
        for j in 0..m {
            per_node[j] += 0.5 * dt * (traj.g_fields[k - 1][j] + traj.g_fields[k][j]);
        }
    }

    // Sign-change share, accumulated over the same trapezoid weights.
    let mut flagged_num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        let u = &traj.us[k];
        let tw = if k == 0 {
            0.5 * (traj.ts[1] - traj.ts[0])
        } else if k == n - 1 {
            0.5 * (traj.ts[n - 1] - traj.ts[n - 2])
        } else {
            0.5 * (traj.ts[k + 1] - traj.ts[k - 1])
        };
        for j in 0..m {
            let contrib = tw * g.w[j] * traj.g_fields[k][j];
            den += contrib;
            let (sl, sr) = adjacent_slopes(g, u, j);
            if sl * sr < 0.0 {
                flagged_num += contrib;
            }
        }
    }
    let sign_change_share = if den > 0.0 { flagged_num / den } else { 0.0 };

    let peak = traj.total_g.iter().cloned().fold(0.0f64, f64::max);
    let last = *traj.total_g.last().expect("non-empty");
    let span = traj.ts[n - 1] - traj.ts[0];
    // At rounding level there is nothing to extrapolate: the fit would see
    // a flat line of noise and misreport a stalled decay.
    let negligible = peak * (span + 1.0) < 1e-14 * (1.0 + traj.phi[0].abs());
    let mut tail_total = 0.0;
    if peak > 0.0 && !negligible && last > peak * 1e-14 && last > 1e-280 {
        // Fit ln g ~ alpha - rate * t on the last 30% of snapshots.
        let start = n - (n / 3).max(4).min(n - 1);
        let pts: Vec<(f64, f64)> = (start..n)
            .filter(|&k| traj.total_g[k] > 0.0)
            .map(|k| (traj.ts[k], traj.total_g[k].ln()))
            .collect();
        if pts.len() < 3 {
            return Err(Error::Horizon("too few positive samples to fit the g tail".into()));
        }
        let np = pts.len() as f64;
        let (st, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let (stt, sty): (f64, f64) = pts
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + p.0 * p.0, b + p.0 * p.1));
        let slope = (np * sty - st * sy) / (np * stt - st * st);
        if !(slope < 0.0) {
            return Err(Error::Horizon(format!(
                "g is not decaying (fitted rate {slope:.3e}); extend the flow horizon"
            )));
        }
        let rate = -slope;
        tail_total = last / rate;
        for j in 0..m {
            per_node[j] += traj.g_fields[n - 1][j] / rate;
        }
    }

    let total: f64 = (0..m).map(|j| g.w[j] * per_node[j]).sum();
    let tail_share = if total > 0.0 { tail_total / total } else { 0.0 };
    if tail_share > 0.01 {
        return Err(Error::Horizon(format!(
            "g tail carries {:.2}% of the integral; extend the flow horizon",
            tail_share * 100.0
        )));
    }
    Ok(GCorrection {
        per_node,
        total,
        tail_share,
        sign_change_share,
        flagged: sign_change_share > 0.01,
    })
}

/// Slopes of the two edges touching node j; at reflecting ends the single
/// edge is used twice, so the node never counts as a sign change.
fn adjacent_slopes(g: &Grid1D, u: &[f64], j: usize) -> (f64, f64) {
    let m = g.len();
    match g.topology {
        Topology::Periodic => {
            let sl = g.edge_slope(u, (j + m - 1) % m);
            let sr = g.edge_slope(u, j);
            (sl, sr)
        }
        Topology::Reflecting => {
            let sl = if j == 0 { g.edge_slope(u, 0) } else { g.edge_slope(u, j - 1) };
            let sr = if j == m - 1 { g.edge_slope(u, m - 2) } else { g.edge_slope(u, j) };
            (sl, sr)
        }
    }
}

/// Variance bound report: the spectral-gap inequality with and without
/// the heat-flow correction term.
#[derive(Clone, Debug, Serialize)]
pub struct PlReport {
    pub variance: f64,
    pub dirichlet_energy: f64,
    pub correction_total: f64,
    pub rhs_plain: f64,
    pub rhs_improved: f64,
    /// (rhs_improved - variance) / scale; negative past tolerance fails.
    pub slack: f64,
    pub improved_holds: bool,
    pub improved_le_plain: bool,
    pub tail_share: f64,
    pub sign_change_share: f64,
    pub k_certified: f64,
    pub flow_time: f64,
    pub rel_tol: f64,
}

/// Checks Var(f) <= E(f)/K - (2/K) * total correction along the heat flow
/// started at f, and that the corrected bound is at least as strong as
/// the plain one.
pub fn pl_check(g: &Grid1D, f0: &[f64], k_certified: f64) -> Result<PlReport> {
    if !(k_certified > 0.0) {
        return Err(Error::Uncertified(
            "variance bound needs a certified positive curvature constant".into(),
        ));
    }
    let var = variance(g, f0);
    let energy = dirichlet_energy(g, f0);
    let t_end = 8.0 / k_certified;
    let traj = heat_flow(g, f0, t_end, g.stable_dt())?;
    let corr = g_correction(g, &traj)?;

    let rhs_plain = energy / k_certified;
    let rhs_improved = rhs_plain - 2.0 * corr.total / k_certified;
    const REL_TOL: f64 = 0.02;
    // Floor the scale at the data's second moment so exactly-balanced or
    // constant data reports slack 0 instead of a rounding-driven ratio.
    let second: f64 = (0..g.len()).map(|j| g.w[j] * f0[j] * f0[j]).sum();
    let scale = var.abs().max(rhs_plain.abs()).max(1e-12 * (1.0 + second.abs()));
    let slack = (rhs_improved - var) / scale;
    Ok(PlReport {
        variance: var,
        dirichlet_energy: energy,
        correction_total: corr.total,
        rhs_plain,
        rhs_improved,
        slack,
        improved_holds: slack >= -REL_TOL,
        improved_le_plain: corr.total >= 0.0,
        tail_share: corr.tail_share,
        sign_change_share: corr.sign_change_share,
        k_certified,
        flow_time: t_end,
        rel_tol: REL_TOL,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Lambda1Report {
    /// Rayleigh-quotient minimum over projected-gradient restarts.
    pub rayleigh: f64,
    /// Half the fitted decay rate of ln Var(u_t) along the heat flow.
    pub decay_rate: f64,
    /// Relative gap between the two estimators.
    pub agreement: f64,
    pub converged: bool,
    /// Smallest (2/Var) * correction over the tested initial data.
    pub delta_est: f64,
    pub k_certified: Option<f64>,
    pub corollary_holds: Option<bool>,
    pub restarts: usize,
}

fn center_and_normalize(g: &Grid1D, f: &mut [f64]) {
    let mean = weighted_mean(g, f);
    for v in f.iter_mut() {
        *v -= mean;
    }
    let var = variance(g, f).max(1e-300);
    let scale = var.sqrt();
    for v in f.iter_mut() {
        *v /= scale;
    }
}

fn smooth_random(g: &Grid1D, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut f: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    // A few diffusion sweeps kill the grid-scale modes so the Rayleigh
    // descent starts near the low end of the spectrum.
    let dt = g.stable_dt();
    for _ in 0..60 {
        let lap = finsler_laplacian(g, &f);
        for j in 0..g.len() {
            f[j] += dt * lap[j];
        }
    }
    center_and_normalize(g, &mut f);
    f
}

/// First nonzero eigenvalue of the nonlinear Laplacian by two independent
/// estimators: Rayleigh-quotient descent with seeded restarts, and the
/// variance decay rate of the heat flow. Optionally checks the spectral
/// bound lambda_1 >= K + delta against a certified K.
pub fn lambda1_estimate(
    g: &Grid1D,
    k_certified: Option<f64>,
    seed: u64,
) -> Result<Lambda1Report> {
    const RESTARTS: usize = 10;
    let lr = g.stable_dt();
    let mut best = f64::INFINITY;
    let mut best_f: Vec<f64> = Vec::new();
    let mut first_f: Vec<f64> = Vec::new();
    for r in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let mut f = smooth_random(g, &mut rng);
        if r == 0 {
            first_f = f.clone();
        }
        let mut rq = dirichlet_energy(g, &f);
        let mut stall = 0usize;
        for _ in 0..40_000 {
            let lap = finsler_laplacian(g, &f);
            for j in 0..g.len() {
                f[j] += lr * (lap[j] + rq * f[j]);
            }
            center_and_normalize(g, &mut f);
            let next = dirichlet_energy(g, &f);
            if (rq - next).abs() < 1e-13 * next.abs().max(1e-30) {
                stall += 1;
                if stall > 50 {
                    rq = next;
                    break;
                }
            } else {
                stall = 0;
            }
            rq = next;
        }
        if rq < best {
            best = rq;
            best_f = f;
        }
    }

    // Decay estimator: fit the late-time slope of ln Var along a flow.
    let t_end = 12.0 / best;
    let traj = heat_flow(g, &first_f, t_end, lr)?;
    let n = traj.ts.len();
    let floor = traj.variance[0].max(1e-300) * 1e-280;
    let pts: Vec<(f64, f64)> = (n / 2..n)
        .filter(|&k| traj.variance[k] > floor)
        .map(|k| (traj.ts[k], traj.variance[k].ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Horizon("variance decayed below floor before the fit window".into()));
    }
    let np = pts.len() as f64;
    let (st, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (stt, sty): (f64, f64) =
        pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 * p.0, b + p.0 * p.1));
    let slope = (np * sty - st * sy) / (np * stt - st * st);
    let decay_rate = -slope / 2.0;

    let agreement = (best - decay_rate).abs() / best.abs().max(decay_rate.abs()).max(1e-30);
    let converged = agreement <= 0.03;

    // delta estimate over the tested initial data: the decay-run start and
    // the Rayleigh minimizer.
    let mut delta_est = f64::INFINITY;
    for f in [&first_f, &best_f] {
        let var = variance(g, f);
        if var <= 0.0 {
            continue;
        }
        let flow = heat_flow(g, f, t_end, lr)?;
        let corr = g_correction(g, &flow)?;
        delta_est = delta_est.min(2.0 * corr.total / var);
    }
    if !delta_est.is_finite() {
        delta_est = 0.0;
    }

    let corollary_holds = k_certified.map(|k| {
        let lam = best.min(decay_rate);
        lam >= k + delta_est - 0.03 * lam.abs().max(k.abs())
    });

    Ok(Lambda1Report {
        rayleigh: best,
        decay_rate,
        agreement,
        converged,
        delta_est,
        k_certified,
        corollary_holds,
        restarts: RESTARTS,
    })
}

/// Integrated Bochner report: Dirichlet energy against the Laplacian
/// square minus the frozen-norm correction, scaled by the certified K.
#[derive(Clone, Debug, Serialize)]
pub struct BochnerReport {
    pub dirichlet: f64,
    pub laplacian_sq: f64,
    pub correction: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub sign_change_share: f64,
    pub flagged: bool,
    pub rel_tol: f64,
}

/// Checks the integrated curvature inequality
/// E(u) <= (1/K) (||Lap u||^2 - integral of the correction field).
pub fn bochner_integrated_check(g: &Grid1D, u: &[f64], k_certified: f64) -> Result<BochnerReport> {
    if !(k_certified > 0.0) {
        return Err(Error::Uncertified(
            "integrated Bochner check needs a certified positive curvature constant".into(),
        ));
    }
    let lhs = dirichlet_energy(g, u);
    let lap = finsler_laplacian(g, u);
    let lap_sq: f64 = (0..g.len()).map(|j| g.w[j] * lap[j] * lap[j]).sum();
    let gf = g_field(g, u);
    let correction = weighted_mean(g, &gf);

    let mut flagged_num = 0.0;
    for j in 0..g.len() {
        let (sl, sr) = adjacent_slopes(g, u, j);
        if sl * sr < 0.0 {
            flagged_num += g.w[j] * gf[j];
        }
    }
    let sign_change_share = if correction > 0.0 { flagged_num / correction } else { 0.0 };

    let rhs = (lap_sq - correction) / k_certified;
    const REL_TOL: f64 = 0.02;
    let second: f64 = (0..g.len()).map(|j| g.w[j] * u[j] * u[j]).sum();
    let scale = lhs.abs().max(rhs.abs()).max(1e-12 * (1.0 + second.abs()));
    let slack = (rhs - lhs) / scale;
    Ok(BochnerReport {
        dirichlet: lhs,
        laplacian_sq: lap_sq,
        correction,
        rhs,
        slack,
        holds: slack >= -REL_TOL,
        sign_change_share,
        flagged: sign_change_share > 0.01,
        rel_tol: REL_TOL,
    })
}

/// CSV export of the heat diagnostics; FD columns are blank where the
/// snapshot stencil is incomplete.
pub fn write_heat_csv<W: std::io::Write>(traj: &HeatTrajectory, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "t,phi,phi_prime_analytic,phi_prime_fd,phi_second_analytic,phi_second_fd,energy,variance,total_g"
    )?;
    for k in 0..traj.ts.len() {
        let fd1 = if traj.phi_prime_fd[k].is_nan() {
            String::new()
        } else {
            format!("{:.12e}", traj.phi_prime_fd[k])
        };
        let fd2 = if traj.phi_second_fd[k].is_nan() {
            String::new()
        } else {
            format!("{:.12e}", traj.phi_second_fd[k])
        };
        writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{},{:.12e},{},{:.12e},{:.12e},{:.12e}",
            traj.ts[k],
            traj.phi[k],
            traj.phi_prime_analytic[k],
            fd1,
            traj.phi_second_analytic[k],
            fd2,
            traj.energy[k],
            traj.variance[k],
            traj.total_g[k]
        )?;
    }
    Ok(())
}
