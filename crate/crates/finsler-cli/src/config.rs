//! Scenario configuration: JSON schema and mapping onto library types.
//!
//! Every struct rejects unknown fields so a typo in a config surfaces as a
//! parse error naming the field instead of a silently ignored option.

use finsler::analysis::Grid1D;
use finsler::curvature::{ricci_bound_scan, ScanGrid, WeightedN};
use finsler::error::{Error, Result};
use finsler::measure::MeasureSpec;
use finsler::metric::{Coef1, Metric};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub metric: MetricConfig,
    pub measure: MeasureConfig,
    #[serde(default)]
    pub point: Vec<f64>,
    pub verifier: VerifierConfig,
    pub seed: u64,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    /// Report file name; defaults to `<scenario name>.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    /// CSV table name for verifiers that produce one (heat, bishop-gromov).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricConfig {
    Euclidean(DimParams),
    ConstDiag(ConstDiagParams),
    SphereStereographic(RadiusParams),
    SpherePolar(RadiusParams),
    HyperbolicPoincare,
    Randers(RandersParams),
    Funk(DimParams),
    Asym1dCircle(Asym1dCircleParams),
    Asym1dInterval(Asym1dIntervalParams),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimParams {
    pub dim: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstDiagParams {
    pub diag: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusParams {
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandersParams {
    pub dim: usize,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Asym1dCircleParams {
    pub a: CoefConfig,
    pub b: CoefConfig,
    pub len: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Asym1dIntervalParams {
    pub a: CoefConfig,
    pub b: CoefConfig,
    pub lo: f64,
    pub hi: f64,
}

/// Trigonometric coefficient field c0 + ac cos(2 pi k x / period)
/// + as sin(2 pi k x / period); the default is the constant c0.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefConfig {
    pub c0: f64,
    #[serde(default)]
    pub ac: f64,
    #[serde(default, rename = "as")]
    pub asn: f64,
    #[serde(default = "one_u32")]
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

fn one_u32() -> u32 {
    1
}

impl CoefConfig {
    pub fn is_constant(&self) -> bool {
        self.ac == 0.0 && self.asn == 0.0
    }

    fn to_lib(&self, default_period: f64) -> Coef1 {
        Coef1 {
            c0: self.c0,
            ac: self.ac,
            asn: self.asn,
            k: self.k,
            period: self.period.unwrap_or(default_period),
        }
    }

    pub fn eval(&self, x: f64, default_period: f64) -> f64 {
        let p = self.period.unwrap_or(default_period);
        let th = 2.0 * std::f64::consts::PI * self.k as f64 * x / p;
        self.c0 + self.ac * th.cos() + self.asn * th.sin()
    }
}

impl MetricConfig {
    pub fn build(&self) -> Result<Metric> {
        match self {
            MetricConfig::Euclidean(p) => Ok(Metric::euclidean(p.dim)),
            MetricConfig::ConstDiag(p) => Metric::const_diag(&p.diag),
            MetricConfig::SphereStereographic(p) => Ok(Metric::sphere_stereographic(p.radius)),
            MetricConfig::SpherePolar(p) => Ok(Metric::sphere_polar(p.radius)),
            MetricConfig::HyperbolicPoincare => Ok(Metric::hyperbolic_poincare()),
            MetricConfig::Randers(p) => Metric::randers(p.dim, p.alpha.clone(), p.beta.clone()),
            MetricConfig::Funk(p) => Ok(Metric::funk(p.dim)),
            MetricConfig::Asym1dCircle(p) => {
                Metric::asym_1d_circle(p.a.to_lib(p.len), p.b.to_lib(p.len), p.len)
            }
            MetricConfig::Asym1dInterval(p) => {
                let span = p.hi - p.lo;
                Metric::asym_1d_interval(p.a.to_lib(span), p.b.to_lib(span), p.lo, p.hi)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureConfig {
    BusemannHausdorff,
    RiemannianVolume,
    Gaussian(GaussianParams),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianParams {
    pub k: f64,
}

impl MeasureConfig {
    pub fn build(&self, m: &Metric) -> Result<MeasureSpec> {
        match self {
            MeasureConfig::BusemannHausdorff => Ok(MeasureSpec::busemann_hausdorff()),
            MeasureConfig::RiemannianVolume => MeasureSpec::riemannian_volume(m),
            MeasureConfig::Gaussian(p) => Ok(MeasureSpec::gaussian(p.k)),
        }
    }
}

/// Effective dimension for the weighted Ricci bound: a number N, or one of
/// the named conventions "infinity" / "dimension".
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NParamConfig {
    Number(f64),
    Name(String),
}

impl NParamConfig {
    pub fn to_lib(&self) -> Result<WeightedN> {
        match self {
            NParamConfig::Number(v) => Ok(WeightedN::Finite(*v)),
            NParamConfig::Name(s) => match s.as_str() {
                "infinity" => Ok(WeightedN::Infinity),
                "dimension" => Ok(WeightedN::Dimension),
                other => Err(Error::Parameter(format!(
                    "n_param must be a number, \"infinity\", or \"dimension\", got \"{other}\""
                ))),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VerifierConfig {
    CurvatureScan(CurvatureScanParams),
    LaplaceCompare(LaplaceCompareParams),
    BishopGromov(BishopGromovParams),
    VolumeBound(VolumeBoundParams),
    BonnetMyers(BonnetMyersParams),
    Heat(HeatParams),
    PlCheck(PlCheckParams),
    Eigen(EigenParams),
    Bochner(BochnerParams),
}

impl VerifierConfig {
    pub fn name(&self) -> &'static str {
        match self {
            VerifierConfig::CurvatureScan(_) => "curvature-scan",
            VerifierConfig::LaplaceCompare(_) => "laplace-compare",
            VerifierConfig::BishopGromov(_) => "bishop-gromov",
            VerifierConfig::VolumeBound(_) => "volume-bound",
            VerifierConfig::BonnetMyers(_) => "bonnet-myers",
            VerifierConfig::Heat(_) => "heat",
            VerifierConfig::PlCheck(_) => "pl-check",
            VerifierConfig::Eigen(_) => "eigen",
            VerifierConfig::Bochner(_) => "bochner",
        }
    }
}

fn tol_1e9() -> f64 {
    1e-9
}

fn tol_1e8() -> f64 {
    1e-8
}

fn tol_2pct() -> f64 {
    0.02
}

fn tol_3pct() -> f64 {
    0.03
}

fn draws_20() -> usize {
    20
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureScanParams {
    pub per_axis: usize,
    pub scale: f64,
    pub directions: usize,
    pub n_param: NParamConfig,
    /// Declared curvature bound the scan must certify; absent means the
    /// scan only has to complete with finite values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub require_k: Option<f64>,
    #[serde(default = "tol_1e9")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyConfig {
    SinPower(SinPowerParams),
    DistortionPower(DistortionPowerParams),
    NPower(NPowerParams),
    LogConcaveExp(LogConcaveExpParams),
    LogConcaveFromSphere(LogConcaveFromSphereParams),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinPowerParams {
    pub c: f64,
    pub n: usize,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionPowerParams {
    pub c: f64,
    pub n: usize,
    pub k: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NPowerParams {
    pub curv: f64,
    pub n_eff: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogConcaveExpParams {
    pub m_o: f64,
    pub curv: f64,
    pub rho_o: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogConcaveFromSphereParams {
    pub curv: f64,
    pub rho_o: f64,
}

impl FamilyConfig {
    pub fn to_lib(&self) -> finsler::comparison::FamilySpec {
        use finsler::comparison::{ChiFamily, FamilySpec};
        match self {
            FamilyConfig::SinPower(p) => {
                FamilySpec::Explicit(ChiFamily::SinPower { c: p.c, n: p.n, delta: p.delta })
            }
            FamilyConfig::DistortionPower(p) => {
                FamilySpec::Explicit(ChiFamily::DistortionPower { c: p.c, n: p.n, k: p.k })
            }
            FamilyConfig::NPower(p) => {
                FamilySpec::Explicit(ChiFamily::NPower { curv: p.curv, n_eff: p.n_eff })
            }
            FamilyConfig::LogConcaveExp(p) => FamilySpec::Explicit(ChiFamily::LogConcaveExp {
                m_o: p.m_o,
                curv: p.curv,
                rho_o: p.rho_o,
            }),
            FamilyConfig::LogConcaveFromSphere(p) => {
                FamilySpec::LogConcaveFromSphere { curv: p.curv, rho_o: p.rho_o }
            }
        }
    }

    /// Weighted-N convention the certificate scan must use for this family
    /// when the config does not override it.
    pub fn default_n_param(&self, dim: usize) -> WeightedN {
        match self {
            FamilyConfig::NPower(p) => {
                if (p.n_eff - dim as f64).abs() < 1e-12 {
                    WeightedN::Dimension
                } else {
                    WeightedN::Finite(p.n_eff)
                }
            }
            _ => WeightedN::Infinity,
        }
    }
}

/// Lattice-and-fan recipe for the certificate scan backing a comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertConfig {
    pub per_axis: usize,
    pub scale: f64,
    pub directions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_param: Option<NParamConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceCompareParams {
    pub family: FamilyConfig,
    pub cert: CertConfig,
    pub radii: Vec<f64>,
    pub directions: usize,
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BishopGromovParams {
    pub family: FamilyConfig,
    pub cert: CertConfig,
    pub lap_radii: Vec<f64>,
    pub lap_directions: usize,
    pub radii: Vec<f64>,
    pub directions: usize,
    #[serde(default)]
    pub rho_o: f64,
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeBoundParams {
    /// Radius of the ball the curvature certificate is scanned over.
    pub ball_radius: f64,
    pub per_axis: usize,
    pub directions: usize,
    /// Analytic total measure of the scenario the bound must dominate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_mass: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BonnetMyersParams {
    pub dims: Vec<usize>,
    pub curvatures: Vec<f64>,
    pub deltas: Vec<f64>,
    #[serde(default = "tol_1e9")]
    pub tolerance: f64,
    /// Cross-check the delta = 0 volume constant against its closed form.
    #[serde(default)]
    pub check_volume_constant: bool,
    #[serde(default = "tol_1e8")]
    pub volume_tolerance: f64,
}

/// Initial data for the 1D flows. `fourier-random` draws from the seeded
/// generator documented in the README (four low Fourier modes, ChaCha8).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileConfig {
    FourierRandom,
    /// f(x) = x, the linear eigenfunction of the weighted interval.
    Coordinate,
    /// A single sine mode over the grid span.
    Mode { k: usize },
}

fn drift_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatParams {
    pub nodes: usize,
    pub t_end: f64,
    pub f0: ProfileConfig,
    /// Permitted mass drift per unit time.
    #[serde(default = "drift_tol")]
    pub drift_tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlCheckParams {
    pub nodes: usize,
    #[serde(default = "draws_20")]
    pub draws: usize,
    /// Also run f0 = x and require near-sharpness.
    #[serde(default)]
    pub include_sharp: bool,
    #[serde(default = "tol_2pct")]
    pub sharp_tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenParams {
    pub nodes: usize,
    /// Certify a curvature bound from the continuum scenario and check the
    /// eigenvalue corollary against it.
    #[serde(default)]
    pub certify: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(default = "tol_3pct")]
    pub rel_tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BochnerParams {
    pub nodes: usize,
    #[serde(default = "draws_20")]
    pub draws: usize,
    /// Also run u = x and require near-saturation.
    #[serde(default)]
    pub include_saturation: bool,
    #[serde(default = "tol_2pct")]
    pub saturation_tolerance: f64,
}

/// Discretizes the 1D continuum scenario (metric + measure) onto a grid.
pub fn build_grid(metric: &MetricConfig, measure: &MeasureConfig, nodes: usize) -> Result<Grid1D> {
    match (metric, measure) {
        (MetricConfig::Asym1dCircle(p), MeasureConfig::BusemannHausdorff) => {
            let (a, b, len) = (p.a.clone(), p.b.clone(), p.len);
            Grid1D::circle(
                nodes,
                len,
                |x| a.eval(x, len),
                |x| b.eval(x, len),
                |x| 2.0 / (1.0 / a.eval(x, len) + 1.0 / b.eval(x, len)),
            )
        }
        (MetricConfig::Asym1dInterval(p), MeasureConfig::Gaussian(g)) => {
            if !p.a.is_constant() || !p.b.is_constant() {
                return Err(Error::Configuration(
                    "interval grids support constant metric coefficients only".into(),
                ));
            }
            if (p.hi + p.lo).abs() > 1e-12 * p.hi.abs().max(1.0) {
                return Err(Error::Configuration(
                    "interval grids must be symmetric: hi == -lo".into(),
                ));
            }
            Grid1D::gaussian_interval_asym(nodes, p.a.c0, p.b.c0, g.k, p.hi)
        }
        _ => Err(Error::Configuration(
            "1D verifiers need asym1d-circle + busemann-hausdorff or asym1d-interval + gaussian"
                .into(),
        )),
    }
}

/// Certified curvature constant of the 1D continuum scenario, from the
/// scan over a coarse chart lattice with both directions.
pub fn certify_1d(metric: &MetricConfig, measure: &MeasureConfig) -> Result<f64> {
    let m = metric.build()?;
    if m.dim() != 1 {
        return Err(Error::Configuration("certification grid expects a 1D metric".into()));
    }
    let mu = measure.build(&m)?;
    let grid = ScanGrid::from_chart(&m, 9, 0.9, 2);
    let cert = ricci_bound_scan(&m, &mu, &grid, WeightedN::Infinity)?;
    Ok(cert.inf_ric_n)
}
