//! Domain types shared by every module: ensemble dimensions, the spectrum of
//! the effective correlation matrix, evaluation grids and density curves.
//!
//! Two coordinates appear throughout. The Jacobi coordinate `x` lives on the
//! open interval (-1, 1); the Cauchy-Lorentz coordinate `b` lives on the open
//! half-line. They are linked by `b = (1 - x) / (1 + x)`, and densities pick up
//! the Jacobian `2 / (1 + x)^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative separation required between neighbouring eigenvalues of
/// the effective correlation matrix.
pub const DEFAULT_MIN_GAP: f64 = 1e-8;

/// Dyson index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Beta {
    Real,
    Complex,
}

impl Beta {
    pub fn index(self) -> u8 {
        match self {
            Beta::Real => 1,
            Beta::Complex => 2,
        }
    }

    /// Companion parameter of the Gaussian weight: 2 for real, 1 for complex.
    pub fn gamma(self) -> u32 {
        match self {
            Beta::Real => 2,
            Beta::Complex => 1,
        }
    }
}

impl TryFrom<u8> for Beta {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Beta::Real),
            2 => Ok(Beta::Complex),
            other => Err(Error::invalid(format!("Dyson index must be 1 or 2, got {other}"))),
        }
    }
}

impl From<Beta> for u8 {
    fn from(b: Beta) -> u8 {
        b.index()
    }
}

/// Matrix dimensions and symmetry class. `p` is the number of rows of both
/// Gaussian blocks, `n1` and `n2` their column counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct EnsembleParams {
    p: usize,
    n1: usize,
    n2: usize,
    beta: Beta,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    p: usize,
    n1: usize,
    n2: usize,
    beta: Beta,
}

impl TryFrom<RawParams> for EnsembleParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        EnsembleParams::new(r.p, r.n1, r.n2, r.beta)
    }
}

impl From<EnsembleParams> for RawParams {
    fn from(e: EnsembleParams) -> Self {
        RawParams {
            p: e.p,
            n1: e.n1,
            n2: e.n2,
            beta: e.beta,
        }
    }
}

impl EnsembleParams {
    pub fn new(p: usize, n1: usize, n2: usize, beta: Beta) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p must be positive"));
        }
        if n1 < p || n2 < p {
            return Err(Error::invalid(format!(
                "need n1 >= p and n2 >= p, got p={p}, n1={n1}, n2={n2}"
            )));
        }
        Ok(Self { p, n1, n2, beta })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn gamma(&self) -> u32 {
        self.beta.gamma()
    }

    /// `n1 + n2 - p`, the exponent of the Cauchy-Lorentz weight after the
    /// projection integral. Positive because `n1, n2 >= p >= 1`.
    pub fn mu(&self) -> usize {
        self.n1 + self.n2 - self.p
    }

    /// Parameters with the two blocks exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            n1: self.n2,
            n2: self.n1,
            ..*self
        }
    }

    /// `l` stacked copies: `(l p, l n1, l n2)`.
    pub fn replicated(&self, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::invalid("replication factor must be positive"));
        }
        Self::new(self.p * l, self.n1 * l, self.n2 * l, self.beta)
    }

    pub fn with_beta(&self, beta: Beta) -> Self {
        Self { beta, ..*self }
    }
}

/// Positive eigenvalues of the effective correlation matrix, sorted
/// ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationSpectrum {
    lambdas: Vec<f64>,
    min_gap: f64,
}

impl CorrelationSpectrum {
    /// Sorts `values` and rejects non-positive entries or neighbours closer
    /// than [`DEFAULT_MIN_GAP`] in relative terms.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_min_gap(values, DEFAULT_MIN_GAP)
    }

    /// Like [`new`](Self::new) with an explicit gap. A gap of zero admits
    /// repeated eigenvalues, which only the asymptotic module accepts.
    pub fn with_min_gap(mut values: Vec<f64>, min_gap: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("spectrum must not be empty"));
        }
        if !(min_gap >= 0.0 && min_gap.is_finite()) {
            return Err(Error::invalid(format!("min_gap must be >= 0, got {min_gap}")));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::invalid(format!(
                "correlation eigenvalues must be finite and positive, got {bad}"
            )));
        }
        values.sort_by(|a, b| a.total_cmp(b));
        for w in values.windows(2) {
            let gap = (w[1] - w[0]) / w[0];
            if gap < min_gap {
                return Err(Error::invalid(format!(
                    "degenerate spectrum: {} and {} are closer than relative gap {min_gap:e}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            lambdas: values,
            min_gap,
        })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    /// Smallest relative gap between neighbours (`inf` for a single value).
    pub fn smallest_relative_gap(&self) -> f64 {
        self.lambdas
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// `{1/Λ_j}` re-sorted ascending.
    pub fn inverse(&self) -> Self {
        let mut inv: Vec<f64> = self.lambdas.iter().map(|l| 1.0 / l).collect();
        inv.sort_by(|a, b| a.total_cmp(b));
        Self {
            lambdas: inv,
            min_gap: self.min_gap,
        }
    }

    /// Each eigenvalue repeated `l` times (gap check disabled).
    pub fn replicated(&self, l: usize) -> Self {
        let lambdas = self.lambdas.iter().flat_map(|&v| std::iter::repeat_n(v, l)).collect();
        Self { lambdas, min_gap: 0.0 }
    }

    /// Checks that the spectrum matches the matrix size of `params`.
    pub fn check_against(&self, params: &EnsembleParams) -> Result<()> {
        if self.len() != params.p() {
            return Err(Error::invalid(format!(
                "spectrum has {} entries but p = {}",
                self.len(),
                params.p()
            )));
        }
        Ok(())
    }

    /// Checks that neighbouring values are separated by at least `min_gap`.
    pub fn require_nondegenerate(&self, min_gap: f64) -> Result<()> {
        let g = self.smallest_relative_gap();
        if g < min_gap {
            return Err(Error::invalid(format!(
                "exact formulas need a non-degenerate spectrum (relative gap {g:e} < {min_gap:e})"
            )));
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for CorrelationSpectrum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lambdas: Vec<f64>,
            #[serde(default = "default_gap")]
            min_gap: f64,
        }
        fn default_gap() -> f64 {
            DEFAULT_MIN_GAP
        }
        let raw = Raw::deserialize(d)?;
        CorrelationSpectrum::with_min_gap(raw.lambdas, raw.min_gap).map_err(serde::de::Error::custom)
    }
}

/// Which coordinate a grid or a curve lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// The open interval (-1, 1).
    Jacobi,
    /// The open half-line (0, inf).
    CauchyLorentz,
}

impl Domain {
    pub fn contains(self, v: f64) -> bool {
        match self {
            Domain::Jacobi => v > -1.0 && v < 1.0,
            Domain::CauchyLorentz => v > 0.0 && v.is_finite(),
        }
    }
}

/// Strictly increasing evaluation points strictly inside a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    points: Vec<f64>,
    domain: Domain,
}

impl EvaluationGrid {
    pub fn new(points: Vec<f64>, domain: Domain) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("grid must contain at least one point"));
        }
        if let Some(bad) = points.iter().find(|v| !domain.contains(**v)) {
            return Err(Error::invalid(format!(
                "grid point {bad} lies outside the {domain:?} domain"
            )));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("grid points must be strictly increasing"));
        }
        Ok(Self { points, domain })
    }

    /// `n` uniformly spaced points from `lo` to `hi` inclusive.
    pub fn uniform(domain: Domain, n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::invalid(format!(
                "uniform grid needs n >= 2 and lo < hi, got n={n}, [{lo}, {hi}]"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let points = (0..n).map(|i| lo + step * i as f64).collect();
        Self::new(points, domain)
    }

    /// `n` points uniform in `ln b` between `lo` and `hi`.
    pub fn log_uniform(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n < 2 || !(lo > 0.0 && hi > lo) {
            return Err(Error::invalid(format!(
                "log-uniform grid needs n >= 2 and 0 < lo < hi, got n={n}, [{lo}, {hi}]"
            )));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (n - 1) as f64;
        let points = (0..n).map(|i| (a + step * i as f64).exp()).collect();
        Self::new(points, Domain::CauchyLorentz)
    }

    /// 512 uniform points on `(-1 + 1e-3, 1 - 1e-3)`; densities may blow up at
    /// the interval ends so the grid keeps clear of them.
    pub fn default_jacobi() -> Self {
        let h = 1e-3;
        Self::uniform(Domain::Jacobi, 512, -1.0 + h, 1.0 - h).expect("static grid is valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// How a density curve was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MonteCarlo,
    ExactComplex,
    ExactReal,
    Asymptotic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte_carlo",
            Method::ExactComplex => "exact_complex",
            Method::ExactReal => "exact_real",
            Method::Asymptotic => "asymptotic",
        }
    }
}

/// A named scalar attached to a curve (calibration factors, clamp sizes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveNote {
    pub key: String,
    pub value: f64,
}

/// A density sampled on a grid. Values are per unit of the grid coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    grid: EvaluationGrid,
    values: Vec<f64>,
    method: Method,
    normalization_residual: f64,
    #[serde(default)]
    notes: Vec<CurveNote>,
}

impl DensityCurve {
    pub fn new(grid: EvaluationGrid, values: Vec<f64>, method: Method, normalization_residual: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} density values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!(
                "density values must be finite and non-negative, got {bad}"
            )));
        }
        Ok(Self {
            grid,
            values,
            method,
            normalization_residual,
            notes: Vec::new(),
        })
    }

    pub fn with_note(mut self, key: impl Into<String>, value: f64) -> Self {
        self.notes.push(CurveNote { key: key.into(), value });
        self
    }

    pub fn grid(&self) -> &EvaluationGrid {
        &self.grid
    }

    pub fn points(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn domain(&self) -> Domain {
        self.grid.domain()
    }

    pub fn normalization_residual(&self) -> f64 {
        self.normalization_residual
    }

    pub fn notes(&self) -> &[CurveNote] {
        &self.notes
    }

    pub fn note(&self, key: &str) -> Option<f64> {
        self.notes.iter().find(|n| n.key == key).map(|n| n.value)
    }

    /// Trapezoid rule over the grid points. Only a rough mass estimate: the
    /// tails outside the grid are ignored.
    pub fn trapezoid_mass(&self) -> f64 {
        self.points()
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// `b = (1 - x) / (1 + x)`.
pub fn jacobi_to_cl_point(x: f64) -> Result<f64> {
    if !Domain::Jacobi.contains(x) {
        return Err(Error::invalid(format!("Jacobi coordinate {x} outside (-1, 1)")));
    }
    Ok((1.0 - x) / (1.0 + x))
}

/// `x = (1 - b) / (1 + b)`, the inverse of [`jacobi_to_cl_point`].
pub fn cl_to_jacobi_point(b: f64) -> Result<f64> {
    if !Domain::CauchyLorentz.contains(b) {
        return Err(Error::invalid(format!(
            "Cauchy-Lorentz coordinate {b} outside (0, inf)"
        )));
    }
    Ok((1.0 - b) / (1.0 + b))
}

/// Jacobian `db/dx` magnitude, `2 / (1 + x)^2`.
pub fn jacobian_factor(x: f64) -> f64 {
    2.0 / ((1.0 + x) * (1.0 + x))
}

/// `S(x) = 2/(1+x)^2 · S'((1-x)/(1+x))`, applied to a sampled curve.
///
/// The grid is mapped point by point and reversed so that it stays
/// increasing. Total mass is unchanged, so the residual and notes carry over.
pub fn transport_density_cl_to_jacobi(s_cl: &DensityCurve) -> Result<DensityCurve> {
    if s_cl.domain() != Domain::CauchyLorentz {
        return Err(Error::invalid(
            "transport to Jacobi needs a curve on the Cauchy-Lorentz domain",
        ));
    }
    let mut pairs = Vec::with_capacity(s_cl.values.len());
    for (&b, &v) in s_cl.points().iter().zip(&s_cl.values) {
        let x = cl_to_jacobi_point(b)?;
        pairs.push((x, jacobian_factor(x) * v));
    }
    pairs.reverse();
    finish_transport(s_cl, pairs, Domain::Jacobi)
}

/// Inverse of [`transport_density_cl_to_jacobi`]:
/// `S'(b) = S(x) (1 + x)^2 / 2` with `x = (1-b)/(1+b)`.
pub fn transport_density_jacobi_to_cl(s_jac: &DensityCurve) -> Result<DensityCurve> {
    if s_jac.domain() != Domain::Jacobi {
        return Err(Error::invalid(
            "transport to Cauchy-Lorentz needs a curve on the Jacobi domain",
        ));
    }
    let mut pairs = Vec::with_capacity(s_jac.values.len());
    for (&x, &v) in s_jac.points().iter().zip(&s_jac.values) {
        let b = jacobi_to_cl_point(x)?;
        pairs.push((b, v / jacobian_factor(x)));
    }
    pairs.reverse();
    finish_transport(s_jac, pairs, Domain::CauchyLorentz)
}

fn finish_transport(src: &DensityCurve, pairs: Vec<(f64, f64)>, domain: Domain) -> Result<DensityCurve> {
    let (points, values): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let grid = EvaluationGrid::new(points, domain)?;
    let mut out = DensityCurve::new(grid, values, src.method, src.normalization_residual)?;
    out.notes = src.notes.clone();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_invariants() {
        let p = EnsembleParams::new(3, 5, 7, Beta::Complex).unwrap();
        assert_eq!(p.gamma(), 1);
        assert_eq!(p.mu(), 9);
        assert_eq!(p.with_beta(Beta::Real).gamma(), 2);
        assert!(EnsembleParams::new(3, 2, 7, Beta::Real).is_err());
        assert!(EnsembleParams::new(0, 2, 7, Beta::Real).is_err());
        assert!(Beta::try_from(4).is_err());
        let s = p.swapped();
        assert_eq!((s.n1(), s.n2()), (7, 5));
    }

    #[test]
    fn params_serde_validates() {
        let ok: EnsembleParams = serde_json::from_str(r#"{"p":2,"n1":5,"n2":5,"beta":1}"#).unwrap();
        assert_eq!(ok.beta(), Beta::Real);
        assert!(serde_json::from_str::<EnsembleParams>(r#"{"p":2,"n1":1,"n2":5,"beta":1}"#).is_err());
        assert!(serde_json::from_str::<EnsembleParams>(r#"{"p":2,"n1":5,"n2":5,"beta":3}"#).is_err());
    }

    #[test]
    fn spectrum_sorting_and_rejection() {
        let s = CorrelationSpectrum::new(vec![4.5, 1.0 / 3.0, 2.0]).unwrap();
        assert_eq!(s.lambdas(), &[1.0 / 3.0, 2.0, 4.5]);
        assert!(CorrelationSpectrum::new(vec![1.0, 1.0]).is_err());
        assert!(CorrelationSpectrum::new(vec![1.0, 1.0 + 1e-10]).is_err());
        assert!(CorrelationSpectrum::new(vec![1.0, -2.0]).is_err());
        assert!(CorrelationSpectrum::new(vec![]).is_err());
        assert!(CorrelationSpectrum::with_min_gap(vec![1.0, 1.0], 0.0).is_ok());
    }

    #[test]
    fn spectrum_inverse_is_sorted() {
        let s = CorrelationSpectrum::new(vec![0.5, 1.0, 4.0]).unwrap();
        assert_eq!(s.inverse().lambdas(), &[0.25, 1.0, 2.0]);
    }

    #[test]
    fn point_map_fixed_point_and_limits() {
        assert_eq!(jacobi_to_cl_point(0.0).unwrap(), 1.0);
        assert!(jacobi_to_cl_point(1.0 - 1e-12).unwrap() < 1e-11);
        assert!(jacobi_to_cl_point(-1.0 + 1e-12).unwrap() > 1e11);
        assert!(jacobi_to_cl_point(1.0).is_err());
        assert!(jacobi_to_cl_point(-1.5).is_err());
        assert!(cl_to_jacobi_point(0.0).is_err());
        for x in [-0.9, -0.5, 0.0, 0.5, 0.9] {
            let back = cl_to_jacobi_point(jacobi_to_cl_point(x).unwrap()).unwrap();
            assert!((back - x).abs() <= 2.0 * f64::EPSILON, "x={x}");
        }
    }

    #[test]
    fn grid_validation() {
        assert!(EvaluationGrid::new(vec![-0.5, 0.5], Domain::Jacobi).is_ok());
        assert!(EvaluationGrid::new(vec![-1.0, 0.5], Domain::Jacobi).is_err());
        assert!(EvaluationGrid::new(vec![0.5, 0.5], Domain::Jacobi).is_err());
        assert!(EvaluationGrid::new(vec![0.0, 1.0], Domain::CauchyLorentz).is_err());
        let g = EvaluationGrid::default_jacobi();
        assert_eq!(g.len(), 512);
        assert!((g.points()[0] + 0.999).abs() < 1e-15);
    }

    #[test]
    fn transport_jacobian_at_origin() {
        let grid = EvaluationGrid::new(vec![0.5, 1.0, 2.0], Domain::CauchyLorentz).unwrap();
        let curve = DensityCurve::new(grid, vec![0.1, 0.3, 0.2], Method::ExactComplex, 0.0).unwrap();
        let jac = transport_density_cl_to_jacobi(&curve).unwrap();
        // b = 1 maps to x = 0 where the factor is 2.
        let i = jac.points().iter().position(|&x| x == 0.0).unwrap();
        assert_eq!(jac.values()[i], 0.6);
        assert!(transport_density_cl_to_jacobi(&jac).is_err());
        let back = transport_density_jacobi_to_cl(&jac).unwrap();
        for (a, b) in back.values().iter().zip(curve.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn curve_rejects_negative_values() {
        let grid = EvaluationGrid::new(vec![0.5], Domain::CauchyLorentz).unwrap();
        assert!(DensityCurve::new(grid, vec![-1e-3], Method::Asymptotic, 0.0).is_err());
    }
}
