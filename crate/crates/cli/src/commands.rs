use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use log::{info, warn};
use serde_json::{json, Value};

use rmt_jacobi::exact_complex::{self, KernelContext};
use rmt_jacobi::exact_real::{self, RealDensityContext};
use rmt_jacobi::sampler::{bin_counts, sample_jacobi, SampleBatch};
use rmt_jacobi::stats::{
    bin_probabilities, binned_l1_with_total, chi_square, ks_one_sample, multinomial_l1_bound, tabulated_cdf,
    uniform_edges,
};
use rmt_jacobi::{asymptotic, Beta, CorrelationSpectrum, DensityCurve, Domain, EvaluationGrid, Method};

use crate::config::{Ensemble, MethodChoice, RunConfig, Spacing};
use crate::error::{CliError, Result};
use crate::output::{write_atomic, write_curves, write_json, write_samples, CurveSummary, Sidecar};
use crate::svg::{Bar, Plot, Series};

/// An analytic density, kept around so it can be evaluated pointwise (for
/// bin probabilities) as well as on the grid.
enum Analytic {
    Complex(KernelContext),
    Real(RealDensityContext),
    Asymptotic,
}

struct Model<'a> {
    kind: Analytic,
    cfg: &'a RunConfig,
    spectrum: &'a CorrelationSpectrum,
}

impl Model<'_> {
    fn curve(&self, grid: &EvaluationGrid) -> rmt_jacobi::Result<DensityCurve> {
        match &self.kind {
            Analytic::Complex(ctx) => exact_complex::level_density_curve(ctx, grid),
            Analytic::Real(ctx) => exact_real::level_density_curve(ctx, grid),
            Analytic::Asymptotic => asymptotic::level_density_curve(&self.cfg.params, self.spectrum, grid),
        }
    }

    fn density(&self, v: f64, domain: Domain) -> rmt_jacobi::Result<f64> {
        let (params, spec) = (&self.cfg.params, self.spectrum);
        match (&self.kind, domain) {
            (Analytic::Complex(c), Domain::Jacobi) => c.jacobi_level_density(v),
            (Analytic::Complex(c), Domain::CauchyLorentz) => c.cl_level_density(v),
            (Analytic::Real(c), Domain::Jacobi) => c.jacobi_level_density(v),
            (Analytic::Real(c), Domain::CauchyLorentz) => c.cl_level_density(v),
            (Analytic::Asymptotic, Domain::Jacobi) => asymptotic::asymptotic_jacobi_density(v, spec, params),
            (Analytic::Asymptotic, Domain::CauchyLorentz) => asymptotic::asymptotic_cl_density(v, spec, params),
        }
    }
}

fn exact_model<'a>(cfg: &'a RunConfig, spectrum: &'a CorrelationSpectrum) -> rmt_jacobi::Result<Model<'a>> {
    let kind = match cfg.params.beta() {
        Beta::Complex => Analytic::Complex(KernelContext::new(&cfg.params, spectrum)?),
        Beta::Real => Analytic::Real(RealDensityContext::new(&cfg.params, spectrum)?),
    };
    Ok(Model { kind, cfg, spectrum })
}

/// Numerical failures of one method under `method = all` are recorded and
/// the others carry on; invalid input still aborts.
fn tolerate<T>(
    choice: MethodChoice,
    method: &str,
    r: rmt_jacobi::Result<T>,
    skipped: &mut Vec<Value>,
) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ rmt_jacobi::Error::InvalidInput(_)) => Err(e.into()),
        Err(e) if choice == MethodChoice::All => {
            warn!("skipping {method}: {e}");
            skipped.push(json!({"method": method, "reason": e.to_string()}));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn analytic_models<'a>(
    cfg: &'a RunConfig,
    spectrum: &'a CorrelationSpectrum,
    skipped: &mut Vec<Value>,
) -> Result<Vec<Model<'a>>> {
    let mut out = Vec::new();
    if matches!(cfg.method, MethodChoice::Exact | MethodChoice::All) {
        cfg.warn_on_cost();
        if let Some(m) = tolerate(cfg.method, "exact", exact_model(cfg, spectrum), skipped)? {
            out.push(m);
        }
    }
    if matches!(cfg.method, MethodChoice::Asymptotic | MethodChoice::All) {
        out.push(Model {
            kind: Analytic::Asymptotic,
            cfg,
            spectrum,
        });
    }
    Ok(out)
}

fn sample(cfg: &RunConfig, spectrum: &CorrelationSpectrum) -> Result<SampleBatch> {
    let mc = cfg.mc()?;
    info!("sampling {} matrices with seed {}", mc.num_samples, mc.seed);
    let batch = sample_jacobi(&cfg.params, spectrum, mc.num_samples, mc.seed)?;
    Ok(match cfg.ensemble {
        Ensemble::Jacobi => batch,
        Ensemble::Cl => batch.to_cauchy_lorentz()?,
    })
}

/// Histogram bins: uniform on the whole interval for Jacobi; for
/// Cauchy-Lorentz (unbounded support) over the grid span, uniform in `ln b`
/// when the grid is log-spaced.
struct Binning {
    edges: Vec<f64>,
    log: bool,
}

impl Binning {
    fn new(cfg: &RunConfig, grid: &EvaluationGrid, bins: usize) -> Self {
        let (lo, hi) = (grid.points()[0], grid.points()[grid.len() - 1]);
        match cfg.ensemble {
            Ensemble::Jacobi => Self {
                edges: uniform_edges(-1.0, 1.0, bins),
                log: false,
            },
            Ensemble::Cl if cfg.grid.spacing.unwrap_or(Spacing::Log) == Spacing::Log => Self {
                edges: uniform_edges(lo.ln(), hi.ln(), bins)
                    .into_iter()
                    .map(f64::exp)
                    .collect(),
                log: true,
            },
            Ensemble::Cl => Self {
                edges: uniform_edges(lo, hi, bins),
                log: false,
            },
        }
    }

    fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    fn range(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.bins()])
    }

    fn counts(&self, values: &[f64]) -> Vec<u64> {
        let (lo, hi) = self.range();
        if self.log {
            let logs: Vec<f64> = values.iter().filter(|v| **v > 0.0).map(|v| v.ln()).collect();
            bin_counts(&logs, self.bins(), lo.ln(), hi.ln())
        } else {
            bin_counts(values, self.bins(), lo, hi)
        }
    }

    /// Histogram normalized by the total number of eigenvalues, so that it
    /// estimates the density itself even when the range cuts off a tail.
    fn curve(&self, batch: &SampleBatch) -> Result<DensityCurve> {
        let counts = self.counts(batch.pooled());
        let n = batch.pooled().len() as f64;
        let inside = counts.iter().sum::<u64>() as f64;
        let centers = self
            .edges
            .windows(2)
            .map(|w| {
                if self.log {
                    (w[0] * w[1]).sqrt()
                } else {
                    0.5 * (w[0] + w[1])
                }
            })
            .collect();
        let values = counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(c, w)| *c as f64 / (n * (w[1] - w[0])))
            .collect();
        let grid = EvaluationGrid::new(centers, batch.ensemble())?;
        Ok(DensityCurve::new(grid, values, Method::MonteCarlo, 1.0 - inside / n)?
            .with_note("fraction_in_range", inside / n))
    }

    fn bars(&self, curve: &DensityCurve) -> Vec<Bar> {
        self.edges
            .windows(2)
            .zip(curve.values())
            .map(|(w, v)| Bar {
                lo: w[0],
                hi: w[1],
                height: *v,
            })
            .collect()
    }
}

fn plot(cfg: &RunConfig, title: &str, hist: Option<(&Binning, &DensityCurve)>, curves: &[DensityCurve]) -> Plot {
    let log_x = cfg.ensemble == Ensemble::Cl && cfg.grid.spacing.unwrap_or(Spacing::Log) == Spacing::Log;
    Plot {
        title: title.to_string(),
        x_label: match cfg.ensemble {
            Ensemble::Jacobi => "x".into(),
            Ensemble::Cl => "b".into(),
        },
        y_label: "density".into(),
        log_x,
        bars: hist.map(|(b, h)| b.bars(h)).unwrap_or_default(),
        bar_label: "monte carlo".into(),
        lines: curves
            .iter()
            .map(|c| Series {
                label: c.method().as_str().replace('_', " "),
                points: c.points().iter().copied().zip(c.values().iter().copied()).collect(),
            })
            .collect(),
    }
}

fn write_svg(cfg: &RunConfig, plot: Plot, files: &mut BTreeMap<&'static str, String>) -> Result<()> {
    if let Some(path) = &cfg.output.svg_path {
        write_atomic(path, plot.render().as_bytes())?;
        files.insert("svg", path.display().to_string());
    }
    Ok(())
}

struct Finish<'a> {
    command: &'static str,
    cfg: &'a RunConfig,
    spectrum: &'a CorrelationSpectrum,
    started: Instant,
    files: BTreeMap<&'static str, String>,
    curves: &'a [DensityCurve],
    skipped: Vec<Value>,
    summary: Value,
}

impl Finish<'_> {
    fn write(self) -> Result<PathBuf> {
        let path = self.cfg.output.json_or(self.command);
        let sidecar = Sidecar {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            config: self.cfg,
            seed: self.cfg.mc.as_ref().map(|m| m.seed),
            lambdas: self.spectrum.lambdas(),
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
            files: self.files,
            curves: self.curves.iter().map(CurveSummary::from).collect(),
            skipped: self.skipped,
            summary: self.summary,
        };
        write_json(&path, &sidecar)?;
        Ok(path)
    }
}

pub fn cmd_sample(cfg: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let spectrum = cfg.resolve_spectrum()?;
    let mc = cfg.mc()?;
    let grid = cfg.grid()?;
    let batch = sample(cfg, &spectrum)?;
    let binning = Binning::new(cfg, &grid, mc.bins);
    let hist = binning.curve(&batch)?;

    let mut files = BTreeMap::new();
    let samples = cfg.output.samples_or("sample");
    write_samples(&samples, &batch)?;
    files.insert("samples", samples.display().to_string());
    let csv = cfg.output.csv_or("sample");
    let curves = [hist];
    write_curves(&csv, &curves)?;
    files.insert("csv", csv.display().to_string());
    write_svg(
        cfg,
        plot(cfg, "eigenvalue histogram", Some((&binning, &curves[0])), &[]),
        &mut files,
    )?;
    let json = Finish {
        command: "sample",
        cfg,
        spectrum: &spectrum,
        started,
        files,
        curves: &curves,
        skipped: Vec::new(),
        summary: json!({"num_samples": batch.num_samples(), "eigenvalues": batch.pooled().len()}),
    }
    .write()?;
    println!(
        "wrote {} samples to {}; sidecar {}",
        batch.num_samples(),
        samples.display(),
        json.display()
    );
    Ok(())
}

pub fn cmd_density(cfg: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let spectrum = cfg.resolve_spectrum()?;
    let grid = cfg.grid()?;
    let mut skipped = Vec::new();
    let mut curves = Vec::new();
    let mut hist = None;
    if cfg.method == MethodChoice::Mc || (cfg.method == MethodChoice::All && cfg.mc.is_some()) {
        let batch = sample(cfg, &spectrum)?;
        let binning = Binning::new(cfg, &grid, cfg.mc()?.bins);
        hist = Some((binning.curve(&batch)?, binning));
    }
    for model in analytic_models(cfg, &spectrum, &mut skipped)? {
        let name = match model.kind {
            Analytic::Asymptotic => "asymptotic",
            _ => "exact",
        };
        if let Some(c) = tolerate(cfg.method, name, model.curve(&grid), &mut skipped)? {
            curves.push(c);
        }
    }
    if curves.is_empty() && hist.is_none() {
        return Err(rmt_jacobi::Error::numerical("no method produced a curve").into());
    }

    let mut files = BTreeMap::new();
    let all: Vec<DensityCurve> = hist.iter().map(|h| h.0.clone()).chain(curves.iter().cloned()).collect();
    let csv = cfg.output.csv_or("density");
    write_curves(&csv, &all)?;
    files.insert("csv", csv.display().to_string());
    let bars = hist.as_ref().map(|(c, b)| (b, c));
    write_svg(cfg, plot(cfg, "level density", bars, &curves), &mut files)?;
    let json = Finish {
        command: "density",
        cfg,
        spectrum: &spectrum,
        started,
        files,
        curves: &all,
        skipped,
        summary: Value::Null,
    }
    .write()?;
    for c in &all {
        println!(
            "{}: {} points, normalization residual {:.2e}",
            c.method().as_str(),
            c.points().len(),
            c.normalization_residual()
        );
    }
    println!("wrote {}; sidecar {}", csv.display(), json.display());
    Ok(())
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<()> {
    let started = Instant::now();
    if cfg.method == MethodChoice::Mc {
        return Err(CliError::usage(
            "config field `method`: compare needs an analytic method (exact, asymptotic or all)",
        ));
    }
    let spectrum = cfg.resolve_spectrum()?;
    let mc = cfg.mc()?.clone();
    let grid = cfg.grid()?;
    let domain = cfg.ensemble.domain();
    let batch = sample(cfg, &spectrum)?;
    let binning = Binning::new(cfg, &grid, mc.bins);
    let hist = binning.curve(&batch)?;
    let counts = binning.counts(batch.pooled());
    let total = batch.pooled().len() as u64;
    let outside = total - counts.iter().sum::<u64>();
    let edges = &binning.edges;
    let (g0, g1) = (grid.points()[0], grid.points()[grid.len() - 1]);
    let in_grid: Vec<f64> = batch
        .pooled()
        .iter()
        .copied()
        .filter(|v| *v >= g0 && *v <= g1)
        .collect();

    let mut skipped = Vec::new();
    let mut curves = Vec::new();
    let mut rows = Vec::new();
    for model in analytic_models(cfg, &spectrum, &mut skipped)? {
        let name = match model.kind {
            Analytic::Asymptotic => "asymptotic",
            _ => "exact",
        };
        let Some(curve) = tolerate(cfg.method, name, model.curve(&grid), &mut skipped)? else {
            continue;
        };
        // the exact real curve is renormalized; scale the pointwise density alike
        let scale = curve
            .note("mass")
            .filter(|_| matches!(model.kind, Analytic::Real(_)))
            .map_or(1.0, |m| 1.0 / m);
        let probs = bin_probabilities(|v| Ok(model.density(v, domain)?.max(0.0) * scale), edges, 1e-8);
        let Some(probs) = tolerate(cfg.method, name, probs, &mut skipped)? else {
            continue;
        };
        let l1 = binned_l1_with_total(&counts, &probs, total)?;
        let bound = multinomial_l1_bound(&probs, total);
        let mut c_ext = counts.clone();
        c_ext.push(outside);
        let mut p_ext = probs.clone();
        p_ext.push((1.0 - probs.iter().sum::<f64>()).max(0.0));
        let chi = chi_square(&c_ext, &p_ext)?;
        let cdf = tabulated_cdf(curve.points(), curve.values())?;
        let ks = ks_one_sample(&in_grid, cdf)?;
        println!(
            "{}: binned L1 {l1:.5} (3σ bound {bound:.5}), chi2 {:.1} on {} dof (p {:.3}), KS {:.4} (p {:.3})",
            curve.method().as_str(),
            chi.statistic,
            chi.dof,
            chi.p_value,
            ks.statistic,
            ks.p_value
        );
        rows.push(json!({
            "method": curve.method().as_str(),
            "binned_l1": l1,
            "l1_bound_3sigma": bound,
            "within_bound": l1 < bound,
            "chi_square": {"statistic": chi.statistic, "dof": chi.dof, "p_value": chi.p_value},
            "ks": {"statistic": ks.statistic, "p_value": ks.p_value},
        }));
        curves.push(curve);
    }
    if curves.is_empty() {
        return Err(rmt_jacobi::Error::numerical("no analytic method produced a curve").into());
    }

    let mut files = BTreeMap::new();
    let all: Vec<DensityCurve> = std::iter::once(hist.clone()).chain(curves.iter().cloned()).collect();
    let csv = cfg.output.csv_or("compare");
    write_curves(&csv, &all)?;
    files.insert("csv", csv.display().to_string());
    write_svg(
        cfg,
        plot(
            cfg,
            "Monte Carlo against analytic densities",
            Some((&binning, &hist)),
            &curves,
        ),
        &mut files,
    )?;
    let summary = json!({
        "bins": mc.bins,
        "range": [binning.range().0, binning.range().1],
        "log_bins": binning.log,
        "eigenvalues": total,
        "outside_range": outside,
        "comparisons": rows,
    });
    let json = Finish {
        command: "compare",
        cfg,
        spectrum: &spectrum,
        started,
        files,
        curves: &all,
        skipped,
        summary,
    }
    .write()?;
    println!("wrote {}; summary {}", csv.display(), json.display());
    Ok(())
}
