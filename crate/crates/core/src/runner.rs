//! Runs the verification suites named by a subcommand and assembles the
//! report. Paths are generated in parallel and reduced in path order, so the
//! report does not depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::equidist::{
    chart_test_family, loxo_occupation_h2, loxo_occupation_tree, markov_flow_prediction, portmanteau_sandwich,
    ray_oracle_h2, ray_oracle_tree, tree_test_family, tv_distance, validate_flow_prediction, BinnedMeasure,
    FlowMeasure, TreeFlowMeasure,
};
use crate::error::{Error, Result};
use crate::estimators::{
    axis_tracking_check, boundary_estimate, first_passage_mc, first_passage_solve, harmonic_cylinder_mc,
    harmonic_kernel, length_law_stat, median, stationarity_residual, stationarity_residual_with_se, tracking_stat,
    validate_kernel, BoundaryEstimate, DriftEstimate, HarmonicKernel, MeanEstimate,
};
use crate::model::Model;
use crate::report::{Estimate, ExperimentReport, MeasureEntry, ModelSummary, Provenance, Series};
use crate::walk::{generation_check, sample_path, SamplePath, StepDistribution};
use crate::word::{Letter, TreeBoundaryPrefix};

/// Escape distance for first-passage hit counting.
pub const FIRST_PASSAGE_ESCAPE: usize = 100;
/// Products of at most this many atoms are searched for generation witnesses.
pub const GENERATION_RADIUS: usize = 3;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Certify,
    Drift,
    Track,
    LengthLaw,
    AxisCheck,
    Harmonic,
    Equidistribute,
    All,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Certify,
        Command::Drift,
        Command::Track,
        Command::LengthLaw,
        Command::AxisCheck,
        Command::Harmonic,
        Command::Equidistribute,
        Command::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Drift => "drift",
            Command::Track => "track",
            Command::LengthLaw => "length-law",
            Command::AxisCheck => "axis-check",
            Command::Harmonic => "harmonic",
            Command::Equidistribute => "equidistribute",
            Command::All => "all",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Unsupported(format!("unknown subcommand {s:?}")))
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub wall_clock: bool,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    model: Model,
    mu: StepDistribution,
    report: ExperimentReport,
}

impl Ctx<'_> {
    fn estimate(&mut self, name: &str, value: f64, std_error: Option<f64>) {
        let gate = self.cfg.gates.get(name).cloned();
        self.report.estimates.insert(name.to_string(), Estimate::new(value, std_error, gate));
    }

    fn flag(&mut self, name: &str, holds: bool) {
        let gate = self.cfg.gates.get(name).cloned();
        let value = if holds { 1.0 } else { 0.0 };
        self.report.estimates.insert(name.to_string(), Estimate::new(value, None, gate));
    }

    fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.report.warnings.contains(&w) {
            self.report.warnings.push(w);
        }
    }

    fn measure(&mut self, name: &str, m: &FlowMeasure) {
        let (kind, chart_or_depth) = match m {
            FlowMeasure::Tree(t) => ("cylinders", serde_json::json!(t.depth)),
            FlowMeasure::Binned(b) => ("binned", serde_json::to_value(&b.chart).expect("chart serializes")),
        };
        self.report.measures.push(MeasureEntry {
            name: name.into(),
            kind: kind.into(),
            chart_or_depth,
            entries: m.entries(),
        });
    }

    fn series(&mut self, name: &str, x_label: &str, y_label: &str, pts: Vec<(f64, f64)>) {
        let (x, y) = pts.into_iter().unzip();
        self.report.series.push(Series {
            name: name.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x,
            y,
        });
    }

    fn seed(&self) -> u64 {
        self.cfg.run.seed
    }

    fn n(&self) -> usize {
        self.cfg.run.n
    }

    fn paths(&self) -> usize {
        self.cfg.run.paths
    }

    /// Paths `first .. first + count` simulated to `len` steps, in order.
    fn sample(&self, first: usize, count: usize, len: usize) -> Vec<SamplePath> {
        (first as u64..(first + count) as u64)
            .into_par_iter()
            .map(|i| sample_path(&self.mu, len, self.seed(), i))
            .collect()
    }

    fn long_len(&self) -> usize {
        self.cfg.run.horizon * self.n()
    }
}

/// Roughly geometric grid of indices ending at `n`.
pub fn convergence_grid(n: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (0..12).map(|j| n >> j).filter(|&m| m >= 10).collect();
    g.reverse();
    g.dedup();
    g
}

/// Runs a subcommand. Half-plane configs are certified first and abort on
/// failure.
pub fn run(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed {
        cfg.run.seed = s;
    }
    let model = cfg.build_model()?;
    let mu = cfg.build_mu(&model)?;
    let basepoint = match &model {
        Model::Tree { basepoint, .. } => basepoint.to_string(),
        Model::HalfPlane { basepoint, .. } => basepoint.to_string(),
    };
    let report = ExperimentReport {
        command: cmd.to_string(),
        config: cfg.clone(),
        model: ModelSummary {
            kind: model.kind(),
            rank: model.rank(),
            basepoint,
        },
        estimates: Default::default(),
        measures: vec![],
        series: vec![],
        warnings: vec![],
        provenance: Provenance {
            seed: cfg.run.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock: None,
        },
    };
    let mut ctx = Ctx {
        cfg: &cfg,
        model,
        mu,
        report,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| -> Result<()> {
        let sections: &[Command] = match cmd {
            Command::All => &Command::ALL[..7],
            _ => std::slice::from_ref(&cmd),
        };
        for s in sections {
            match s {
                Command::Certify => certify(&mut ctx),
                Command::Drift => drift(&mut ctx),
                Command::Track => track(&mut ctx),
                Command::LengthLaw => length_law(&mut ctx),
                Command::AxisCheck => axis_check(&mut ctx),
                Command::Harmonic => harmonic(&mut ctx)?,
                Command::Equidistribute => equidistribute(&mut ctx)?,
                Command::All => unreachable!(),
            }
        }
        Ok(())
    })?;
    if opts.wall_clock {
        ctx.report.provenance.wall_clock = Some(start.elapsed().as_secs_f64());
    }
    Ok(ctx.report)
}

fn certify(ctx: &mut Ctx) {
    if let Model::HalfPlane { group, .. } = &ctx.model {
        let elementary = group.is_elementary();
        ctx.flag("schottky_certified", true);
        if elementary {
            ctx.warn("Schottky group has fewer than two generators and is elementary");
        }
    }
    let diag = generation_check(&ctx.mu, ctx.model.rank(), GENERATION_RADIUS);
    for w in diag.warnings() {
        ctx.warn(w);
    }
    ctx.estimate("support_nonelementary", if diag.nonelementary() { 1.0 } else { 0.0 }, None);
    ctx.estimate("support_generates", if diag.generates() { 1.0 } else { 0.0 }, None);
}

fn drift(ctx: &mut Ctx) {
    let n = ctx.n();
    let grid = convergence_grid(n);
    let paths = ctx.sample(0, ctx.paths(), n);
    let model = &ctx.model;
    let rows: Vec<Vec<f64>> = paths
        .par_iter()
        .map(|p| grid.iter().map(|&m| model.displacement(&p.prefix(m))).collect())
        .collect();
    let mut profile = Vec::new();
    for (j, &m) in grid.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        profile.push((m as f64, DriftEstimate::from_displacements(&col, m).l_hat));
    }
    let last: Vec<f64> = rows.iter().map(|r| r[grid.len() - 1]).collect();
    let d = DriftEstimate::from_displacements(&last, n);
    ctx.estimate("drift", d.l_hat, Some(d.std_error));
    ctx.series("drift", "n", "d(x0, w_n x0)/n", profile);
}

/// Boundary estimates of long paths; failures are counted and reported.
fn boundaries(ctx: &mut Ctx, paths: &[SamplePath], label: &str) -> Vec<Option<BoundaryEstimate>> {
    let model = &ctx.model;
    let width = ctx.cfg.analysis.max_width;
    let xis: Vec<Option<BoundaryEstimate>> = paths.par_iter().map(|p| boundary_estimate(model, p, width).ok()).collect();
    let failed = xis.iter().filter(|x| x.is_none()).count();
    if failed > 0 {
        ctx.warn(format!("{label}: {failed} of {} boundary estimates did not settle", paths.len()));
    }
    xis
}

fn track(ctx: &mut Ctx) {
    let (n, n0) = (ctx.n(), ctx.cfg.analysis.compare_n.min(ctx.n()));
    let paths = ctx.sample(0, ctx.paths(), ctx.long_len());
    let xis = boundaries(ctx, &paths, "track");
    let model = &ctx.model;
    let stats: Vec<Option<(f64, f64)>> = paths
        .par_iter()
        .zip(&xis)
        .map(|(p, xi)| {
            let xi = xi.as_ref()?;
            Some((tracking_stat(model, p, n, xi).ok()?, tracking_stat(model, p, n0, xi).ok()?))
        })
        .collect();
    let ok: Vec<(f64, f64)> = stats.iter().flatten().copied().collect();
    let at_n: Vec<f64> = ok.iter().map(|s| s.0).collect();
    let at_n0: Vec<f64> = ok.iter().map(|s| s.1).collect();
    let depth: Vec<f64> = xis.iter().flatten().map(|x| x.depth() as f64 / ctx.long_len() as f64).collect();
    let (m, m0) = (median(&at_n), median(&at_n0));
    ctx.estimate("tracking_median", m, None);
    ctx.estimate("tracking_median_compare", m0, None);
    ctx.flag("tracking_decreases", m < m0);
    ctx.estimate("tracking_paths_used", ok.len() as f64, None);
    let e = MeanEstimate::from_samples(&depth);
    ctx.estimate("boundary_depth_rate", e.mean, Some(e.std_error));
}

fn length_law(ctx: &mut Ctx) {
    let n = ctx.n();
    let grid = convergence_grid(n);
    let paths = ctx.sample(0, ctx.paths(), n);
    let model = &ctx.model;
    let rows: Vec<(Vec<f64>, f64, bool)> = paths
        .par_iter()
        .map(|p| {
            let ratios = grid.iter().map(|&m| model.translation_length(&p.prefix(m)) / m as f64).collect();
            let law = length_law_stat(model, p, n);
            let drift = model.displacement(&p.prefix(n)) / n as f64;
            (ratios, drift, law.never_lost)
        })
        .collect();
    let last = grid.len() - 1;
    let ratio: Vec<f64> = rows.iter().map(|r| r.0[last]).collect();
    let drift: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let diff: Vec<f64> = ratio.iter().zip(&drift).map(|(a, b)| a - b).collect();
    let (er, ed, ediff) = (
        MeanEstimate::from_samples(&ratio),
        MeanEstimate::from_samples(&drift),
        MeanEstimate::from_samples(&diff),
    );
    ctx.estimate("length_ratio", er.mean, Some(er.std_error));
    ctx.estimate("length_law_drift", ed.mean, Some(ed.std_error));
    ctx.estimate("length_drift_gap", (er.mean - ed.mean).abs(), Some(ediff.std_error));
    let z = if ediff.std_error > 0.0 {
        ediff.mean.abs() / ediff.std_error
    } else if ediff.mean == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    ctx.estimate("length_drift_z", z, None);
    let never_lost = rows.iter().filter(|r| r.2).count() as f64 / rows.len() as f64;
    ctx.estimate("loxodromic_never_lost_fraction", never_lost, None);
    let profile = grid
        .iter()
        .enumerate()
        .map(|(j, &m)| (m as f64, rows.iter().map(|r| r.0[j]).sum::<f64>() / rows.len() as f64))
        .collect();
    ctx.series("length_law", "n", "l(w_n)/n", profile);
}

fn axis_check(ctx: &mut Ctx) {
    let n = ctx.n();
    let a = &ctx.cfg.analysis;
    let (eps, c) = (a.epsilon, a.c);
    let paths = ctx.sample(0, ctx.paths(), ctx.long_len());
    let xis = boundaries(ctx, &paths, "axis-check");
    let model = &ctx.model;
    let drifts: Vec<f64> = paths.par_iter().map(|p| model.displacement(&p.prefix(n)) / n as f64).collect();
    let l_hat = MeanEstimate::from_samples(&drifts).mean;
    let checks: Vec<Option<(bool, f64)>> = paths
        .par_iter()
        .zip(&xis)
        .map(|(p, xi)| {
            let chk = axis_tracking_check(model, p, n, xi.as_ref()?, eps, c, l_hat).ok()?;
            Some((chk.pass, chk.worst_offset))
        })
        .collect();
    let passed = checks.iter().flatten().filter(|c| c.0).count();
    let errored = checks.iter().filter(|c| c.is_none()).count();
    if errored > 0 {
        ctx.warn(format!("axis-check: {errored} paths could not be checked"));
    }
    let offsets: Vec<f64> = checks.iter().flatten().map(|c| c.1).collect();
    ctx.estimate("axis_pass_fraction", passed as f64 / paths.len() as f64, None);
    ctx.estimate("axis_worst_offset_median", median(&offsets), None);
    ctx.estimate("axis_worst_offset_max", offsets.iter().copied().fold(0.0, f64::max), None);
}

fn exact_kernel(ctx: &mut Ctx) -> Option<HarmonicKernel> {
    let rank = ctx.model.rank();
    let fp = match first_passage_solve(&ctx.mu, rank) {
        Ok(fp) => fp,
        Err(e) => {
            ctx.warn(format!("no exact harmonic measure: {e}"));
            return None;
        }
    };
    match harmonic_kernel(&fp, &ctx.mu) {
        Ok(k) => Some(k),
        Err(e) => {
            ctx.warn(format!("no exact harmonic measure: {e}"));
            None
        }
    }
}

fn harmonic(ctx: &mut Ctx) -> Result<()> {
    if matches!(ctx.model, Model::HalfPlane { .. }) {
        ctx.warn("harmonic: the half-plane harmonic measure is only sampled through ray oracles (see equidistribute)");
        return Ok(());
    }
    let rank = ctx.model.rank();
    let a = ctx.cfg.analysis.clone();
    let depth = a.depth.max(1);
    let mc = harmonic_cylinder_mc(&ctx.mu, depth.max(3), a.mc_samples, a.mc_steps, ctx.seed())?;
    let kernel = exact_kernel(ctx);
    if let Some(k) = kernel {
        let fp = &k.first_passage;
        ctx.estimate("first_passage_residual", fp.residual, None);
        for x in Letter::alphabet(rank) {
            ctx.estimate(&format!("first_passage_{x}"), fp.get(x), None);
        }
        let fmc = first_passage_mc(&ctx.mu, rank, a.fp_paths, ctx.seed(), FIRST_PASSAGE_ESCAPE)?;
        let z = (0..fp.f.len())
            .map(|s| {
                let gap = (fp.f[s] - fmc.f[s]).abs();
                if fmc.std_error[s] > 0.0 {
                    gap / fmc.std_error[s]
                } else if gap == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        ctx.estimate("first_passage_mc_z", z, None);
        let exact = k.cylinder_measure(depth.max(2));
        ctx.estimate("stationarity_residual_exact", stationarity_residual(&exact, &ctx.mu, rank)?, None);
        ctx.estimate("cylinder_tv", mc.tv_at_depth(&exact, depth), None);
        let valid = validate_kernel(&k, &mc, &ctx.mu, 3, a.sigmas);
        if let Err(e) = &valid {
            ctx.warn(format!("kernel validation: {e}"));
        }
        ctx.flag("kernel_validated", valid.is_ok());
        let exact_flow = FlowMeasure::Tree(TreeFlowMeasure {
            rank,
            depth,
            masses: exact.masses.iter().filter(|(w, _)| w.len() == depth).map(|(w, &m)| (w.clone(), m)).collect(),
        });
        ctx.measure("harmonic_exact", &exact_flow);
    }
    if ctx.mu.is_nearest_neighbor() && mc.depth >= 2 {
        let mc2 = crate::estimators::CylinderMeasure::from_leaves(
            2,
            mc.level(2).map(|(w, m)| (w.clone(), m)).collect(),
            mc.samples,
        );
        let (r, se) = stationarity_residual_with_se(&mc2, &ctx.mu, rank)?;
        ctx.estimate("stationarity_residual_mc", r, Some(se));
        ctx.estimate("stationarity_residual_mc_ratio", if se > 0.0 { r / se } else { 0.0 }, None);
    }
    let mc_flow = FlowMeasure::Tree(TreeFlowMeasure {
        rank,
        depth,
        masses: mc.level(depth).map(|(w, m)| (w.clone(), m)).collect(),
    });
    ctx.measure("harmonic_mc", &mc_flow);
    Ok(())
}

fn pooled(ms: &[FlowMeasure]) -> Vec<f64> {
    let mut acc = vec![0.0; ms[0].cells().len()];
    for m in ms {
        for (a, b) in acc.iter_mut().zip(m.cells()) {
            *a += b / ms.len() as f64;
        }
    }
    acc
}

fn equidistribute(ctx: &mut Ctx) -> Result<()> {
    match ctx.model {
        Model::Tree { .. } => equidistribute_tree(ctx),
        Model::HalfPlane { .. } => equidistribute_h2(ctx),
    }
}

fn equidistribute_tree(ctx: &mut Ctx) -> Result<()> {
    let rank = ctx.model.rank();
    let a = ctx.cfg.analysis.clone();
    let (n, n0, depth) = (ctx.n(), a.compare_n.min(ctx.n()), a.depth.max(1));
    let paths = ctx.sample(0, ctx.paths(), n);
    let oracle_paths = ctx.sample(ctx.paths(), a.oracle_paths.max(2), ctx.long_len());
    let xis = boundaries(ctx, &oracle_paths, "equidistribute");
    let oracles: Vec<TreeFlowMeasure> = xis
        .iter()
        .flatten()
        .filter_map(|xi| match xi {
            BoundaryEstimate::Tree { prefix } => ray_oracle_tree(prefix, rank, depth).ok(),
            BoundaryEstimate::Plane { .. } => None,
        })
        .collect();
    let kernel = exact_kernel(ctx);
    let reference: FlowMeasure = match &kernel {
        Some(k) => {
            let pred = markov_flow_prediction(k, depth);
            ctx.estimate("prediction_shift_gap", pred.shift_gap(), None);
            let v = validate_flow_prediction(&pred, &oracles, a.sigmas);
            if let Err(e) = &v {
                ctx.warn(format!("flow prediction: {e}"));
            }
            ctx.flag("prediction_validated", v.is_ok());
            FlowMeasure::Tree(pred)
        }
        None => {
            ctx.warn("comparing against pooled ray oracles instead of a Markov prediction");
            let words = crate::word::reduced_words(rank, depth);
            let cells = pooled(&oracles.iter().cloned().map(FlowMeasure::Tree).collect::<Vec<_>>());
            FlowMeasure::Tree(TreeFlowMeasure {
                rank,
                depth,
                masses: words.into_iter().zip(cells).filter(|(_, m)| *m > 0.0).collect(),
            })
        }
    };
    let grid = convergence_grid(n);
    let rows: Vec<Option<(Vec<f64>, f64, FlowMeasure)>> = paths
        .par_iter()
        .map(|p| {
            let tv_at = |m: usize| -> Option<f64> {
                let lox = loxo_occupation_tree(&p.prefix(m), rank, depth).ok()?;
                tv_distance(&lox.measure, &reference).ok()
            };
            let profile: Vec<f64> = grid.iter().map(|&m| tv_at(m).unwrap_or(f64::NAN)).collect();
            let lox = loxo_occupation_tree(&p.prefix(n), rank, depth).ok()?;
            Some((profile, tv_at(n0).unwrap_or(1.0), lox.measure))
        })
        .collect();
    let ok: Vec<&(Vec<f64>, f64, FlowMeasure)> = rows.iter().flatten().collect();
    if ok.len() < rows.len() {
        ctx.warn(format!("equidistribute: {} closed geodesics shorter than depth {depth}", rows.len() - ok.len()));
    }
    let last = grid.len() - 1;
    let tv: Vec<f64> = ok.iter().map(|r| r.0[last]).collect();
    let e = MeanEstimate::from_samples(&tv);
    ctx.estimate("loxo_tv_mean", e.mean, Some(e.std_error));
    let improves = ok.iter().filter(|r| r.1 > r.0[last]).count();
    ctx.estimate("loxo_tv_improves_fraction", improves as f64 / rows.len() as f64, None);
    let lox: Vec<FlowMeasure> = ok.iter().map(|r| r.2.clone()).collect();
    let sandwich = portmanteau_sandwich(&lox, std::slice::from_ref(&reference), &tree_test_family(rank, depth), a.sigmas)?;
    ctx.flag("sandwich", sandwich.pass);
    ctx.estimate("sandwich_worst_margin", sandwich.worst_margin, None);
    let profile = grid
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let col: Vec<f64> = ok.iter().map(|r| r.0[j]).filter(|v| v.is_finite()).collect();
            (m as f64, MeanEstimate::from_samples(&col).mean)
        })
        .collect();
    ctx.series("loxo_tv", "n", "TV(D_(w_n), m)", profile);
    ctx.measure("reference", &reference);
    if let Some(first) = lox.first() {
        let cells = pooled(&lox);
        let words = crate::word::reduced_words(rank, depth);
        let _ = first;
        let pooled_lox = FlowMeasure::Tree(TreeFlowMeasure {
            rank,
            depth,
            masses: words.into_iter().zip(cells).filter(|(_, m)| *m > 0.0).collect(),
        });
        ctx.measure("loxo_pooled", &pooled_lox);
    }
    Ok(())
}

fn equidistribute_h2(ctx: &mut Ctx) -> Result<()> {
    let Model::HalfPlane { group, basepoint } = &ctx.model else { unreachable!() };
    let (group, o) = (group.clone(), *basepoint);
    let a = ctx.cfg.analysis.clone();
    let n = ctx.n();
    let count = ctx.paths();
    let paths = ctx.sample(0, count, n);
    let partners = ctx.sample(count, count, ctx.long_len());
    let xis = boundaries(ctx, &partners, "equidistribute");
    let model = &ctx.model;
    let drifts: Vec<f64> = paths.par_iter().map(|p| model.displacement(&p.prefix(n)) / n as f64).collect();
    let l_hat = MeanEstimate::from_samples(&drifts).mean;
    let length = l_hat * n as f64;
    let lox: Vec<Option<BinnedMeasure>> = paths
        .par_iter()
        .map(|p| match loxo_occupation_h2(&group, &p.prefix(n), &a.chart, a.delta).ok()?.measure {
            FlowMeasure::Binned(b) => Some(b),
            FlowMeasure::Tree(_) => None,
        })
        .collect();
    let rays: Vec<Option<BinnedMeasure>> = xis
        .par_iter()
        .map(|xi| ray_oracle_h2(&group, o, xi.as_ref()?.prefix(), length, &a.chart, a.delta).ok())
        .collect();
    let pairs: Vec<(FlowMeasure, FlowMeasure)> = lox
        .iter()
        .zip(&rays)
        .filter_map(|(l, r)| Some((FlowMeasure::Binned(l.clone()?), FlowMeasure::Binned(r.clone()?))))
        .collect();
    if pairs.len() < count {
        ctx.warn(format!("equidistribute: {} of {count} path pairs unusable", count - pairs.len()));
    }
    let tvs: Vec<f64> = pairs.iter().map(|(l, r)| tv_distance(l, r).expect("same chart")).collect();
    ctx.estimate("loxo_ray_tv_median", median(&tvs), None);
    ctx.estimate("ray_length", length, None);
    let overflow = lox.iter().chain(&rays).flatten().map(|m| m.overflow()).fold(0.0, f64::max);
    ctx.estimate("overflow_max", overflow, None);
    let (ls, rs): (Vec<FlowMeasure>, Vec<FlowMeasure>) = pairs.into_iter().unzip();
    if ls.is_empty() {
        return Err(Error::Unstable("no usable path pairs".into()));
    }
    let sandwich = portmanteau_sandwich(&ls, &rs, &chart_test_family(&a.chart, a.r), a.sigmas)?;
    ctx.flag("sandwich", sandwich.pass);
    ctx.estimate("sandwich_worst_margin", sandwich.worst_margin, None);
    let bin = |cells: Vec<f64>| FlowMeasure::Binned(BinnedMeasure {
        chart: a.chart.clone(),
        masses: cells,
    });
    ctx.measure("loxo_pooled", &bin(pooled(&ls)));
    ctx.measure("ray_pooled", &bin(pooled(&rs)));
    Ok(())
}

/// Convenience for tests and the CLI: the ray prefix of a tree boundary
/// estimate.
pub fn tree_prefix(xi: &BoundaryEstimate) -> Option<&TreeBoundaryPrefix> {
    match xi {
        BoundaryEstimate::Tree { prefix } => Some(prefix),
        BoundaryEstimate::Plane { .. } => None,
    }
}
