use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use patina::harmonics::OutOfMask;
use patina::patch::FitMask;
use patina::pipeline::{
    read_json, run_all, PipelineConfig, PipelineError, Role, RunPaths, Side, StageOutcome, Stages, SyntheticSpec,
};
use patina::transfer::{CostNormalization, MatchWeights};

const THREADS_VAR: &str = "PATINA_THREADS";

#[derive(Parser)]
#[command(name = "patina", version, about = "Material-driven appearance transfer between genus-zero meshes")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Flags that override fields of the JSON config.
#[derive(Args, Default)]
struct Overrides {
    /// Pipeline config (JSON). Flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory holding the run layout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Recompute every stage and do not write cache records.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Spherical-harmonic order n.
    #[arg(long, global = true)]
    order: Option<usize>,
    #[arg(long, global = true)]
    regularization: Option<f64>,
    /// Drop out-of-mask samples from the fit instead of fitting zeros.
    #[arg(long, global = true)]
    drop_out_of_mask: bool,
    #[arg(long, global = true, value_enum)]
    fit_mask: Option<MaskArg>,
    /// Weight preset (paper-similar, paper-diffcolor, paper-teaser).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Match weights alpha,beta,gamma,delta,lambda; normalized to sum 1.
    #[arg(long, global = true, value_delimiter = ',', num_args = 5)]
    weights: Option<Vec<f64>>,
    #[arg(long, global = true, value_enum)]
    normalization: Option<NormArg>,
    #[arg(long, global = true)]
    mu_s: Option<f64>,
    #[arg(long, global = true)]
    mu_h: Option<f64>,
    #[arg(long, global = true)]
    f_s: Option<f64>,
    /// Boundary blend radius as sphere arc length.
    #[arg(long, global = true)]
    blend_sigma: Option<f64>,
    #[arg(long, global = true)]
    sigma_s: Option<f64>,
    #[arg(long, global = true)]
    sigma_r: Option<f64>,
    #[arg(long, global = true)]
    diffusion_iters: Option<usize>,
    #[arg(long, global = true)]
    white_thresh: Option<f64>,
    /// Explicit segmentation scale k.
    #[arg(long, global = true)]
    k: Option<f64>,
    #[arg(long, global = true)]
    min_size: Option<usize>,
    #[arg(long, global = true)]
    energy_tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    step_size: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskArg {
    Labelled,
    Faces,
    Extended,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    MinMax,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Source,
    Target,
    Both,
}

impl SideArg {
    fn roles(self) -> &'static [Role] {
        match self {
            SideArg::Source => &[Role::Source],
            SideArg::Target => &[Role::Target],
            SideArg::Both => &[Role::Source, Role::Target],
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthetic source, target and ground truth with known relations.
    Gen {
        #[arg(long)]
        spots: Option<usize>,
        #[arg(long)]
        subdivision: Option<u32>,
        #[arg(long)]
        contrast: Option<f64>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Conformal map to the unit sphere.
    Map {
        #[arg(long, value_enum, default_value = "both")]
        side: SideArg,
        /// Map this mesh instead of the run layout's input.
        #[arg(long, requires = "output")]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Landmark pairs used to rotate the target onto the source.
        #[arg(long)]
        landmarks: Option<PathBuf>,
    },
    /// Material measurements and curvature.
    Extract {
        #[arg(long, value_enum, default_value = "both")]
        side: SideArg,
    },
    /// Prefilter and segment into patches.
    Segment {
        #[arg(long, value_enum, default_value = "both")]
        side: SideArg,
    },
    /// Spherical-harmonic PDFs per patch.
    Fit {
        #[arg(long, value_enum, default_value = "both")]
        side: SideArg,
    },
    /// Assign a source patch to every target patch.
    Match,
    /// Reconstruct and blend the target's appearance.
    Transfer,
    /// Accuracy of a reconstruction against ground truth.
    Eval {
        #[arg(long)]
        result: Option<PathBuf>,
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// False-colour PLYs and PNG plots.
    Render,
    /// Every stage in order with caching.
    RunAll,
}

impl Overrides {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<(), PipelineError> {
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.no_cache {
            cfg.cache = false;
        }
        if let Some(v) = self.order {
            cfg.order = v;
        }
        if let Some(v) = self.regularization {
            cfg.regularization = v;
        }
        if self.drop_out_of_mask {
            cfg.out_of_mask = OutOfMask::Drop;
        }
        if let Some(v) = self.fit_mask {
            cfg.fit_mask = match v {
                MaskArg::Labelled => FitMask::Labelled,
                MaskArg::Faces => FitMask::Faces,
                MaskArg::Extended => FitMask::Extended,
            };
        }
        if let Some(v) = &self.preset {
            cfg.preset = Some(v.clone());
        }
        if let Some(w) = &self.weights {
            cfg.weights =
                MatchWeights::new(w[0], w[1], w[2], w[3], w[4]).map_err(|e| PipelineError::Config(e.to_string()))?;
            cfg.preset = None;
        }
        if let Some(v) = self.normalization {
            cfg.normalization = match v {
                NormArg::MinMax => CostNormalization::MinMax,
                NormArg::Raw => CostNormalization::Raw,
            };
        }
        let a = &mut cfg.assign;
        set(&mut a.mu_s, self.mu_s);
        set(&mut a.mu_h, self.mu_h);
        set(&mut a.f_s, self.f_s);
        if let Some(v) = self.blend_sigma {
            a.blend_sigma = Some(v);
        }
        let f = &mut cfg.filter;
        set(&mut f.sigma_s, self.sigma_s);
        set(&mut f.sigma_r, self.sigma_r);
        set(&mut f.diffusion_iters, self.diffusion_iters);
        set(&mut f.white_thresh, self.white_thresh);
        if let Some(v) = self.k {
            cfg.segment.k = Some(v);
        }
        set(&mut cfg.segment.min_size, self.min_size);
        let c = &mut cfg.conformal;
        set(&mut c.energy_tol, self.energy_tol);
        set(&mut c.max_iters, self.max_iters);
        set(&mut c.step_size, self.step_size);
        Ok(())
    }
}

fn set<T>(field: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *field = v;
    }
}

fn report(o: &StageOutcome) {
    let status = if o.cache_hit { "cache hit" } else { "computed" };
    eprintln!("{}: {status} ({:.2}s)", o.stage, o.seconds);
    for (path, hash) in &o.outputs {
        println!("{}\t{}\t{path}\t{hash}", o.stage, if o.cache_hit { "hit" } else { "miss" });
    }
}

/// Input mesh of one side: the config's path, or the generated file.
fn input_for(cfg: &PipelineConfig, paths: &RunPaths, role: Role) -> PathBuf {
    let (given, generated) = match role {
        Role::Source => (&cfg.source, &paths.gen.source),
        Role::Target => (&cfg.target, &paths.gen.target),
    };
    given.clone().unwrap_or_else(|| generated.clone())
}

fn landmarks_for(cfg: &PipelineConfig, paths: &RunPaths, flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| cfg.landmarks.clone())
        .or_else(|| paths.gen.landmarks.exists().then(|| paths.gen.landmarks.clone()))
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = match &cli.opts.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cli.opts.apply(&mut cfg)?;
    if cfg.synthetic.is_none() && cfg.source.is_none() && cfg.target.is_none() {
        cfg.synthetic = Some(SyntheticSpec::default());
    }
    if let Cmd::Gen {
        spots,
        subdivision,
        contrast,
        noise,
    } = &cli.cmd
    {
        let s = cfg.synthetic.get_or_insert_with(SyntheticSpec::default);
        set(&mut s.spots, *spots);
        set(&mut s.subdivision, *subdivision);
        set(&mut s.contrast, *contrast);
        set(&mut s.noise, *noise);
    }
    cfg.validate_params()?;

    let out = cfg.out_dir.clone();
    let paths = RunPaths::new(&out);
    if let Cmd::RunAll = cli.cmd {
        let summary = run_all(&cfg)?;
        summary.stages.iter().for_each(report);
        let mut st = Stages::new(cfg, &out);
        report(&st.render(&out, &summary.paths.plots)?);
        eprintln!("result: {}", summary.paths.result.display());
        if let Some(r) = summary.report {
            eprintln!(
                "accuracy: hue {:.2}%  saturation {:.2}%  ({} vertices) -> {}",
                100.0 * r.accuracy_hue,
                100.0 * r.accuracy_sat,
                r.vertex_count,
                summary.paths.report.display()
            );
        }
        return Ok(());
    }

    let mut st = Stages::new(cfg.clone(), &out);
    let side_paths = |role: Role| match role {
        Role::Source => &paths.source,
        Role::Target => &paths.target,
    };
    match cli.cmd {
        Cmd::Gen { .. } => report(&st.gen(&out)?),
        Cmd::Map {
            side,
            input,
            output,
            landmarks,
        } => {
            if let (Some(input), Some(output)) = (input, output) {
                let trace = output.with_extension("trace.json");
                report(&st.map(&input, &output, &trace, None)?);
                return Ok(());
            }
            for &role in side.roles() {
                let sp = side_paths(role);
                let align = match role {
                    Role::Target => landmarks_for(&cfg, &paths, landmarks.clone()),
                    Role::Source => None,
                };
                let align = align.as_deref().map(|l| (paths.source.sphere.as_path(), l));
                report(&st.map(&input_for(&cfg, &paths, role), &sp.sphere, &sp.trace, align)?);
            }
        }
        Cmd::Extract { side } => {
            for &role in side.roles() {
                let sp = side_paths(role);
                report(&st.extract(&sp.sphere, &sp.extracted)?);
            }
        }
        Cmd::Segment { side } => {
            for &role in side.roles() {
                let sp = side_paths(role);
                report(&st.segment(&sp.extracted, &sp.segmented, &sp.patches)?);
            }
        }
        Cmd::Fit { side } => {
            for &role in side.roles() {
                let sp = side_paths(role);
                report(&st.fit(&sp.segmented, &sp.patches, role, &sp.pdfs)?);
            }
        }
        Cmd::Match => report(&st.matching(&paths.source.side(), &paths.target.side(), &paths.assignment)?),
        Cmd::Transfer => {
            let t: Side = paths.target.side();
            report(&st.transfer(&paths.source.pdfs, &t, &paths.assignment, &paths.result, &paths.reconstructions)?)
        }
        Cmd::Eval {
            result,
            ground_truth,
            output,
        } => {
            let result = result.unwrap_or(paths.result.clone());
            let gt = ground_truth
                .or_else(|| cfg.ground_truth.clone())
                .unwrap_or(paths.ground_truth.clone());
            let output = output.unwrap_or(paths.report.clone());
            report(&st.eval(&result, &gt, &output)?);
            print_report(&output)?;
        }
        Cmd::Render => report(&st.render(&out, &paths.plots)?),
        Cmd::RunAll => unreachable!(),
    }
    Ok(())
}

fn print_report(path: &Path) -> Result<(), PipelineError> {
    let r: patina::pipeline::EvalReport = read_json(path)?;
    eprintln!(
        "accuracy: hue {:.2}%  saturation {:.2}%  ({} vertices)",
        100.0 * r.accuracy_hue,
        100.0 * r.accuracy_sat,
        r.vertex_count
    );
    Ok(())
}

fn init_threads() -> Result<(), PipelineError> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| PipelineError::Config(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(PipelineError::Config(format!("{THREADS_VAR} must be at least 1")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| PipelineError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
