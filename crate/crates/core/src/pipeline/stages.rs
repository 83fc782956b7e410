//! File-to-file pipeline stages. Every stage hashes its parameters and
//! inputs and is skipped when a cache record with the same key still
//! matches its outputs on disk.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::harmonics::Property;
use crate::mesh::io::{load_mesh, read_mesh, write_ply, PlyFormat};
use crate::mesh::{channel, Mesh};
use crate::patch::{PatchFitter, PatchManifest, PatchPdfs, PatchSet};
use crate::spheremap::{align_spheres, conformal_map_to_sphere, EnergyTrace, LandmarkSet, SphericalMesh};
use crate::transfer::{
    blend_and_compose, describe_patches, extract_channels, match_patches, reconstruct_all, segment_mesh, Assignment,
    BlendStats, PatchReconstruction,
};

use super::render::{false_colour, plot_histogram, plot_matrix, plot_series};
use super::{
    evaluate, gen_synthetic, hash_file, read_json, write_file, EvalReport, PipelineConfig, PipelineError, Provenance,
    Relation, StageCache,
};

/// JSON artifact with the provenance of the run that wrote it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub provenance: Provenance,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfSet {
    pub role: Role,
    pub order: usize,
    pub patches: Vec<PatchPdfs<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstructions {
    pub blend: BlendStats,
    pub patches: Vec<PatchReconstruction<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSet {
    pub relations: Vec<Relation>,
}

/// Which side of the transfer a mesh is on. Sources are fitted for
/// appearance and material, targets for material only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Target,
}

impl Role {
    pub fn properties(self) -> &'static [Property] {
        match self {
            Role::Source => &Property::SOURCE,
            Role::Target => &Property::MATERIAL,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Source => "source",
            Role::Target => "target",
        }
    }
}

/// Result of one stage invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: String,
    pub cache_hit: bool,
    /// Output path → sha256 of its contents.
    pub outputs: BTreeMap<String, String>,
    #[serde(skip)]
    pub seconds: f64,
}

/// Stage runner bound to one configuration. Cache records live under
/// `<cache_dir>/.cache`, output paths are recorded relative to `cache_dir`
/// when possible.
pub struct Stages {
    pub cfg: PipelineConfig,
    cache: StageCache,
    root: PathBuf,
    provenance: Provenance,
    pub log: Vec<StageOutcome>,
}

fn rel(root: &Path, p: &Path) -> String {
    p.strip_prefix(root).unwrap_or(p).to_string_lossy().into_owned()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| PipelineError::json(path, e))?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

fn save_mesh(mesh: &Mesh<f64>, path: &Path) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    write_ply(mesh, path, PlyFormat::BinaryLittleEndian)?;
    Ok(())
}

fn load_spherical(path: &Path) -> Result<SphericalMesh<f64>, PipelineError> {
    Ok(SphericalMesh::from_mesh(read_mesh(path)?)?)
}

fn load_patches(sm: &SphericalMesh<f64>, manifest: &Path) -> Result<PatchSet, PipelineError> {
    let m: Artifact<PatchManifest> = read_json(manifest)?;
    let hem = sm.base().half_edges()?;
    Ok(PatchSet::from_manifest(sm.base(), &hem, &m.body)?)
}

impl Stages {
    pub fn new(cfg: PipelineConfig, root: &Path) -> Self {
        Stages {
            cache: StageCache::new(root, cfg.cache),
            provenance: cfg.provenance(),
            root: root.to_path_buf(),
            cfg,
            log: Vec::new(),
        }
    }

    fn artifact<T>(&self, body: T) -> Artifact<T> {
        Artifact {
            provenance: self.provenance.clone(),
            body,
        }
    }

    /// Runs `work` unless a cache record for `(stage, params, inputs)` still
    /// matches `outputs`. `record` names the cache entry; stages that run
    /// once per mesh pass a distinct record per mesh.
    fn cached<P: Serialize>(
        &mut self,
        stage: &'static str,
        record: &str,
        params: &P,
        inputs: &[&Path],
        outputs: &[&Path],
        work: impl FnOnce(&Self) -> Result<(), PipelineError>,
    ) -> Result<StageOutcome, PipelineError> {
        let start = Instant::now();
        let key = StageCache::key(stage, &(params, &self.provenance.version), inputs).map_err(|e| e.at(stage))?;
        let names: Vec<String> = outputs.iter().map(|p| rel(&self.root, p)).collect();
        let hit = self.cache.lookup(record, &key).filter(|r| names.iter().all(|n| r.outputs.contains_key(n)));
        let (cache_hit, rec) = match hit {
            Some(rec) => (true, rec),
            None => {
                work(self).map_err(|e| e.at(stage))?;
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                (false, self.cache.store(record, &key, &refs).map_err(|e| e.at(stage))?)
            }
        };
        let outcome = StageOutcome {
            stage: record.to_string(),
            cache_hit,
            outputs: rec.outputs,
            seconds: start.elapsed().as_secs_f64(),
        };
        self.log.push(outcome.clone());
        Ok(outcome)
    }

    /// Synthetic source, target, ground truth, landmarks and the generating
    /// relations, written into `dir`.
    pub fn gen(&mut self, dir: &Path) -> Result<StageOutcome, PipelineError> {
        let spec = self
            .cfg
            .synthetic
            .clone()
            .ok_or_else(|| PipelineError::Config("gen needs a `synthetic` spec".into()))?;
        spec.validate()?;
        let seed = self.cfg.seed;
        let paths = GenPaths::new(dir);
        let mut outputs = vec![paths.source.as_path(), &paths.target, &paths.ground_truth, &paths.relations];
        if spec.rotation.is_some() {
            outputs.push(&paths.landmarks);
        }
        self.cached("gen", "gen", &(&spec, seed), &[], &outputs, |s| {
            let syn = gen_synthetic(&spec, seed)?;
            save_mesh(&syn.source, &paths.source)?;
            save_mesh(&syn.target, &paths.target)?;
            save_mesh(&syn.ground_truth, &paths.ground_truth)?;
            write_json(&paths.relations, &s.artifact(RelationSet { relations: syn.relations }))?;
            if let Some(l) = &syn.landmarks {
                write_json(&paths.landmarks, l)?;
            }
            Ok(())
        })
    }

    /// Conformal sphere map of `input`. With `align`, the result is rotated
    /// onto the already mapped source using the landmark file.
    pub fn map(
        &mut self,
        input: &Path,
        output: &Path,
        trace: &Path,
        align: Option<(&Path, &Path)>,
    ) -> Result<StageOutcome, PipelineError> {
        let record = format!("map-{}", stem(output));
        let mut inputs = vec![input];
        if let Some((src, lm)) = align {
            inputs.extend([src, lm]);
        }
        let params = self.cfg.conformal;
        self.cached("map", &record, &params, &inputs, &[output, trace], |s| {
            let mesh: Mesh<f64> = load_mesh(input)?;
            let mut sm = conformal_map_to_sphere(&mesh, &params)?;
            if let Some((src, lm)) = align {
                let src = load_spherical(src)?;
                let landmarks = LandmarkSet::load(lm)?;
                align_spheres(&src, &mut sm, &landmarks)?;
            }
            save_mesh(&sm.inverse_map(), output)?;
            write_json(trace, &s.artifact(sm.trace()))
        })
    }

    /// Material measurements and curvature.
    pub fn extract(&mut self, input: &Path, output: &Path) -> Result<StageOutcome, PipelineError> {
        let record = format!("extract-{}", stem(output));
        self.cached("extract", &record, &(), &[input], &[output], |_| {
            let mut mesh: Mesh<f64> = read_mesh(input)?;
            extract_channels(&mut mesh)?;
            save_mesh(&mesh, output)
        })
    }

    /// Prefiltered concentration, patch labels and the patch manifest.
    pub fn segment(&mut self, input: &Path, output: &Path, manifest: &Path) -> Result<StageOutcome, PipelineError> {
        let record = format!("segment-{}", stem(output));
        let params = (self.cfg.filter, self.cfg.segment);
        self.cached("segment", &record, &params, &[input], &[output, manifest], |s| {
            let mut mesh: Mesh<f64> = read_mesh(input)?;
            let (set, _) = segment_mesh(&mut mesh, &params.0, &params.1)?;
            save_mesh(&mesh, output)?;
            write_json(manifest, &s.artifact(set.manifest()))
        })
    }

    /// Spherical-harmonic PDFs of every patch.
    pub fn fit(&mut self, mesh: &Path, manifest: &Path, role: Role, output: &Path) -> Result<StageOutcome, PipelineError> {
        let record = format!("fit-{}", stem(output));
        let opts = self.cfg.fit_options();
        let params = (opts, self.cfg.fit_mask, role);
        self.cached("fit", &record, &params, &[mesh, manifest], &[output], |s| {
            let sm = load_spherical(mesh)?;
            let set = load_patches(&sm, manifest)?;
            let patches = PatchFitter::new(&sm, opts)?.fit_all(&set, params.1, role.properties())?;
            write_json(
                output,
                &s.artifact(PdfSet {
                    role,
                    order: opts.order,
                    patches,
                }),
            )
        })
    }

    /// Target-to-source patch assignment.
    pub fn matching(&mut self, source: &Side, target: &Side, output: &Path) -> Result<StageOutcome, PipelineError> {
        let params = (self.cfg.weights(), self.cfg.normalization);
        let inputs = [
            source.mesh.as_path(),
            &source.manifest,
            &source.pdfs,
            &target.mesh,
            &target.manifest,
            &target.pdfs,
        ];
        self.cached("match", "match", &params, &inputs, &[output], |s| {
            let sd = source.describe()?;
            let td = target.describe()?;
            let a = match_patches(&sd, &td, &params.0, params.1)?;
            write_json(output, &s.artifact(a))
        })
    }

    /// Reconstructed appearance on the target and its blended colours.
    pub fn transfer(
        &mut self,
        source_pdfs: &Path,
        target: &Side,
        assignment: &Path,
        output: &Path,
        reconstructions: &Path,
    ) -> Result<StageOutcome, PipelineError> {
        let params = self.cfg.assign;
        let inputs = [source_pdfs, &target.mesh, &target.manifest, &target.pdfs, assignment];
        self.cached("transfer", "transfer", &params, &inputs, &[output, reconstructions], |s| {
            let src: Artifact<PdfSet> = read_json(source_pdfs)?;
            let tar: Artifact<PdfSet> = read_json(&target.pdfs)?;
            let a: Artifact<Assignment> = read_json(assignment)?;
            let sm = load_spherical(&target.mesh)?;
            let set = load_patches(&sm, &target.manifest)?;
            let recon = reconstruct_all(&src.body.patches, &tar.body.patches, &a.body, &params)?;
            let (result, blend) = blend_and_compose(&sm, &set, &recon, params.blend_sigma)?;
            save_mesh(&result, output)?;
            write_json(reconstructions, &s.artifact(Reconstructions { blend, patches: recon }))
        })
    }

    /// Hue and saturation accuracy against a ground-truth mesh.
    pub fn eval(&mut self, result: &Path, ground_truth: &Path, output: &Path) -> Result<StageOutcome, PipelineError> {
        self.cached("eval", "eval", &(), &[result, ground_truth], &[output], |s| {
            let r: Mesh<f64> = read_mesh(result)?;
            let gt: Mesh<f64> = read_mesh(ground_truth)?;
            let mut report = evaluate(&r, &gt)?;
            report.provenance = Some(s.provenance.clone());
            write_json(output, &report)
        })
    }

    /// False-colour meshes of the result channels and PNG plots of the
    /// energy traces, match costs and per-vertex errors found in `dir`.
    pub fn render(&mut self, dir: &Path, plots: &Path) -> Result<StageOutcome, PipelineError> {
        let paths = RunPaths::new(dir);
        let inputs: Vec<&Path> = [
            paths.result.as_path(),
            &paths.source.trace,
            &paths.target.trace,
            &paths.assignment,
        ]
        .into_iter()
        .filter(|p| p.exists())
        .collect();
        let channels = [
            channel::HUE,
            channel::SATURATION,
            channel::FINAL_RGB,
            channel::PATCH_ID,
            channel::CURVATURE,
        ];
        let mut outputs: Vec<PathBuf> = Vec::new();
        if paths.result.exists() {
            outputs.extend(channels.iter().map(|c| plots.join(format!("{c}.ply"))));
        }
        for side in [&paths.source, &paths.target] {
            if side.trace.exists() {
                outputs.push(plots.join(format!("energy_{}.png", stem(&side.sphere))));
            }
        }
        if paths.assignment.exists() {
            outputs.push(plots.join("costs.png"));
        }
        if paths.result.exists() && paths.ground_truth.exists() {
            outputs.push(plots.join("error_hist.png"));
        }
        if outputs.is_empty() {
            return Err(PipelineError::Config(format!("nothing to render in {}", dir.display())).at("render"));
        }
        let mut ins = inputs.clone();
        if paths.ground_truth.exists() {
            ins.push(&paths.ground_truth);
        }
        let out_refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
        self.cached("render", "render", &(), &ins, &out_refs, |_| {
            if paths.result.exists() {
                let r: Mesh<f64> = read_mesh(&paths.result)?;
                for c in channels {
                    save_mesh(&false_colour(&r, c)?, &plots.join(format!("{c}.ply")))?;
                }
                if paths.ground_truth.exists() {
                    let gt: Mesh<f64> = read_mesh(&paths.ground_truth)?;
                    let errs = per_vertex_hue_error(&r, &gt)?;
                    plot_histogram(&errs, 0.0, 0.5, 50, &plots.join("error_hist.png"))?;
                }
            }
            for side in [&paths.source, &paths.target] {
                if side.trace.exists() {
                    let t: Artifact<EnergyTrace> = read_json(&side.trace)?;
                    plot_series(&t.body.energy, &plots.join(format!("energy_{}.png", stem(&side.sphere))))?;
                }
            }
            if paths.assignment.exists() {
                let a: Artifact<Assignment> = read_json(&paths.assignment)?;
                let mut rows: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
                for e in &a.body.candidates {
                    rows.entry(e.tar_id).or_default().push(e.total);
                }
                let rows: Vec<Vec<f64>> = rows.into_values().collect();
                plot_matrix(&rows, &plots.join("costs.png"))?;
            }
            Ok(())
        })
    }
}

fn per_vertex_hue_error(r: &Mesh<f64>, gt: &Mesh<f64>) -> Result<Vec<f64>, PipelineError> {
    if r.vertex_count() != gt.vertex_count() {
        return Err(PipelineError::VertexCount {
            reconstructed: r.vertex_count(),
            ground_truth: gt.vertex_count(),
        });
    }
    let a = r.scalar(channel::HUE)?;
    let b = gt.scalar(channel::HUE)?;
    Ok(a.iter().zip(b).map(|(&x, &y)| crate::material::hue_distance(x, y)).collect())
}

fn stem(p: &Path) -> String {
    let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.split('.').next().unwrap_or_default().to_string()
}

/// Segmented mesh, manifest and PDFs of one side.
#[derive(Debug, Clone)]
pub struct Side {
    pub mesh: PathBuf,
    pub manifest: PathBuf,
    pub pdfs: PathBuf,
}

impl Side {
    fn describe(&self) -> Result<Vec<crate::transfer::PatchDescriptor<f64>>, PipelineError> {
        let sm = load_spherical(&self.mesh)?;
        let set = load_patches(&sm, &self.manifest)?;
        let pdfs: Artifact<PdfSet> = read_json(&self.pdfs)?;
        Ok(describe_patches(sm.base(), &set, &pdfs.body.patches)?)
    }
}

/// Output layout of `gen`.
#[derive(Debug, Clone)]
pub struct GenPaths {
    pub source: PathBuf,
    pub target: PathBuf,
    pub ground_truth: PathBuf,
    pub landmarks: PathBuf,
    pub relations: PathBuf,
}

impl GenPaths {
    pub fn new(dir: &Path) -> Self {
        GenPaths {
            source: dir.join("source.ply"),
            target: dir.join("target.ply"),
            ground_truth: dir.join("ground_truth.ply"),
            landmarks: dir.join("landmarks.json"),
            relations: dir.join("relations.json"),
        }
    }
}

/// Intermediate files of one side in a full run.
#[derive(Debug, Clone)]
pub struct SidePaths {
    pub sphere: PathBuf,
    pub trace: PathBuf,
    pub extracted: PathBuf,
    pub segmented: PathBuf,
    pub patches: PathBuf,
    pub pdfs: PathBuf,
}

impl SidePaths {
    fn new(dir: &Path, name: &str) -> Self {
        SidePaths {
            sphere: dir.join(format!("{name}.sphere.ply")),
            trace: dir.join(format!("{name}.trace.json")),
            extracted: dir.join(format!("{name}.extract.ply")),
            segmented: dir.join(format!("{name}.segment.ply")),
            patches: dir.join(format!("{name}.patches.json")),
            pdfs: dir.join(format!("{name}.pdfs.json")),
        }
    }

    pub fn side(&self) -> Side {
        Side {
            mesh: self.segmented.clone(),
            manifest: self.patches.clone(),
            pdfs: self.pdfs.clone(),
        }
    }
}

/// File layout of a full run under one output directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub gen: GenPaths,
    pub source: SidePaths,
    pub target: SidePaths,
    pub assignment: PathBuf,
    pub result: PathBuf,
    pub reconstructions: PathBuf,
    pub ground_truth: PathBuf,
    pub report: PathBuf,
    pub plots: PathBuf,
}

impl RunPaths {
    pub fn new(dir: &Path) -> Self {
        let gen = GenPaths::new(dir);
        RunPaths {
            ground_truth: gen.ground_truth.clone(),
            gen,
            source: SidePaths::new(dir, "source"),
            target: SidePaths::new(dir, "target"),
            assignment: dir.join("assignment.json"),
            result: dir.join("result.ply"),
            reconstructions: dir.join("reconstructions.json"),
            report: dir.join("report.json"),
            plots: dir.join("plots"),
        }
    }
}

/// What `run_all` did and where its results are.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub paths: RunPaths,
    pub stages: Vec<StageOutcome>,
    pub report: Option<EvalReport>,
}

/// Every stage in order, generating synthetic inputs when the config has
/// no source and target meshes. Outputs go to `cfg.out_dir`.
pub fn run_all(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let out = cfg.out_dir.clone();
    let paths = RunPaths::new(&out);
    let mut st = Stages::new(cfg.clone(), &out);

    let (source, target, mut ground_truth, mut landmarks) = match (&cfg.source, &cfg.target) {
        (Some(s), Some(t)) => (s.clone(), t.clone(), cfg.ground_truth.clone(), cfg.landmarks.clone()),
        _ => {
            st.gen(&out)?;
            let spec = cfg.synthetic.as_ref().expect("validated");
            let lm = spec.rotation.map(|_| paths.gen.landmarks.clone());
            (paths.gen.source.clone(), paths.gen.target.clone(), Some(paths.gen.ground_truth.clone()), lm)
        }
    };
    if cfg.landmarks.is_some() {
        landmarks = cfg.landmarks.clone();
    }
    if cfg.ground_truth.is_some() {
        ground_truth = cfg.ground_truth.clone();
    }

    let (s, t) = (&paths.source, &paths.target);
    st.map(&source, &s.sphere, &s.trace, None)?;
    let align = landmarks.as_deref().map(|l| (s.sphere.as_path(), l));
    st.map(&target, &t.sphere, &t.trace, align)?;
    for side in [s, t] {
        st.extract(&side.sphere, &side.extracted)?;
        st.segment(&side.extracted, &side.segmented, &side.patches)?;
    }
    st.fit(&s.segmented, &s.patches, Role::Source, &s.pdfs)?;
    st.fit(&t.segmented, &t.patches, Role::Target, &t.pdfs)?;
    st.matching(&s.side(), &t.side(), &paths.assignment)?;
    st.transfer(&s.pdfs, &t.side(), &paths.assignment, &paths.result, &paths.reconstructions)?;

    let report = match &ground_truth {
        Some(gt) => {
            st.eval(&paths.result, gt, &paths.report)?;
            Some(read_json(&paths.report)?)
        }
        None => None,
    };
    Ok(RunSummary {
        paths,
        stages: st.log,
        report,
    })
}

/// Content hash of every file a run produced, keyed by path relative to
/// the output directory. Cache records are excluded.
pub fn output_hashes(summary: &RunSummary, out: &Path) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut all = BTreeMap::new();
    for s in &summary.stages {
        for name in s.outputs.keys() {
            let p = out.join(name);
            all.insert(name.clone(), hash_file(if p.exists() { &p } else { Path::new(name) })?);
        }
    }
    Ok(all)
}
