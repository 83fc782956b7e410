//! Property distribution maps, patch matching and the reconstruction of a
//! source appearance on a target surface.

mod assign;
mod blend;
mod matching;
mod pdm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harmonics::{FitOptions, Pdf, Property, ShError};
use crate::mesh::{channel, normal_curvatures, Mesh, MeshError};
use crate::patch::{prefilter, FilterOptions, FitMask, PatchError, PatchFitter, PatchPdfs, PatchSet, SegmentOptions, Segmentation};
use crate::scalar::Scalar;
use crate::spheremap::{align_spheres, conformal_map_to_sphere, ConformalOptions, LandmarkSet, SpheremapError, SphericalMesh};

pub use assign::{frequency_weight, hue_transform, raw_frequency_weight, saturation_transform, AssignParams};
pub use blend::{blend_and_compose, blend_hue, eval_normalized, mean_arc_length, partner_weight, BlendStats, SUPPORT_FLOOR};
pub use matching::{
    area_cost, describe_patches, match_patches, shape_cost, Assignment, CostNormalization, Costs, MatchEntry, MatchWeights,
    PatchDescriptor,
};
pub use pdm::{apply_pdm, band_map, compute_material_map, compute_pdm, householder_rotation, pdm_cost, BandMap, Pdm, ZERO_BAND};

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("malformed PDM: {0}")]
    Malformed(String),
    #[error("orders differ ({0} vs {1})")]
    OrderMismatch(usize, usize),
    #[error("property mismatch ({0:?} vs {1:?})")]
    PropertyMismatch(Property, Property),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("patch {0} has no {1:?} distribution")]
    MissingPdf(i32, Property),
    #[error("no reconstruction for target patch {0}")]
    MissingReconstruction(i32),
    #[error("target patch {0} has no assigned source")]
    Unassigned(i32),
    #[error("nothing to match: {sources} source and {targets} target foreground patches")]
    EmptyForeground { sources: usize, targets: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sh(#[from] ShError),
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Spheremap(#[from] SpheremapError),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<TransferError>,
    },
}

impl TransferError {
    pub fn stage(self, stage: &'static str) -> Self {
        match self {
            e @ TransferError::Stage { .. } => e,
            e => TransferError::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Stage name when the error was annotated.
    pub fn stage_name(&self) -> Option<&'static str> {
        match self {
            TransferError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

trait StageExt<T> {
    fn at(self, stage: &'static str) -> Result<T, TransferError>;
}

impl<T, E: Into<TransferError>> StageExt<T> for Result<T, E> {
    fn at(self, stage: &'static str) -> Result<T, TransferError> {
        self.map_err(|e| e.into().stage(stage))
    }
}

/// Adds the material channels and mean curvature to a mesh with a
/// `bispectral_rgb` channel.
pub fn extract_channels<T: Scalar>(mesh: &mut Mesh<T>) -> Result<(), MeshError> {
    crate::material::extract_measurements(mesh)?;
    let hem = mesh.half_edges()?;
    let k = normal_curvatures(&mesh.positions, &mesh.faces, &hem)?;
    mesh.set_scalar(channel::CURVATURE, k)
}

/// Prefilters concentration, stores it as `filtered_concentration` and
/// segments the result.
pub fn segment_mesh<T: Scalar>(
    mesh: &mut Mesh<T>,
    filter: &FilterOptions,
    seg: &SegmentOptions,
) -> Result<(PatchSet, Segmentation), PatchError> {
    let hem = mesh.half_edges()?;
    let filtered = prefilter(&mesh.positions, &hem, mesh.scalar(channel::CONCENTRATION)?, filter);
    let out = crate::patch::segment(mesh, &hem, &filtered, seg)?;
    mesh.set_scalar(channel::FILTERED, filtered)?;
    out.0.label_mesh(mesh)?;
    Ok(out)
}

/// Reconstructed appearance distributions for one target patch. `hue` is
/// stored in the rotated frame of the source patch; add
/// `hue_center - 0.5` after evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PatchReconstruction<T> {
    pub tar_id: i32,
    pub src_id: i32,
    pub hue: Pdf<T>,
    pub saturation: Pdf<T>,
    pub support: Pdf<T>,
    pub hue_center: f64,
}

fn need<T: Scalar>(p: &PatchPdfs<T>, prop: Property) -> Result<&Pdf<T>, TransferError> {
    p.get(prop).ok_or(TransferError::MissingPdf(p.id, prop))
}

/// Maps the source patch's saturation and hue onto the target patch
/// through the material maps of both.
pub fn reconstruct_patch<T: Scalar>(
    src: &PatchPdfs<T>,
    tar: &PatchPdfs<T>,
    params: &AssignParams,
) -> Result<PatchReconstruction<T>, TransferError> {
    params.validate()?;
    let q_c = compute_pdm(need(src, Property::Concentration)?, need(tar, Property::Concentration)?)?;
    let q_m = compute_pdm(need(src, Property::Composition)?, need(tar, Property::Composition)?)?;
    let mm_cs = compute_material_map(need(src, Property::Concentration)?, need(src, Property::Saturation)?)?;
    let mm_mh = compute_material_map(need(src, Property::Composition)?, need(src, Property::Hue)?)?;
    let t_s = saturation_transform(&mm_cs, &q_c, params)?;
    let t_h = hue_transform(&mm_mh, &q_m, params.mu_h)?;
    Ok(PatchReconstruction {
        tar_id: tar.id,
        src_id: src.id,
        saturation: apply_pdm(&t_s, need(src, Property::Saturation)?)?,
        hue: apply_pdm(&t_h, need(src, Property::Hue)?)?,
        support: need(tar, Property::Support)?.clone(),
        hue_center: src.hue_center.unwrap_or(0.5),
    })
}

/// Reconstructs every target patch from its assigned source.
pub fn reconstruct_all<T: Scalar>(
    src: &[PatchPdfs<T>],
    tar: &[PatchPdfs<T>],
    assignment: &Assignment,
    params: &AssignParams,
) -> Result<Vec<PatchReconstruction<T>>, TransferError> {
    tar.iter()
        .map(|t| {
            let s_id = assignment.source_for(t.id).ok_or(TransferError::Unassigned(t.id))?;
            let s = src.iter().find(|p| p.id == s_id).ok_or(TransferError::Unassigned(t.id))?;
            reconstruct_patch(s, t, params)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferOptions {
    pub conformal: ConformalOptions,
    pub filter: FilterOptions,
    pub segment: SegmentOptions,
    pub fit: FitOptions,
    pub mask: FitMask,
    pub weights: MatchWeights,
    pub normalization: CostNormalization,
    pub assign: AssignParams,
}

/// Everything produced on the way from the two inputs to the result.
#[derive(Debug, Clone)]
pub struct TransferOutput<T> {
    pub source: SphericalMesh<T>,
    pub target: SphericalMesh<T>,
    pub source_patches: PatchSet,
    pub target_patches: PatchSet,
    pub source_pdfs: Vec<PatchPdfs<T>>,
    pub target_pdfs: Vec<PatchPdfs<T>>,
    pub assignment: Assignment,
    pub reconstructions: Vec<PatchReconstruction<T>>,
    pub blend: BlendStats,
    pub result: Mesh<T>,
}

/// Runs the whole chain on two meshes. The source must carry `hue` and
/// `saturation` in addition to `bispectral_rgb`; the target only needs
/// `bispectral_rgb`. Errors are annotated with the failing stage.
pub fn style_transfer<T: Scalar>(
    source: &Mesh<T>,
    target: &Mesh<T>,
    landmarks: Option<&LandmarkSet>,
    opts: &TransferOptions,
) -> Result<TransferOutput<T>, TransferError> {
    opts.assign.validate().at("config")?;
    let src_sm = conformal_map_to_sphere(source, &opts.conformal).at("map source")?;
    let mut tar_sm = conformal_map_to_sphere(target, &opts.conformal).at("map target")?;
    if let Some(l) = landmarks {
        align_spheres(&src_sm, &mut tar_sm, l).at("align")?;
    }
    let mut src_sm = src_sm;
    extract_channels(src_sm.base_mut()).at("extract source")?;
    extract_channels(tar_sm.base_mut()).at("extract target")?;
    let (src_set, _) = segment_mesh(src_sm.base_mut(), &opts.filter, &opts.segment).at("segment source")?;
    let (tar_set, _) = segment_mesh(tar_sm.base_mut(), &opts.filter, &opts.segment).at("segment target")?;

    let src_pdfs = PatchFitter::new(&src_sm, opts.fit)
        .and_then(|f| f.fit_all(&src_set, opts.mask, &Property::SOURCE))
        .at("fit source")?;
    let tar_pdfs = PatchFitter::new(&tar_sm, opts.fit)
        .and_then(|f| f.fit_all(&tar_set, opts.mask, &Property::MATERIAL))
        .at("fit target")?;

    let sd = describe_patches(src_sm.base(), &src_set, &src_pdfs).at("match")?;
    let td = describe_patches(tar_sm.base(), &tar_set, &tar_pdfs).at("match")?;
    let assignment = match_patches(&sd, &td, &opts.weights, opts.normalization).at("match")?;
    let reconstructions = reconstruct_all(&src_pdfs, &tar_pdfs, &assignment, &opts.assign).at("transfer")?;
    let (result, blend) = blend_and_compose(&tar_sm, &tar_set, &reconstructions, opts.assign.blend_sigma).at("render")?;
    Ok(TransferOutput {
        source: src_sm,
        target: tar_sm,
        source_patches: src_set,
        target_patches: tar_set,
        source_pdfs: src_pdfs,
        target_pdfs: tar_pdfs,
        assignment,
        reconstructions,
        blend,
        result,
    })
}
