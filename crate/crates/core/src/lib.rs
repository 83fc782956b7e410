//! Material-driven appearance transfer between genus-zero meshes.

pub mod harmonics;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod patch;
pub mod pipeline;
pub mod scalar;
pub mod spheremap;
pub mod transfer;
pub mod vec3;

pub use scalar::Scalar;
pub use vec3::Vec3;

pub type Mesh64 = mesh::Mesh<f64>;
pub type Mesh32 = mesh::Mesh<f32>;
pub type SphericalMesh64 = spheremap::SphericalMesh<f64>;
pub type SphericalMesh32 = spheremap::SphericalMesh<f32>;
pub type Pdf64 = harmonics::Pdf<f64>;
pub type Pdf32 = harmonics::Pdf<f32>;
pub type Pdm64 = transfer::Pdm<f64>;
pub type Pdm32 = transfer::Pdm<f32>;
pub type PatchPdfs64 = patch::PatchPdfs<f64>;
