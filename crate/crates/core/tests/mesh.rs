use patina::mesh::io::{load_mesh, write_ply, PlyFormat};
use patina::mesh::{normal_curvatures, patch_area, primitives, total_area, MeshError};

fn max_curvature_error(level: u32) -> f64 {
    let m = primitives::icosphere::<f64>(level);
    let hem = m.half_edges().unwrap();
    normal_curvatures(&m.positions, &m.faces, &hem)
        .unwrap()
        .iter()
        .map(|k| (k - 1.0).abs())
        .fold(0.0, f64::max)
}

// Normal tilt at irregular vertices is O(h^2) and the estimator divides by
// |d|^2, so the error is a fixed bias rather than vanishing with refinement.
#[test]
fn sphere_curvature_stays_near_one_under_subdivision() {
    let errors: Vec<f64> = (2..=5).map(max_curvature_error).collect();
    assert!(errors.iter().all(|&e| e < 5e-3), "{errors:?}");
}

#[test]
fn plane_has_zero_curvature() {
    let m = primitives::plane_grid::<f64>(6, 6, 0.5);
    let hem = m.half_edges().unwrap();
    let k = normal_curvatures(&m.positions, &m.faces, &hem).unwrap();
    // Interior vertex with a full one-ring.
    assert!(k[3 * 7 + 3].abs() < 1e-10);
}

#[test]
fn cylinder_curvature_between_principal_values() {
    let m = primitives::cylinder::<f64>(2.0, 4.0, 48, 24);
    let hem = m.half_edges().unwrap();
    let k = normal_curvatures(&m.positions, &m.faces, &hem).unwrap();
    let v = 12 * 48 + 5;
    // Normals point outward here, so the estimator is positive.
    assert!(k[v] > 0.0 && k[v] < 0.5, "{}", k[v]);
}

#[test]
fn icosphere_area_is_close_to_four_pi() {
    let m = primitives::icosphere::<f64>(4);
    let a = total_area(&m.positions, &m.faces);
    assert!((a - 4.0 * std::f64::consts::PI).abs() < 0.01 * 4.0 * std::f64::consts::PI);
}

#[test]
fn patch_areas_partition_total() {
    let m = primitives::egg::<f64>(3, 1.0, 1.3, 0.2);
    let total = total_area(&m.positions, &m.faces);
    let parts: f64 = (0..7)
        .map(|r| patch_area(&m.positions, &m.faces, (0..m.face_count()).filter(|f| f % 7 == r)))
        .sum();
    assert!((parts - total).abs() < 1e-9 * total);
}

#[test]
fn load_accepts_icosphere_and_rejects_disk() {
    let dir = tempfile::tempdir().unwrap();
    let sphere = primitives::icosphere::<f64>(1);
    let p = dir.path().join("sphere.ply");
    write_ply(&sphere, &p, PlyFormat::BinaryLittleEndian).unwrap();
    let m = load_mesh::<f64>(&p).unwrap();
    assert_eq!(m.vertex_count(), 42);
    assert_eq!(m.topology().euler_characteristic(), 2);

    let disk = primitives::unit_disk::<f64>(3);
    let p = dir.path().join("disk.ply");
    write_ply(&disk, &p, PlyFormat::Ascii).unwrap();
    assert!(matches!(load_mesh::<f64>(&p), Err(MeshError::NotGenusZero(_))));
}

#[test]
fn short_attribute_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.ply");
    let mut text = String::from("ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nproperty float hue\nelement face 4\nproperty list uchar int vertex_indices\nend_header\n");
    for v in ["1 1 1 0.1", "1 -1 -1 0.2", "-1 1 -1 0.3", "-1 -1 1"] {
        text.push_str(v);
        text.push('\n');
    }
    text.push_str("3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n");
    std::fs::write(&p, text).unwrap();
    assert!(load_mesh::<f64>(&p).is_err());
}
