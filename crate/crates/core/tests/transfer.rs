use patina::harmonics::{Pdf, Property};
use patina::linalg::Matrix;
use patina::patch::{PatchFitter, FitMask};
use patina::pipeline::{gen_synthetic, SyntheticSpec};
use patina::spheremap::{conformal_map_to_sphere, ConformalOptions};
use patina::transfer::{
    apply_pdm, band_map, compute_pdm, describe_patches, extract_channels, hue_transform, match_patches, pdm_cost,
    saturation_transform, segment_mesh, AssignParams, CostNormalization, MatchWeights, Pdm, TransferOptions,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random PDF with a positive mean, as for any non-negative field.
fn random_pdf(rng: &mut ChaCha8Rng, order: usize) -> Pdf<f64> {
    let n = (order + 1) * (order + 1);
    let mut c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    c[0] = rng.random_range(0.1..2.0);
    Pdf::from_flat(Property::Concentration, order, &c).unwrap()
}

#[test]
fn pdm_identities_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_map, mut worst_orth, mut worst_det, mut worst_scale) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let order = rng.random_range(1..=16);
        let src = random_pdf(&mut rng, order);
        let tar = random_pdf(&mut rng, order);
        for i in 0..=order {
            let m = band_map(src.band(i), tar.band(i));
            assert!(!m.excluded);
            let mapped = m.matrix.mul_vec(src.band(i));
            for (a, b) in mapped.iter().zip(tar.band(i)) {
                worst_map = worst_map.max((a - b).abs());
            }
            worst_orth = worst_orth.max(m.rotation.orthogonality_error());
            worst_det = worst_det.max((m.rotation.determinant() - 1.0).abs());
            let want = (m.l_tar / m.l_src).powi(2 * i as i32 + 1);
            worst_scale = worst_scale.max(((m.matrix.determinant() - want) / want).abs());
        }
    }
    assert!(worst_map < 1e-9, "T Π_src vs Π_tar: {worst_map:e}");
    assert!(worst_orth < 1e-9, "RᵀR - I: {worst_orth:e}");
    assert!(worst_det < 1e-7, "det R - 1: {worst_det:e}");
    assert!(worst_scale < 1e-7, "det T relative: {worst_scale:e}");
}

#[test]
fn applying_a_pdm_reproduces_the_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let src = random_pdf(&mut rng, 8);
    let tar = random_pdf(&mut rng, 8);
    let q = compute_pdm(&src, &tar).unwrap();
    let out = apply_pdm(&q, &src).unwrap();
    assert!(out.max_abs_diff(&tar) < 1e-12);
}

#[test]
fn two_dimensional_band_example_costs_three() {
    let mut r90 = Matrix::zeros(2, 2);
    r90[(0, 1)] = -2.0;
    r90[(1, 0)] = 2.0;
    let q = Pdm {
        from: Property::Concentration,
        to: Property::Concentration,
        bands: vec![r90],
        excluded: vec![],
    };
    assert_eq!(pdm_cost(&q), 3.0);
}

#[test]
fn neutral_assignment_collapses_to_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mat = random_pdf(&mut rng, 16);
    let app = random_pdf(&mut rng, 16).with_property(Property::Saturation);
    let mm = patina::transfer::compute_material_map(&mat, &app).unwrap();
    let q = Pdm::identity(Property::Concentration, 16);
    let s = saturation_transform(&mm, &q, &AssignParams::default()).unwrap();
    let h = hue_transform(&mm, &q, 1.0).unwrap();
    assert!(s.identity_deviation() < 1e-9, "{:e}", s.identity_deviation());
    assert!(h.identity_deviation() < 1e-9, "{:e}", h.identity_deviation());
}

#[test]
fn self_match_is_identity_on_fixtures() {
    for seed in [1, 2, 3] {
        let spec = SyntheticSpec {
            subdivision: 4,
            ..SyntheticSpec::default()
        };
        let g = gen_synthetic(&spec, seed).unwrap();
        let opts = TransferOptions {
            fit: patina::harmonics::FitOptions {
                order: 8,
                ..Default::default()
            },
            ..TransferOptions::default()
        };
        let mut sm = conformal_map_to_sphere(&g.source, &ConformalOptions::default()).unwrap();
        extract_channels(sm.base_mut()).unwrap();
        let (set, _) = segment_mesh(sm.base_mut(), &opts.filter, &opts.segment).unwrap();
        let pdfs = PatchFitter::new(&sm, opts.fit)
            .unwrap()
            .fit_all(&set, FitMask::Labelled, &Property::MATERIAL)
            .unwrap();
        for p in &pdfs {
            for pdf in p.pdfs.values() {
                assert_eq!(pdm_cost(&compute_pdm(pdf, pdf).unwrap()), 0.0);
            }
        }
        let d = describe_patches(sm.base(), &set, &pdfs).unwrap();
        for norm in [CostNormalization::MinMax, CostNormalization::Raw] {
            let a = match_patches(&d, &d, &MatchWeights::default(), norm).unwrap();
            for m in &a.matches {
                assert_eq!(m.tar_id, m.src_id, "seed {seed}");
            }
            assert_eq!(a.matches.len(), set.patches.len());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotations_are_proper_and_orthogonal(seed in any::<u64>(), dim in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        u[0] += 0.1;
        v[0] += 0.1;
        if dim == 1 {
            u[0] = u[0].abs() + 0.1;
            v[0] = v[0].abs() + 0.1;
        }
        let m = band_map(&u, &v);
        prop_assert!(m.rotation.orthogonality_error() < 1e-10);
        prop_assert!((m.rotation.determinant() - 1.0).abs() < 1e-10);
        let mapped = m.matrix.mul_vec(&u);
        for (a, b) in mapped.iter().zip(&v) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_pdm_maps_back(seed in any::<u64>(), order in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_pdf(&mut rng, order);
        let tar = random_pdf(&mut rng, order);
        let q = compute_pdm(&src, &tar).unwrap();
        let back = apply_pdm(&q.inverse().unwrap(), &tar).unwrap();
        prop_assert!(back.max_abs_diff(&src) < 1e-9);
    }

    #[test]
    fn cost_of_uniform_scale(s in 0.2f64..3.0, order in 0usize..6) {
        let q = Pdm::<f64>::uniform_scale(Property::Composition, order, s);
        let want: f64 = (0..=order).map(|i| (1.0 - s.powi(2 * i as i32 + 1)).abs()).sum();
        prop_assert!((pdm_cost(&q) - want).abs() < 1e-9 * want.max(1.0));
    }
}
