use patina::mesh::{channel, Mesh};
use patina::patch::{segment_faces, FilterOptions, FitMask, PatchSet, SegmentOptions};
use patina::pipeline::{gen_synthetic, SyntheticSpec, REGION};
use patina::transfer::{extract_channels, segment_mesh};
use proptest::prelude::*;

fn segmented(spec: &SyntheticSpec, seed: u64) -> (Mesh<f64>, PatchSet) {
    let g = gen_synthetic(spec, seed).unwrap();
    let mut m = g.source;
    extract_channels(&mut m).unwrap();
    let (set, _) = segment_mesh(&mut m, &FilterOptions::default(), &SegmentOptions::default()).unwrap();
    (m, set)
}

/// Fraction of a patch's vertices that carry its most common region label.
fn purity(m: &Mesh<f64>, set: &PatchSet) -> f64 {
    let regions = m.label(REGION).unwrap();
    let mut worst: f64 = 1.0;
    for p in &set.patches {
        let mut counts = std::collections::BTreeMap::<i32, usize>::new();
        let mut total = 0;
        for (v, &l) in set.vertex_labels.iter().enumerate() {
            if l == p.id {
                *counts.entry(regions[v]).or_default() += 1;
                total += 1;
            }
        }
        let best = counts.values().copied().max().unwrap_or(0);
        worst = worst.min(best as f64 / total.max(1) as f64);
    }
    worst
}

#[test]
fn spot_count_is_recovered_for_seeds_1_to_20() {
    let mut failures = Vec::new();
    for contrast in [0.5, 0.7, 1.0] {
        let spec = SyntheticSpec {
            contrast,
            ..SyntheticSpec::default()
        };
        for seed in 1..=20 {
            let (m, set) = segmented(&spec, seed);
            if set.patches.len() != spec.spots + 1 {
                failures.push(format!("contrast {contrast} seed {seed}: {} patches", set.patches.len()));
            } else if purity(&m, &set) < 0.95 {
                failures.push(format!("contrast {contrast} seed {seed}: purity {:.3}", purity(&m, &set)));
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn no_spots_gives_background_only() {
    let spec = SyntheticSpec {
        spots: 0,
        subdivision: 4,
        ..SyntheticSpec::default()
    };
    let (_, set) = segmented(&spec, 3);
    assert_eq!(set.patches.len(), 1);
    assert!(set.patches[0].is_background);
}

#[test]
fn coarser_scale_never_adds_patches() {
    let spec = SyntheticSpec {
        subdivision: 4,
        ..SyntheticSpec::default()
    };
    let g = gen_synthetic(&spec, 4).unwrap();
    let mut m = g.source;
    extract_channels(&mut m).unwrap();
    let hem = m.half_edges().unwrap();
    let c = m.scalar(channel::CONCENTRATION).unwrap().to_vec();
    let mut last = usize::MAX;
    for k in [1.0, 10.0, 100.0, 1e3, 1e4, 1e5] {
        let opts = SegmentOptions {
            k: Some(k),
            min_size: 1,
            ..SegmentOptions::default()
        };
        let seg = segment_faces(&m.positions, &m.faces, &hem, &c, &opts);
        assert!(seg.foreground <= last, "k = {k}: {} after {last}", seg.foreground);
        last = seg.foreground;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn patches_partition_the_surface(seed in 1u64..1000, spots in 0usize..5) {
        let spec = SyntheticSpec { subdivision: 3, spots, radius: [0.3, 0.4], ..SyntheticSpec::default() };
        let (m, set) = segmented(&spec, seed);
        let mut seen = vec![0usize; m.face_count()];
        for p in &set.patches {
            for &f in &p.face_ids {
                seen[f] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&n| n == 1));
        let area: f64 = set.patches.iter().map(|p| p.area).sum();
        let total = patina::mesh::total_area(&m.positions, &m.faces);
        prop_assert!((area - total).abs() < 1e-9 * total);

        // A vertex's label is the label of one of its faces.
        let labels = m.label(channel::PATCH_ID).unwrap();
        let hem = m.half_edges().unwrap();
        for v in 0..m.vertex_count() {
            let ok = hem.vertex_faces(v).iter().any(|&f| set.face_labels[f] == labels[v]);
            prop_assert!(ok, "vertex {} label {}", v, labels[v]);
        }

        // Labelled masks are disjoint and cover every vertex.
        let mut cover = vec![0usize; m.vertex_count()];
        for p in &set.patches {
            for (v, on) in set.fit_mask(p.id, FitMask::Labelled, &m.faces).into_iter().enumerate() {
                cover[v] += on as usize;
            }
        }
        prop_assert!(cover.iter().all(|&n| n == 1));
    }
}
