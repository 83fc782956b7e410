//! One line per acceptance criterion, each checked at its stated tolerance.
//! Run with `cargo test --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use patina::harmonics::{coeff_count, sh_basis_all, FitOptions, Pdf, Property, ShFitter};
use patina::linalg::Matrix;
use patina::mesh::{lumped_vertex_areas, primitives, Mesh};
use patina::patch::{FitMask, PatchFitter};
use patina::pipeline::{evaluate, gen_synthetic, run_all, PipelineConfig, SyntheticSpec};
use patina::spheremap::{conformal_map_to_sphere, weighted_centroid, ConformalOptions};
use patina::transfer::{
    band_map, compute_material_map, compute_pdm, describe_patches, extract_channels, hue_transform, match_patches,
    mean_arc_length, pdm_cost, raw_frequency_weight, saturation_transform, segment_mesh, style_transfer,
    AssignParams, CostNormalization, MatchWeights, Pdm, TransferOptions,
};
use patina::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn demo_config() -> PipelineConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo.json");
    PipelineConfig::load(&path).expect("shipped demo config loads")
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vec3<f64> {
    loop {
        let v = Vec3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        if v.norm() > 1e-9 {
            return v.normalized();
        }
    }
}

fn random_pdf(rng: &mut ChaCha8Rng, property: Property, order: usize, positive_mean: bool) -> Pdf<f64> {
    let mut c: Vec<f64> = (0..coeff_count(order)).map(|_| rng.random_range(-1.0..1.0)).collect();
    if positive_mean {
        c[0] = rng.random_range(0.1..2.0);
    }
    Pdf::from_flat(property, order, &c).unwrap()
}

fn identity_transfer() -> Verdict {
    let start = Instant::now();
    let spec = SyntheticSpec::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for seed in [1, 2, 3] {
        let g = gen_synthetic(&spec, seed).unwrap();
        let sm = conformal_map_to_sphere(&g.source, &ConformalOptions::default()).unwrap();
        let arc = mean_arc_length(sm.sphere_positions(), sm.faces());
        let run = |sigma: Option<f64>| {
            let mut opts = TransferOptions::default();
            opts.assign.blend_sigma = sigma;
            let out = style_transfer(&g.source, &g.source, None, &opts).unwrap();
            evaluate(&out.result, &g.source).unwrap()
        };
        // With a vanishing blend radius no vertex is mixed, so the loss is
        // the spherical-harmonic fit residual alone.
        let exact = run(Some(1e-9 * arc));
        let residual = 1.0 - exact.accuracy_hue.min(exact.accuracy_sat);
        let r = run(Some(0.25 * arc));
        let floor = 0.99 - residual;
        pass &= r.accuracy_hue >= floor && r.accuracy_sat >= floor;

        let d = run(None);
        lines.push(format!(
            "seed {seed} (V={}, blend 0.25 edge arcs): hue {:.2}% sat {:.2}% >= {:.2}% (fit residual {residual:.1e}) [default blend radius: {:.2}% / {:.2}%]",
            r.vertex_count,
            100.0 * r.accuracy_hue,
            100.0 * r.accuracy_sat,
            100.0 * floor,
            100.0 * d.accuracy_hue,
            100.0 * d.accuracy_sat
        ));
    }
    let t = start.elapsed();
    pass &= t < Duration::from_secs(120);
    verdict(pass, format!("{}; {:.1}s", lines.join("; "), t.as_secs_f64()))
}

fn generator_oracle() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        out_dir: dir.path().to_path_buf(),
        ..demo_config()
    };
    let start = Instant::now();
    let s = run_all(&cfg).unwrap();
    let t = start.elapsed();
    let r = s.report.unwrap();
    let pass = r.accuracy_hue >= 0.95 && r.accuracy_sat >= 0.95 && t < Duration::from_secs(300);
    verdict(
        pass,
        format!(
            "K={} n={} V={}: hue {:.2}% sat {:.2}% (>= 95%); {:.1}s",
            cfg.synthetic.as_ref().unwrap().spots,
            cfg.order,
            r.vertex_count,
            100.0 * r.accuracy_hue,
            100.0 * r.accuracy_sat,
            t.as_secs_f64()
        ),
    )
}

fn pdm_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut map, mut orth, mut det, mut scale) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let order = rng.random_range(1..=16);
        let src = random_pdf(&mut rng, Property::Concentration, order, true);
        let tar = random_pdf(&mut rng, Property::Concentration, order, true);
        for i in 0..=order {
            let m = band_map(src.band(i), tar.band(i));
            for (a, b) in m.matrix.mul_vec(src.band(i)).iter().zip(tar.band(i)) {
                map = map.max((a - b).abs());
            }
            orth = orth.max(m.rotation.orthogonality_error());
            det = det.max((m.rotation.determinant() - 1.0).abs());
            let want = (m.l_tar / m.l_src).powi(2 * i as i32 + 1);
            scale = scale.max(((m.matrix.determinant() - want) / want).abs());
        }
    }
    verdict(
        map < 1e-9 && orth < 1e-9 && det < 1e-7 && scale < 1e-7,
        format!(
            "1000 pairs: |TΠs-Πt| {map:.1e} (<1e-9), |RᵀR-I| {orth:.1e} (<1e-9), |det R-1| {det:.1e} (<1e-7), det T rel {scale:.1e} (<1e-7)"
        ),
    )
}

fn cost_sanity() -> Verdict {
    let mut self_cost: f64 = 0.0;
    let mut identity = true;
    let mut fixtures = 0;
    for seed in 1..=5 {
        let g = gen_synthetic(&SyntheticSpec::default(), seed).unwrap();
        let opts = TransferOptions::default();
        let mut sm = conformal_map_to_sphere(&g.source, &opts.conformal).unwrap();
        extract_channels(sm.base_mut()).unwrap();
        let (set, _) = segment_mesh(sm.base_mut(), &opts.filter, &opts.segment).unwrap();
        let pdfs = PatchFitter::new(&sm, opts.fit)
            .unwrap()
            .fit_all(&set, FitMask::Labelled, &Property::MATERIAL)
            .unwrap();
        for pdf in pdfs.iter().flat_map(|p| p.pdfs.values()) {
            self_cost = self_cost.max(pdm_cost(&compute_pdm(pdf, pdf).unwrap()));
        }
        let d = describe_patches(sm.base(), &set, &pdfs).unwrap();
        let a = match_patches(&d, &d, &MatchWeights::default(), CostNormalization::MinMax).unwrap();
        identity &= a.matches.iter().all(|m| m.tar_id == m.src_id);
        fixtures += 1;
    }
    let mut t = Matrix::zeros(2, 2);
    t[(0, 1)] = -2.0;
    t[(1, 0)] = 2.0;
    let q = Pdm {
        from: Property::Concentration,
        to: Property::Concentration,
        bands: vec![t],
        excluded: vec![],
    };
    let hand = pdm_cost(&q);
    verdict(
        self_cost == 0.0 && identity && hand == 3.0,
        format!("{fixtures} fixtures: max self cost {self_cost}, self-match identity {identity}, 2-d example {hand}"),
    )
}

fn neutral_collapse() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for order in [1, 4, 16] {
        let mat = random_pdf(&mut rng, Property::Concentration, order, true);
        let app = random_pdf(&mut rng, Property::Saturation, order, true);
        let mm = compute_material_map(&mat, &app).unwrap();
        let q = Pdm::identity(Property::Concentration, order);
        worst = worst.max(saturation_transform(&mm, &q, &AssignParams::default()).unwrap().identity_deviation());
        worst = worst.max(hue_transform(&mm, &q, 1.0).unwrap().identity_deviation());
    }
    verdict(worst < 1e-9, format!("max deviation from identity {worst:.1e} (<1e-9)"))
}

fn sh_suite() -> Verdict {
    let n = 6;
    let k = coeff_count(n);
    let samples = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut gram = vec![0.0; k * k];
    let mut y = vec![0.0; k];
    for _ in 0..samples {
        sh_basis_all(n, random_direction(&mut rng), &mut y);
        for a in 0..k {
            for b in a..k {
                gram[a * k + b] += y[a] * y[b];
            }
        }
    }
    let s = 4.0 * std::f64::consts::PI / samples as f64;
    let mut gram_dev: f64 = 0.0;
    for a in 0..k {
        for b in a..k {
            gram_dev = gram_dev.max((gram[a * k + b] * s - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }

    let m = primitives::icosphere::<f64>(5);
    let w = lumped_vertex_areas(&m.positions, &m.faces);
    let mask = vec![true; m.vertex_count()];
    let truth = random_pdf(&mut rng, Property::Hue, 10, false);
    let values: Vec<f64> = m.positions.iter().map(|&d| truth.eval(d)).collect();
    let opts = FitOptions {
        order: 10,
        regularization: 1e-12,
        ..FitOptions::default()
    };
    let residual = ShFitter::new(&m.positions, w.clone(), opts)
        .unwrap()
        .fit(Property::Hue, &values, &mask)
        .unwrap()
        .residual;

    let fitter = ShFitter::new(&m.positions, w, FitOptions { order: 6, ..FitOptions::default() }).unwrap();
    let truth = random_pdf(&mut rng, Property::Hue, 6, false);
    let axis = random_direction(&mut rng);
    let r = rotation(axis, 1.1);
    let plain: Vec<f64> = m.positions.iter().map(|&d| truth.eval(d)).collect();
    let turned: Vec<f64> = m
        .positions
        .iter()
        .map(|&d| {
            let v = r.mul_vec(&d.0);
            truth.eval(Vec3::new(v[0], v[1], v[2]))
        })
        .collect();
    let a = fitter.fit(Property::Hue, &plain, &mask).unwrap().pdf.band_norms();
    let b = fitter.fit(Property::Hue, &turned, &mask).unwrap().pdf.band_norms();
    let norm_dev = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    verdict(
        gram_dev < 1e-2 && residual < 1e-8 && norm_dev < 1e-6,
        format!(
            "gram bands 0-6 dev {gram_dev:.1e} (<1e-2), round-trip residual {residual:.1e} (<1e-8, ridge 1e-12), band-norm change {norm_dev:.1e} (<1e-6)"
        ),
    )
}

fn rotation(axis: Vec3<f64>, angle: f64) -> Matrix<f64> {
    let (s, c) = angle.sin_cos();
    let (x, y, z) = (axis.x(), axis.y(), axis.z());
    let t = 1.0 - c;
    Matrix::from_rows(&[
        vec![t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        vec![t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        vec![t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ])
}

fn conformal_suite() -> Verdict {
    let opts = ConformalOptions::default();
    let ico = primitives::icosphere::<f64>(4);
    let sm = conformal_map_to_sphere(&ico, &opts).unwrap();
    let fixed = ico
        .positions
        .iter()
        .zip(sm.sphere_positions())
        .map(|(a, b)| a.distance(b))
        .fold(0.0, f64::max);
    let (mut monotone, mut norm, mut centroid) = (true, 0.0f64, 0.0f64);
    let meshes: [Mesh<f64>; 3] = [
        ico,
        primitives::ellipsoid(4, 1.0, 1.0, 2.0),
        primitives::egg(5, 1.0, 1.3, 0.15),
    ];
    for m in &meshes {
        let sm = conformal_map_to_sphere(m, &opts).unwrap();
        monotone &= sm.energy_trace.windows(2).all(|w| w[1] <= w[0]);
        for p in sm.sphere_positions() {
            norm = norm.max((p.norm() - 1.0).abs());
        }
        let areas = lumped_vertex_areas(&m.positions, &m.faces);
        centroid = centroid.max(weighted_centroid(sm.sphere_positions(), &areas).norm());
    }
    verdict(
        fixed < 1e-6 && monotone && norm < 1e-6 && centroid < 1e-4,
        format!(
            "fixed point {fixed:.1e} (<1e-6), monotone traces {monotone}, unit norm {norm:.1e} (<1e-6), centroid {centroid:.1e} (<1e-4)"
        ),
    )
}

fn segmentation_recovery() -> Verdict {
    let mut misses = Vec::new();
    let mut runs = 0;
    for contrast in [0.5, 1.0] {
        let spec = SyntheticSpec {
            contrast,
            ..SyntheticSpec::default()
        };
        for seed in 1..=20 {
            let mut m = gen_synthetic(&spec, seed).unwrap().source;
            extract_channels(&mut m).unwrap();
            let opts = TransferOptions::default();
            let (set, _) = segment_mesh(&mut m, &opts.filter, &opts.segment).unwrap();
            runs += 1;
            if set.patches.len() != spec.spots + 1 {
                misses.push(format!("c{contrast}/s{seed}:{}", set.patches.len()));
            }
        }
    }
    let detail = format!(
        "{}/{runs} runs with exactly K+1 = 6 patches (contrast 0.5 and 1.0, seeds 1-20){}",
        runs - misses.len(),
        if misses.is_empty() { String::new() } else { format!("; misses {misses:?}") }
    );
    verdict(misses.is_empty(), detail)
}

fn presets() -> Verdict {
    let sums: Vec<f64> = MatchWeights::PRESETS
        .iter()
        .map(|p| MatchWeights::preset(p).unwrap().sum())
        .collect();
    let (s0, s150) = (raw_frequency_weight(150, 1.0, 0), raw_frequency_weight(150, 1.0, 150));
    verdict(
        sums.iter().all(|s| (s - 1.0).abs() < 1e-12) && s0 == 151.0 && s150 == 301.0,
        format!("preset sums {sums:?}, raw weights at n=150 f_s=1: {s0}, {s150}"),
    )
}

fn determinism() -> Verdict {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |d: &std::path::Path| {
        let cfg = PipelineConfig {
            out_dir: d.to_path_buf(),
            cache: false,
            ..demo_config()
        };
        run_all(&cfg).unwrap();
        std::fs::read(d.join("report.json")).unwrap()
    };
    let (x, y) = (run(a.path()), run(b.path()));
    verdict(x == y, format!("two runs, reports of {} bytes, identical {}", x.len(), x == y))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("identity transfer", identity_transfer),
        ("generator oracle end-to-end", generator_oracle),
        ("PDM identities", pdm_identities),
        ("cost function sanity", cost_sanity),
        ("neutral collapse", neutral_collapse),
        ("spherical harmonics suite", sh_suite),
        ("conformal suite", conformal_suite),
        ("segmentation recovery", segmentation_recovery),
        ("weight presets and frequency weights", presets),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        failed += !v.pass as usize;
        println!("criterion {:>2} {} {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
