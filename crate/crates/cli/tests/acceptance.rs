//! End-to-end acceptance suite. Each test covers one acceptance criterion and
//! prints a single pass/fail line (visible with --nocapture or on failure).

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use acf_core::acf::{Acf, ObjectClass, PartClass, PartInstance};
use acf_core::camera::{Seed, SeedGrid};
use acf_core::estimation::{
    estimate_axis_endpoints, estimate_axis_scatterline, mean_shift_mode, MeanShiftConfig,
    RansacConfig, VoterSet,
};
use acf_core::eval::{map_curve, match_and_score, GroundTruthPart, ThresholdSpec};
use acf_core::losses::*;
use acf_core::manipulation::{
    frame_residual, grasp_mug, pour_success, pour_trajectory, stir_success, stir_trajectory,
    PourParams,
};
use acf_core::oracle::{brute_force_assignment, brute_force_kde_argmax};
use acf_core::pipeline::{
    associate_bundle, bundle_paf_directions, estimate_bundle, AxisMethod, EstimationConfig,
};
use acf_core::synthetic::{
    emulate_predictions, generate_scene, random_scene_spec, standard_camera, Dims, NoiseModel,
    ObjectSpec, Pose, Scene, SceneSpec,
};

/// Prints one status line per criterion directly to the process stdout so the
/// lines survive the harness's per-test output capture.
fn print_line(line: &str) {
    use std::io::Write;
    use std::os::fd::FromRawFd;
    // Borrow fd 1 without closing it when the File drops.
    let mut out = std::mem::ManuallyDrop::new(unsafe { std::fs::File::from_raw_fd(1) });
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn report<T>(criterion: usize, name: &str, outcome: Result<T, String>) -> T {
    match outcome {
        Ok(value) => {
            print_line(&format!("ACCEPTANCE {criterion} ({name}): pass"));
            value
        }
        Err(message) => {
            print_line(&format!("ACCEPTANCE {criterion} ({name}): FAIL: {message}"));
            panic!("acceptance criterion {criterion} failed: {message}");
        }
    }
}

fn angle_deg(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
}

#[test]
fn criterion_1_zero_noise_recovery() {
    let result = (|| -> Result<(), String> {
        let started = Instant::now();
        for seed in 0..100u64 {
            let scene = generate_scene(&random_scene_spec(seed, 1, 4))
                .map_err(|e| format!("scene {seed}: {e}"))?;
            let bundle = emulate_predictions(&scene, &NoiseModel::zero(), seed, 10)
                .map_err(|e| format!("scene {seed}: {e}"))?;
            for method in [AxisMethod::Endpoints, AxisMethod::Vector, AxisMethod::ScatterLine] {
                let config = EstimationConfig { axis_method: method, ..Default::default() };
                let (parts, failures) = estimate_bundle(&bundle, &config);
                if !failures.is_empty() {
                    return Err(format!("scene {seed} {method:?}: {failures:?}"));
                }
                for part in &parts {
                    let gt = &scene.parts[part.roi_index];
                    let kp_err = (part.acf.keypoint() - gt.acf.keypoint()).norm();
                    let axis_err = angle_deg(&part.acf.axis(), &gt.acf.axis());
                    if kp_err >= 1e-6 {
                        return Err(format!("scene {seed} {method:?}: keypoint error {kp_err}"));
                    }
                    if axis_err >= 1e-4 {
                        return Err(format!("scene {seed} {method:?}: axis error {axis_err} deg"));
                    }
                }
            }
        }
        let elapsed = started.elapsed();
        if elapsed.as_secs_f64() >= 30.0 {
            return Err(format!("took {elapsed:?}, budget 30 s"));
        }
        Ok(())
    })();
    report(1, "zero-noise recovery within 1e-6 m / 1e-4 deg over 100 scenes", result);
}

fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

fn flat3(v: &[Vector3<f64>]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

fn unflat3(x: &[f64]) -> Vec<Vector3<f64>> {
    x.chunks(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect()
}

fn flat_pairs(v: &[[Vector3<f64>; 2]]) -> Vec<f64> {
    v.iter().flat_map(|[a, b]| [a.x, a.y, a.z, b.x, b.y, b.z]).collect()
}

fn unflat_pairs(x: &[f64]) -> Vec<[Vector3<f64>; 2]> {
    x.chunks(6)
        .map(|c| [Vector3::new(c[0], c[1], c[2]), Vector3::new(c[3], c[4], c[5])])
        .collect()
}

fn off_kink(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let x: f64 = rng.random_range(-1.0..1.0);
        if x.abs() > 1e-3 {
            return x;
        }
    }
}

fn vec_off_kink(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::new(off_kink(rng), off_kink(rng), off_kink(rng))
}

fn unit3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0f64..1.0),
            rng.random_range(-1.0f64..1.0),
            rng.random_range(-1.0f64..1.0),
        );
        if v.norm() > 0.1 {
            return v.normalize();
        }
    }
}

#[test]
fn criterion_2_gradients_match_finite_differences() {
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-4;
    let result = (|| -> Result<(), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let check = |name: &str, err: f64| -> Result<(), String> {
            if err < TOL {
                Ok(())
            } else {
                Err(format!("{name}: max rel err {err}"))
            }
        };
        for _ in 0..100 {
            let n = rng.random_range(2..=8);
            let mask =
                MaskWeights::new((0..n).map(|_| rng.random_range(0.1..1.0)).collect()).unwrap();
            let n_star = unit3(&mut rng);

            let truth: Vec<Vector3<f64>> = (0..n).map(|_| vec_off_kink(&mut rng)).collect();
            let pred = OffsetField(truth.iter().map(|t| t + vec_off_kink(&mut rng)).collect());
            let numeric = numeric_gradient(
                |x| loss_keypoint(&OffsetField(unflat3(x)), &truth, &mask).unwrap(),
                &flat3(&pred.0),
                H,
            )
            .unwrap();
            check(
                "keypoint",
                max_rel_err(&flat3(&loss_keypoint_grad(&pred, &truth, &mask).unwrap()), &numeric),
            )?;

            let ep_truth: Vec<[Vector3<f64>; 2]> =
                (0..n).map(|_| [vec_off_kink(&mut rng), vec_off_kink(&mut rng)]).collect();
            let ep_pred = EndpointOffsetField(
                ep_truth
                    .iter()
                    .map(|[a, b]| loop {
                        let da = vec_off_kink(&mut rng);
                        let db = vec_off_kink(&mut rng);
                        if da.cross(&n_star).norm() > 1e-3 && db.cross(&n_star).norm() > 1e-3 {
                            break [a + da, b + db];
                        }
                    })
                    .collect(),
            );
            let numeric = numeric_gradient(
                |x| loss_endpoint(&EndpointOffsetField(unflat_pairs(x)), &ep_truth, &mask).unwrap(),
                &flat_pairs(&ep_pred.0),
                H,
            )
            .unwrap();
            check(
                "endpoint",
                max_rel_err(
                    &flat_pairs(&loss_endpoint_grad(&ep_pred, &ep_truth, &mask).unwrap()),
                    &numeric,
                ),
            )?;

            let axis_truth = AxisGroundTruth {
                n_star,
                endpoint_offsets_star: ep_truth.clone(),
                keypoint_offsets_star: truth.clone(),
            };
            let numeric = numeric_gradient(
                |x| loss_axis(&EndpointOffsetField(unflat_pairs(x)), &axis_truth, &mask).unwrap(),
                &flat_pairs(&ep_pred.0),
                H,
            )
            .unwrap();
            check(
                "axis",
                max_rel_err(
                    &flat_pairs(&loss_axis_grad(&ep_pred, &axis_truth, &mask).unwrap()),
                    &numeric,
                ),
            )?;

            let numeric = numeric_gradient(
                |x| {
                    loss_direction(&EndpointOffsetField(unflat_pairs(x)), &axis_truth, &mask)
                        .unwrap()
                },
                &flat_pairs(&ep_pred.0),
                H,
            )
            .unwrap();
            check(
                "direction",
                max_rel_err(
                    &flat_pairs(&loss_direction_grad(&ep_pred, &axis_truth, &mask).unwrap()),
                    &numeric,
                ),
            )?;

            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let target_star = Vector2::new(angle.cos(), angle.sin());
            let paf = PafPrediction {
                vectors: (0..n)
                    .map(|_| target_star + Vector2::new(off_kink(&mut rng), off_kink(&mut rng)))
                    .collect(),
                target_star,
            };
            let x: Vec<f64> = paf.vectors.iter().flat_map(|v| [v.x, v.y]).collect();
            let numeric = numeric_gradient(
                |x| {
                    let vectors = x.chunks(2).map(|c| Vector2::new(c[0], c[1])).collect();
                    loss_paf(&PafPrediction { vectors, target_star }, &mask).unwrap()
                },
                &x,
                H,
            )
            .unwrap();
            let analytic: Vec<f64> =
                loss_paf_grad(&paf, &mask).unwrap().iter().flat_map(|v| [v.x, v.y]).collect();
            check("paf", max_rel_err(&analytic, &numeric))?;

            let vectors: Vec<Vector3<f64>> =
                (0..n).map(|_| n_star + vec_off_kink(&mut rng)).collect();
            let numeric = numeric_gradient(
                |x| loss_vector(&unflat3(x), n_star, &mask).unwrap(),
                &flat3(&vectors),
                H,
            )
            .unwrap();
            check(
                "vector",
                max_rel_err(&flat3(&loss_vector_grad(&vectors, n_star, &mask).unwrap()), &numeric),
            )?;

            for mode in [InnerLossMode::Signed, InnerLossMode::Absolute] {
                let inner_pred = OffsetField(
                    (0..n)
                        .map(|_| loop {
                            let t = vec_off_kink(&mut rng);
                            if t.dot(&n_star).abs() > 1e-3 {
                                break t;
                            }
                        })
                        .collect(),
                );
                let numeric = numeric_gradient(
                    |x| loss_inner(&OffsetField(unflat3(x)), n_star, &mask, mode).unwrap(),
                    &flat3(&inner_pred.0),
                    H,
                )
                .unwrap();
                check(
                    "inner",
                    max_rel_err(
                        &flat3(&loss_inner_grad(&inner_pred, n_star, &mask, mode).unwrap()),
                        &numeric,
                    ),
                )?;
            }

            let labels = LabelPrediction {
                logits: (0..n).map(|_| rng.random_range(-4.0..4.0)).collect(),
                labels_star: (0..n).map(|_| rng.random_range(0..=1)).collect(),
            };
            let numeric = numeric_gradient(
                |x| {
                    let probe = LabelPrediction {
                        logits: x.to_vec(),
                        labels_star: labels.labels_star.clone(),
                    };
                    loss_label(&probe, &mask).unwrap()
                },
                &labels.logits,
                H,
            )
            .unwrap();
            check("label", max_rel_err(&loss_label_grad(&labels, &mask).unwrap(), &numeric))?;
        }
        Ok(())
    })();
    report(2, "analytic gradients within 1e-4 of finite differences, 100 instances", result);
}

#[test]
fn criterion_3_mean_shift_matches_density_oracle() {
    let result = (|| -> Result<(), String> {
        let bandwidth = 0.01;
        let config = MeanShiftConfig::with_bandwidth(bandwidth);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for set in 0..50 {
            let center = Vector3::new(
                rng.random_range(-0.02f64..0.02),
                rng.random_range(-0.02f64..0.02),
                rng.random_range(0.5f64..0.6),
            );
            let count = rng.random_range(15..=25);
            let points: Vec<Vector3<f64>> = (0..count)
                .map(|_| {
                    center
                        + Vector3::new(
                            rng.random_range(-0.0075f64..0.0075),
                            rng.random_range(-0.0075f64..0.0075),
                            rng.random_range(-0.0075f64..0.0075),
                        )
                })
                .collect();
            let voters = VoterSet { source_seed: (0..points.len()).collect(), points };
            let mode = mean_shift_mode(&voters, &config).map_err(|e| e.to_string())?;
            let oracle = brute_force_kde_argmax(&voters.points, bandwidth, bandwidth / 20.0)
                .map_err(|e| e.to_string())?;
            let gap = (mode - oracle).norm();
            if gap > bandwidth / 10.0 {
                return Err(format!("set {set}: mode {gap} m from grid argmax"));
            }
        }
        Ok(())
    })();
    report(3, "mean shift within bandwidth/10 of brute-force density argmax, 50 sets", result);
}

fn grid_from_points(points: &[Vector3<f64>]) -> SeedGrid {
    let seeds = points
        .iter()
        .map(|&p| Seed { uv: Vector2::zeros(), depth: p.z, point3d: Some(p) })
        .collect::<Vec<_>>();
    let n = (seeds.len() as f64).sqrt().ceil() as usize;
    let mut padded = seeds;
    while padded.len() < n * n {
        padded.push(Seed { uv: Vector2::zeros(), depth: 0.0, point3d: None });
    }
    SeedGrid { n, seeds: padded }
}

#[test]
fn criterion_4_scatterline_outlier_robustness_and_endpoint_antisymmetry() {
    let result = (|| -> Result<(), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut good = 0;
        for _ in 0..100 {
            let origin = Vector3::new(
                rng.random_range(-0.1f64..0.1),
                rng.random_range(-0.1f64..0.1),
                rng.random_range(0.4f64..0.6),
            );
            let direction = unit3(&mut rng);
            let count = 100;
            let mut seeds_points = Vec::with_capacity(count);
            let mut offsets = Vec::with_capacity(count);
            let mut logits = Vec::with_capacity(count);
            for _ in 0..count {
                let along = rng.random_range(-0.1f64..0.1);
                let on_line = origin + along * direction;
                let seed_point = on_line
                    + Vector3::new(
                        rng.random_range(-0.02f64..0.02),
                        rng.random_range(-0.02f64..0.02),
                        rng.random_range(-0.02f64..0.02),
                    );
                let is_outlier = rng.random::<f64>() < 0.3;
                let target = if is_outlier {
                    origin
                        + Vector3::new(
                            rng.random_range(-0.15f64..0.15),
                            rng.random_range(-0.15f64..0.15),
                            rng.random_range(-0.15f64..0.15),
                        )
                } else {
                    on_line
                };
                seeds_points.push(seed_point);
                offsets.push(target - seed_point);
                logits.push(if along >= 0.0 { 10.0 } else { -10.0 });
            }
            let grid = grid_from_points(&seeds_points);
            let total = grid.len();
            let mut mask = vec![1.0; count];
            mask.resize(total, 0.0);
            offsets.resize(total, Vector3::zeros());
            logits.resize(total, 0.0);
            let labels = LabelPrediction {
                logits,
                labels_star: vec![0; total],
            };
            let est = estimate_axis_scatterline(
                &grid,
                &OffsetField(offsets),
                &labels,
                &MaskWeights::new(mask).unwrap(),
                0.5,
                &RansacConfig::default(),
                Some(origin),
            );
            if let Ok(est) = est {
                if angle_deg(&est.direction, &direction) < 2.0 {
                    good += 1;
                }
            }
        }
        if good < 90 {
            return Err(format!("only {good}/100 fits within 2 degrees"));
        }

        // Endpoint-channel swap must negate the estimated direction exactly.
        let points: Vec<Vector3<f64>> = (0..16)
            .map(|i| Vector3::new(0.01 * i as f64, 0.02 * (i % 4) as f64, 0.5))
            .collect();
        let e1 = Vector3::new(0.0, 0.0, 0.45);
        let e2 = Vector3::new(0.1, 0.05, 0.55);
        let grid = grid_from_points(&points);
        let forward: Vec<[Vector3<f64>; 2]> = points.iter().map(|p| [e1 - p, e2 - p]).collect();
        let swapped: Vec<[Vector3<f64>; 2]> = points.iter().map(|p| [e2 - p, e1 - p]).collect();
        let mask = MaskWeights::new(vec![1.0; grid.len()]).unwrap();
        let config = MeanShiftConfig::default();
        let a = estimate_axis_endpoints(&grid, &forward, &mask, 0.5, &config)
            .map_err(|e| e.to_string())?;
        let b = estimate_axis_endpoints(&grid, &swapped, &mask, 0.5, &config)
            .map_err(|e| e.to_string())?;
        if a.direction != -b.direction {
            return Err(format!(
                "endpoint swap not exactly antisymmetric: {:?} vs {:?}",
                a.direction, b.direction
            ));
        }
        Ok(())
    })();
    report(4, "scatter-line robust to 30% outliers; endpoint swap antisymmetry", result);
}

fn clutter_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(17));
    let slots = [(-0.15, -0.1), (0.15, -0.1), (0.0, 0.12)];
    let classes = [ObjectClass::Mug, ObjectClass::Spoon, ObjectClass::Bottle];
    let objects = classes
        .iter()
        .zip(slots)
        .map(|(&class, (x, y))| {
            // Keep the mug handle on the camera-facing side so it is never
            // fully occluded by the mug body.
            let yaw = if class == ObjectClass::Mug {
                rng.random_range(-1.2f64..1.2)
            } else {
                rng.random_range(0.0..std::f64::consts::TAU)
            };
            ObjectSpec {
                class,
                pose: Pose::yaw_translation(yaw, Vector3::new(x, y, 0.0)),
                dims: Dims::default_for(class),
            }
        })
        .collect();
    let spec = SceneSpec {
        objects,
        camera: standard_camera(),
        gravity: -Vector3::z(),
        rng_seed: seed,
    };
    generate_scene(&spec).unwrap()
}

#[test]
fn criterion_5_association_under_paf_noise_and_greedy_optimality() {
    let result = (|| -> Result<(), String> {
        let noise = NoiseModel { paf_angle_sigma_deg: 10.0, ..NoiseModel::zero() };
        let mut correct = 0;
        for seed in 0..100u64 {
            let scene = clutter_scene(seed);
            let bundle =
                emulate_predictions(&scene, &noise, seed, 10).map_err(|e| e.to_string())?;
            let (parts, failures) = estimate_bundle(&bundle, &EstimationConfig::default());
            if !failures.is_empty() {
                return Err(format!("scene {seed}: {failures:?}"));
            }
            let hypotheses =
                associate_bundle(&bundle, &parts, 0.5, 0.2).map_err(|e| e.to_string())?;

            // Correct means: every multi-part hypothesis groups ROIs of one
            // object, and both two-part objects (mug, spoon) got grouped.
            let mut grouped_objects = Vec::new();
            let mut ok = true;
            for h in &hypotheses {
                if h.parts.len() == 2 {
                    let objs: Vec<usize> = h
                        .parts
                        .iter()
                        .map(|&i| scene.parts[parts[i].roi_index].object_index)
                        .collect();
                    if objs[0] != objs[1] {
                        ok = false;
                    }
                    grouped_objects.push(objs[0]);
                }
            }
            grouped_objects.sort();
            if ok && grouped_objects == vec![0, 1] {
                correct += 1;
            }

            // Greedy assignment must match the exhaustive optimum here.
            let paf_dirs =
                bundle_paf_directions(&bundle, &parts, 0.5).map_err(|e| e.to_string())?;
            let instances: Vec<PartInstance> = parts
                .iter()
                .map(|p| PartInstance::new(p.part_class, p.acf, p.score).unwrap())
                .collect();
            let candidates = acf_core::association::candidate_links(
                &instances,
                &paf_dirs,
                &bundle.intrinsics,
                0.2,
            )
            .map_err(|e| e.to_string())?;
            let mut sorted = candidates.clone();
            sorted.sort_by(|a, b| {
                b.score
                    .partial_cmp(&a.score)
                    .unwrap()
                    .then(a.source.cmp(&b.source))
                    .then(a.target.cmp(&b.target))
            });
            let mut used = std::collections::HashSet::new();
            let mut greedy_total = 0.0;
            for c in &sorted {
                if used.contains(&c.source) || used.contains(&c.target) {
                    continue;
                }
                used.insert(c.source);
                used.insert(c.target);
                greedy_total += c.score;
            }
            let brute_total: f64 =
                brute_force_assignment(&candidates).iter().map(|c| c.score).sum();
            if (greedy_total - brute_total).abs() > 1e-12 {
                return Err(format!(
                    "scene {seed}: greedy {greedy_total} vs brute force {brute_total}"
                ));
            }
        }
        if correct < 95 {
            return Err(format!("only {correct}/100 scenes associated correctly"));
        }
        Ok(())
    })();
    report(5, "association correct in >= 95/100 noisy scenes; greedy matches brute force", result);
}

#[test]
fn criterion_6_average_precision_hand_cases() {
    let result = (|| -> Result<(), String> {
        let up = Vector3::z();
        let gt = vec![
            GroundTruthPart {
                part_class: PartClass::Container,
                acf: Acf::new(Vector3::new(0.0, 0.0, 0.5), up).unwrap(),
            },
            GroundTruthPart {
                part_class: PartClass::Container,
                acf: Acf::new(Vector3::new(0.2, 0.0, 0.5), up).unwrap(),
            },
        ];
        let spec = ThresholdSpec::new(10.0, 0.02).unwrap();

        // Perfect predictions: AP 100.
        let perfect: Vec<PartInstance> = gt
            .iter()
            .map(|g| PartInstance::new(g.part_class, g.acf, 0.9).unwrap())
            .collect();
        let report_perfect = match_and_score(&perfect, &gt, spec);
        if (report_perfect.mean_ap - 100.0).abs() > 1e-9 {
            return Err(format!("perfect case: {}", report_perfect.mean_ap));
        }

        // Ranked TP, FP, TP over 2 ground truths: AP = (1/2)(1 + 2/3) * 100.
        let preds = vec![
            PartInstance::new(PartClass::Container, gt[0].acf, 0.9).unwrap(),
            PartInstance::new(
                PartClass::Container,
                Acf::new(Vector3::new(1.0, 1.0, 1.0), up).unwrap(),
                0.8,
            )
            .unwrap(),
            PartInstance::new(PartClass::Container, gt[1].acf, 0.7).unwrap(),
        ];
        let report_mixed = match_and_score(&preds, &gt, spec);
        let expected = 500.0 / 6.0;
        if (report_mixed.mean_ap - expected).abs() > 1e-9 {
            return Err(format!("TP/FP/TP case: {} vs {expected}", report_mixed.mean_ap));
        }

        // A 12-degree axis error fails the 10-degree gate, passes 15 degrees.
        let tilted = Acf::new(
            gt[0].acf.keypoint(),
            Vector3::new(12f64.to_radians().sin(), 0.0, 12f64.to_radians().cos()),
        )
        .unwrap();
        let single_gt = vec![gt[0].clone()];
        let single_pred = vec![PartInstance::new(PartClass::Container, tilted, 0.9).unwrap()];
        let strict = match_and_score(&single_pred, &single_gt, ThresholdSpec::new(10.0, 0.02).unwrap());
        let loose = match_and_score(&single_pred, &single_gt, ThresholdSpec::new(15.0, 0.02).unwrap());
        if strict.mean_ap != 0.0 || (loose.mean_ap - 100.0).abs() > 1e-9 {
            return Err(format!("12-degree gate: strict {} loose {}", strict.mean_ap, loose.mean_ap));
        }

        // mAP curve is nondecreasing in the angular threshold.
        let curve = map_curve(&preds, &gt, &[2.0, 5.0, 10.0, 15.0, 20.0, 30.0], 0.02);
        for window in curve.windows(2) {
            if window[1].1 < window[0].1 - 1e-12 {
                return Err(format!("curve decreased: {curve:?}"));
            }
        }
        Ok(())
    })();
    report(6, "hand-computed AP values, threshold gating and monotone curve", result);
}

#[test]
fn criterion_7_manipulation_frames_and_success_predicates() {
    let result = (|| -> Result<(), String> {
        let up = Vector3::z();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let kp = Vector3::new(
                rng.random_range(-0.3f64..0.3),
                rng.random_range(-0.3f64..0.3),
                rng.random_range(0.0f64..0.3),
            );
            let handle_dir = unit3(&mut rng);
            let container = Acf::new(kp, up).unwrap();
            let handle = Acf::new(kp + Vector3::new(0.06, 0.0, 0.0), handle_dir).unwrap();
            if handle_dir.cross(&up).norm() < 0.05 {
                continue;
            }
            let grasp = grasp_mug(&handle, &container).map_err(|e| e.to_string())?;
            if frame_residual(&grasp.axes) >= 1e-9 {
                return Err(format!("mug grasp frame residual {}", frame_residual(&grasp.axes)));
            }
        }

        let source = Acf::new(Vector3::new(0.3, 0.1, 0.1), up).unwrap();
        let target = Acf::new(Vector3::new(0.0, 0.0, 0.05), up).unwrap();
        let params = PourParams::default();
        let pour = pour_trajectory(&source, &target, &params, up).map_err(|e| e.to_string())?;
        for (i, w) in pour.waypoints.iter().enumerate() {
            if frame_residual(&w.frame) >= 1e-9 {
                return Err(format!("pour waypoint {i} frame residual"));
            }
        }
        // Phase 1 keeps the container upright: green axis stays on world up.
        for w in &pour.waypoints[..pour.phase_boundary] {
            let green = w.frame.column(1);
            if (green.dot(&up) - 1.0).abs() >= 1e-9 {
                return Err("transport phase tilted the container".into());
            }
        }
        // The tilt phase keeps the keypoint on the pour circle.
        let hold = target.keypoint() + params.height * up;
        for w in &pour.waypoints[pour.phase_boundary..] {
            if ((w.position - hold).norm() - params.radius).abs() >= 1e-9 {
                return Err("tilt phase left the pour circle".into());
            }
        }

        let stir = Acf::new(Vector3::new(0.1, 0.0, 0.1), Vector3::x()).unwrap();
        let scoop = Acf::new(Vector3::new(0.16, 0.0, 0.1), Vector3::new(0.3, 0.0, 0.954)
            .normalize())
        .unwrap();
        let container_acf = Acf::new(Vector3::new(0.0, 0.0, 0.05), up).unwrap();
        let stir_traj = stir_trajectory(&stir, &scoop, &container_acf, 0.02, 10)
            .map_err(|e| e.to_string())?;
        let descent_end = stir_traj.waypoints[stir_traj.phase_boundary - 1].position;
        if (descent_end - container_acf.keypoint()).norm() >= 1e-9 {
            return Err("stir descent missed the container keypoint".into());
        }
        for w in &stir_traj.waypoints {
            if frame_residual(&w.frame) >= 1e-9 {
                return Err("stir waypoint frame residual".into());
            }
        }

        // Success predicates at their exact boundaries.
        let (r, ok) = pour_success(0.7, 1.0).map_err(|e| e.to_string())?;
        if !(ok && (r - 0.7).abs() < 1e-15) {
            return Err("pour ratio 0.7 must succeed".into());
        }
        let (_, ok) = pour_success(0.7 - 1e-9, 1.0).map_err(|e| e.to_string())?;
        if ok {
            return Err("pour ratio below 0.7 must fail".into());
        }
        if stir_success(0.02) {
            return Err("stir error of exactly 2 cm must fail".into());
        }
        if !stir_success(0.02 - 1e-12) {
            return Err("stir error below 2 cm must succeed".into());
        }
        Ok(())
    })();
    report(7, "orthonormal frames, pour/stir geometry audits, success boundaries", result);
}

#[test]
fn criterion_8_map_degrades_monotonically_with_noise() {
    let result = (|| -> Result<(), String> {
        let scenes: Vec<Scene> = (0..30u64)
            .map(|seed| generate_scene(&random_scene_spec(seed, 2, 4)).unwrap())
            .collect();
        let spec = ThresholdSpec::new(5.0, 0.01).unwrap();
        let mut curve = Vec::new();
        for sigma in [0.0, 0.002, 0.005, 0.01, 0.02] {
            let noise = NoiseModel { offset_sigma: sigma, ..NoiseModel::zero() };
            let mut total = 0.0;
            for (i, scene) in scenes.iter().enumerate() {
                let bundle =
                    emulate_predictions(scene, &noise, i as u64, 10).map_err(|e| e.to_string())?;
                let (parts, _) = estimate_bundle(&bundle, &EstimationConfig::default());
                let preds: Vec<PartInstance> = parts
                    .iter()
                    .map(|p| PartInstance::new(p.part_class, p.acf, p.score).unwrap())
                    .collect();
                let gt: Vec<GroundTruthPart> = scene
                    .parts
                    .iter()
                    .map(|p| GroundTruthPart { part_class: p.part_class, acf: p.acf })
                    .collect();
                total += match_and_score(&preds, &gt, spec).mean_ap;
            }
            curve.push((sigma, total / scenes.len() as f64));
        }
        for window in curve.windows(2) {
            if window[1].1 > window[0].1 + 1e-9 {
                return Err(format!("mAP increased with noise: {curve:?}"));
            }
        }
        if curve[0].1 < 100.0 - 1e-9 {
            return Err(format!("zero-noise mAP below 100: {curve:?}"));
        }
        Ok(())
    })();
    report(8, "mean AP nonincreasing over offset noise 0..20 mm", result);
}

fn hash_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_str().unwrap().to_string(),
                std::fs::read(&path).unwrap(),
            )
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

#[test]
fn criterion_9_cli_reruns_are_byte_identical() {
    let result = (|| -> Result<(), String> {
        let bin = env!("CARGO_BIN_EXE_acf");
        let root = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config = root.path().join("synth.json");
        std::fs::write(
            &config,
            r#"{"scenes": 4, "max_objects": 3, "noise": {"offset_sigma": 0.003, "paf_angle_sigma_deg": 5.0, "outlier_fraction": 0.1, "outlier_box": 0.2}}"#,
        )
        .map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for run in 0..2 {
            let data = root.path().join(format!("data{run}"));
            let est = root.path().join(format!("est{run}"));
            let report_path = root.path().join(format!("report{run}.json"));
            let run_step = |args: &[&str]| -> Result<(), String> {
                let status = Command::new(bin)
                    .args(args)
                    .status()
                    .map_err(|e| e.to_string())?;
                if !status.success() {
                    return Err(format!("{args:?} exited with {status}"));
                }
                Ok(())
            };
            run_step(&[
                "synth",
                "--out",
                data.to_str().unwrap(),
                "--config",
                config.to_str().unwrap(),
                "--seed",
                "11",
                "--jobs",
                "2",
            ])?;
            run_step(&[
                "estimate",
                "--input",
                data.to_str().unwrap(),
                "--out",
                est.to_str().unwrap(),
                "--axis-method",
                "scatter-line",
                "--jobs",
                "2",
            ])?;
            run_step(&[
                "evaluate",
                "--scenes",
                data.to_str().unwrap(),
                "--estimates",
                est.to_str().unwrap(),
                "--out",
                report_path.to_str().unwrap(),
            ])?;
            let mut all = hash_dir(&data);
            all.extend(hash_dir(&est));
            all.push(("report".into(), std::fs::read(&report_path).map_err(|e| e.to_string())?));
            outputs.push(all);
        }
        if outputs[0].len() != outputs[1].len() {
            return Err("runs produced different file sets".into());
        }
        for (a, b) in outputs[0].iter().zip(&outputs[1]) {
            if a.0 != b.0 {
                return Err(format!("file name mismatch {} vs {}", a.0, b.0));
            }
            if a.1 != b.1 {
                return Err(format!("file {} differs between reruns", a.0));
            }
        }
        Ok(())
    })();
    report(9, "CLI reruns with identical seeds produce byte-identical outputs", result);
}
