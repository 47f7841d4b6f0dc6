use mlfm::graph::{Graph, GraphSpec, MlfmAttachment};
use mlfm::harness::metrics::{accumulate_seg, topk_metrics};
use mlfm::harness::ssim::{gaussian_window, profile_from_taps, ssim_tensors};
use mlfm::harness::*;
use mlfm::lfmu::LfmuConfig;
use mlfm::tensor::Tensor;
use mlfm::wavelet::WaveletBasisId;
use mlfm::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_cfg(epochs: usize, lr: f64) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 4,
        lr,
        seed: 5,
        eval_every: 0,
        ..Default::default()
    }
}

#[test]
fn generators_are_deterministic() {
    let a = gen_synth_lowfreq(6, 32, 3).unwrap();
    let b = gen_synth_lowfreq(6, 32, 3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.images, gen_synth_lowfreq(6, 32, 4).unwrap().images);
    assert_eq!(gen_synth_shapes(4, 32, 3).unwrap(), gen_synth_shapes(4, 32, 3).unwrap());
}

#[test]
fn lowfreq_class_balance() {
    for n in [1, 2, 7, 10] {
        let d = gen_synth_lowfreq(n, 32, 0).unwrap();
        let Labels::Class(l) = &d.labels else { panic!() };
        let zeros = l.iter().filter(|&&c| c == 0).count();
        assert_eq!((zeros, n - zeros), (n.div_ceil(2), n / 2));
    }
}

/// Solves `A x = b` for symmetric positive definite `A` by Cholesky.
fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            l[i * n + j] = if i == j {
                (a[i * n + i] - s).sqrt()
            } else {
                (a[i * n + j] - s) / l[j * n + j]
            };
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i * n + k] * y[k]).sum::<f64>()) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k * n + i] * x[k]).sum::<f64>()) / l[i * n + i];
    }
    x
}

#[test]
fn lowfreq_is_linearly_separable_from_coarse_approximation() {
    // A level-3 Haar LL is 8× the 8×8 block mean, so block means are the
    // same features up to scale.
    let (n, size, block) = (2000, 64, 8);
    let d = gen_synth_lowfreq(n, size, 0).unwrap();
    let Labels::Class(labels) = &d.labels else { panic!() };
    let side = size / block;
    let dim = 3 * side * side + 1;
    let feats: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let img = d.image(i);
            let mut f = vec![0.0; dim];
            for c in 0..3 {
                for r in 0..size {
                    for col in 0..size {
                        f[c * side * side + (r / block) * side + col / block] +=
                            img[(c * size + r) * size + col] as f64 / (block * block) as f64;
                    }
                }
            }
            f[dim - 1] = 1.0;
            f
        })
        .collect();
    let mut ata = vec![0.0; dim * dim];
    let mut atb = vec![0.0; dim];
    for (f, &l) in feats.iter().zip(labels) {
        let t = if l == 1 { 1.0 } else { -1.0 };
        for i in 0..dim {
            atb[i] += f[i] * t;
            for j in 0..dim {
                ata[i * dim + j] += f[i] * f[j];
            }
        }
    }
    for i in 0..dim {
        ata[i * dim + i] += 1e-8;
    }
    let wts = cholesky_solve(&ata, &atb, dim);
    let correct = feats
        .iter()
        .zip(labels)
        .filter(|(f, &l)| {
            let s: f64 = f.iter().zip(&wts).map(|(a, b)| a * b).sum();
            (s > 0.0) == (l == 1)
        })
        .count();
    let acc = correct as f64 / n as f64;
    assert!(acc > 0.95, "least-squares train accuracy {acc}");
}

#[test]
fn shapes_foreground_fraction_matches_area_distribution() {
    // Areas in units of size²: rectangles w·h with w, h ~ U[a, b]; disks
    // π r² with r ~ U[c, d]; the shape count m ~ U{1, 2, 3}.
    let (a, b, c, d) = (0.25f64, 0.45f64, 0.125f64, 0.225f64);
    let moment = |lo: f64, hi: f64, k: i32| (hi.powi(k + 1) - lo.powi(k + 1)) / ((k + 1) as f64 * (hi - lo));
    let pi = std::f64::consts::PI;
    let e_area = 0.5 * moment(a, b, 1).powi(2) + 0.5 * pi * moment(c, d, 2);
    let e_area2 = 0.5 * moment(a, b, 2).powi(2) + 0.5 * pi * pi * moment(c, d, 4);
    let (e_m, e_mm1) = (2.0, 14.0 / 3.0 - 2.0);
    let mean = e_m * e_area;
    let var = e_m * e_area2 + e_mm1 * e_area * e_area - mean * mean;
    let n = 1000;
    let ds = gen_synth_shapes(n, 64, 11).unwrap();
    let Labels::Pixel(l) = &ds.labels else { panic!() };
    let frac = l.iter().filter(|&&v| v != 0).count() as f64 / l.len() as f64;
    // Sampling band plus a small allowance for pixel-centre discretisation.
    let band = 4.0 * (var / n as f64).sqrt() + 0.005;
    assert!((frac - mean).abs() < band, "fraction {frac}, expected {mean} ± {band}");
}

#[test]
fn shapes_labels_lie_in_generating_masks() {
    let size = 64;
    let ds = gen_synth_shapes(20, size, 2).unwrap();
    for i in 0..20 {
        let shapes = mlfm::harness::data::synth_shapes_layout(size, 2, i);
        assert!((1..=3).contains(&shapes.len()));
        for (p, &l) in ds.label(i).iter().enumerate() {
            if l != 0 {
                let (px, py) = ((p % size) as f64 + 0.5, (p / size) as f64 + 0.5);
                assert!(shapes.iter().any(|s| s.class() == l && s.contains(px, py)));
            }
        }
    }
}

fn topk_oracle(scores: &[f64], label: usize, k: usize) -> bool {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&x, &y| scores[y].partial_cmp(&scores[x]).unwrap().then(x.cmp(&y)));
    order[..k.min(order.len())].contains(&label)
}

proptest! {
    #[test]
    fn topk_matches_sorting_oracle(
        n in 1usize..20,
        k in 1usize..8,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Coarse scores so that ties are common.
        let scores: Vec<f64> = (0..n * k).map(|_| rng.gen_range(0..4) as f64).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let m = topk_metrics(&scores, k, &labels).unwrap();
        let hits = |kk| labels.iter().enumerate().filter(|&(i, &l)| topk_oracle(&scores[i * k..(i + 1) * k], l, kk)).count() as f64 / n as f64;
        prop_assert_eq!(m.top1, hits(1));
        prop_assert_eq!(m.top5, hits(5));
    }

    #[test]
    fn segmentation_metrics_match_pixel_counting(
        n in 1usize..20,
        h in 1usize..=8,
        w in 1usize..=8,
        k in 2usize..5,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plane = h * w;
        let logits: Vec<f64> = (0..n * k * plane).map(|_| rng.gen_range(0..3) as f64).collect();
        let gt: Vec<usize> = (0..n * plane).map(|_| rng.gen_range(0..k)).collect();
        let mut cm = Confusion::new(k);
        accumulate_seg(&mut cm, &logits, [n, k, h, w], &gt);
        let m = cm.metrics().unwrap();

        let pred: Vec<usize> = (0..n * plane)
            .map(|q| {
                let (s, p) = (q / plane, q % plane);
                let col: Vec<f64> = (0..k).map(|c| logits[(s * k + c) * plane + p]).collect();
                (0..k).rev().max_by(|&a, &b| col[a].partial_cmp(&col[b]).unwrap()).unwrap()
            })
            .collect();
        let count = |f: &dyn Fn(usize, usize) -> bool| pred.iter().zip(&gt).filter(|(&p, &g)| f(p, g)).count() as f64;
        let oa = count(&|p, g| p == g) / (n * plane) as f64;
        let (mut iou, mut prec, mut rec, mut present) = (0.0, 0.0, 0.0, 0.0);
        for c in 0..k {
            let tp = count(&|p, g| p == c && g == c);
            let fp = count(&|p, g| p == c && g != c);
            let fne = count(&|p, g| p != c && g == c);
            if tp + fne == 0.0 {
                continue;
            }
            present += 1.0;
            iou += tp / (tp + fp + fne);
            prec += if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
            rec += tp / (tp + fne);
        }
        prop_assert_eq!(m.oa, oa);
        prop_assert!((m.miou - iou / present).abs() < 1e-12);
        prop_assert!((m.precision - prec / present).abs() < 1e-12);
        prop_assert!((m.recall - rec / present).abs() < 1e-12);
    }

    #[test]
    fn ssim_is_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..14 * 13).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..14 * 13).map(|_| rng.gen()).collect();
        let (x, y) = (ssim(&a, &b, 14, 13).unwrap(), ssim(&b, &a, 14, 13).unwrap());
        prop_assert!((x - y).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&x));
    }
}

#[test]
fn top5_of_uniform_logits_is_binomial() {
    let (n, k) = (10_000, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let scores: Vec<f64> = (0..n * k).map(|_| rng.gen()).collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let m = topk_metrics(&scores, k, &labels).unwrap();
    let sigma = (0.25 / n as f64).sqrt();
    assert!((m.top5 - 0.5).abs() < 3.0 * sigma, "top5 {}", m.top5);
}

/// Windowed SSIM by direct summation over the 2-D Gaussian window.
fn ssim_reference(a: &[f64], b: &[f64], h: usize, w: usize) -> f64 {
    let g = gaussian_window();
    let k = g.len();
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut total = 0.0;
    let mut count = 0;
    for r in 0..=h - k {
        for c in 0..=w - k {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    let wt = g[i] * g[j];
                    let (x, y) = (a[(r + i) * w + c + j], b[(r + i) * w + c + j]);
                    ma += wt * x;
                    mb += wt * y;
                    saa += wt * x * x;
                    sbb += wt * y * y;
                    sab += wt * x * y;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn ssim_closed_forms_and_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a: Vec<f64> = (0..256).map(|_| rng.gen()).collect();
    let b: Vec<f64> = (0..256).map(|_| rng.gen()).collect();
    assert_eq!(ssim(&a, &a, 16, 16).unwrap(), 1.0);
    assert!((ssim(&a, &b, 16, 16).unwrap() - ssim_reference(&a, &b, 16, 16)).abs() < 1e-6);

    let (ca, cb) = (0.3, 0.7);
    let c1 = 0.01f64.powi(2);
    let closed = (2.0 * ca * cb + c1) / (ca * ca + cb * cb + c1);
    let s = ssim(&vec![ca; 144], &vec![cb; 144], 12, 12).unwrap();
    assert!((s - closed).abs() < 1e-9);

    let t = Tensor::<f32>::new([12, 12], vec![0.5; 144]).unwrap();
    assert!(ssim_tensors(&t, &Tensor::new([12, 11], vec![0.5; 132]).unwrap()).is_err());
}

#[test]
fn profile_of_identity_tap_is_one() {
    let d = gen_synth_lowfreq(3, 32, 0).unwrap();
    let (x, _) = d.batch::<f64>(&[0, 1, 2]);
    let p = profile_from_taps(std::slice::from_ref(&x), &[None], &x, WaveletBasisId::Haar).unwrap();
    assert_eq!(p.features, vec![1.0]);
    assert!(profile_from_taps::<f64>(&[], &[], &x, WaveletBasisId::Haar).is_err());
}

#[test]
fn random_init_profile_is_bounded() {
    // 352 = 11·32 keeps the node-5 map at the 11×11 window size.
    let size = 352;
    let spec = GraphSpec {
        input: [3, size, size],
        ..GraphSpec::micro_resnet(2)
    };
    let a = MlfmAttachment::new(2, 5, LfmuConfig::default());
    let g = Graph::<f32>::build(&spec, Some(&a), 0).unwrap();
    // Generated sizes are powers of two, so crop a 512 image.
    let big = gen_synth_lowfreq(2, 512, 0).unwrap();
    let mut data = Vec::new();
    for i in 0..2 {
        for c in 0..3 {
            for r in 0..size {
                let row = &big.image(i)[(c * 512 + r) * 512..][..size];
                data.extend(row.iter().copied());
            }
        }
    }
    let x = Tensor::<f32>::new([2, 3, size, size], data).unwrap();
    let p = ssim_depth_profile(&g, &x, WaveletBasisId::Haar).unwrap();
    assert_eq!(p.features.len(), 6);
    assert!(p.features.iter().all(|v| v.is_finite() && (-1.0..=1.0).contains(v)));
    assert!(p.memories[1].is_none());
    assert!(p.memories[2..]
        .iter()
        .all(|m| m.is_some_and(|v| (-1.0..=1.0).contains(&v))));
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let d = gen_synth_lowfreq(8, 64, 0).unwrap();
    let g = Graph::<f32>::build(&GraphSpec::micro_resnet(2), None, 1).unwrap();
    let before = g.params().to_checkpoint().to_bytes().unwrap();
    let (g, report) = train(g, &d, None, &tiny_cfg(2, 0.0)).unwrap();
    assert_eq!(g.params().to_checkpoint().to_bytes().unwrap(), before);
    assert_eq!(report.epochs.len(), 2);
}

#[test]
fn overfits_one_sample() {
    let d = gen_synth_lowfreq(1, 64, 0).unwrap();
    let g = Graph::<f32>::build(&GraphSpec::micro_resnet(2), None, 0).unwrap();
    let cfg = TrainConfig {
        epochs: 30,
        batch_size: 1,
        lr: 0.01,
        seed: 0,
        eval_every: 0,
        ..Default::default()
    };
    let (g, _) = train(g, &d, None, &cfg).unwrap();
    let (x, l) = d.batch::<f32>(&[0]);
    let tape = mlfm::Tape::new();
    let loss = tape
        .softmax_cross_entropy(&g.forward_with(&tape, g.params(), &x).unwrap().output, &l)
        .unwrap();
    assert!(loss.item().unwrap() < 0.01, "loss {}", loss.item().unwrap());
}

#[test]
fn training_is_bitwise_reproducible() {
    let d = gen_synth_shapes(6, 64, 0).unwrap();
    let a = MlfmAttachment {
        seg_mode: mlfm::graph::SegMode::EncoderDecoder,
        ..MlfmAttachment::new(2, 4, LfmuConfig::default())
    };
    let run = || {
        let g = Graph::<f32>::build(&GraphSpec::micro_fcn(3), Some(&a), 9).unwrap();
        let (g, r) = train(g, &d, Some(&d), &tiny_cfg(2, 0.01)).unwrap();
        (g.params().to_checkpoint().to_bytes().unwrap(), r.to_jsonl())
    };
    let (c1, r1) = run();
    let (c2, r2) = run();
    assert!(c1 == c2);
    assert_eq!(r1, r2);
    assert_eq!(r1.lines().count(), 3);
}

#[test]
fn divergence_names_the_step() {
    let d = gen_synth_lowfreq(8, 64, 0).unwrap();
    let g = Graph::<f32>::build(&GraphSpec::micro_resnet(2), None, 0).unwrap();
    match train(g, &d, None, &tiny_cfg(3, 1e30)) {
        Err(Error::Divergence { epoch, step, loss }) => {
            assert!(epoch >= 1 && step >= 1 && !loss.is_finite());
        }
        other => panic!("expected divergence, got {:?}", other.map(|r| r.1.train)),
    }
}

#[test]
fn task_mismatch_and_empty_data_are_rejected() {
    let d = gen_synth_shapes(2, 64, 0).unwrap();
    let g = Graph::<f32>::build(&GraphSpec::micro_resnet(3), None, 0).unwrap();
    assert!(matches!(
        train(g.clone(), &d, None, &tiny_cfg(1, 0.1)),
        Err(Error::Config(_))
    ));
    let empty = d.subset(&[]);
    assert!(matches!(evaluate_cls(&g, &empty), Err(Error::EmptyDataset)));
}

#[test]
fn perfect_predictions_score_one() {
    let scores = [5.0, 0.0, 0.0, 0.0, 9.0, 1.0];
    let m = topk_metrics(&scores, 3, &[0, 1]).unwrap();
    assert_eq!((m.top1, m.top5), (1.0, 1.0));
    let mut cm = Confusion::new(3);
    for c in [0, 1, 2, 2] {
        cm.add(c, c);
    }
    let s = cm.metrics().unwrap();
    assert_eq!((s.oa, s.miou, s.precision, s.recall), (1.0, 1.0, 1.0, 1.0));
}

#[test]
fn dataset_cache_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = load_or_generate(dir.path(), Generator::Shapes, 3, 32, 4).unwrap();
    let path = dir
        .path()
        .join(format!("{}.mlfm", cache_name(Generator::Shapes, 4, 3, 32)));
    assert!(path.exists());
    assert_eq!(cache_name(Generator::Shapes, 4, 3, 32), "synth_shapes_4_3_32");
    let b = load_or_generate(dir.path(), Generator::Shapes, 3, 32, 4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn image_directory_loads_sorted_classes() {
    let dir = tempfile::tempdir().unwrap();
    for (class, magic, px) in [
        ("b_gray", "P5", vec![10u8, 20, 30, 40]),
        ("a_rgb", "P6", vec![255u8; 12]),
    ] {
        let sub = dir.path().join(class);
        std::fs::create_dir(&sub).unwrap();
        let mut bytes = format!("{magic}\n2 2\n255\n").into_bytes();
        bytes.extend(px);
        std::fs::write(sub.join("x.ppm"), bytes).unwrap();
        std::fs::write(sub.join("notes.txt"), b"ignored").unwrap();
    }
    let d = load_image_dir(dir.path()).unwrap();
    assert_eq!((d.len(), d.classes, d.shape), (2, 2, [3, 2, 2]));
    assert_eq!(d.label(0), &[0]);
    assert!(d.image(0).iter().all(|&v| v == 1.0));
    assert_eq!(d.image(1)[4], 10.0 / 255.0);
}
