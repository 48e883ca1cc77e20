mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use splatpress::io::{decode_compact, encode_compact};
use splatpress::quant::half::{f16, round_half};
use splatpress::quant::{kmeans_1d, quantize_scene, to_half, Codebook, KMeansConfig};
use splatpress::raster::{psnr, render, RenderOptions};

/// Plain Lloyd from `k` distinct random samples, assignment by linear scan.
fn naive_lloyd(values: &[f64], k: usize, r: &mut rand_chacha::ChaCha8Rng) -> f64 {
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    distinct.shuffle(r);
    let mut c: Vec<f64> = distinct.into_iter().take(k).collect();
    let mut sse = f64::INFINITY;
    for _ in 0..200 {
        let mut sum = vec![0.0; c.len()];
        let mut cnt = vec![0usize; c.len()];
        let mut next = 0.0;
        for &v in values {
            let (j, d) = c
                .iter()
                .enumerate()
                .map(|(j, &m)| (j, (v - m) * (v - m)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            sum[j] += v;
            cnt[j] += 1;
            next += d;
        }
        for j in 0..c.len() {
            if cnt[j] > 0 {
                c[j] = sum[j] / cnt[j] as f64;
            }
        }
        if next >= sse {
            break;
        }
        sse = next;
    }
    sse
}

#[test]
fn kmeans_matches_restart_oracle_on_known_mixture() {
    for seed in 0..10 {
        let mut r = rng(seed);
        let modes = [
            (-3.0, 0.3, 0.15),
            (-0.8, 0.25, 0.35),
            (1.0, 0.4, 0.3),
            (4.0, 0.5, 0.2),
        ];
        let values: Vec<f64> = (0..10_000)
            .map(|_| {
                let u: f64 = r.random();
                let mut acc = 0.0;
                let &(m, s, _) = modes
                    .iter()
                    .find(|md| {
                        acc += md.2;
                        u < acc
                    })
                    .unwrap_or(&modes[3]);
                m + s * (r.random::<f64>() + r.random::<f64>() + r.random::<f64>() - 1.5)
            })
            .collect();
        let ours = kmeans_1d(
            &values,
            &KMeansConfig {
                k: 4,
                max_iterations: 50,
            },
        )
        .unwrap();
        let best = (0..50)
            .map(|_| naive_lloyd(&values, 4, &mut r))
            .fold(f64::INFINITY, f64::min);
        assert!(
            ours.sse <= 1.05 * best,
            "seed {seed}: {} vs {}",
            ours.sse,
            best
        );
    }
}

#[test]
fn kmeans_sse_is_consistent_and_monotone() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let values: Vec<f64> = (0..3000)
            .map(|_| r.random_range(-5.0..5.0f64).powi(3))
            .collect();
        for k in [4, 16, 64, 256] {
            let km = kmeans_1d(
                &values,
                &KMeansConfig {
                    k,
                    max_iterations: 50,
                },
            )
            .unwrap();
            assert!(km.centroids.windows(2).all(|w| w[0] < w[1]));
            assert!(km
                .sse_history
                .windows(2)
                .all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
            let direct: f64 = values
                .iter()
                .map(|v| {
                    km.centroids
                        .iter()
                        .map(|c| (v - c) * (v - c))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum();
            assert!((direct - km.sse).abs() <= 1e-9 * direct.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn few_distinct_values_are_exact(
        distinct in prop::collection::btree_set(-100_000i64..100_000, 1..=256),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 1..2000),
    ) {
        let d: Vec<f64> = distinct.iter().map(|&v| v as f64 * 1e-3).collect();
        let mut values: Vec<f64> = picks.iter().map(|i| d[i.index(d.len())]).collect();
        values.extend(&d);
        let km = kmeans_1d(&values, &KMeansConfig::default()).unwrap();
        prop_assert_eq!(km.sse, 0.0);
        let book = Codebook { entries: km.centroids, unused: false, sse: 0.0 };
        for v in &values {
            prop_assert_eq!(book.get(book.nearest(*v)), *v);
        }
    }

    #[test]
    fn nearest_entry_matches_linear_scan(
        entries in prop::collection::btree_set(-1000i32..1000, 1..=256),
        v in -1200.0..1200.0f64,
    ) {
        let e: Vec<f64> = entries.iter().map(|&x| f64::from(x) * 0.5).collect();
        let book = Codebook { entries: e.clone(), unused: false, sse: 0.0 };
        let got = book.nearest(v) as usize;
        let best = e.iter().map(|c| (c - v).abs()).fold(f64::INFINITY, f64::min);
        prop_assert_eq!((e[got] - v).abs(), best);
        // ties go to the lower entry
        prop_assert!(e[..got].iter().all(|c| (c - v).abs() > best));
    }

    #[test]
    fn half_relative_error_on_normal_range(m in 1.0..2.0f64, e in -14i32..=15, neg in any::<bool>()) {
        let v = if neg { -m } else { m } * 2f64.powi(e);
        prop_assume!(v.abs() <= 65504.0);
        let back: f64 = round_half(v);
        prop_assert!(((back - v) / v).abs() <= 2f64.powi(-11));
    }
}

fn finite_halves() -> Vec<f64> {
    let mut all: Vec<f64> = (0..=u16::MAX)
        .map(|b| f16::from_bits(b).to_f64())
        .filter(|v| v.is_finite())
        .collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

#[test]
fn half_rounding_is_nearest_with_ties_to_even() {
    let all = finite_halves();
    let check = |v: f64| {
        let got = to_half(v);
        let at = all.partition_point(|&h| h < v);
        let lo = all[at.saturating_sub(1)];
        let hi = all[at.min(all.len() - 1)];
        let (dl, dh) = ((v - lo).abs(), (hi - v).abs());
        let want = if dl < dh {
            lo
        } else if dh < dl {
            hi
        } else if f16::from_f64(lo).to_bits() % 2 == 0 {
            lo
        } else {
            hi
        };
        assert_eq!(got.to_f64(), want, "{v}");
    };
    for w in all.windows(2) {
        check(w[0]);
        check(0.5 * (w[0] + w[1]));
    }
    let mut r = rng(11);
    for _ in 0..200_000 {
        check(r.random_range(-65504.0..65504.0) * r.random::<f64>().powi(8));
    }
}

#[test]
fn rescaled_scene_renders_like_the_original() {
    let mut r = rng(21);
    // half-exact attributes and few distinct values: quantization is lossless apart from the rescale
    let levels: Vec<f64> = (0..40)
        .map(|i| round_half(0.05 + 0.01 * f64::from(i)))
        .collect();
    let big = 2f64.powi(18);
    let prims: Vec<P> = (0..300)
        .map(|_| {
            let mut p = random_prim(&mut r, 0, 0.5);
            p.position = p.position.map(|v| round_half(v) * big);
            p.scale = [0; 3].map(|_| levels[r.random_range(0..levels.len())] * 0.5 * big);
            p.rotation = [1.0, 0.0, 0.0, 0.0];
            p.opacity = levels[r.random_range(0..levels.len())] * 2.0;
            p.base_color = [0; 3].map(|_| levels[r.random_range(0..levels.len())]);
            p
        })
        .collect();
    let q = quantize_scene(&prims, &KMeansConfig::default()).unwrap();
    assert!(q.rescale.is_some());
    let back = decode_compact::<f64>(&encode_compact(&q.compact).unwrap()).unwrap();
    let mut view = random_view(&mut r, 64, 64);
    view.translation = view.translation.map(|t| t * big);
    let a = render(&prims, &view, &RenderOptions::default());
    let b = render(&back, &view, &RenderOptions::default());
    assert!(psnr(&a, &b) >= 60.0, "{}", psnr(&a, &b));
}
