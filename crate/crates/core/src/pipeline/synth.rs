//! Deterministic synthetic test scenes with known redundancy and view dependence.
//!
//! Surface sites cover an open spherical bowl floating above a ground annulus.
//! Each site becomes one primary primitive plus a random number of near-coincident
//! low-opacity duplicates whose combined coverage matches the site's clean opacity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::math::{self, Vec3};
use crate::scalar::Real;
use crate::scene::{CameraView, GaussianPrimitive, Scene, MAX_BANDS, SH_GROUPS};
use crate::sh::rgb_to_dc;

const SPHERE_RADIUS: f64 = 0.6;
/// Sphere sites only where the outward normal has `z >= CAP_MIN_Z`.
const CAP_MIN_Z: f64 = -0.25;
const GROUND_Z: f64 = -0.6;
const GROUND_INNER: f64 = 0.75;
const GROUND_OUTER: f64 = 1.6;
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    /// Expected primitive count; sites = primitives / redundancy.
    pub primitives: usize,
    /// Mean primitives per site (>= 1).
    pub redundancy: f64,
    pub view_dependent_fraction: f64,
    pub cameras: usize,
    pub ring_radius: f64,
    pub ring_height: f64,
    pub resolution: u32,
    pub fov_degrees: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            primitives: 100_000,
            redundancy: 4.0,
            view_dependent_fraction: 0.1,
            cameras: 24,
            ring_radius: 2.5,
            ring_height: 0.8,
            resolution: 256,
            fov_degrees: 45.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SynthLabels {
    pub site: Vec<u32>,
    /// Not the primary primitive of its site.
    pub duplicate: Vec<bool>,
    /// Carries strong higher-band coefficients.
    pub view_dependent: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct SynthScene<T> {
    pub scene: Scene<T>,
    /// One primitive per site with the clean opacity.
    pub ground_truth: Vec<GaussianPrimitive<T>>,
    pub labels: SynthLabels,
}

fn quat_mul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// Rotation taking local +z to `n`, then spun by `spin` about it.
fn frame(n: Vec3<f64>, spin: f64) -> [f64; 4] {
    let base = if n[2] < -0.999_999 {
        [0.0, 1.0, 0.0, 0.0]
    } else {
        math::normalize_quat([1.0 + n[2], -n[1], n[0], 0.0])
    };
    quat_mul(base, [(spin * 0.5).cos(), 0.0, 0.0, (spin * 0.5).sin()])
}

struct Site {
    position: Vec3<f64>,
    normal: Vec3<f64>,
}

fn sites(count: usize) -> (Vec<Site>, f64) {
    let cap_area = 2.0 * std::f64::consts::PI * SPHERE_RADIUS * SPHERE_RADIUS * (1.0 - CAP_MIN_Z);
    let ring_area =
        std::f64::consts::PI * (GROUND_OUTER * GROUND_OUTER - GROUND_INNER * GROUND_INNER);
    let n_cap = ((count as f64) * cap_area / (cap_area + ring_area)).round() as usize;
    let n_ring = count - n_cap.min(count);
    let spacing = ((cap_area + ring_area) / count.max(1) as f64).sqrt();
    let mut out = Vec::with_capacity(count);
    for i in 0..n_cap {
        let z = 1.0 - (1.0 - CAP_MIN_Z) * (i as f64 + 0.5) / n_cap as f64;
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let phi = i as f64 * GOLDEN_ANGLE;
        let n = [rho * phi.cos(), rho * phi.sin(), z];
        out.push(Site {
            position: math::scale(n, SPHERE_RADIUS),
            normal: n,
        });
    }
    let (a, b) = (GROUND_INNER * GROUND_INNER, GROUND_OUTER * GROUND_OUTER);
    for i in 0..n_ring {
        let r = (a + (b - a) * (i as f64 + 0.5) / n_ring as f64).sqrt();
        let phi = i as f64 * GOLDEN_ANGLE;
        out.push(Site {
            position: [r * phi.cos(), r * phi.sin(), GROUND_Z],
            normal: [0.0, 0.0, 1.0],
        });
    }
    (out, spacing)
}

fn albedo(p: Vec3<f64>, rng: &mut ChaCha8Rng) -> Vec3<f64> {
    let base = [
        0.5 + 0.3 * (3.0 * p[0] + 1.0).sin(),
        0.5 + 0.3 * (2.5 * p[1] - 0.5).sin(),
        0.5 + 0.3 * (4.0 * p[2] + 2.0 * p[0]).cos(),
    ];
    base.map(|c| (c + rng.random_range(-0.08..0.08)).clamp(0.05, 0.95))
}

/// Ring of cameras looking at the origin, z up.
pub fn camera_ring<T: Real>(spec: &SynthSpec) -> Vec<CameraView<T>> {
    let focal = spec.resolution as f64 * 0.5 / (spec.fov_degrees.to_radians() * 0.5).tan();
    (0..spec.cameras)
        .map(|i| {
            let a = i as f64 / spec.cameras as f64 * std::f64::consts::TAU;
            let eye = [
                spec.ring_radius * a.cos(),
                spec.ring_radius * a.sin(),
                spec.ring_height,
            ];
            CameraView::look_at(
                eye,
                [0.0; 3],
                [0.0, 0.0, 1.0],
                focal,
                spec.resolution,
                spec.resolution,
            )
            .cast()
        })
        .collect()
}

pub fn generate_synthetic<T: Real>(spec: &SynthSpec) -> SynthScene<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let redundancy = spec.redundancy.max(1.0);
    let site_count = ((spec.primitives as f64 / redundancy).round() as usize).max(1);
    let (sites, spacing) = sites(site_count);
    let noise = Normal::new(0.0, 0.003).expect("valid normal");
    let groups = SH_GROUPS[MAX_BANDS];

    let mut prims = Vec::new();
    let mut gt = Vec::with_capacity(sites.len());
    let mut labels = SynthLabels::default();
    for (s, site) in sites.iter().enumerate() {
        let view_dependent = rng.random::<f64>() < spec.view_dependent_fraction;
        let rgb = albedo(site.position, &mut rng);
        let sh: Vec<[f64; 3]> = (0..groups)
            .map(|_| {
                if view_dependent {
                    [0; 3].map(|_| {
                        rng.random_range(0.1..0.25) * if rng.random::<bool>() { 1.0 } else { -1.0 }
                    })
                } else {
                    [0; 3].map(|_| noise.sample(&mut rng))
                }
            })
            .collect();
        let scale = [
            spacing * rng.random_range(0.3..0.42),
            spacing * rng.random_range(0.3..0.42),
            spacing * 0.05,
        ];
        let rotation = frame(site.normal, rng.random_range(0.0..std::f64::consts::TAU));
        let clean_opacity = rng.random_range(0.85..0.97);
        let mut base = GaussianPrimitive::new(
            site.position,
            scale,
            rotation,
            clean_opacity,
            rgb_to_dc(rgb),
        );
        base.sh_rest = sh;
        gt.push(base.cast());

        // extra copies: stochastic rounding of U(0, 2(r-1)), mean r-1
        let x = rng.random::<f64>() * 2.0 * (redundancy - 1.0);
        let extra = x.floor() as usize + usize::from(rng.random::<f64>() < x.fract());
        let primary_opacity = if extra == 0 {
            clean_opacity
        } else {
            1.0 - 1.6 * (1.0 - clean_opacity)
        };
        let dup_opacity = 1.0 - (1.0 / 1.6f64).powf(1.0 / extra.max(1) as f64);
        let mut primary = base.clone();
        primary.opacity = primary_opacity;
        prims.push(primary.cast());
        labels.site.push(s as u32);
        labels.duplicate.push(false);
        labels.view_dependent.push(view_dependent);
        for _ in 0..extra {
            let mut d = base.clone();
            d.opacity = dup_opacity;
            let jitter = [0; 3].map(|_| rng.random_range(-0.02..0.02) * spacing);
            d.position = math::add(d.position, jitter);
            d.scale = d.scale.map(|v| v * rng.random_range(0.95..1.05));
            prims.push(d.cast());
            labels.site.push(s as u32);
            labels.duplicate.push(true);
            labels.view_dependent.push(view_dependent);
        }
    }
    SynthScene {
        scene: Scene::new(prims, camera_ring(spec)),
        ground_truth: gt,
        labels,
    }
}
