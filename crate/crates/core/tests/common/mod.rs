//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatpress::{CameraView, GaussianPrimitive};

pub type P = GaussianPrimitive<f64>;
pub type V = CameraView<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rotation matrix via the axis-angle (Rodrigues) formula.
pub fn rodrigues(q: [f64; 4]) -> [[f64; 3]; 3] {
    let n = (q.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let q = q.map(|v| v / n);
    let s = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if s < 1e-300 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let theta = 2.0 * s.atan2(q[0]);
    let [kx, ky, kz] = [q[1] / s, q[2] / s, q[3] / s];
    let k = [[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]];
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let k2: f64 = (0..3).map(|m| k[i][m] * k[m][j]).sum();
            r[i][j] =
                f64::from(u8::from(i == j)) + theta.sin() * k[i][j] + (1.0 - theta.cos()) * k2;
        }
    }
    r
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Associated Legendre `P_l^m(x)` with the Condon-Shortley phase, `m >= 0`.
pub fn legendre(l: u32, m: u32, x: f64) -> f64 {
    // P_m^m, then upward recurrence in l
    let mut pmm = 1.0;
    let s = (1.0 - x * x).max(0.0).sqrt();
    for i in 0..m {
        pmm *= -(2.0 * f64::from(i) + 1.0) * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2.0 * f64::from(m) + 1.0) * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut pl = 0.0;
    for ll in (m + 2)..=l {
        let llf = f64::from(ll);
        pl =
            ((2.0 * llf - 1.0) * x * pm1 - (llf + f64::from(m) - 1.0) * pmm) / (llf - f64::from(m));
        pmm = pm1;
        pm1 = pl;
    }
    pl
}

/// Real spherical harmonic `Y_l^m` at unit direction `d`, `φ = atan2(y, x)`, `cos θ = z`.
pub fn real_sh(l: u32, m: i32, d: [f64; 3]) -> f64 {
    let am = m.unsigned_abs();
    let k = ((2.0 * f64::from(l) + 1.0) / (4.0 * std::f64::consts::PI) * factorial(l - am)
        / factorial(l + am))
    .sqrt();
    let phi = d[1].atan2(d[0]);
    let p = legendre(l, am, d[2].clamp(-1.0, 1.0));
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => k * p,
        std::cmp::Ordering::Greater => {
            std::f64::consts::SQRT_2 * k * p * (f64::from(m) * phi).cos()
        }
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * k * p * (f64::from(am) * phi).sin(),
    }
}

/// Color from the Legendre basis: `0.5 + Σ_{l<=bands} Σ_m Y_l^m(d)·c_lm`.
pub fn oracle_color(p: &P, d: [f64; 3], bands: u32) -> [f64; 3] {
    let mut out = [0, 1, 2].map(|c| 0.5 + real_sh(0, 0, d) * p.base_color[c]);
    let mut g = 0;
    for l in 1..=bands.min(p.band_count() as u32) {
        for m in -(l as i32)..=(l as i32) {
            let y = real_sh(l, m, d);
            for (c, o) in out.iter_mut().enumerate() {
                *o += y * p.sh_rest[g][c];
            }
            g += 1;
        }
    }
    out
}

pub fn random_view(r: &mut ChaCha8Rng, w: u32, h: u32) -> V {
    let a = r.random_range(0.0..std::f64::consts::TAU);
    let dist = r.random_range(2.5..4.0);
    let eye = [dist * a.cos(), dist * a.sin(), r.random_range(-1.0..1.5)];
    let target = [
        r.random_range(-0.2..0.2),
        r.random_range(-0.2..0.2),
        r.random_range(-0.2..0.2),
    ];
    let mut v = CameraView::look_at(
        eye,
        target,
        [0.0, 0.0, 1.0],
        r.random_range(40.0..90.0),
        w,
        h,
    );
    v.focal_y = v.focal_x * r.random_range(0.8..1.25);
    v.principal_x += r.random_range(-3.0..3.0);
    v.principal_y += r.random_range(-3.0..3.0);
    v
}

pub fn random_quat(r: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let q = [0; 4].map(|_| r.random_range(-1.0..1.0));
        let n = q.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return q.map(|v| v / n);
        }
    }
}

/// Random primitive near the origin with band count `bands`.
pub fn random_prim(r: &mut ChaCha8Rng, bands: usize, extent: f64) -> P {
    let mut p = GaussianPrimitive::new(
        [0; 3].map(|_| r.random_range(-extent..extent)),
        [0; 3].map(|_| r.random_range(0.02..0.3)),
        random_quat(r),
        r.random_range(0.05..0.99),
        [0; 3].map(|_| r.random_range(-1.5..1.5)),
    );
    p.sh_rest = (0..splatpress::scene::sh_groups(bands))
        .map(|_| [0; 3].map(|_| r.random_range(-0.4..0.4)))
        .collect();
    p
}

pub struct BruteView {
    pub image: Vec<[f64; 3]>,
    pub transmittance: Vec<f64>,
    /// Σ T and pixel count per primitive (contributed pixels only).
    pub t_sum: Vec<f64>,
    pub count: Vec<u32>,
}

struct Projected {
    id: usize,
    depth: f64,
    mean: [f64; 2],
    inv: [[f64; 2]; 2],
    opacity: f64,
    color: [f64; 3],
}

fn matmul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut o = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            o[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    o
}

fn transpose(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut o = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            o[i][j] = a[j][i];
        }
    }
    o
}

/// Every primitive at every pixel, no tiling or bounding boxes; near 0.2,
/// dilation 0.3, cutoff 1/255, termination below 1e-4, black background.
pub fn brute_render(prims: &[P], v: &V) -> BruteView {
    let (w, h) = (v.width as usize, v.height as usize);
    let cam = {
        let t = v.translation;
        let r = &v.rotation;
        [0, 1, 2].map(|j| -(r[0][j] * t[0] + r[1][j] * t[1] + r[2][j] * t[2]))
    };
    let mut list = Vec::new();
    for (id, p) in prims.iter().enumerate() {
        let pc: [f64; 3] = [0, 1, 2].map(|i| {
            (0..3)
                .map(|j| v.rotation[i][j] * p.position[j])
                .sum::<f64>()
                + v.translation[i]
        });
        if pc[2] <= 0.2 {
            continue;
        }
        let rot = rodrigues(p.rotation);
        let s2 = [
            [p.scale[0].powi(2), 0.0, 0.0],
            [0.0, p.scale[1].powi(2), 0.0],
            [0.0, 0.0, p.scale[2].powi(2)],
        ];
        let world = matmul(&matmul(&rot, &s2), &transpose(&rot));
        let camcov = matmul(&matmul(&v.rotation, &world), &transpose(&v.rotation));
        let lim = |lo: f64, hi: f64, u: f64| u.clamp(lo - 0.15 * (hi - lo), hi + 0.15 * (hi - lo));
        let ux = lim(
            -v.principal_x / v.focal_x,
            (w as f64 - v.principal_x) / v.focal_x,
            pc[0] / pc[2],
        );
        let uy = lim(
            -v.principal_y / v.focal_y,
            (h as f64 - v.principal_y) / v.focal_y,
            pc[1] / pc[2],
        );
        let j = [
            [v.focal_x / pc[2], 0.0, -v.focal_x * ux / pc[2]],
            [0.0, v.focal_y / pc[2], -v.focal_y * uy / pc[2]],
        ];
        let mut cov = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                cov[a][b] = (0..3)
                    .map(|k| {
                        (0..3)
                            .map(|l| j[a][k] * camcov[k][l] * j[b][l])
                            .sum::<f64>()
                    })
                    .sum();
            }
        }
        cov[0][0] += 0.3;
        cov[1][1] += 0.3;
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        if det <= 0.0 {
            continue;
        }
        let inv = [
            [cov[1][1] / det, -cov[0][1] / det],
            [-cov[1][0] / det, cov[0][0] / det],
        ];
        let d = {
            let e = [
                p.position[0] - cam[0],
                p.position[1] - cam[1],
                p.position[2] - cam[2],
            ];
            let n = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
            e.map(|x| x / n)
        };
        list.push(Projected {
            id,
            depth: pc[2],
            mean: [
                v.focal_x * pc[0] / pc[2] + v.principal_x,
                v.focal_y * pc[1] / pc[2] + v.principal_y,
            ],
            inv,
            opacity: p.opacity,
            color: oracle_color(p, d, 3).map(|c| c.max(0.0)),
        });
    }
    list.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.id.cmp(&b.id)));
    let mut out = BruteView {
        image: vec![[0.0; 3]; w * h],
        transmittance: vec![1.0; w * h],
        t_sum: vec![0.0; prims.len()],
        count: vec![0; prims.len()],
    };
    for y in 0..h {
        for x in 0..w {
            let mut t = 1.0;
            let mut acc = [0.0; 3];
            for s in &list {
                let d = [x as f64 + 0.5 - s.mean[0], y as f64 + 0.5 - s.mean[1]];
                let q = d[0] * (s.inv[0][0] * d[0] + s.inv[0][1] * d[1])
                    + d[1] * (s.inv[1][0] * d[0] + s.inv[1][1] * d[1]);
                let alpha = if q < 0.0 {
                    0.0
                } else {
                    s.opacity * (-0.5 * q).exp()
                };
                if alpha < 1.0 / 255.0 {
                    continue;
                }
                if t < 1e-4 {
                    break;
                }
                for c in 0..3 {
                    acc[c] += s.color[c] * alpha * t;
                }
                out.t_sum[s.id] += t;
                out.count[s.id] += 1;
                t *= 1.0 - alpha;
            }
            out.image[y * w + x] = acc;
            out.transmittance[y * w + x] = t;
        }
    }
    out
}

/// `Σ_d (Δ_d/(s'_d + r))² <= 1` with Δ expressed in the frame of `other`.
pub fn oracle_intersects(other: &P, center: [f64; 3], r: f64) -> bool {
    let rot = rodrigues(other.rotation);
    let delta = [0, 1, 2].map(|i| center[i] - other.position[i]);
    let mut acc = 0.0;
    for d in 0..3 {
        let local: f64 = (0..3).map(|i| rot[i][d] * delta[i]).sum();
        acc += (local / (other.scale[d] + r)).powi(2);
    }
    acc <= 1.0
}

/// Exhaustive region counts and min-propagated final scores with every
/// other primitive as a candidate; `radius[i] = None` marks invisible primitives.
pub fn all_pairs_scores(prims: &[P], radius: &[Option<f64>]) -> (Vec<Option<u32>>, Vec<u32>) {
    let n = prims.len();
    let mut region = vec![None; n];
    let mut best = vec![u32::MAX; n];
    let mut members = Vec::new();
    for g in 0..n {
        let Some(r) = radius[g] else { continue };
        let m: Vec<usize> = (0..n)
            .filter(|&j| j == g || oracle_intersects(&prims[j], prims[g].position, r))
            .collect();
        region[g] = Some(m.len() as u32);
        members.push(m);
    }
    for m in &members {
        for &j in m {
            best[j] = best[j].min(m.len() as u32);
        }
    }
    (
        region,
        best.into_iter()
            .map(|b| if b == u32::MAX { 1 } else { b })
            .collect(),
    )
}

/// Reference candidate and cull sets from scores.
pub fn reference_cull(
    opacity: &[f64],
    scores: &[u32],
    visible: &[bool],
    lambda: f64,
    floor: f64,
) -> (Vec<usize>, Vec<usize>) {
    let vis: Vec<f64> = (0..scores.len())
        .filter(|&i| visible[i])
        .map(|i| f64::from(scores[i]))
        .collect();
    let mean = vis.iter().sum::<f64>() / vis.len().max(1) as f64;
    let var = vis.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / vis.len().max(1) as f64;
    let tau = (mean + lambda * var.sqrt()).max(floor);
    let cand: Vec<usize> = (0..scores.len())
        .filter(|&i| visible[i] && f64::from(scores[i]) > tau)
        .collect();
    let mut order = cand.clone();
    order.sort_by(|&a, &b| opacity[a].total_cmp(&opacity[b]).then(a.cmp(&b)));
    order.truncate(cand.len() / 2);
    order.sort_unstable();
    (cand, order)
}

pub fn unit3(v: [f64; 3]) -> [f64; 3] {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / n)
}

/// Weighted color mean, standard deviation and truncation distances from
/// brute-force renders; `None` when no view gives the primitive any weight.
pub struct OracleSh {
    pub mean: [f64; 3],
    pub sigma: [f64; 3],
    pub d: [f64; 3],
}

pub fn oracle_sh_stats(p: &P, id: usize, views: &[V], brute: &[BruteView]) -> Option<OracleSh> {
    let mut obs = Vec::new();
    for (v, b) in views.iter().zip(brute) {
        if b.count[id] == 0 {
            continue;
        }
        let t = v.translation;
        let cam = [0, 1, 2].map(|j| -(0..3).map(|i| v.rotation[i][j] * t[i]).sum::<f64>());
        let dir = unit3([0, 1, 2].map(|i| p.position[i] - cam[i]));
        let w = b.t_sum[id] / f64::from(b.count[id]);
        let full = oracle_color(p, dir, 3);
        let trunc: Vec<[f64; 3]> = (0..3).map(|q| oracle_color(p, dir, q)).collect();
        obs.push((w, full, trunc));
    }
    let wsum: f64 = obs.iter().map(|o| o.0).sum();
    if obs.is_empty() || wsum <= 0.0 {
        return None;
    }
    let mean = [0, 1, 2].map(|c| obs.iter().map(|o| o.0 * o.1[c]).sum::<f64>() / wsum);
    let sigma = [0, 1, 2].map(|c| {
        (obs.iter()
            .map(|o| o.0 * (o.1[c] - mean[c]).powi(2))
            .sum::<f64>()
            / wsum)
            .sqrt()
    });
    let d = [0, 1, 2].map(|q| {
        obs.iter()
            .map(|(w, full, tr)| {
                w * (0..3)
                    .map(|c| (full[c] - tr[q][c]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum::<f64>()
            / wsum
    });
    Some(OracleSh { mean, sigma, d })
}
