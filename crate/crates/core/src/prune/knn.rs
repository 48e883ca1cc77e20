//! Exact k-nearest-neighbour queries over primitive centers using a uniform hash grid.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::scalar::Real;

type Cell = [i64; 3];

pub struct HashGrid {
    points: Vec<[f64; 3]>,
    cell: f64,
    origin: [f64; 3],
    cells: HashMap<Cell, Vec<u32>>,
    /// Occupied cell range, inclusive.
    lo: Cell,
    hi: Cell,
}

impl HashGrid {
    /// Cell size targets about `per_cell` points per occupied cell for a uniform spread.
    pub fn new<T: Real>(points: &[[T; 3]], per_cell: usize) -> Self {
        let pts: Vec<[f64; 3]> = points.iter().map(|p| p.map(|x| x.as_f64())).collect();
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in &pts {
            for d in 0..3 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        let target = per_cell.max(1) as f64;
        let mut cell = if pts.is_empty() {
            1.0
        } else {
            let ext: Vec<f64> = (0..3).map(|d| max[d] - min[d]).collect();
            let longest = ext.iter().copied().fold(0.0, f64::max);
            if longest <= 0.0 {
                1.0
            } else {
                // flat or thin sets still get a sensible volume
                let floor = longest * 1e-3;
                let vol: f64 = ext.iter().map(|e| e.max(floor)).product();
                (vol * target / pts.len() as f64).cbrt()
            }
        };
        // points on surfaces or curves fill far fewer cells than the volume suggests
        for _ in 0..8 {
            if pts.len() < 2 {
                break;
            }
            let occupied: std::collections::HashSet<Cell> = pts
                .iter()
                .map(|p| [0, 1, 2].map(|d| ((p[d] - min[d]) / cell).floor() as i64))
                .collect();
            let occupancy = pts.len() as f64 / occupied.len() as f64;
            if occupancy <= 2.0 * target || occupied.len() == pts.len() {
                break;
            }
            cell *= (target / occupancy).sqrt();
        }
        let origin = if pts.is_empty() { [0.0; 3] } else { min };
        let mut grid = Self {
            points: pts,
            cell,
            origin,
            cells: HashMap::new(),
            lo: [0; 3],
            hi: [0; 3],
        };
        grid.lo = [i64::MAX; 3];
        grid.hi = [i64::MIN; 3];
        for i in 0..grid.points.len() {
            let c = grid.cell_of(grid.points[i]);
            for d in 0..3 {
                grid.lo[d] = grid.lo[d].min(c[d]);
                grid.hi[d] = grid.hi[d].max(c[d]);
            }
            grid.cells.entry(c).or_default().push(i as u32);
        }
        grid
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn cell_of(&self, p: [f64; 3]) -> Cell {
        [0, 1, 2].map(|d| ((p[d] - self.origin[d]) / self.cell).floor() as i64)
    }

    fn dist2(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.points[a], self.points[b]);
        (0..3).map(|d| (p[d] - q[d]) * (p[d] - q[d])).sum()
    }

    fn brute(&self, query: usize, k: usize) -> Vec<u32> {
        let mut all: Vec<(f64, u32)> = (0..self.points.len())
            .filter(|&j| j != query)
            .map(|j| (self.dist2(query, j), j as u32))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        all.into_iter().map(|x| x.1).collect()
    }

    /// The `k` nearest other points to point `query`, ordered by distance then index.
    pub fn knn(&self, query: usize, k: usize) -> Vec<u32> {
        let n = self.points.len();
        let k = k.min(n.saturating_sub(1));
        if k == 0 {
            return Vec::new();
        }
        let c = self.cell_of(self.points[query]);
        let span = (0..3)
            .map(|d| (c[d] - self.lo[d]).max(self.hi[d] - c[d]))
            .max()
            .unwrap_or(0);
        let mut found: Vec<(f64, u32)> = Vec::new();
        let mut visited = 0usize;
        let mut r: i64 = 0;
        loop {
            // cells on the surface of the (2r+1)³ cube
            for dx in -r..=r {
                for dy in -r..=r {
                    let edge = dx.abs() == r || dy.abs() == r;
                    let dzs: Vec<i64> = if edge {
                        (-r..=r).collect()
                    } else {
                        vec![-r, r]
                    };
                    for dz in dzs {
                        visited += 1;
                        if let Some(list) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for &j in list {
                                if j as usize != query {
                                    found.push((self.dist2(query, j as usize), j));
                                }
                            }
                        }
                        if r == 0 {
                            break;
                        }
                    }
                }
            }
            if found.len() >= k {
                found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let reach = r as f64 * self.cell;
                // anything outside the cube is farther than `reach`
                if found[k - 1].0 < reach * reach || r >= span {
                    found.truncate(k);
                    return found.into_iter().map(|x| x.1).collect();
                }
            }
            if r >= span {
                found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                found.truncate(k);
                return found.into_iter().map(|x| x.1).collect();
            }
            if visited > 4 * n + 64 {
                return self.brute(query, k);
            }
            r += 1;
        }
    }
}

/// `k` nearest neighbours of every point (self excluded), ties broken by index.
pub fn knn_all<T: Real>(points: &[[T; 3]], k: usize) -> Vec<Vec<u32>> {
    let grid = HashGrid::new(points, k.max(1));
    (0..points.len())
        .into_par_iter()
        .map(|i| grid.knn(i, k))
        .collect()
}
