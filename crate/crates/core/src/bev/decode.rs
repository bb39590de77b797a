use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::field::{InstanceMap, MotionField, CENTERNESS, FLOW_X, FLOW_Y, OFFSET_X, OFFSET_Y, SEG};
use crate::geometry::{convex_hull, GridSpec, Polygon, Vec2};
use crate::rng;

/// Side of the square used for instances too small to hull.
pub const DEGENERATE_SQUARE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub seg_threshold: f32,
    pub center_threshold: f32,
    /// Chebyshev radius for local maxima and non-max suppression, cells.
    pub nms_radius: usize,
    /// Cells whose offset target is farther than this from every center stay background, meters.
    pub assign_radius: f64,
    /// Association gate between consecutive timesteps, meters.
    pub gate: f64,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self { seg_threshold: 0.5, center_threshold: 0.3, nms_radius: 3, assign_radius: 3.0, gate: 3.0 }
    }
}

/// Centerness peaks at `step`, strongest first: `(cell index, refined center)`.
fn find_centers(field: &MotionField, step: usize, p: &DecodeParams) -> Vec<(usize, Vec2)> {
    let g = &field.grid;
    let cen = field.channel(step, CENTERNESS);
    let (nx, ny) = (g.nx(), g.ny());
    let r = p.nms_radius as isize;
    let mut peaks: Vec<usize> = Vec::new();
    for (idx, &v) in cen.iter().enumerate() {
        if v <= p.center_threshold {
            continue;
        }
        let (ix, iy) = g.unindex(idx);
        let mut is_max = true;
        'scan: for dx in -r..=r {
            let jx = ix as isize + dx;
            if jx < 0 || jx >= nx as isize {
                continue;
            }
            for dy in -r..=r {
                let jy = iy as isize + dy;
                if jy < 0 || jy >= ny as isize || (dx == 0 && dy == 0) {
                    continue;
                }
                let j = g.index(jx as usize, jy as usize);
                let w = cen[j];
                if w > v || (w == v && j < idx) {
                    is_max = false;
                    break 'scan;
                }
            }
        }
        if is_max {
            peaks.push(idx);
        }
    }
    peaks.sort_by(|&a, &b| cen[b].total_cmp(&cen[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for idx in peaks {
        let (ix, iy) = g.unindex(idx);
        let close = kept.iter().any(|&k| {
            let (kx, ky) = g.unindex(k);
            ix.abs_diff(kx) <= p.nms_radius && iy.abs_diff(ky) <= p.nms_radius
        });
        if !close {
            kept.push(idx);
        }
    }
    let ox = field.channel(step, OFFSET_X);
    let oy = field.channel(step, OFFSET_Y);
    let seg = field.channel(step, SEG);
    kept.into_iter()
        .map(|idx| {
            let mut c = g.center_of(idx);
            if seg[idx] > p.seg_threshold {
                c += Vec2::new(f64::from(ox[idx]), f64::from(oy[idx]));
            }
            (idx, c)
        })
        .collect()
}

struct Cluster {
    cells: Vec<usize>,
    center: Vec2,
    flow: Vec2,
}

/// Groups foreground cells of `step` around the detected centers.
fn cluster_step(field: &MotionField, step: usize, p: &DecodeParams) -> Vec<Cluster> {
    let g = &field.grid;
    let centers = find_centers(field, step, p);
    let mut clusters: Vec<Cluster> =
        centers.iter().map(|_| Cluster { cells: Vec::new(), center: Vec2::ZERO, flow: Vec2::ZERO }).collect();
    if centers.is_empty() {
        return clusters;
    }
    let seg = field.channel(step, SEG);
    let ox = field.channel(step, OFFSET_X);
    let oy = field.channel(step, OFFSET_Y);
    let fx = field.channel(step, FLOW_X);
    let fy = field.channel(step, FLOW_Y);
    let r2 = p.assign_radius * p.assign_radius;
    let mut sums: Vec<(Vec2, Vec2)> = vec![(Vec2::ZERO, Vec2::ZERO); centers.len()];
    for (idx, &s) in seg.iter().enumerate() {
        if s <= p.seg_threshold {
            continue;
        }
        let target = g.center_of(idx) + Vec2::new(f64::from(ox[idx]), f64::from(oy[idx]));
        let mut best = (f64::INFINITY, usize::MAX);
        for (k, (_, c)) in centers.iter().enumerate() {
            let d2 = (target - *c).norm_sq();
            if d2 < best.0 {
                best = (d2, k);
            }
        }
        if best.0 <= r2 {
            clusters[best.1].cells.push(idx);
            sums[best.1].0 += target;
            sums[best.1].1 += Vec2::new(f64::from(fx[idx]), f64::from(fy[idx]));
        }
    }
    for (k, cl) in clusters.iter_mut().enumerate() {
        if cl.cells.is_empty() {
            cl.center = centers[k].1;
        } else {
            let n = cl.cells.len() as f64;
            cl.center = sums[k].0 / n;
            cl.flow = sums[k].1 / n;
        }
    }
    clusters.retain(|c| !c.cells.is_empty());
    clusters
}

/// Instance segmentation per timestep with ids carried forward by flow.
pub fn decode_instances(field: &MotionField, params: &DecodeParams) -> InstanceMap {
    let g = field.grid;
    let mut imap = InstanceMap::empty(g, field.steps());
    let mut next_id: u32 = 1;
    let mut prev: Vec<(u32, Vec2)> = Vec::new(); // (id, predicted center at this step)
    for step in 0..field.steps() {
        let clusters = cluster_step(field, step, params);
        let mut assigned: Vec<Option<u32>> = vec![None; clusters.len()];
        if step > 0 && !prev.is_empty() {
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for (ci, c) in clusters.iter().enumerate() {
                for (pi, (_, pc)) in prev.iter().enumerate() {
                    let d = c.center.distance(*pc);
                    if d <= params.gate {
                        pairs.push((d, pi, ci));
                    }
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut used_prev = vec![false; prev.len()];
            for (_, pi, ci) in pairs {
                if used_prev[pi] || assigned[ci].is_some() {
                    continue;
                }
                used_prev[pi] = true;
                assigned[ci] = Some(prev[pi].0);
            }
        }
        let ids = imap.ids_mut(step);
        let mut next_prev = Vec::with_capacity(clusters.len());
        for (ci, c) in clusters.iter().enumerate() {
            let id = assigned[ci].unwrap_or_else(|| {
                let id = next_id;
                next_id += 1;
                id
            });
            for &idx in &c.cells {
                ids[idx] = id;
            }
            next_prev.push((id, c.center + c.flow));
        }
        prev = next_prev;
    }
    imap
}

/// Convex polygon per instance at `step`: the hull of the instance's cell
/// footprints. Instances of fewer than three cells become a 0.5 m square
/// around their centroid.
pub fn instances_to_polygons(imap: &InstanceMap, step: usize) -> Vec<(u32, Polygon)> {
    let g = &imap.grid;
    let h = 0.5 * g.cell;
    imap.cells_by_instance(step)
        .into_iter()
        .map(|(id, cells)| (id, cells_polygon(g, &cells, h)))
        .collect()
}

fn square(c: Vec2, side: f64) -> Polygon {
    let h = 0.5 * side;
    Polygon::rect(c.x - h, c.y - h, c.x + h, c.y + h).expect("positive side")
}

fn cells_polygon(g: &GridSpec, cells: &[usize], h: f64) -> Polygon {
    let centroid = cells.iter().fold(Vec2::ZERO, |acc, &i| acc + g.center_of(i)) / cells.len() as f64;
    if cells.len() < 3 {
        return square(centroid, DEGENERATE_SQUARE);
    }
    let mut pts = Vec::with_capacity(cells.len() * 4);
    for &i in cells {
        let c = g.center_of(i);
        pts.extend([
            Vec2::new(c.x - h, c.y - h),
            Vec2::new(c.x + h, c.y - h),
            Vec2::new(c.x + h, c.y + h),
            Vec2::new(c.x - h, c.y + h),
        ]);
    }
    convex_hull(&pts).unwrap_or_else(|| square(centroid, DEGENERATE_SQUARE))
}

/// The input field followed by `n` copies whose flow is jittered by
/// zero-mean Gaussian noise (`sigma` meters) on foreground cells.
pub fn sample_field_variants(field: &MotionField, n: usize, sigma: f64, seed: u64) -> Vec<MotionField> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(field.clone());
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    for v in 0..n {
        let mut f = field.clone();
        if sigma > 0.0 {
            let mut r = ChaCha8Rng::seed_from_u64(rng::derive_seed(seed, "field-variant", v as u64));
            for step in 0..f.steps() {
                let fg: Vec<usize> =
                    f.channel(step, SEG).iter().enumerate().filter(|(_, &s)| s > 0.0).map(|(i, _)| i).collect();
                for ch in [FLOW_X, FLOW_Y] {
                    let data = f.channel_mut(step, ch);
                    for &i in &fg {
                        data[i] += normal.sample(&mut r) as f32;
                    }
                }
            }
        }
        out.push(f);
    }
    out
}
