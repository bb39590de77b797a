use super::V2xError;
use crate::bev::field::{CENTERNESS, CHANNELS, FLOW_X, FLOW_Y, OFFSET_X, OFFSET_Y, SEG};
use crate::bev::MotionField;
use crate::geometry::{Pose2, Vec2};

/// Resamples a field recorded at `src` (world pose) onto the grid of `ego`.
/// Segmentation takes the nearest source cell; the other channels are
/// bilinear over source neighbours that share the nearest cell's
/// foreground state, and vectors are rotated into the ego frame. Cells that
/// map outside the source grid are background.
pub fn warp_to_ego(field: &MotionField, src: &Pose2, ego: &Pose2) -> MotionField {
    if src == ego {
        return field.clone();
    }
    let g = field.grid;
    let mut out = MotionField::zeros(g, field.ego_id, field.steps());
    let to_src = src.inverse().compose(ego);
    let rot = src.yaw - ego.yaw;
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);

    // Per ego cell: nearest source cell and the four bilinear taps.
    let mut taps: Vec<Option<(usize, [(usize, f64); 4], u8)>> = Vec::with_capacity(g.len());
    for idx in 0..g.len() {
        let s = to_src.apply(g.center_of(idx));
        let Some((ix, iy)) = g.locate(s) else {
            taps.push(None);
            continue;
        };
        let (fx, fy) = g.continuous_coords(s);
        let (x0, y0) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - x0, fy - y0);
        let mut t = [(0usize, 0.0f64); 4];
        let mut n = 0u8;
        for (dx, dy, w) in [(0, 0, (1.0 - tx) * (1.0 - ty)), (1, 0, tx * (1.0 - ty)), (0, 1, (1.0 - tx) * ty), (1, 1, tx * ty)]
        {
            let (jx, jy) = (x0 as isize + dx, y0 as isize + dy);
            if jx < 0 || jy < 0 || jx >= nx || jy >= ny || w <= 0.0 {
                continue;
            }
            t[n as usize] = (g.index(jx as usize, jy as usize), w);
            n += 1;
        }
        taps.push(Some((g.index(ix, iy), t, n)));
    }

    for step in 0..field.steps() {
        let seg = field.channel(step, SEG);
        for (idx, tap) in taps.iter().enumerate() {
            let Some((near, t, n)) = tap else { continue };
            let fg = seg[*near] > 0.5;
            let mut wsum = 0.0;
            let mut vals = [0.0f64; CHANNELS];
            for &(j, w) in &t[..*n as usize] {
                if (seg[j] > 0.5) != fg {
                    continue;
                }
                wsum += w;
                for ch in [CENTERNESS, OFFSET_X, OFFSET_Y, FLOW_X, FLOW_Y] {
                    vals[ch] += w * f64::from(field.channel(step, ch)[j]);
                }
            }
            for ch in [CENTERNESS, OFFSET_X, OFFSET_Y, FLOW_X, FLOW_Y] {
                vals[ch] = if wsum > 0.0 { vals[ch] / wsum } else { f64::from(field.channel(step, ch)[*near]) };
            }
            let off = Vec2::new(vals[OFFSET_X], vals[OFFSET_Y]).rotate(rot);
            let flow = Vec2::new(vals[FLOW_X], vals[FLOW_Y]).rotate(rot);
            out.channel_mut(step, SEG)[idx] = seg[*near];
            out.channel_mut(step, CENTERNESS)[idx] = vals[CENTERNESS] as f32;
            out.channel_mut(step, OFFSET_X)[idx] = off.x as f32;
            out.channel_mut(step, OFFSET_Y)[idx] = off.y as f32;
            out.channel_mut(step, FLOW_X)[idx] = flow.x as f32;
            out.channel_mut(step, FLOW_Y)[idx] = flow.y as f32;
        }
    }
    out
}

/// Per-cell average over the rigs that observed something there.
///
/// A field contributes segmentation, offset and flow on covered cells where
/// its segmentation is positive, and centerness where its centerness is
/// positive. A rig that covers a cell but saw nothing there does not dilute
/// what another rig saw. `coverage[i]` is indexed by cell and applies to
/// every step; cells nobody contributes to stay background.
pub fn fuse_average(fields: &[MotionField], coverage: &[Vec<bool>]) -> Result<MotionField, V2xError> {
    let Some(first) = fields.first() else {
        return Err(V2xError::MaskCount(coverage.len(), 0));
    };
    if coverage.len() != fields.len() {
        return Err(V2xError::MaskCount(coverage.len(), fields.len()));
    }
    let n = first.grid.len();
    if fields.iter().any(|f| !f.same_shape(first)) || coverage.iter().any(|c| c.len() != n) {
        return Err(V2xError::GridMismatch);
    }
    if fields.len() == 1 && coverage[0].iter().all(|&c| c) {
        return Ok(first.clone());
    }
    let mut out = MotionField::zeros(first.grid, first.ego_id, first.steps());
    const GATED: [usize; 5] = [SEG, OFFSET_X, OFFSET_Y, FLOW_X, FLOW_Y];
    let mut acc = vec![[0.0f64; CHANNELS]; n];
    let mut counts = vec![(0u32, 0u32); n];
    for step in 0..first.steps() {
        acc.fill([0.0; CHANNELS]);
        counts.fill((0, 0));
        // Fields are summed in order per cell.
        for (f, cov) in fields.iter().zip(coverage) {
            let seg = f.channel(step, SEG);
            let cen = f.channel(step, CENTERNESS);
            let gated = GATED.map(|ch| f.channel(step, ch));
            for idx in 0..n {
                if !cov[idx] {
                    continue;
                }
                if seg[idx] > 0.0 {
                    counts[idx].0 += 1;
                    for (k, &ch) in GATED.iter().enumerate() {
                        acc[idx][ch] += f64::from(gated[k][idx]);
                    }
                }
                if cen[idx] > 0.0 {
                    counts[idx].1 += 1;
                    acc[idx][CENTERNESS] += f64::from(cen[idx]);
                }
            }
        }
        for ch in GATED {
            let dst = out.channel_mut(step, ch);
            for idx in 0..n {
                let ns = counts[idx].0;
                if ns > 0 {
                    dst[idx] = (acc[idx][ch] / f64::from(ns)) as f32;
                }
            }
        }
        let dst = out.channel_mut(step, CENTERNESS);
        for idx in 0..n {
            let nc = counts[idx].1;
            if nc > 0 {
                dst[idx] = (acc[idx][CENTERNESS] / f64::from(nc)) as f32;
            }
        }
    }
    Ok(out)
}

/// Cells where a field holds any content, per step, restricted to `coverage`.
pub fn content_masks(field: &MotionField, coverage: &[bool]) -> Vec<Vec<bool>> {
    (0..field.steps())
        .map(|s| {
            (0..field.grid.len())
                .map(|i| coverage[i] && (field.channel(s, SEG)[i] > 0.0 || field.channel(s, CENTERNESS)[i] > 0.0))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bev::{encode_placed, PlacedAgent};
    use crate::geometry::GridSpec;

    fn grid() -> GridSpec {
        GridSpec { x_min: -10.0, x_max: 10.0, y_min: -10.0, y_max: 10.0, cell: 0.5 }
    }

    fn car(x: f64, y: f64, yaw: f64) -> PlacedAgent {
        PlacedAgent { id: 1, pose: Pose2::new(x, y, yaw), length: 4.0, width: 2.0 }
    }

    #[test]
    fn identity_warp() {
        let (f, _) = encode_placed(&grid(), 1, &[vec![car(1.0, 2.0, 0.3)]]);
        let p = Pose2::new(4.0, 5.0, 1.0);
        assert_eq!(warp_to_ego(&f, &p, &p), f);
    }

    #[test]
    fn one_cell_shift() {
        let g = grid();
        let (f, _) = encode_placed(&g, 1, &[vec![car(1.0, 2.0, 0.0)], vec![car(2.0, 2.0, 0.0)]]);
        let w = warp_to_ego(&f, &Pose2::new(0.5, 0.0, 0.0), &Pose2::IDENTITY);
        let (want, _) = encode_placed(&g, 1, &[vec![car(1.5, 2.0, 0.0)], vec![car(2.5, 2.0, 0.0)]]);
        for ch in 0..CHANNELS {
            for (a, b) in w.channel(0, ch).iter().zip(want.channel(0, ch)) {
                assert!((a - b).abs() < 1e-5, "channel {ch}");
            }
        }
    }

    #[test]
    fn quarter_turn_matches_per_cell_transform() {
        let g = grid();
        let (f, _) = encode_placed(&g, 1, &[vec![car(3.0, -1.0, 0.2)]]);
        let src = Pose2::new(2.0, 1.0, std::f64::consts::FRAC_PI_2);
        let ego = Pose2::new(-1.0, 0.5, 0.0);
        let w = warp_to_ego(&f, &src, &ego);
        // Oracle: map every ego cell center through world into the source and read the cell there.
        for idx in 0..g.len() {
            let world = ego.apply(g.center_of(idx));
            let local = src.inverse().apply(world);
            let want = g.locate(local).map_or(0.0, |(ix, iy)| f.seg(0)[g.index(ix, iy)]);
            assert_eq!(w.seg(0)[idx], want);
        }
        // Offsets still point at the (transformed) center.
        let c_ego = ego.inverse().apply(src.apply(Vec2::new(3.0, -1.0)));
        for idx in (0..g.len()).filter(|&i| w.seg(0)[i] > 0.5) {
            let p = g.center_of(idx) + Vec2::new(f64::from(w.channel(0, OFFSET_X)[idx]), f64::from(w.channel(0, OFFSET_Y)[idx]));
            assert!(p.distance(c_ego) < 1e-3);
        }
    }

    #[test]
    fn fusion_cases() {
        let g = grid();
        let (a, _) = encode_placed(&g, 1, &[vec![car(-5.0, 0.0, 0.0)]]);
        let (b, _) = encode_placed(&g, 1, &[vec![PlacedAgent { id: 2, ..car(5.0, 0.0, 0.0) }]]);
        let full = vec![true; g.len()];
        assert_eq!(fuse_average(std::slice::from_ref(&a), std::slice::from_ref(&full)).unwrap(), a);
        assert_eq!(fuse_average(&[a.clone(), a.clone()], &[full.clone(), full.clone()]).unwrap(), a);
        let left: Vec<bool> = (0..g.len()).map(|i| g.center_of(i).x < 0.0).collect();
        let right: Vec<bool> = left.iter().map(|b| !b).collect();
        let u = fuse_average(&[a.clone(), b.clone()], &[left, right]).unwrap();
        for ch in 0..CHANNELS {
            for i in 0..g.len() {
                let want = a.channel(0, ch)[i] + b.channel(0, ch)[i];
                assert!((u.channel(0, ch)[i] - want).abs() < 1e-6);
            }
        }
        let small = MotionField::zeros(GridSpec::motion(), 1, 1);
        assert!(fuse_average(&[a, small], &[full.clone(), full]).is_err());
    }

    #[test]
    fn content_mask_respects_coverage() {
        let g = grid();
        let (a, _) = encode_placed(&g, 1, &[vec![car(0.0, 0.0, 0.0)]]);
        let m = content_masks(&a, &vec![true; g.len()]);
        assert!(m[0].iter().any(|&b| b));
        assert!(content_masks(&a, &vec![false; g.len()])[0].iter().all(|&b| !b));
    }
}
