use serde::{Deserialize, Serialize};

use super::{GeometryError, OrientedBox, Vec2};

/// Regular BEV grid. Cell `(ix, iy)` covers `[x_min + ix·cell, x_min + (ix+1)·cell)`
/// and likewise in y; flat index is `ix * ny + iy` (x-major rows).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub cell: f64,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, cell: f64) -> Result<Self, GeometryError> {
        let g = Self { x_min, x_max, y_min, y_max, cell };
        g.validate()?;
        Ok(g)
    }

    /// Motion grid: [-50, 50] m at 0.5 m.
    pub fn motion() -> Self {
        Self { x_min: -50.0, x_max: 50.0, y_min: -50.0, y_max: 50.0, cell: 0.5 }
    }

    /// Detection grid: [-51.2, 51.2] m at 0.8 m.
    pub fn detection() -> Self {
        Self { x_min: -51.2, x_max: 51.2, y_min: -51.2, y_max: 51.2, cell: 0.8 }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let vals = [self.x_min, self.x_max, self.y_min, self.y_max, self.cell];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if !(self.cell > 0.0 && self.x_max > self.x_min && self.y_max > self.y_min) {
            return Err(GeometryError::InvalidGrid);
        }
        let nx = (self.x_max - self.x_min) / self.cell;
        let ny = (self.y_max - self.y_min) / self.cell;
        if (nx - nx.round()).abs() > 1e-6 || (ny - ny.round()).abs() > 1e-6 {
            return Err(GeometryError::InvalidGrid);
        }
        if nx.round() * ny.round() > 16.0e6 {
            return Err(GeometryError::InvalidGrid);
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        ((self.x_max - self.x_min) / self.cell).round() as usize
    }

    pub fn ny(&self) -> usize {
        ((self.y_max - self.y_min) / self.cell).round() as usize
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny() + iy
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize) {
        let ny = self.ny();
        (idx / ny, idx % ny)
    }

    #[inline]
    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(self.x_min + (ix as f64 + 0.5) * self.cell, self.y_min + (iy as f64 + 0.5) * self.cell)
    }

    pub fn center_of(&self, idx: usize) -> Vec2 {
        let (ix, iy) = self.unindex(idx);
        self.cell_center(ix, iy)
    }

    /// Cell containing `p`, if inside the grid.
    pub fn locate(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.x_min) / self.cell).floor();
        let fy = ((p.y - self.y_min) / self.cell).floor();
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        (ix < self.nx() && iy < self.ny()).then_some((ix, iy))
    }

    pub fn contains_point(&self, p: Vec2) -> bool {
        p.x >= self.x_min && p.x < self.x_max && p.y >= self.y_min && p.y < self.y_max
    }

    /// Continuous cell coordinates: cell centers sit at integer values.
    pub fn continuous_coords(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.x_min) / self.cell - 0.5, (p.y - self.y_min) / self.cell - 0.5)
    }
}

/// Flat indices of cells whose centers lie inside the box, ascending.
pub fn rasterize_box(b: &OrientedBox, grid: &GridSpec) -> Vec<usize> {
    let (lo, hi) = b.aabb();
    let c = grid.cell;
    let ix_lo = ((lo.x - grid.x_min) / c - 0.5).ceil().max(0.0);
    let iy_lo = ((lo.y - grid.y_min) / c - 0.5).ceil().max(0.0);
    let ix_hi = ((hi.x - grid.x_min) / c - 0.5).floor().min(grid.nx() as f64 - 1.0);
    let iy_hi = ((hi.y - grid.y_min) / c - 0.5).floor().min(grid.ny() as f64 - 1.0);
    let mut out = Vec::new();
    if !(ix_lo <= ix_hi && iy_lo <= iy_hi) {
        return out;
    }
    // Tolerance band so rounding in the ceil/floor window never drops a boundary cell.
    let (ix_lo, ix_hi) = ((ix_lo as usize).saturating_sub(1), (ix_hi as usize + 1).min(grid.nx() - 1));
    let (iy_lo, iy_hi) = ((iy_lo as usize).saturating_sub(1), (iy_hi as usize + 1).min(grid.ny() - 1));
    for ix in ix_lo..=ix_hi {
        for iy in iy_lo..=iy_hi {
            if b.contains(grid.cell_center(ix, iy)) {
                out.push(grid.index(ix, iy));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;

    fn brute(b: &OrientedBox, g: &GridSpec) -> Vec<usize> {
        (0..g.len()).filter(|&i| b.contains(g.center_of(i))).collect()
    }

    #[test]
    fn four_by_two_box() {
        let g = GridSpec::motion();
        let b = OrientedBox::new(Pose2::IDENTITY, 4.0, 2.0).unwrap();
        let cells = rasterize_box(&b, &g);
        assert_eq!(cells.len(), 32);
        assert_eq!(cells, brute(&b, &g));
    }

    #[test]
    fn box_outside_grid() {
        let g = GridSpec::motion();
        let b = OrientedBox::new(Pose2::new(80.0, 0.0, 0.3), 4.0, 2.0).unwrap();
        assert!(rasterize_box(&b, &g).is_empty());
    }

    #[test]
    fn single_cell_box() {
        let g = GridSpec::motion();
        let c = g.cell_center(37, 120);
        let b = OrientedBox::new(Pose2::new(c.x, c.y, 0.0), 0.5, 0.5).unwrap();
        assert_eq!(rasterize_box(&b, &g), vec![g.index(37, 120)]);
    }

    #[test]
    fn rotated_box_matches_brute_force() {
        let g = GridSpec::new(-10.0, 10.0, -10.0, 10.0, 0.5).unwrap();
        for k in 0..40 {
            let yaw = k as f64 * 0.17;
            let b = OrientedBox::new(Pose2::new(0.3 * k as f64 - 6.0, 1.1 - 0.05 * k as f64, yaw), 4.6, 1.9).unwrap();
            assert_eq!(rasterize_box(&b, &g), brute(&b, &g));
        }
    }

    #[test]
    fn shapes() {
        assert_eq!((GridSpec::motion().nx(), GridSpec::motion().ny()), (200, 200));
        assert_eq!((GridSpec::detection().nx(), GridSpec::detection().ny()), (128, 128));
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 0.3).is_err());
    }

    #[test]
    fn locate_roundtrip() {
        let g = GridSpec::motion();
        let c = g.cell_center(3, 199);
        assert_eq!(g.locate(c), Some((3, 199)));
        assert_eq!(g.locate(Vec2::new(50.0, 0.0)), None);
    }
}
