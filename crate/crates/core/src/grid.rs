//! Rasterized semantic map.
//!
//! Cell `(col, row)` covers `[ox + col·res, ox + (col+1)·res) × [oy + row·res, oy + (row+1)·res)`
//! and is stored row-major at `row * width + col`. Row 0 is the row at the origin `y`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point, RigidTransform};

/// Default predictor crop: 256 × 256 cells at 0.1 m/cell.
pub const DEFAULT_CROP_SIZE: usize = 256;
pub const DEFAULT_CROP_RESOLUTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum CellClass {
    Unknown = 0,
    Road = 1,
    Sidewalk = 2,
    Zebra = 3,
    Building = 4,
    Refuge = 5,
    Bicycle = 6,
}

impl CellClass {
    pub const ALL: [CellClass; 7] = [
        CellClass::Unknown,
        CellClass::Road,
        CellClass::Sidewalk,
        CellClass::Zebra,
        CellClass::Building,
        CellClass::Refuge,
        CellClass::Bicycle,
    ];

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    /// Surfaces a vehicle drives on (pedestrian there is "on the street").
    pub fn is_carriageway(self) -> bool {
        matches!(self, CellClass::Road | CellClass::Zebra | CellClass::Bicycle)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemanticGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Point,
    cells: Vec<u8>,
}

impl SemanticGrid {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point,
        cells: Vec<u8>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invariant("grid.size", "width and height must be positive"));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::invariant("grid.resolution", "must be positive and finite"));
        }
        if !origin.is_finite() {
            return Err(Error::invariant("grid.origin", "must be finite"));
        }
        if cells.len() != width * height {
            return Err(Error::invariant(
                "grid.cells",
                format!("expected {} cells, got {}", width * height, cells.len()),
            ));
        }
        if let Some((i, c)) = cells.iter().enumerate().find(|(_, &c)| c > 6) {
            return Err(Error::invariant(
                "grid.cells",
                format!("cell {i} has class code {c}, expected 0..=6"),
            ));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
        })
    }

    /// Grid filled with a single class.
    pub fn filled(width: usize, height: usize, resolution: f64, origin: Point, class: CellClass) -> Result<Self> {
        Self::new(width, height, resolution, origin, vec![class.code(); width * height])
    }

    /// Rasterize by evaluating `f` at each cell center.
    pub fn from_fn(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point,
        f: impl Fn(Point) -> CellClass,
    ) -> Result<Self> {
        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                let c = Point::new(
                    origin.x + (col as f64 + 0.5) * resolution,
                    origin.y + (row as f64 + 0.5) * resolution,
                );
                cells.push(f(c).code());
            }
        }
        Self::new(width, height, resolution, origin, cells)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, col: usize, row: usize) -> CellClass {
        CellClass::from_code(self.cells[row * self.width + col]).expect("validated cell code")
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point {
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell index containing `p`, if inside the grid.
    pub fn locate(&self, p: Point) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.resolution).floor();
        let fy = ((p.y - self.origin.y) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 || !fx.is_finite() || !fy.is_finite() {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Nearest-neighbor class lookup; outside the grid is `Unknown`.
    pub fn class_at(&self, p: Point) -> CellClass {
        self.locate(p)
            .map(|(c, r)| self.get(c, r))
            .unwrap_or(CellClass::Unknown)
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.cells.iter().filter(|&&c| c == class.code()).count()
    }

    /// Read cells from a little-endian `u8` row-major file.
    pub fn read_cells_file(path: &Path, width: usize, height: usize) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() != width * height {
            return Err(Error::invariant(
                "grid.cells_file",
                format!("{} bytes, expected {}", bytes.len(), width * height),
            ));
        }
        Ok(bytes)
    }

    pub fn write_cells_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.cells).map_err(|e| Error::io(path, e))
    }
}

/// Crop a `size × size` window at the source resolution, centered on `center` and rotated
/// by `rotation` (radians, counter-clockwise). Cells outside the source map to `Unknown`.
pub fn crop_grid(grid: &SemanticGrid, center: Point, size: usize, rotation: f64) -> SemanticGrid {
    crop_grid_at_resolution(grid, center, size, rotation, grid.resolution())
}

/// Like [`crop_grid`] with an explicit output resolution. The output lives in the local,
/// rotated frame: its origin is `(-size·res/2, -size·res/2)` relative to `center`.
pub fn crop_grid_at_resolution(
    grid: &SemanticGrid,
    center: Point,
    size: usize,
    rotation: f64,
    resolution: f64,
) -> SemanticGrid {
    assert!(size > 0, "crop size must be positive");
    let tf = RigidTransform::new(rotation, center);
    let half = size as f64 * resolution * 0.5;
    let origin = Point::new(-half, -half);
    SemanticGrid::from_fn(size, size, resolution, origin, |local| grid.class_at(tf.apply(local)))
        .expect("crop dimensions are valid")
}
