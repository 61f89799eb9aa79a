//! Grayscale rasters, PNG I/O and the drawing routines used to render
//! instances and solutions.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curvegen::CurveInstance;
use crate::geom::{PlaneGraph, Point, Polyline, Segment, SimplePolygon};

pub const DEFAULT_RESOLUTION: u32 = 128;
pub const NODE_RADIUS: i64 = 2;
pub const STEINER_EDGE_WIDTH: u32 = 2;
pub const POLYGON_EDGE_WIDTH: u32 = 1;
/// Border left free around the unit square for Steiner and polygon instances.
pub const UNIT_MARGIN_PX: f64 = 4.0;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("square index {index} out of range ({count} squares)")]
    SquareIndex { index: usize, count: usize },
    #[error("image must be square and non-empty, got {width}x{height}")]
    BadShape { width: u32, height: u32 },
    #[error("unsupported PNG: {0}")]
    Unsupported(String),
    #[error("png decode: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("png encode: {0}")]
    Encode(#[from] png::EncodingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major 8-bit square image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(size: u32, fill: u8) -> Self {
        Self { width: size, height: size, data: vec![fill; (size as usize) * (size as usize)] }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, RasterError> {
        if width != height || width == 0 || data.len() != (width as usize) * (height as usize) {
            return Err(RasterError::BadShape { width, height });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
    }

    /// Out-of-bounds reads return `None`.
    pub fn get(&self, x: i64, y: i64) -> Option<u8> {
        self.in_bounds(x, y).then(|| self.data[y as usize * self.width as usize + x as usize])
    }

    /// Out-of-bounds writes are ignored.
    pub fn set(&mut self, x: i64, y: i64, v: u8) {
        if self.in_bounds(x, y) {
            let w = self.width as usize;
            self.data[y as usize * w + x as usize] = v;
        }
    }

    pub fn count(&self, v: u8) -> usize {
        self.data.iter().filter(|&&p| p == v).count()
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, RasterError> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header()?;
            w.write_image_data(&self.data)?;
        }
        Ok(out)
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self, RasterError> {
        let decoder = png::Decoder::new(bytes);
        let mut reader = decoder.read_info()?;
        let mut buf = vec![0; reader.output_buffer_size()];
        let info = reader.next_frame(&mut buf)?;
        if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
            return Err(RasterError::Unsupported(format!("{:?} {:?}", info.color_type, info.bit_depth)));
        }
        buf.truncate(info.buffer_size());
        Self::from_raw(info.width, info.height, buf)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), RasterError> {
        let mut f = BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&self.encode_png()?)?;
        f.flush()?;
        Ok(())
    }

    pub fn load_png(path: &Path) -> Result<Self, RasterError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::decode_png(&bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterPalette {
    pub background: u8,
    pub edge: u8,
    pub node: u8,
    pub fill: u8,
}

impl RasterPalette {
    pub const GRAY: u8 = 128;
    pub const WHITE: u8 = 255;
    pub const BLACK: u8 = 0;

    pub const SQUARE: Self = Self { background: 0, edge: 255, node: 255, fill: 255 };
    pub const STEINER: Self = Self { background: 128, edge: 255, node: 0, fill: 0 };
    pub const MAXAP: Self = Self { background: 128, edge: 255, node: 0, fill: 0 };
}

/// World to continuous pixel coordinates:
/// `u = m[0] x + m[1] y + m[2]`, `v = m[3] x + m[4] y + m[5]`, y pointing down.
/// Pixel `(floor(u), floor(v))` has its center at `(floor(u) + 0.5, floor(v) + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelMap {
    pub m: [f64; 6],
}

impl PixelMap {
    /// `[-1, 1]^2` onto the image with a 2 pixel border.
    pub fn square_task(res: u32) -> Self {
        let half = res as f64 / 2.0;
        let s = half - 2.0;
        Self { m: [s, 0.0, half, 0.0, -s, half] }
    }

    /// `[0, 1]^2` onto the image with a `margin` pixel border.
    pub fn unit_square(res: u32, margin: f64) -> Self {
        let s = res as f64 - 2.0 * margin;
        Self { m: [s, 0.0, margin, 0.0, -s, margin + s] }
    }

    pub fn apply(&self, p: Point) -> Point {
        let m = &self.m;
        Point::new(m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5])
    }

    pub fn pixel(&self, p: Point) -> (i64, i64) {
        let q = self.apply(p);
        (q.x.floor() as i64, q.y.floor() as i64)
    }

    pub fn pixel_center(&self, p: Point) -> Point {
        let (x, y) = self.pixel(p);
        Point::new(x as f64 + 0.5, y as f64 + 0.5)
    }

    pub fn invert(&self, q: Point) -> Point {
        let m = &self.m;
        let det = m[0] * m[4] - m[1] * m[3];
        let (u, v) = (q.x - m[2], q.y - m[5]);
        Point::new((m[4] * u - m[1] * v) / det, (m[0] * v - m[3] * u) / det)
    }

    /// Pixels per world unit (geometric mean of the axis scales).
    pub fn scale(&self) -> f64 {
        let m = &self.m;
        (m[0] * m[4] - m[1] * m[3]).abs().sqrt()
    }
}

/// Pixels `(x + dx, y + dy)` with `dx^2 + dy^2 <= r^2`.
pub fn draw_disk(img: &mut GrayImage, (x, y): (i64, i64), r: i64, v: u8) {
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                img.set(x + dx, y + dy, v);
            }
        }
    }
}

/// Integer offsets of a discrete disk of diameter `width`. Odd widths are
/// centered on the pixel, even widths on its lower-right corner.
fn brush(width: u32) -> Vec<(i64, i64)> {
    let w = width.max(1) as i64;
    let c = if w % 2 == 0 { 0.5 } else { 0.0 };
    let r = w as f64 / 2.0;
    let mut out = Vec::new();
    for dy in -w..=w {
        for dx in -w..=w {
            let (fx, fy) = (dx as f64 - c, dy as f64 - c);
            if fx * fx + fy * fy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Pixels visited by Bresenham's algorithm from `a` to `b`, both included.
pub fn bresenham(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - x).abs();
    let dy = -(b.1 - y).abs();
    let sx = if x < b.0 { 1 } else { -1 };
    let sy = if y < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push((x, y));
        if (x, y) == b {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

pub fn draw_line(img: &mut GrayImage, a: (i64, i64), b: (i64, i64), width: u32, v: u8) {
    let stamp = brush(width);
    for (x, y) in bresenham(a, b) {
        for &(dx, dy) in &stamp {
            img.set(x + dx, y + dy, v);
        }
    }
}

/// Fill every pixel whose center lies inside the polygon (even-odd rule),
/// vertices given in continuous pixel coordinates.
pub fn fill_polygon(img: &mut GrayImage, verts: &[Point], v: u8) {
    let n = verts.len();
    if n < 3 {
        return;
    }
    let mut xs = Vec::new();
    for row in 0..img.height() as i64 {
        let yc = row as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (p, q) = (verts[i], verts[(i + 1) % n]);
            // Half-open in y so shared vertices count once.
            if (p.y <= yc) != (q.y <= yc) {
                xs.push(p.x + (yc - p.y) * (q.x - p.x) / (q.y - p.y));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // Columns whose centers satisfy x0 <= c + 0.5 < x1.
            let c0 = (pair[0] - 0.5).ceil() as i64;
            let c1 = (pair[1] - 0.5).ceil() as i64;
            for col in c0..c1 {
                img.set(col, row, v);
            }
        }
    }
}

/// One-pixel stroke through consecutive points (closing the loop if asked).
pub fn stroke_polyline(img: &mut GrayImage, map: &PixelMap, pts: &[Point], closed: bool, v: u8) {
    let px: Vec<(i64, i64)> = pts.iter().map(|&p| map.pixel(p)).collect();
    for w in px.windows(2) {
        draw_line(img, w[0], w[1], 1, v);
    }
    if closed && px.len() > 2 {
        draw_line(img, px[px.len() - 1], px[0], 1, v);
    }
    if px.len() == 1 {
        img.set(px[0].0, px[0].1, v);
    }
}

/// One-pixel white stroke of a closed curve on black.
pub fn rasterize_curve(curve: &Polyline, map: &PixelMap, res: u32) -> GrayImage {
    let pal = RasterPalette::SQUARE;
    let mut img = GrayImage::new(res, pal.background);
    stroke_polyline(&mut img, map, curve.points(), curve.is_closed(), pal.edge);
    img
}

/// White filled square on black.
pub fn rasterize_square(vertices: &[Point; 4], map: &PixelMap, res: u32) -> GrayImage {
    let pal = RasterPalette::SQUARE;
    let mut img = GrayImage::new(res, pal.background);
    let verts: Vec<Point> = vertices.iter().map(|&p| map.apply(p)).collect();
    fill_polygon(&mut img, &verts, pal.fill);
    img
}

/// `(curve image, filled square image, map)` for one of the instance's squares.
pub fn rasterize_square_pair(
    inst: &CurveInstance,
    square_index: usize,
    res: u32,
) -> Result<(GrayImage, GrayImage, PixelMap), RasterError> {
    let sq = inst
        .squares
        .get(square_index)
        .ok_or(RasterError::SquareIndex { index: square_index, count: inst.squares.len() })?;
    let map = PixelMap::square_task(res);
    Ok((rasterize_curve(&inst.curve, &map, res), rasterize_square(&sq.vertices(), &map, res), map))
}

/// Terminals as black disks on gray.
pub fn rasterize_points(points: &[Point], map: &PixelMap, res: u32) -> GrayImage {
    let pal = RasterPalette::STEINER;
    let mut img = GrayImage::new(res, pal.background);
    for &p in points {
        draw_disk(&mut img, map.pixel(p), NODE_RADIUS, pal.node);
    }
    img
}

/// `(condition, solution)`: the solution draws white edges first, then every
/// vertex as a black disk.
pub fn rasterize_steiner_pair(
    terminals: &[Point],
    sol: &PlaneGraph,
    map: &PixelMap,
    res: u32,
) -> (GrayImage, GrayImage) {
    let pal = RasterPalette::STEINER;
    let cond = rasterize_points(terminals, map, res);
    let mut img = GrayImage::new(res, pal.background);
    for &(a, b) in &sol.edges {
        draw_line(&mut img, map.pixel(sol.vertices[a]), map.pixel(sol.vertices[b]), STEINER_EDGE_WIDTH, pal.edge);
    }
    for &v in &sol.vertices {
        draw_disk(&mut img, map.pixel(v), NODE_RADIUS, pal.node);
    }
    (cond, img)
}

/// Smallest pixel distance between two vertices of `g`, or between a vertex
/// and an edge not incident to it. Below roughly `2 * NODE_RADIUS + 3` the
/// drawn disks touch each other or foreign edges.
pub fn pixel_clearance(g: &PlaneGraph, map: &PixelMap) -> f64 {
    let v: Vec<Point> = g.vertices.iter().map(|&p| map.apply(p)).collect();
    let mut m = f64::INFINITY;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            m = m.min(v[i].dist(v[j]));
        }
        for &(a, b) in &g.edges {
            if a != i && b != i {
                m = m.min(Segment::new(v[a], v[b]).distance_to(v[i]));
            }
        }
    }
    m
}

/// `(condition, solution)`: black interior, one-pixel white boundary, gray outside.
pub fn rasterize_polygon_pair(
    points: &[Point],
    poly: &SimplePolygon,
    map: &PixelMap,
    res: u32,
) -> (GrayImage, GrayImage) {
    let pal = RasterPalette::MAXAP;
    let cond = rasterize_points(points, map, res);
    let mut img = GrayImage::new(res, pal.background);
    let verts: Vec<Point> = poly.vertices().iter().map(|&p| map.pixel_center(p)).collect();
    fill_polygon(&mut img, &verts, pal.fill);
    stroke_polyline(&mut img, map, poly.vertices(), true, pal.edge);
    (cond, img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_radius_two_has_13_pixels() {
        let mut img = GrayImage::new(16, 128);
        draw_disk(&mut img, (8, 8), 2, 0);
        assert_eq!(img.count(0), 13);
    }

    #[test]
    fn brush_widths() {
        assert_eq!(brush(1), vec![(0, 0)]);
        let mut b2 = brush(2);
        b2.sort();
        assert_eq!(b2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn bresenham_endpoints_and_connectivity() {
        for &(a, b) in &[((0, 0), (7, 3)), ((5, 9), (-2, 1)), ((3, 3), (3, 3)), ((0, 0), (0, -4))] {
            let l = bresenham(a, b);
            assert_eq!(l[0], a);
            assert_eq!(*l.last().unwrap(), b);
            for w in l.windows(2) {
                assert!((w[0].0 - w[1].0).abs() <= 1 && (w[0].1 - w[1].1).abs() <= 1);
            }
            let steps = (a.0 - b.0).abs().max((a.1 - b.1).abs()) as usize;
            assert_eq!(l.len(), steps + 1);
        }
    }

    #[test]
    fn fill_counts_pixel_centers() {
        // [2, 6) x [3, 5) in continuous coordinates covers exactly 4 x 2 pixel centers.
        let mut img = GrayImage::new(10, 0);
        let r = [Point::new(2.0, 3.0), Point::new(6.0, 3.0), Point::new(6.0, 5.0), Point::new(2.0, 5.0)];
        fill_polygon(&mut img, &r, 255);
        assert_eq!(img.count(255), 8);
        assert_eq!(img.get(2, 3), Some(255));
        assert_eq!(img.get(6, 3), Some(0));
    }

    #[test]
    fn filled_square_matches_analytic_area() {
        let map = PixelMap::square_task(128);
        let sq = crate::curvegen::InscribedSquare { center: Point::new(0.0, 0.0), side: 0.5, rotation: 0.0 };
        let mut img = GrayImage::new(128, 0);
        let v: Vec<Point> = sq.vertices().iter().map(|&p| map.apply(p)).collect();
        fill_polygon(&mut img, &v, 255);
        let expected = 0.25 * map.scale() * map.scale();
        assert!((img.count(255) as f64 - expected).abs() <= 0.04 * expected);
    }

    #[test]
    fn pixel_map_round_trip() {
        for map in [PixelMap::square_task(128), PixelMap::unit_square(64, 4.0)] {
            for p in [Point::new(0.3, -0.2), Point::new(1.0, 1.0), Point::new(-1.0, 0.0)] {
                assert!(map.invert(map.apply(p)).dist(p) < 1e-12);
            }
        }
        let m = PixelMap::square_task(128);
        assert_eq!(m.pixel(Point::new(0.0, 0.0)), (64, 64));
        assert_eq!(m.pixel(Point::new(-1.0, 1.0)), (2, 2));
        let u = PixelMap::unit_square(128, 4.0);
        assert_eq!(u.pixel(Point::new(0.0, 1.0)), (4, 4));
    }

    #[test]
    fn png_round_trip() {
        let mut img = GrayImage::new(32, 128);
        draw_line(&mut img, (1, 2), (30, 20), 2, 255);
        draw_disk(&mut img, (5, 5), 2, 0);
        let bytes = img.encode_png().unwrap();
        assert_eq!(GrayImage::decode_png(&bytes).unwrap(), img);
        assert_eq!(img.encode_png().unwrap(), bytes);
    }

    #[test]
    fn steiner_pair_palette() {
        let map = PixelMap::unit_square(128, UNIT_MARGIN_PX);
        let pts = vec![Point::new(0.2, 0.2), Point::new(0.8, 0.7)];
        let mut g = PlaneGraph::on_terminals(pts.clone());
        g.add_edge(0, 1).unwrap();
        let (cond, sol) = rasterize_steiner_pair(&pts, &g, &map, 128);
        assert_eq!(cond.count(0), 26);
        assert_eq!(cond.count(128) + 26, 128 * 128);
        assert!(sol.count(255) > 100);
        assert!(sol.data().iter().all(|&v| v == 0 || v == 128 || v == 255));
        assert_eq!(sol.get(0, 0), Some(128));
    }

    #[test]
    fn polygon_pair_regions() {
        let map = PixelMap::unit_square(128, UNIT_MARGIN_PX);
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        let poly = SimplePolygon::new(pts.clone(), 1e-9).unwrap();
        let (_, sol) = rasterize_polygon_pair(&pts, &poly, &map, 128);
        assert_eq!(sol.get(0, 0), Some(128));
        assert_eq!(sol.get(64, 64), Some(0));
        let expected = map.scale() * map.scale();
        let interior = (sol.count(0) + sol.count(255)) as f64;
        assert!((interior - expected).abs() <= 0.04 * expected);
    }
}
