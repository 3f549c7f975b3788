//! Poincaré-disc construction of the pentagrid by repeated hyperbolic
//! reflections, used as an independent check of the combinatorial adjacency
//! and to draw configurations as SVG.
//!
//! All numerics are `f64`. Nothing computed here feeds back into the automaton;
//! the oracle only certifies combinatorics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::engine::Configuration;
use crate::grid::{self, GridError, TileCoord};

/// Largest generation depth accepted by [`generate`] and [`render_svg`].
pub const MAX_DEPTH: u32 = 7;

/// Euclidean distance under which two centers (or vertices) are one point.
pub const SAME_POINT_TOL: f64 = 1e-9;

/// Distinct points closer than this abort generation.
pub const COLLISION_MARGIN: f64 = 1e-6;

/// Below this determinant the two side endpoints are treated as collinear
/// with the origin, so the side lies on a diameter.
const DIAMETER_DET: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point ({0}, {1}) is not inside the open unit disc")]
    OutsideDisc(f64, f64),
    #[error("side endpoints do not define a hyperbolic line")]
    DegenerateSide,
    #[error("depth {0} exceeds the supported maximum {MAX_DEPTH}")]
    DepthTooLarge(u32),
    #[error("points {a:?} and {b:?} are {distance:e} apart: too close to tell apart")]
    Collision { a: (f64, f64), b: (f64, f64), distance: f64 },
    #[error("tree adjacency disagrees with the geometric tiling: {0}")]
    ModelMismatch(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// A point of the open unit disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscPoint {
    pub x: f64,
    pub y: f64,
}

impl DiscPoint {
    pub fn new(x: f64, y: f64) -> Result<Self, GeomError> {
        if x.is_finite() && y.is_finite() && x * x + y * y < 1.0 {
            Ok(DiscPoint { x, y })
        } else {
            Err(GeomError::OutsideDisc(x, y))
        }
    }

    pub const ORIGIN: DiscPoint = DiscPoint { x: 0.0, y: 0.0 };

    fn z(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    fn from_z(z: Complex64) -> Result<Self, GeomError> {
        DiscPoint::new(z.re, z.im)
    }

    pub fn norm(self) -> f64 {
        self.z().norm()
    }

    pub fn euclid_distance(self, other: DiscPoint) -> f64 {
        (self.z() - other.z()).norm()
    }
}

/// Hyperbolic distance between two points of the disc.
pub fn hyperbolic_distance(a: DiscPoint, b: DiscPoint) -> f64 {
    let (a, b) = (a.z(), b.z());
    let ratio = (a - b).norm() / (Complex64::new(1.0, 0.0) - a.conj() * b).norm();
    2.0 * ratio.min(1.0).atanh()
}

/// Hyperbolic distance from the center of a right-angled regular pentagon to
/// a vertex: `cosh R = cot(π/5) cot(π/4)`.
pub fn circumradius() -> f64 {
    (1.0 / ((PI / 5.0).tan() * (PI / 4.0).tan())).acosh()
}

/// Hyperbolic distance from the center to a side midpoint:
/// `cosh a = cos(π/4) / sin(π/5)`.
pub fn apothem() -> f64 {
    ((PI / 4.0).cos() / (PI / 5.0).sin()).acosh()
}

/// Euclidean radius of the point at hyperbolic distance `d` from the origin.
pub fn euclidean_radius(d: f64) -> f64 {
    (d / 2.0).tanh()
}

/// How a pentagon entered the tiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Root,
    Reflected { parent: usize, side: u8 },
}

/// A pentagon of the tiling. Vertices run counterclockwise; side `i` joins
/// vertex `i` to vertex `i + 1 mod 5`.
#[derive(Debug, Clone, PartialEq)]
pub struct PentagonGeom {
    pub vertices: [DiscPoint; 5],
    pub center: DiscPoint,
    pub provenance: Provenance,
}

impl PentagonGeom {
    /// The two endpoints of side `i` (0-based).
    pub fn side(&self, i: usize) -> (DiscPoint, DiscPoint) {
        (self.vertices[i % 5], self.vertices[(i + 1) % 5])
    }

    /// Hyperbolic interior angle at each vertex.
    pub fn interior_angles(&self) -> [f64; 5] {
        std::array::from_fn(|k| {
            let v = self.vertices[k].z();
            // A Möbius map sending v to the origin straightens both sides at v.
            let to_origin = |z: Complex64| (z - v) / (Complex64::new(1.0, 0.0) - v.conj() * z);
            let next = to_origin(self.vertices[(k + 1) % 5].z());
            let prev = to_origin(self.vertices[(k + 4) % 5].z());
            (next / prev).arg().abs()
        })
    }

    /// Image under the reflection in side `side`, vertices kept counterclockwise.
    pub fn reflect_in_side(&self, side: usize, parent: usize) -> Result<PentagonGeom, GeomError> {
        let (a, b) = self.side(side);
        let mut vertices = [DiscPoint::ORIGIN; 5];
        for (k, v) in self.vertices.iter().enumerate() {
            // Reflection reverses orientation; reading backwards restores it.
            vertices[4 - k] = reflect(*v, (a, b))?;
        }
        Ok(PentagonGeom {
            vertices,
            center: reflect(self.center, (a, b))?,
            provenance: Provenance::Reflected { parent, side: side as u8 },
        })
    }
}

/// The right-angled regular pentagon centered at the origin, vertex 0 on the
/// positive x-axis.
pub fn central_pentagon() -> PentagonGeom {
    let r = euclidean_radius(circumradius());
    let vertices = std::array::from_fn(|k| {
        let theta = 2.0 * PI * k as f64 / 5.0;
        DiscPoint { x: r * theta.cos(), y: r * theta.sin() }
    });
    PentagonGeom { vertices, center: DiscPoint::ORIGIN, provenance: Provenance::Root }
}

/// The hyperbolic line through `a` and `b`: `None` for a diameter, otherwise
/// the Euclidean center and radius of the circle orthogonal to the unit circle.
fn geodesic_circle(a: DiscPoint, b: DiscPoint) -> Result<Option<(Complex64, f64)>, GeomError> {
    if a.euclid_distance(b) < f64::EPSILON {
        return Err(GeomError::DegenerateSide);
    }
    let det = a.x * b.y - a.y * b.x;
    if det.abs() < DIAMETER_DET {
        return Ok(None);
    }
    // c·a = (|a|² + 1) / 2 and c·b = (|b|² + 1) / 2.
    let (ra, rb) = ((a.x * a.x + a.y * a.y + 1.0) / 2.0, (b.x * b.x + b.y * b.y + 1.0) / 2.0);
    let c = Complex64::new((ra * b.y - rb * a.y) / det, (a.x * rb - b.x * ra) / det);
    Ok(Some((c, (c.norm_sqr() - 1.0).sqrt())))
}

/// Reflection of `p` in the hyperbolic line through the two points of `side`.
pub fn reflect(p: DiscPoint, side: (DiscPoint, DiscPoint)) -> Result<DiscPoint, GeomError> {
    let (a, b) = side;
    DiscPoint::new(a.x, a.y)?;
    DiscPoint::new(b.x, b.y)?;
    if a.euclid_distance(b) < f64::EPSILON {
        return Err(GeomError::DegenerateSide);
    }
    // Move `a` to the origin, where the line becomes a diameter, mirror there,
    // and move back. This stays accurate for lines of any curvature.
    let a = a.z();
    let one = Complex64::new(1.0, 0.0);
    let to = |z: Complex64| (z - a) / (one - a.conj() * z);
    let from = |w: Complex64| (w + a) / (one + a.conj() * w);
    let dir = to(b.z());
    let u = dir / dir.norm();
    DiscPoint::from_z(from(u * u * to(p.z()).conj()))
}

/// Bucketed point store that merges points within [`SAME_POINT_TOL`].
struct PointIndex {
    points: Vec<DiscPoint>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl PointIndex {
    fn new() -> Self {
        PointIndex { points: Vec::new(), buckets: HashMap::new() }
    }

    fn bucket(p: DiscPoint) -> (i64, i64) {
        ((p.x / COLLISION_MARGIN).floor() as i64, (p.y / COLLISION_MARGIN).floor() as i64)
    }

    /// Index of `p`, and whether it was newly inserted.
    fn intern(&mut self, p: DiscPoint) -> Result<(usize, bool), GeomError> {
        let (bx, by) = Self::bucket(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &i in self.buckets.get(&(bx + dx, by + dy)).into_iter().flatten() {
                    let q = self.points[i];
                    let d = p.euclid_distance(q);
                    if d < SAME_POINT_TOL {
                        return Ok((i, false));
                    }
                    if d < COLLISION_MARGIN {
                        return Err(GeomError::Collision { a: (p.x, p.y), b: (q.x, q.y), distance: d });
                    }
                }
            }
        }
        let i = self.points.len();
        self.points.push(p);
        self.buckets.entry((bx, by)).or_default().push(i);
        Ok((i, true))
    }
}

/// Tiles of the disc within a given reflection depth.
#[derive(Debug, Clone)]
pub struct GeoTiling {
    pub tiles: Vec<PentagonGeom>,
    /// Number of reflections from the central pentagon, per tile.
    pub depths: Vec<u32>,
    /// Shared vertex ids, per tile, in vertex order.
    pub vertex_ids: Vec<[usize; 5]>,
    /// Unordered pairs of tile ids sharing a full side.
    pub edges: BTreeSet<(usize, usize)>,
    /// Tile across each side, when generated.
    pub side_neighbors: Vec<[Option<usize>; 5]>,
    pub depth: u32,
}

/// Breadth-first reflection of the central pentagon out to `depth`.
pub fn generate(depth: u32) -> Result<GeoTiling, GeomError> {
    if depth > MAX_DEPTH {
        return Err(GeomError::DepthTooLarge(depth));
    }
    let mut tiles = vec![central_pentagon()];
    let mut depths = vec![0];
    let mut centers = PointIndex::new();
    centers.intern(DiscPoint::ORIGIN)?;
    let mut frontier = vec![0usize];
    for d in 1..=depth {
        let mut next = Vec::new();
        for &parent in &frontier {
            for side in 0..5 {
                let image = tiles[parent].reflect_in_side(side, parent)?;
                let (id, fresh) = centers.intern(image.center)?;
                if fresh {
                    debug_assert_eq!(id, tiles.len());
                    tiles.push(image);
                    depths.push(d);
                    next.push(id);
                }
            }
        }
        frontier = next;
    }

    let mut vertices = PointIndex::new();
    let mut vertex_ids = Vec::with_capacity(tiles.len());
    for tile in &tiles {
        let mut ids = [0; 5];
        for (k, v) in tile.vertices.iter().enumerate() {
            ids[k] = vertices.intern(*v)?.0;
        }
        vertex_ids.push(ids);
    }

    let mut tiling = GeoTiling {
        tiles,
        depths,
        vertex_ids,
        edges: BTreeSet::new(),
        side_neighbors: Vec::new(),
        depth,
    };
    tiling.side_neighbors = side_table(&tiling);
    tiling.edges = geo_adjacency(&tiling);
    Ok(tiling)
}

fn side_key(ids: &[usize; 5], side: usize) -> (usize, usize) {
    let (a, b) = (ids[side], ids[(side + 1) % 5]);
    (a.min(b), a.max(b))
}

fn side_table(tiling: &GeoTiling) -> Vec<[Option<usize>; 5]> {
    let mut by_side: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (id, ids) in tiling.vertex_ids.iter().enumerate() {
        for side in 0..5 {
            by_side.entry(side_key(ids, side)).or_default().push(id);
        }
    }
    tiling
        .vertex_ids
        .iter()
        .enumerate()
        .map(|(id, ids)| {
            std::array::from_fn(|side| {
                by_side[&side_key(ids, side)].iter().copied().find(|&other| other != id)
            })
        })
        .collect()
}

/// Pairs of tiles whose sides have both endpoints in common.
pub fn geo_adjacency(tiling: &GeoTiling) -> BTreeSet<(usize, usize)> {
    let mut owners: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (id, ids) in tiling.vertex_ids.iter().enumerate() {
        for side in 0..5 {
            owners.entry(side_key(ids, side)).or_default().push(id);
        }
    }
    let mut edges = BTreeSet::new();
    for ids in owners.values() {
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    edges
}

/// Which rotational sense tree side numbers take on the drawn pentagons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Ccw,
    Cw,
}

impl Orientation {
    fn step(self) -> usize {
        match self {
            Orientation::Ccw => 1,
            Orientation::Cw => 4,
        }
    }
}

/// Correspondence between tree coordinates and tile ids of a generated tiling.
#[derive(Debug, Clone)]
pub struct CoordMatch {
    pub orientation: Orientation,
    /// Tiles of `D_{depth-1}`, whose every side was checked.
    pub interior: BTreeMap<TileCoord, usize>,
    /// Tiles of the outermost circle, reached through their fathers' sides.
    pub boundary: BTreeMap<TileCoord, usize>,
}

impl CoordMatch {
    pub fn tile_id(&self, t: TileCoord) -> Option<usize> {
        self.interior.get(&t).or_else(|| self.boundary.get(&t)).copied()
    }
}

/// Matches tree coordinates to geometric tiles, trying both orientations.
pub fn match_coordinates(tiling: &GeoTiling) -> Result<CoordMatch, GeomError> {
    match_coordinates_with(tiling, grid::neighbors)
}

/// As [`match_coordinates`], against an arbitrary side-indexed neighbour map.
pub fn match_coordinates_with<F>(tiling: &GeoTiling, neighbors: F) -> Result<CoordMatch, GeomError>
where
    F: Fn(TileCoord) -> Result<[TileCoord; 5], GridError>,
{
    let mut failures = Vec::new();
    for orientation in [Orientation::Ccw, Orientation::Cw] {
        match try_orientation(tiling, orientation, &neighbors) {
            Ok(m) => return Ok(m),
            Err(GeomError::ModelMismatch(why)) => failures.push(format!("{orientation:?}: {why}")),
            Err(other) => return Err(other),
        }
    }
    Err(GeomError::ModelMismatch(failures.join("; ")))
}

fn try_orientation<F>(tiling: &GeoTiling, orientation: Orientation, neighbors: &F) -> Result<CoordMatch, GeomError>
where
    F: Fn(TileCoord) -> Result<[TileCoord; 5], GridError>,
{
    let mismatch = |msg: String| GeomError::ModelMismatch(msg);
    let depth = tiling.depth;
    let mut tile_of: BTreeMap<TileCoord, usize> = BTreeMap::from([(TileCoord::Central, 0)]);
    let mut coord_of: HashMap<usize, TileCoord> = HashMap::from([(0, TileCoord::Central)]);

    for circle in 0..depth {
        for t in grid::circle_tiles(circle)? {
            let g = tile_of[&t];
            let sides = &tiling.side_neighbors[g];
            // Central: sector 1 sits across side 0; otherwise side 1 faces the father.
            let first = if t == TileCoord::Central {
                0
            } else {
                let father = tile_of[&neighbors(t)?[0]];
                sides.iter().position(|&s| s == Some(father)).ok_or_else(|| {
                    mismatch(format!("{t}: tile {g} does not touch its father's tile {father}"))
                })?
            };
            for (i, tn) in neighbors(t)?.into_iter().enumerate() {
                let side = (first + orientation.step() * i) % 5;
                let gn = sides[side].ok_or_else(|| mismatch(format!("{t}: no tile across geometric side {side}")))?;
                match (tile_of.get(&tn), coord_of.get(&gn)) {
                    (Some(&known), _) if known != gn => {
                        return Err(mismatch(format!("{t} side {}: tree says {tn} (tile {known}), geometry says tile {gn}", i + 1)))
                    }
                    (None, Some(&other)) => {
                        return Err(mismatch(format!("{t} side {}: tile {gn} is {other}, tree says {tn}", i + 1)))
                    }
                    (None, None) => {
                        if grid::circle_of(tn)? != tiling.depths[gn] {
                            return Err(mismatch(format!("{tn} lies on circle {} but maps to depth {}", grid::circle_of(tn)?, tiling.depths[gn])));
                        }
                        tile_of.insert(tn, gn);
                        coord_of.insert(gn, tn);
                    }
                    _ => {}
                }
            }
        }
    }

    if tile_of.len() != tiling.tiles.len() {
        return Err(mismatch(format!("{} tiles generated, {} matched", tiling.tiles.len(), tile_of.len())));
    }
    let (interior, boundary) = tile_of.into_iter().partition(|(t, _)| grid::circle_of(*t).unwrap_or(u32::MAX) < depth);
    Ok(CoordMatch { orientation, interior, boundary })
}

/// Fill colours for [`render_svg`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    pub white: String,
    pub black: String,
    pub stroke: String,
}

impl Default for Palette {
    fn default() -> Self {
        Palette { white: "#ffffff".into(), black: "#1f4e9c".into(), stroke: "#333333".into() }
    }
}

const SVG_SIZE: u32 = 800;

fn fmt_xy(out: &mut String, p: DiscPoint) {
    // SVG's y axis points down.
    let _ = write!(out, "{:.6} {:.6}", p.x, -p.y);
}

fn pentagon_path(tile: &PentagonGeom) -> Result<String, GeomError> {
    let mut d = String::from("M ");
    fmt_xy(&mut d, tile.vertices[0]);
    for k in 0..5 {
        let (a, b) = tile.side(k);
        match geodesic_circle(a, b)? {
            None => d.push_str(" L "),
            Some((c, r)) => {
                let cross = (a.x - c.re) * (b.y - c.im) - (a.y - c.im) * (b.x - c.re);
                let sweep = u8::from(cross > 0.0);
                let _ = write!(d, " A {r:.6} {r:.6} 0 0 {sweep} ");
            }
        }
        fmt_xy(&mut d, b);
    }
    d.push_str(" Z");
    Ok(d)
}

/// Draws the tiles of `D_depth`, filling B cells with `palette.black`.
pub fn render_svg(config: &Configuration, depth: u32, palette: &Palette) -> Result<String, GeomError> {
    render_svg_with(depth, &palette.stroke, |t| if config.contains(t) { palette.black.clone() } else { palette.white.clone() })
}

/// Draws the tiles of `D_depth` with a fill colour chosen per tile.
pub fn render_svg_with<F>(depth: u32, stroke: &str, fill: F) -> Result<String, GeomError>
where
    F: Fn(TileCoord) -> String,
{
    let tiling = generate(depth)?;
    let matched = match_coordinates(&tiling)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="-1.02 -1.02 2.04 2.04">
<circle cx="0" cy="0" r="1" fill="none" stroke="{stroke}" stroke-width="0.004"/>"#
    );
    let _ = writeln!(out, r#"<g stroke="{stroke}" stroke-width="0.002" stroke-linejoin="round">"#);
    for circle in 0..=depth {
        for t in grid::circle_tiles(circle)? {
            let id = matched.tile_id(t).expect("every tile of the disc is matched");
            let _ = writeln!(out, r#"<path data-tile="{t}" fill="{}" d="{}"/>"#, fill(t), pentagon_path(&tiling.tiles[id])?);
        }
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}
