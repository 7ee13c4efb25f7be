//! Scene construction and 2D free-space queries.

use super::SimError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Vertical rectangular wall patch: a ground-plane segment swept over a
/// height range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub z0: f64,
    pub z1: f64,
    pub texture_id: u32,
}

impl Wall {
    pub fn new(a: [f64; 2], b: [f64; 2], z0: f64, z1: f64, texture_id: u32) -> Self {
        Self { a, b, z0, z1, texture_id }
    }

    pub fn length(&self) -> f64 {
        ((self.b[0] - self.a[0]).powi(2) + (self.b[1] - self.a[1]).powi(2)).sqrt()
    }

    /// Distance from a ground-plane point to this wall's segment.
    pub fn distance_to_point(&self, x: f64, y: f64) -> f64 {
        point_segment_distance([x, y], self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub walls: Vec<Wall>,
    pub floor_z: Option<f64>,
    pub ceiling_z: Option<f64>,
    pub rng_seed: u64,
    /// Axis-aligned ground-plane bounds of the enclosed region.
    pub bounds: [[f64; 2]; 2],
}

impl Scene {
    /// Axis-aligned room with 4 outer walls and no clutter.
    pub fn empty_room(width: f64, depth: f64, wall_height: f64) -> Self {
        Scene {
            walls: outer_walls(width, depth, wall_height),
            floor_z: Some(0.0),
            ceiling_z: Some(wall_height),
            rng_seed: 0,
            bounds: [[0.0, 0.0], [width, depth]],
        }
    }

    /// True when the point is inside the scene bounds and at least
    /// `clearance` away from every wall segment.
    pub fn is_free(&self, x: f64, y: f64, clearance: f64) -> bool {
        let [[x0, y0], [x1, y1]] = self.bounds;
        if x <= x0 + clearance || x >= x1 - clearance || y <= y0 + clearance || y >= y1 - clearance
        {
            return false;
        }
        self.walls
            .iter()
            .all(|w| w.distance_to_point(x, y) >= clearance)
    }

    /// True when the motion segment p0 -> p1 stays at least `radius`
    /// away from every wall (robot treated as a disc).
    pub fn segment_is_free(&self, p0: [f64; 2], p1: [f64; 2], radius: f64) -> bool {
        if !self.is_free(p1[0], p1[1], radius) {
            return false;
        }
        self.walls
            .iter()
            .all(|w| segment_segment_distance(p0, p1, w.a, w.b) >= radius)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub width: f64,
    pub depth: f64,
    pub clutter: u32,
    pub wall_height: f64,
    pub seed: u64,
}

impl RoomSpec {
    pub fn new(width: f64, depth: f64, clutter: u32, seed: u64) -> Self {
        Self { width, depth, clutter, wall_height: 2.5, seed }
    }
}

fn outer_walls(width: f64, depth: f64, h: f64) -> Vec<Wall> {
    vec![
        Wall::new([0.0, 0.0], [width, 0.0], 0.0, h, 0),
        Wall::new([width, 0.0], [width, depth], 0.0, h, 1),
        Wall::new([width, depth], [0.0, depth], 0.0, h, 2),
        Wall::new([0.0, depth], [0.0, 0.0], 0.0, h, 3),
    ]
}

/// Deterministically build a rectangular room with `clutter` interior
/// wall segments at random positions and orientations.
pub fn generate_scene(spec: &RoomSpec) -> Result<Scene, SimError> {
    if !(spec.width > 0.5) || !(spec.depth > 0.5) || !(spec.wall_height > 0.0) {
        return Err(SimError::DegenerateRoom(format!(
            "{} x {} x {}",
            spec.width, spec.depth, spec.wall_height
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut walls = outer_walls(spec.width, spec.depth, spec.wall_height);
    let margin = 0.3;
    for i in 0..spec.clutter {
        // resample until the segment lies fully inside the room margin
        let (a, b) = loop {
            let cx = rng.gen_range(margin..spec.width - margin);
            let cy = rng.gen_range(margin..spec.depth - margin);
            let ang = rng.gen_range(0.0..std::f64::consts::PI);
            let half = rng.gen_range(0.25..1.0);
            let (dx, dy) = (ang.cos() * half, ang.sin() * half);
            let a = [cx - dx, cy - dy];
            let b = [cx + dx, cy + dy];
            let inside = |p: [f64; 2]| {
                p[0] > margin && p[0] < spec.width - margin && p[1] > margin && p[1] < spec.depth - margin
            };
            if inside(a) && inside(b) {
                break (a, b);
            }
        };
        walls.push(Wall::new(a, b, 0.0, spec.wall_height, 4 + i));
    }
    Ok(Scene {
        walls,
        floor_z: Some(0.0),
        ceiling_z: Some(spec.wall_height),
        rng_seed: spec.seed,
        bounds: [[0.0, 0.0], [spec.width, spec.depth]],
    })
}

pub(crate) fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let cx = a[0] + t * ab[0] - p[0];
    let cy = a[1] + t * ab[1] - p[1];
    (cx * cx + cy * cy).sqrt()
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

pub(crate) fn segment_segment_distance(
    p1: [f64; 2],
    p2: [f64; 2],
    q1: [f64; 2],
    q2: [f64; 2],
) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}
