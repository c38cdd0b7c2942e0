use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

const SAMPLES_PER_SEGMENT: usize = 8;

/// Track description as stored in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub waypoints: Vec<Point>,
    /// Half-width of the painted line.
    pub width: f64,
    #[serde(default = "default_closed")]
    pub closed: bool,
}

fn default_closed() -> bool {
    true
}

/// Catmull-Rom centerline sampled into a dense polyline.
#[derive(Debug, Clone)]
pub struct Track {
    spec: TrackSpec,
    points: Vec<Point>,
    arclength: Vec<f64>,
    index: SegmentGrid,
}

/// Uniform grid over the polyline. Each cell lists every segment that comes
/// within one line width of it, so intensity lookups only scan a handful of
/// segments.
#[derive(Debug, Clone)]
struct SegmentGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl SegmentGrid {
    fn new(points: &[Point], bounds: [f64; 4], reach: f64) -> Self {
        let cell = reach.max(1.0);
        let origin = [bounds[0] - reach, bounds[1] - reach];
        let nx = ((bounds[2] + reach - origin[0]) / cell).floor() as usize + 1;
        let ny = ((bounds[3] + reach - origin[1]) / cell).floor() as usize + 1;
        let mut cells = vec![Vec::new(); nx * ny];
        for (s, w) in points.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let lo = |v: f64, o: f64| ((v - reach - o) / cell).floor().max(0.0) as usize;
            let hi =
                |v: f64, o: f64, n: usize| (((v + reach - o) / cell).floor() as usize).min(n - 1);
            for iy in lo(a[1].min(b[1]), origin[1])..=hi(a[1].max(b[1]), origin[1], ny) {
                for ix in lo(a[0].min(b[0]), origin[0])..=hi(a[0].max(b[0]), origin[0], nx) {
                    cells[iy * nx + ix].push(s as u32);
                }
            }
        }
        Self {
            origin,
            cell,
            nx,
            ny,
            cells,
        }
    }

    fn candidates(&self, p: Point) -> &[u32] {
        let fx = ((p[0] - self.origin[0]) / self.cell).floor();
        let fy = ((p[1] - self.origin[1]) / self.cell).floor();
        if !(fx >= 0.0 && fy >= 0.0) || fx as usize >= self.nx || fy as usize >= self.ny {
            return &[];
        }
        &self.cells[fy as usize * self.nx + fx as usize]
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn catmull_rom(p0: Point, p1: Point, p2: Point, p3: Point, t: f64) -> Point {
    let t2 = t * t;
    let t3 = t2 * t;
    let mut out = [0.0; 2];
    for (d, o) in out.iter_mut().enumerate() {
        *o = 0.5
            * (2.0 * p1[d]
                + (-p0[d] + p2[d]) * t
                + (2.0 * p0[d] - 5.0 * p1[d] + 4.0 * p2[d] - p3[d]) * t2
                + (-p0[d] + 3.0 * p1[d] - 3.0 * p2[d] + p3[d]) * t3);
    }
    out
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

impl Track {
    pub fn new(spec: TrackSpec) -> Result<Self> {
        let n = spec.waypoints.len();
        if n < 4 {
            return Err(Error::Track(format!("need at least 4 waypoints, got {n}")));
        }
        if !(spec.width > 0.0) || !spec.width.is_finite() {
            return Err(Error::Track(format!(
                "line width must be positive, got {}",
                spec.width
            )));
        }
        if spec.waypoints.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Track("non-finite waypoint".into()));
        }
        let wp = &spec.waypoints;
        let at = |i: isize| -> Point {
            if spec.closed {
                wp[i.rem_euclid(n as isize) as usize]
            } else {
                wp[i.clamp(0, n as isize - 1) as usize]
            }
        };
        let segments = if spec.closed { n } else { n - 1 };
        let mut points = Vec::with_capacity(segments * SAMPLES_PER_SEGMENT + 1);
        for s in 0..segments as isize {
            for k in 0..SAMPLES_PER_SEGMENT {
                let t = k as f64 / SAMPLES_PER_SEGMENT as f64;
                points.push(catmull_rom(at(s - 1), at(s), at(s + 1), at(s + 2), t));
            }
        }
        points.push(if spec.closed { wp[0] } else { wp[n - 1] });

        let mut arclength = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        arclength.push(0.0);
        for w in points.windows(2) {
            acc += dist(w[0], w[1]);
            arclength.push(acc);
        }
        let mut bounds = [f64::MAX, f64::MAX, f64::MIN, f64::MIN];
        for p in &points {
            bounds[0] = bounds[0].min(p[0]);
            bounds[1] = bounds[1].min(p[1]);
            bounds[2] = bounds[2].max(p[0]);
            bounds[3] = bounds[3].max(p[1]);
        }
        let index = SegmentGrid::new(&points, bounds, spec.width);
        let track = Self {
            spec,
            points,
            arclength,
            index,
        };
        track.check_self_clearance()?;
        Ok(track)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: TrackSpec = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Self::new(spec)
    }

    /// Samples that are far apart along the curve must stay more than one
    /// line width apart in the plane.
    fn check_self_clearance(&self) -> Result<()> {
        let total = self.length();
        let w = self.spec.width;
        let along = 4.0 * w;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                let mut sep = self.arclength[j] - self.arclength[i];
                if self.spec.closed {
                    sep = sep.min(total - sep);
                }
                if sep > along && dist(self.points[i], self.points[j]) < 2.0 * w {
                    return Err(Error::Track(format!(
                        "centerline passes within {:.3} of itself at arclength {:.2} and {:.2}",
                        dist(self.points[i], self.points[j]),
                        self.arclength[i],
                        self.arclength[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &TrackSpec {
        &self.spec
    }

    pub fn width(&self) -> f64 {
        self.spec.width
    }

    pub fn length(&self) -> f64 {
        *self.arclength.last().expect("non-empty polyline")
    }

    pub fn polyline(&self) -> &[Point] {
        &self.points
    }

    /// Perpendicular distance from `p` to the centerline.
    pub fn distance(&self, p: Point) -> f64 {
        let mut best = f64::MAX;
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let dx = (a[0].min(b[0]) - p[0]).max(p[0] - a[0].max(b[0])).max(0.0);
            let dy = (a[1].min(b[1]) - p[1]).max(p[1] - a[1].max(b[1])).max(0.0);
            if dx * dx + dy * dy >= best * best {
                continue;
            }
            best = best.min(segment_distance(p, a, b));
        }
        best
    }

    /// 1 on the centerline, smoothstep falloff to 0 at one line width.
    pub fn line_intensity(&self, p: Point) -> f64 {
        let w = self.spec.width;
        let mut best = f64::MAX;
        for &s in self.index.candidates(p) {
            let s = s as usize;
            best = best.min(segment_distance(p, self.points[s], self.points[s + 1]));
        }
        if best >= w {
            return 0.0;
        }
        1.0 - smoothstep(best / w)
    }

    /// Start position and heading: the first centerline sample, facing along
    /// the curve.
    pub fn start_pose(&self) -> (Point, f64) {
        let a = self.points[0];
        let b = self.points[1];
        (a, (b[1] - a[1]).atan2(b[0] - a[0]))
    }

    /// Rounded rectangle with two tight and two wide corners.
    pub fn default_spec() -> TrackSpec {
        rounded_rectangle(42.5, 28.7, 3.67, 7.72, 1.43, 1.0)
    }
}

/// Position within a unit-length 90 degree left turn whose curvature rises
/// and falls as `sin^2`, after travelling fraction `u` of it. Entry heading
/// is +x.
fn eased_turn(u: f64) -> Point {
    use std::f64::consts::{FRAC_PI_2, PI};
    let heading = |v: f64| FRAC_PI_2 * (v - (2.0 * PI * v).sin() / (2.0 * PI));
    // Simpson's rule; the integrand is smooth so 64 panels are plenty
    let n = 64;
    let h = u / n as f64;
    let mut acc = [0.0; 2];
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let (s, c) = heading(i as f64 * h).sin_cos();
        acc[0] += w * c;
        acc[1] += w * s;
    }
    [acc[0] * h / 3.0, acc[1] * h / 3.0]
}

/// Waypoints every `spacing` along a `width x height` rectangle centered at
/// the origin whose corners alternate between minimum radius `tight`
/// (bottom-right, top-left) and `wide`. Corners ease in and out, so the
/// curvature has no jumps. Traversed counter-clockwise from the middle of
/// the bottom edge.
pub fn rounded_rectangle(
    width: f64,
    height: f64,
    tight: f64,
    wide: f64,
    line_width: f64,
    spacing: f64,
) -> TrackSpec {
    use std::f64::consts::PI;
    let hx = width / 2.0;
    let hy = height / 2.0;
    // a turn of length L reaches L * reach along both its entry and exit axes
    let reach = eased_turn(1.0)[0];
    let turn_len = |r: f64| PI * r;
    let extent = |r: f64| reach * turn_len(r);
    let mut waypoints: Vec<Point> = Vec::new();
    let straight = |from: Point, to: Point, out: &mut Vec<Point>| {
        let n = (dist(from, to) / spacing).ceil().max(1.0) as usize;
        for k in 0..n {
            let t = k as f64 / n as f64;
            out.push([
                from[0] + t * (to[0] - from[0]),
                from[1] + t * (to[1] - from[1]),
            ]);
        }
    };
    // `dir` is the entry heading as a multiple of 90 degrees
    let turn = |from: Point, r: f64, dir: u8, out: &mut Vec<Point>| {
        let len = turn_len(r);
        let n = (len / spacing).ceil().max(1.0) as usize;
        let (s, c) = (dir as f64 * PI / 2.0).sin_cos();
        for k in 0..n {
            let q = eased_turn(k as f64 / n as f64);
            out.push([
                from[0] + len * (q[0] * c - q[1] * s),
                from[1] + len * (q[0] * s + q[1] * c),
            ]);
        }
    };
    let (et, ew) = (extent(tight), extent(wide));
    straight([0.0, -hy], [hx - et, -hy], &mut waypoints);
    turn([hx - et, -hy], tight, 0, &mut waypoints);
    straight([hx, -hy + et], [hx, hy - ew], &mut waypoints);
    turn([hx, hy - ew], wide, 1, &mut waypoints);
    straight([hx - ew, hy], [-hx + et, hy], &mut waypoints);
    turn([-hx + et, hy], tight, 2, &mut waypoints);
    straight([-hx, hy - et], [-hx, -hy + ew], &mut waypoints);
    turn([-hx, -hy + ew], wide, 3, &mut waypoints);
    straight([-hx + ew, -hy], [0.0, -hy], &mut waypoints);
    TrackSpec {
        waypoints,
        width: line_width,
        closed: true,
    }
}
