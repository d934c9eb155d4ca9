//! Finite-disk stochastic geometry: FHPPP node sampling, germ-grain wall
//! blockage, tree lines, and line-of-sight queries.
//!
//! Lengths are meters; densities are per km². All sampled objects live on
//! a circular [`Region`] and every sampler takes an explicit random stream
//! so parallel Monte Carlo stays reproducible.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("density must be nonnegative, got {0} per km^2")]
    NegativeDensity(f64),
    #[error("segment length must be positive, got {0} m")]
    NonPositiveLength(f64),
    #[error("region radius must be positive, got {0} m")]
    NonPositiveRadius(f64),
    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,
    #[error("fraction must lie in [0, 1], got {0}")]
    InvalidFraction(f64),
}

/// 2D point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Angle of the vector from `self` to `other`, in (-pi, pi].
    pub fn angle_to(self, other: Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// Circular deployment region. Radius in meters; conversions between the
/// meter coordinate system and km^-2 densities are centralized here.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Region {
    pub center: Point,
    pub radius_m: f64,
}

impl Region {
    pub fn new(center: Point, radius_m: f64) -> Result<Self, GeometryError> {
        if radius_m <= 0.0 || !radius_m.is_finite() {
            return Err(GeometryError::NonPositiveRadius(radius_m));
        }
        Ok(Region { center, radius_m })
    }

    /// Disk centered at the origin with the given area in km².
    pub fn disk_with_area_km2(area_km2: f64) -> Result<Self, GeometryError> {
        let radius = (area_km2 * 1.0e6 / std::f64::consts::PI).sqrt();
        Region::new(Point::ORIGIN, radius)
    }

    pub fn area_km2(&self) -> f64 {
        std::f64::consts::PI * self.radius_m * self.radius_m / 1.0e6
    }

    pub fn contains(&self, p: Point) -> bool {
        self.center.distance(p) <= self.radius_m
    }

    /// Uniform point on the disk via the polar inverse CDF
    /// (r = R * sqrt(u), theta uniform).
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Point {
        let u: f64 = rng.gen();
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = self.radius_m * u.sqrt();
        Point::new(
            self.center.x + r * theta.cos(),
            self.center.y + r * theta.sin(),
        )
    }

    /// Clamps a point radially onto the disk.
    pub fn clamp(&self, p: Point) -> Point {
        let d = self.center.distance(p);
        if d <= self.radius_m || d == 0.0 {
            return p;
        }
        let s = self.radius_m / d;
        Point::new(
            self.center.x + (p.x - self.center.x) * s,
            self.center.y + (p.y - self.center.y) * s,
        )
    }
}

/// FHPPP intensities, all in km^-2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PointProcessParams {
    pub lambda_mbs: f64,
    pub lambda_sbs: f64,
    pub lambda_ue: f64,
    pub lambda_blockers: f64,
    pub lambda_trees: f64,
    pub lambda_temporal: f64,
}

impl PointProcessParams {
    pub fn validate(&self) -> Result<(), GeometryError> {
        for &l in [
            self.lambda_mbs,
            self.lambda_sbs,
            self.lambda_ue,
            self.lambda_blockers,
            self.lambda_trees,
            self.lambda_temporal,
        ]
        .iter()
        {
            if l < 0.0 || !l.is_finite() {
                return Err(GeometryError::NegativeDensity(l));
            }
        }
        Ok(())
    }
}

/// Blocking wall: a line segment given by midpoint, length and orientation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Wall {
    pub midpoint: Point,
    pub length_m: f64,
    /// In [0, pi).
    pub orientation_rad: f64,
}

impl Wall {
    pub fn endpoints(&self) -> (Point, Point) {
        let h = self.length_m / 2.0;
        let (s, c) = self.orientation_rad.sin_cos();
        (
            Point::new(self.midpoint.x - h * c, self.midpoint.y - h * s),
            Point::new(self.midpoint.x + h * c, self.midpoint.y + h * s),
        )
    }
}

/// Tree line with a foliage state and a vegetation depth used by the
/// FITU-R loss model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TreeLine {
    pub midpoint: Point,
    pub length_m: f64,
    pub orientation_rad: f64,
    pub in_leaf: bool,
    pub depth_m: f64,
}

impl TreeLine {
    pub fn endpoints(&self) -> (Point, Point) {
        let h = self.length_m / 2.0;
        let (s, c) = self.orientation_rad.sin_cos();
        (
            Point::new(self.midpoint.x - h * c, self.midpoint.y - h * s),
            Point::new(self.midpoint.x + h * c, self.midpoint.y + h * s),
        )
    }
}

/// Lengths and foliage attributes of the sampled obstacles.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ObstacleGeometry {
    pub wall_len_m: f64,
    pub tree_len_m: f64,
    pub tree_depth_m: f64,
    /// Probability that a sampled tree line is in leaf.
    pub in_leaf_fraction: f64,
}

impl ObstacleGeometry {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.wall_len_m <= 0.0 {
            return Err(GeometryError::NonPositiveLength(self.wall_len_m));
        }
        if self.tree_len_m <= 0.0 {
            return Err(GeometryError::NonPositiveLength(self.tree_len_m));
        }
        if self.tree_depth_m <= 0.0 {
            return Err(GeometryError::NonPositiveLength(self.tree_depth_m));
        }
        if !(0.0..=1.0).contains(&self.in_leaf_fraction) {
            return Err(GeometryError::InvalidFraction(self.in_leaf_fraction));
        }
        Ok(())
    }
}

/// One Monte Carlo draw of the whole scene. Immutable after sampling;
/// safe to share across parallel workers.
#[derive(Debug, Clone)]
pub struct NetworkInstance {
    pub region: Region,
    pub mbs: Vec<Point>,
    pub sbs: Vec<Point>,
    pub ues: Vec<Point>,
    pub walls: Vec<Wall>,
    pub trees: Vec<TreeLine>,
    /// Blockers added after deployment planning; empty at sampling time.
    pub temporal_walls: Vec<Wall>,
}

impl NetworkInstance {
    /// Samples all point processes from independent child streams of `seed`.
    pub fn sample(
        region: Region,
        pp: &PointProcessParams,
        geom: &ObstacleGeometry,
        seed: u64,
    ) -> Result<Self, GeometryError> {
        pp.validate()?;
        geom.validate()?;
        use crate::rng::{child_seed, stream, tag};
        let mbs = sample_ppp(region, pp.lambda_mbs, &mut stream(child_seed(seed, tag::MBS, 0)))?;
        let sbs = sample_ppp(region, pp.lambda_sbs, &mut stream(child_seed(seed, tag::SBS, 0)))?;
        let ues = sample_ppp(region, pp.lambda_ue, &mut stream(child_seed(seed, tag::UE, 0)))?;
        let walls = sample_blockers(
            region,
            pp.lambda_blockers,
            geom.wall_len_m,
            &mut stream(child_seed(seed, tag::WALLS, 0)),
        )?;
        let trees = sample_tree_lines(
            region,
            pp.lambda_trees,
            geom.tree_len_m,
            geom.tree_depth_m,
            geom.in_leaf_fraction,
            &mut stream(child_seed(seed, tag::TREES, 0)),
        )?;
        Ok(NetworkInstance {
            region,
            mbs,
            sbs,
            ues,
            walls,
            trees,
            temporal_walls: Vec::new(),
        })
    }

    /// Samples a scene with fixed node and obstacle counts (uniform
    /// positions, no Poisson count randomness). Used by controlled tests
    /// and the small benchmark scenarios.
    #[allow(clippy::too_many_arguments)]
    pub fn sample_with_counts(
        region: Region,
        n_mbs: usize,
        n_sbs: usize,
        n_ue: usize,
        n_walls: usize,
        n_trees: usize,
        geom: &ObstacleGeometry,
        seed: u64,
    ) -> Result<Self, GeometryError> {
        geom.validate()?;
        use crate::rng::{child_seed, stream, tag};
        let uniform = |tag_id: u64, n: usize| -> Vec<Point> {
            let mut rng = stream(child_seed(seed, tag_id, 0));
            (0..n).map(|_| region.sample_uniform(&mut rng)).collect()
        };
        let mut wall_rng = stream(child_seed(seed, tag::WALLS, 0));
        let walls = (0..n_walls)
            .map(|_| sample_wall(region, geom.wall_len_m, &mut wall_rng))
            .collect();
        let mut tree_rng = stream(child_seed(seed, tag::TREES, 0));
        let trees = (0..n_trees)
            .map(|_| {
                sample_tree(
                    region,
                    geom.tree_len_m,
                    geom.tree_depth_m,
                    geom.in_leaf_fraction,
                    &mut tree_rng,
                )
            })
            .collect();
        Ok(NetworkInstance {
            region,
            mbs: uniform(tag::MBS, n_mbs),
            sbs: uniform(tag::SBS, n_sbs),
            ues: uniform(tag::UE, n_ue),
            walls,
            trees,
            temporal_walls: Vec::new(),
        })
    }

    /// Static plus temporal walls, in that order.
    pub fn all_walls(&self) -> impl Iterator<Item = &Wall> {
        self.walls.iter().chain(self.temporal_walls.iter())
    }
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive mean");
    dist.sample(rng) as usize
}

/// Samples an FHPPP on the region: Poisson(lambda * area) points, i.i.d.
/// uniform on the disk.
pub fn sample_ppp<R: Rng>(
    region: Region,
    lambda_per_km2: f64,
    rng: &mut R,
) -> Result<Vec<Point>, GeometryError> {
    if lambda_per_km2 < 0.0 || !lambda_per_km2.is_finite() {
        return Err(GeometryError::NegativeDensity(lambda_per_km2));
    }
    let n = poisson_count(lambda_per_km2 * region.area_km2(), rng);
    Ok((0..n).map(|_| region.sample_uniform(rng)).collect())
}

fn sample_wall<R: Rng>(region: Region, length_m: f64, rng: &mut R) -> Wall {
    Wall {
        midpoint: region.sample_uniform(rng),
        length_m,
        orientation_rad: rng.gen_range(0.0..std::f64::consts::PI),
    }
}

/// Germ-grain blockage: FHPPP midpoints, fixed length, orientation
/// uniform on [0, pi).
pub fn sample_blockers<R: Rng>(
    region: Region,
    lambda_per_km2: f64,
    length_m: f64,
    rng: &mut R,
) -> Result<Vec<Wall>, GeometryError> {
    if lambda_per_km2 < 0.0 || !lambda_per_km2.is_finite() {
        return Err(GeometryError::NegativeDensity(lambda_per_km2));
    }
    if length_m <= 0.0 {
        return Err(GeometryError::NonPositiveLength(length_m));
    }
    let n = poisson_count(lambda_per_km2 * region.area_km2(), rng);
    Ok((0..n).map(|_| sample_wall(region, length_m, rng)).collect())
}

fn sample_tree<R: Rng>(
    region: Region,
    length_m: f64,
    depth_m: f64,
    in_leaf_fraction: f64,
    rng: &mut R,
) -> TreeLine {
    TreeLine {
        midpoint: region.sample_uniform(rng),
        length_m,
        orientation_rad: rng.gen_range(0.0..std::f64::consts::PI),
        in_leaf: rng.gen::<f64>() < in_leaf_fraction,
        depth_m,
    }
}

/// Tree lines as an FHPPP with per-line i.i.d. foliage state.
pub fn sample_tree_lines<R: Rng>(
    region: Region,
    lambda_per_km2: f64,
    length_m: f64,
    depth_m: f64,
    in_leaf_fraction: f64,
    rng: &mut R,
) -> Result<Vec<TreeLine>, GeometryError> {
    if lambda_per_km2 < 0.0 || !lambda_per_km2.is_finite() {
        return Err(GeometryError::NegativeDensity(lambda_per_km2));
    }
    if length_m <= 0.0 {
        return Err(GeometryError::NonPositiveLength(length_m));
    }
    if depth_m <= 0.0 {
        return Err(GeometryError::NonPositiveLength(depth_m));
    }
    if !(0.0..=1.0).contains(&in_leaf_fraction) {
        return Err(GeometryError::InvalidFraction(in_leaf_fraction));
    }
    let n = poisson_count(lambda_per_km2 * region.area_km2(), rng);
    Ok((0..n)
        .map(|_| sample_tree(region, length_m, depth_m, in_leaf_fraction, rng))
        .collect())
}

fn orientation(a: Point, b: Point, c: Point) -> i32 {
    let v = (b.y - a.y) * (c.x - b.x) - (b.x - a.x) * (c.y - b.y);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn on_segment(a: Point, b: Point, c: Point) -> bool {
    b.x >= a.x.min(c.x) && b.x <= a.x.max(c.x) && b.y >= a.y.min(c.y) && b.y <= a.y.max(c.y)
}

/// Segment-segment intersection, inclusive of endpoint touches and
/// collinear overlap. Touching counts as blocked: the tie is broken
/// toward blockage.
pub fn segments_intersect(p1: Point, q1: Point, p2: Point, q2: Point) -> bool {
    let o1 = orientation(p1, q1, p2);
    let o2 = orientation(p1, q1, q2);
    let o3 = orientation(p2, q2, p1);
    let o4 = orientation(p2, q2, q1);
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && on_segment(p1, p2, q1))
        || (o2 == 0 && on_segment(p1, q2, q1))
        || (o3 == 0 && on_segment(p2, p1, q2))
        || (o4 == 0 && on_segment(p2, q1, q2))
}

/// True iff the open segment a-b crosses none of the walls. Symmetric in
/// (a, b).
pub fn is_los(a: Point, b: Point, walls: &[Wall]) -> Result<bool, GeometryError> {
    if a == b {
        return Err(GeometryError::DegenerateSegment);
    }
    for w in walls {
        let (p, q) = w.endpoints();
        if segments_intersect(a, b, p, q) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The tree lines whose segment intersects a-b, in input order.
pub fn tree_crossings<'a>(
    a: Point,
    b: Point,
    trees: &'a [TreeLine],
) -> Result<Vec<&'a TreeLine>, GeometryError> {
    if a == b {
        return Err(GeometryError::DegenerateSegment);
    }
    Ok(trees
        .iter()
        .filter(|t| {
            let (p, q) = t.endpoints();
            segments_intersect(a, b, p, q)
        })
        .collect())
}

/// Uniform-grid index over short segments for fast blockage queries.
///
/// Each segment is inserted into every cell its bounding box overlaps; a
/// query walks the cells along the query segment (Amanatides-Woo DDA) and
/// tests the segments in those buckets. Segments spanning two cells get
/// tested twice, which is cheaper than deduplication at these sizes.
#[derive(Debug, Clone)]
pub struct SegmentIndex {
    min_x: f64,
    min_y: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    segs: Vec<(Point, Point)>,
}

impl SegmentIndex {
    pub fn build<'a, I>(region: Region, segments: I) -> Self
    where
        I: IntoIterator<Item = (Point, Point)>,
    {
        let segs: Vec<(Point, Point)> = segments.into_iter().collect();
        let pad = 1.0;
        let min_x = region.center.x - region.radius_m - pad;
        let min_y = region.center.y - region.radius_m - pad;
        let extent = 2.0 * (region.radius_m + pad);
        // ~48 cells across keeps buckets at a handful of walls for the
        // densities used here.
        let n = 48usize;
        let cell = extent / n as f64;
        let mut buckets = vec![Vec::new(); n * n];
        for (i, (p, q)) in segs.iter().enumerate() {
            let x0 = ((p.x.min(q.x) - min_x) / cell).floor().clamp(0.0, (n - 1) as f64) as usize;
            let x1 = ((p.x.max(q.x) - min_x) / cell).floor().clamp(0.0, (n - 1) as f64) as usize;
            let y0 = ((p.y.min(q.y) - min_y) / cell).floor().clamp(0.0, (n - 1) as f64) as usize;
            let y1 = ((p.y.max(q.y) - min_y) / cell).floor().clamp(0.0, (n - 1) as f64) as usize;
            for gy in y0..=y1 {
                for gx in x0..=x1 {
                    buckets[gy * n + gx].push(i as u32);
                }
            }
        }
        SegmentIndex {
            min_x,
            min_y,
            cell,
            nx: n,
            ny: n,
            buckets,
            segs,
        }
    }

    fn cell_of(&self, p: Point) -> (isize, isize) {
        (
            (((p.x - self.min_x) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1),
            (((p.y - self.min_y) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1),
        )
    }

    fn bucket_blocks(&self, idx: usize, a: Point, b: Point) -> bool {
        self.buckets[idx]
            .iter()
            .any(|&i| {
                let (p, q) = self.segs[i as usize];
                segments_intersect(a, b, p, q)
            })
    }

    /// True iff any indexed segment intersects a-b.
    pub fn blocked(&self, a: Point, b: Point) -> bool {
        let (mut ix, mut iy) = self.cell_of(a);
        let (ex, ey) = self.cell_of(b);
        if self.bucket_blocks((iy as usize) * self.nx + ix as usize, a, b) {
            return true;
        }
        if (ix, iy) == (ex, ey) {
            return false;
        }
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let step_x: isize = if dx > 0.0 { 1 } else { -1 };
        let step_y: isize = if dy > 0.0 { 1 } else { -1 };
        let next_bound = |i: isize, min: f64, step: isize| -> f64 {
            let edge = if step > 0 { i + 1 } else { i };
            min + edge as f64 * self.cell
        };
        let mut t_max_x = if dx == 0.0 {
            f64::INFINITY
        } else {
            (next_bound(ix, self.min_x, step_x) - a.x) / dx
        };
        let mut t_max_y = if dy == 0.0 {
            f64::INFINITY
        } else {
            (next_bound(iy, self.min_y, step_y) - a.y) / dy
        };
        let t_delta_x = if dx == 0.0 { f64::INFINITY } else { (self.cell / dx).abs() };
        let t_delta_y = if dy == 0.0 { f64::INFINITY } else { (self.cell / dy).abs() };
        let max_steps = self.nx + self.ny + 4;
        for _ in 0..max_steps {
            if t_max_x < t_max_y {
                ix += step_x;
                t_max_x += t_delta_x;
            } else {
                iy += step_y;
                t_max_y += t_delta_y;
            }
            if ix < 0 || iy < 0 || ix >= self.nx as isize || iy >= self.ny as isize {
                break;
            }
            if self.bucket_blocks((iy as usize) * self.nx + ix as usize, a, b) {
                return true;
            }
            if (ix, iy) == (ex, ey) {
                break;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn zero_intensity_is_empty() {
        let region = Region::disk_with_area_km2(1.0).unwrap();
        let pts = sample_ppp(region, 0.0, &mut stream(1)).unwrap();
        assert!(pts.is_empty());
        let walls = sample_blockers(region, 0.0, 5.0, &mut stream(2)).unwrap();
        assert!(walls.is_empty());
    }

    #[test]
    fn negative_density_rejected() {
        let region = Region::disk_with_area_km2(1.0).unwrap();
        assert_eq!(
            sample_ppp(region, -1.0, &mut stream(1)).unwrap_err(),
            GeometryError::NegativeDensity(-1.0)
        );
    }

    #[test]
    fn sampled_points_inside_region() {
        let region = Region::new(Point::new(100.0, -50.0), 300.0).unwrap();
        let pts = sample_ppp(region, 200.0, &mut stream(3)).unwrap();
        assert!(!pts.is_empty());
        for p in pts {
            assert!(region.contains(p));
        }
    }

    #[test]
    fn degenerate_segment_is_error() {
        let p = Point::new(1.0, 2.0);
        assert_eq!(is_los(p, p, &[]).unwrap_err(), GeometryError::DegenerateSegment);
        assert_eq!(
            tree_crossings(p, p, &[]).unwrap_err(),
            GeometryError::DegenerateSegment
        );
    }

    #[test]
    fn no_walls_means_los() {
        assert!(is_los(Point::new(0.0, 0.0), Point::new(10.0, 0.0), &[]).unwrap());
    }

    #[test]
    fn crossing_wall_blocks() {
        // Wall perpendicular to and crossing the midpoint of a-b.
        let wall = Wall {
            midpoint: Point::new(5.0, 0.0),
            length_m: 4.0,
            orientation_rad: std::f64::consts::FRAC_PI_2,
        };
        assert!(!is_los(Point::new(0.0, 0.0), Point::new(10.0, 0.0), &[wall]).unwrap());
    }

    #[test]
    fn endpoint_touch_counts_as_blocked() {
        // Wall tip exactly on the segment.
        let wall = Wall {
            midpoint: Point::new(5.0, 1.0),
            length_m: 2.0,
            orientation_rad: std::f64::consts::FRAC_PI_2,
        };
        assert!(!is_los(Point::new(0.0, 0.0), Point::new(10.0, 0.0), &[wall]).unwrap());
    }

    #[test]
    fn single_tree_crossing_found() {
        let tree = TreeLine {
            midpoint: Point::new(5.0, 0.0),
            length_m: 4.0,
            orientation_rad: std::f64::consts::FRAC_PI_2,
            in_leaf: true,
            depth_m: 7.5,
        };
        let far = TreeLine {
            midpoint: Point::new(50.0, 50.0),
            ..tree
        };
        let trees = vec![tree, far];
        let hits = tree_crossings(Point::new(0.0, 0.0), Point::new(10.0, 0.0), &trees).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].midpoint.x, 5.0);
    }

    #[test]
    fn los_is_symmetric() {
        let region = Region::disk_with_area_km2(0.25).unwrap();
        let mut rng = stream(7);
        let walls = sample_blockers(region, 300.0, 10.0, &mut rng).unwrap();
        for _ in 0..200 {
            let a = region.sample_uniform(&mut rng);
            let b = region.sample_uniform(&mut rng);
            if a == b {
                continue;
            }
            assert_eq!(is_los(a, b, &walls).unwrap(), is_los(b, a, &walls).unwrap());
        }
    }

    #[test]
    fn segment_index_matches_linear_scan() {
        let region = Region::disk_with_area_km2(1.0).unwrap();
        let mut rng = stream(11);
        let walls = sample_blockers(region, 500.0, 5.0, &mut rng).unwrap();
        let index = SegmentIndex::build(region, walls.iter().map(|w| w.endpoints()));
        for _ in 0..2000 {
            let a = region.sample_uniform(&mut rng);
            let b = region.sample_uniform(&mut rng);
            if a == b {
                continue;
            }
            assert_eq!(index.blocked(a, b), !is_los(a, b, &walls).unwrap());
        }
    }

    #[test]
    fn clamp_projects_onto_disk() {
        let region = Region::new(Point::ORIGIN, 10.0).unwrap();
        let p = region.clamp(Point::new(30.0, 40.0));
        assert!((region.center.distance(p) - 10.0).abs() < 1e-9);
        let inside = Point::new(1.0, 1.0);
        assert_eq!(region.clamp(inside), inside);
    }
}
