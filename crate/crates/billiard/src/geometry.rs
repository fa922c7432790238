//! Billiard table on the unit 2-torus with disjoint circular scatterers.
//!
//! The table is immutable after construction and shared read-only across
//! workers. Validation covers the two geometric hypotheses the rest of the
//! crate leans on: pairwise disjointness of the scatterer disks (including
//! periodic translates) and the finite-horizon property, which is checked by
//! enumerating lattice corridors up to a direction height plus a random probe
//! ensemble.

use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One circular scatterer, center in [0,1)^2 torus coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Scatterer {
    pub center: Vec2,
    pub radius: f64,
}

impl Scatterer {
    pub fn perimeter(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.radius
    }

    pub fn curvature(&self) -> f64 {
        1.0 / self.radius
    }

    /// Boundary point and inward (into the table) normal at arclength `r`.
    pub fn boundary_point(&self, r: f64) -> (Vec2, Vec2) {
        let theta = r / self.radius;
        let outward = Vec2::from_angle(theta);
        (self.center + outward * self.radius, outward)
    }

    /// Arclength coordinate of a boundary point, in [0, perimeter). The
    /// point may be given in any periodic image.
    pub fn arclength_of(&self, p: Vec2) -> f64 {
        let d = p - self.center;
        let d = Vec2::new(d.x - d.x.round(), d.y - d.y.round());
        let theta = d.y.atan2(d.x).rem_euclid(2.0 * std::f64::consts::PI);
        theta * self.radius
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("scatterers {0} and {1} overlap (gap {2:.6})")]
    Overlap(usize, usize, f64),
    #[error("scatterer {0} has non-positive radius")]
    BadRadius(usize),
    #[error("scatterer {0} has curvature {1:.4} outside [{2:.4}, {3:.4}]")]
    CurvatureOutOfRange(usize, f64, f64, f64),
    #[error("table has no scatterers")]
    Empty,
}

/// Regularity exponents and cutoffs carried by the table configuration.
/// The classical Lorentz-gas values are the defaults.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TableParams {
    /// First homogeneity strip index.
    pub k0: u32,
    /// Configured lower bound on the free path.
    pub tau_min: f64,
    /// Cap on the free path; flights longer than this fail the horizon check.
    pub tau_max: f64,
    /// Exponent of the singularity-neighborhood measure bound.
    pub s0: f64,
    /// Exponent of the derivative blow-up bound.
    pub q0: f64,
    /// Holder exponent for distortion bounds.
    pub gamma0: f64,
    /// Curvature window: curvatures lie in [k_star, 1/k_star].
    pub k_star: f64,
    /// C^3-norm bound on the boundary; for circles this is a consistency
    /// knob only.
    pub e_star: f64,
}

impl Default for TableParams {
    fn default() -> Self {
        TableParams {
            k0: 10,
            tau_min: 0.1,
            tau_max: 2.0,
            s0: 1.0,
            q0: 0.5,
            gamma0: 1.0 / 3.0,
            k_star: 0.08,
            e_star: 20.0,
        }
    }
}

/// The table: scatterer list plus the configured exponents, with a
/// precomputed cell index for ray tracing.
#[derive(Debug, Clone)]
pub struct Table {
    pub scatterers: Vec<Scatterer>,
    pub params: TableParams,
    /// Cumulative perimeters; cum[i] = total boundary length of scatterers < i.
    cum_perimeter: Vec<f64>,
    total_perimeter: f64,
    /// For each unit cell offset in the walk window, the candidate
    /// (scatterer index, translated center) pairs whose disk meets that cell.
    cell_candidates: Vec<Vec<(usize, Vec2)>>,
    cell_window: i64,
}

impl Table {
    pub fn new(scatterers: Vec<Scatterer>, params: TableParams) -> Result<Table, GeometryError> {
        if scatterers.is_empty() {
            return Err(GeometryError::Empty);
        }
        for (i, s) in scatterers.iter().enumerate() {
            if !(s.radius > 0.0) {
                return Err(GeometryError::BadRadius(i));
            }
            let k = s.curvature();
            if k < params.k_star || k > 1.0 / params.k_star {
                return Err(GeometryError::CurvatureOutOfRange(
                    i,
                    k,
                    params.k_star,
                    1.0 / params.k_star,
                ));
            }
        }
        // Disjointness over the 3x3 block of periodic translates.
        for i in 0..scatterers.len() {
            for j in 0..scatterers.len() {
                for dx in -1..=1i64 {
                    for dy in -1..=1i64 {
                        if i == j && dx == 0 && dy == 0 {
                            continue;
                        }
                        let shift = Vec2::new(dx as f64, dy as f64);
                        let d = (scatterers[i].center - scatterers[j].center - shift).norm();
                        let gap = d - scatterers[i].radius - scatterers[j].radius;
                        if gap <= 0.0 && i <= j {
                            return Err(GeometryError::Overlap(i, j, gap));
                        }
                    }
                }
            }
        }

        let mut cum = Vec::with_capacity(scatterers.len());
        let mut total = 0.0;
        for s in &scatterers {
            cum.push(total);
            total += s.perimeter();
        }

        // Candidate lists for the cell walk: window wide enough for any
        // flight up to tau_max.
        let window = params.tau_max.ceil() as i64 + 1;
        let side = (2 * window + 1) as usize;
        let mut cells = vec![Vec::new(); side * side];
        for (ci, cell) in cells.iter_mut().enumerate() {
            let cx = (ci % side) as i64 - window;
            let cy = (ci / side) as i64 - window;
            for (si, s) in scatterers.iter().enumerate() {
                for dx in cx - 1..=cx + 1 {
                    for dy in cy - 1..=cy + 1 {
                        let c = s.center + Vec2::new(dx as f64, dy as f64);
                        // Disk meets the cell [cx, cx+1) x [cy, cy+1)?
                        let nx = c.x.clamp(cx as f64, cx as f64 + 1.0);
                        let ny = c.y.clamp(cy as f64, cy as f64 + 1.0);
                        if (c - Vec2::new(nx, ny)).norm_sq() <= s.radius * s.radius {
                            cells_push_unique(cell, (si, c));
                        }
                    }
                }
            }
        }
        Ok(Table {
            scatterers,
            params,
            cum_perimeter: cum,
            total_perimeter: total,
            cell_candidates: cells,
            cell_window: window,
        })
    }

    pub fn total_perimeter(&self) -> f64 {
        self.total_perimeter
    }

    pub fn cum_perimeter(&self, i: usize) -> f64 {
        self.cum_perimeter[i]
    }

    /// Scatterer index and local arclength for a global arclength coordinate.
    pub fn locate_arclength(&self, global_r: f64) -> (usize, f64) {
        let r = global_r.rem_euclid(self.total_perimeter);
        let mut idx = match self
            .cum_perimeter
            .binary_search_by(|c| c.partial_cmp(&r).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        if idx >= self.scatterers.len() {
            idx = self.scatterers.len() - 1;
        }
        (idx, r - self.cum_perimeter[idx])
    }

    /// First intersection of the ray `origin + t*dir` (unit `dir`) with any
    /// scatterer disk, searched by walking unit cells up to `cap`.
    ///
    /// Returns (scatterer index, flight time, hit point in ray coordinates).
    pub fn first_hit(&self, origin: Vec2, dir: Vec2, cap: f64) -> Option<(usize, f64, Vec2)> {
        debug_assert!((dir.norm() - 1.0).abs() < 1e-9);
        let window = self.cell_window;
        let side = (2 * window + 1) as usize;
        // The walk is performed in coordinates relative to the cell of the
        // origin so the candidate table (centered at 0) applies.
        let base = Vec2::new(origin.x.floor(), origin.y.floor());
        let o = origin - base;

        let mut best: Option<(usize, f64, Vec2)> = None;
        let mut cx = 0i64;
        let mut cy = 0i64;
        // DDA parameters.
        let step_x = if dir.x > 0.0 { 1 } else { -1 };
        let step_y = if dir.y > 0.0 { 1 } else { -1 };
        let inv_dx = if dir.x != 0.0 { 1.0 / dir.x } else { f64::INFINITY };
        let inv_dy = if dir.y != 0.0 { 1.0 / dir.y } else { f64::INFINITY };
        let mut t_max_x = if dir.x > 0.0 {
            (cx as f64 + 1.0 - o.x) * inv_dx
        } else if dir.x < 0.0 {
            (cx as f64 - o.x) * inv_dx
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dir.y > 0.0 {
            (cy as f64 + 1.0 - o.y) * inv_dy
        } else if dir.y < 0.0 {
            (cy as f64 - o.y) * inv_dy
        } else {
            f64::INFINITY
        };
        let t_delta_x = inv_dx.abs();
        let t_delta_y = inv_dy.abs();

        let mut t_entry = 0.0f64;
        loop {
            if cx.abs() > window || cy.abs() > window {
                break;
            }
            let ci = ((cy + window) as usize) * side + (cx + window) as usize;
            for &(si, center) in &self.cell_candidates[ci] {
                if let Some(t) = ray_circle(o, dir, center, self.scatterers[si].radius) {
                    if t > 1e-12 && t <= cap {
                        if best.map_or(true, |(_, bt, _)| t < bt) {
                            best = Some((si, t, o + dir * t));
                        }
                    }
                }
            }
            // A hit inside the current cell's entry segment is final.
            if let Some((_, bt, _)) = best {
                if bt <= t_max_x.min(t_max_y) {
                    break;
                }
            }
            if t_entry > cap {
                break;
            }
            if t_max_x < t_max_y {
                cx += step_x;
                t_entry = t_max_x;
                t_max_x += t_delta_x;
            } else {
                cy += step_y;
                t_entry = t_max_y;
                t_max_y += t_delta_y;
            }
        }
        best.map(|(si, t, p)| (si, t, p + base))
    }
}

fn cells_push_unique(v: &mut Vec<(usize, Vec2)>, item: (usize, Vec2)) {
    if !v
        .iter()
        .any(|&(si, c)| si == item.0 && (c - item.1).norm_sq() < 1e-18)
    {
        v.push(item);
    }
}

/// Smallest positive root of |o + t d - c|^2 = r^2, computed in the
/// numerically stable form.
fn ray_circle(o: Vec2, d: Vec2, c: Vec2, r: f64) -> Option<f64> {
    let m = o - c;
    let b = m.dot(d);
    let disc = b * b - (m.norm_sq() - r * r);
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = -b - sq;
    if t0 > 0.0 {
        Some(t0)
    } else {
        let t1 = -b + sq;
        if t1 > 0.0 {
            Some(t1)
        } else {
            None
        }
    }
}

/// Minimal Euclidean distance between two torus points over the nine nearest
/// periodic images.
pub fn torus_distance(p: Vec2, q: Vec2) -> f64 {
    let mut best = f64::INFINITY;
    for dx in -1..=1i64 {
        for dy in -1..=1i64 {
            let d = (p - q - Vec2::new(dx as f64, dy as f64)).norm_sq();
            if d < best {
                best = d;
            }
        }
    }
    best.sqrt()
}

/// A free corridor found by the lattice-line enumeration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Corridor {
    /// Primitive lattice direction of the corridor.
    pub direction: (i64, i64),
    /// Perpendicular width of the free strip.
    pub width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub min_free_path: f64,
    pub max_free_path: f64,
    pub corridors: Vec<Corridor>,
    /// Probe directions whose flight exceeded the tau_max cap.
    pub horizon_failures: usize,
    pub probes: usize,
}

/// Enumerate free corridors: for each primitive direction of height at most
/// `max_height`, project all scatterer center lattices onto the normal and
/// test whether the radius bands cover the projection period.
pub fn enumerate_corridors(table: &Table, max_height: i64) -> Vec<Corridor> {
    let mut found = Vec::new();
    for p in 0..=max_height {
        for q in -max_height..=max_height {
            if p == 0 && q <= 0 {
                continue;
            }
            if gcd(p.abs(), q.abs()) != 1 {
                continue;
            }
            let v = Vec2::new(p as f64, q as f64);
            let len = v.norm();
            let normal = v.perp() * (1.0 / len);
            // Projections of the center lattice repeat with period 1/|v|.
            let period = 1.0 / len;
            let mut intervals: Vec<(f64, f64)> = Vec::new();
            for s in &table.scatterers {
                let c = s.center.dot(normal).rem_euclid(period);
                intervals.push((c - s.radius, c + s.radius));
            }
            if let Some(gap) = uncovered_gap(&intervals, period) {
                found.push(Corridor {
                    direction: (p, q),
                    width: gap,
                });
            }
        }
    }
    found
}

/// Width of the largest sub-interval of [0, period) not covered by the given
/// intervals (interpreted modulo the period), or None if fully covered.
fn uncovered_gap(intervals: &[(f64, f64)], period: f64) -> Option<f64> {
    // Unroll each interval into [0, period) pieces.
    let mut events: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in intervals {
        if b - a >= period {
            return None;
        }
        let a0 = a.rem_euclid(period);
        let b0 = a0 + (b - a);
        if b0 <= period {
            events.push((a0, b0));
        } else {
            events.push((a0, period));
            events.push((0.0, b0 - period));
        }
    }
    events.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut covered_to = 0.0f64;
    let mut max_gap = 0.0f64;
    for &(a, b) in &events {
        if a > covered_to {
            max_gap = max_gap.max(a - covered_to);
        }
        covered_to = covered_to.max(b);
    }
    if covered_to < period {
        // Wrap the tail gap onto the head.
        let head = events.first().map_or(period, |e| e.0);
        max_gap = max_gap.max(period - covered_to + head.max(0.0));
    }
    if max_gap > 1e-12 {
        Some(max_gap)
    } else {
        None
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Check disjointness, enumerate corridors up to direction height 5, and
/// probe `n_probes` random boundary rays against the tau_max cap.
pub fn validate_table(
    table: &Table,
    n_dirs: i64,
    n_probes: usize,
    seed: u64,
) -> ValidationReport {
    use rand::{Rng, SeedableRng};
    let corridors = enumerate_corridors(table, n_dirs);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut min_fp = f64::INFINITY;
    let mut max_fp: f64 = 0.0;
    let mut horizon_failures = 0usize;
    let cap = table.params.tau_max * 2.0;
    for _ in 0..n_probes {
        let si = rng.gen_range(0..table.scatterers.len());
        let s = &table.scatterers[si];
        let r = rng.gen_range(0.0..s.perimeter());
        let phi = (rng.gen_range(-1.0f64..1.0)).asin();
        let (pos, outward) = s.boundary_point(r);
        let dir = rotate(outward, phi);
        match table.first_hit(pos, dir, cap) {
            Some((_, t, _)) => {
                min_fp = min_fp.min(t);
                max_fp = max_fp.max(t);
                if t > table.params.tau_max {
                    horizon_failures += 1;
                }
            }
            None => horizon_failures += 1,
        }
    }
    ValidationReport {
        pass: corridors.is_empty() && horizon_failures == 0,
        min_free_path: min_fp,
        max_free_path: max_fp,
        corridors,
        horizon_failures,
        probes: n_probes,
    }
}

fn rotate(v: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables;

    #[test]
    fn torus_distance_wraps() {
        let d = torus_distance(Vec2::new(0.1, 0.1), Vec2::new(0.9, 0.9));
        assert!((d - 0.2 * std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(torus_distance(Vec2::new(0.25, 0.5), Vec2::new(0.25, 0.5)), 0.0);
        let d = torus_distance(Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.5));
        assert!((d - 0.5 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn torus_distance_triangle_inequality() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let p = Vec2::new(rng.gen(), rng.gen());
            let q = Vec2::new(rng.gen(), rng.gen());
            let s = Vec2::new(rng.gen(), rng.gen());
            let lhs = torus_distance(p, q);
            let rhs = torus_distance(p, s) + torus_distance(s, q);
            assert!(lhs <= rhs + 1e-12);
            assert!((torus_distance(p, q) - torus_distance(q, p)).abs() < 1e-15);
        }
    }

    #[test]
    fn overlapping_disks_rejected() {
        let err = Table::new(
            vec![
                Scatterer { center: Vec2::new(0.2, 0.2), radius: 0.3 },
                Scatterer { center: Vec2::new(0.7, 0.2), radius: 0.3 },
            ],
            TableParams::default(),
        );
        assert!(matches!(err, Err(GeometryError::Overlap(_, _, _))));
    }

    #[test]
    fn single_disk_has_axis_corridor() {
        let table = Table::new(
            vec![Scatterer { center: Vec2::new(0.5, 0.5), radius: 0.3 }],
            TableParams::default(),
        )
        .unwrap();
        let corridors = enumerate_corridors(&table, 5);
        assert!(corridors.iter().any(|c| c.direction == (1, 0)));
        assert!(corridors.iter().any(|c| c.direction == (0, 1)));
    }

    #[test]
    fn two_disk_checkerboard_has_diagonal_corridor() {
        // Two radius-0.3 disks at (0,0) and (0.5,0.5): the axis corridors are
        // blocked but the (1,1) and (1,-1) corridors of width sqrt(0.5)-0.6
        // stay open, so the pair alone cannot have finite horizon.
        let table = Table::new(
            vec![
                Scatterer { center: Vec2::new(0.0, 0.0), radius: 0.3 },
                Scatterer { center: Vec2::new(0.5, 0.5), radius: 0.3 },
            ],
            TableParams::default(),
        )
        .unwrap();
        let corridors = enumerate_corridors(&table, 5);
        assert!(!corridors.iter().any(|c| c.direction == (1, 0) || c.direction == (0, 1)));
        let diag: Vec<_> = corridors
            .iter()
            .filter(|c| c.direction == (1, 1) || c.direction == (1, -1))
            .collect();
        assert_eq!(diag.len(), 2);
        let expected = 0.5f64.sqrt() - 0.6;
        for c in diag {
            assert!((c.width - expected).abs() < 1e-9, "width {}", c.width);
        }
    }

    #[test]
    fn fh2_table_passes_validation() {
        let table = tables::fh2();
        let report = validate_table(&table, 5, 20_000, 42);
        assert!(report.pass, "corridors: {:?}, horizon failures: {}",
            report.corridors, report.horizon_failures);
        assert!(report.min_free_path >= 0.107, "min fp {}", report.min_free_path);
        assert!(report.max_free_path <= table.params.tau_max);
    }

    #[test]
    fn fh2_min_free_path_matches_oracle() {
        // Brute-force image sweep, independent of the cell walk.
        let table = tables::fh2();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let si = rng.gen_range(0..table.scatterers.len());
            let s = &table.scatterers[si];
            let r = rng.gen_range(0.0..s.perimeter());
            let phi = (rng.gen_range(-1.0f64..1.0)).asin();
            let (pos, outward) = s.boundary_point(r);
            let dir = rotate(outward, phi);
            let walked = table.first_hit(pos, dir, 4.0);
            let brute = brute_force_hit(&table, pos, dir, 4.0);
            match (walked, brute) {
                (Some((i, t, _)), Some((j, u, _))) => {
                    assert_eq!(i, j);
                    assert!((t - u).abs() < 1e-10, "t {} u {}", t, u);
                }
                (a, b) => panic!("disagreement: {:?} vs {:?}", a, b),
            }
        }
    }

    /// Test-only oracle: scan every periodic image in a box large enough for
    /// the cap and take the smallest positive root.
    pub(crate) fn brute_force_hit(
        table: &Table,
        origin: Vec2,
        dir: Vec2,
        cap: f64,
    ) -> Option<(usize, f64, Vec2)> {
        let reach = cap.ceil() as i64 + 2;
        let base = Vec2::new(origin.x.floor(), origin.y.floor());
        let mut best: Option<(usize, f64, Vec2)> = None;
        for (si, s) in table.scatterers.iter().enumerate() {
            for dx in -reach..=reach {
                for dy in -reach..=reach {
                    let c = s.center + base + Vec2::new(dx as f64, dy as f64);
                    if let Some(t) = ray_circle(origin, dir, c, s.radius) {
                        if t > 1e-12 && t <= cap && best.map_or(true, |(_, bt, _)| t < bt) {
                            best = Some((si, t, origin + dir * t));
                        }
                    }
                }
            }
        }
        best
    }
}
