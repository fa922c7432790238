//! Singularity sets S_0, S_{+-n}, homogeneity strips, separation times, and
//! the distance-to-singularity diagnostics.
//!
//! S_0 is the grazing set {phi = +-pi/2} (optionally together with the
//! homogeneity strip boundaries); S_{+-n} collects the backward/forward
//! images of S_0 up to generation n. Curves are adaptive polylines in one
//! (r, phi) chart.

use crate::dynamics::{BilliardMap, CollisionPoint, TangentVector};
use crate::exec::{map_collect, ExecMode};
use crate::geometry::Table;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    /// phi = +-pi/2 (and strip boundaries when strips are requested).
    Boundary,
    /// Image of the grazing set under T^{-+i}: a genuine discontinuity curve.
    Dynamical,
    /// Image of a homogeneity strip boundary.
    Homogeneity,
}

/// One singular curve: a polyline in the (r, phi) chart of one scatterer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularCurve {
    pub scatterer: usize,
    /// Signed generation: the curve belongs to S_n.
    pub generation: i32,
    pub kind: CurveKind,
    pub vertices: Vec<(f64, f64)>,
    /// Set when the refinement budget was exhausted before reaching the
    /// target arc tolerance.
    pub truncated: bool,
}

/// Symbol of the coarse itinerary: scatterer index plus homogeneity strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ItinerarySymbol {
    pub scatterer: usize,
    pub strip: i32,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum StripError {
    #[error("phi is tangential")]
    Grazing,
    #[error("phi sits on a strip boundary")]
    OnBoundary,
}

/// Homogeneity strip index of phi for cutoff k0: 0 in the central strip,
/// otherwise the unique |k| >= k0 with pi/2 - |phi| in ((k+1)^-2, k^-2],
/// signed by sign(phi).
pub fn homogeneity_index(phi: f64, k0: u32) -> Result<i32, StripError> {
    let d = FRAC_PI_2 - phi.abs();
    if d <= 0.0 {
        return Err(StripError::Grazing);
    }
    let k0f = k0 as f64;
    if d > 1.0 / (k0f * k0f) {
        return Ok(0);
    }
    let inv = 1.0 / d;
    let k = inv.sqrt().floor();
    // d in ((k+1)^-2, k^-2]  <=>  k^2 <= 1/d < (k+1)^2.
    let k = if inv < k * k { k - 1.0 } else { k };
    let lower = 1.0 / ((k + 1.0) * (k + 1.0));
    let upper = 1.0 / (k * k);
    if (d - lower).abs() < 1e-14 || (d - upper).abs() < 1e-14 {
        return Err(StripError::OnBoundary);
    }
    let k = k as i32;
    Ok(if phi >= 0.0 { k } else { -k })
}

/// Itinerary symbol of a collision point.
pub fn symbol_of(x: CollisionPoint, k0: u32) -> Result<ItinerarySymbol, StripError> {
    Ok(ItinerarySymbol { scatterer: x.scatterer, strip: homogeneity_index(x.phi, k0)? })
}

/// Options for building singularity sets.
#[derive(Debug, Clone, Copy)]
pub struct SingularityOptions {
    /// Maximal |generation|.
    pub n_max: u32,
    /// Include homogeneity strip boundaries in the source set.
    pub strips: bool,
    /// Arc tolerance of the adaptive refinement (image-space sagitta).
    pub arc_tol: f64,
    /// Refinement budget per seeded curve.
    pub max_vertices: usize,
    pub mode: ExecMode,
}

impl Default for SingularityOptions {
    fn default() -> Self {
        SingularityOptions {
            n_max: 1,
            strips: false,
            arc_tol: 1e-4,
            max_vertices: 20_000,
            mode: ExecMode::default(),
        }
    }
}

/// The generation-0 curves: phi = +-pi/2 on every chart, plus strip
/// boundaries when requested.
pub fn generation_zero(table: &Table, strips: bool) -> Vec<SingularCurve> {
    let mut out = Vec::new();
    for (si, s) in table.scatterers.iter().enumerate() {
        let per = s.perimeter();
        let mut levels = vec![(FRAC_PI_2, CurveKind::Boundary), (-FRAC_PI_2, CurveKind::Boundary)];
        if strips {
            let k0 = table.params.k0;
            // A handful of strips is enough for plots; deeper indices are
            // graphically indistinguishable from the grazing line.
            for k in k0..k0 + 8 {
                let phi = FRAC_PI_2 - 1.0 / ((k * k) as f64);
                levels.push((phi, CurveKind::Homogeneity));
                levels.push((-phi, CurveKind::Homogeneity));
            }
        }
        for (phi, kind) in levels {
            out.push(SingularCurve {
                scatterer: si,
                generation: 0,
                kind,
                vertices: vec![(0.0, phi), (per, phi)],
                truncated: false,
            });
        }
    }
    out
}

/// Compute S_n for n > 0 (curves where T^n is discontinuous) or S_{-|n|} for
/// n < 0, together with all intermediate generations, as adaptively refined
/// polylines.
pub fn compute_singularity_set(
    map: &BilliardMap,
    n: i32,
    opts: &SingularityOptions,
) -> Vec<SingularCurve> {
    let mut curves = generation_zero(map.table, opts.strips);
    if n == 0 {
        return curves;
    }
    let backward = n > 0; // S_n needs T^{-i} images of S_0.
    let gens = n.unsigned_abs().min(opts.n_max);
    let sources = generation_zero(map.table, opts.strips);
    let images: Vec<Vec<SingularCurve>> = map_collect(opts.mode, sources.len(), |i| {
        let mut acc = Vec::new();
        let src = &sources[i];
        for gen in 1..=gens {
            let pieces = iterate_curve(map, src, gen, backward, opts);
            acc.extend(pieces.into_iter().map(|mut c| {
                c.generation = if backward { gen as i32 } else { -(gen as i32) };
                c.kind = if src.kind == CurveKind::Homogeneity {
                    CurveKind::Homogeneity
                } else {
                    CurveKind::Dynamical
                };
                c
            }));
        }
        acc
    });
    curves.extend(images.into_iter().flatten());
    curves
}

/// Push a source curve through T^{-gen} (backward=true) or T^{gen},
/// splitting at discontinuities found by itinerary mismatch, refining until
/// the image sagitta is below tolerance.
fn iterate_curve(
    map: &BilliardMap,
    src: &SingularCurve,
    gen: u32,
    backward: bool,
    opts: &SingularityOptions,
) -> Vec<SingularCurve> {
    // Parametrize the source by t in [0,1]; evaluate the image orbit, using
    // points nudged off exact grazing.
    let eval = |t: f64| -> Option<(CollisionPoint, Vec<ItinerarySymbol>)> {
        let (r0, phi0) = interp(&src.vertices, t);
        let phi0 = phi0.clamp(-FRAC_PI_2 + 1e-7, FRAC_PI_2 - 1e-7);
        let mut x = CollisionPoint::new(src.scatterer, r0, phi0);
        let mut symbols = Vec::with_capacity(gen as usize);
        for _ in 0..gen {
            x = if backward { map.inverse_step(x).ok()? } else { map.step(x).ok()? };
            symbols.push(symbol_of(x, map.table.params.k0).ok()?);
        }
        Some((x, symbols))
    };

    #[derive(Clone)]
    struct Node {
        t: f64,
        image: Option<(CollisionPoint, Vec<ItinerarySymbol>)>,
    }
    let n0 = 64.max(src.vertices.len() * 4);
    let mut nodes: Vec<Node> = (0..=n0)
        .map(|i| {
            let t = i as f64 / n0 as f64;
            Node { t, image: eval(t) }
        })
        .collect();

    // Refine: split intervals whose endpoints disagree in itinerary (to
    // bracket the discontinuity) or whose image arc is insufficiently flat.
    let mut budget = opts.max_vertices;
    let mut i = 0;
    while i + 1 < nodes.len() && budget > 0 {
        let split = {
            let a = &nodes[i];
            let b = &nodes[i + 1];
            if b.t - a.t < 1e-12 {
                false
            } else {
                match (&a.image, &b.image) {
                    (Some((xa, sa)), Some((xb, sb))) => {
                        if sa != sb {
                            true
                        } else {
                            // Sagitta test via the midpoint.
                            let mid = eval(0.5 * (a.t + b.t));
                            match mid {
                                Some((xm, ref sm)) if sm == sa => {
                                    let sag = point_line_dist(
                                        (xm.r, xm.phi),
                                        (xa.r, xa.phi),
                                        (xb.r, xb.phi),
                                    );
                                    sag > opts.arc_tol && chart_dist(xa, xb) > opts.arc_tol
                                }
                                _ => true,
                            }
                        }
                    }
                    (None, None) => false,
                    _ => b.t - a.t > 1e-10,
                }
            }
        };
        if split {
            let tm = 0.5 * (nodes[i].t + nodes[i + 1].t);
            nodes.insert(i + 1, Node { t: tm, image: eval(tm) });
            budget -= 1;
        } else {
            i += 1;
        }
    }
    let truncated = budget == 0;

    // Assemble maximal runs with constant itinerary into polylines.
    let mut out: Vec<SingularCurve> = Vec::new();
    let mut run: Vec<(usize, f64, f64)> = Vec::new();
    let mut run_sym: Option<(usize, Vec<ItinerarySymbol>)> = None;
    let flush = |run: &mut Vec<(usize, f64, f64)>, out: &mut Vec<SingularCurve>| {
        if run.len() >= 2 {
            out.push(SingularCurve {
                scatterer: run[0].0,
                generation: 0,
                kind: CurveKind::Dynamical,
                vertices: run.iter().map(|&(_, r, p)| (r, p)).collect(),
                truncated,
            });
        }
        run.clear();
    };
    // Two preimage branches can share an itinerary across a tangency; a gap
    // in chart distance still separates them.
    let glue_tol = 5e-3;
    for node in &nodes {
        match &node.image {
            Some((x, sym)) => {
                let key = (x.scatterer, sym.clone());
                let jump = run
                    .last()
                    .map(|&(_, r, p)| ((x.r - r).powi(2) + (x.phi - p).powi(2)).sqrt() > glue_tol)
                    .unwrap_or(false);
                if run_sym.as_ref() != Some(&key) || jump {
                    flush(&mut run, &mut out);
                    run_sym = Some(key);
                }
                run.push((x.scatterer, x.r, x.phi));
            }
            None => {
                flush(&mut run, &mut out);
                run_sym = None;
            }
        }
    }
    flush(&mut run, &mut out);
    out
}

fn interp(vertices: &[(f64, f64)], t: f64) -> (f64, f64) {
    let n = vertices.len();
    if n == 1 {
        return vertices[0];
    }
    let x = t * (n - 1) as f64;
    let i = (x.floor() as usize).min(n - 2);
    let f = x - i as f64;
    let (r0, p0) = vertices[i];
    let (r1, p1) = vertices[i + 1];
    (r0 + f * (r1 - r0), p0 + f * (p1 - p0))
}

fn point_line_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (px, py) = (p.0 - a.0, p.1 - a.1);
    let (bx, by) = (b.0 - a.0, b.1 - a.1);
    let len2 = bx * bx + by * by;
    if len2 == 0.0 {
        return (px * px + py * py).sqrt();
    }
    let t = ((px * bx + py * by) / len2).clamp(0.0, 1.0);
    let dx = px - t * bx;
    let dy = py - t * by;
    (dx * dx + dy * dy).sqrt()
}

fn chart_dist(a: &CollisionPoint, b: &CollisionPoint) -> f64 {
    if a.scatterer != b.scatterer {
        return f64::INFINITY;
    }
    ((a.r - b.r).powi(2) + (a.phi - b.phi).powi(2)).sqrt()
}

/// Outcome of a separation-time measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeparationTime {
    pub steps: u32,
    /// True when the comparison ended because an orbit hit the grazing
    /// tolerance rather than by symbol mismatch.
    pub singular: bool,
}

/// First n <= cap at which the two orbits' itinerary symbols (scatterer +
/// homogeneity strip) differ; `forward` selects s_+ vs s_-.
pub fn separation_time(
    map: &BilliardMap,
    x: CollisionPoint,
    y: CollisionPoint,
    forward: bool,
    cap: u32,
) -> SeparationTime {
    let k0 = map.table.params.k0;
    let mut a = x;
    let mut b = y;
    for n in 0..cap {
        match (symbol_of(a, k0), symbol_of(b, k0)) {
            (Ok(sa), Ok(sb)) => {
                if sa != sb {
                    return SeparationTime { steps: n, singular: false };
                }
            }
            _ => return SeparationTime { steps: n, singular: true },
        }
        let next = if forward {
            (map.step(a), map.step(b))
        } else {
            (map.inverse_step(a), map.inverse_step(b))
        };
        match next {
            (Ok(na), Ok(nb)) => {
                a = na;
                b = nb;
            }
            _ => return SeparationTime { steps: n, singular: true },
        }
    }
    SeparationTime { steps: cap, singular: false }
}

/// Minimal distance in the (r, phi) chart from x to the curves of S_1
/// (generation-0 grazing lines included).
pub fn distance_to_s1(x: CollisionPoint, curves: &[SingularCurve]) -> f64 {
    let mut best = FRAC_PI_2 - x.phi.abs();
    for c in curves {
        if c.scatterer != x.scatterer || c.kind == CurveKind::Homogeneity {
            continue;
        }
        for w in c.vertices.windows(2) {
            let d = point_line_dist((x.r, x.phi), w[0], w[1]);
            if d < best {
                best = d;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables;
    use crate::ForceModel;
    use rand::{Rng, SeedableRng};

    #[test]
    fn strip_index_examples() {
        // k0 = 10: central strip, then the arithmetic cases from the strip
        // definition pi/2 - k^-2 < phi < pi/2 - (k+1)^-2.
        assert_eq!(homogeneity_index(0.0, 10).unwrap(), 0);
        assert_eq!(homogeneity_index(FRAC_PI_2 - 0.008, 10).unwrap(), 11);
        assert_eq!(homogeneity_index(-(FRAC_PI_2 - 1.0 / 200.0), 10).unwrap(), -14);
        assert!(matches!(homogeneity_index(FRAC_PI_2, 10), Err(StripError::Grazing)));
        assert!(matches!(
            homogeneity_index(FRAC_PI_2 - 1.0 / 144.0, 10),
            Err(StripError::OnBoundary)
        ));
    }

    #[test]
    fn strip_index_is_consistent_with_bands() {
        // Random phis: recover k from the band containment directly.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5000 {
            let phi: f64 = rng.gen_range(-FRAC_PI_2 + 1e-12..FRAC_PI_2 - 1e-12);
            let Ok(k) = homogeneity_index(phi, 10) else { continue };
            let d = FRAC_PI_2 - phi.abs();
            if k == 0 {
                assert!(d > 1.0 / 100.0 - 1e-13);
            } else {
                let ka = k.unsigned_abs() as f64;
                assert!(ka >= 10.0);
                assert!(d <= 1.0 / (ka * ka) + 1e-13);
                assert!(d > 1.0 / ((ka + 1.0) * (ka + 1.0)) - 1e-13);
                assert_eq!(k > 0, phi > 0.0);
            }
        }
    }

    #[test]
    fn generation_zero_has_expected_lines() {
        let table = tables::fh2();
        let curves = generation_zero(&table, false);
        assert_eq!(curves.len(), 2 * table.scatterers.len());
        for c in &curves {
            assert_eq!(c.generation, 0);
            assert!(c.vertices.iter().all(|v| (v.1.abs() - FRAC_PI_2).abs() < 1e-15));
        }
    }

    #[test]
    fn s1_curves_are_stable_aligned_and_s_minus_is_involution_image() {
        let table = tables::fh2();
        let map = BilliardMap::unperturbed(&table);
        let opts = SingularityOptions { n_max: 1, ..Default::default() };
        let s1 = compute_singularity_set(&map, 1, &opts);
        let s1_dyn: Vec<_> = s1.iter().filter(|c| c.kind == CurveKind::Dynamical).collect();
        assert!(!s1_dyn.is_empty());
        // (H2)(2): curves of S_1 \ S_0 are stable curves (negative slope,
        // inside the stable cone).
        let mut segments = 0;
        for c in &s1_dyn {
            for w in c.vertices.windows(2) {
                let dr = w[1].0 - w[0].0;
                let dphi = w[1].1 - w[0].1;
                if dr.abs() < 1e-9 {
                    continue;
                }
                let x = CollisionPoint::new(c.scatterer, 0.5 * (w[0].0 + w[1].0), 0.5 * (w[0].1 + w[1].1));
                if x.phi.abs() > 1.45 {
                    continue;
                }
                assert!(
                    map.in_stable_cone(x, TangentVector::new(dr, dphi)),
                    "segment slope {} at phi {} not stable-aligned",
                    dphi / dr,
                    x.phi
                );
                segments += 1;
            }
        }
        assert!(segments > 100);

        // S_{-1} = I(S_1) as sets: sample vertices of S_{-1} and check the
        // reflected point sits near some S_1 curve.
        let sm1 = compute_singularity_set(&map, -1, &opts);
        let mut checked = 0;
        for c in sm1.iter().filter(|c| c.kind == CurveKind::Dynamical) {
            for &(r, phi) in c.vertices.iter().step_by(23) {
                let reflected = CollisionPoint::new(c.scatterer, r, -phi);
                let d = distance_to_s1(reflected, &s1);
                assert!(d < 5e-3, "involution image off S_1 by {}", d);
                checked += 1;
            }
        }
        assert!(checked > 30);
    }

    #[test]
    fn separation_examples() {
        let table = tables::fh2();
        let map = BilliardMap::unperturbed(&table);
        // Different scatterers separate immediately.
        let x = CollisionPoint::new(0, 0.1, 0.2);
        let y = CollisionPoint::new(1, 0.1, 0.2);
        assert_eq!(separation_time(&map, x, y, true, 30).steps, 0);
        // Identical points never separate.
        assert_eq!(separation_time(&map, x, x, true, 30).steps, 30);
        // Nearby points on one unstable direction separate slowly.
        let theta = std::f64::consts::FRAC_PI_4;
        let x = CollisionPoint::new(0, theta * 0.3, 0.0);
        let v = map.unstable_direction(x, 8).unwrap();
        let y = CollisionPoint::new(0, x.r + 1e-6 * v.dr, x.phi + 1e-6 * v.dphi);
        let s = separation_time(&map, x, y, true, 30);
        assert!(s.steps >= 3, "separated after {}", s.steps);
    }

    #[test]
    fn separation_time_reversal_symmetry() {
        // s_+(x, y) = s_-(Ix, Iy).
        let table = tables::fh2();
        let map = BilliardMap::unperturbed(&table);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let si = rng.gen_range(0..table.scatterers.len());
            let per = table.scatterers[si].perimeter();
            let r: f64 = rng.gen_range(0.0..per);
            let phi: f64 = rng.gen_range(-1.2..1.2);
            let x = CollisionPoint::new(si, r, phi);
            let y = CollisionPoint::new(si, r + 1e-4, phi + rng.gen_range(-2e-4..2e-4));
            let fwd = separation_time(&map, x, y, true, 20);
            let bwd = separation_time(&map, x.involution(), y.involution(), false, 20);
            if !fwd.singular && !bwd.singular {
                assert_eq!(fwd.steps, bwd.steps);
            }
        }
    }

    #[test]
    fn distance_to_s1_far_point() {
        let table = tables::fh2();
        let map = BilliardMap::unperturbed(&table);
        let opts = SingularityOptions::default();
        let s1 = compute_singularity_set(&map, 1, &opts);
        // The period-2 anchor sits well inside a continuity domain.
        let theta = std::f64::consts::FRAC_PI_4;
        let x = CollisionPoint::new(0, theta * 0.3, 0.0);
        let d = distance_to_s1(x, &s1);
        assert!(d >= 0.1, "distance {}", d);
        // A grazing point has distance zero to S_0.
        let g = CollisionPoint::new(0, 0.3, FRAC_PI_2);
        assert!(distance_to_s1(g, &s1) < 1e-12);
    }

    /// Bisect onto a point of S_1 \ S_0 along the phi-axis at fixed r: the
    /// crossing where the target scatterer of the next collision changes.
    fn dynamical_singularity_phi(map: &BilliardMap, r: f64) -> Option<f64> {
        let probe = |phi: f64| map.step(CollisionPoint::new(0, r, phi)).ok().map(|y| y.scatterer);
        let n = 400;
        let mut prev = probe(0.0)?;
        for i in 1..=n {
            let phi = 1.45 * i as f64 / n as f64;
            let Some(cur) = probe(phi) else { continue };
            if cur != prev {
                let mut lo = 1.45 * (i - 1) as f64 / n as f64;
                let mut hi = phi;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    match probe(mid) {
                        Some(s) if s == prev => lo = mid,
                        _ => hi = mid,
                    }
                }
                return Some(0.5 * (lo + hi));
            }
            prev = cur;
        }
        None
    }

    #[test]
    fn derivative_blowup_exponent_near_dynamical_curve() {
        // Approaching a curve of S_1 \ S_0 transversally, the image angle
        // grazes and ||DT|| ~ d(x, S_1)^{-q0} with q0 = 1/2. The fitted
        // log-log slope must confirm the power law (and stay within the
        // bound's window [-1.2 q0, 0]).
        let table = tables::fh2();
        let map = BilliardMap::unperturbed(&table);
        let r = 0.25;
        let phi_star = dynamical_singularity_phi(&map, r).expect("crossing exists");
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for side in [-1.0, 1.0] {
            let mut pts = Vec::new();
            for i in 6..16 {
                let eps = 2.0f64.powi(-i);
                let x = CollisionPoint::new(0, r, phi_star + side * eps);
                let Ok(dm) = map.derivative(x) else { continue };
                let norm = dm.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
                pts.push((eps.ln(), norm.ln()));
            }
            // Keep the grazing side: the one where the norm blows up.
            if pts.len() >= 6 && pts.last().unwrap().1 > pts.first().unwrap().1 + 1.0 {
                xs = pts.iter().map(|p| p.0).collect();
                ys = pts.iter().map(|p| p.1).collect();
            }
        }
        assert!(xs.len() >= 6, "no grazing side found");
        let fit = crate::fit::fit_line(&xs, &ys, None).unwrap();
        let q0 = table.params.q0;
        assert!(fit.slope <= 0.0 && fit.slope >= -1.2 * q0, "slope {}", fit.slope);
        assert!(fit.slope < -0.8 * q0, "blow-up too weak: slope {}", fit.slope);
    }

    #[test]
    fn s1_neighborhood_measure_scales_linearly() {
        // m{d(x, S_1) <= eps} <= C eps^{s0}: the fitted exponent over
        // eps in {2^-4 .. 2^-9} is at least 0.9 for s0 = 1.
        let table = tables::fh2();
        let map = BilliardMap::unperturbed(&table);
        let opts = SingularityOptions::default();
        let s1 = compute_singularity_set(&map, 1, &opts);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 20_000;
        let dists: Vec<f64> = (0..n)
            .map(|_| {
                let si = rng.gen_range(0..table.scatterers.len());
                let per = table.scatterers[si].perimeter();
                let x = CollisionPoint::new(
                    si,
                    rng.gen_range(0.0..per),
                    rng.gen_range(-FRAC_PI_2..FRAC_PI_2),
                );
                distance_to_s1(x, &s1)
            })
            .collect();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 4..=9 {
            let eps = 2.0f64.powi(-i);
            let frac = dists.iter().filter(|&&d| d <= eps).count() as f64 / n as f64;
            if frac > 0.0 {
                xs.push(eps.ln());
                ys.push(frac.ln());
            }
        }
        let fit = crate::fit::fit_line(&xs, &ys, None).unwrap();
        assert!(fit.slope >= 0.9 * table.params.s0, "exponent {}", fit.slope);
    }

    #[test]
    fn perturbed_s1_still_stable_aligned() {
        let table = tables::fh2();
        let map = BilliardMap::new(&table, ForceModel::AngularKick { eps: 0.01 });
        let opts = SingularityOptions { max_vertices: 4000, ..Default::default() };
        let s1 = compute_singularity_set(&map, 1, &opts);
        let count = s1.iter().filter(|c| c.kind == CurveKind::Dynamical).count();
        assert!(count > 0);
    }
}
