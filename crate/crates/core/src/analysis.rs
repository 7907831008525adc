//! Free-boundary geometry measured on discrete fields: extraction of the
//! boundary of the positivity set, growth and gradient fits, non-degeneracy,
//! density and porosity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dist, dist2, Point, ScalarField};
use crate::model::FitResult;
use crate::operators::gradient;

/// Nodes on the discrete free boundary of `{u > ε}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeBoundarySet {
    /// Nodes with `u <= ε` that have an axis neighbour with `u > ε`, ascending.
    pub fb_nodes: Vec<usize>,
    pub epsilon_fb: f64,
}

impl FreeBoundarySet {
    pub fn is_empty(&self) -> bool {
        self.fb_nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.fb_nodes.len()
    }
}

/// `max(100·tol, h^κ)`; falls back to `100·tol` when no exponent is defined.
pub fn default_eps_fb(tol: f64, h: f64, kappa: Option<f64>) -> f64 {
    let floor = 100.0 * tol;
    match kappa {
        Some(k) if k.is_finite() => floor.max(h.powf(k)),
        _ => floor,
    }
}

pub fn extract_free_boundary(u: &ScalarField, epsilon_fb: f64) -> FreeBoundarySet {
    let g = u.grid();
    let v = u.values();
    let fb_nodes = (0..g.len())
        .filter(|&idx| v[idx] <= epsilon_fb && g.axis_neighbors(idx).any(|nb| v[nb] > epsilon_fb))
        .collect();
    FreeBoundarySet { fb_nodes, epsilon_fb }
}

fn ball_nodes(u: &ScalarField, x0: Point, r: f64) -> Result<Vec<usize>> {
    let g = u.grid();
    if !g.contains_ball(x0, r) {
        return Err(Error::BallExitsDomain { x0, r });
    }
    Ok(g.nodes_in_ball(x0, r))
}

/// Max of `u` over node centres in the closed ball `B_r(x0)`.
pub fn sup_over_ball(u: &ScalarField, x0: Point, r: f64) -> Result<f64> {
    let v = u.values();
    Ok(ball_nodes(u, x0, r)?.into_iter().map(|i| v[i]).fold(f64::NEG_INFINITY, f64::max))
}

/// `r_max · 2^-j` for `j = 0..levels`, keeping only radii `>= 4h`.
pub fn dyadic_radii(r_max: f64, levels: usize, h: f64) -> Vec<f64> {
    (0..levels)
        .map(|j| r_max * 0.5f64.powi(j as i32))
        .filter(|&r| r >= 4.0 * h * (1.0 - 1e-12))
        .collect()
}

/// Least-squares fit of `log m = log C + α log r`.
pub fn fit_power_law(samples: Vec<(f64, f64)>) -> Result<FitResult> {
    if samples.len() < 3 {
        return Err(Error::TooFewRadii(samples.len()));
    }
    if let Some(&(r, _)) = samples.iter().find(|(_, m)| !(*m > 0.0)) {
        return Err(Error::VanishingSup { r });
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(r, m)| (r.ln(), m.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rmse = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(FitResult { exponent_hat: slope, constant_hat: intercept.exp(), samples, regression_rmse: rmse })
}

/// Regression of `log sup_{B_r(x0)} u` against `log r` over dyadic radii.
pub fn fit_growth_exponent(u: &ScalarField, x0: Point, r_max: f64, levels: usize) -> Result<FitResult> {
    let radii = dyadic_radii(r_max, levels, u.grid().h());
    fit_sup_growth(u, x0, &radii)
}

/// Same regression over an explicit radii list.
pub fn fit_sup_growth(u: &ScalarField, x0: Point, radii: &[f64]) -> Result<FitResult> {
    let samples = radii.iter().map(|&r| Ok((r, sup_over_ball(u, x0, r)?))).collect::<Result<Vec<_>>>()?;
    fit_power_law(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    /// `min_r sup_{B_r} u / r^κ`.
    pub constant: f64,
    /// `(r, sup_{B_r} u / r^κ)` per radius.
    pub ratios: Vec<(f64, f64)>,
    /// Some radius saw `u ≡ 0` on its ball.
    pub vanishing: bool,
}

impl NondegeneracyReport {
    /// Largest over smallest ratio; infinite when some ratio vanishes.
    pub fn variation(&self) -> f64 {
        let hi = self.ratios.iter().map(|r| r.1).fold(0.0, f64::max);
        if self.constant > 0.0 {
            hi / self.constant
        } else {
            f64::INFINITY
        }
    }
}

pub fn nondegeneracy_constant(u: &ScalarField, x0: Point, radii: &[f64], kappa: f64) -> Result<NondegeneracyReport> {
    if radii.is_empty() {
        return Err(Error::TooFewRadii(0));
    }
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        ratios.push((r, sup_over_ball(u, x0, r)?.max(0.0) / r.powf(kappa)));
    }
    let constant = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(NondegeneracyReport { constant, vanishing: constant == 0.0, ratios })
}

/// Regression of `log sup_{B_r(x0)} |D_h u|` against `log r`.
pub fn gradient_decay_fit(u: &ScalarField, x0: Point, radii: &[f64]) -> Result<FitResult> {
    let grads = gradient(u);
    let samples = radii
        .iter()
        .map(|&r| {
            let m = ball_nodes(u, x0, r)?
                .into_iter()
                .map(|i| (grads[i][0] * grads[i][0] + grads[i][1] * grads[i][1]).sqrt())
                .fold(0.0, f64::max);
            Ok((r, m))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_power_law(samples)
}

/// Euclidean distance from `x` to the nearest free boundary node.
fn dist_to_fb(coords: &[Point], x: Point, dim: usize) -> f64 {
    coords.iter().map(|&c| dist2(c, x, dim)).fold(f64::INFINITY, f64::min).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceDecay {
    /// Measured `max u(x) / dist(x, FB)^κ`.
    pub max_ratio: f64,
    /// `(node, dist, ratio)` for every sampled node off the free boundary.
    pub samples: Vec<(usize, f64, f64)>,
}

pub fn distance_decay_check(u: &ScalarField, fb: &FreeBoundarySet, points: &[usize], kappa: f64) -> Result<DistanceDecay> {
    if fb.is_empty() {
        return Err(Error::EmptyFreeBoundary);
    }
    let g = u.grid();
    let coords: Vec<Point> = fb.fb_nodes.iter().map(|&i| g.coord(i)).collect();
    let mut samples = Vec::new();
    for &idx in points {
        let d = dist_to_fb(&coords, g.coord(idx), g.dim());
        if d == 0.0 {
            continue;
        }
        let ratio = u.get(idx).max(0.0) / d.powf(kappa);
        samples.push((idx, d, ratio));
    }
    let max_ratio = samples.iter().map(|s| s.2).fold(0.0, f64::max);
    Ok(DistanceDecay { max_ratio, samples })
}

/// Lebesgue measure of the ball of radius `r` in dimension `dim`.
pub fn ball_volume(r: f64, dim: usize) -> f64 {
    if dim == 1 {
        2.0 * r
    } else {
        std::f64::consts::PI * r * r
    }
}

/// Positivity fraction `#{u > ε in B_ρ(x0)} h^d / |B_ρ|` per radius, capped at 1.
pub fn positive_density(u: &ScalarField, x0: Point, rhos: &[f64], epsilon_fb: f64) -> Result<Vec<f64>> {
    let g = u.grid();
    let cell = g.h().powi(g.dim() as i32);
    rhos.iter()
        .map(|&rho| {
            let count = ball_nodes(u, x0, rho)?.into_iter().filter(|&i| u.get(i) > epsilon_fb).count();
            Ok((count as f64 * cell / ball_volume(rho, g.dim())).min(1.0))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PorosityReport {
    /// Min over sampled `(x, r)` of the largest relative hole radius.
    pub epsilon: f64,
    /// `(fb node, r, ε')` per sample.
    pub samples: Vec<(usize, f64, f64)>,
}

/// Porosity of the free boundary: for each sampled FB node `x` and radius `r`,
/// the largest `ε'` such that a ball `B_{ε' r}(y) ⊂ B_r(x)` centred at a grid
/// node avoids every FB node. `stride` subsamples the FB nodes.
pub fn porosity_constant(fb: &FreeBoundarySet, u: &ScalarField, radii: &[f64], stride: usize) -> Result<PorosityReport> {
    if fb.is_empty() {
        return Err(Error::EmptyFreeBoundary);
    }
    let g = u.grid();
    let dim = g.dim();
    let coords: Vec<Point> = fb.fb_nodes.iter().map(|&i| g.coord(i)).collect();
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    // distance-to-FB for every node that can serve as a hole centre
    let mut dfb = vec![f64::NAN; g.len()];
    let chosen: Vec<usize> = fb.fb_nodes.iter().copied().step_by(stride.max(1)).collect();
    for &x in &chosen {
        for y in g.nodes_in_ball(g.coord(x), rmax) {
            if dfb[y].is_nan() {
                dfb[y] = dist_to_fb(&coords, g.coord(y), dim);
            }
        }
    }
    let mut samples = Vec::new();
    for &x in &chosen {
        let cx = g.coord(x);
        for &r in radii {
            let best = g
                .nodes_in_ball(cx, r)
                .into_iter()
                .map(|y| (r - dist(g.coord(y), cx, dim)).min(dfb[y]))
                .fold(0.0, f64::max);
            samples.push((x, r, best / r));
        }
    }
    let epsilon = samples.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    Ok(PorosityReport { epsilon, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicRow {
    pub level: usize,
    pub radius: f64,
    pub sup: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Checks `sup_{B_{r_j}} u <= C₀ r0_ratio^(jκ)` with `r_j = r_max · r0_ratio^j`
/// and `C₀ = sup_{B_{r_max}} u`.
pub fn dyadic_decay_check(u: &ScalarField, x0: Point, r_max: f64, r0_ratio: f64, levels: usize, kappa: f64) -> Result<Vec<DyadicRow>> {
    if !(r0_ratio > 0.0 && r0_ratio < 1.0) {
        return Err(Error::Domain(format!("r0 ratio must lie in (0, 1), got {r0_ratio}")));
    }
    let c0 = sup_over_ball(u, x0, r_max)?.max(0.0);
    (0..levels)
        .map(|j| {
            let radius = r_max * r0_ratio.powi(j as i32);
            let sup = sup_over_ball(u, x0, radius)?.max(0.0);
            let bound = c0 * r0_ratio.powf(j as f64 * kappa);
            let margin = bound - sup;
            let pass = margin >= -1e-12 * bound.max(f64::MIN_POSITIVE);
            Ok(DyadicRow { level: j, radius, sup, bound, margin, pass })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid2(n: usize) -> Grid {
        Grid::centered(2, [0.0, 0.0], 1.0, n).unwrap()
    }

    #[test]
    fn extraction_edge_cases() {
        let g = grid2(33);
        assert!(extract_free_boundary(&ScalarField::constant(g, 1.0), 1e-6).is_empty());
        assert!(extract_free_boundary(&ScalarField::zeros(g), 1e-6).is_empty());
        let g1 = Grid::new(1, [-1.0, 0.0], 2.0, 201).unwrap();
        let u = ScalarField::from_fn(g1, |x| x[0].max(0.0).powi(2));
        let h = g1.h();
        let fb = extract_free_boundary(&u, h * h);
        assert!(!fb.is_empty());
        for &i in &fb.fb_nodes {
            assert!(g1.coord(i)[0].abs() <= h * (1.0 + 1e-9));
            assert!(g1.axis_neighbors(i).any(|nb| u.get(nb) > fb.epsilon_fb));
        }
    }

    #[test]
    fn sup_examples() {
        let g = grid2(65);
        assert_eq!(sup_over_ball(&ScalarField::constant(g, 3.0), [0.0, 0.0], 0.5).unwrap(), 3.0);
        let cone = ScalarField::from_fn(g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt());
        assert!((sup_over_ball(&cone, [0.0, 0.0], 0.5).unwrap() - 0.5).abs() <= g.h());
        assert!(matches!(sup_over_ball(&cone, [0.8, 0.0], 0.5), Err(Error::BallExitsDomain { .. })));
    }

    #[test]
    fn exact_profile_fits() {
        let g1 = Grid::new(1, [-1.0, 0.0], 2.0, 513).unwrap();
        let (theta, k, r0) = (0.5, 2.0, 0.25);
        let u = ScalarField::from_fn(g1, |x| theta * (x[0].abs() - r0).max(0.0).powf(k));
        let fit = fit_growth_exponent(&u, [r0, 0.0], 0.5, 6).unwrap();
        assert!((fit.exponent_hat - k).abs() <= 0.05, "{}", fit.exponent_hat);
        let nd = nondegeneracy_constant(&u, [r0, 0.0], &dyadic_radii(0.5, 6, g1.h()), k).unwrap();
        assert!((nd.constant - theta).abs() <= 0.1 * theta);

        let g = grid2(257);
        let u = ScalarField::from_fn(g, |x| 0.25 * (x[0] * x[0] + x[1] * x[1]));
        let fit = fit_growth_exponent(&u, [0.0, 0.0], 0.5, 8).unwrap();
        assert!((fit.exponent_hat - 2.0).abs() <= 0.1);
        let gfit = gradient_decay_fit(&u, [0.0, 0.0], &dyadic_radii(0.5, 8, g.h())).unwrap();
        assert!((gfit.exponent_hat - 1.0).abs() <= 0.05);
    }

    #[test]
    fn cone_and_affine_fits() {
        let g = grid2(129);
        let cone = ScalarField::from_fn(g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt());
        assert!((fit_growth_exponent(&cone, [0.0, 0.0], 0.5, 4).unwrap().exponent_hat - 1.0).abs() < 0.02);
        let affine = ScalarField::from_fn(g, |x| 2.0 * x[0] - x[1] + 3.0);
        let fit = gradient_decay_fit(&affine, [0.0, 0.0], &[0.5, 0.25, 0.125]).unwrap();
        assert!(fit.exponent_hat.abs() < 1e-9);
    }

    #[test]
    fn fit_errors() {
        let g = grid2(65);
        let u = ScalarField::from_fn(g, |x| x[0].max(0.0));
        assert!(matches!(fit_growth_exponent(&u, [0.0, 0.0], 0.5, 2), Err(Error::TooFewRadii(2))));
        let z = ScalarField::zeros(g);
        assert!(matches!(fit_growth_exponent(&z, [0.0, 0.0], 0.5, 3), Err(Error::VanishingSup { .. })));
        let nd = nondegeneracy_constant(&z, [0.0, 0.0], &[0.5, 0.25], 2.0).unwrap();
        assert!(nd.vanishing && nd.constant == 0.0);
    }

    #[test]
    fn nondegeneracy_min_over_superset() {
        let g = grid2(129);
        let u = ScalarField::from_fn(g, |x| x[0].max(0.0).powi(2) + 0.1 * x[1].max(0.0).powi(3));
        let a = nondegeneracy_constant(&u, [0.0, 0.0], &[0.5, 0.25], 2.0).unwrap().constant;
        let b = nondegeneracy_constant(&u, [0.0, 0.0], &[0.5, 0.25, 0.125, 0.0625], 2.0).unwrap().constant;
        assert!(b <= a);
    }

    #[test]
    fn distance_ratio_on_profile() {
        let g = grid2(201);
        let (theta, r0) = (0.5, 0.4);
        let u = ScalarField::from_fn(g, |x| theta * ((x[0] * x[0] + x[1] * x[1]).sqrt() - r0).max(0.0).powi(2));
        let fb = extract_free_boundary(&u, 1e-10);
        let pts: Vec<usize> = (0..g.len()).filter(|&i| {
            let x = g.coord(i);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            (0.6..0.9).contains(&r)
        }).collect();
        let dd = distance_decay_check(&u, &fb, &pts, 2.0).unwrap();
        assert!((dd.max_ratio - theta).abs() < 0.1 * theta, "{}", dd.max_ratio);
        let inside: Vec<usize> = (0..g.len()).filter(|&i| dist(g.coord(i), [0.0, 0.0], 2) < 0.2).collect();
        assert_eq!(distance_decay_check(&u, &fb, &inside, 2.0).unwrap().max_ratio, 0.0);
        let empty = FreeBoundarySet { fb_nodes: vec![], epsilon_fb: 1e-10 };
        assert!(matches!(distance_decay_check(&u, &empty, &pts, 2.0), Err(Error::EmptyFreeBoundary)));
    }

    #[test]
    fn half_space_density_and_porosity() {
        let g = grid2(201);
        let u = ScalarField::from_fn(g, |x| x[0].max(0.0).powi(2));
        let fr = positive_density(&u, [0.0, 0.0], &[0.1, 0.2, 0.4], 1e-12).unwrap();
        for f in fr {
            assert!((f - 0.5).abs() < 0.06, "{f}");
        }
        let pos = ScalarField::constant(g, 1.0);
        assert!(positive_density(&pos, [0.0, 0.0], &[0.2], 1e-12).unwrap()[0] > 0.95);

        let fb = extract_free_boundary(&u, 1e-12);
        let rep = porosity_constant(&fb, &u, &[0.1, 0.2], 40).unwrap();
        assert!((rep.epsilon - 0.5).abs() < 0.06, "{}", rep.epsilon);
    }

    #[test]
    fn dyadic_examples() {
        let g = grid2(257);
        let exact = ScalarField::from_fn(g, |x| 0.25 * (x[0] * x[0] + x[1] * x[1]));
        let rows = dyadic_decay_check(&exact, [0.0, 0.0], 0.5, 0.5, 4, 2.0).unwrap();
        assert!(rows.iter().all(|r| r.pass));
        let slow = ScalarField::from_fn(g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt());
        assert!(dyadic_decay_check(&slow, [0.0, 0.0], 0.5, 0.5, 4, 2.0).unwrap().iter().any(|r| !r.pass));
        let z = ScalarField::zeros(g);
        assert!(dyadic_decay_check(&z, [0.0, 0.0], 0.5, 0.5, 4, 2.0).unwrap().iter().all(|r| r.pass));
    }

    #[test]
    fn eps_default() {
        assert!((default_eps_fb(1e-8, 0.01, Some(2.0)) - 1e-4).abs() < 1e-18);
        assert!((default_eps_fb(1e-8, 0.01, None) - 1e-6).abs() < 1e-20);
        assert!((default_eps_fb(1e-3, 0.01, Some(2.0)) - 0.1).abs() < 1e-15);
    }
}
