//! Tabulated Casimir force with smooth derivatives for the dynamics.
//!
//! The force is tabulated on a log-spaced separation grid and interpolated
//! by a not-a-knot cubic spline of `ln|F|` against `ln x`. Power-law
//! behaviour is close to linear in these coordinates, which keeps the
//! first and second derivatives of the interpolant accurate.

use rayon::prelude::*;

use crate::error::{CasimirError, Result};
use crate::lifshitz::{ideal_force_derivatives, pfa_force, Geometry, ThermalSetting};
use crate::materials::MirrorStack;
use crate::quadrature::QuadratureSpec;

/// Force and its first two separation derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    pub force: f64,
    pub gradient: f64,
    pub curvature: f64,
}

/// Anything that gives the sphere–plate force as a function of separation.
pub trait ForceLaw: Sync {
    /// `None` when `x` lies outside the law's domain.
    fn sample(&self, x: f64) -> Option<ForceSample>;

    fn force(&self, x: f64) -> Option<f64> {
        self.sample(x).map(|s| s.force)
    }

    /// Separation range over which the law is defined.
    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    /// Interaction energy `U(x)` with `F = −dU/dx`, up to a constant.
    fn potential(&self, x: f64) -> Option<f64>;
}

/// Closed-form ideal-conductor law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealForceLaw {
    pub sphere_radius: f64,
}

impl ForceLaw for IdealForceLaw {
    fn sample(&self, x: f64) -> Option<ForceSample> {
        (x > 0.0).then(|| {
            let (force, gradient, curvature) = ideal_force_derivatives(self.sphere_radius, x);
            ForceSample {
                force,
                gradient,
                curvature,
            }
        })
    }

    fn potential(&self, x: f64) -> Option<f64> {
        // F = −a/x³  ⇒  U = −a/(2x²)
        let (f, _, _) = ideal_force_derivatives(self.sphere_radius, x);
        (x > 0.0).then(|| 0.5 * f * x)
    }
}

/// Separation-independent force; the static-limit test law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantForce(pub f64);

impl ForceLaw for ConstantForce {
    fn sample(&self, _x: f64) -> Option<ForceSample> {
        Some(ForceSample {
            force: self.0,
            gradient: 0.0,
            curvature: 0.0,
        })
    }

    fn potential(&self, x: f64) -> Option<f64> {
        Some(-self.0 * x)
    }
}

/// Log-spaced separation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 200;

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min > 0.0 && self.x_max > self.x_min) {
            return Err(CasimirError::config("field.x_min", "need 0 < x_min < x_max"));
        }
        if self.points < Self::MIN_POINTS {
            return Err(CasimirError::config(
                "field.points",
                format!("need at least {} grid points", Self::MIN_POINTS),
            ));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<f64> {
        let (a, b) = (self.x_min.ln(), self.x_max.ln());
        let h = (b - a) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    self.x_min
                } else if i + 1 == self.points {
                    self.x_max
                } else {
                    (a + h * i as f64).exp()
                }
            })
            .collect()
    }
}

/// Everything needed to evaluate the Casimir force at one separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceModel {
    pub mirror1: MirrorStack,
    pub mirror2: MirrorStack,
    pub sphere_radius: f64,
    pub thermal: ThermalSetting,
    pub quadrature: QuadratureSpec,
}

impl ForceModel {
    /// Direct (quadrature) evaluation of the PFA force.
    pub fn direct_force(&self, x: f64) -> Result<f64> {
        let g = Geometry::new(self.sphere_radius, x)?;
        pfa_force(&g, &self.mirror1, &self.mirror2, &self.thermal, &self.quadrature)
    }
}

/// Interpolated force table; immutable once built.
#[derive(Debug, Clone)]
pub struct CasimirField {
    log_x0: f64,
    step: f64,
    separations: Vec<f64>,
    forces: Vec<f64>,
    log_abs: Vec<f64>,
    second: Vec<f64>,
    gradients: Vec<f64>,
    curvatures: Vec<f64>,
    cumulative_work: Vec<f64>,
    sphere_radius: f64,
}

/// Tabulate `model` on `grid` and build the interpolant.
pub fn build_field(model: &ForceModel, grid: &GridSpec) -> Result<CasimirField> {
    grid.validate()?;
    let xs = grid.nodes();
    let forces = xs
        .par_iter()
        .map(|&x| model.direct_force(x))
        .collect::<Result<Vec<_>>>()?;
    CasimirField::from_table(xs, forces, model.sphere_radius)
}

impl CasimirField {
    /// Build from forces tabulated at log-uniform separations.
    pub fn from_table(separations: Vec<f64>, forces: Vec<f64>, sphere_radius: f64) -> Result<Self> {
        let n = separations.len();
        if n < 4 || forces.len() != n {
            return Err(CasimirError::Domain("force table needs at least 4 matching points".into()));
        }
        if let Some(i) = forces.iter().position(|&f| !(f < 0.0)) {
            return Err(CasimirError::Domain(format!(
                "force must be attractive (negative) on the grid; F = {:e} at x = {:e}",
                forces[i], separations[i]
            )));
        }
        let log_x0 = separations[0].ln();
        let step = (separations[n - 1].ln() - log_x0) / (n - 1) as f64;
        let log_abs: Vec<f64> = forces.iter().map(|f| (-f).ln()).collect();
        let second = not_a_knot_second_derivatives(&log_abs, step);
        let mut field = Self {
            log_x0,
            step,
            separations,
            forces,
            log_abs,
            second,
            gradients: Vec::new(),
            curvatures: Vec::new(),
            cumulative_work: Vec::new(),
            sphere_radius,
        };
        let (gradients, curvatures): (Vec<f64>, Vec<f64>) = field
            .separations
            .iter()
            .map(|&x| {
                let s = field.sample(x).expect("node inside grid");
                (s.gradient, s.curvature)
            })
            .unzip();
        for (i, (&g, &c)) in gradients.iter().zip(&curvatures).enumerate() {
            if !(g > 0.0 && c < 0.0) {
                return Err(CasimirError::Domain(format!(
                    "force field violates dF/dx > 0, d²F/dx² < 0 at x = {:e} (dF/dx = {g:e}, d²F/dx² = {c:e})",
                    field.separations[i]
                )));
            }
        }
        field.gradients = gradients;
        field.curvatures = curvatures;
        field.cumulative_work = field.integrate_intervals();
        Ok(field)
    }

    pub fn separations(&self) -> &[f64] {
        &self.separations
    }

    pub fn forces(&self) -> &[f64] {
        &self.forces
    }

    pub fn gradients(&self) -> &[f64] {
        &self.gradients
    }

    pub fn curvatures(&self) -> &[f64] {
        &self.curvatures
    }

    pub fn sphere_radius(&self) -> f64 {
        self.sphere_radius
    }

    pub fn range(&self) -> (f64, f64) {
        (self.separations[0], *self.separations.last().unwrap())
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = self.range();
        x >= a && x <= b
    }

    /// `(dF/dx) / R`.
    pub fn force_gradient_over_radius(&self, x: f64) -> Option<f64> {
        self.sample(x).map(|s| s.gradient / self.sphere_radius)
    }

    /// Evaluate the spline of `ln|F|` on interval `i` at local coordinate `t ∈ [0,1]`.
    fn spline(&self, i: usize, t: f64) -> (f64, f64, f64) {
        let h = self.step;
        let (y0, y1) = (self.log_abs[i], self.log_abs[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let s = 1.0 - t;
        let value = s * y0 + t * y1 + h * h / 6.0 * ((s * s * s - s) * m0 + (t * t * t - t) * m1);
        let slope = (y1 - y0) / h + h / 6.0 * (-(3.0 * s * s - 1.0) * m0 + (3.0 * t * t - 1.0) * m1);
        let curv = s * m0 + t * m1;
        (value, slope, curv)
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !self.contains(x) {
            return None;
        }
        let n = self.separations.len();
        let u = (x.ln() - self.log_x0) / self.step;
        let i = (u.floor().max(0.0) as usize).min(n - 2);
        Some((i, (u - i as f64).clamp(0.0, 1.0)))
    }

    fn integrate_intervals(&self) -> Vec<f64> {
        // 5-point Gauss–Legendre of F dx on each interval; cumulative from x_max down.
        const NODES: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let n = self.separations.len();
        let mut cum = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let (a, b) = (self.separations[i], self.separations[i + 1]);
            let work: f64 = NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(&z, w)| {
                    let x = 0.5 * (a + b) + 0.5 * (b - a) * z;
                    w * self.sample(x).unwrap().force
                })
                .sum::<f64>()
                * 0.5
                * (b - a);
            cum[i] = cum[i + 1] + work;
        }
        cum
    }
}

impl ForceLaw for CasimirField {
    fn sample(&self, x: f64) -> Option<ForceSample> {
        let (i, t) = self.locate(x)?;
        let (s, ds, d2s) = self.spline(i, t);
        let force = -s.exp();
        let gradient = force * ds / x;
        let curvature = force * (d2s + ds * ds - ds) / (x * x);
        Some(ForceSample {
            force,
            gradient,
            curvature,
        })
    }

    fn domain(&self) -> (f64, f64) {
        self.range()
    }

    /// `U(x) = ∫_x^{x_max} F ds`, zero at the top of the grid.
    fn potential(&self, x: f64) -> Option<f64> {
        let (i, _) = self.locate(x)?;
        let b = self.separations[i + 1];
        let (nodes, weights) = ([-0.774_596_669_241_483, 0.0, 0.774_596_669_241_483], [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]);
        let partial: f64 = nodes
            .iter()
            .zip(weights)
            .map(|(&z, w)| {
                let s = 0.5 * (x + b) + 0.5 * (b - x) * z;
                w * self.sample(s).unwrap().force
            })
            .sum::<f64>()
            * 0.5
            * (b - x);
        Some(self.cumulative_work[i + 1] + partial)
    }
}

/// Second derivatives of a not-a-knot cubic spline through `y` on a uniform grid.
fn not_a_knot_second_derivatives(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 4 {
        return m;
    }
    // Unknowns M_1..M_{n-2}; M_0 and M_{n-1} follow from continuity of s'''.
    let k = n - 2;
    let rhs: Vec<f64> = (1..n - 1)
        .map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h))
        .collect();
    let mut lower = vec![1.0; k];
    let mut diag = vec![4.0; k];
    let mut upper = vec![1.0; k];
    diag[0] = 6.0;
    upper[0] = 0.0;
    diag[k - 1] = 6.0;
    lower[k - 1] = 0.0;
    if k == 1 {
        diag[0] = 6.0;
    }
    // Thomas algorithm.
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..k {
        let den = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / den;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den;
    }
    let mut sol = vec![0.0; k];
    sol[k - 1] = d[k - 1];
    for i in (0..k - 1).rev() {
        sol[i] = d[i] - c[i] * sol[i + 1];
    }
    m[1..n - 1].copy_from_slice(&sol);
    m[0] = 2.0 * m[1] - m[2];
    m[n - 1] = 2.0 * m[n - 2] - m[n - 3];
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal_table(points: usize) -> CasimirField {
        let grid = GridSpec {
            x_min: 20e-9,
            x_max: 1000e-9,
            points,
        };
        let law = IdealForceLaw { sphere_radius: 34.55e-6 };
        let xs = grid.nodes();
        let fs = xs.iter().map(|&x| law.force(x).unwrap()).collect();
        CasimirField::from_table(xs, fs, 34.55e-6).unwrap()
    }

    #[test]
    fn spline_reproduces_cubic_exactly() {
        let y: Vec<f64> = (0..10).map(|i| {
            let u = i as f64 * 0.3;
            1.0 - 2.0 * u + 0.5 * u * u + 0.1 * u * u * u
        }).collect();
        let m = not_a_knot_second_derivatives(&y, 0.3);
        for (i, mi) in m.iter().enumerate() {
            let u = i as f64 * 0.3;
            assert!((mi - (1.0 + 0.6 * u)).abs() < 1e-9, "{i}: {mi}");
        }
    }

    #[test]
    fn power_law_is_exact_in_log_coordinates() {
        let field = ideal_table(200);
        let law = IdealForceLaw { sphere_radius: 34.55e-6 };
        for &x in &[25e-9, 76e-9, 139e-9, 640e-9] {
            let a = field.sample(x).unwrap();
            let b = law.sample(x).unwrap();
            assert!(((a.force - b.force) / b.force).abs() < 1e-12);
            assert!(((a.gradient - b.gradient) / b.gradient).abs() < 1e-9);
            assert!(((a.curvature - b.curvature) / b.curvature).abs() < 1e-9);
        }
    }

    #[test]
    fn node_values_are_reproduced() {
        let field = ideal_table(200);
        for (x, f) in field.separations().iter().zip(field.forces()).step_by(17) {
            let s = field.force(*x).unwrap();
            assert!(((s - f) / f).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_range_is_none() {
        let field = ideal_table(200);
        assert!(field.sample(10e-9).is_none());
        assert!(field.sample(2e-6).is_none());
    }

    #[test]
    fn potential_matches_closed_form() {
        let field = ideal_table(200);
        let law = IdealForceLaw { sphere_radius: 34.55e-6 };
        let (_, top) = field.range();
        for &x in &[30e-9, 76e-9, 400e-9] {
            let u = field.potential(x).unwrap();
            let exact = law.potential(x).unwrap() - law.potential(top).unwrap();
            assert!(((u - exact) / exact).abs() < 1e-9, "{u} vs {exact}");
        }
    }

    #[test]
    fn rejects_repulsive_table() {
        let xs = GridSpec { x_min: 1e-8, x_max: 1e-6, points: 200 }.nodes();
        let fs = vec![1.0; 200];
        assert!(CasimirField::from_table(xs, fs, 1e-5).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec { x_min: 1e-8, x_max: 1e-6, points: 50 }.validate().is_err());
        assert!(GridSpec { x_min: 1e-6, x_max: 1e-8, points: 300 }.validate().is_err());
        let nodes = GridSpec { x_min: 1e-8, x_max: 1e-6, points: 201 }.nodes();
        assert_eq!(nodes[0], 1e-8);
        assert_eq!(nodes[200], 1e-6);
        assert!((nodes[100] / 1e-7 - 1.0).abs() < 1e-12);
    }
}
