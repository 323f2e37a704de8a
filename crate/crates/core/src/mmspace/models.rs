//! Analytic densities of the catalog geometries.

use std::f64::consts::{E, PI};

use super::descriptor::SpaceDescriptor;
use super::grid::{BoundaryCondition, MeasureMode};

/// Meridian profile `F(t) = e^{−√|t|}` for `|t| > 1`, extended inside
/// `[−1, 1]` by the even quartic `a + bt² + ct⁴` matching `F, F', F''` at
/// `|t| = 1`. Returns `(F, F', F'')`.
pub fn revolution_profile(t: f64) -> (f64, f64, f64) {
    let s = t.abs();
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    if s > 1.0 {
        let r = s.sqrt();
        let f = (-r).exp();
        let d1 = -f / (2.0 * r);
        let d2 = f * (1.0 / (4.0 * s) + 1.0 / (4.0 * s * r));
        (f, sign * d1, d2)
    } else {
        let (a, b, c) = quartic_coefficients();
        let f = a + b * s * s + c * s.powi(4);
        let d1 = 2.0 * b * s + 4.0 * c * s.powi(3);
        let d2 = 2.0 * b + 12.0 * c * s * s;
        (f, sign * d1, d2)
    }
}

/// `(a, b, c)` of the quartic extension: `a = 11/(8e)`, `b = −1/(2e)`, `c = 1/(8e)`.
pub fn quartic_coefficients() -> (f64, f64, f64) {
    (11.0 / (8.0 * E), -1.0 / (2.0 * E), 1.0 / (8.0 * E))
}

/// Gaussian curvature `−F''/(F √(1+F'²))` of the surface at parameter `t`,
/// with derivatives taken from central differences of step `h`.
pub fn revolution_curvature_fd(t: f64, h: f64) -> f64 {
    let f = |s: f64| revolution_profile(s).0;
    let f0 = f(t);
    let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
    let d2 = (f(t + h) - 2.0 * f0 + f(t - h)) / (h * h);
    -d2 / (f0 * (1.0 + d1 * d1).sqrt())
}

/// Surface measure per unit parameter: `2π F √(1 + F'²)`.
pub fn revolution_area_density(t: f64) -> f64 {
    let (f, d1, _) = revolution_profile(t);
    2.0 * PI * f * (1.0 + d1 * d1).sqrt()
}

/// Radial density of the hyperbolic plane: circumference of the circle of radius `r`.
pub fn hyperbolic_density(r: f64) -> f64 {
    2.0 * PI * r.sinh()
}

/// Discretization recipe for one descriptor: the parameter interval, the
/// measure per unit parameter, the density per unit arclength and the
/// arclength element.
pub(crate) struct ModelSpec {
    pub lo: f64,
    pub hi: f64,
    pub mass_density: Box<dyn Fn(f64) -> f64 + Sync>,
    pub line_density: Box<dyn Fn(f64) -> f64 + Sync>,
    /// `dx/ds`; `None` means the parameter is already arclength.
    pub speed: Option<Box<dyn Fn(f64) -> f64 + Sync>>,
    pub bc: BoundaryCondition,
    pub mode: MeasureMode,
    pub k_tag: f64,
}

pub(crate) fn spec_for(desc: &SpaceDescriptor) -> ModelSpec {
    match *desc {
        SpaceDescriptor::Uniform { l, .. } => ModelSpec {
            lo: 0.0,
            hi: l,
            mass_density: Box::new(|_| 1.0),
            line_density: Box::new(|_| 1.0),
            speed: None,
            bc: BoundaryCondition::Neumann,
            mode: MeasureMode::Probability,
            k_tag: 0.0,
        },
        SpaceDescriptor::Gaussian { k, r, .. } => {
            let rho = move |x: f64| (k / (2.0 * PI)).sqrt() * (-0.5 * k * x * x).exp();
            ModelSpec {
                lo: -r,
                hi: r,
                mass_density: Box::new(rho),
                line_density: Box::new(rho),
                speed: None,
                bc: BoundaryCondition::Neumann,
                mode: MeasureMode::Probability,
                k_tag: k,
            }
        }
        SpaceDescriptor::PerturbedGaussian { eps, r, .. } => {
            let rho = move |x: f64| (-(0.5 * x * x + eps * x.powi(4))).exp();
            ModelSpec {
                lo: -r,
                hi: r,
                mass_density: Box::new(rho),
                line_density: Box::new(rho),
                speed: None,
                bc: BoundaryCondition::Neumann,
                mode: MeasureMode::Probability,
                k_tag: 1.0,
            }
        }
        SpaceDescriptor::Expx2 { r, .. } => {
            let rho = |x: f64| (0.5 * x * x).exp();
            ModelSpec {
                lo: -r,
                hi: r,
                mass_density: Box::new(rho),
                line_density: Box::new(rho),
                speed: None,
                bc: BoundaryCondition::Dirichlet,
                mode: MeasureMode::InfiniteTruncated,
                k_tag: -1.0,
            }
        }
        SpaceDescriptor::Revolution { t, .. } => ModelSpec {
            lo: -t,
            hi: t,
            mass_density: Box::new(revolution_area_density),
            line_density: Box::new(|s| 2.0 * PI * revolution_profile(s).0),
            speed: Some(Box::new(|s| {
                let d1 = revolution_profile(s).1;
                (1.0 + d1 * d1).sqrt()
            })),
            bc: BoundaryCondition::Neumann,
            mode: MeasureMode::Finite,
            k_tag: -0.5,
        },
        SpaceDescriptor::HyperbolicRadial { r, .. } => ModelSpec {
            lo: 0.0,
            hi: r,
            mass_density: Box::new(hyperbolic_density),
            line_density: Box::new(hyperbolic_density),
            speed: None,
            bc: BoundaryCondition::NeumannDirichlet,
            mode: MeasureMode::InfiniteTruncated,
            k_tag: -1.0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_matches_exponential_branch() {
        let inside = revolution_profile(1.0);
        let s = 1.0 + 1e-12;
        let outside = revolution_profile(s);
        assert!((inside.0 - outside.0).abs() < 1e-11);
        assert!((inside.1 - outside.1).abs() < 1e-11);
        assert!((inside.2 - outside.2).abs() < 1e-11);
        assert!((inside.0 - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn quartic_positive_and_even() {
        for i in 0..=1000 {
            let t = -1.0 + 2.0 * i as f64 / 1000.0;
            let (f, d1, _) = revolution_profile(t);
            assert!(f > 0.0);
            let (g, e1, _) = revolution_profile(-t);
            assert_eq!(f, g);
            assert_eq!(d1, -e1);
        }
    }

    #[test]
    fn curvature_bound_outside_unit_interval() {
        // analytic form −F''/(F√(1+F'²)) equals −(1/(4s) + 1/(4 s^{3/2}))/√(1+F'²)
        let k = revolution_curvature_fd(1.5, 1e-4);
        let (f, d1, d2) = revolution_profile(1.5);
        let exact = -d2 / (f * (1.0 + d1 * d1).sqrt());
        assert!((k - exact).abs() < 1e-6);
        assert!(k > -0.5);
    }
}
