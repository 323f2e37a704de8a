use serde::{Deserialize, Serialize};
use std::io::Write;

use super::descriptor::SpaceDescriptor;
use super::models::{spec_for, ModelSpec};
use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Boundary semantics at the two ends of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundaryCondition {
    /// Zero flux at both ends; the ambient boundary carries no perimeter.
    Neumann,
    /// Functions vanish beyond both end nodes, which act as zero ghosts.
    Dirichlet,
    /// Natural condition at the left end (e.g. a polar origin), Dirichlet at the right.
    NeumannDirichlet,
}

impl BoundaryCondition {
    pub fn dirichlet_left(self) -> bool {
        matches!(self, Self::Dirichlet)
    }

    pub fn dirichlet_right(self) -> bool {
        matches!(self, Self::Dirichlet | Self::NeumannDirichlet)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MeasureMode {
    /// Total mass normalized to 1.
    Probability,
    /// Finite total mass, not normalized.
    Finite,
    /// A truncation of an infinite-measure space.
    InfiniteTruncated,
}

/// A weighted one-dimensional grid `(x_i, m_i, w_{i+1/2})`.
///
/// `iface_weights[i]` is the density on the interface between nodes `i` and
/// `i + 1`; `end_weights` are the densities at the two ends, which only
/// enter perimeters at Dirichlet ends.
#[derive(Debug, Clone)]
pub struct WeightedGrid {
    nodes: Vec<f64>,
    masses: Vec<f64>,
    iface_weights: Vec<f64>,
    end_weights: [f64; 2],
    bc: BoundaryCondition,
    k_tag: Option<f64>,
    mode: MeasureMode,
    model: Option<SpaceDescriptor>,
}

impl WeightedGrid {
    /// Assembles a grid from raw arrays, checking every structural invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        nodes: Vec<f64>,
        masses: Vec<f64>,
        iface_weights: Vec<f64>,
        end_weights: [f64; 2],
        bc: BoundaryCondition,
        k_tag: Option<f64>,
        mode: MeasureMode,
        model: Option<SpaceDescriptor>,
    ) -> Result<Self> {
        let n = nodes.len();
        if n < 2 {
            return Err(Error::DegenerateGrid(format!("need at least 2 nodes, got {n}")));
        }
        if masses.len() != n || iface_weights.len() != n - 1 {
            return Err(Error::DegenerateGrid(format!(
                "{n} nodes need {n} masses and {} interface weights, got {} and {}",
                n - 1,
                masses.len(),
                iface_weights.len()
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("grid nodes"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DegenerateGrid("nodes must be strictly increasing".into()));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::DegenerateGrid("masses must be positive and finite".into()));
        }
        if iface_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::DegenerateGrid(
                "interface weights must be positive and finite".into(),
            ));
        }
        if end_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::DegenerateGrid("end weights must be nonnegative".into()));
        }
        if let Some(k) = k_tag {
            crate::error::ensure_finite(k, "curvature tag")?;
        }
        if mode == MeasureMode::Probability {
            let total: f64 = masses.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::DegenerateGrid(format!(
                    "probability grid has total mass {total}"
                )));
            }
        }
        Ok(Self {
            nodes,
            masses,
            iface_weights,
            end_weights,
            bc,
            k_tag,
            mode,
            model,
        })
    }

    /// Discretizes a catalog model.
    ///
    /// Nodes are equally spaced in the model parameter. Each node's mass is
    /// the trapezoid integral of the model measure over its dual cell
    /// (using the density at the node and at the cell midpoints). Interface
    /// weights are the mean of the adjacent node densities.
    pub fn build(desc: &SpaceDescriptor) -> Result<Self> {
        desc.validate()?;
        let spec = spec_for(desc);
        build_from_spec(&spec, desc.n(), Some(*desc))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn iface_weights(&self) -> &[f64] {
        &self.iface_weights
    }

    pub fn end_weights(&self) -> [f64; 2] {
        self.end_weights
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn k_tag(&self) -> Option<f64> {
        self.k_tag
    }

    pub fn measure_mode(&self) -> MeasureMode {
        self.mode
    }

    pub fn model(&self) -> Option<&SpaceDescriptor> {
        self.model.as_ref()
    }

    /// Model text form, or `custom` for grids assembled by hand.
    pub fn label(&self) -> String {
        self.model.map_or_else(|| "custom".to_string(), |d| d.to_string())
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `x_{i+1} − x_i`.
    pub fn spacing(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Conductances `w_{i+1/2} / (x_{i+1} − x_i)` of the Dirichlet form.
    pub fn conductances(&self) -> Vec<f64> {
        self.iface_weights
            .iter()
            .enumerate()
            .map(|(i, w)| w / self.spacing(i))
            .collect()
    }

    /// Dirichlet-end conductances: the end density over the adjacent spacing.
    pub fn end_conductances(&self) -> [f64; 2] {
        let n = self.len();
        [
            self.end_weights[0] / self.spacing(0),
            self.end_weights[1] / self.spacing(n - 2),
        ]
    }

    pub fn with_k_tag(mut self, k: Option<f64>) -> Self {
        self.k_tag = k;
        self
    }

    /// Coordinates scaled by `alpha`, masses by `beta` (densities by `beta/alpha`).
    pub fn scaled(&self, alpha: f64, beta: f64) -> Result<Self> {
        crate::error::ensure_finite(alpha, "alpha")?;
        crate::error::ensure_finite(beta, "beta")?;
        if alpha <= 0.0 || beta <= 0.0 {
            return Err(Error::InvalidArgument("scaling factors must be positive".into()));
        }
        let mode = if self.mode == MeasureMode::Probability && beta != 1.0 {
            MeasureMode::Finite
        } else {
            self.mode
        };
        let density = beta / alpha;
        Self::from_parts(
            self.nodes.iter().map(|x| x * alpha).collect(),
            self.masses.iter().map(|m| m * beta).collect(),
            self.iface_weights.iter().map(|w| w * density).collect(),
            [self.end_weights[0] * density, self.end_weights[1] * density],
            self.bc,
            self.k_tag.map(|k| k / (alpha * alpha)),
            mode,
            None,
        )
    }

    /// Writes `x,mass,iface_weight` rows; the last node has no interface.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "mass", "iface_weight"])?;
        for i in 0..self.len() {
            let iface = self
                .iface_weights
                .get(i)
                .map_or_else(String::new, |v| format!("{v:e}"));
            w.write_record([
                format!("{:e}", self.nodes[i]),
                format!("{:e}", self.masses[i]),
                iface,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn build_from_spec(spec: &ModelSpec, n: usize, model: Option<SpaceDescriptor>) -> Result<WeightedGrid> {
    let ds = (spec.hi - spec.lo) / (n - 1) as f64;
    let param: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { spec.hi } else { spec.lo + ds * i as f64 })
        .collect();

    let nodes = match &spec.speed {
        None => param.clone(),
        Some(speed) => {
            let mut x = Vec::with_capacity(n);
            x.push(0.0);
            for i in 0..n - 1 {
                let piece = integrate(speed, param[i], param[i + 1], 1e-15, 1e-13)?;
                x.push(x[i] + piece.value);
            }
            // centre the arclength coordinate on the parameter origin
            let shift = if spec.lo < 0.0 && spec.hi > 0.0 {
                integrate(speed, spec.lo, 0.0, 1e-14, 1e-13)?.value
            } else {
                0.0
            };
            x.iter().map(|v| v - shift).collect()
        }
    };

    let mu = |s: f64| (spec.mass_density)(s);
    let mut masses = vec![0.0; n];
    for i in 0..n - 1 {
        let (a, b) = (param[i], param[i + 1]);
        let mid = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mm = mu(mid);
        masses[i] += 0.5 * h * (mu(a) + mm);
        masses[i + 1] += 0.5 * h * (mm + mu(b));
    }
    let rho: Vec<f64> = param.iter().map(|&s| (spec.line_density)(s)).collect();
    let mut iface: Vec<f64> = rho.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut ends = [rho[0], rho[n - 1]];

    if spec.mode == MeasureMode::Probability {
        let total: f64 = masses.iter().sum();
        for m in &mut masses {
            *m /= total;
        }
        for w in &mut iface {
            *w /= total;
        }
        for w in &mut ends {
            *w /= total;
        }
        // absorb the last rounding so the masses sum to 1 as closely as possible
        let residual = 1.0 - masses.iter().sum::<f64>();
        let centre = n / 2;
        masses[centre] += residual;
    }

    WeightedGrid::from_parts(
        nodes,
        masses,
        iface,
        ends,
        spec.bc,
        Some(spec.k_tag),
        spec.mode,
        model,
    )
}
