use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::panel::PairIndex;

/// A right-open step function on `[0, 1]`: `initial` up to the first jump,
/// then each `(point, level)` from `point` onward.
#[derive(Debug, Clone, PartialEq)]
pub struct StepComponent {
    pub initial: f64,
    pub jumps: Vec<(f64, f64)>,
}

impl StepComponent {
    pub fn constant(level: f64) -> Self {
        Self {
            initial: level,
            jumps: Vec::new(),
        }
    }

    /// Jump from 0 to `level` at `point`.
    pub fn jump(point: f64, level: f64) -> Self {
        Self {
            initial: 0.0,
            jumps: vec![(point, level)],
        }
    }

    fn validate(&self) -> Result<()> {
        let mut last = 0.0;
        for &(z, g) in &self.jumps {
            if !(z > last && z < 1.0) || !g.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "jump points must be increasing within (0, 1); got {z}"
                )));
            }
            last = z;
        }
        if !self.initial.is_finite() {
            return Err(Error::InvalidConfig("step level must be finite".into()));
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        let mut level = self.initial;
        for &(_, g) in &self.jumps {
            if g != level {
                return false;
            }
            level = g;
        }
        true
    }

    /// Value at `u`, with jumps taking effect strictly after their point.
    pub fn value(&self, u: f64) -> f64 {
        self.jumps
            .iter()
            .take_while(|(z, _)| u > *z)
            .last()
            .map_or(self.initial, |&(_, g)| g)
    }

    /// Exact `int_0^s g(u) du` for `s` in `[0, 1]`.
    pub fn integral(&self, s: f64) -> f64 {
        let mut total = 0.0;
        let mut start = 0.0;
        let mut level = self.initial;
        for &(z, g) in &self.jumps {
            if s <= z {
                return total + level * (s - start);
            }
            total += level * (z - start);
            start = z;
            level = g;
        }
        total + level * (s - start).max(0.0)
    }
}

/// Local-alternative direction: one step function per pair, scaled by
/// `magnitude / sqrt(T)` when added to the pair cross moments.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunctionG {
    pub components: Vec<StepComponent>,
    pub magnitude: f64,
    pub variances: Vec<f64>,
}

impl StepFunctionG {
    /// A single jump from 0 to `level` at `point` in pair `pair`, unit variances.
    pub fn single_jump(p: usize, pair: usize, point: f64, level: f64, magnitude: f64) -> Self {
        let d = p * (p - 1) / 2;
        let mut components = vec![StepComponent::constant(0.0); d];
        components[pair] = StepComponent::jump(point, level);
        Self {
            components,
            magnitude,
            variances: vec![1.0; p],
        }
    }

    pub fn p(&self) -> usize {
        self.variances.len()
    }

    pub fn validate(&self) -> Result<()> {
        let pairs = PairIndex::new(self.p());
        if self.components.len() != pairs.len() {
            return Err(Error::DimensionMismatch {
                expected: pairs.len(),
                got: self.components.len(),
            });
        }
        if !(self.magnitude.is_finite() && self.magnitude >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "magnitude must be finite and >= 0, got {}",
                self.magnitude
            )));
        }
        if self.variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig("variances must be positive".into()));
        }
        for c in &self.components {
            c.validate()?;
        }
        if self.components.iter().all(StepComponent::is_constant) {
            return Err(Error::InvalidConfig(
                "at least one component of g must be non-constant".into(),
            ));
        }
        Ok(())
    }

    /// `1 / sqrt(Var(X_i) Var(X_j))` per pair.
    pub(crate) fn pair_scales(&self) -> Vec<f64> {
        PairIndex::new(self.p())
            .pairs()
            .iter()
            .map(|&(i, j)| 1.0 / (self.variances[i] * self.variances[j]).sqrt())
            .collect()
    }
}

/// The drift `C(s)` on the grid `s_m = m / grid_n`, `m = 0..=grid_n`.
///
/// Row `m`, column `c` holds
/// `M / sqrt(Var_i Var_j) * (int_0^s g_c - s int_0^1 g_c)`.
pub fn drift_c(g: &StepFunctionG, grid_n: usize) -> Result<DMatrix<f64>> {
    g.validate()?;
    if grid_n == 0 {
        return Err(Error::InvalidConfig(
            "grid must have at least one step".into(),
        ));
    }
    let scales = g.pair_scales();
    let totals: Vec<f64> = g.components.iter().map(|c| c.integral(1.0)).collect();
    Ok(DMatrix::from_fn(grid_n + 1, g.components.len(), |m, c| {
        if m == 0 || m == grid_n {
            return 0.0;
        }
        let s = m as f64 / grid_n as f64;
        g.magnitude * scales[c] * (g.components[c].integral(s) - s * totals[c])
    }))
}
