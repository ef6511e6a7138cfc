use crate::error::{invalid, Result};

/// How the decomposition treats its active set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecompMode {
    /// Strict exchange for strictly convex norms, growing sets otherwise.
    #[default]
    Auto,
    /// Always exchange; the active set keeps `d + 1` points.
    Strict,
    /// Exchange when the radius strictly increases, otherwise grow the set.
    Growing,
}

/// Knobs shared by all covering solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative radius tolerance.
    pub tol_r: f64,
    /// Initial smoothing parameter; defaults to a tenth of the data diameter.
    pub mu0: Option<f64>,
    /// Smallest smoothing parameter; defaults to a value derived from `tol_r`.
    pub mu_min: Option<f64>,
    /// Cap on outer iterations (dual ascent steps, decomposition rounds,
    /// subgradient steps).
    pub max_outer: usize,
    /// Cap on Newton steps within one smoothing stage.
    pub max_inner: usize,
    /// Initial dual step; defaults to `1 / diameter`.
    pub dual_step0: Option<f64>,
    pub seed: u64,
    pub decomp_mode: DecompMode,
    /// Solve independent subproblems on the rayon pool.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_r: 1e-7,
            mu0: None,
            mu_min: None,
            max_outer: 5000,
            max_inner: 100,
            dual_step0: None,
            seed: 0,
            decomp_mode: DecompMode::Auto,
            parallel: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_r > 0.0) {
            return Err(invalid(format!("tol_r must be positive, got {}", self.tol_r)));
        }
        if let Some(mu0) = self.mu0 {
            if !(mu0 > 0.0) {
                return Err(invalid(format!("mu0 must be positive, got {mu0}")));
            }
        }
        if let (Some(mu0), Some(mu_min)) = (self.mu0, self.mu_min) {
            if !(mu_min < mu0) {
                return Err(invalid(format!("mu_min ({mu_min}) must be below mu0 ({mu0})")));
            }
        }
        if self.mu_min.is_some_and(|m| !(m > 0.0)) {
            return Err(invalid("mu_min must be positive"));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(invalid("iteration caps must be positive"));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol_r: f64) -> Self {
        self.tol_r = tol_r;
        self
    }
}
