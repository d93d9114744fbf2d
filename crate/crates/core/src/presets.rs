//! Bundled figure parameter sets and default grids, so the reference
//! experiments run from a single name: four rough Bergomi configurations
//! on a flat 0.04 forward variance curve, the six-maturity palette they
//! are evaluated on, and the standard moneyness grid.

use crate::coeffs_rbergomi::{ForwardVarianceCurve, RoughBergomiParams};

/// Maturities used by all bundled table and figure runs.
pub const THETA_PALETTE: [f64; 6] = [0.02, 0.05, 0.1, 0.2, 0.3, 0.6];

/// The four bundled rough Bergomi parameter sets (H, rho, eta), each on a
/// flat forward variance curve at 0.04.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigurePreset {
    /// (0.07, -0.9, 0.9)
    Fig1Left,
    /// (0.07, -0.7, 0.9)
    Fig1Right,
    /// (0.05, -0.9, 2.3)
    Fig2Left,
    /// (0.07, -0.9, 1.9)
    Fig2Right,
}

impl FigurePreset {
    pub const ALL: [FigurePreset; 4] = [
        FigurePreset::Fig1Left,
        FigurePreset::Fig1Right,
        FigurePreset::Fig2Left,
        FigurePreset::Fig2Right,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigurePreset::Fig1Left => "fig1-left",
            FigurePreset::Fig1Right => "fig1-right",
            FigurePreset::Fig2Left => "fig2-left",
            FigurePreset::Fig2Right => "fig2-right",
        }
    }

    pub fn from_name(name: &str) -> Option<FigurePreset> {
        FigurePreset::ALL.into_iter().find(|p| p.name() == name)
    }

    /// (hurst, rho, eta) of the preset.
    pub fn triple(self) -> (f64, f64, f64) {
        match self {
            FigurePreset::Fig1Left => (0.07, -0.9, 0.9),
            FigurePreset::Fig1Right => (0.07, -0.7, 0.9),
            FigurePreset::Fig2Left => (0.05, -0.9, 2.3),
            FigurePreset::Fig2Right => (0.07, -0.9, 1.9),
        }
    }

    pub fn params(self) -> RoughBergomiParams {
        let (h, rho, eta) = self.triple();
        let curve = ForwardVarianceCurve::flat(0.04).expect("bundled curve level is valid");
        RoughBergomiParams::new(h, eta, rho, curve).expect("bundled preset parameters are valid")
    }
}

/// The standard moneyness grid: 21 equispaced points on [-2, 2].
pub fn default_z_grid() -> Vec<f64> {
    (0..21).map(|i| (i as f64 - 10.0) * 0.2).collect()
}
