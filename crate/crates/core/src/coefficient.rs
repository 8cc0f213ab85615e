//! Scalar coefficient fields `b(x, y)` and `V(x, y)`.

use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

type Evaluator = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// How a field is represented, which decides the quadrature it needs.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientKind {
    Constant(f64),
    Smooth,
    /// Piecewise smooth with jumps aligned to a grid of the given cell size.
    PiecewiseOnGrid { cell_size: f64 },
    /// Independent per-cell values drawn from a seeded generator.
    RandomCheckerboard {
        seed: u64,
        cell_size: f64,
        low: f64,
        high: f64,
    },
}

/// A named scalar field on the unit square.
#[derive(Clone)]
pub struct CoefficientField {
    name: String,
    kind: CoefficientKind,
    eval: Evaluator,
    bounds: Option<(f64, f64)>,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl CoefficientField {
    pub fn constant(name: impl Into<String>, value: f64) -> Self {
        CoefficientField {
            name: name.into(),
            kind: CoefficientKind::Constant(value),
            eval: Arc::new(move |_, _| value),
            bounds: Some((value, value)),
        }
    }

    pub fn smooth(name: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        CoefficientField {
            name: name.into(),
            kind: CoefficientKind::Smooth,
            eval: Arc::new(f),
            bounds: None,
        }
    }

    pub fn piecewise(
        name: impl Into<String>,
        cell_size: f64,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CoefficientField {
            name: name.into(),
            kind: CoefficientKind::PiecewiseOnGrid { cell_size },
            eval: Arc::new(f),
            bounds: None,
        }
    }

    /// Random checkerboard on `cells_per_side²` square cells.
    ///
    /// Cells are visited in row-major order (`y` index outer, `x` index
    /// inner). For each one a `ChaCha8Rng` seeded with `seed` via
    /// `seed_from_u64` yields the next `u64`; the cell takes `low` when the
    /// top bit is clear and `high` otherwise. A point belongs to cell
    /// `floor(x / s)` with `s = 1 / cells_per_side`, clamped into range, so
    /// cells are half-open `[k s, (k + 1) s)`.
    pub fn checkerboard(name: impl Into<String>, seed: u64, cells_per_side: usize, low: f64, high: f64) -> Self {
        let m = cells_per_side;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..m * m)
            .map(|_| if rng.next_u64() >> 63 == 0 { low } else { high })
            .collect();
        let eval = move |x: f64, y: f64| {
            let i = grid_cell(x, m);
            let j = grid_cell(y, m);
            values[j * m + i]
        };
        CoefficientField {
            name: name.into(),
            kind: CoefficientKind::RandomCheckerboard {
                seed,
                cell_size: 1.0 / m as f64,
                low,
                high,
            },
            eval: Arc::new(eval),
            bounds: Some((low.min(high), low.max(high))),
        }
    }

    /// Declares `lower ≤ f ≤ upper`, checked by [`Self::check_bounds`].
    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.bounds = Some((lower, upper));
        self
    }

    /// Same field evaluated at shifted coordinates `(x + dx, y + dy)`.
    pub fn shifted(&self, dx: f64, dy: f64) -> Self {
        let inner = self.eval.clone();
        CoefficientField {
            name: format!("{}@shift({dx},{dy})", self.name),
            kind: self.kind.clone(),
            eval: Arc::new(move |x, y| inner(x + dx, y + dy)),
            bounds: self.bounds,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.eval)(x, y)
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self.kind {
            CoefficientKind::Constant(c) => Some(c),
            _ => None,
        }
    }

    /// Minimum and maximum over an `(n + 1)²` grid of cell midpoints and
    /// vertices.
    pub fn sample_range(&self, n: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..=2 * n {
            for i in 0..=2 * n {
                let v = self.eval(i as f64 / (2 * n) as f64, j as f64 / (2 * n) as f64);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// Verifies the declared bounds on a dense sample grid.
    pub fn check_bounds(&self, n: usize) -> Result<()> {
        let Some((lo, hi)) = self.bounds else {
            return Ok(());
        };
        for j in 0..=n {
            for i in 0..=n {
                let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
                let v = self.eval(x, y);
                if !(v >= lo - 1e-12 && v <= hi + 1e-12) {
                    return Err(Error::CoefficientViolation {
                        name: self.name.clone(),
                        value: v,
                        x,
                        y,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Index of the half-open cell `[k / m, (k + 1) / m)` containing `t`.
pub fn grid_cell(t: f64, m: usize) -> usize {
    let k = (t * m as f64).floor();
    if k < 0.0 {
        0
    } else {
        (k as usize).min(m - 1)
    }
}
