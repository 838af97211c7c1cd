use super::grid::{GridFunction2D, GridRect};
use super::rho::{rho_variation_with, VariationMode, VariationOptions};
use crate::error::Result;
use crate::scalar::Scalar;

/// `rect -> |f|^rho_{rho-var; rect}` on grid-aligned rectangles.
#[derive(Clone, Debug)]
pub struct Control2D<'a, T> {
    f: &'a GridFunction2D<T>,
    rho: T,
    options: VariationOptions,
}

pub fn control_from_variation<T: Scalar>(f: &GridFunction2D<T>, rho: T) -> Result<Control2D<'_, T>> {
    // validates rho once so evaluation cannot fail later
    rho_variation_with(f, rho, GridRect::new(0, 0, 0, 0), VariationMode::Exact, &VariationOptions::default())?;
    Ok(Control2D { f, rho, options: VariationOptions::default() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitAxis {
    S,
    T,
}

impl<'a, T: Scalar> Control2D<'a, T> {
    pub fn with_options(mut self, options: VariationOptions) -> Self {
        self.options = options;
        self
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn function(&self) -> &'a GridFunction2D<T> {
        self.f
    }

    /// Control value and whether it is exact.
    pub fn eval_flagged(&self, rect: GridRect) -> (T, bool) {
        let v = rho_variation_with(self.f, self.rho, rect, VariationMode::Auto, &self.options)
            .expect("rectangle inside the grid and rho validated");
        (v.controlled(), v.is_exact())
    }

    pub fn eval(&self, rect: GridRect) -> T {
        self.eval_flagged(rect).0
    }

    /// `ω(left) + ω(right) - ω(rect)` for the split of `rect` at grid index
    /// `at` along `axis`; non-positive when super-additivity holds there.
    pub fn superadditivity_excess(&self, rect: GridRect, axis: SplitAxis, at: usize) -> T {
        let (a, b) = match axis {
            SplitAxis::S => {
                assert!(rect.s0 <= at && at <= rect.s1);
                (GridRect { s1: at, ..rect }, GridRect { s0: at, ..rect })
            }
            SplitAxis::T => {
                assert!(rect.t0 <= at && at <= rect.t1);
                (GridRect { t1: at, ..rect }, GridRect { t0: at, ..rect })
            }
        };
        self.eval(a) + self.eval(b) - self.eval(rect)
    }

    /// `[a, b] -> ω([a, b]^2)`; requires a common grid.
    pub fn diagonal(&self, a: usize, b: usize) -> T {
        self.eval(GridRect::square(a, b))
    }
}
