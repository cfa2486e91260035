//! Butcher tableaus of the explicit one-step methods.

use num_traits::Float;

/// Coefficients of an explicit Runge-Kutta method.
///
/// `a` holds the strictly lower triangle row by row: row `i` has `i` entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ButcherTableau {
    pub name: &'static str,
    pub a: &'static [&'static [f64]],
    pub b: &'static [f64],
    /// Weights of the embedded solution, if the method is an error stepper.
    pub b_err: Option<&'static [f64]>,
    pub c: &'static [f64],
    pub order: u32,
    pub order_err: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum TableauError {
    #[error("{0}: coefficient arrays have inconsistent sizes")]
    Shape(&'static str),
    #[error("{0}: weights do not sum to one")]
    Consistency(&'static str),
    #[error("{name}: row {row} does not sum to its abscissa")]
    RowSum { name: &'static str, row: usize },
    #[error("{name}: {stages} stages exceed the algebra's arity")]
    TooManyStages { name: &'static str, stages: usize },
}

const TOL: f64 = 1e-14;

impl ButcherTableau {
    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// Checks shape, `sum b = 1` and the row-sum condition, and that the
    /// final update (`u` plus one term per stage) fits the algebra.
    pub fn validate(&self) -> Result<(), TableauError> {
        let s = self.stages();
        if s == 0
            || self.c.len() != s
            || self.a.len() != s
            || self.a.iter().enumerate().any(|(i, row)| row.len() != i)
            || self.b_err.is_some_and(|e| e.len() != s)
        {
            return Err(TableauError::Shape(self.name));
        }
        if s + 1 > crate::MAX_ARITY {
            return Err(TableauError::TooManyStages { name: self.name, stages: s });
        }
        let sums = core::iter::once(self.b).chain(self.b_err);
        for w in sums {
            if Float::abs(w.iter().sum::<f64>() - 1.0) > TOL {
                return Err(TableauError::Consistency(self.name));
            }
        }
        for (i, row) in self.a.iter().enumerate() {
            if Float::abs(row.iter().sum::<f64>() - self.c[i]) > TOL {
                return Err(TableauError::RowSum { name: self.name, row: i });
            }
        }
        Ok(())
    }
}

pub const EXPLICIT_EULER: ButcherTableau = ButcherTableau {
    name: "explicit Euler",
    a: &[&[]],
    b: &[1.0],
    b_err: None,
    c: &[0.0],
    order: 1,
    order_err: None,
};

/// Euler half step to the midpoint, then a full step with the midpoint slope.
pub const MODIFIED_MIDPOINT: ButcherTableau = ButcherTableau {
    name: "modified midpoint",
    a: &[&[], &[0.5]],
    b: &[0.0, 1.0],
    b_err: None,
    c: &[0.0, 0.5],
    order: 2,
    order_err: None,
};

pub const RK4: ButcherTableau = ButcherTableau {
    name: "Runge-Kutta 4",
    a: &[&[], &[0.5], &[0.0, 0.5], &[0.0, 0.0, 1.0]],
    b: &[1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0],
    b_err: None,
    c: &[0.0, 0.5, 0.5, 1.0],
    order: 4,
    order_err: None,
};

#[rustfmt::skip]
pub const CASH_KARP_54: ButcherTableau = ButcherTableau {
    name: "Runge-Kutta-Cash-Karp 54",
    a: &[
        &[],
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0],
        &[-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0],
        &[1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0, 44275.0 / 110592.0, 253.0 / 4096.0],
    ],
    b: &[37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0],
    b_err: Some(&[2825.0 / 27648.0, 0.0, 18575.0 / 48384.0, 13525.0 / 55296.0, 277.0 / 14336.0, 1.0 / 4.0]),
    c: &[0.0, 1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0],
    order: 5,
    order_err: Some(4),
};

#[rustfmt::skip]
pub const DOPRI5: ButcherTableau = ButcherTableau {
    name: "Runge-Kutta-Dopri 5",
    a: &[
        &[],
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ],
    b: &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0],
    b_err: Some(&[
        5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0,
    ]),
    c: &[0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0],
    order: 5,
    order_err: Some(4),
};

/// Fehlberg 7(8); the eighth-order weights advance the solution and the
/// seventh-order weights serve as the embedded estimate.
#[rustfmt::skip]
pub const FEHLBERG_78: ButcherTableau = ButcherTableau {
    name: "Runge-Kutta-Fehlberg 78",
    a: &[
        &[],
        &[2.0 / 27.0],
        &[1.0 / 36.0, 1.0 / 12.0],
        &[1.0 / 24.0, 0.0, 1.0 / 8.0],
        &[5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0],
        &[1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0],
        &[-25.0 / 108.0, 0.0, 0.0, 125.0 / 108.0, -65.0 / 27.0, 125.0 / 54.0],
        &[31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0],
        &[2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0],
        &[-91.0 / 108.0, 0.0, 0.0, 23.0 / 108.0, -976.0 / 135.0, 311.0 / 54.0, -19.0 / 60.0, 17.0 / 6.0, -1.0 / 12.0],
        &[2383.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -301.0 / 82.0, 2133.0 / 4100.0, 45.0 / 82.0, 45.0 / 164.0, 18.0 / 41.0],
        &[3.0 / 205.0, 0.0, 0.0, 0.0, 0.0, -6.0 / 41.0, -3.0 / 205.0, -3.0 / 41.0, 3.0 / 41.0, 6.0 / 41.0, 0.0],
        &[-1777.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -289.0 / 82.0, 2193.0 / 4100.0, 51.0 / 82.0, 33.0 / 164.0, 12.0 / 41.0, 0.0, 1.0],
    ],
    b: &[0.0, 0.0, 0.0, 0.0, 0.0, 34.0 / 105.0, 9.0 / 35.0, 9.0 / 35.0, 9.0 / 280.0, 9.0 / 280.0, 0.0, 41.0 / 840.0, 41.0 / 840.0],
    b_err: Some(&[41.0 / 840.0, 0.0, 0.0, 0.0, 0.0, 34.0 / 105.0, 9.0 / 35.0, 9.0 / 35.0, 9.0 / 280.0, 9.0 / 280.0, 41.0 / 840.0, 0.0, 0.0]),
    c: &[0.0, 2.0 / 27.0, 1.0 / 9.0, 1.0 / 6.0, 5.0 / 12.0, 1.0 / 2.0, 5.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0, 1.0, 0.0, 1.0],
    order: 8,
    order_err: Some(7),
};

pub const ALL: [&ButcherTableau; 6] = [&EXPLICIT_EULER, &MODIFIED_MIDPOINT, &RK4, &CASH_KARP_54, &DOPRI5, &FEHLBERG_78];
