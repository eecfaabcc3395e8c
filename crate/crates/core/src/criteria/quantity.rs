use std::ops::{Add, Div, Mul, Sub};

use crate::funcmodel::BoundCertificate;

/// A number together with how much it can be trusted. Arithmetic keeps the
/// weakest provenance of its operands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Q {
    pub v: f64,
    pub exact: bool,
    pub conservative: bool,
}

impl Q {
    pub fn exact(v: f64) -> Q {
        Q {
            v,
            exact: true,
            conservative: false,
        }
    }

    pub fn inexact(v: f64) -> Q {
        Q {
            v,
            exact: false,
            conservative: false,
        }
    }

    /// A closed-form bound that need not be attained.
    pub fn conservative(v: f64) -> Q {
        Q {
            v,
            exact: true,
            conservative: true,
        }
    }

    pub fn loose(mut self) -> Q {
        self.conservative = true;
        self
    }

    fn join(self, other: Q, v: f64) -> Q {
        Q {
            v,
            exact: self.exact && other.exact,
            conservative: self.conservative || other.conservative,
        }
    }

    pub fn max(self, other: Q) -> Q {
        self.join(other, self.v.max(other.v))
    }

    pub fn min(self, other: Q) -> Q {
        self.join(other, self.v.min(other.v))
    }

    pub fn pos(self) -> Q {
        Q {
            v: self.v.max(0.0),
            ..self
        }
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Q {
        Q { v: f(self.v), ..self }
    }

    pub fn sum(items: impl IntoIterator<Item = Q>) -> Q {
        items.into_iter().fold(Q::exact(0.0), |a, b| a + b)
    }
}

impl From<BoundCertificate> for Q {
    fn from(c: BoundCertificate) -> Q {
        Q {
            v: c.value,
            exact: c.exact,
            conservative: c.conservative,
        }
    }
}

impl From<f64> for Q {
    fn from(v: f64) -> Q {
        Q::exact(v)
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for Q {
            type Output = Q;
            fn $f(self, o: Q) -> Q {
                self.join(o, self.v $op o.v)
            }
        }
        impl $tr<f64> for Q {
            type Output = Q;
            fn $f(self, o: f64) -> Q {
                Q { v: self.v $op o, ..self }
            }
        }
        impl $tr<Q> for f64 {
            type Output = Q;
            fn $f(self, o: Q) -> Q {
                Q { v: self $op o.v, ..o }
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);
