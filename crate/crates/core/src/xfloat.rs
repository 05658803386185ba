//! Scalars for the inversion pipeline: `f64` and a multiprecision float
//! whose working precision is set per computation.

use std::cell::{Cell, RefCell};
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

const RM: RoundingMode = RoundingMode::ToEven;
const WORD_BITS: usize = 64;

thread_local! {
    static PRECISION: Cell<usize> = const { Cell::new(128) };
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

pub(crate) trait Real:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// `(sin, cos)` of `π num / den`.
    fn sin_cos_pi(num: usize, den: usize) -> (Self, Self);

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sin_cos_pi(num: usize, den: usize) -> (Self, Self) {
        (std::f64::consts::PI * num as f64 / den as f64).sin_cos()
    }
}

/// Runs `f` with the multiprecision working precision set to at least
/// `bits`, rounded up to whole words.
pub(crate) fn with_precision<R>(bits: usize, f: impl FnOnce() -> R) -> R {
    let bits = bits.div_ceil(WORD_BITS).max(2) * WORD_BITS;
    let old = PRECISION.with(|p| p.replace(bits));
    let out = f();
    PRECISION.with(|p| p.set(old));
    out
}

fn prec() -> usize {
    PRECISION.with(Cell::get)
}

#[derive(Debug, Clone)]
pub(crate) struct XFloat(BigFloat);

impl Real for XFloat {
    fn from_f64(x: f64) -> Self {
        XFloat(BigFloat::from_f64(x, prec()))
    }

    fn to_f64(&self) -> f64 {
        let Some((m, _, sign, exp, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        let Some(&hi) = m.last() else {
            return 0.0;
        };
        let lo = if m.len() > 1 { m[m.len() - 2] } else { 0 };
        let frac = (hi as f64 + lo as f64 * 2f64.powi(-64)) * 2f64.powi(-64);
        let v = scale_by_pow2(frac, exp);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }

    fn sin_cos_pi(num: usize, den: usize) -> (Self, Self) {
        let p = prec();
        CONSTS.with(|cc| {
            let cc = &mut cc.borrow_mut();
            let x = cc.pi(p, RM).mul(&BigFloat::from_u64(num as u64, p), p, RM).div(
                &BigFloat::from_u64(den as u64, p),
                p,
                RM,
            );
            (XFloat(x.sin(p, RM, cc)), XFloat(x.cos(p, RM, cc)))
        })
    }
}

/// `x 2^e` without overflow in the intermediate power.
fn scale_by_pow2(mut x: f64, mut e: i32) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e)
}

macro_rules! binop {
    ($tr:ident, $f:ident) => {
        impl $tr for XFloat {
            type Output = XFloat;
            fn $f(self, rhs: XFloat) -> XFloat {
                XFloat(self.0.$f(&rhs.0, prec(), RM))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for XFloat {
    type Output = XFloat;
    fn neg(self) -> XFloat {
        XFloat(self.0.neg())
    }
}
