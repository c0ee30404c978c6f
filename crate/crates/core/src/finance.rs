//! Discounted-cashflow arithmetic shared by the household investment model
//! and the sector cost accounting.

use crate::scalar::{real, Scalar};

/// Discount factor `1 / (1+r)^k` for a cashflow `k` years out.
#[inline]
pub fn discount_factor<S: Scalar>(rate: S, years_out: u32) -> S {
    (S::one() + rate).powi(years_out as i32).recip()
}

/// Net present value of an up-front outlay followed by yearly savings.
/// `savings[k]` is received at the end of year `k+1`.
pub fn net_present_value<S: Scalar>(capex: S, savings: &[S], rate: S) -> S {
    let discounted: S = savings
        .iter()
        .enumerate()
        .map(|(k, s)| *s * discount_factor(rate, (k + 1) as u32))
        .sum();
    discounted - capex
}

/// Discounted payback period outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payback<S> {
    /// Recovered after this many years (fractional inside the crossing year).
    Years(S),
    /// Not recovered within the horizon.
    Never,
}

impl<S: Scalar> Payback<S> {
    pub fn within(&self, threshold: S) -> bool {
        matches!(self, Payback::Years(y) if *y <= threshold)
    }

    /// Numeric form for CSV output; `Never` maps to `None`.
    pub fn years(&self) -> Option<S> {
        match self {
            Payback::Years(y) => Some(*y),
            Payback::Never => None,
        }
    }
}

/// Discounted payback period: the smallest point at which cumulative
/// discounted savings reach the outlay, interpolated linearly inside the
/// crossing year. Savings are received end-of-year as in
/// [`net_present_value`].
pub fn discounted_payback<S: Scalar>(capex: S, savings: &[S], rate: S) -> Payback<S> {
    if capex <= S::zero() {
        return Payback::Years(S::zero());
    }
    let mut cumulative = S::zero();
    for (k, s) in savings.iter().enumerate() {
        let discounted = *s * discount_factor(rate, (k + 1) as u32);
        let next = cumulative + discounted;
        if next >= capex {
            let fraction = (capex - cumulative) / discounted;
            return Payback::Years(real::<S>(k as f64) + fraction);
        }
        cumulative = next;
    }
    Payback::Never
}

/// Constant yearly payment equivalent of an overnight cost over an asset
/// lifetime: `overnight * r / (1 - (1+r)^-lifetime)`. Lifetimes may be
/// fractional (e.g. 22.5 years).
pub fn annuity<S: Scalar>(overnight: S, lifetime_years: S, rate: S) -> S {
    debug_assert!(lifetime_years > S::zero() && rate > S::zero());
    overnight * rate / (S::one() - (S::one() + rate).powf(-lifetime_years))
}
