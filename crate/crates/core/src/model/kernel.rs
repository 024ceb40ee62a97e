//! Causal exponential triggering kernel `g(t) = exp(-omega t) 1[t >= 0]` and its integral.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_rate<T: Scalar>(omega: T) -> Result<()> {
    if omega > T::zero() && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "kernel decay rate must be positive and finite, got {omega}"
        )))
    }
}

/// `exp(-omega dt)` for `dt >= 0`, zero before the triggering event.
pub fn kernel_eval<T: Scalar>(omega: T, dt: T) -> Result<T> {
    check_rate(omega)?;
    Ok(decay(omega, dt))
}

/// `(1 - exp(-omega dt)) / omega`, the kernel mass accumulated over `[0, dt]`.
pub fn kernel_integral<T: Scalar>(omega: T, dt: T) -> Result<T> {
    check_rate(omega)?;
    if !(dt >= T::zero()) {
        return Err(Error::Domain(format!(
            "kernel integral needs a non-negative horizon, got {dt}"
        )));
    }
    Ok(mass(omega, dt))
}

// Unchecked forms for inner loops whose inputs were validated upstream.

#[inline]
pub(crate) fn decay<T: Scalar>(omega: T, dt: T) -> T {
    if dt >= T::zero() {
        (-omega * dt).exp()
    } else {
        T::zero()
    }
}

#[inline]
pub(crate) fn mass<T: Scalar>(omega: T, dt: T) -> T {
    if dt <= T::zero() {
        T::zero()
    } else {
        -(-omega * dt).exp_m1() / omega
    }
}

/// `integral over [0, dt] of max(0, mu + c exp(-omega tau))` for `mu >= 0`.
///
/// Between events every intensity has this shape, so the clamped compensator
/// is exact in closed form. With `c < -mu` the integrand is zero until the
/// crossing `tau* = ln(-c / mu) / omega`.
pub fn clamped_mass<T: Scalar>(mu: T, c: T, omega: T, dt: T) -> T {
    if dt <= T::zero() {
        return T::zero();
    }
    if mu + c >= T::zero() {
        return mu * dt + c * mass(omega, dt);
    }
    if mu <= T::zero() {
        return T::zero();
    }
    let cross = (-c / mu).ln() / omega;
    if cross >= dt {
        return T::zero();
    }
    let rest = dt - cross;
    mu * rest - mu * mass(omega, rest)
}

/// Value and derivatives of [`clamped_mass`] with respect to `mu` and `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ClampedParts<T> {
    pub value: T,
    pub d_mu: T,
    pub d_c: T,
    pub h_mu_mu: T,
    pub h_mu_c: T,
    pub h_c_c: T,
}

pub(crate) fn clamped_mass_parts<T: Scalar>(mu: T, c: T, omega: T, dt: T) -> ClampedParts<T> {
    let zero = T::zero();
    let mut out = ClampedParts {
        value: zero,
        d_mu: zero,
        d_c: zero,
        h_mu_mu: zero,
        h_mu_c: zero,
        h_c_c: zero,
    };
    if dt <= zero {
        return out;
    }
    if mu + c >= zero {
        let m = mass(omega, dt);
        out.value = mu * dt + c * m;
        out.d_mu = dt;
        out.d_c = m;
        return out;
    }
    if mu <= zero {
        return out;
    }
    let cross = (-c / mu).ln() / omega;
    if cross >= dt {
        return out;
    }
    let rest = dt - cross;
    let m = mass(omega, rest);
    out.value = mu * rest - mu * m;
    out.d_mu = rest;
    out.d_c = mu / -c * m;
    out.h_mu_mu = (omega * mu).recip();
    out.h_mu_c = -(omega * c).recip();
    out.h_c_c = mu / (omega * c * c);
    out
}
