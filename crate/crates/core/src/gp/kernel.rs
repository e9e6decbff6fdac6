use super::special::{bessel_k, gamma};

/// Matérn covariance hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpHyperparams {
    /// Smoothness.
    pub nu: f64,
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
    /// Initial diagonal regularization; escalated on factorization failure.
    pub jitter: f64,
}

impl GpHyperparams {
    pub fn new(length_scale: f64, signal_variance: f64, noise_variance: f64) -> crate::Result<Self> {
        let h = Self {
            nu: 2.5,
            length_scale,
            signal_variance,
            noise_variance,
            jitter: 1e-8,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.nu > 0.0
            && self.length_scale > 0.0
            && self.length_scale.is_finite()
            && self.signal_variance > 0.0
            && self.signal_variance.is_finite()
            && self.noise_variance >= 0.0
            && self.jitter >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidConfig(alloc::format!(
                "invalid kernel hyperparameters: {self:?}"
            )))
        }
    }
}

/// Matérn 5/2 in closed form:
/// `s2 (1 + sqrt5 r/l + 5 r^2 / 3l^2) exp(-sqrt5 r/l)`.
pub fn matern52(r: f64, length_scale: f64, signal_variance: f64) -> f64 {
    let s = libm::sqrt(5.0) * r / length_scale;
    signal_variance * (1.0 + s + s * s / 3.0) * libm::exp(-s)
}

/// General Matérn through the Gamma and modified Bessel functions:
/// `s2 2^(1-nu) / Gamma(nu) (sqrt(2 nu) r/l)^nu K_nu(sqrt(2 nu) r/l)`.
pub fn matern_general(r: f64, nu: f64, length_scale: f64, signal_variance: f64) -> f64 {
    if r == 0.0 {
        return signal_variance;
    }
    let z = libm::sqrt(2.0 * nu) * r / length_scale;
    let k = bessel_k(nu, z);
    if k == 0.0 {
        return 0.0;
    }
    // Combine in log space: z^nu overflows before K_nu underflows otherwise.
    let log_value = (1.0 - nu) * core::f64::consts::LN_2 - libm::log(gamma(nu))
        + nu * libm::log(z)
        + libm::log(k);
    signal_variance * libm::exp(log_value)
}

/// Matérn covariance as a function of distance; closed forms for
/// `nu in {1/2, 3/2, 5/2}`, the Bessel form otherwise.
pub fn matern_of_distance(r: f64, hyper: &GpHyperparams) -> f64 {
    let (l, s2) = (hyper.length_scale, hyper.signal_variance);
    if hyper.nu == 2.5 {
        matern52(r, l, s2)
    } else if hyper.nu == 1.5 {
        let s = libm::sqrt(3.0) * r / l;
        s2 * (1.0 + s) * libm::exp(-s)
    } else if hyper.nu == 0.5 {
        s2 * libm::exp(-r / l)
    } else {
        matern_general(r, hyper.nu, l, s2)
    }
}

pub fn euclidean(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "kernel inputs differ in dimension");
    libm::sqrt(u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn matern_kernel(u: &[f64], v: &[f64], hyper: &GpHyperparams) -> f64 {
    matern_of_distance(euclidean(u, v), hyper)
}
