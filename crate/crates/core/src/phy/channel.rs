//! Flat-fading AWGN links.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkChannel {
    pub h: Complex64,
    /// Linear transmit power.
    pub power: f64,
    /// Complex noise variance.
    pub sigma2: f64,
}

impl LinkChannel {
    pub fn new(h: Complex64, power: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!("noise variance must be positive, got {sigma2}")));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::Config(format!("transmit power must be positive, got {power}")));
        }
        Ok(LinkChannel { h, power, sigma2 })
    }

    /// Unit power and the noise variance that gives `snr_db` with gain `h`.
    pub fn from_snr_db(h: Complex64, snr_db: f64) -> Self {
        let sigma2 = h.norm_sqr() / 10f64.powf(snr_db / 10.0);
        LinkChannel { h, power: 1.0, sigma2 }
    }

    pub fn snr(&self) -> f64 {
        self.power * self.h.norm_sqr() / self.sigma2
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr().log10()
    }

    /// Effective gain `√P·h` seen by the receiver.
    pub fn gain(&self) -> Complex64 {
        self.h * self.power.sqrt()
    }
}

/// One circularly symmetric complex Gaussian sample with variance `sigma2`.
pub fn complex_noise<R: Rng + ?Sized>(rng: &mut R, sigma2: f64) -> Complex64 {
    let s = (sigma2 / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// `y[n] = √P·h·x[n] + z[n]`.
pub fn apply_channel<R: Rng + ?Sized>(samples: &[Complex64], ch: &LinkChannel, rng: &mut R) -> Vec<Complex64> {
    let g = ch.gain();
    samples.iter().map(|&x| g * x + complex_noise(rng, ch.sigma2)).collect()
}
