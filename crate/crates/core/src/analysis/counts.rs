//! Zero-count Poisson estimator and frame classification.

use serde::Serialize;

use crate::error::{Error, Result};

/// Below this zero-count fraction the estimator is flagged as near saturation.
pub const NEAR_SATURATION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountEstimate {
    /// Estimated number of molecules.
    pub n: f64,
    pub sigma_n: f64,
    /// Mean detected molecules per frame.
    pub lambda_p: f64,
    pub p_zero: f64,
    pub n_frames: u64,
    pub near_saturation: bool,
}

/// λ = −ln P₀, N = N_frames λ, σ_N = N_frames σ_P / P₀ with the binomial σ_P.
pub fn poisson_counts(n_zero_frames: u64, n_frames: u64) -> Result<CountEstimate> {
    if n_frames == 0 {
        return Err(Error::Counts("no frames".into()));
    }
    if n_zero_frames > n_frames {
        return Err(Error::Counts(format!("{n_zero_frames} empty frames out of {n_frames}")));
    }
    if n_zero_frames == 0 {
        return Err(Error::Counts(
            "saturated: every frame has an event, the zero-count estimator is undefined".into(),
        ));
    }
    let frames = n_frames as f64;
    let p_zero = n_zero_frames as f64 / frames;
    let lambda_p = -p_zero.ln();
    let sigma_p = (p_zero * (1.0 - p_zero) / frames).sqrt();
    let near_saturation = p_zero < NEAR_SATURATION;
    if near_saturation {
        log::warn!("only {n_zero_frames} of {n_frames} frames are empty; count estimate is near saturation");
    }
    Ok(CountEstimate {
        n: frames * lambda_p,
        sigma_n: frames * sigma_p / p_zero,
        lambda_p,
        p_zero,
        n_frames,
        near_saturation,
    })
}

/// S_N = N_res/N_off − 1 with independent Gaussian errors.
pub fn normalized_signal_from_counts(res: &CountEstimate, off: &CountEstimate) -> Result<(f64, f64)> {
    if !(off.n > 0.0) {
        return Err(Error::Counts("reference count is zero".into()));
    }
    let s = res.n / off.n - 1.0;
    let a = res.sigma_n / off.n;
    let b = res.n * off.sigma_n / (off.n * off.n);
    Ok((s, a.hypot(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameClassification {
    pub threshold: f64,
    pub n_frames: u64,
    /// frames at or below the threshold
    pub n_zero_frames: u64,
}

/// Hit/no-hit classification against mean + k·std of background frames.
pub fn classify_frames(frames: &[f64], background: &[f64], multiplier: f64) -> Result<FrameClassification> {
    if background.len() < 2 {
        return Err(Error::Counts("need at least two background frames".into()));
    }
    if frames.is_empty() {
        return Err(Error::Counts("no signal frames".into()));
    }
    let n = background.len() as f64;
    let mean = background.iter().sum::<f64>() / n;
    let var = background.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let threshold = mean + multiplier * var.sqrt();
    Ok(FrameClassification {
        threshold,
        n_frames: frames.len() as u64,
        n_zero_frames: frames.iter().filter(|&&f| f <= threshold).count() as u64,
    })
}

impl FrameClassification {
    pub fn estimate(&self) -> Result<CountEstimate> {
        poisson_counts(self.n_zero_frames, self.n_frames)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_empty_frames() {
        let e = poisson_counts(500, 1000).unwrap();
        assert!((e.lambda_p - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((e.n - 693.147_180_559_945_3).abs() < 1e-9);
        // 1000·√(0.25/1000)/0.5
        assert!((e.sigma_n - 31.622_776_601_683_793).abs() < 1e-9);
        assert!(!e.near_saturation);
    }

    #[test]
    fn boundaries() {
        let none = poisson_counts(1000, 1000).unwrap();
        assert_eq!(none.n, 0.0);
        assert_eq!(none.sigma_n, 0.0);
        let nearly = poisson_counts(1, 1000).unwrap();
        assert!(nearly.near_saturation);
        assert!(nearly.sigma_n > 900.0);
        assert!(matches!(poisson_counts(0, 1000), Err(Error::Counts(_))));
        assert!(poisson_counts(2, 1).is_err());
    }

    #[test]
    fn normalized_signal_propagation() {
        let off = poisson_counts(500, 1000).unwrap();
        let (s, sigma) = normalized_signal_from_counts(&off, &off).unwrap();
        assert_eq!(s, 0.0);
        assert!((sigma - std::f64::consts::SQRT_2 * off.sigma_n / off.n).abs() < 1e-15);

        let mut res = off;
        res.n = 1.2 * off.n;
        res.sigma_n = 0.0;
        let mut quiet = off;
        quiet.sigma_n = 0.0;
        assert!((normalized_signal_from_counts(&res, &quiet).unwrap().0 - 0.2).abs() < 1e-15);

        let mut res2 = res;
        let mut off2 = off;
        res2.sigma_n = 10.0;
        res.sigma_n = 5.0;
        off2.sigma_n = 2.0 * off.sigma_n;
        let single = normalized_signal_from_counts(&res, &off).unwrap().1;
        let double = normalized_signal_from_counts(&res2, &off2).unwrap().1;
        assert!((double / single - 2.0).abs() < 1e-12);

        let mut empty = off;
        empty.n = 0.0;
        assert!(normalized_signal_from_counts(&off, &empty).is_err());
    }

    #[test]
    fn threshold_classification() {
        let background = [1.0, 2.0, 3.0, 2.0];
        let frames = [1.0, 2.0, 4.0, 10.0, 2.5];
        let c = classify_frames(&frames, &background, 3.0).unwrap();
        // mean 2, sample std √(2/3)
        assert!((c.threshold - (2.0 + 3.0 * (2.0f64 / 3.0).sqrt())).abs() < 1e-15);
        assert_eq!(c.n_zero_frames, 4);
        assert_eq!(c.estimate().unwrap().n_frames, 5);
        assert!(classify_frames(&frames, &[1.0], 3.0).is_err());
    }
}
