use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Product-moment correlation, two-pass.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::invalid("correlation needs at least two observations"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("correlation input must be finite"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::invalid("correlation is undefined for a constant input"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

pub const FISHER_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherZ {
    pub z: f64,
    /// Set when |r| was within the clamp distance of 1.
    pub clamped: bool,
}

pub fn fisher_z(r: f64) -> Result<FisherZ> {
    if r.is_nan() || r.abs() > 1.0 {
        return Err(Error::invalid(format!("correlation {r} outside [-1, 1]")));
    }
    if r.abs() >= 1.0 - FISHER_CLAMP {
        return Ok(FisherZ { z: r.signum() * (1.0 - FISHER_CLAMP).atanh(), clamped: true });
    }
    // Evaluated on |r| so the transform is exactly odd.
    Ok(FisherZ { z: r.signum() * r.abs().atanh(), clamped: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson(&x, &[1.0; 4]).is_err());
    }

    #[test]
    fn fisher_examples() {
        assert_eq!(fisher_z(0.0).unwrap().z, 0.0);
        assert!((fisher_z(0.5).unwrap().z - 0.5493061443340549).abs() < 1e-15);
        assert_eq!(fisher_z(-0.3).unwrap().z, -fisher_z(0.3).unwrap().z);
        let c = fisher_z(1.0).unwrap();
        assert!(c.clamped && c.z.is_finite());
        assert!(fisher_z(1.0 + 1e-9).is_err());
    }
}
