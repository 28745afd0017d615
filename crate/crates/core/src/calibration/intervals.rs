use serde::{Deserialize, Serialize};

use crate::data::{fmt6, TableRow};
use crate::error::{Error, Result};

/// Right-closed bins `(a, b]` of the given width over [0, 1]; the first bin
/// also holds 0.
pub fn bin_index(p: f64, width: f64) -> usize {
    let bins = (1.0 / width).round() as usize;
    if p <= 0.0 {
        return 0;
    }
    let k = (p / width - 1e-9).ceil() as usize;
    k.saturating_sub(1).min(bins - 1)
}

fn check_width(width: f64) -> Result<usize> {
    if !(width > 0.0 && width <= 1.0) {
        return Err(Error::invalid(format!("bin width {width} must be in (0, 1]")));
    }
    let bins = (1.0 / width).round();
    if ((bins * width) - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("bin width {width} does not divide [0, 1]")));
    }
    Ok(bins as usize)
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub bin_lower: f64,
    pub bin_upper: f64,
    /// Replicates with at least one prediction in the bin.
    pub replicates: usize,
    pub points: usize,
    /// 2.5% and 97.5% percentiles of the per-replicate mean realized
    /// accuracy; absent for empty bins.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub matched: Option<bool>,
}

impl IntervalRow {
    pub fn populated(&self) -> bool {
        self.points > 0
    }
}

impl TableRow for IntervalRow {
    fn header() -> Vec<&'static str> {
        vec!["bin_lower", "bin_upper", "replicates", "points", "lower", "upper", "match"]
    }

    fn fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt6).unwrap_or_else(|| "NA".to_string());
        vec![
            fmt6(self.bin_lower),
            fmt6(self.bin_upper),
            self.replicates.to_string(),
            self.points.to_string(),
            opt(self.lower),
            opt(self.upper),
            self.matched.map(|m| m.to_string()).unwrap_or_else(|| "NA".to_string()),
        ]
    }
}

/// Per bin of predicted accuracy: the mean realized accuracy within each
/// replicate, then the empirical 95% interval across replicates. A bin
/// matches when that interval lies inside it.
pub fn interval_table(replicates: &[Vec<(f64, f64)>], width: f64) -> Result<Vec<IntervalRow>> {
    let bins = check_width(width)?;
    let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); bins];
    let mut points = vec![0usize; bins];
    for pairs in replicates {
        let mut sum = vec![0.0; bins];
        let mut count = vec![0usize; bins];
        for &(pred, realized) in pairs {
            if !(pred.is_finite() && realized.is_finite()) {
                return Err(Error::invalid("non-finite calibration pair"));
            }
            let b = bin_index(pred, width);
            sum[b] += realized;
            count[b] += 1;
        }
        for b in 0..bins {
            if count[b] > 0 {
                per_bin[b].push(sum[b] / count[b] as f64);
                points[b] += count[b];
            }
        }
    }
    Ok((0..bins)
        .map(|b| {
            let (a, z) = (b as f64 * width, (b + 1) as f64 * width);
            let mut means = per_bin[b].clone();
            if means.is_empty() {
                return IntervalRow {
                    bin_lower: a,
                    bin_upper: z,
                    replicates: 0,
                    points: 0,
                    lower: None,
                    upper: None,
                    matched: None,
                };
            }
            means.sort_by(f64::total_cmp);
            let lo = quantile_sorted(&means, 0.025);
            let hi = quantile_sorted(&means, 0.975);
            let lower_ok = if b == 0 { lo >= a } else { lo > a };
            IntervalRow {
                bin_lower: a,
                bin_upper: z,
                replicates: means.len(),
                points: points[b],
                lower: Some(lo),
                upper: Some(hi),
                matched: Some(lower_ok && hi <= z),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityPoint {
    pub bin_center: f64,
    pub count: usize,
    pub mean_predicted: f64,
    pub mean_realized: f64,
    /// Mean realized accuracy plus or minus 1.96 standard errors.
    pub band_lower: f64,
    pub band_upper: f64,
}

impl TableRow for ReliabilityPoint {
    fn header() -> Vec<&'static str> {
        vec!["bin_center", "count", "mean_predicted", "mean_realized", "band_lower", "band_upper"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt6(self.bin_center),
            self.count.to_string(),
            fmt6(self.mean_predicted),
            fmt6(self.mean_realized),
            fmt6(self.band_lower),
            fmt6(self.band_upper),
        ]
    }
}

/// Populated bins only, in increasing order.
pub fn reliability_curve(pairs: &[(f64, f64)], width: f64) -> Result<Vec<ReliabilityPoint>> {
    let bins = check_width(width)?;
    let mut groups: Vec<Vec<(f64, f64)>> = vec![Vec::new(); bins];
    for &(p, r) in pairs {
        if !(p.is_finite() && r.is_finite()) {
            return Err(Error::invalid("non-finite calibration pair"));
        }
        groups[bin_index(p, width)].push((p, r));
    }
    Ok(groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(b, g)| {
            let n = g.len() as f64;
            let mean_predicted = g.iter().map(|x| x.0).sum::<f64>() / n;
            let mean_realized = g.iter().map(|x| x.1).sum::<f64>() / n;
            let sd = if g.len() > 1 {
                (g.iter().map(|x| (x.1 - mean_realized).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let half = 1.96 * sd / n.sqrt();
            ReliabilityPoint {
                bin_center: (b as f64 + 0.5) * width,
                count: g.len(),
                mean_predicted,
                mean_realized,
                band_lower: mean_realized - half,
                band_upper: mean_realized + half,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_are_right_closed() {
        assert_eq!(bin_index(0.0, 0.1), 0);
        assert_eq!(bin_index(0.1, 0.1), 0);
        assert_eq!(bin_index(0.1000001, 0.1), 1);
        assert_eq!(bin_index(0.3, 0.1), 2);
        assert_eq!(bin_index(1.0, 0.1), 9);
        assert_eq!(bin_index(0.05, 0.05), 0);
        assert_eq!(bin_index(0.97, 0.05), 19);
    }

    #[test]
    fn single_bin_match() {
        let reps = vec![vec![(0.42, 0.42), (0.45, 0.45)], vec![(0.44, 0.44)]];
        let t = interval_table(&reps, 0.1).unwrap();
        assert_eq!(t.len(), 10);
        let populated: Vec<_> = t.iter().filter(|r| r.populated()).collect();
        assert_eq!(populated.len(), 1);
        assert_eq!(populated[0].matched, Some(true));
        assert_eq!(t[0].lower, None);
        assert!(interval_table(&reps, 0.3).is_err());
    }

    #[test]
    fn reliability_shapes() {
        let c = reliability_curve(&[(0.33, 1.0), (0.33, 0.0)], 0.1).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].bin_center - 0.35).abs() < 1e-12);
        let anti: Vec<(f64, f64)> = (0..10).map(|i| (0.05 + 0.1 * i as f64, 0.95 - 0.1 * i as f64)).collect();
        for p in reliability_curve(&anti, 0.1).unwrap() {
            assert!((p.mean_realized - (1.0 - p.bin_center)).abs() < 1e-12);
        }
    }
}
