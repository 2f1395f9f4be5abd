//! Ratio statistics for one inequality over an ensemble.

use std::collections::BTreeMap;
use std::fmt;

/// Summary of `left / right` over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// Member index attaining `max_ratio`.
    pub argmax: Option<usize>,
    pub sample_count: usize,
    /// Members whose ratio was undefined (`0/0`) and therefore skipped.
    pub excluded: usize,
    /// Members whose ratio moved under `u ↦ c·u`; `None` when the two sides
    /// have different homogeneity and the probe does not apply.
    pub scale_violations: Option<usize>,
}

impl InequalityReport {
    /// Build from per-member ratios; `None` entries are excluded.
    pub fn from_ratios(
        name: &str,
        params: BTreeMap<String, f64>,
        seed: u64,
        ratios: &[Option<f64>],
        scale_violations: Option<usize>,
    ) -> Self {
        let mut max_ratio = 0.0;
        let mut argmax = None;
        let mut sum = 0.0;
        let mut used = 0;
        for (i, r) in ratios.iter().enumerate() {
            if let Some(r) = *r {
                sum += r;
                used += 1;
                if argmax.is_none() || r > max_ratio || r.is_nan() {
                    max_ratio = r;
                    argmax = Some(i);
                }
            }
        }
        Self {
            name: name.to_string(),
            params,
            seed,
            max_ratio,
            mean_ratio: if used > 0 { sum / used as f64 } else { 0.0 },
            argmax,
            sample_count: used,
            excluded: ratios.len() - used,
            scale_violations,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.max_ratio.is_finite() && self.mean_ratio.is_finite()
    }

    /// Relative change of `max_ratio` against another report.
    pub fn relative_change(&self, other: &InequalityReport) -> f64 {
        (self.max_ratio - other.max_ratio).abs() / self.max_ratio.abs().max(other.max_ratio.abs())
    }

    /// One-line `key=value` record.
    pub fn to_record(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for InequalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "inequality={} seed={}", self.name, self.seed)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        write!(
            f,
            " max_ratio={:.12e} mean_ratio={:.12e} argmax={} samples={} excluded={}",
            self.max_ratio,
            self.mean_ratio,
            self.argmax.map_or_else(|| "none".to_string(), |i| i.to_string()),
            self.sample_count,
            self.excluded
        )?;
        match self.scale_violations {
            Some(v) => write!(f, " scale_violations={v}"),
            None => write!(f, " scale_violations=n/a"),
        }
    }
}

/// Convenience for building parameter maps.
pub fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics_and_exclusions() {
        let r = InequalityReport::from_ratios(
            "demo",
            params(&[("s", 0.5)]),
            9,
            &[Some(1.0), None, Some(3.0), Some(2.0)],
            Some(0),
        );
        assert_eq!(r.max_ratio, 3.0);
        assert_eq!(r.mean_ratio, 2.0);
        assert_eq!(r.argmax, Some(2));
        assert_eq!(r.sample_count, 3);
        assert_eq!(r.excluded, 1);
        assert!(r.max_ratio >= r.mean_ratio);
        assert_eq!(
            r.to_record(),
            "inequality=demo seed=9 s=0.5 max_ratio=3.000000000000e0 mean_ratio=2.000000000000e0 \
             argmax=2 samples=3 excluded=1 scale_violations=0"
        );
    }

    #[test]
    fn empty_report() {
        let r = InequalityReport::from_ratios("none", BTreeMap::new(), 0, &[None], None);
        assert_eq!(r.argmax, None);
        assert_eq!(r.sample_count, 0);
        assert!(r.to_record().ends_with("scale_violations=n/a"));
    }
}
