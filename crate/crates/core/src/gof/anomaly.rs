use serde::{Deserialize, Serialize};

use crate::error::{Result, VolumaError};
use crate::trace::VolumeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyThresholds {
    /// Bins at or below this fraction of capacity count as outage.
    pub outage: f64,
    /// Bins at or above this fraction of capacity count as saturated.
    pub saturation: f64,
    /// A trace is flagged when either fraction exceeds this.
    pub critical_fraction: f64,
}

impl Default for AnomalyThresholds {
    fn default() -> Self {
        AnomalyThresholds {
            outage: 0.01,
            saturation: 0.95,
            critical_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub outage_fraction: f64,
    pub saturation_fraction: f64,
    pub flagged: bool,
    /// Link capacity the fractions refer to, bytes/s.
    pub capacity_used: f64,
}

pub fn anomaly_screen(vs: &VolumeSeries, capacity: f64) -> Result<AnomalyReport> {
    anomaly_screen_with(vs, capacity, &AnomalyThresholds::default())
}

pub fn anomaly_screen_with(
    vs: &VolumeSeries,
    capacity: f64,
    th: &AnomalyThresholds,
) -> Result<AnomalyReport> {
    if !(capacity > 0.0 && capacity.is_finite()) {
        return Err(VolumaError::DomainError(format!(
            "capacity must be positive, got {capacity}"
        )));
    }
    let per_bin = capacity * vs.timescale;
    let n = vs.volumes.len() as f64;
    let low = vs
        .volumes
        .iter()
        .filter(|v| **v <= th.outage * per_bin)
        .count() as f64;
    let high = vs
        .volumes
        .iter()
        .filter(|v| **v >= th.saturation * per_bin)
        .count() as f64;
    let (outage_fraction, saturation_fraction) = (low / n, high / n);
    Ok(AnomalyReport {
        outage_fraction,
        saturation_fraction,
        flagged: outage_fraction > th.critical_fraction
            || saturation_fraction > th.critical_fraction,
        capacity_used: capacity,
    })
}

/// Screen against the peak observed rate when the link capacity is unknown.
/// A series with no traffic at all is reported as a full outage.
pub fn anomaly_screen_observed(vs: &VolumeSeries, th: &AnomalyThresholds) -> AnomalyReport {
    let peak = vs.volumes.iter().copied().fold(0.0, f64::max) / vs.timescale;
    if peak > 0.0 && peak.is_finite() {
        if let Ok(r) = anomaly_screen_with(vs, peak, th) {
            return r;
        }
    }
    AnomalyReport {
        outage_fraction: 1.0,
        saturation_fraction: 0.0,
        flagged: true,
        capacity_used: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: Vec<f64>) -> VolumeSeries {
        VolumeSeries::new(0.1, v, 0.0, "t").unwrap()
    }

    #[test]
    fn all_zero() {
        let r = anomaly_screen(&series(vec![0.0; 50]), 1000.0).unwrap();
        assert_eq!(r.outage_fraction, 1.0);
        assert!(r.flagged);
        assert!(
            anomaly_screen_observed(&series(vec![0.0; 5]), &AnomalyThresholds::default()).flagged
        );
    }

    #[test]
    fn pinned_at_capacity() {
        let r = anomaly_screen(&series(vec![100.0; 50]), 1000.0).unwrap();
        assert_eq!(r.saturation_fraction, 1.0);
        assert_eq!(r.outage_fraction, 0.0);
        assert!(r.flagged);
    }

    #[test]
    fn quiet_trace_passes() {
        let v: Vec<f64> = (0..100).map(|i| 40.0 + (i % 7) as f64).collect();
        let r = anomaly_screen(&series(v), 1000.0).unwrap();
        assert!(!r.flagged);
        assert!(anomaly_screen(&series(vec![1.0]), 0.0).is_err());
    }
}
