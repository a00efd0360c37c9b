//! Core value types shared by every estimator: the month-based time scale,
//! calendar period grids, censoring encodings, and survey design descriptors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Days-to-months conversion used throughout (365.25 / 12).
pub const DAYS_PER_MONTH: f64 = 30.4375;

/// Upper age bound of the estimand, in months.
pub const AGE_HORIZON: f64 = 60.0;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("period grid needs at least two boundaries, got {0}")]
    TooFewBoundaries(usize),
    #[error("period grid boundaries must be finite and strictly increasing (index {0})")]
    NonIncreasingBoundaries(usize),
    #[error("cluster `{cluster}` appears in strata `{first}` and `{second}`")]
    ClusterInMultipleStrata {
        cluster: String,
        first: String,
        second: String,
    },
    #[error("stratum `{0}` has a single cluster; variance estimation needs at least two")]
    SingletonStratum(String),
    #[error("no records supplied")]
    Empty,
    #[error("record `{child_id}`: weight must be positive, got {weight}")]
    NonPositiveWeight { child_id: String, weight: f64 },
    #[error("record `{child_id}`: invalid censoring outcome ({reason})")]
    InvalidOutcome { child_id: String, reason: String },
}

/// Calendar time measured in continuous months since January 1900, matching
/// the century-month-code convention of DHS recode files.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TimePoint(pub f64);

impl TimePoint {
    pub fn from_cmc(cmc: i64) -> Self {
        TimePoint(cmc as f64)
    }

    /// Boundary of a calendar year expressed on the month scale
    /// (January of `year`).
    pub fn from_year(year: i32) -> Self {
        TimePoint(((year - 1900) * 12) as f64)
    }

    pub fn months(&self) -> f64 {
        self.0
    }

    /// Signed difference `self - other` in months.
    pub fn minus(&self, other: TimePoint) -> f64 {
        self.0 - other.0
    }

    pub fn plus_months(&self, m: f64) -> TimePoint {
        TimePoint(self.0 + m)
    }
}

/// Ordered, consecutive calendar periods. `starts` holds the P+1 boundaries;
/// period `p` (0-based) spans `[starts[p], starts[p+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodGrid {
    starts: Vec<TimePoint>,
}

impl PeriodGrid {
    pub fn new(starts: Vec<TimePoint>) -> Result<Self, DataError> {
        if starts.len() < 2 {
            return Err(DataError::TooFewBoundaries(starts.len()));
        }
        for i in 1..starts.len() {
            if !(starts[i].0.is_finite() && starts[i].0 > starts[i - 1].0) {
                return Err(DataError::NonIncreasingBoundaries(i));
            }
        }
        Ok(PeriodGrid { starts })
    }

    /// Grid from consecutive calendar-year boundaries, e.g. `[2000, 2005, 2010]`.
    pub fn from_years(years: &[i32]) -> Result<Self, DataError> {
        Self::new(years.iter().map(|&y| TimePoint::from_year(y)).collect())
    }

    pub fn n_periods(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn start(&self, p: usize) -> TimePoint {
        self.starts[p]
    }

    pub fn end(&self, p: usize) -> TimePoint {
        self.starts[p + 1]
    }

    /// Length of period `p` in months.
    pub fn length(&self, p: usize) -> f64 {
        self.starts[p + 1].0 - self.starts[p].0
    }

    pub fn span_start(&self) -> TimePoint {
        self.starts[0]
    }

    pub fn span_end(&self) -> TimePoint {
        *self.starts.last().unwrap()
    }

    /// Period containing calendar time `t` under the half-open convention
    /// `[y_p, y_{p+1})`; a time exactly on a boundary belongs to the later
    /// period.
    pub fn period_of(&self, t: TimePoint) -> Option<usize> {
        if t.0 < self.starts[0].0 || t.0 >= self.span_end().0 {
            return None;
        }
        // partition_point returns the count of boundaries <= t
        let idx = self.starts.partition_point(|s| s.0 <= t.0);
        Some(idx - 1)
    }

    pub fn boundaries(&self) -> &[TimePoint] {
        &self.starts
    }
}

/// How a child's survival time was observed. Ages are in months.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CensoringOutcome {
    /// Death observed at an exact age.
    Exact(f64),
    /// Alive at last contact, age at censoring.
    RightCensored(f64),
    /// Death known to fall in `[t0, t1)`.
    Interval(f64, f64),
}

impl CensoringOutcome {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            CensoringOutcome::Exact(t) | CensoringOutcome::RightCensored(t) => {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(format!("age {t} must be finite and nonnegative"));
                }
            }
            CensoringOutcome::Interval(t0, t1) => {
                if !(t0.is_finite() && t1.is_finite() && t0 >= 0.0 && t0 < t1) {
                    return Err(format!("interval [{t0}, {t1}) must satisfy 0 <= t0 < t1"));
                }
            }
        }
        Ok(())
    }

    /// Upper age bound relevant for risk-set membership: the latest age at
    /// which the child could still have been at risk.
    pub fn risk_bound(&self) -> f64 {
        match *self {
            CensoringOutcome::Exact(t) => t,
            CensoringOutcome::RightCensored(t) => t,
            CensoringOutcome::Interval(_, t1) => t1,
        }
    }

    pub fn is_death(&self) -> bool {
        !matches!(self, CensoringOutcome::RightCensored(_))
    }
}

/// One surveyed child.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChildRecord {
    pub child_id: String,
    pub birth: TimePoint,
    pub outcome: CensoringOutcome,
    pub weight: f64,
    pub stratum_id: String,
    pub cluster_id: String,
}

impl ChildRecord {
    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(DataError::NonPositiveWeight {
                child_id: self.child_id.clone(),
                weight: self.weight,
            });
        }
        self.outcome
            .validate()
            .map_err(|reason| DataError::InvalidOutcome {
                child_id: self.child_id.clone(),
                reason,
            })
    }
}

/// Strata and the clusters nested in them, as needed by the variance and
/// bootstrap machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyDesign {
    pub strata: Vec<Stratum>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub id: String,
    pub clusters: Vec<String>,
}

impl SurveyDesign {
    /// Derive the design from the records, checking that each cluster sits in
    /// exactly one stratum. Strata and clusters keep first-appearance order so
    /// the derivation is deterministic.
    pub fn from_records(records: &[ChildRecord]) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::Empty);
        }
        let mut strata: Vec<Stratum> = Vec::new();
        let mut cluster_home: Vec<(String, String)> = Vec::new();
        for r in records {
            match cluster_home.iter().find(|(c, _)| c == &r.cluster_id) {
                Some((_, s)) if s != &r.stratum_id => {
                    return Err(DataError::ClusterInMultipleStrata {
                        cluster: r.cluster_id.clone(),
                        first: s.clone(),
                        second: r.stratum_id.clone(),
                    });
                }
                Some(_) => {}
                None => {
                    cluster_home.push((r.cluster_id.clone(), r.stratum_id.clone()));
                    match strata.iter_mut().find(|s| s.id == r.stratum_id) {
                        Some(s) => s.clusters.push(r.cluster_id.clone()),
                        None => strata.push(Stratum {
                            id: r.stratum_id.clone(),
                            clusters: vec![r.cluster_id.clone()],
                        }),
                    }
                }
            }
        }
        Ok(SurveyDesign { strata })
    }

    /// Error if any stratum has fewer than two clusters.
    pub fn require_two_clusters(&self) -> Result<(), DataError> {
        for s in &self.strata {
            if s.clusters.len() < 2 {
                return Err(DataError::SingletonStratum(s.id.clone()));
            }
        }
        Ok(())
    }
}

/// One period's slice of a child's at-risk life: ages `[lo, hi)` lived inside
/// period `period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskWindow {
    pub period: usize,
    /// Entry age into the period, before flooring at 0 (`a_p = y_p - b`).
    pub entry_age: f64,
    pub lo: f64,
    pub hi: f64,
}

/// The contiguous run of periods in which a child is at risk before age `x`,
/// with the per-period age windows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RiskPeriods {
    pub windows: Vec<RiskWindow>,
}

impl RiskPeriods {
    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn periods(&self) -> impl Iterator<Item = usize> + '_ {
        self.windows.iter().map(|w| w.period)
    }
}

/// Periods in which a child born at `birth` is alive and at risk of dying
/// before age `x`: all `p` with `y_p - b > -l_p` and `y_p - b < x`.
pub fn risk_periods(birth: TimePoint, grid: &PeriodGrid, x: f64) -> RiskPeriods {
    let mut windows = Vec::new();
    if !(x > 0.0) || !x.is_finite() && x.is_nan() {
        return RiskPeriods { windows };
    }
    for p in 0..grid.n_periods() {
        let a = grid.start(p).minus(birth);
        let l = grid.length(p);
        if a > -l && a < x {
            let lo = a.max(0.0);
            let hi = x.min(a + l);
            if hi > lo {
                windows.push(RiskWindow {
                    period: p,
                    entry_age: a,
                    lo,
                    hi,
                });
            }
        }
    }
    RiskPeriods { windows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_2000_2010() -> PeriodGrid {
        PeriodGrid::from_years(&[2000, 2005, 2010]).unwrap()
    }

    #[test]
    fn grid_construction_and_lengths() {
        let g = grid_2000_2010();
        assert_eq!(g.n_periods(), 2);
        assert_eq!(g.length(0), 60.0);
        assert_eq!(g.length(1), 60.0);
        assert!(PeriodGrid::from_years(&[2000]).is_err());
        assert!(PeriodGrid::from_years(&[2005, 2000]).is_err());
    }

    #[test]
    fn period_membership_is_half_open() {
        let g = grid_2000_2010();
        assert_eq!(g.period_of(TimePoint::from_year(2000)), Some(0));
        assert_eq!(g.period_of(TimePoint::from_year(2005)), Some(1));
        assert_eq!(g.period_of(TimePoint::from_year(2010)), None);
        assert_eq!(g.period_of(TimePoint(TimePoint::from_year(2005).0 - 1e-9)), Some(0));
        assert_eq!(g.period_of(TimePoint::from_year(1999)), None);
    }

    #[test]
    fn risk_periods_birth_at_period_start() {
        // single-period grid of length 60, born at its start
        let g = PeriodGrid::from_years(&[2000, 2005]).unwrap();
        let rp = risk_periods(TimePoint::from_year(2000), &g, 60.0);
        assert_eq!(rp.windows.len(), 1);
        assert_eq!(rp.windows[0].period, 0);
        assert_eq!((rp.windows[0].lo, rp.windows[0].hi), (0.0, 60.0));
    }

    #[test]
    fn risk_periods_mid_period_birth_spans_two() {
        // born Jan 2002, x = 60: windows [0,36) in period 1 and [36,60) in period 2
        let g = grid_2000_2010();
        let rp = risk_periods(TimePoint::from_year(2002), &g, 60.0);
        let w: Vec<_> = rp.windows.iter().map(|w| (w.period, w.lo, w.hi)).collect();
        assert_eq!(w, vec![(0, 0.0, 36.0), (1, 36.0, 60.0)]);
    }

    #[test]
    fn risk_periods_early_cohort_exits_before_second_period() {
        // born 1998: enters the grid at age 24, reaches 60 before 2005
        let g = grid_2000_2010();
        let rp = risk_periods(TimePoint::from_year(1998), &g, 60.0);
        let w: Vec<_> = rp.windows.iter().map(|w| (w.period, w.lo, w.hi)).collect();
        assert_eq!(w, vec![(0, 24.0, 60.0)]);
    }

    #[test]
    fn risk_periods_empty_when_life_window_misses_grid() {
        let g = grid_2000_2010();
        // born 2011: after the grid
        assert!(risk_periods(TimePoint::from_year(2011), &g, 60.0).is_empty());
        // born 1990: exits risk at 60 months in 1995, before the grid
        assert!(risk_periods(TimePoint::from_year(1990), &g, 60.0).is_empty());
        // x = 0 never contributes
        assert!(risk_periods(TimePoint::from_year(2002), &g, 0.0).is_empty());
    }

    #[test]
    fn boundary_birth_belongs_to_later_period() {
        let g = grid_2000_2010();
        let rp = risk_periods(TimePoint::from_year(2005), &g, 60.0);
        let w: Vec<_> = rp.windows.iter().map(|w| (w.period, w.lo, w.hi)).collect();
        assert_eq!(w, vec![(1, 0.0, 60.0)]);
    }

    #[test]
    fn design_from_records_detects_cluster_in_two_strata() {
        let mk = |id: &str, s: &str, c: &str| ChildRecord {
            child_id: id.into(),
            birth: TimePoint(1200.0),
            outcome: CensoringOutcome::RightCensored(10.0),
            weight: 1.0,
            stratum_id: s.into(),
            cluster_id: c.into(),
        };
        let recs = vec![mk("a", "s1", "c1"), mk("b", "s2", "c1")];
        assert!(SurveyDesign::from_records(&recs).is_err());

        let recs = vec![mk("a", "s1", "c1"), mk("b", "s1", "c2"), mk("c", "s2", "c3")];
        let d = SurveyDesign::from_records(&recs).unwrap();
        assert_eq!(d.strata.len(), 2);
        assert!(d.require_two_clusters().is_err()); // s2 has one cluster
    }
}
