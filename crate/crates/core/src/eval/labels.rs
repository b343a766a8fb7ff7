//! Discrete label spaces and the rounding that maps predictions onto them.

use serde::{Deserialize, Serialize};

use crate::targets::{Bucket, Task, Trend};

pub const SLOPE_LIMIT: f64 = 10.0;

/// Label space of one task. Labels are integer codes; for slopes code `k`
/// stands for the value `k * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelSpace {
    pub task: Task,
    pub slope_step: f64,
}

impl LabelSpace {
    pub fn new(task: Task, slope_step: f64) -> Self {
        assert!(slope_step > 0.0, "slope step must be positive");
        Self { task, slope_step }
    }

    fn slope_k_max(&self) -> i64 {
        (SLOPE_LIMIT / self.slope_step + 1e-9).floor() as i64
    }

    pub fn codes(&self) -> Vec<i64> {
        match self.task {
            Task::Raw => (0..=10).collect(),
            Task::Bucket | Task::TrendType => (0..=2).collect(),
            Task::Slope => {
                let k = self.slope_k_max();
                (-k..=k).collect()
            }
        }
    }

    pub fn len(&self) -> usize {
        match self.task {
            Task::Raw => 11,
            Task::Bucket | Task::TrendType => 3,
            Task::Slope => 2 * self.slope_k_max() as usize + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of `code` in [`codes`](Self::codes).
    pub fn index_of(&self, code: i64) -> Option<usize> {
        let (lo, hi) = match self.task {
            Task::Raw => (0, 10),
            Task::Bucket | Task::TrendType => (0, 2),
            Task::Slope => (-self.slope_k_max(), self.slope_k_max()),
        };
        (lo..=hi).contains(&code).then(|| (code - lo) as usize)
    }

    /// Value of a label in task units.
    pub fn value(&self, code: i64) -> f64 {
        match self.task {
            Task::Slope => code as f64 * self.slope_step,
            _ => code as f64,
        }
    }

    pub fn name(&self, code: i64) -> String {
        match self.task {
            Task::Raw => code.to_string(),
            Task::Bucket => [Bucket::Low, Bucket::Moderate, Bucket::High][code as usize].name().into(),
            Task::TrendType => [Trend::Downward, Trend::Stable, Trend::Upward][code as usize].name().into(),
            Task::Slope => format!("{}", self.value(code)),
        }
    }

    /// Rounds half away from zero onto the label grid, then clips to it.
    pub fn discretize(&self, x: f64) -> i64 {
        let x = if x.is_finite() { x } else { 0.0 };
        match self.task {
            Task::Raw => (x.round() as i64).clamp(0, 10),
            Task::Bucket | Task::TrendType => (x.round() as i64).clamp(0, 2),
            Task::Slope => {
                let k = self.slope_k_max();
                ((x / self.slope_step).round() as i64).clamp(-k, k)
            }
        }
    }
}

pub fn discretize(space: &LabelSpace, predictions: &[f64]) -> Vec<i64> {
    predictions.iter().map(|&p| space.discretize(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_rounding_and_clip() {
        let s = LabelSpace::new(Task::Raw, 1.0);
        assert_eq!(s.discretize(9.6), 10);
        assert_eq!(s.discretize(12.3), 10);
        assert_eq!(s.discretize(-0.7), 0);
        assert_eq!(s.discretize(4.5), 5);
    }

    #[test]
    fn slope_grid() {
        let s = LabelSpace::new(Task::Slope, 1.0);
        assert_eq!(s.discretize(-0.4), 0);
        assert_eq!(s.value(s.discretize(-0.4)), 0.0);
        assert_eq!(s.discretize(-12.0), -10);
        assert_eq!(s.len(), 21);
        assert_eq!(s.codes().len(), 21);
        let half = LabelSpace::new(Task::Slope, 0.5);
        assert_eq!(half.value(half.discretize(1.3)), 1.5);
        assert_eq!(half.len(), 41);
        let odd = LabelSpace::new(Task::Slope, 3.0);
        assert_eq!(odd.value(odd.discretize(10.0)), 9.0);
    }

    #[test]
    fn class_codes() {
        let s = LabelSpace::new(Task::Bucket, 1.0);
        assert_eq!(s.discretize(1.4), 1);
        assert_eq!(s.discretize(2.6), 2);
        assert_eq!(s.name(0), "low");
        assert_eq!(s.index_of(3), None);
        let t = LabelSpace::new(Task::TrendType, 1.0);
        assert_eq!(t.name(2), "upward");
    }
}
