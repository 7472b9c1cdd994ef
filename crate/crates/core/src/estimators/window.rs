use std::collections::VecDeque;

use super::EstimatorError;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// seconds
    pub t: f64,
    pub p: Vec2,
    /// mg/m³
    pub delta: f64,
}

/// FIFO buffer of the most recent `capacity` samples, strictly ordered in time.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementWindow {
    capacity: usize,
    entries: VecDeque<Sample>,
}

impl MeasurementWindow {
    pub const DEFAULT_CAPACITY: usize = 200;

    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.entries.back().map(|s| s.t)
    }

    /// Appends a sample, evicting the oldest one when full.
    pub fn push(&mut self, t: f64, p: Vec2, delta: f64) -> Result<(), EstimatorError> {
        if let Some(last) = self.last_time() {
            if t.is_nan() || t <= last {
                return Err(EstimatorError::NonIncreasingTime { last, t });
            }
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(Sample { t, p, delta });
        Ok(())
    }

    /// Oldest first.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Sample> {
        self.entries.iter()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

impl Default for MeasurementWindow {
    fn default() -> Self {
        Self::new(Self::DEFAULT_CAPACITY)
    }
}
