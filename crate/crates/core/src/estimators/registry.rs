use std::collections::BTreeMap;
use std::sync::Arc;

use super::{EstimatorError, EstimatorSettings, GpEstimator, GradientEstimator, LsqEstimator};

pub type EstimatorFactory = Arc<
    dyn Fn(&EstimatorSettings) -> Result<Box<dyn GradientEstimator>, EstimatorError> + Send + Sync,
>;

/// Name-keyed constructors for gradient estimators.
#[derive(Clone, Default)]
pub struct EstimatorRegistry {
    factories: BTreeMap<String, EstimatorFactory>,
}

impl std::fmt::Debug for EstimatorRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EstimatorRegistry")
            .field("names", &self.names().collect::<Vec<_>>())
            .finish()
    }
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding `gp` and `lsq`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("gp", |s| Ok(Box::new(GpEstimator::from_settings(s)?)));
        r.register("lsq", |s| {
            Ok(Box::new(LsqEstimator {
                min_samples: s.min_samples.max(3),
            }))
        });
        r
    }

    /// Adds or replaces a factory; returns the previous one.
    pub fn register<F>(&mut self, name: &str, factory: F) -> Option<EstimatorFactory>
    where
        F: Fn(&EstimatorSettings) -> Result<Box<dyn GradientEstimator>, EstimatorError>
            + Send
            + Sync
            + 'static,
    {
        self.factories.insert(name.to_string(), Arc::new(factory))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(
        &self,
        name: &str,
        settings: &EstimatorSettings,
    ) -> Result<Box<dyn GradientEstimator>, EstimatorError> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| EstimatorError::UnknownEstimator {
                name: name.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            })?;
        factory(settings)
    }
}
