//! Evaluation history shared by the engine, strategy, and metrics.

/// One evaluated location. `internal` is the maximization-space value the
/// optimizer reasons about; `raw` is what the black box returned.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Position in the archive (acquisition order).
    pub index: usize,
    /// Normalized location.
    pub norm: Vec<f64>,
    /// Original-unit location.
    pub orig: Vec<f64>,
    pub raw: f64,
    pub internal: f64,
    pub from_init: bool,
}

/// Ordered evaluation history. The engine never evaluates a location twice,
/// so entries are duplicate-free by construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Archive {
    samples: Vec<Sample>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(
        &mut self,
        norm: Vec<f64>,
        orig: Vec<f64>,
        raw: f64,
        internal: f64,
        from_init: bool,
    ) -> usize {
        debug_assert!(
            !self.samples.iter().any(|s| s.norm == norm),
            "archive locations are unique"
        );
        let index = self.samples.len();
        self.samples.push(Sample {
            index,
            norm,
            orig,
            raw,
            internal,
            from_init,
        });
        index
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn get(&self, index: usize) -> &Sample {
        &self.samples[index]
    }

    /// Best sample by internal value; earliest wins ties.
    pub fn best(&self) -> Option<&Sample> {
        self.samples
            .iter()
            .reduce(|best, s| if s.internal > best.internal { s } else { best })
    }

    /// Shift that maps every internal value to at least 1:
    /// `min(internal) - 1`.
    pub fn positive_shift(&self) -> Option<f64> {
        self.samples
            .iter()
            .map(|s| s.internal)
            .reduce(f64::min)
            .map(|m| m - 1.0)
    }
}
