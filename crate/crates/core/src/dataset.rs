use std::collections::BTreeMap;
use std::sync::Arc;

use crate::data::DataSource;
use crate::domain::{FeatureDomain, OutputDomain};
use crate::error::{Error, Result};
use crate::example::{Example, Task};
use crate::provenance::{DataProvenance, ProvValue};

/// An immutable collection of examples with the feature and output domains
/// computed over them and the provenance describing how they were produced.
#[derive(Debug, Clone)]
pub struct Dataset {
    examples: Arc<[Example]>,
    feature_domain: FeatureDomain,
    output_domain: OutputDomain,
    provenance: DataProvenance,
}

impl Dataset {
    /// Drains `source` and computes domains and provenance.
    pub fn build(source: &dyn DataSource) -> Result<Self> {
        let examples = source.examples()?;
        let source_prov = source.provenance();
        Self::assemble(examples, |n, f| DataProvenance::new(source_prov, n, f))
    }

    pub(crate) fn assemble(
        examples: Vec<Example>,
        provenance: impl FnOnce(usize, usize) -> DataProvenance,
    ) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::EmptySource);
        }
        let output_domain = OutputDomain::from_examples(&examples)?;
        let feature_domain = FeatureDomain::from_examples(&examples);
        let provenance = provenance(examples.len(), feature_domain.len());
        Ok(Self {
            examples: examples.into(),
            feature_domain,
            output_domain,
            provenance,
        })
    }

    /// The same examples under a derived provenance, e.g. a sample or a
    /// transformation result.
    pub(crate) fn derive(
        &self,
        examples: Vec<Example>,
        provenance: impl FnOnce(usize, usize) -> DataProvenance,
    ) -> Result<Self> {
        Self::assemble(examples, provenance)
    }

    /// A view with per-example weights replaced, keeping domains.
    pub(crate) fn reweighted(
        &self,
        weights: &[f64],
        view_class: &str,
        config: BTreeMap<String, ProvValue>,
        instance: BTreeMap<String, ProvValue>,
    ) -> Result<Self> {
        assert_eq!(weights.len(), self.examples.len());
        let examples: Vec<Example> = self
            .examples
            .iter()
            .zip(weights)
            .map(|(e, &w)| e.with_weight(w))
            .collect();
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidWeight(*bad));
        }
        let provenance = DataProvenance::view(
            view_class,
            &self.provenance,
            config,
            instance,
            examples.len(),
            self.feature_domain.len(),
        );
        Ok(Self {
            examples: examples.into(),
            feature_domain: self.feature_domain.clone(),
            output_domain: self.output_domain.clone(),
            provenance,
        })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn feature_domain(&self) -> &FeatureDomain {
        &self.feature_domain
    }

    pub fn output_domain(&self) -> &OutputDomain {
        &self.output_domain
    }

    pub fn provenance(&self) -> &DataProvenance {
        &self.provenance
    }

    pub fn task(&self) -> Task {
        self.output_domain.task()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::InMemorySource;
    use crate::example::Output;

    fn ex(pairs: &[(&str, f64)], out: Output) -> Example {
        Example::new(pairs.iter().map(|(n, v)| (*n, *v)), out, 1.0).unwrap()
    }

    #[test]
    fn build_records_counts() {
        let source = InMemorySource::new(
            "three",
            vec![
                ex(&[("a", 1.0)], Output::Categorical("x".into())),
                ex(&[("a", 2.0), ("b", 1.0)], Output::Categorical("y".into())),
                ex(&[("a", 3.0)], Output::Categorical("x".into())),
            ],
        );
        let d = Dataset::build(&source).unwrap();
        assert_eq!(d.feature_domain().id("a"), Some(0));
        assert_eq!(d.feature_domain().id("b"), Some(1));
        assert_eq!(d.provenance().num_examples(), 3);
        assert_eq!(d.provenance().num_features(), 2);
        assert!(d.provenance().transformations().is_empty());
        let a = d.feature_domain().get("a").unwrap();
        assert_eq!(a.mean, 2.0);
        assert!((a.variance - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn build_errors() {
        let empty = InMemorySource::new("none", vec![]);
        assert!(matches!(Dataset::build(&empty), Err(Error::EmptySource)));
        let mixed = InMemorySource::new(
            "mixed",
            vec![
                ex(&[("a", 1.0)], Output::Categorical("x".into())),
                ex(&[("a", 1.0)], Output::Real(2.0)),
            ],
        );
        assert!(matches!(
            Dataset::build(&mixed),
            Err(Error::MixedOutputTypes)
        ));
    }
}
