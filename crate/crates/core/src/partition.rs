//! Index-set algebra relating the feature of interest, the training
//! features and the conditioning set.

use std::collections::BTreeSet;

use crate::error::{Result, RfiError};

pub type NameSet = BTreeSet<String>;

/// Collects names into a set.
pub fn name_set<I, S>(names: I) -> NameSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    names.into_iter().map(Into::into).collect()
}

/// The sets derived from a feature of interest `j`, the training features
/// `D` and a conditioning set `G`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPartition {
    pub j: String,
    pub features: NameSet,
    pub given: NameSet,
    /// `R = D \ {j}`
    pub rest: NameSet,
    /// `R ∩ G`
    pub given_in_rest: NameSet,
    /// `R \ G`: remaining features whose dependence with `j` is broken.
    pub rest_outside_given: NameSet,
    /// `G \ R`: conditioning variables the model never saw.
    pub given_outside_rest: NameSet,
    pub added: Option<AddedSets>,
}

/// Sets derived from an extension `N` of the conditioning set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddedSets {
    pub added: NameSet,
    /// `N \ R`
    pub added_outside_rest: NameSet,
    /// `R ∩ N`
    pub added_in_rest: NameSet,
    /// `R \ G \ N`
    pub rest_outside_both: NameSet,
}

/// Derives the partition for feature `j` of training features `features`
/// relative to `given`. `target` may appear in neither set.
pub fn make_partition<'a, I, J>(
    features: I,
    j: &str,
    given: J,
    target: &str,
) -> Result<IndexPartition>
where
    I: IntoIterator<Item = &'a str>,
    J: IntoIterator<Item = &'a str>,
{
    let features: NameSet = name_set(features);
    let given: NameSet = name_set(given);
    if !features.contains(j) {
        return Err(RfiError::InvalidPartition(format!(
            "feature of interest `{j}` is not a training feature"
        )));
    }
    if given.contains(target) {
        return Err(RfiError::InvalidPartition(format!(
            "target `{target}` may not be in the conditioning set"
        )));
    }
    if features.contains(target) {
        return Err(RfiError::InvalidPartition(format!(
            "target `{target}` may not be a training feature"
        )));
    }
    if given.contains(j) {
        return Err(RfiError::InvalidPartition(format!(
            "feature of interest `{j}` may not be in its own conditioning set"
        )));
    }
    let mut rest = features.clone();
    rest.remove(j);
    let given_in_rest = rest.intersection(&given).cloned().collect();
    let rest_outside_given = rest.difference(&given).cloned().collect();
    let given_outside_rest = given.difference(&rest).cloned().collect();
    Ok(IndexPartition {
        j: j.to_string(),
        features,
        given,
        rest,
        given_in_rest,
        rest_outside_given,
        given_outside_rest,
        added: None,
    })
}

impl IndexPartition {
    /// Attaches an extension `N` of the conditioning set. `N` must be
    /// disjoint from `G` and must not contain `j` or the target.
    pub fn with_added<'a, I>(mut self, added: I, target: &str) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let added: NameSet = name_set(added);
        if let Some(dup) = added.intersection(&self.given).next() {
            return Err(RfiError::InvalidPartition(format!(
                "`{dup}` is in both the conditioning set and its extension"
            )));
        }
        if added.contains(&self.j) {
            return Err(RfiError::InvalidPartition(format!(
                "feature of interest `{}` may not be in the extension set",
                self.j
            )));
        }
        if added.contains(target) {
            return Err(RfiError::InvalidPartition(format!(
                "target `{target}` may not be in the extension set"
            )));
        }
        let added_outside_rest = added.difference(&self.rest).cloned().collect();
        let added_in_rest = self.rest.intersection(&added).cloned().collect();
        let rest_outside_both = self.rest_outside_given.difference(&added).cloned().collect();
        self.added = Some(AddedSets {
            added,
            added_outside_rest,
            added_in_rest,
            rest_outside_both,
        });
        Ok(self)
    }

    /// `G ∪ N`, or `G` when no extension is attached.
    pub fn extended_given(&self) -> NameSet {
        let mut out = self.given.clone();
        if let Some(a) = &self.added {
            out.extend(a.added.iter().cloned());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> NameSet {
        name_set(names.iter().copied())
    }

    #[test]
    fn four_features_condition_on_one() {
        let p = make_partition(["x1", "x2", "x3", "x4"], "x3", ["x1"], "y").unwrap();
        assert_eq!(p.rest, set(&["x1", "x2", "x4"]));
        assert_eq!(p.given_in_rest, set(&["x1"]));
        assert_eq!(p.rest_outside_given, set(&["x2", "x4"]));
        assert!(p.given_outside_rest.is_empty());
    }

    #[test]
    fn conditioning_outside_training_features() {
        let p = make_partition(["x1", "x2", "x3"], "x2", ["C"], "y").unwrap();
        assert_eq!(p.rest, set(&["x1", "x3"]));
        assert!(p.given_in_rest.is_empty());
        assert_eq!(p.rest_outside_given, set(&["x1", "x3"]));
        assert_eq!(p.given_outside_rest, set(&["C"]));
    }

    #[test]
    fn single_feature_degenerate() {
        let p = make_partition(["x1"], "x1", [], "y").unwrap();
        assert!(p.rest.is_empty());
        assert!(p.given_in_rest.is_empty());
        assert!(p.rest_outside_given.is_empty());
        assert!(p.given_outside_rest.is_empty());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            make_partition(["x1"], "x2", [], "y"),
            Err(RfiError::InvalidPartition(_))
        ));
        assert!(matches!(
            make_partition(["x1", "x2"], "x1", ["y"], "y"),
            Err(RfiError::InvalidPartition(_))
        ));
        assert!(matches!(
            make_partition(["x1", "x2"], "x1", ["x1"], "y"),
            Err(RfiError::InvalidPartition(_))
        ));
    }

    #[test]
    fn extension_sets() {
        let p = make_partition(["x1", "x2", "x3", "x4"], "x4", ["x2"], "y")
            .unwrap()
            .with_added(["x1", "C"], "y")
            .unwrap();
        let a = p.added.as_ref().unwrap();
        assert_eq!(a.added_in_rest, set(&["x1"]));
        assert_eq!(a.added_outside_rest, set(&["C"]));
        assert_eq!(a.rest_outside_both, set(&["x3"]));
        assert_eq!(p.extended_given(), set(&["x1", "x2", "C"]));

        let base = make_partition(["x1", "x2"], "x1", ["x2"], "y").unwrap();
        assert!(base.clone().with_added(["x2"], "y").is_err());
        assert!(base.with_added(["x1"], "y").is_err());
    }
}
