//! Pre-flight check that a store holds every vector a run will request.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::data::{AuxQueryFile, Dataset, EmbeddingStore, Kind};
use crate::scoring::{resolve_query, SystemSpec};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MissingEntry {
    pub system: String,
    pub instance: String,
    pub space: String,
    pub kind: Kind,
    pub key: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CoverageReport {
    /// One entry per (system, instance, key) lookup that would fail.
    pub missing: Vec<MissingEntry>,
    /// Systems whose queries cannot be resolved (bad spec, missing aux
    /// file or row).
    pub unresolved: Vec<String>,
}

impl CoverageReport {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.unresolved.is_empty()
    }

    /// Distinct `(space, kind, key)` triples absent from the store.
    pub fn unique_keys(&self) -> BTreeSet<(String, Kind, String)> {
        self.missing
            .iter()
            .map(|m| (m.space.clone(), m.kind, m.key.clone()))
            .collect()
    }

    pub fn findings(&self) -> Vec<String> {
        let mut out = self.unresolved.clone();
        out.extend(self.missing.iter().map(|m| {
            format!(
                "system {:?}, instance {}: missing {} key {:?} in space {:?}",
                m.system, m.instance, m.kind, m.key, m.space
            )
        }));
        out
    }
}

pub fn store_coverage_check(
    store: &EmbeddingStore,
    dataset: &Dataset,
    systems: &[SystemSpec],
    aux: &[AuxQueryFile],
) -> CoverageReport {
    let mut report = CoverageReport::default();
    for spec in systems {
        if let Err(e) = spec.validate() {
            report.unresolved.push(e.to_string());
            continue;
        }
        for inst in &dataset.instances {
            let plan = match resolve_query(inst, spec, aux) {
                Ok(plan) => plan,
                Err(e) => {
                    report.unresolved.push(e.to_string());
                    continue;
                }
            };
            let mut seen = BTreeSet::new();
            for (kind, key) in plan.required_keys(inst) {
                if !store.contains(plan.space(), kind, key) && seen.insert((kind, key)) {
                    report.missing.push(MissingEntry {
                        system: spec.name.clone(),
                        instance: inst.id.clone(),
                        space: plan.space().to_string(),
                        kind,
                        key: key.to_string(),
                    });
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AuxKind, EmbeddingSpace};
    use crate::scoring::{score_system, QuerySource, SampleMetric};

    fn dataset(n: usize) -> Dataset {
        let text: String = (0..n)
            .map(|i| {
                let imgs: Vec<String> = (0..10).map(|j| format!("i{i}_{j}")).collect();
                format!("w\tw phrase {i}\t{}\n", imgs.join("\t"))
            })
            .collect();
        Dataset::parse(&text, "x").unwrap()
    }

    fn full_store(ds: &Dataset) -> EmbeddingStore {
        let mut s = EmbeddingStore::new();
        s.add_space(EmbeddingSpace::new("clip", 2, true).unwrap()).unwrap();
        for inst in &ds.instances {
            s.insert("clip", Kind::Text, &inst.full_phrase, vec![1.0, 0.0]).unwrap();
            for c in &inst.candidates {
                s.insert("clip", Kind::Image, c, vec![0.0, 1.0]).unwrap();
            }
        }
        s
    }

    #[test]
    fn complete_store_has_empty_report() {
        let ds = dataset(3);
        let store = full_store(&ds);
        let base = SystemSpec::new("base", "clip", QuerySource::Phrase);
        let report = store_coverage_check(&store, &ds, std::slice::from_ref(&base), &[]);
        assert!(report.is_empty());
        assert_eq!(score_system(&ds, &base, &store, &[], None).unwrap().len(), 3);
    }

    #[test]
    fn missing_candidate_reported() {
        let ds = dataset(3);
        let mut partial = EmbeddingStore::new();
        let full = full_store(&ds);
        partial.add_space(EmbeddingSpace::new("clip", 2, true).unwrap()).unwrap();
        for e in full.entries("clip") {
            if e.key != "i1_4" {
                partial.insert("clip", e.kind, &e.key, e.vector.clone()).unwrap();
            }
        }
        let base = SystemSpec::new("base", "clip", QuerySource::Phrase);
        let report = store_coverage_check(&partial, &ds, &[base], &[]);
        assert_eq!(
            report.missing,
            vec![MissingEntry {
                system: "base".into(),
                instance: "000002".into(),
                space: "clip".into(),
                kind: Kind::Image,
                key: "i1_4".into(),
            }]
        );
    }

    #[test]
    fn sample_keys_set_difference() {
        let ds = dataset(4);
        let mut store = full_store(&ds);
        let mut tsv = String::new();
        let mut expected = BTreeSet::new();
        for (i, inst) in ds.instances.iter().enumerate() {
            for j in 0..50 {
                let key = format!("sample:{}:{j}", inst.id);
                tsv.push_str(&format!("{}\t{key}\n", inst.id));
                // Instances 1 and 3 lose their last sample.
                if i % 2 == 1 && j == 49 {
                    expected.insert((inst.id.clone(), key));
                } else {
                    store.insert("clip", Kind::Image, &key, vec![0.6, 0.8]).unwrap();
                }
            }
        }
        let aux = AuxQueryFile::parse("sd", AuxKind::Samples, &tsv, &ds).unwrap();
        let sd = SystemSpec::new(
            "sd",
            "clip",
            QuerySource::SdSamples { tag: "sd".into(), metric: SampleMetric::MaxCosine },
        );
        let report = store_coverage_check(&store, &ds, &[sd], &[aux]);
        let got: BTreeSet<(String, String)> =
            report.missing.iter().map(|m| (m.instance.clone(), m.key.clone())).collect();
        assert_eq!(got, expected);
        assert_eq!(report.missing.len(), 2);
    }

    #[test]
    fn unresolved_aux_reported() {
        let ds = dataset(2);
        let store = full_store(&ds);
        let k2t = SystemSpec::new("k2t", "clip", QuerySource::Context { tag: "k2t-1".into() });
        let report = store_coverage_check(&store, &ds, &[k2t], &[]);
        assert_eq!(report.unresolved.len(), 2);
        assert!(!report.is_empty());
    }
}
