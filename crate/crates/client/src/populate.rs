use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use vwsd_core::{store_coverage_check, AuxQueryFile, Dataset, EmbeddingSpace, EmbeddingStore, Kind, SystemSpec};

use crate::client::EmbedClient;
use crate::error::ClientError;
use crate::protocol::{EmbedItem, EmbedRequest, EmbedResponse, MAX_BATCH};

#[derive(Debug, Clone)]
pub struct PopulateOptions {
    /// Items per request, at most [`MAX_BATCH`].
    pub batch_size: usize,
    /// Requests in flight at once.
    pub concurrency: usize,
    /// Prefix joined to image keys to form image payloads.
    pub image_root: Option<String>,
    /// Normalization flag for spaces the store does not declare yet.
    /// Undeclared spaces default to normalized.
    pub normalized: HashMap<String, bool>,
}

impl Default for PopulateOptions {
    fn default() -> Self {
        PopulateOptions {
            batch_size: MAX_BATCH,
            concurrency: 4,
            image_root: None,
            normalized: HashMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PopulateStats {
    pub requests: usize,
    pub fetched: usize,
}

fn payload(kind: Kind, key: &str, image_root: Option<&str>) -> String {
    match (kind, image_root) {
        (Kind::Image, Some(root)) => format!("{}/{}", root.trim_end_matches('/'), key),
        _ => key.to_string(),
    }
}

/// Splits the missing keys into per-(space, kind) requests of at most
/// `batch_size` items, in a deterministic order.
pub fn plan_batches(
    missing: impl IntoIterator<Item = (String, Kind, String)>,
    options: &PopulateOptions,
) -> Vec<EmbedRequest> {
    let size = options.batch_size.clamp(1, MAX_BATCH);
    let mut grouped: BTreeMap<(String, Kind), Vec<String>> = BTreeMap::new();
    for (space, kind, key) in missing {
        grouped.entry((space, kind)).or_default().push(key);
    }
    let mut batches = Vec::new();
    for ((space, kind), keys) in grouped {
        for chunk in keys.chunks(size) {
            batches.push(EmbedRequest {
                space: space.clone(),
                kind,
                items: chunk
                    .iter()
                    .map(|k| EmbedItem {
                        key: k.clone(),
                        payload: payload(kind, k, options.image_root.as_deref()),
                    })
                    .collect(),
            });
        }
    }
    batches
}

/// Fetches every vector the given systems need that `existing` lacks and
/// returns the merged store.
///
/// Present entries are never re-fetched or overwritten. If any batch fails
/// the error reports how many batches succeeded and nothing is merged.
pub fn populate_store(
    client: &EmbedClient,
    dataset: &Dataset,
    systems: &[SystemSpec],
    aux: &[AuxQueryFile],
    existing: &EmbeddingStore,
    options: &PopulateOptions,
) -> Result<(EmbeddingStore, PopulateStats), ClientError> {
    let coverage = store_coverage_check(existing, dataset, systems, aux);
    if let Some(problem) = coverage.unresolved.first() {
        return Err(ClientError::InvalidRequest(problem.clone()));
    }
    let batches = plan_batches(coverage.unique_keys(), options);
    if batches.is_empty() {
        return Ok((existing.clone(), PopulateStats::default()));
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<EmbedResponse, ClientError>>>> =
        Mutex::new((0..batches.len()).map(|_| None).collect());
    let workers = options.concurrency.clamp(1, batches.len());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(request) = batches.get(i) else { break };
                let outcome = client.fetch_embeddings(request);
                let failed = outcome.is_err();
                results.lock().expect("results lock")[i] = Some(outcome);
                if failed {
                    // Stop handing out new batches; in-flight ones finish.
                    next.store(batches.len(), Ordering::SeqCst);
                }
            });
        }
    });

    let results = results.into_inner().expect("results lock");
    let total = batches.len();
    let succeeded = results.iter().filter(|r| matches!(r, Some(Ok(_)))).count();
    let mut responses = Vec::with_capacity(total);
    for r in results {
        match r {
            Some(Ok(resp)) => responses.push(resp),
            Some(Err(e)) => {
                return Err(ClientError::Populate {
                    succeeded,
                    total,
                    source: Box::new(e),
                })
            }
            None => {}
        }
    }
    if responses.len() != total {
        return Err(ClientError::Populate {
            succeeded,
            total,
            source: Box::new(ClientError::Protocol("batches were abandoned".into())),
        });
    }

    let mut merged = existing.clone();
    let mut fetched = 0;
    for (request, response) in batches.iter().zip(responses) {
        if merged.space(&response.space).is_none() {
            let normalized = options.normalized.get(&response.space).copied().unwrap_or(true);
            merged.add_space(EmbeddingSpace::new(response.space.clone(), response.dim, normalized)?)?;
        }
        for v in response.vectors {
            merged.insert_normalizing(&response.space, request.kind, &v.key, v.vec)?;
            fetched += 1;
        }
    }
    Ok((merged, PopulateStats { requests: total, fetched }))
}
