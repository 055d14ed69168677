//! Cache-aware generation and bounded-concurrency batch driving.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use super::{
    prompt_cache_key, AttackError, GenerateBackend, GenerationCache, GenerationRecord,
    RefusalDetector,
};

/// Runs one generation through the cache.
///
/// A cache hit returns the stored record (marked cached) without touching
/// the backend; a miss calls the backend, assembles the record with latency
/// and cost accounting, and appends it to the cache.
pub fn generate(
    backend: &dyn GenerateBackend,
    transcript_id: &str,
    prompt: &str,
    refusals: &RefusalDetector,
    cache: Option<&GenerationCache>,
) -> Result<GenerationRecord, AttackError> {
    let key = prompt_cache_key(
        backend.model_name(),
        prompt,
        backend.temperature(),
        backend.max_output_tokens(),
    );
    if let Some(cache) = cache {
        if let Some(hit) = cache.get(&key) {
            return Ok(hit);
        }
    }

    let started = Instant::now();
    let response = backend.complete(prompt)?;
    let latency_secs = started.elapsed().as_secs_f64();
    let record = GenerationRecord {
        transcript_id: transcript_id.to_string(),
        attacker_id: backend.attacker_id().to_string(),
        prompt_hash: key.clone(),
        refusal_flag: refusals.is_refusal(&response.text),
        output_text: response.text,
        prompt_tokens: response.prompt_tokens,
        completion_tokens: response.completion_tokens,
        latency_secs,
        cost_usd: backend.price().cost(response.prompt_tokens, response.completion_tokens),
        timestamp: chrono::Utc::now(),
        cached: false,
    };
    if let Some(cache) = cache {
        cache.put(&key, &record)?;
    }
    Ok(record)
}

/// Batch generation settings.
#[derive(Debug, Clone, Copy)]
pub struct BatchOptions {
    /// Concurrent in-flight generations.
    pub concurrency: usize,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions { concurrency: 4 }
    }
}

/// Generates for every (transcript id, prompt) pair with bounded
/// concurrency. Records come back in input order regardless of completion
/// order; the first error aborts the batch (already-cached work is kept).
pub fn generate_batch(
    backend: &dyn GenerateBackend,
    prompts: &[(String, String)],
    refusals: &RefusalDetector,
    cache: Option<&GenerationCache>,
    options: &BatchOptions,
) -> Result<Vec<GenerationRecord>, AttackError> {
    let workers = options.concurrency.max(1).min(prompts.len().max(1));
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let results: Mutex<Vec<Option<Result<GenerationRecord, AttackError>>>> =
        Mutex::new((0..prompts.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if failed.load(Ordering::Relaxed) {
                    return;
                }
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= prompts.len() {
                    return;
                }
                let (transcript_id, prompt) = &prompts[idx];
                let outcome = generate(backend, transcript_id, prompt, refusals, cache);
                if outcome.is_err() {
                    failed.store(true, Ordering::Relaxed);
                }
                results.lock().expect("results lock")[idx] = Some(outcome);
            });
        }
    });

    let slots = results.into_inner().expect("results lock");
    let mut records = Vec::with_capacity(prompts.len());
    for slot in slots {
        match slot {
            Some(Ok(record)) => records.push(record),
            Some(Err(e)) => return Err(e),
            // Unprocessed after an abort elsewhere.
            None => {
                return Err(AttackError::Generation {
                    attempts: 0,
                    last_error: "batch aborted before this prompt ran".into(),
                })
            }
        }
    }
    Ok(records)
}
