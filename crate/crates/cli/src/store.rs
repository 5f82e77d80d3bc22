//! In-memory store of model metadata, benchmark score curves, and
//! per-instance records. Every index is a BTreeMap, so iteration order,
//! and with it every downstream report, is deterministic.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::DataError;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub model_id: String,
    pub group: String,
    pub params: u64,
    pub tokens: u64,
    /// Training compute; defaults to 6 * params * tokens when not logged.
    pub flops: f64,
    pub seed: Option<i64>,
    pub data_order_seed: Option<i64>,
}

impl ModelMeta {
    /// Applies the compute default and validates positivity.
    pub fn new(
        model_id: String,
        group: String,
        params: u64,
        tokens: u64,
        flops: Option<f64>,
        seed: Option<i64>,
        data_order_seed: Option<i64>,
    ) -> Result<Self, DataError> {
        if model_id.is_empty() {
            return Err(DataError::Invalid("model_id must be nonempty".into()));
        }
        if group.is_empty() {
            return Err(DataError::Invalid(format!("model {model_id:?}: group must be nonempty")));
        }
        if params == 0 || tokens == 0 {
            return Err(DataError::Invalid(format!(
                "model {model_id:?}: params and tokens must be positive"
            )));
        }
        let flops = flops.unwrap_or(6.0 * params as f64 * tokens as f64);
        if !(flops > 0.0) || !flops.is_finite() {
            return Err(DataError::Invalid(format!(
                "model {model_id:?}: flops must be positive and finite"
            )));
        }
        Ok(ModelMeta { model_id, group, params, tokens, flops, seed, data_order_seed })
    }
}

/// One logged score: a model's value for a metric on a benchmark (or one
/// of its subtasks) at a training step. `subtask: None` is the
/// whole-benchmark row.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub model_id: String,
    pub step: u64,
    pub benchmark: String,
    pub subtask: Option<String>,
    pub metric: String,
    pub value: f64,
}

/// One instance's (id, primary score, nll nats, byte count) under its
/// (model, step) group.
pub type InstanceTuple = (String, f64, f64, u64);
pub type InstanceGroups = BTreeMap<(String, u64), Vec<InstanceTuple>>;

/// Per-instance log: the graded score plus the gold-continuation negative
/// log-likelihood and its byte length, enough to recompute bits-per-byte.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub model_id: String,
    pub step: u64,
    pub benchmark: String,
    pub subtask: Option<String>,
    pub instance_id: String,
    pub primary_score: f64,
    pub nll_nats: f64,
    pub num_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct CurveKey {
    model_id: String,
    benchmark: String,
    subtask: Option<String>,
    metric: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct InstanceKey {
    benchmark: String,
    model_id: String,
    step: u64,
    subtask: Option<String>,
    instance_id: String,
}

#[derive(Debug, Clone, PartialEq)]
struct InstanceValue {
    primary_score: f64,
    nll_nats: f64,
    num_bytes: u64,
}

/// How to combine curves that do not share every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingPolicy {
    /// Keep only steps present in every curve; error if none are.
    Strict,
    /// Average whatever curves have each step.
    Available,
}

#[derive(Debug, Clone, Default)]
pub struct EvalStore {
    models: BTreeMap<String, ModelMeta>,
    curves: BTreeMap<CurveKey, BTreeMap<u64, f64>>,
    instances: BTreeMap<InstanceKey, InstanceValue>,
}

#[derive(Debug, Default)]
pub struct StoreBuilder {
    store: EvalStore,
}

fn normalize_subtask(subtask: Option<String>) -> Option<String> {
    match subtask {
        Some(s) if s.is_empty() => None,
        other => other,
    }
}

impl StoreBuilder {
    pub fn new() -> Self {
        StoreBuilder::default()
    }

    pub fn add_model(&mut self, meta: ModelMeta) -> Result<(), DataError> {
        if self.store.models.contains_key(&meta.model_id) {
            return Err(DataError::DuplicateModel(meta.model_id));
        }
        self.store.models.insert(meta.model_id.clone(), meta);
        Ok(())
    }

    pub fn add_measurement(&mut self, m: Measurement) -> Result<(), DataError> {
        if !self.store.models.contains_key(&m.model_id) {
            return Err(DataError::UnknownModel(m.model_id));
        }
        if m.benchmark.is_empty() || m.metric.is_empty() {
            return Err(DataError::Invalid(format!(
                "model {:?} step {}: benchmark and metric must be nonempty",
                m.model_id, m.step
            )));
        }
        if !m.value.is_finite() {
            return Err(DataError::Invalid(format!(
                "model {:?} step {} benchmark {:?}: value must be finite",
                m.model_id, m.step, m.benchmark
            )));
        }
        let subtask = normalize_subtask(m.subtask);
        let key = CurveKey {
            model_id: m.model_id.clone(),
            benchmark: m.benchmark.clone(),
            subtask: subtask.clone(),
            metric: m.metric.clone(),
        };
        let curve = self.store.curves.entry(key).or_default();
        if curve.insert(m.step, m.value).is_some() {
            return Err(DataError::DuplicateMeasurement {
                model_id: m.model_id,
                step: m.step,
                benchmark: m.benchmark,
                subtask,
                metric: m.metric,
            });
        }
        Ok(())
    }

    pub fn add_instance(&mut self, r: InstanceRecord) -> Result<(), DataError> {
        if !self.store.models.contains_key(&r.model_id) {
            return Err(DataError::UnknownModel(r.model_id));
        }
        if r.benchmark.is_empty() || r.instance_id.is_empty() {
            return Err(DataError::Invalid(format!(
                "model {:?} step {}: benchmark and instance_id must be nonempty",
                r.model_id, r.step
            )));
        }
        if !r.primary_score.is_finite() {
            return Err(DataError::Invalid(format!(
                "instance {:?}: primary_score must be finite",
                r.instance_id
            )));
        }
        if !(r.nll_nats >= 0.0) || !r.nll_nats.is_finite() {
            return Err(DataError::Invalid(format!(
                "instance {:?}: nll_nats must be finite and nonnegative",
                r.instance_id
            )));
        }
        if r.num_bytes == 0 {
            return Err(DataError::Invalid(format!(
                "instance {:?}: num_bytes must be at least 1",
                r.instance_id
            )));
        }
        let key = InstanceKey {
            benchmark: r.benchmark.clone(),
            model_id: r.model_id.clone(),
            step: r.step,
            subtask: normalize_subtask(r.subtask),
            instance_id: r.instance_id.clone(),
        };
        let value = InstanceValue {
            primary_score: r.primary_score,
            nll_nats: r.nll_nats,
            num_bytes: r.num_bytes,
        };
        if self.store.instances.insert(key, value).is_some() {
            return Err(DataError::DuplicateInstance {
                model_id: r.model_id,
                step: r.step,
                benchmark: r.benchmark,
                instance_id: r.instance_id,
            });
        }
        Ok(())
    }

    pub fn build(self) -> EvalStore {
        self.store
    }
}

impl EvalStore {
    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn n_measurements(&self) -> usize {
        self.curves.values().map(BTreeMap::len).sum()
    }

    pub fn n_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn model(&self, model_id: &str) -> Option<&ModelMeta> {
        self.models.get(model_id)
    }

    pub fn require_model(&self, model_id: &str) -> Result<&ModelMeta, DataError> {
        self.models.get(model_id).ok_or_else(|| DataError::UnknownModel(model_id.into()))
    }

    pub fn models(&self) -> impl Iterator<Item = &ModelMeta> {
        self.models.values()
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.models.keys().cloned().collect()
    }

    pub fn benchmarks(&self) -> BTreeSet<String> {
        self.curves.keys().map(|k| k.benchmark.clone()).collect()
    }

    pub fn metrics_of(&self, benchmark: &str) -> BTreeSet<String> {
        self.curves
            .keys()
            .filter(|k| k.benchmark == benchmark)
            .map(|k| k.metric.clone())
            .collect()
    }

    /// Distinct subtask names under a benchmark, sorted.
    pub fn subtasks_of(&self, benchmark: &str) -> Vec<String> {
        let set: BTreeSet<String> = self
            .curves
            .keys()
            .filter(|k| k.benchmark == benchmark)
            .filter_map(|k| k.subtask.clone())
            .collect();
        set.into_iter().collect()
    }

    /// A model's score curve, sorted by step; empty when nothing was
    /// logged for this selector. Unknown models are an error so typos do
    /// not read as empty curves.
    pub fn query_curve(
        &self,
        model_id: &str,
        benchmark: &str,
        subtask: Option<&str>,
        metric: &str,
    ) -> Result<Vec<(u64, f64)>, DataError> {
        self.require_model(model_id)?;
        let key = CurveKey {
            model_id: model_id.into(),
            benchmark: benchmark.into(),
            subtask: subtask.map(String::from),
            metric: metric.into(),
        };
        Ok(self
            .curves
            .get(&key)
            .map(|c| c.iter().map(|(&s, &v)| (s, v)).collect())
            .unwrap_or_default())
    }

    /// Like `query_curve` but an empty curve is an error naming the selector.
    pub fn require_curve(
        &self,
        model_id: &str,
        benchmark: &str,
        subtask: Option<&str>,
        metric: &str,
    ) -> Result<Vec<(u64, f64)>, DataError> {
        let curve = self.query_curve(model_id, benchmark, subtask, metric)?;
        if curve.is_empty() {
            return Err(DataError::Invalid(format!(
                "model {model_id:?} has no measurements for benchmark {benchmark:?} subtask \
                 {subtask:?} metric {metric:?}"
            )));
        }
        Ok(curve)
    }

    /// Model ids whose training compute lands within `tolerance * target`
    /// of `target`, sorted by id.
    pub fn select_population(&self, target_flops: f64, tolerance: f64) -> Result<Vec<String>, DataError> {
        if !(target_flops > 0.0) {
            return Err(DataError::Invalid("target flops must be positive".into()));
        }
        if !(tolerance >= 0.0) {
            return Err(DataError::Invalid("flops tolerance must be nonnegative".into()));
        }
        Ok(self
            .models
            .values()
            .filter(|m| (m.flops - target_flops).abs() <= tolerance * target_flops)
            .map(|m| m.model_id.clone())
            .collect())
    }

    /// Mean of several curves of one model: the macro average across the
    /// given (benchmark, subtask) selectors, combined in the order given.
    /// Callers that need permutation invariance pass selectors in sorted
    /// order.
    pub fn macro_average(
        &self,
        model_id: &str,
        selectors: &[(String, Option<String>)],
        metric: &str,
        missing: MissingPolicy,
    ) -> Result<Vec<(u64, f64)>, DataError> {
        if selectors.is_empty() {
            return Err(DataError::Invalid("macro average needs at least one selector".into()));
        }
        let mut curves = Vec::with_capacity(selectors.len());
        for (benchmark, subtask) in selectors {
            let curve = self.require_curve(model_id, benchmark, subtask.as_deref(), metric)?;
            curves.push(curve);
        }
        combine_mean(model_id, &curves, missing)
    }

    /// Measurement rows in deterministic (model, benchmark, subtask,
    /// metric, step) order; inverse of ingestion for round-tripping.
    pub fn measurement_rows(&self) -> Vec<Measurement> {
        let mut rows = Vec::with_capacity(self.n_measurements());
        for (key, curve) in &self.curves {
            for (&step, &value) in curve {
                rows.push(Measurement {
                    model_id: key.model_id.clone(),
                    step,
                    benchmark: key.benchmark.clone(),
                    subtask: key.subtask.clone(),
                    metric: key.metric.clone(),
                    value,
                });
            }
        }
        rows
    }

    pub fn instance_rows(&self) -> Vec<InstanceRecord> {
        self.instances
            .iter()
            .map(|(key, value)| InstanceRecord {
                model_id: key.model_id.clone(),
                step: key.step,
                benchmark: key.benchmark.clone(),
                subtask: key.subtask.clone(),
                instance_id: key.instance_id.clone(),
                primary_score: value.primary_score,
                nll_nats: value.nll_nats,
                num_bytes: value.num_bytes,
            })
            .collect()
    }

    /// Instance records of one benchmark grouped by (model, step), in
    /// deterministic order. Subtask is ignored: instances aggregate to
    /// whole-benchmark scores.
    pub fn instances_by_model_step(&self, benchmark: &str) -> InstanceGroups {
        let mut groups: InstanceGroups = BTreeMap::new();
        for (key, value) in &self.instances {
            if key.benchmark != benchmark {
                continue;
            }
            groups.entry((key.model_id.clone(), key.step)).or_default().push((
                key.instance_id.clone(),
                value.primary_score,
                value.nll_nats,
                value.num_bytes,
            ));
        }
        groups
    }

    /// Distinct instance ids of a benchmark, sorted.
    pub fn instance_ids(&self, benchmark: &str) -> Vec<String> {
        let set: BTreeSet<String> = self
            .instances
            .keys()
            .filter(|k| k.benchmark == benchmark)
            .map(|k| k.instance_id.clone())
            .collect();
        set.into_iter().collect()
    }
}

fn combine_mean(
    model_id: &str,
    curves: &[Vec<(u64, f64)>],
    missing: MissingPolicy,
) -> Result<Vec<(u64, f64)>, DataError> {
    let mut sums: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for curve in curves {
        for &(step, value) in curve {
            let slot = sums.entry(step).or_insert((0.0, 0));
            slot.0 += value;
            slot.1 += 1;
        }
    }
    let out: Vec<(u64, f64)> = sums
        .into_iter()
        .filter(|&(_, (_, count))| missing == MissingPolicy::Available || count == curves.len())
        .map(|(step, (sum, count))| (step, sum / count as f64))
        .collect();
    if out.is_empty() {
        return Err(DataError::Invalid(format!(
            "model {model_id:?}: no step is shared by all {} curves",
            curves.len()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn meta(id: &str, group: &str) -> ModelMeta {
        ModelMeta::new(id.into(), group.into(), 1_000_000, 20_000_000, None, None, None).unwrap()
    }

    fn measurement(model: &str, step: u64, subtask: Option<&str>, value: f64) -> Measurement {
        Measurement {
            model_id: model.into(),
            step,
            benchmark: "bench".into(),
            subtask: subtask.map(String::from),
            metric: "primary".into(),
            value,
        }
    }

    #[test]
    fn flops_default_is_six_n_d() {
        let m = meta("m0", "g0");
        assert_eq!(m.flops, 6.0 * 1_000_000.0 * 20_000_000.0);
        let explicit =
            ModelMeta::new("m1".into(), "g".into(), 10, 10, Some(42.0), None, None).unwrap();
        assert_eq!(explicit.flops, 42.0);
    }

    #[test]
    fn meta_validation() {
        assert!(ModelMeta::new("".into(), "g".into(), 1, 1, None, None, None).is_err());
        assert!(ModelMeta::new("m".into(), "".into(), 1, 1, None, None, None).is_err());
        assert!(ModelMeta::new("m".into(), "g".into(), 0, 1, None, None, None).is_err());
        assert!(ModelMeta::new("m".into(), "g".into(), 1, 1, Some(-1.0), None, None).is_err());
    }

    #[test]
    fn curves_come_back_sorted_by_step() {
        let mut b = StoreBuilder::new();
        b.add_model(meta("m0", "g0")).unwrap();
        for &(step, value) in &[(30u64, 0.3), (10, 0.1), (20, 0.2)] {
            b.add_measurement(measurement("m0", step, None, value)).unwrap();
        }
        let store = b.build();
        let curve = store.query_curve("m0", "bench", None, "primary").unwrap();
        assert_eq!(curve, vec![(10, 0.1), (20, 0.2), (30, 0.3)]);
    }

    #[test]
    fn duplicate_measurement_names_the_key() {
        let mut b = StoreBuilder::new();
        b.add_model(meta("m0", "g0")).unwrap();
        b.add_measurement(measurement("m0", 10, Some("s1"), 0.5)).unwrap();
        let err = b.add_measurement(measurement("m0", 10, Some("s1"), 0.6)).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("m0") && text.contains("10") && text.contains("s1"), "{text}");
    }

    #[test]
    fn unknown_model_rejected_everywhere() {
        let mut b = StoreBuilder::new();
        assert!(matches!(
            b.add_measurement(measurement("ghost", 1, None, 0.1)),
            Err(DataError::UnknownModel(_))
        ));
        let store = b.build();
        assert!(matches!(
            store.query_curve("ghost", "bench", None, "primary"),
            Err(DataError::UnknownModel(_))
        ));
    }

    #[test]
    fn empty_subtask_is_whole_benchmark() {
        let mut b = StoreBuilder::new();
        b.add_model(meta("m0", "g0")).unwrap();
        b.add_measurement(measurement("m0", 1, Some(""), 0.5)).unwrap();
        let store = b.build();
        let whole = store.query_curve("m0", "bench", None, "primary").unwrap();
        assert_eq!(whole, vec![(1, 0.5)]);
        assert!(store.subtasks_of("bench").is_empty());
    }

    #[test]
    fn duplicate_via_empty_and_missing_subtask_collide() {
        let mut b = StoreBuilder::new();
        b.add_model(meta("m0", "g0")).unwrap();
        b.add_measurement(measurement("m0", 1, None, 0.5)).unwrap();
        assert!(matches!(
            b.add_measurement(measurement("m0", 1, Some(""), 0.6)),
            Err(DataError::DuplicateMeasurement { .. })
        ));
    }

    #[test]
    fn macro_average_of_two_subtasks() {
        let mut b = StoreBuilder::new();
        b.add_model(meta("m0", "g0")).unwrap();
        for step in 0..3u64 {
            b.add_measurement(measurement("m0", step, Some("s1"), step as f64)).unwrap();
            b.add_measurement(measurement("m0", step, Some("s2"), step as f64 + 1.0)).unwrap();
        }
        let store = b.build();
        let selectors =
            vec![("bench".to_string(), Some("s1".into())), ("bench".to_string(), Some("s2".into()))];
        let avg = store.macro_average("m0", &selectors, "primary", MissingPolicy::Strict).unwrap();
        assert_eq!(avg, vec![(0, 0.5), (1, 1.5), (2, 2.5)]);
    }

    #[test]
    fn macro_average_single_selector_is_identity() {
        let mut b = StoreBuilder::new();
        b.add_model(meta("m0", "g0")).unwrap();
        b.add_measurement(measurement("m0", 5, Some("s1"), 0.25)).unwrap();
        let store = b.build();
        let avg = store
            .macro_average(
                "m0",
                &[("bench".to_string(), Some("s1".into()))],
                "primary",
                MissingPolicy::Strict,
            )
            .unwrap();
        assert_eq!(avg, vec![(5, 0.25)]);
    }

    #[test]
    fn strict_macro_average_keeps_only_shared_steps() {
        let mut b = StoreBuilder::new();
        b.add_model(meta("m0", "g0")).unwrap();
        b.add_measurement(measurement("m0", 0, Some("s1"), 1.0)).unwrap();
        b.add_measurement(measurement("m0", 0, Some("s2"), 2.0)).unwrap();
        b.add_measurement(measurement("m0", 1, Some("s2"), 3.0)).unwrap();
        let store = b.build();
        let selectors =
            vec![("bench".to_string(), Some("s1".into())), ("bench".to_string(), Some("s2".into()))];
        let strict =
            store.macro_average("m0", &selectors, "primary", MissingPolicy::Strict).unwrap();
        assert_eq!(strict, vec![(0, 1.5)]);
        let avg =
            store.macro_average("m0", &selectors, "primary", MissingPolicy::Available).unwrap();
        assert_eq!(avg, vec![(0, 1.5), (1, 3.0)]);
    }

    #[test]
    fn strict_macro_average_with_no_shared_steps_is_an_error() {
        let mut b = StoreBuilder::new();
        b.add_model(meta("m0", "g0")).unwrap();
        b.add_measurement(measurement("m0", 0, Some("s1"), 1.0)).unwrap();
        b.add_measurement(measurement("m0", 1, Some("s2"), 3.0)).unwrap();
        let store = b.build();
        let selectors =
            vec![("bench".to_string(), Some("s1".into())), ("bench".to_string(), Some("s2".into()))];
        assert!(store
            .macro_average("m0", &selectors, "primary", MissingPolicy::Strict)
            .is_err());
    }

    #[test]
    fn select_population_by_compute() {
        let mut b = StoreBuilder::new();
        for (id, flops) in [("a", 0.95e18), ("b", 1.05e18), ("c", 1.2e18)] {
            let m =
                ModelMeta::new(id.into(), id.into(), 1, 1, Some(flops), None, None).unwrap();
            b.add_model(m).unwrap();
        }
        let store = b.build();
        assert_eq!(store.select_population(1e18, 0.1).unwrap(), vec!["a", "b"]);
        assert_eq!(store.select_population(1.2e18, 0.0).unwrap(), vec!["c"]);
        assert!(store.select_population(3e18, 0.1).unwrap().is_empty());
    }

    #[test]
    fn export_rows_round_trip_through_builder() {
        let mut b = StoreBuilder::new();
        b.add_model(meta("m0", "g0")).unwrap();
        b.add_model(meta("m1", "g1")).unwrap();
        b.add_measurement(measurement("m1", 2, Some("s1"), 0.125)).unwrap();
        b.add_measurement(measurement("m0", 1, None, 0.5)).unwrap();
        let store = b.build();
        let rows = store.measurement_rows();
        let mut rebuilt = StoreBuilder::new();
        rebuilt.add_model(meta("m0", "g0")).unwrap();
        rebuilt.add_model(meta("m1", "g1")).unwrap();
        for row in rows {
            rebuilt.add_measurement(row).unwrap();
        }
        let rebuilt = rebuilt.build();
        assert_eq!(rebuilt.measurement_rows(), store.measurement_rows());
    }
}
