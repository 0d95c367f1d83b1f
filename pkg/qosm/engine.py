# qosm/engine.py
"""
Online modeling loop. For every interval t past the warm start:
select primitives on the history up to t - 1, train a bucket, predict
QoS(t), compare with the observed value, then adapt alpha and beta.
"""
import logging
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from . import schemas
from .ensemble import (Bucket, BucketInput, predict_with_bucket, train_bucket,
                       update_weights, vector_seeds)
from .errors import InsufficientHistoryError, InsufficientSamplesError, TraceFormatError
from .learners import TrainedModel, feature_row, fit_model
from .models import Algorithm, LearnerConfig, MetricKey, SelectionMode
from .partitioning import PrimitiveSpaces, partition
from .reporting import summarize
from .seeding import child_int
from .selection import SelectionResult, select_primitives
from .settings import Settings, get_settings
from .topology import Topology
from .trace import SeriesSource, TraceTable

logger = logging.getLogger(__name__)


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    service: str
    qos: str
    learners: Tuple[Algorithm, ...] = (Algorithm.armax, Algorithm.ann, Algorithm.rt)
    selection: SelectionMode = SelectionMode.hybrid
    seed: int = 0
    eval_window: int = Field(350, ge=1)
    bins: int = Field(10, ge=1)
    budget: int = Field(200, ge=1)
    epsilon: float = Field(1e-9, ge=0.0)
    warm_start: int = Field(8, ge=4)
    train_fraction: float = Field(0.7, gt=0.0, lt=1.0)
    alpha_init: float = Field(0.1, ge=0.0)
    beta_init: float = Field(0.1, ge=0.0)
    update_window: int = Field(1, ge=1)
    fixed_primitives: Tuple[str, ...] = ("cpu", "memory")
    max_workers: int = Field(4, ge=1)
    record_timing: bool = False

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None, **overrides) -> "RunConfig":
        settings = settings or get_settings()
        values = dict(
            eval_window=settings.eval_window,
            bins=settings.bins,
            budget=settings.selection_budget,
            epsilon=settings.epsilon,
            warm_start=settings.warm_start,
            train_fraction=settings.train_fraction,
            alpha_init=settings.alpha_init,
            beta_init=settings.beta_init,
            update_window=settings.update_window,
            fixed_primitives=tuple(settings.fixed_primitives),
            max_workers=settings.max_workers,
        )
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def learner_configs(self) -> List[LearnerConfig]:
        return [LearnerConfig.default(algorithm) for algorithm in self.learners]


class OnlineModeler:
    """
    Drives one (service, QoS attribute) through the feedback loop. Holds
    the latest bucket so the caller can dump its models afterwards.
    """

    def __init__(self, topology: Topology, trace: TraceTable, config: RunConfig):
        self.topology = topology
        self.trace = trace
        self.config = config
        self.learners = config.learner_configs()

        record = topology.service(config.service)
        topology.qos_spec(record.path, config.qos)
        self.qos_key: MetricKey = (record.path, config.qos)
        if not trace.has(self.qos_key):
            raise TraceFormatError(f"Trace has no series for {record.path}:{config.qos}")
        self.spaces: PrimitiveSpaces = partition(topology, record.path)
        missing = [p.label for p in self.spaces.all if not trace.has(p.key)]
        if missing:
            raise TraceFormatError(f"Trace lacks primitives {sorted(missing)[:5]}")
        self.bucket: Optional[Bucket] = None

    # --- One interval ---

    def select(self, t: int, executor: Optional[Executor] = None) -> SelectionResult:
        history = self.trace.window(self.trace.first_interval, t - 1)
        return select_primitives(
            self.config.selection,
            self.spaces,
            self.topology,
            history.column(self.qos_key),
            history,
            budget=self.config.budget,
            bins=self.config.bins,
            epsilon=self.config.epsilon,
            seed=child_int(self.config.seed, "selection", t),
            fixed_names=self.config.fixed_primitives,
            executor=executor,
        )

    def source(self, selection: SelectionResult, t: int) -> SeriesSource:
        """Selected columns over [first, t] with nothing observed at t except controls."""
        return self.trace.source(selection.columns, self.qos_key, self.trace.first_interval, t, observed_until=t - 1)

    def _feedback(self, bucket: Bucket, source: SeriesSource, t: int) -> List[Tuple[BucketInput, float]]:
        samples = []
        for s in range(t - self.config.update_window + 1, t + 1):
            try:
                samples.append((bucket.inputs_at(source, s), self.trace.value(self.qos_key, s)))
            except InsufficientHistoryError:
                continue
        return samples

    def _timings(self, started: float, selected_at: float, trained_at: float) -> Dict[str, Optional[float]]:
        if not self.config.record_timing:
            return {}
        return {
            "wall_time": time.perf_counter() - started,
            "selection_time": selected_at - started,
            "training_time": trained_at - selected_at,
        }

    def step(self, t: int, prior: Optional[Bucket], executor: Optional[Executor] = None) -> schemas.IntervalRecord:
        started = time.perf_counter()
        actual = self.trace.value(self.qos_key, t)
        if t - self.trace.first_interval < self.config.warm_start:
            return schemas.IntervalRecord(interval=t, actual=actual)

        selection = self.select(t, executor)
        selected_at = time.perf_counter()
        source = self.source(selection, t)
        try:
            bucket = train_bucket(
                selection,
                source,
                self.learners,
                prior=prior,
                seed=child_int(self.config.seed, "bucket", t),
                train_fraction=self.config.train_fraction,
                alpha_init=self.config.alpha_init,
                beta_init=self.config.beta_init,
                executor=executor,
            )
        except InsufficientSamplesError as exc:
            logger.debug("interval=%d no prediction: %s", t, exc.detail)
            return schemas.IntervalRecord(
                interval=t, selected=[c.label for c in selection.columns], actual=actual
            )

        trained_at = time.perf_counter()
        prediction = predict_with_bucket(bucket, bucket.inputs_at(source, t))
        term_error = None
        if prediction.value + actual > 0:
            term_error = abs(prediction.value - actual) / (prediction.value + actual)
        self.bucket = update_weights(bucket, self._feedback(bucket, source, t))

        logger.debug(
            "interval=%d selected=%d chosen=%s prediction=%.6g actual=%.6g",
            t, len(selection.columns), prediction.algorithm.value, prediction.value, actual,
        )
        return schemas.IntervalRecord(
            interval=t,
            selected=[c.label for c in selection.columns],
            vectors=[
                schemas.VectorErrorRecord(algorithm=e.algorithm, e_local=e.e_local, e_global=e.e_global, e=e.e)
                for e in prediction.errors
            ],
            chosen=prediction.algorithm,
            prediction=prediction.value,
            actual=actual,
            term_error=term_error,
            alpha=bucket.alpha,
            beta=bucket.beta,
            **self._timings(started, selected_at, trained_at),
        )

    # --- Whole run ---

    def run(self, until: Optional[int] = None) -> schemas.RunReport:
        last = self.trace.last_interval if until is None else min(until, self.trace.last_interval)
        records: List[schemas.IntervalRecord] = []
        executor = ThreadPoolExecutor(self.config.max_workers) if self.config.max_workers > 1 else None
        try:
            for t in range(self.trace.first_interval, last + 1):
                records.append(self.step(t, self.bucket, executor))
        finally:
            if executor is not None:
                executor.shutdown()
        summary = summarize(
            records,
            service=self.config.service,
            qos=self.config.qos,
            selection=self.config.selection,
            learners=list(self.config.learners),
            seed=self.config.seed,
            eval_window=self.config.eval_window,
        )
        logger.info(
            "run service=%s qos=%s selection=%s smape=%s terms=%d",
            self.config.service, self.config.qos, self.config.selection.value,
            "n/a" if summary.smape is None else f"{summary.smape:.3f}", summary.n_terms,
        )
        return schemas.RunReport(records=records, summary=summary)

    def final_models(self) -> List[TrainedModel]:
        return [] if self.bucket is None else [v.main for v in self.bucket.vectors]


def plain_forecast(topology: Topology, trace: TraceTable, config: RunConfig, t: int) -> float:
    """
    Prediction of the first configured learner alone, trained on all of
    the history available at t. A one-learner bucket must reproduce it.
    """
    modeler = OnlineModeler(topology, trace, config)
    selection = modeler.select(t)
    source = modeler.source(selection, t)
    learner = modeler.learners[0]
    main_seed, _ = vector_seeds(child_int(config.seed, "bucket", t), learner.algorithm)
    model = fit_model(learner, source, main_seed)
    return model.predict(feature_row(source, model.layout, t))
