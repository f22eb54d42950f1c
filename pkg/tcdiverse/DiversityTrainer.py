from __future__ import annotations

import math
import time
import warnings
from collections.abc import Sequence
from dataclasses import dataclass
from functools import reduce

import numpy as np

from tcdiverse.ProgressPrinter import ProgressPrinter
from tcdiverse.Result import TrainResult
from tcdiverse.Statistics import EpochRecord, Statistics
from tcdiverse.constants import (
    L2_GRID,
    STREAM_PERMUTATIONS,
    STREAM_SHUFFLE,
)
from tcdiverse.data.ColoredDataset import ColoredDataset
from tcdiverse.diffengine import Node, Tape, ops
from tcdiverse.eval.FrozenOutputs import compute_frozen_outputs
from tcdiverse.eval.protocols import (
    FrozenSplits,
    ProtocolResult,
    run_protocols,
)
from tcdiverse.exceptions import DegenerateBatchWarning, NonFiniteLossError
from tcdiverse.nets.Critic import Critic
from tcdiverse.nets.LinearClassifier import LinearClassifier
from tcdiverse.nets.ModelCollection import (
    Member,
    ModelCollection,
    init_collection,
    init_critic,
)
from tcdiverse.nets.NetParams import NetParams
from tcdiverse.nets.RepresentationModel import RepresentationModel
from tcdiverse.nets.RmsProp import RmsProp, RmsPropParams
from tcdiverse.nets.checkpoint import Checkpoint
from tcdiverse.tcest.estimators import (
    DEGENERATE_BATCH_MSG,
    EstimatorBatch,
    critic_loss_for_max,
    grouped_tc_nce,
    label_groups,
)

_Leaves = list[dict[str, Node]]


def checkpoint_select(
    records: Sequence[EpochRecord], checkpoints: Sequence[Checkpoint]
) -> Checkpoint:
    """
    Selects the checkpoint of the epoch with the highest Linear protocol
    validation accuracy. Ties are broken in favour of the earliest epoch;
    NaN accuracies are never selected unless all accuracies are NaN.

    Raises
    ------
    ValueError
        When no epoch was recorded, or the arguments differ in length.
    """
    if not records:
        raise ValueError("Expected at least one epoch record.")

    if len(records) != len(checkpoints):
        raise ValueError("Expected a checkpoint for every epoch record.")

    accs = np.array([record.val_linear for record in records])

    if np.all(np.isnan(accs)):
        return checkpoints[0]

    return checkpoints[int(np.nanargmax(accs))]


@dataclass
class TrainParams:
    """
    Parameters for training a collection.

    Parameters
    ----------
    num_models
        Number of members in the collection. Default 2.
    beta
        Weight of the total correlation estimate in the model objective.
        Default 10. With ``beta = 0`` the members are trained independently.
    batch_size
        Number of examples in a minibatch. Default 256.
    num_samples
        Number of permuted tuples in the estimator's denominator. Default 64.
    epochs
        Number of passes over the training set. Default 250.
    critic_steps
        Number of critic steps before every model step. Default 1.
    lr
        RMSProp learning rate of both the models and the critic. Default
        1e-5.
    conditional
        Whether to estimate the total correlation conditionally on the label.
        Default ``True``.
    seed
        Seed for initialisation, shuffling, and permutation plans.

    Raises
    ------
    ValueError
        When any of the above arguments is out of range.
    """

    num_models: int = 2
    beta: float = 10.0
    batch_size: int = 256
    num_samples: int = 64
    epochs: int = 250
    critic_steps: int = 1
    lr: float = 1e-5
    conditional: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.num_models < 1:
            raise ValueError("Expected num_models >= 1.")

        if self.beta < 0:
            raise ValueError("Negative beta not understood.")

        if self.batch_size < 2:
            raise ValueError("Expected batch_size >= 2.")

        if self.num_samples < 1:
            raise ValueError("Expected num_samples >= 1.")

        if self.epochs < 0:
            raise ValueError("Negative number of epochs not understood.")

        if self.critic_steps < 1:
            raise ValueError("Expected critic_steps >= 1.")

        if self.lr <= 0:
            raise ValueError("Expected lr > 0.")

    @property
    def uses_critic(self) -> bool:
        """
        Whether the objective has a total correlation term. This requires a
        positive weight and at least two members.
        """
        return self.beta > 0 and self.num_models > 1

    def rms_params(self) -> RmsPropParams:
        return RmsPropParams(lr=self.lr)


@dataclass
class TrainState:
    """
    Mutable state of a training run. Parameters are replaced, never updated
    in place, so snapshots of the collection and critic remain valid.

    Attributes
    ----------
    collection
        The current collection.
    critic
        The current critic, or ``None`` when the objective has no total
        correlation term.
    rep_optims
        Optimiser state of each member's representation model.
    clf_optims
        Optimiser state of each member's classifier.
    critic_optim
        Optimiser state of the critic, if there is one.
    plan_rng
        Random stream for the estimator's permutation plans.
    epoch
        Number of completed epochs.
    best
        The selected checkpoint so far.
    """

    collection: ModelCollection
    critic: Critic | None
    rep_optims: list[RmsProp]
    clf_optims: list[RmsProp]
    critic_optim: RmsProp | None
    plan_rng: np.random.Generator
    epoch: int = 0
    best: Checkpoint | None = None


@dataclass
class StepMetrics:
    """
    Metrics of a single model step, measured before the update.
    """

    losses: list[float]
    accuracies: list[float]
    tc_estimate: float
    objective: float


class DiversityTrainer:
    """
    Performs the alternating updates of a collection and its critic. The
    critic ascends the total correlation estimate of the members'
    representations; the members descend the sum of their cross-entropies
    plus ``beta`` times that estimate.

    Parameters
    ----------
    params
        Training parameters.
    net
        Architecture of the members and the critic.
    grid
        Regularisation strengths tried by the validation protocols.
    config_hash
        Configuration hash stored in the checkpoints.
    """

    def __init__(
        self,
        params: TrainParams,
        net: NetParams = NetParams(),
        grid: Sequence[float] = L2_GRID,
        config_hash: str = "",
    ):
        self._params = params
        self._net = net
        self._grid = tuple(grid)
        self._config_hash = config_hash

    @property
    def params(self) -> TrainParams:
        return self._params

    def init_state(
        self, input_dim: int, collection: ModelCollection | None = None
    ) -> TrainState:
        """
        Creates the initial training state. A freshly initialised collection
        is used unless one is given.
        """
        params = self._params

        if collection is None:
            collection = init_collection(
                params.num_models, input_dim, params.seed, self._net
            )
        elif collection.num_models != params.num_models:
            raise ValueError("Collection size does not match num_models.")
        elif collection.input_dim != input_dim:
            raise ValueError("Collection does not match the input dimension.")

        rms = params.rms_params()
        critic = critic_optim = None

        if params.uses_critic:
            critic = init_critic(params.num_models, params.seed, self._net)
            critic_optim = RmsProp(critic.params, rms)

        return TrainState(
            collection=collection,
            critic=critic,
            rep_optims=[
                RmsProp(member.representation.params, rms)
                for member in collection
            ],
            clf_optims=[
                RmsProp(member.classifier.params, rms) for member in collection
            ],
            critic_optim=critic_optim,
            plan_rng=np.random.default_rng(
                [params.seed, STREAM_PERMUTATIONS]
            ),
        )

    def critic_step(
        self, state: TrainState, inputs: np.ndarray, labels: np.ndarray
    ) -> Critic:
        """
        Performs one RMSProp step on the critic parameters, towards a larger
        total correlation estimate on the given batch. The collection is not
        touched. Batches without a label group of two members are skipped
        with a :class:`~tcdiverse.exceptions.DegenerateBatchWarning`.

        Returns
        -------
        Critic
            The updated critic, which is also stored in ``state``.
        """
        if state.critic is None or state.critic_optim is None:
            raise ValueError("This training run does not use a critic.")

        params = self._params
        if not label_groups(labels, len(labels), params.conditional):
            msg = f"Skipping critic step: {DEGENERATE_BATCH_MSG}"
            warnings.warn(msg, DegenerateBatchWarning, stacklevel=2)
            return state.critic

        reps = [member.representation(inputs) for member in state.collection]
        loss, leaves = critic_loss_for_max(
            state.critic,
            EstimatorBatch(reps, labels),
            state.plan_rng,
            params.num_samples,
            params.conditional,
        )

        grads = loss.tape.backward(loss).named(leaves)
        new_params = state.critic_optim.step(state.critic.params, grads)
        state.critic = state.critic.with_params(new_params)
        return state.critic

    def _objective(
        self,
        state: TrainState,
        inputs: np.ndarray,
        labels: np.ndarray,
        rng: np.random.Generator,
        trainable: bool,
    ) -> tuple[Node, _Leaves, _Leaves, StepMetrics]:
        params = self._params
        tape = Tape()
        x = tape.constant(inputs)

        rep_leaves = []
        clf_leaves = []
        reps = []
        losses = []
        accs = []

        for member in state.collection:
            rep_w = member.representation.params.attach(tape, trainable)
            clf_w = member.classifier.params.attach(tape, trainable)

            rep = member.representation.forward(rep_w, x)
            logits = member.classifier.forward(clf_w, rep)

            rep_leaves.append(rep_w)
            clf_leaves.append(clf_w)
            reps.append(rep)
            losses.append(ops.cross_entropy(logits, labels))

            preds = np.argmax(logits.value, axis=1)
            accs.append(float(np.mean(preds == labels)))

        total = reduce(ops.add, losses)
        tc_estimate = math.nan

        if state.critic is not None:
            # The critic parameters are constants here, so they receive no
            # gradient from the model objective.
            critic_w = state.critic.params.attach(tape, trainable=False)
            estimate = grouped_tc_nce(
                state.critic,
                critic_w,
                reps,
                labels,
                rng,
                params.num_samples,
                params.conditional,
            )

            if estimate is None:
                msg = f"Model step without TC term: {DEGENERATE_BATCH_MSG}"
                warnings.warn(msg, DegenerateBatchWarning, stacklevel=3)
            else:
                tc_estimate = estimate.item()
                total = ops.add(total, ops.scale(estimate, params.beta))

        metrics = StepMetrics(
            losses=[loss.item() for loss in losses],
            accuracies=accs,
            tc_estimate=tc_estimate,
            objective=total.item(),
        )

        return total, rep_leaves, clf_leaves, metrics

    def objective(
        self,
        state: TrainState,
        inputs: np.ndarray,
        labels: np.ndarray,
        rng: np.random.Generator,
    ) -> float:
        """
        Evaluates the model objective on the given batch, drawing permutation
        plans from ``rng``. Nothing is updated.
        """
        return self._objective(state, inputs, labels, rng, False)[-1].objective

    def model_step(
        self, state: TrainState, inputs: np.ndarray, labels: np.ndarray
    ) -> StepMetrics:
        """
        Performs one RMSProp step on the parameters of every member, towards a
        smaller sum of cross-entropies plus ``beta`` times the total
        correlation estimate. Gradients flow through the representations
        into the members; the critic is not touched. On batches without a
        label group of two members, only the cross-entropies are used.

        Returns
        -------
        StepMetrics
            Metrics of the batch before the update.
        """
        total, rep_leaves, clf_leaves, metrics = self._objective(
            state, inputs, labels, state.plan_rng, True
        )

        if not math.isfinite(metrics.objective):
            return metrics

        grads = total.tape.backward(total)
        members = []

        for idx, member in enumerate(state.collection):
            rep_params = state.rep_optims[idx].step(
                member.representation.params, grads.named(rep_leaves[idx])
            )
            clf_params = state.clf_optims[idx].step(
                member.classifier.params, grads.named(clf_leaves[idx])
            )

            members.append(
                Member(
                    RepresentationModel(rep_params),
                    LinearClassifier(clf_params),
                )
            )

        state.collection = ModelCollection(members)
        return metrics

    def validate(
        self,
        collection: ModelCollection,
        adapt_val: ColoredDataset,
        adapt_train: ColoredDataset | None = None,
    ) -> dict[str, ProtocolResult]:
        """
        Computes the validation accuracy of every adaptation protocol. The
        protocols are fit on ``adapt_train`` when it is given, and on
        ``adapt_val`` otherwise.
        """
        val = compute_frozen_outputs(collection, adapt_val)
        train = val

        if adapt_train is not None:
            train = compute_frozen_outputs(collection, adapt_train)

        return run_protocols(FrozenSplits(train, val), self._grid)

    def _batches(self, num_examples: int, rng: np.random.Generator):
        perm = rng.permutation(num_examples)
        size = self._params.batch_size

        for start in range(0, num_examples - size + 1, size):
            yield perm[start : start + size]

    def run(
        self,
        train: ColoredDataset,
        adapt_val: ColoredDataset,
        adapt_train: ColoredDataset | None = None,
        collection: ModelCollection | None = None,
        collect_stats: bool = True,
        display: bool = False,
        display_interval: int = 1,
    ) -> TrainResult:
        """
        Trains the collection for the configured number of epochs.

        Every epoch shuffles the training set and walks over its full
        minibatches. When the objective has a total correlation term, each
        model step is preceded by ``critic_steps`` critic steps, each on a
        fresh minibatch. After every epoch the collection is validated, and
        the checkpoint with the highest Linear protocol validation accuracy
        is kept.

        Parameters
        ----------
        train
            Training set.
        adapt_val
            Validation set, drawn from the shifted distribution.
        adapt_train
            Optional set the validation protocols are fit on. When not given,
            they are fit on ``adapt_val``.
        collection
            Optional initial collection. A fresh one is initialised from the
            seed when not given.
        collect_stats
            Whether to collect per-epoch statistics. Default ``True``.
        display
            Whether to display training progress. Default ``False``.
        display_interval
            Number of epochs between progress logs. Default 1.

        Returns
        -------
        TrainResult
            The selected checkpoint, final state, and statistics.

        Raises
        ------
        ValueError
            When the training set has fewer examples than a minibatch, or the
            validation set is empty.
        NonFiniteLossError
            When a model step produces a non-finite objective value.
        """
        params = self._params

        if len(train) < params.batch_size:
            msg = f"Training set of {len(train)} examples is smaller than"
            raise ValueError(f"{msg} a batch of {params.batch_size}.")

        if len(adapt_val) == 0:
            raise ValueError("Validation set is empty.")

        print_progress = ProgressPrinter(display, display_interval)
        print_progress.start(train, params)

        start = time.perf_counter()
        stats = Statistics(collect_stats=collect_stats)
        state = self.init_state(train.input_dim, collection)
        shuffle_rng = np.random.default_rng([params.seed, STREAM_SHUFFLE])

        val = self.validate(state.collection, adapt_val, adapt_train)
        state.best = self._checkpoint(state, val["linear"].val_accuracy)
        best_record = None

        for epoch in range(1, params.epochs + 1):
            metrics = self._run_epoch(state, train, shuffle_rng, epoch)
            state.epoch = epoch

            val = self.validate(state.collection, adapt_val, adapt_train)
            record = _epoch_record(epoch, params.num_models, metrics, val)

            stats.collect(record)
            print_progress.epoch(stats)

            ckpt = self._checkpoint(state, record.val_linear)

            if best_record is None:
                state.best, best_record = ckpt, record
            else:
                records = [best_record, record]
                state.best = checkpoint_select(records, [state.best, ckpt])

                if state.best is ckpt:
                    best_record = record

        end = time.perf_counter() - start
        res = TrainResult(state.best, state, stats, params.epochs, end)

        print_progress.end(res)

        return res

    def _run_epoch(
        self,
        state: TrainState,
        train: ColoredDataset,
        rng: np.random.Generator,
        epoch: int,
    ) -> list[StepMetrics]:
        params = self._params
        cycle = params.critic_steps + 1
        metrics = []

        for step, batch in enumerate(self._batches(len(train), rng)):
            inputs = train.inputs[batch]
            labels = train.labels[batch]

            if state.critic is not None and step % cycle < cycle - 1:
                self.critic_step(state, inputs, labels)
                continue

            step_metrics = self.model_step(state, inputs, labels)

            if not math.isfinite(step_metrics.objective):
                record = {
                    "epoch": epoch,
                    "step": step,
                    "losses": step_metrics.losses,
                    "accuracies": step_metrics.accuracies,
                    "tc_estimate": step_metrics.tc_estimate,
                    "objective": step_metrics.objective,
                }

                raise NonFiniteLossError("Non-finite training loss", record)

            metrics.append(step_metrics)

        return metrics

    def _checkpoint(self, state: TrainState, val_accuracy: float):
        return Checkpoint(
            collection=state.collection,
            critic=state.critic,
            epoch=state.epoch,
            val_accuracy=val_accuracy,
            config_hash=self._config_hash,
        )


def _epoch_record(
    epoch: int,
    num_models: int,
    metrics: list[StepMetrics],
    val: dict[str, ProtocolResult],
) -> EpochRecord:
    if metrics:
        losses = np.mean([m.losses for m in metrics], axis=0).tolist()
        accs = np.mean([m.accuracies for m in metrics], axis=0).tolist()
    else:  # possible when an epoch holds only critic steps
        losses = [math.nan] * num_models
        accs = [math.nan] * num_models

    estimates = [m.tc_estimate for m in metrics]
    estimates = [value for value in estimates if not math.isnan(value)]
    tc_estimate = float(np.mean(estimates)) if estimates else math.nan

    return EpochRecord(
        epoch=epoch,
        losses=losses,
        accuracies=accs,
        tc_estimate=tc_estimate,
        val_best=val["best"].val_accuracy,
        val_ensemble=val["ensemble"].val_accuracy,
        val_linear=val["linear"].val_accuracy,
    )
