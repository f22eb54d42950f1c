from __future__ import annotations

from dataclasses import replace

from tcdiverse.DiversityTrainer import DiversityTrainer, TrainParams
from tcdiverse.DiversityTrainer import checkpoint_select as checkpoint_select
from tcdiverse.Result import TrainResult
from tcdiverse.data.ColoredDataset import ColoredDataset
from tcdiverse.nets.ModelCollection import ModelCollection
from tcdiverse.nets.NetParams import NetParams


def train_collection(
    train: ColoredDataset,
    adapt_val: ColoredDataset,
    params: TrainParams = TrainParams(),
    net: NetParams = NetParams(),
    adapt_train: ColoredDataset | None = None,
    collection: ModelCollection | None = None,
    collect_stats: bool = True,
    display: bool = False,
    config_hash: str = "",
) -> TrainResult:
    """
    Trains a collection of models on the given training set, alternating
    critic and model steps, and selects the epoch with the highest
    validation accuracy.

    Parameters
    ----------
    train
        Training set.
    adapt_val
        Validation set drawn from the shifted distribution.
    params
        Training parameters. If not provided, a default will be used.
    net
        Architecture of the models and the critic.
    adapt_train
        Optional set the validation protocols are fit on.
    collection
        Optional initial collection. Initialised from ``params.seed`` when not
        given.
    collect_stats
        Whether to collect per-epoch statistics. Default ``True``.
    display
        Whether to display training progress. Default ``False``.
    config_hash
        Configuration hash to store in the checkpoints.

    Returns
    -------
    TrainResult
        A TrainResult object, containing the selected checkpoint, the final
        training state, and statistics (if collected).
    """
    trainer = DiversityTrainer(params, net, config_hash=config_hash)
    return trainer.run(
        train,
        adapt_val,
        adapt_train=adapt_train,
        collection=collection,
        collect_stats=collect_stats,
        display=display,
    )


def train_erm_baseline(
    train: ColoredDataset,
    adapt_val: ColoredDataset,
    params: TrainParams = TrainParams(),
    net: NetParams = NetParams(),
    adapt_train: ColoredDataset | None = None,
    collection: ModelCollection | None = None,
    collect_stats: bool = True,
    display: bool = False,
    config_hash: str = "",
) -> TrainResult:
    """
    Trains a single model by empirical risk minimisation. This is
    :func:`train_collection` with ``num_models = 1`` and ``beta = 0``; all
    other parameters are taken from ``params``.
    """
    erm_params = replace(params, num_models=1, beta=0.0)
    return train_collection(
        train,
        adapt_val,
        erm_params,
        net,
        adapt_train=adapt_train,
        collection=collection,
        collect_stats=collect_stats,
        display=display,
        config_hash=config_hash,
    )
