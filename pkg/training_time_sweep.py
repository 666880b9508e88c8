import hydra

import numpy as np

from pathlib import Path

import matplotlib.pyplot as plt

from omegaconf import OmegaConf

from src.bussim import ScenarioConfig, generate_benign
from src.codec import write_log
from src.experiments import training_time_sweep, write_curve
from src.markov import TrainingParams
from src.monitors import SweepMonitor
from src.topologies import aperiodic_from_dict, get_topology, with_aperiodic
from src.utils import configure_logging

@hydra.main(config_path="config", config_name="sweep-t1", version_base=None)
def main(cfg):

    configure_logging()

    SAVE_DIR = f"{hydra.utils.get_original_cwd()}/results/sweep/{cfg.sweep.TOPOLOGY}/segment={cfg.sweep.SEGMENT_MS}/jitter={cfg.sweep.JITTER_US}/seed={cfg.sweep.SEED}/"
    SAVE_DIR = Path(SAVE_DIR)
    SAVE_DIR.mkdir(parents=True, exist_ok=True)

    print("results will be saved in:", SAVE_DIR.resolve())

    aperiodic = [aperiodic_from_dict(a) for a in OmegaConf.to_container(cfg.sweep.APERIODIC, resolve=True)] if cfg.sweep.APERIODIC else []
    topology = with_aperiodic(get_topology(cfg.sweep.TOPOLOGY), aperiodic)

    config = ScenarioConfig(topology, jitter_us=cfg.sweep.JITTER_US, seed=cfg.sweep.SEED)
    records = generate_benign(config, int(cfg.sweep.DURATION_MS * 1000))

    write_log(records, SAVE_DIR / "benign.jsonl")

    params = TrainingParams(cfg.training.TOLERANCE_US, cfg.training.RARE_COUNT, cfg.training.MAX_CYCLES)
    max_train_us = None if cfg.sweep.MAX_TRAIN_MS is None else int(cfg.sweep.MAX_TRAIN_MS * 1000)

    monitor = SweepMonitor(str(SAVE_DIR))

    curve = training_time_sweep(
        records,
        int(cfg.sweep.SEGMENT_MS * 1000),
        params,
        max_train_duration_us=max_train_us,
        workers=cfg.sweep.WORKERS,
        monitor=monitor,
    )

    monitor.close(str(SAVE_DIR / "monitor_scalars.json"))
    write_curve(curve, SAVE_DIR / "curve.csv")

    first_zero = curve.first_zero_us()
    print(f"{len(records)} benign records, false alarm rate first reaches 0 after",
          "never" if first_zero is None else f"{first_zero / 1e6:g} s of training")

    # ---------------------------------------------------------------------- PLOT CURVE

    points = np.array(curve.points, dtype=float).reshape(-1, 2)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(points[:, 0] / 1e6, points[:, 1], marker="o", markersize=3)
    ax.set_xlabel("training time period (s)")
    ax.set_ylabel("false alarm rate")
    ax.set_ylim(bottom=0)
    ax.grid(alpha=.3)

    fig.tight_layout()
    fig.savefig(SAVE_DIR / "false_alarm_rate.pdf")
    plt.close(fig)

if __name__ == "__main__":
    main()
