import hydra

from pathlib import Path

from src.bussim import ScenarioConfig
from src.codec import write_log
from src.experiments import run_scenario
from src.markov import TrainingParams, save_model
from src.metrics import format_report, is_perfect
from src.topologies import get_topology
from src.utils import configure_logging

@hydra.main(config_path="config", config_name="spoof1", version_base=None)
def main(cfg):

    configure_logging()

    SAVE_DIR = f"{hydra.utils.get_original_cwd()}/results/testbed/{cfg.scenario.ATTACK}/jitter={cfg.scenario.JITTER_US}/rate={cfg.scenario.RATE}/seed={cfg.scenario.SEED}/"
    SAVE_DIR = Path(SAVE_DIR)
    SAVE_DIR.mkdir(parents=True, exist_ok=True)

    print("results will be saved in:", SAVE_DIR.resolve())

    topology = cfg.scenario.TOPOLOGY
    if topology.endswith((".yaml", ".yml")):
        topology = f"{hydra.utils.get_original_cwd()}/{topology}"

    start_ms, end_ms = cfg.scenario.WINDOW_MS

    config = ScenarioConfig(
        topology=get_topology(topology),
        attack=cfg.scenario.ATTACK,
        attack_start_us=int(start_ms * 1000),
        attack_end_us=int(end_ms * 1000),
        jitter_us=cfg.scenario.JITTER_US,
        seed=cfg.scenario.SEED,
        rate=cfg.scenario.RATE,
    )
    params = TrainingParams(cfg.training.TOLERANCE_US, cfg.training.RARE_COUNT, cfg.training.MAX_CYCLES)

    result = run_scenario(config, int(cfg.scenario.DURATION_MS * 1000), int(cfg.training.TRAIN_MS * 1000), params)

    # ---------------------------------------------------------------------- SAVE RESULTS

    save_model(result.model_pair, SAVE_DIR / "model.json")
    write_log(result.test, SAVE_DIR / "test.jsonl")
    write_log(result.predicted, SAVE_DIR / "pred.jsonl")

    stats = (
        f"{config.attack.value} on {config.topology.name}: "
        f"{len(result.training)} training records ({cfg.training.TRAIN_MS / 1000:g} s), "
        f"{len(result.test)} test records, {100 * result.anomaly_share:.1f}% anomalous"
    )
    report = format_report(result.anomaly, result.benign, title=stats)

    print(report)
    print("all metrics 1.0:", is_perfect(result.anomaly, result.benign))

    with open(SAVE_DIR / "report.txt", "w") as f:
        f.write(report + "\n")

if __name__ == "__main__":
    main()
