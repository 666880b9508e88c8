"""
milbus: simulate 1553 traffic, train the dual Markov IDS, detect and evaluate.

    milbus sim --topology t2 --duration-ms 24280 --attack spoof2 --attack-window 6000:21220 --out spoof2.jsonl
    milbus train --input spoof2.jsonl --train-ms 4000 --out-model model.json --out-test test.jsonl
    milbus detect --model model.json --input test.jsonl --out pred.jsonl
    milbus eval --pred pred.jsonl --truth test.jsonl --assert-perfect
"""
import argparse
import logging
import sys

from src.bussim import Attack, ScenarioConfig, ScenarioError, simulate
from src.codec import record_to_line, read_log, write_log
from src.cycles import DEFAULT_MAX_CYCLES, DEFAULT_RARE_COUNT, DEFAULT_TOLERANCE_US
from src.detection import detect_log
from src.experiments import split_log, training_time_sweep, write_curve
from src.markov import TrainingParams, load_model, save_model, train
from src.metrics import evaluate, format_report, is_perfect
from src.topologies import TOPOLOGIES, get_topology
from src.utils import configure_logging, parse_window

logger = logging.getLogger(__name__)

EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_NOT_PERFECT = 3

# attacks each built-in topology was laid out for
TOPOLOGY_ATTACKS = {
    "t1": {Attack.NONE, Attack.SPOOF1},
    "t2": {Attack.NONE, Attack.SPOOF2, Attack.DOS},
}

def _emit(records, out):

    if out is None:
        for r in records:
            sys.stdout.write(record_to_line(r) + "\n")
    else:
        write_log(records, out)

def _ms(value):
    return int(round(float(value) * 1000))

def _params(args):
    return TrainingParams(args.tolerance_us, args.rare_threshold, args.max_cycles)

# ----------------------------------------------------------------------- SUBCOMMANDS

def cmd_sim(args, parser):

    attack = Attack(args.attack)

    if args.topology in TOPOLOGY_ATTACKS and attack not in TOPOLOGY_ATTACKS[args.topology]:
        parser.error(f"--attack {attack.value} does not apply to topology {args.topology}")

    if attack is not Attack.NONE and args.attack_window is None:
        parser.error(f"--attack {attack.value} needs --attack-window start_ms:end_ms")

    if args.duration_ms <= 0:
        raise ScenarioError("--duration-ms must be positive")

    start_us, end_us = parse_window(args.attack_window) if args.attack_window else (0, 0)

    config = ScenarioConfig(
        topology=get_topology(args.topology),
        attack=attack,
        attack_start_us=start_us,
        attack_end_us=end_us,
        jitter_us=args.jitter_us,
        seed=args.seed,
        rate=args.rate,
    )

    _emit(simulate(config, _ms(args.duration_ms)), args.out)

    return 0

def cmd_train(args, parser):

    if args.train_ms <= 0:
        parser.error("--train-ms must be positive")

    training, test = split_log(read_log(args.input), _ms(args.train_ms))

    model_pair = train(training, _params(args))
    save_model(model_pair, args.out_model)

    if args.out_test is not None:
        write_log(test, args.out_test)

    print(f"trained on {len(training)} records: {len(model_pair.periodic.states)} periodic states, "
          f"{len(model_pair.aperiodic.states)} aperiodic states; {len(test)} records left for testing")

    return 0

def cmd_detect(args, parser):

    model_pair = load_model(args.model)

    _emit(detect_log(read_log(args.input), model_pair), args.out)

    return 0

def cmd_eval(args, parser):

    anomaly, benign = evaluate(read_log(args.pred), read_log(args.truth))

    print(format_report(anomaly, benign, title=f"{args.pred} vs {args.truth}"))

    if args.assert_perfect and not is_perfect(anomaly, benign):
        logger.error("precision and recall are not all 1.0")
        return EXIT_NOT_PERFECT

    return 0

def cmd_sweep(args, parser):

    curve = training_time_sweep(
        read_log(args.input),
        _ms(args.segment_ms),
        _params(args),
        max_train_duration_us=None if args.max_train_ms is None else _ms(args.max_train_ms),
        workers=args.workers,
    )

    if args.out_curve is not None:
        write_curve(curve, args.out_curve)

    print("# every test record counted, first occurrences included")
    print("training_ms,false_alarm_rate")
    for d, rate in curve.points:
        print(f"{d / 1000:g},{rate:.6f}")

    return 0

# ----------------------------------------------------------------------- PARSER

def _add_training_flags(p):

    p.add_argument("--rare-threshold", type=int, default=DEFAULT_RARE_COUNT, help="ids seen fewer times are aperiodic")
    p.add_argument("--tolerance-us", type=int, default=DEFAULT_TOLERANCE_US, help="time cycle clustering tolerance")
    p.add_argument("--max-cycles", type=int, default=DEFAULT_MAX_CYCLES, help="ids with more cycles are aperiodic")

def build_parser():

    parser = argparse.ArgumentParser(prog="milbus", description="MIL-STD-1553 traffic simulation and anomaly detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="generate a labeled bus log")
    p.add_argument("--topology", required=True, help=f"built-in ({', '.join(TOPOLOGIES)}) or YAML topology file")
    p.add_argument("--duration-ms", required=True, type=float)
    p.add_argument("--attack", choices=[a.value for a in Attack], default=Attack.NONE.value)
    p.add_argument("--attack-window", metavar="START_MS:END_MS")
    p.add_argument("--jitter-us", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate", type=int, default=1, help="spoofed records per anchor message, or flood commands per major frame")
    p.add_argument("--out", help="log file, standard output if omitted")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("train", help="train a model on the beginning of a log")
    p.add_argument("--input", required=True)
    p.add_argument("--train-ms", required=True, type=float)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-test", help="write the remaining records for detect/eval")
    _add_training_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="label a log with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="labeled log, standard output if omitted")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="per-class precision and recall")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--assert-perfect", action="store_true", help=f"exit {EXIT_NOT_PERFECT} unless every metric is 1.0")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="false alarm rate versus training time")
    p.add_argument("--input", required=True)
    p.add_argument("--segment-ms", required=True, type=float)
    p.add_argument("--out-curve")
    p.add_argument("--max-train-ms", type=float)
    p.add_argument("--workers", type=int, default=1)
    _add_training_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser

def main(argv=None):

    configure_logging()

    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        return args.func(args, parser)

    except (ValueError, OSError) as e:
        print(f"milbus {args.command}: {e}", file=sys.stderr)
        return EXIT_ERROR

if __name__ == "__main__":
    sys.exit(main())
