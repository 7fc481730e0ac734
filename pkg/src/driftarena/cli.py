"""Command-line entry points for running games, ablations, and reports."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import agents, arena, envs, nids, traffic
from .errors import ConfigError


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="flat key=value config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--batches", type=int, default=None)
    parser.add_argument("--data", type=str, default=None,
                        help="'synthetic' or 'pcap:<path>'")
    parser.add_argument("--sidecar", type=str, default=None,
                        help="label sidecar for pcap input")
    parser.add_argument("--out", type=str, default="report")
    parser.add_argument("--mask", type=str, default=None, choices=["none", "model", "data"])
    parser.add_argument("--set", dest="sets", action="append", default=[],
                        metavar="KEY=VALUE", help="extra dotted config override")


def _build_config(args) -> arena.GameConfig:
    overrides: dict[str, str] = {}
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.batches is not None:
        overrides["n_batches"] = str(args.batches)
    if args.data is not None:
        if args.data == "synthetic":
            overrides["data.source"] = "synthetic"
        elif args.data.startswith("pcap:"):
            overrides["data.source"] = "pcap"
            overrides["data.pcap_path"] = args.data[len("pcap:"):]
        else:
            raise ConfigError(f"bad --data value {args.data!r}")
    if args.sidecar is not None:
        overrides["data.sidecar_path"] = args.sidecar
    if args.mask is not None:
        overrides["blue_env.ablation_mask"] = args.mask
    for item in args.sets:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    return arena.load_config(args.config, overrides)


def _cmd_run(args) -> int:
    config = _build_config(args)
    report = arena.run_game(config, args.out)
    rec = report.recovery_table()
    drops = [r["drop"] for r in rec]
    recovers = [r["recovery"] for r in rec]
    print(f"initial accuracy: {report.initial_accuracy:.4f}")
    print(f"final accuracy:   {report.final_accuracy:.4f}")
    if drops:
        print(f"mean drop:        {np.mean(drops):.4f}")
        print(f"mean recovery:    {np.mean(recovers):.4f}")
    print(f"report written to {args.out}")
    return 0


def _cmd_ablate(args) -> int:
    config = _build_config(args)
    result = arena.run_ablation(config, args.out)
    print(f"{'algo':<6} {'variant':<8} final_accuracy")
    for algo, mask, acc in result.rows:
        print(f"{algo:<6} {mask:<8} {acc:.4f}")
    print(f"ablation table written to {Path(args.out) / 'ablation.csv'}")
    return 0


def _cmd_train_red(args) -> int:
    config = _build_config(args)
    ss = np.random.SeedSequence(config.seed)
    spawned = ss.spawn(8)
    data_seed, model_seed = (int(s.generate_state(1)[0]) for s in spawned[:2])
    data = arena._prepare_data(config, data_seed)
    model = nids.fit_initial(data.train, model_seed, config.nids)
    pool = [p for p in data.train_raw if p.label == traffic.MALICIOUS]
    env = envs.RedEvasionEnv(model, pool, config.red_env, config.perturb,
                             rng=np.random.default_rng(spawned[4]))
    agent, log = agents.train_loop(env, config.red_algo, config.red_spec,
                                   args.episodes, config.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    agents.save_policy(agent, out / "red_policy.npz")
    log.to_csv(out / "red_episodes.csv")
    tail = log.rewards()[-20:]
    print(f"trained {args.episodes} episodes; last-20 mean reward {tail.mean():.3f}")
    print(f"checkpoint and log written to {out}")
    return 0


def _cmd_train_blue(args) -> int:
    config = _build_config(args)
    red_agent, blue_agent = arena.build_agents(config)
    report = arena.play_game(config, red_agent, blue_agent, args.out)
    out = Path(args.out)
    agents.save_policy(blue_agent, out / "blue_policy.npz")
    agents.save_policy(red_agent, out / "red_policy.npz")
    print(f"final accuracy after adaptation: {report.final_accuracy:.4f}")
    print(f"checkpoints and report written to {out}")
    return 0


def _cmd_report(args) -> int:
    written = arena.emit_charts(args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_synth(args) -> int:
    config = _build_config(args)
    packets = traffic.synth_generate(config.data.profile, args.n, config.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pcap_path = out / "synthetic.pcap"
    sidecar_path = out / "synthetic.labels"
    traffic.write_pcap(pcap_path, packets)
    traffic.write_label_sidecar(sidecar_path, packets)
    n_mal = sum(p.label for p in packets)
    print(f"wrote {len(packets)} packets ({n_mal} malicious) to {pcap_path}")
    print(f"labels in {sidecar_path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="driftarena",
                                     description="adversarial drift game simulator")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="play the full alternating game")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_abl = sub.add_parser("ablate", help="state-representation ablation games")
    _add_common(p_abl)
    p_abl.set_defaults(func=_cmd_ablate)

    p_red = sub.add_parser("train-red", help="train the red agent against a fixed classifier")
    _add_common(p_red)
    p_red.add_argument("--episodes", type=int, default=500)
    p_red.set_defaults(func=_cmd_train_red)

    p_blue = sub.add_parser("train-blue", help="train the blue agent through a full game")
    _add_common(p_blue)
    p_blue.set_defaults(func=_cmd_train_blue)

    p_rep = sub.add_parser("report", help="re-render charts from report CSVs")
    p_rep.add_argument("--out", type=str, default="report")
    p_rep.set_defaults(func=_cmd_report)

    p_syn = sub.add_parser("synth", help="emit synthetic traffic as pcap + label sidecar")
    _add_common(p_syn)
    p_syn.add_argument("--n", type=int, default=1000)
    p_syn.set_defaults(func=_cmd_synth)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
