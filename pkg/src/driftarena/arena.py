"""Orchestration of the alternating red/blue game over sequential batches.

One round = one batch: the red agent perturbs the batch's malicious
packets against a frozen classifier snapshot (and, for evaluation, a
slice of the held-out malicious test packets, so measured accuracy tracks
the current attack distribution); the blue agent then receives the
perturbed samples together with the raw batch and takes adaptation
actions until accuracy clears the threshold or its per-batch action
budget runs out.  Both agents keep their learned parameters across
rounds.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import agents, charts, drift, envs, nids, perturb, traffic
from .errors import ConfigError


@dataclass(frozen=True)
class DataConfig:
    source: str = "synthetic"  # "synthetic" | "pcap"
    n_packets: int = 5000
    pcap_path: str = ""
    sidecar_path: str = ""
    train_frac: float = 0.2
    test_frac: float = 0.16
    profile: traffic.SynthProfile = traffic.SynthProfile()

    def __post_init__(self):
        if self.source not in ("synthetic", "pcap"):
            raise ConfigError(f"unknown data source {self.source!r}")
        if self.train_frac + self.test_frac >= 0.9:
            raise ConfigError("train+test fractions leave too little stream data")


def _default_red_spec() -> agents.PolicySpec:
    return agents.PolicySpec()


def _default_blue_spec() -> agents.PolicySpec:
    # few decisions per game: small minibatches, quick exploration decay,
    # and the fixed random projection of the 1,530-dim state
    return agents.PolicySpec(projection_dim=64, minibatch=16, warmup_transitions=16,
                             target_sync=25, eps_decay_steps=150, buffer_capacity=2000,
                             rollout_horizon=48, ppo_epochs=10)


@dataclass(frozen=True)
class GameConfig:
    seed: int = 0
    n_batches: int = 120
    data: DataConfig = DataConfig()
    red_env: envs.RedEnvConfig = envs.RedEnvConfig()
    perturb: perturb.PerturbConfig = perturb.DEFAULT_CONFIG
    blue_env: envs.BlueEnvConfig = envs.BlueEnvConfig()
    budget: drift.AdaptationBudget = drift.AdaptationBudget()
    nids: nids.NidsConfig = nids.DEFAULT_CONFIG
    red_algo: str = "dqn"
    blue_algo: str = "dqn"
    red_spec: agents.PolicySpec = field(default_factory=_default_red_spec)
    blue_spec: agents.PolicySpec = field(default_factory=_default_blue_spec)
    red_enabled: bool = True
    red_warmup_episodes: int = 300
    red_train_per_batch: int = 0  # 0 = every eligible malicious packet
    test_perturb_fraction: float = 1.0
    reservoir_cap: int = 2000
    emit_charts: bool = True

    def __post_init__(self):
        if self.n_batches < 2:
            raise ConfigError("n_batches must be at least 2")
        if self.red_algo not in ("dqn", "ppo") or self.blue_algo not in ("dqn", "ppo"):
            raise ConfigError("agent algorithms must be 'dqn' or 'ppo'")
        if not 0.0 <= self.test_perturb_fraction <= 1.0:
            raise ConfigError("test_perturb_fraction must lie in [0, 1]")


@dataclass
class RoundRecord:
    round: int
    phase: str  # "red" | "blue"
    accuracy_before: float
    accuracy_after: float
    actions: list[int]
    samples_used: int
    labels_queried: int
    rewards: list[float]
    evasion_rate: float
    model_version_before: int
    model_version_after: int


@dataclass
class RunReport:
    config_echo: str
    initial_accuracy: float
    rounds: list[RoundRecord]
    red_log: agents.EpisodeLog
    blue_log: agents.EpisodeLog
    final_accuracy: float

    def blue_rounds(self) -> list[RoundRecord]:
        return [r for r in self.rounds if r.phase == "blue"]

    def red_rounds(self) -> list[RoundRecord]:
        return [r for r in self.rounds if r.phase == "red"]

    def action_reward_table(self) -> list[tuple[int, str, float, int]]:
        """Per-adaptation-action mean blue reward, Table-1 style."""
        sums = {a: 0.0 for a in range(drift.N_ACTIONS)}
        counts = {a: 0 for a in range(drift.N_ACTIONS)}
        for rec in self.blue_rounds():
            for a, r in zip(rec.actions, rec.rewards):
                sums[a] += r
                counts[a] += 1
        out = []
        for a in range(drift.N_ACTIONS):
            mean = sums[a] / counts[a] if counts[a] else 0.0
            out.append((a, drift.ACTION_NAMES[a], mean, counts[a]))
        return out

    def action_frequency_thirds(self) -> np.ndarray:
        """(3, n_actions) counts of blue actions over training thirds."""
        blue = self.blue_rounds()
        out = np.zeros((3, drift.N_ACTIONS), dtype=np.int64)
        n = len(blue)
        for i, rec in enumerate(blue):
            third = min(2, 3 * i // max(1, n))
            for a in rec.actions:
                out[third, a] += 1
        return out

    def recovery_table(self) -> list[dict]:
        """Per round: accuracy drop from perturbation and blue recovery."""
        rows = []
        reds = {r.round: r for r in self.red_rounds()}
        for rec in self.blue_rounds():
            red = reds.get(rec.round)
            drop = (red.accuracy_before - red.accuracy_after) if red else 0.0
            rows.append({
                "round": rec.round,
                "drop": drop,
                "recovery": rec.accuracy_after - rec.accuracy_before,
                "evasion_rate": red.evasion_rate if red else 0.0,
                "n_actions": len(rec.actions),
            })
        return rows


# ---------------------------------------------------------------------------
# data preparation
# ---------------------------------------------------------------------------

def _load_packets(config: GameConfig, seed: int) -> list[traffic.RawPacket]:
    if config.data.source == "synthetic":
        return traffic.synth_generate(config.data.profile, config.data.n_packets, seed)
    labels = (traffic.load_label_sidecar(config.data.sidecar_path)
              if config.data.sidecar_path else None)
    return list(traffic.parse_pcap(config.data.pcap_path, labels))


@dataclass
class _GameData:
    train: list[traffic.FeatureVector]
    train_raw: list[traffic.RawPacket]
    test_X: np.ndarray
    test_y: np.ndarray
    test_raw: list[traffic.RawPacket]
    batches: list[traffic.Batch]


def _prepare_data(config: GameConfig, seed: int) -> _GameData:
    packets = _load_packets(config, seed)
    features = [traffic.preprocess(p) for p in packets]
    n = len(features)
    n_train = int(round(config.data.train_frac * n))
    n_test = int(round(config.data.test_frac * n))
    if n - n_train - n_test < config.n_batches:
        raise ConfigError("not enough stream packets for the requested batches")
    train = features[:n_train]
    test = features[n_train: n_train + n_test]
    test_raw = packets[n_train: n_train + n_test]
    test_X, test_y = traffic.stack_features(test)
    batches = traffic.batch_split(features[n_train + n_test:], config.n_batches,
                                  raw=packets[n_train + n_test:])
    return _GameData(train=train, train_raw=packets[:n_train], test_X=test_X,
                     test_y=test_y, test_raw=test_raw, batches=batches)


# ---------------------------------------------------------------------------
# red helpers
# ---------------------------------------------------------------------------

def _run_red_episode(env: envs.RedEvasionEnv, agent, pkt: traffic.RawPacket,
                     learn: bool) -> tuple[float, int, np.ndarray, bool, list[int]]:
    state = env.reset_to(pkt)
    total, done = 0.0, False
    actions: list[int] = []
    info: dict = {}
    while not done:
        a = agent.act(state, greedy=not learn)
        s2, r, done, info = env.step(a)
        if learn:
            agent.observe(state, a, r, s2, done)
        state = s2
        total += r
        actions.append(a)
    return total, info["steps"], state, info["evaded"], actions


def _greedy_perturb(agent, model: nids.ClassifierModel, raws: Sequence[traffic.RawPacket],
                    red_cfg: envs.RedEnvConfig, perturb_cfg: perturb.PerturbConfig) -> np.ndarray:
    """Perturb packets in lockstep with the agent's greedy policy.

    Mirrors individual evasion episodes (stop at evasion or max_steps) but
    batches the network forward passes across packets.
    """
    views = [perturb.PacketView.from_raw(p) for p in raws]
    feats = np.stack([perturb.to_features(v).values for v in views])
    probs = nids.predict_proba_batch(model, feats)
    active = probs[:, 1] >= probs[:, 0]
    for _ in range(red_cfg.max_steps):
        idxs = np.nonzero(active)[0]
        if len(idxs) == 0:
            break
        acts = agent.greedy_actions(feats[idxs])
        for i, a in zip(idxs, acts):
            views[i], effective = perturb.apply(views[i], int(a), perturb_cfg)
            if effective:
                feats[i] = perturb.to_features(views[i]).values
        probs = nids.predict_proba_batch(model, feats[idxs])
        active[idxs[probs[:, 0] > probs[:, 1]]] = False
    return feats


# ---------------------------------------------------------------------------
# the game
# ---------------------------------------------------------------------------

def build_agents(config: GameConfig) -> tuple[object, object]:
    ss = np.random.SeedSequence(config.seed)
    _, _, red_seed, blue_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(4))
    red = agents.make_agent(config.red_algo, traffic.FEATURE_LEN, perturb.N_ACTIONS,
                            config.red_spec, red_seed)
    blue = agents.make_agent(config.blue_algo, envs.BLUE_STATE_DIM, drift.N_ACTIONS,
                             config.blue_spec, blue_seed)
    return red, blue


def play_game(config: GameConfig, red_agent, blue_agent,
              report_dir: str | Path | None = None,
              red_warmup: bool = True) -> RunReport:
    """Run the alternating game with externally supplied (persistent) agents."""
    ss = np.random.SeedSequence(config.seed)
    spawned = ss.spawn(8)
    data_seed, model_seed = (int(s.generate_state(1)[0]) for s in spawned[:2])
    red_env_rng = np.random.default_rng(spawned[4])
    blue_select_rng = np.random.default_rng(spawned[5])
    seen_seed = int(spawned[6].generate_state(1)[0])

    data = _prepare_data(config, data_seed)
    model = nids.fit_initial(data.train, model_seed, config.nids)
    seen = drift.SeenStats(reservoir_cap=config.reservoir_cap, seed=seen_seed)
    train_X, train_y = traffic.stack_features(data.train)
    seen.ingest(train_X, train_y)

    initial_accuracy = nids.evaluate_arrays(model, data.test_X, data.test_y).acc
    red_log = agents.EpisodeLog()
    blue_log = agents.EpisodeLog()

    # red pre-training against the freshly fitted classifier
    if config.red_enabled and red_warmup and config.red_warmup_episodes > 0:
        pool = [p for p in data.train_raw if p.label == traffic.MALICIOUS]
        if pool:
            warm_env = envs.RedEvasionEnv(model.copy(), pool, config.red_env,
                                          config.perturb, rng=red_env_rng)
            if len(warm_env.eligible_indices):
                for _ in range(config.red_warmup_episodes):
                    state = warm_env.reset()
                    total, done, steps = 0.0, False, 0
                    acts: list[int] = []
                    while not done:
                        a = red_agent.act(state)
                        s2, r, done, info = warm_env.step(a)
                        red_agent.observe(state, a, r, s2, done)
                        state = s2
                        total += r
                        steps += 1
                        acts.append(a)
                    red_log.add(total, steps, red_agent.epsilon, acts)

    test_mal_rows = np.nonzero(data.test_y == 1)[0]
    n_slice = int(round(config.test_perturb_fraction * len(test_mal_rows)))
    slice_rows = test_mal_rows[:n_slice]
    slice_raw = [data.test_raw[i] for i in slice_rows]

    blue_env = envs.BlueAdaptEnv(model, seen, config.budget, config.blue_env,
                                 rng=blue_select_rng)
    rounds: list[RoundRecord] = []
    final_accuracy = initial_accuracy

    for batch in data.batches:
        snapshot = model.copy()
        version_before = model.version
        batch_X, batch_y = traffic.stack_features(batch.samples)
        mal_positions = [i for i, p in enumerate(batch.raw) if p.label == traffic.MALICIOUS]
        mal_raw = [batch.raw[i] for i in mal_positions]

        perturbed_X = batch_X[mal_positions].copy() if mal_positions else np.empty((0, traffic.FEATURE_LEN))
        episode_rewards: list[float] = []
        evasion_rate = 0.0

        if config.red_enabled and mal_raw:
            red_env = envs.RedEvasionEnv(snapshot, mal_raw, config.red_env,
                                         config.perturb, rng=red_env_rng)
            eligible = set(int(i) for i in red_env.eligible_indices)
            cap = config.red_train_per_batch or len(mal_raw)
            trained = 0
            evaded_count = 0
            for j, pkt in enumerate(mal_raw):
                if j not in eligible:
                    continue  # already evading untouched; passes through unperturbed
                learn = trained < cap
                total, steps, final_state, evaded, acts = _run_red_episode(
                    red_env, red_agent, pkt, learn)
                perturbed_X[j] = final_state
                if learn:
                    red_log.add(total, steps, red_agent.epsilon, acts)
                    episode_rewards.append(total)
                    trained += 1
                if evaded:
                    evaded_count += 1
            evasion_rate = evaded_count / len(eligible) if eligible else 0.0

        # refresh the evaluation set with the current attack distribution
        if config.red_enabled and len(slice_raw):
            eval_X = data.test_X.copy()
            eval_X[slice_rows] = _greedy_perturb(red_agent, snapshot, slice_raw,
                                                 config.red_env, config.perturb)
        else:
            eval_X = data.test_X
        acc_clean = nids.evaluate_arrays(model, data.test_X, data.test_y).acc
        acc_drifted = nids.evaluate_arrays(model, eval_X, data.test_y).acc
        rounds.append(RoundRecord(
            round=batch.index, phase="red",
            accuracy_before=acc_clean, accuracy_after=acc_drifted,
            actions=[], samples_used=0, labels_queried=0,
            rewards=episode_rewards, evasion_rate=evasion_rate,
            model_version_before=version_before, model_version_after=model.version))

        # blue turn over perturbed samples plus the raw batch
        pool_X = np.vstack([perturbed_X, batch_X]) if len(perturbed_X) else batch_X
        pool_y = np.concatenate([np.ones(len(perturbed_X), dtype=np.int64), batch_y])
        blue_env.set_test(eval_X, data.test_y)
        state = blue_env.begin_round(pool_X, pool_y)
        actions: list[int] = []
        rewards: list[float] = []
        used_indices: set[int] = set()
        labels_queried = 0
        done = False
        acc_after = acc_drifted
        while not done:
            a = blue_agent.act(state)
            s2, r, done, info = blue_env.step(a)
            blue_agent.observe(state, a, r, s2, done)
            state = s2
            actions.append(a)
            rewards.append(r)
            used_indices.update(info["selected_indices"])
            labels_queried += info["labels_queried"]
            acc_after = info["accuracy"]
        samples_used = len(used_indices)
        blue_log.add(float(sum(rewards)), len(actions), blue_agent.epsilon, actions)
        rounds.append(RoundRecord(
            round=batch.index, phase="blue",
            accuracy_before=acc_drifted, accuracy_after=acc_after,
            actions=actions, samples_used=samples_used, labels_queried=labels_queried,
            rewards=rewards, evasion_rate=0.0,
            model_version_before=version_before, model_version_after=model.version))
        final_accuracy = acc_after

    report = RunReport(config_echo=config_to_text(config),
                       initial_accuracy=initial_accuracy, rounds=rounds,
                       red_log=red_log, blue_log=blue_log,
                       final_accuracy=final_accuracy)
    if report_dir is not None:
        report_emit(report, report_dir, charts_enabled=config.emit_charts)
    return report


def run_game(config: GameConfig, report_dir: str | Path | None = None) -> RunReport:
    red_agent, blue_agent = build_agents(config)
    return play_game(config, red_agent, blue_agent, report_dir)


# ---------------------------------------------------------------------------
# ablation
# ---------------------------------------------------------------------------

ABLATION_MASKS = (envs.MASK_NONE, envs.MASK_MODEL, envs.MASK_DATA)
ABLATION_ALGOS = ("dqn", "ppo")


@dataclass
class AblationResult:
    rows: list[tuple[str, str, float]]  # (algo, mask, final adapted accuracy)

    def cell(self, algo: str, mask: str) -> float:
        for a, m, v in self.rows:
            if a == algo and m == mask:
                return v
        raise KeyError((algo, mask))


def final_adapted_accuracy(report: RunReport) -> float:
    """Mean post-adaptation accuracy over the last quarter of rounds."""
    blue = report.blue_rounds()
    tail = blue[-max(1, len(blue) // 4):]
    return float(np.mean([r.accuracy_after for r in tail]))


def run_ablation(config: GameConfig, report_dir: str | Path | None = None) -> AblationResult:
    """Full state vs masked-state games for each blue algorithm."""
    rows = []
    for algo in ABLATION_ALGOS:
        for mask in ABLATION_MASKS:
            cfg = dataclasses.replace(
                config,
                blue_algo=algo,
                blue_env=dataclasses.replace(config.blue_env, ablation_mask=mask),
            )
            sub_dir = Path(report_dir) / f"{algo}_{mask}" if report_dir else None
            report = run_game(cfg, sub_dir)
            rows.append((algo, mask, final_adapted_accuracy(report)))
    result = AblationResult(rows=rows)
    if report_dir is not None:
        emit_ablation(result, report_dir)
    return result


def emit_ablation(result: AblationResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "ablation.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algo", "state_variant", "final_accuracy"])
        for algo, mask, v in result.rows:
            writer.writerow([algo, mask, repr(v)])


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def report_emit(report: RunReport, out_dir: str | Path, charts_enabled: bool = True) -> list[Path]:
    """Write the run's CSVs (and optional SVG charts); returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def _open(name: str):
        path = out / name
        written.append(path)
        return open(path, "w", newline="")

    with _open("rounds.csv") as fh:
        w = csv.writer(fh)
        w.writerow(["round", "phase", "accuracy_before", "accuracy_after", "actions",
                    "samples_used", "labels_queried", "rewards", "evasion_rate",
                    "model_version_before", "model_version_after"])
        for r in report.rounds:
            w.writerow([r.round, r.phase, _fmt(r.accuracy_before), _fmt(r.accuracy_after),
                        ";".join(str(a) for a in r.actions), r.samples_used,
                        r.labels_queried, ";".join(_fmt(x) for x in r.rewards),
                        _fmt(r.evasion_rate), r.model_version_before, r.model_version_after])

    for name, log in (("red_episodes.csv", report.red_log), ("blue_episodes.csv", report.blue_log)):
        path = out / name
        log.to_csv(path)
        written.append(path)

    with _open("action_rewards.csv") as fh:
        w = csv.writer(fh)
        w.writerow(["action", "name", "mean_reward", "count"])
        for a, name, mean, count in report.action_reward_table():
            w.writerow([a, name, _fmt(mean), count])

    with _open("action_frequency.csv") as fh:
        w = csv.writer(fh)
        w.writerow(["third", "action", "name", "count"])
        freq = report.action_frequency_thirds()
        for third in range(freq.shape[0]):
            for a in range(freq.shape[1]):
                w.writerow([third, a, drift.ACTION_NAMES[a], int(freq[third, a])])

    with _open("accuracy_recovery.csv") as fh:
        w = csv.writer(fh)
        w.writerow(["round", "drop", "recovery", "evasion_rate", "n_actions"])
        for row in report.recovery_table():
            w.writerow([row["round"], _fmt(row["drop"]), _fmt(row["recovery"]),
                        _fmt(row["evasion_rate"]), row["n_actions"]])

    config_path = out / "config.txt"
    config_path.write_text(report.config_echo)
    written.append(config_path)

    if charts_enabled:
        written.extend(emit_charts(out))
    return written


def emit_charts(report_dir: str | Path) -> list[Path]:
    """Render SVG charts from a report directory's CSVs."""
    out = Path(report_dir)
    written: list[Path] = []
    for name, title in (("red_episodes.csv", "Red episodic reward"),
                        ("blue_episodes.csv", "Blue episodic reward")):
        path = out / name
        if not path.exists():
            continue
        rows = _read_csv(path)
        if not rows:
            continue
        xs = [float(r["episode"]) for r in rows]
        series = {
            "reward": [float(r["reward"]) for r in rows],
            "rolling_mean": [float(r["rolling_mean"]) for r in rows],
        }
        svg = out / (path.stem + ".svg")
        charts.line_chart(svg, xs, series, title=title,
                          x_label="episode", y_label="reward")
        written.append(svg)

    freq_path = out / "action_frequency.csv"
    if freq_path.exists():
        rows = _read_csv(freq_path)
        if rows:
            groups: dict[str, list[float]] = {}
            for r in rows:
                groups.setdefault(r["name"], [0.0, 0.0, 0.0])[int(r["third"])] = float(r["count"])
            svg = out / "action_frequency.svg"
            charts.grouped_bar_chart(svg, ["first third", "middle third", "last third"],
                                     groups, title="Blue action frequency over training",
                                     y_label="count")
            written.append(svg)

    rounds_path = out / "rounds.csv"
    if rounds_path.exists():
        rows = [r for r in _read_csv(rounds_path)]
        blue = [r for r in rows if r["phase"] == "blue"]
        red = [r for r in rows if r["phase"] == "red"]
        if blue and red:
            xs = [float(r["round"]) for r in blue]
            series = {
                "post-drift": [float(r["accuracy_before"]) for r in blue],
                "after adaptation": [float(r["accuracy_after"]) for r in blue],
                "clean": [float(r["accuracy_before"]) for r in red],
            }
            svg = out / "accuracy.svg"
            charts.line_chart(svg, xs, series, title="Accuracy per round",
                              x_label="round", y_label="accuracy")
            written.append(svg)
    return written


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# configuration files
# ---------------------------------------------------------------------------

def config_to_text(config: GameConfig) -> str:
    """Render the resolved config as sorted dotted key=value lines."""
    lines: list[str] = []

    def walk(prefix: str, obj) -> None:
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            for f in dataclasses.fields(obj):
                walk(f"{prefix}.{f.name}" if prefix else f.name, getattr(obj, f.name))
            return
        lines.append(f"{prefix} = {_render_value(obj)}")

    walk("", config)
    return "\n".join(sorted(lines)) + "\n"


def _render_value(v) -> str:
    if isinstance(v, bytes):
        return "0x" + v.hex()
    if isinstance(v, tuple):
        return ":".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "none"
    return str(v)


def _parse_value(text: str, current) -> object:
    text = text.strip()
    if isinstance(current, bool):
        if text.lower() in ("true", "1", "yes", "on"):
            return True
        if text.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {text!r}")
    if isinstance(current, bytes):
        return bytes.fromhex(text.removeprefix("0x"))
    if isinstance(current, tuple):
        parts = text.split(":")
        return tuple(type(c)(p) for c, p in zip(current, parts))
    if isinstance(current, int) and not isinstance(current, bool):
        return int(text)
    if isinstance(current, float):
        return float(text)
    if current is None:
        if text.lower() == "none":
            return None
        if ":" in text:
            return tuple(int(p) for p in text.split(":"))
        return int(text)
    return text


def apply_overrides(config: GameConfig, overrides: dict[str, str]) -> GameConfig:
    """Apply dotted-path string overrides, coercing by existing field types."""
    for key, raw in overrides.items():
        parts = key.split(".")
        config = _replace_path(config, parts, raw)
    return config


def _replace_path(obj, parts: list[str], raw: str):
    name = parts[0]
    if not dataclasses.is_dataclass(obj) or not hasattr(obj, name):
        raise ConfigError(f"unknown config key {'.'.join(parts)!r}")
    current = getattr(obj, name)
    if len(parts) == 1:
        return dataclasses.replace(obj, **{name: _parse_value(raw, current)})
    return dataclasses.replace(obj, **{name: _replace_path(current, parts[1:], raw)})


def load_config(path: str | Path | None = None,
                overrides: dict[str, str] | None = None) -> GameConfig:
    """Build a GameConfig from a flat key=value file plus overrides."""
    config = GameConfig()
    file_overrides: dict[str, str] = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line {lineno}: {line!r}")
            key, _, value = line.partition("=")
            file_overrides[key.strip()] = value.strip()
    config = apply_overrides(config, file_overrides)
    if overrides:
        config = apply_overrides(config, overrides)
    return config
