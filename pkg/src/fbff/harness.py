"""Experiment runner: training, evaluation, sweeps, and their reports.

Every run directory is self-describing: config.txt (exact inputs),
metrics.csv (per-episode series), summary.json, checkpoints, and for the
report paths (eval, sweep) a rendered figure next to the delimited output.
"""
from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import checkpoint as ckpt
from .config import RunConfig
from .envs import FailureWrapper, make_env
from .learner import Learner, NanAbort, Transition

CSV_COLUMNS = ["episode", "score", "mean_w", "mean_d", "mean_H_fb",
               "mean_H_ff", "mean_delta", "loss_traj", "loss_value",
               "loss_model_recon", "loss_model_kl", "loss_model_ce"]
H_FF_JUMP_THRESHOLD = 5.0
LAST_K = 20

_STEP_KEYS = {"mean_w": "w", "mean_d": "d", "mean_H_fb": "h_fb",
              "mean_H_ff": "h_ff", "mean_delta": "delta",
              "loss_traj": "loss_traj", "loss_value": "loss_value",
              "loss_model_recon": "loss_model_recon",
              "loss_model_kl": "loss_model_kl",
              "loss_model_ce": "loss_model_ce"}


def build_env(cfg: RunConfig, failure: bool | None = None):
    kwargs = {}
    if cfg.max_steps > 0:
        kwargs["max_steps"] = cfg.max_steps
    if cfg.env == "snake":
        kwargs["coupling"] = cfg.coupling
    env = make_env(cfg.env, cfg.seed, **kwargs)
    use_failure = cfg.failure if failure is None else failure
    if use_failure:
        if cfg.env != "snake":
            raise ValueError("failure injection requires the snake")
        env = FailureWrapper(env, cfg.failure_threshold)
    return env


def build_learner(cfg: RunConfig, env) -> Learner:
    return Learner(env.state_dim, env.action_dim, cfg.hyperparams(),
                   cfg.seed, esn_leak=cfg.esn_leak,
                   value_init=cfg.value_init)


def _fmt(x) -> str:
    if isinstance(x, float):
        return str(x)
    return str(x)


def _write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def train_episode(env, learner: Learner) -> tuple[float, dict, int]:
    """One on-policy episode with a gradient step per transition."""
    obs = env.reset()
    learner.begin_episode()
    done = False
    score = 0.0
    sums: dict[str, float] = {}
    steps = 0
    while not done:
        h_s = learner.esn_s.feature()
        h_a = learner.esn_a.feature()
        a, log_b, fb_selected = learner.act_train(obs)
        obs_next, r, done = env.step(a)
        # a step-cap truncation ends the episode but is not a terminal
        # state: the TD target still bootstraps there
        td_done = done and not getattr(env, "truncated", False)
        metrics = learner.train_step(Transition(
            obs, a, r, obs_next, td_done, log_b, fb_selected, h_s, h_a))
        learner.advance_history(obs, a)
        obs = obs_next
        score += r
        steps += 1
        for key, val in metrics.items():
            sums[key] = sums.get(key, 0.0) + val
    means = {k: v / steps for k, v in sums.items()}
    return score, means, steps


def h_ff_jump_flags(h_ff_series: list[float],
                    threshold: float = H_FF_JUMP_THRESHOLD) -> list[int]:
    """Episode indices whose FF entropy jumped by more than the threshold
    from the previous episode (the failure-case signature: the FF policy
    was updated in an extreme direction)."""
    return [i for i in range(1, len(h_ff_series))
            if abs(h_ff_series[i] - h_ff_series[i - 1]) > threshold]


def run_summary(rows: list[dict], cfg: RunConfig, aborted: bool) -> dict:
    scores = [r["score"] for r in rows]
    tail = scores[-LAST_K:]
    ws = [r["mean_w"] for r in rows]
    flags = h_ff_jump_flags([r["mean_H_ff"] for r in rows])
    return {
        "episodes": len(rows),
        "aborted": aborted,
        "score_last%d_median" % LAST_K:
            float(np.median(tail)) if tail else float("nan"),
        "score_last%d_mean" % LAST_K:
            float(np.mean(tail)) if tail else float("nan"),
        "mean_w_final": ws[-1] if ws else float("nan"),
        "mean_w_last%d" % LAST_K:
            float(np.mean(ws[-LAST_K:])) if ws else float("nan"),
        "success": bool(tail) and not aborted
            and float(np.median(tail)) >= cfg.success_threshold,
        "h_ff_jump_episodes": flags,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
    }


def run_train(cfg: RunConfig, out_dir: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(cfg.to_text())
    env = build_env(cfg)
    learner = build_learner(cfg, env)
    rows: list[dict] = []
    aborted = False
    failure_payload = None
    with open(os.path.join(out_dir, "metrics.csv"), "w",
              encoding="utf-8") as csv_fh:
        csv_fh.write(",".join(CSV_COLUMNS) + "\n")
        for episode in range(cfg.episodes):
            try:
                score, means, _ = train_episode(env, learner)
            except NanAbort as exc:
                aborted = True
                failure_payload = {"episode": episode,
                                   "diagnostics": exc.diagnostics,
                                   "message": str(exc)}
                break
            row = {"episode": episode, "score": score}
            for col, key in _STEP_KEYS.items():
                row[col] = means[key]
            rows.append(row)
            csv_fh.write(",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n")
            csv_fh.flush()
            if cfg.checkpoint_interval > 0 and \
                    (episode + 1) % cfg.checkpoint_interval == 0:
                ckpt.save(os.path.join(
                    out_dir, "checkpoint_ep%d.bin" % (episode + 1)),
                    learner.state_arrays())
    if failure_payload is not None:
        _write_json(os.path.join(out_dir, "failure.json"), failure_payload)
    else:
        ckpt.save(os.path.join(out_dir, "checkpoint.bin"),
                  learner.state_arrays())
    summary = run_summary(rows, cfg, aborted)
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


def eval_rollout(cfg: RunConfig, learner: Learner, mode: str,
                 failure: bool) -> tuple[list[dict], float]:
    env = build_env(cfg, failure=failure)
    raw_env = env.env if isinstance(env, FailureWrapper) else env
    obs = env.reset()
    learner.begin_episode()
    done = False
    rows: list[dict] = []
    score = 0.0
    step = 0
    while not done:
        a = learner.act_eval(obs, mode)
        obs_next, r, done = env.step(a)
        learner.advance_history(obs, a)
        score += r
        row = {"step": step, "reward": r}
        if cfg.env == "snake":
            row.update({"x": raw_env.x, "y": raw_env.y,
                        "heading": raw_env.heading})
            for i in range(raw_env.action_dim):
                row["raw_%d" % i] = float(a[i])
            for i in range(raw_env.action_dim):
                row["k_%d" % i] = float(raw_env.k[i])
        elif cfg.env == "cartpole":
            st = raw_env.state
            row.update({"position": st[0], "velocity": st[1],
                        "angle": st[2], "angular_velocity": st[3],
                        "raw_0": float(a[0])})
        else:
            row["raw_0"] = float(a[0])
        rows.append(row)
        obs = obs_next
        step += 1
    return rows, score


def run_eval(cfg: RunConfig, checkpoint_path: str, out_dir: str,
             mode: str | None = None, failure: bool | None = None) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    mode = mode or cfg.eval_mode
    use_failure = cfg.failure if failure is None else failure
    env = build_env(cfg, failure=False)
    learner = build_learner(cfg, env)
    learner.load_state_arrays(ckpt.load(checkpoint_path))
    rows, score = eval_rollout(cfg, learner, mode, use_failure)
    columns = list(rows[0].keys())
    _write_csv(os.path.join(out_dir, "trajectory.csv"), columns, rows)
    report = {
        "env": cfg.env,
        "mode": mode,
        "failure": use_failure,
        "failure_threshold": cfg.failure_threshold,
        "score": score,
        "steps": len(rows),
        "checkpoint": os.path.abspath(checkpoint_path),
        "config_hash": cfg.hash(),
    }
    if cfg.env == "snake":
        report["final_x"] = rows[-1]["x"]
        report["final_y"] = rows[-1]["y"]
        report["mean_abs_y"] = float(np.mean([abs(r["y"]) for r in rows]))
    _write_json(os.path.join(out_dir, "report.json"), report)
    _render_eval_figure(cfg, rows, use_failure,
                        os.path.join(out_dir, "eval_traces.png"))
    return report


def _render_eval_figure(cfg: RunConfig, rows: list[dict], failure: bool,
                        path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    steps = [r["step"] for r in rows]
    if cfg.env == "snake":
        fig, axes = plt.subplots(8, 1, figsize=(8, 12), sharex=True)
        for i, ax in enumerate(axes):
            ax.plot(steps, [r["raw_%d" % i] for r in rows], lw=0.8)
            ax.set_ylabel("raw k%d" % i, fontsize=7)
            if failure:
                in_fail = [r["x"] < cfg.failure_threshold for r in rows]
                ax.fill_between(steps, 0, 1, where=in_fail, alpha=0.15,
                                color="red", transform=ax.get_xaxis_transform())
        axes[-1].set_xlabel("step")
        fig.suptitle("raw stiffness traces")
    else:
        fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
        keys = [k for k in rows[0] if k not in ("step", "reward")]
        for key in keys[:2]:
            axes[0].plot(steps, [r[key] for r in rows], label=key, lw=0.8)
        axes[0].legend(fontsize=7)
        axes[1].plot(steps, [r["reward"] for r in rows], lw=0.8)
        axes[1].set_ylabel("reward")
        axes[1].set_xlabel("step")
    fig.savefig(path, dpi=100)
    plt.close(fig)


def _sweep_worker(cfg_text: str, out_dir: str) -> dict:
    from .config import parse_config
    return run_train(parse_config(cfg_text), out_dir)


def run_sweep(cfg: RunConfig, seeds: list[int], out_dir: str,
              workers: int = 1) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    jobs = []
    for seed in seeds:
        sub = dataclasses.replace(cfg, seed=seed)
        jobs.append((sub.to_text(), os.path.join(out_dir, "seed_%d" % seed)))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_sweep_worker,
                                      [j[0] for j in jobs],
                                      [j[1] for j in jobs]))
    else:
        summaries = [_sweep_worker(text, path) for text, path in jobs]
    successes = [s for seed, s in zip(seeds, summaries) if s["success"]]
    partition = {
        "seeds": list(seeds),
        "success_seeds": [seed for seed, s in zip(seeds, summaries)
                          if s["success"]],
        "failure_seeds": [seed for seed, s in zip(seeds, summaries)
                          if not s["success"]],
        "aborted_seeds": [seed for seed, s in zip(seeds, summaries)
                          if s["aborted"]],
        "success_count": len(successes),
        "failure_count": len(seeds) - len(successes),
    }
    agg_rows = aggregate_quantiles(
        [os.path.join(out_dir, "seed_%d" % s) for s in seeds])
    _write_csv(os.path.join(out_dir, "aggregate.csv"),
               list(agg_rows[0].keys()) if agg_rows else ["episode"],
               agg_rows)
    _write_json(os.path.join(out_dir, "sweep_summary.json"),
                {"partition": partition, "per_seed": summaries,
                 "config_hash": cfg.hash()})
    if agg_rows:
        _render_sweep_figure(agg_rows,
                             os.path.join(out_dir, "aggregate.png"))
    return {"partition": partition, "per_seed": summaries}


def read_metrics_csv(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            vals = line.strip().split(",")
            row = {}
            for key, val in zip(header, vals):
                row[key] = int(val) if key == "episode" else float(val)
            rows.append(row)
    return rows


def aggregate_quantiles(run_dirs: list[str]) -> list[dict]:
    """Per-episode 25/50/75% quantiles of score and mixture ratio across
    runs (episodes past a run's end are skipped for that run)."""
    series = []
    for d in run_dirs:
        path = os.path.join(d, "metrics.csv")
        if os.path.exists(path):
            series.append(read_metrics_csv(path))
    if not series:
        return []
    horizon = max(len(s) for s in series)
    out = []
    for ep in range(horizon):
        scores = [s[ep]["score"] for s in series if len(s) > ep]
        ws = [s[ep]["mean_w"] for s in series if len(s) > ep]
        q25, q50, q75 = np.percentile(scores, [25, 50, 75])
        w25, w50, w75 = np.percentile(ws, [25, 50, 75])
        out.append({"episode": ep, "runs": len(scores),
                    "score_q25": float(q25), "score_q50": float(q50),
                    "score_q75": float(q75), "w_q25": float(w25),
                    "w_q50": float(w50), "w_q75": float(w75)})
    return out


def _render_sweep_figure(agg_rows: list[dict], path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    eps = [r["episode"] for r in agg_rows]
    fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    axes[0].fill_between(eps, [r["score_q25"] for r in agg_rows],
                         [r["score_q75"] for r in agg_rows], alpha=0.25)
    axes[0].plot(eps, [r["score_q50"] for r in agg_rows], lw=1.2)
    axes[0].set_ylabel("score")
    axes[1].fill_between(eps, [r["w_q25"] for r in agg_rows],
                         [r["w_q75"] for r in agg_rows], alpha=0.25)
    axes[1].plot(eps, [r["w_q50"] for r in agg_rows], lw=1.2)
    axes[1].set_ylabel("mixture ratio")
    axes[1].set_xlabel("episode")
    fig.savefig(path, dpi=100)
    plt.close(fig)
