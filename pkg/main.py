# main.py
from __future__ import annotations

import csv
import functools
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from typing import Any, Callable, Optional

import click

from config import get_settings
from data.functionals import NormalFunctional
from data.reports import IterationTrace, RunReport, canonical_json
from data.tolerance import ToleranceConfig
from ell1_diagonal import diag_decompose, theorem_b_instance, truncate_to_matrix
from errors import ConvergenceError, DimensionMismatchError, InternalConsistencyError, LebesgueError, PreconditionError, SchemaError, ValidationError
from forms.functional import detect_kind, dump_rep, parse_operand
from forms.sequence import dump_sequence, parse_sequence
from lebesgue_engine import SCHEDULES, ac_part_iterative, decompose
from normal_functionals import functional_lebesgue, functional_uniqueness

log = logging.getLogger("lebesgue.cli")

EXIT_INVALID = 2
EXIT_CONVERGENCE = 3
EXIT_INTERNAL = 1

CSV_FIELDS = ("k", "n", "gap_trace", "c_bound")


# ==================== ВВОД / ВЫВОД ====================
def read_payload(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: malformed JSON ({e.msg} at line {e.lineno})") from e
    except OSError as e:
        raise SchemaError(f"{path}: cannot read file ({e.strerror})") from e


def payload_digest(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def write_atomic(path: str, text: str) -> None:
    """Временный файл в той же папке + os.replace: читатель не увидит половину файла."""
    target_dir = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=target_dir, prefix=".lebesgue-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_csv(trace: IterationTrace) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in trace.rows():
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def _describe_input(path: str, payload: Any, f: NormalFunctional) -> dict:
    out = {"sha256": payload_digest(payload), "kind": f.kind, "file": os.path.basename(path)}
    if f.is_matrix:
        out["dim"] = f.rep.dim
    else:
        out["prefix_length"] = f.rep.N
        out["infinite_support"] = f.rep.infinite_support
    return out


def _iterations(trace: IterationTrace) -> list[dict]:
    return [{"k": s.k, "gap": s.gap} for s in trace.steps]


# ==================== ОБЩИЕ ФЛАГИ ====================
def common_options(fn: Callable) -> Callable:
    @click.option("--tol", type=float, default=None, help="conv_tol: relative stopping threshold.")
    @click.option("--psd-tol", "psd_tol", type=float, default=None, help="Relative PSD tolerance.")
    @click.option("--max-iters", "max_iters", type=int, default=None, help="Iteration cap for the monotone limit.")
    @click.option("--truncate", type=int, default=None, help="Sequence-to-matrix horizon.")
    @click.option("--seed", type=int, default=None, help="Seed for sampled test panels.")
    @click.option("--parallel-oracles", "parallel_oracles", is_flag=True,
                  help="Run the two [T]S oracles in parallel threads.")
    @click.option("--quiet", is_flag=True, help="Only log errors.")
    @functools.wraps(fn)
    def wrapper(*args, tol, psd_tol, max_iters, truncate, seed, parallel_oracles, quiet, **kwargs):
        settings = get_settings()
        logging.basicConfig(
            level=logging.ERROR if quiet else settings.log_level,
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
            force=True,
        )
        run = _guarded(fn)
        return run(*args, tol=tol, psd_tol=psd_tol, max_iters=max_iters, parallel_oracles=parallel_oracles,
                   truncate=settings.truncate if truncate is None else truncate,
                   seed=settings.seed if seed is None else seed, **kwargs)
    return wrapper


def _guarded(fn: Callable) -> Callable:
    """Ошибки пакета → одна строка 'error: …' на stderr и код выхода."""
    @functools.wraps(fn)
    def run(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValidationError, PreconditionError) as e:
            click.echo(f"error: [{getattr(e, 'invariant', 'precondition')}] {e}", err=True)
            sys.exit(EXIT_INVALID)
        except ConvergenceError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_CONVERGENCE)
        except InternalConsistencyError as e:
            click.echo(f"error: internal consistency check failed: {e}", err=True)
            sys.exit(EXIT_INTERNAL)
        except LebesgueError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_INTERNAL)
    return run


def make_config(tol: Optional[float], psd_tol: Optional[float], max_iters: Optional[int],
                parallel_oracles: Optional[bool] = None) -> ToleranceConfig:
    return ToleranceConfig.from_settings().with_overrides(conv_tol=tol, psd_tol=psd_tol, max_iters=max_iters,
                                                          parallel_oracles=parallel_oracles or None)


def _tolerance_block(cfg: ToleranceConfig, truncate: int, seed: int) -> dict:
    block = cfg.as_dict()
    block.update({"truncate": truncate, "seed": seed})
    return block


def _check_truncate(truncate: int) -> None:
    if truncate < 1:
        raise ValidationError(f"--truncate must be >= 1, got {truncate}", "truncate")


def _load_pair(first: str, second: str, cfg: ToleranceConfig):
    p1, p2 = read_payload(first), read_payload(second)
    f1, f2 = parse_operand(p1, cfg), parse_operand(p2, cfg)
    if f1.kind != f2.kind:
        raise DimensionMismatchError(f"input kinds differ: {first} is a {f1.kind}, {second} is a {f2.kind}")
    return (p1, f1), (p2, f2)


# ==================== КОМАНДЫ ====================
@click.group()
def main():
    """Разложение Лебега положительных операторов и нормальных функционалов."""


@main.command("decompose")
@click.argument("s_path", type=click.Path())
@click.argument("t_path", type=click.Path())
@click.argument("out_path", type=click.Path())
@common_options
def cmd_decompose(s_path, t_path, out_path, *, tol, psd_tol, max_iters, truncate, seed, parallel_oracles):
    """S = [T]S + (S − [T]S) с сертификатами; отчёт в OUT_PATH."""
    started = time.perf_counter()
    cfg = make_config(tol, psd_tol, max_iters, parallel_oracles)
    _check_truncate(truncate)
    (ps, g), (pt, f) = _load_pair(s_path, t_path, cfg)
    inputs = {"S": _describe_input(s_path, ps, g), "T": _describe_input(t_path, pt, f)}

    def write(result: dict) -> None:
        report = RunReport(
            inputs=inputs,
            result=result,
            tolerance=_tolerance_block(cfg, truncate, seed),
            timing={"seconds": time.perf_counter() - started},
        )
        write_atomic(out_path, report.to_json())

    try:
        parts = functional_lebesgue(g, f, cfg, seed=seed, truncate=truncate)
        if parts.decomposition is not None:
            it_trace = parts.decomposition.trace_of_iteration
        else:
            # сходимость смотрим на усечении до матрицы
            it_trace = decompose(truncate_to_matrix(g.rep, truncate),
                                 truncate_to_matrix(f.rep, truncate), cfg).trace_of_iteration
    except ConvergenceError as e:
        # частичный отчёт с трассой, код выхода 3
        write({"converged": False, "iterations": _iterations(e.trace)})
        raise
    certificate = functional_uniqueness(g, f, cfg, parts=parts)

    write({
        "ac": dump_rep(parts.regular.rep),
        "sing": dump_rep(parts.singular.rep),
        "unique": certificate.unique,
        "c": certificate.c_or_none,
        "converged": True,
        "iterations": _iterations(it_trace),
        "certificate": certificate.as_dict(),
    })
    log.info("[cli] decomposition written to %s (unique=%s)", out_path, certificate.unique)


@main.command("check-unique")
@click.argument("g_path", type=click.Path())
@click.argument("f_path", type=click.Path())
@common_options
def cmd_check_unique(g_path, f_path, *, tol, psd_tol, max_iters, truncate, seed, parallel_oracles):
    """Печатает {"unique": …, "c": …}; единственность это данные, код выхода 0."""
    cfg = make_config(tol, psd_tol, max_iters, parallel_oracles)
    (_, g), (_, f) = _load_pair(g_path, f_path, cfg)
    certificate = functional_uniqueness(g, f, cfg)
    click.echo(json.dumps({"unique": certificate.unique, "c": certificate.c_or_none}, sort_keys=True))


@main.command("counterexample")
@click.argument("lambda_path", type=click.Path())
@click.argument("out_path", type=click.Path())
@click.option("--horizon", type=int, default=None, help="Prefix horizon of the constructed sequence.")
@common_options
def cmd_counterexample(lambda_path, out_path, *, horizon, tol, psd_tol, max_iters, truncate, seed,
                       parallel_oracles):
    """Пара (T = λ, S = μ) с неединственным разложением и сертификатом отношения."""
    started = time.perf_counter()
    cfg = make_config(tol, psd_tol, max_iters, parallel_oracles)
    payload = read_payload(lambda_path)
    if detect_kind(payload) != "sequence":
        raise SchemaError(f"{lambda_path}: counterexample needs a sequence payload")
    lam = parse_sequence(payload)
    instance = theorem_b_instance(lam, horizon)
    sing = diag_decompose(instance.S, instance.T).sing

    report = RunReport(
        inputs={"lambda": {"sha256": payload_digest(payload), "kind": "sequence",
                           "file": os.path.basename(lambda_path), "prefix_length": lam.N}},
        result={
            "T": dump_sequence(instance.T),
            "S": dump_sequence(instance.S),
            "sing_total": sing.total(),
            "unique": False,
            "certificate": instance.certificate.as_dict(),
        },
        tolerance=dict(_tolerance_block(cfg, truncate, seed), horizon=horizon or get_settings().horizon),
        timing={"seconds": time.perf_counter() - started},
    )
    write_atomic(out_path, report.to_json())
    log.info("[cli] counterexample written to %s", out_path)


@main.command("converge-report")
@click.argument("s_path", type=click.Path())
@click.argument("t_path", type=click.Path())
@click.argument("csv_path", type=click.Path())
@click.option("--schedule", type=click.Choice(SCHEDULES), default="spectral", show_default=True,
              help="Approximant schedule.")
@common_options
def cmd_converge_report(s_path, t_path, csv_path, *, schedule, tol, psd_tol, max_iters, truncate, seed,
                        parallel_oracles):
    """CSV "k,n,gap_trace,c_bound", по строке на шаг приближения."""
    cfg = make_config(tol, psd_tol, max_iters, parallel_oracles)
    _check_truncate(truncate)
    (_, g), (_, f) = _load_pair(s_path, t_path, cfg)
    S, T = g.rep, f.rep
    if not g.is_matrix:
        S, T = truncate_to_matrix(S, truncate), truncate_to_matrix(T, truncate)
    try:
        _, it_trace = ac_part_iterative(S, T, cfg, schedule=schedule)
    except ConvergenceError as e:
        # трассу пишем и при несходимости
        write_atomic(csv_path, trace_csv(e.trace))
        raise
    write_atomic(csv_path, trace_csv(it_trace))


# ==================== RUN ====================
if __name__ == "__main__":
    main()
