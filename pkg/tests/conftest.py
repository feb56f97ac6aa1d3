from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from semcomm.codecs.training import TrainLog
from semcomm.harness.config import load_config
from semcomm.harness.runtime import build_corpora, make_backends, train_variant
from semcomm.numerics import GradientTape, Tensor, backward

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def numeric_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of scalar ``f`` w.r.t. array ``x`` (modified in place, restored)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        up = f()
        x[i] = old - h
        down = f()
        x[i] = old
        g[i] = (up - down) / (2 * h)
    return g


def rel_err(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    """Max abs difference over the larger magnitude; ``floor`` absorbs finite-difference noise near zero."""
    return float(np.max(np.abs(a - b)) / max(floor, np.max(np.abs(a)), np.max(np.abs(b))))


def analytic_grads(loss_fn, params: list[Tensor]) -> list[np.ndarray]:
    with GradientTape() as tape:
        loss = loss_fn()
    backward(tape, loss, params)
    return [p.grad.copy() for p in params]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def toy_cfg():
    return load_config(FIXTURES / "toy.cfg", {"output": {"dir": "unused"}})


@pytest.fixture(scope="session")
def toy_corpora(toy_cfg):
    cap, _ = make_backends(toy_cfg)
    return build_corpora(toy_cfg, cap)


@pytest.fixture(scope="session")
def trained_toy(toy_cfg, toy_corpora):
    """A NAM system trained on the eval corpus with the toy budget; shared, treat as read-only."""
    vocab, corpora = toy_corpora
    log = TrainLog()
    system, result = train_variant(toy_cfg, vocab, corpora[toy_cfg.eval_dataset].seqs, "nam-uniform", 0, log)
    return system, result, log


def sampled_grad_error(loss_fn, params: list[Tensor], rng, per_param: int = 3, h: float = 1e-5) -> float:
    """Relative error ||g_a - g_n|| / max(||g_a||, ||g_n||) over a random sample of entries per parameter."""
    grads = analytic_grads(loss_fn, params)
    a, n = [], []
    for p, g in zip(params, grads):
        flat = p.data.reshape(-1)
        assert np.shares_memory(flat, p.data), "parameter storage must be contiguous"
        for i in rng.choice(flat.size, size=min(per_param, flat.size), replace=False):
            old = flat[i]
            flat[i] = old + h
            up = loss_fn().item()
            flat[i] = old - h
            down = loss_fn().item()
            flat[i] = old
            a.append(g.reshape(-1)[i])
            n.append((up - down) / (2 * h))
    a, n = np.array(a), np.array(n)
    return float(np.linalg.norm(a - n) / max(np.linalg.norm(a), np.linalg.norm(n), 1e-12))


# -- acceptance report ---------------------------------------------------------------

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record_acceptance(name: str, ok: bool, detail: str) -> None:
    _ACCEPTANCE[name] = (ok, detail)
    print(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")
