import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from semcomm import channel as ch
from semcomm.errors import ConfigError, ContractError, StageError
from semcomm.harness import continual as cont
from semcomm.harness import pipeline as pl
from semcomm.harness import sweep as sw
from semcomm.harness.config import ENV_BACKEND_URL, ENV_OUTPUT, KEYS, from_mapping, load_config, reference_markdown
from semcomm.harness.manifest import DEVIATIONS, MANIFEST_NAME, RunManifest, load_manifest
from semcomm.harness.runtime import decode_bleu, make_backends
from semcomm.kb_bridge import MockCaptioner, MockReconstructor, load_dataset

from conftest import FIXTURES

ROOT = FIXTURES.parent

# -- config --------------------------------------------------------------------------


def test_toy_config_parses():
    cfg = load_config(FIXTURES / "toy.cfg", env={})
    assert cfg.seed == 0 and cfg.arch_preset == "toy"
    assert cfg.snr_test == tuple(float(x) for x in range(11))
    assert cfg.variants == ("nam-uniform", "fixed-1", "fixed-4", "fixed-7", "fixed-10")
    assert cfg.sweep_seeds == 5 and cfg.med.seeds == 3
    assert cfg.sequence == ("toy-cifar", "toy-birds", "toy-catsdogs")
    assert cfg.output_dir == "runs/toy"
    assert str(cfg.train.snr_train) == "uniform 0 10"


def test_defaults_cover_every_key():
    cfg = from_mapping({}, env={})
    assert cfg.med.n_stm_max == 500 and cfg.backend.kind == "mock"
    assert len({(k.section, k.name) for k in KEYS}) == len(KEYS)


def test_unknown_section_and_key():
    with pytest.raises(ConfigError, match=r"\[bogus\]"):
        from_mapping({"bogus": {}}, env={})
    with pytest.raises(ConfigError, match="'depth' in \\[training\\]"):
        from_mapping({"training": {"depth": "3"}}, env={})


def test_invalid_values_are_config_errors():
    for raw in (
        {"training": {"lr": "fast"}},
        {"channel": {"kind": "fading"}},
        {"med": {"mix_ratio": "1.5"}},
        {"sweep": {"seeds": "1"}},
        {"sweep": {"variants": "fixed-x"}},
        {"datasets": {"eval": "toy-mnist"}},
    ):
        with pytest.raises(ConfigError):
            from_mapping(raw, env={})


def test_missing_file_names_path(tmp_path):
    with pytest.raises(ConfigError, match=str(tmp_path / "absent.cfg")):
        load_config(tmp_path / "absent.cfg")


def test_environment_overrides():
    cfg = load_config(FIXTURES / "toy.cfg", env={ENV_OUTPUT: "/tmp/elsewhere"})
    assert cfg.output_dir == "/tmp/elsewhere"
    remote = {"backend": {"kind": "remote"}}
    with pytest.raises(ConfigError, match=ENV_BACKEND_URL):
        from_mapping(remote, env={})
    cfg = from_mapping(remote, env={ENV_BACKEND_URL: "http://kb:8000"})
    assert cfg.backend.url == "http://kb:8000"
    cap, _ = make_backends(cfg)
    assert cap.base_url.rstrip("/") == "http://kb:8000"


def test_hash_stable_and_ignores_output_dir():
    a = load_config(FIXTURES / "toy.cfg", env={})
    b = load_config(FIXTURES / "toy.cfg", {"output": {"dir": "other"}}, env={})
    c = load_config(FIXTURES / "toy.cfg", {"training": {"lr": "0.001"}}, env={})
    assert a.hash() == b.hash() == load_config(FIXTURES / "toy.cfg", env={}).hash()
    assert a.hash() != c.hash()
    assert a.with_seed(4).hash() != a.hash()


def test_config_reference_is_current():
    assert (ROOT / "docs" / "config_reference.md").read_text() == reference_markdown()


# -- manifest ------------------------------------------------------------------------


def test_manifest_lists_exactly_the_written_files(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    m = RunManifest("t", "h", {}, "out/run")
    Path("out/run").mkdir(parents=True)
    m.add("metrics", Path("out/run") / "a.csv").write_text("x")
    m.add("metrics", Path("out/run/sub") / "b.csv")
    (tmp_path / "out/run/sub").mkdir()
    (tmp_path / "out/run/sub/b.csv").write_text("y")
    m.exercise("perfect-csi")
    m.finish()
    data = load_manifest("out/run")
    written = sorted(p.relative_to("out/run").as_posix() for p in Path("out/run").rglob("*") if p.is_file())
    assert written == m.all_files() == ["a.csv", MANIFEST_NAME, "sub/b.csv"]
    assert data["deviations"] == {"perfect-csi": DEVIATIONS["perfect-csi"]}


def test_manifest_rejects_missing_and_outside_files(tmp_path):
    m = RunManifest("t", "h", {}, str(tmp_path))
    m.add("metrics", tmp_path / "never.csv")
    with pytest.raises(ContractError, match="never.csv"):
        m.finish()
    with pytest.raises(ContractError):
        m.add("metrics", tmp_path.parent / "x.csv")


# -- pipeline ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def ship_image():
    return next(r for r in load_dataset("toy-cifar") if r.label == "ship")


def test_trace_has_all_intermediates(trained_toy, ship_image):
    system, _, _ = trained_toy
    out, trace = pl.run_pipeline(ship_image, 10.0, system, MockCaptioner(), MockReconstructor())
    assert list(trace.intermediates) == ["tokens", "features", "symbols", "received", "recovered"]
    assert set(trace.timings) == set(pl.STAGES)
    # one position per token plus the end marker
    assert trace.features.shape == (len(trace.tokens) + 1, system.arch.dim)
    assert trace.symbols.ndim == 1 and trace.received.shape == trace.symbols.shape
    assert ch.SymbolFrame(trace.symbols).power == pytest.approx(1.0, abs=1e-9)
    assert out.label == ship_image.label


def test_trace_replays_stage_by_stage(trained_toy, ship_image):
    system, _, _ = trained_toy
    snr = 4.0
    _, t = pl.run_pipeline(ship_image, snr, system, MockCaptioner(), MockReconstructor(), "rayleigh",
                           np.random.default_rng(11))
    assert t.tokens == system.vocab.encode(t.text)
    np.testing.assert_array_equal(pl.semantic_encode(system, t.tokens, snr), t.features)
    np.testing.assert_array_equal(pl.channel_encode(system, t.features, snr).symbols, t.symbols)
    r = t.realization
    np.testing.assert_allclose(t.received, r.gain * t.symbols + r.noise, rtol=0, atol=1e-15)
    assert r.noise_var == pytest.approx(ch.noise_variance(snr))
    eq = ch.equalize(ch.SymbolFrame(t.received), r)
    feats = pl.channel_decode(system, eq, len(t.tokens) + 1, snr)
    assert pl.semantic_decode(system, feats, snr) == t.recovered
    assert system.vocab.decode(t.recovered) == t.recovered_text


def test_stage_error_names_stage(trained_toy, ship_image):
    system, _, _ = trained_toy

    class Broken:
        def reconstruct(self, cap):
            raise ValueError("generator offline")

    with pytest.raises(StageError) as exc:
        pl.run_pipeline(ship_image, 10.0, system, MockCaptioner(), Broken())
    assert exc.value.stage == "reconstruct" and "generator offline" in str(exc.value)

    class BadFrame:
        def caption(self, img):
            raise KeyError("no caption")

    with pytest.raises(StageError, match="'caption'"):
        pl.run_pipeline(ship_image, 10.0, system, BadFrame(), MockReconstructor())


def test_deep_noise_hurts_bleu(trained_toy, toy_corpora):
    system, _, _ = trained_toy
    vocab, corpora = toy_corpora
    seqs = corpora["toy-cifar"].seqs[:60]
    low, _ = decode_bleu(system, seqs, 0.0, "rayleigh", np.random.default_rng(1))
    high, _ = decode_bleu(system, seqs, 60.0, "rayleigh", np.random.default_rng(1))
    assert low < high


# -- sweep ---------------------------------------------------------------------------

SMALL = {
    "training": {"channel_steps": "5", "semantic_steps": "10", "rounds": "1"},
    "sweep": {"variants": "nam-uniform fixed-10", "seeds": "2"},
    "channel": {"snr_test": "0 10"},
}


@pytest.fixture(scope="module")
def small_sweep(tmp_path_factory, toy_corpora):
    out = tmp_path_factory.mktemp("sweep")
    cfg = load_config(FIXTURES / "toy.cfg", {**SMALL, "output": {"dir": str(out)}}, env={})
    vocab, corpora = toy_corpora
    m = RunManifest("sweep-snr", cfg.hash(), cfg.to_dict(), str(out))
    result = sw.snr_sweep(cfg, vocab, corpora[cfg.eval_dataset], out, m)
    return cfg, out, result, m


def test_sweep_shape_and_csv(small_sweep):
    cfg, out, result, m = small_sweep
    assert len(result.rows) == len(cfg.variants) * len(cfg.snr_test)
    assert {(r.variant, r.snr_db) for r in result.rows} == {(v, s) for v in cfg.variants for s in cfg.snr_test}
    assert all(r.n == 2 and np.isfinite(r.stddev) and 0 <= r.mean <= 1 for r in result.rows)
    assert sw.read_sweep_csv(out / "bleu_vs_snr.csv").rows == result.rows
    assert len(m.files["checkpoints"]) == 4 and result.missing == []


def test_sweep_noise_is_paired(small_sweep, toy_corpora, tmp_path):
    cfg, out, _, _ = small_sweep
    vocab, corpora = toy_corpora
    # the same weights under two variant names must score identically
    for seed in sw.seed_list(cfg):
        src = out / "checkpoints" / sw.checkpoint_name("fixed-10", seed)
        shutil.copy(src, tmp_path / sw.checkpoint_name("fixed-10", seed))
        shutil.copy(src, tmp_path / sw.checkpoint_name("fixed-10.0", seed))
    twin = load_config(FIXTURES / "toy.cfg", {**SMALL, "sweep": {"variants": "fixed-10 fixed-10.0", "seeds": "2"}}, env={})
    res = sw.evaluate_sweep(twin, vocab, corpora[twin.eval_dataset], tmp_path)
    for snr in twin.snr_test:
        a, b = res.cell("fixed-10", snr), res.cell("fixed-10.0", snr)
        assert (a.mean, a.stddev) == (b.mean, b.stddev)


def test_sweep_reports_missing_checkpoints(small_sweep, toy_corpora, tmp_path):
    cfg, out, _, _ = small_sweep
    vocab, corpora = toy_corpora
    for p in (out / "checkpoints").glob("*.ckpt"):
        shutil.copy(p, tmp_path / p.name)
    gone = tmp_path / sw.checkpoint_name("nam-uniform", cfg.seed + 1)
    gone.unlink()
    res = sw.evaluate_sweep(cfg, vocab, corpora[cfg.eval_dataset], tmp_path)
    assert res.missing == [str(gone)]
    assert res.cell("nam-uniform", 0.0).n == 1 and np.isnan(res.cell("nam-uniform", 0.0).stddev)
    assert res.cell("fixed-10", 0.0).n == 2


# -- continual -----------------------------------------------------------------------


def test_small_continual_run(tmp_path, toy_corpora):
    over = {
        "training": {"channel_steps": "3", "semantic_steps": "6", "rounds": "1"},
        "med": {"n_stm_max": "20", "seeds": "1"},
        "datasets": {"sequence": "toy-cifar toy-birds"},
    }
    cfg = load_config(FIXTURES / "toy.cfg", over, env={})
    vocab, corpora = toy_corpora
    m = RunManifest("continual-map", cfg.hash(), cfg.to_dict(), str(tmp_path))
    res = cont.continual_experiment(cfg, vocab, corpora, tmp_path, m)
    assert [a.arm for a in res.arms] == ["med", "no-med"]
    for a in res.arms:
        for mat in a.maps.values():
            assert len(mat.values) == 2 and all(len(r) == 2 for r in mat.values)
            assert all(0 <= x <= 1 for r in mat.values for x in r)
    med, nomed = (a.pool for a in res.arms)
    assert med.reports and len(med.ltm) > 0
    # the ablation arm consolidates too but never replays from long-term memory
    assert nomed.pushes == med.pushes
    assert np.isfinite(res.forgetting("med")) and np.isfinite(res.forgetting("no-med"))
    m.finish()
    listed = set(load_manifest(tmp_path)["files"]["memory"])
    assert listed == {"memory_med_seed0.json", "memory_no-med_seed0.json"}
    assert json.loads((tmp_path / "memory_med_seed0.json").read_text())["n_stm_max"] == 20
