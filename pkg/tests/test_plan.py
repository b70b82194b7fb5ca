import json
import math

import pytest

from spinecho.engine import Interaction, ModelKind
from spinecho.errors import ConfigError
from spinecho.lattice import SI29_GAMMA_OVER_2PI, OffsetWidth
from spinecho.observables import Detection
from spinecho.plan import (
    AnalyticConfig,
    LatticeConfig,
    SequenceConfig,
    apply_overrides,
    config_from_mapping,
    list_presets,
    load_config,
    parse_assignment,
    run_config_from_mapping,
    select_runs,
)

PRESETS = {"fig1a_sim", "fig2", "fig3", "fig4", "ostroff_waugh"}


def minimal(**extra):
    data = {
        "name": "t",
        "lattice": {"name": "diamond"},
        "disorder": {"abundance": 0.05, "n_spins": 3},
    }
    data.update(extra)
    return data


def path_of(data):
    with pytest.raises(ConfigError) as info:
        run_config_from_mapping(data)
    return info.value.path


def test_presets_are_shipped():
    assert set(list_presets()) == PRESETS


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_resolve(name):
    runs = load_config(name).resolve()
    assert runs
    for run in runs:
        run.sequence.sequences()
        run.model.build()
        run.lattice.build()


def test_fig3_ladder():
    runs = {r.name: r for r in load_config("fig3").resolve()}
    assert list(runs) == ["n4_interrupted", "n4_avg0", "n4_avg1",
                          "n4_exact", "n6_exact", "n8_exact"]
    assert runs["n4_avg0"].model.kind is ModelKind.AVG_H0
    assert runs["n4_avg1"].model.kind is ModelKind.AVG_H0H1
    assert runs["n8_exact"].disorder.n_spins == 8
    assert runs["n8_exact"].n_dr == 80
    assert runs["n6_exact"].n_dr == 400
    model = runs["n4_exact"].model.build()
    assert math.isclose(model.omega1, 2 * math.pi * 40e3)
    assert runs["n4_exact"].disorder.gamma_over_2pi == SI29_GAMMA_OVER_2PI


def test_fig2_reference_run():
    runs = {r.name: r for r in load_config("fig2").resolve()}
    ref = runs["cpmg_reference"]
    assert ref.disorder.offset_fwhm == 0.0
    assert ref.model.kind is ModelKind.INTERRUPTED_H0
    assert runs["apcp"].sequence.build().name == "APCP"


def test_fig1a_is_a_tau_sweep():
    exact, ising = load_config("fig1a_sim").resolve()
    assert exact.detection is Detection.CENTRAL
    assert len(exact.sequence.sequences()) == 10
    assert ising.disorder.n_spins == 1000
    times = ising.analytic.resolve()
    assert len(times) == 50
    assert math.isclose(times[0], 2e-4)
    assert math.isclose(times[-1], 1e-2)


def test_ostroff_waugh_preset():
    (run,) = load_config("ostroff_waugh").resolve()
    seq = run.sequence.build()
    assert seq.name == "ostroff_waugh"
    assert seq.n_echoes == 40


def test_defaults():
    cfg = run_config_from_mapping(minimal())
    assert cfg.csv_name == "t.csv"
    assert cfg.interaction is Interaction.DIPOLAR
    assert cfg.sequence.build().name == "CPMG"
    assert cfg.model.build().omega1 is None
    data = cfg.to_dict()
    assert data["detection"] == "total"
    assert data["disorder"]["offset_width"] == "fwhm"
    json.dumps(data)


@pytest.mark.parametrize("data,path", [
    (minimal(bogus=1), "bogus"),
    ({"name": "t", "lattice": {}}, "disorder"),
    (minimal(n_dr="many"), "n_dr"),
    (minimal(n_dr=True), "n_dr"),
    (minimal(n_dr=0), "n_dr"),
    (minimal(master_seed=-1), "master_seed"),
    (minimal(model={"kind": "wrong"}), "model.kind"),
    (minimal(sequence={"builder": "xy8"}), "sequence.builder"),
    (minimal(sequence={"builder": "cpmg", "tau_values": [1e-4]}),
     "sequence.tau_values"),
    (minimal(sequence={"builder": "hahn", "tau_values": [2e-4, 1e-4]}),
     "sequence.tau_values"),
    (minimal(sequence={"builder": "dsl"}), "sequence"),
    (minimal(lattice={"name": "hcp"}), "lattice.name"),
    (minimal(output={"threshold": 2.0}), "output.threshold"),
    (minimal(output={"snapshot_echoes": [0]}), "output.snapshot_echoes"),
    (minimal(analytic={"times": [1.0, 0.5]}), "analytic.times"),
])
def test_errors_carry_dotted_paths(data, path):
    assert path_of(data) == path


def test_nested_unknown_key_and_nucleus():
    data = minimal()
    data["disorder"]["bogus"] = 1
    assert path_of(data) == "disorder.bogus"
    data = minimal()
    data["disorder"]["gamma_over_2pi"] = "h1"
    assert path_of(data) == "disorder.gamma_over_2pi"


def test_library_errors_become_config_errors():
    data = minimal()
    data["disorder"]["abundance"] = 1.5
    assert path_of(data) == "disorder"


def test_enum_and_nucleus_values():
    data = minimal(detection="CENTRAL")
    data["disorder"].update(gamma_over_2pi="C13", offset_width="sigma")
    cfg = run_config_from_mapping(data)
    assert cfg.detection is Detection.CENTRAL
    assert cfg.disorder.offset_width is OffsetWidth.SIGMA
    assert cfg.disorder.gamma_over_2pi == 10.7084e6


def test_run_errors_name_the_run():
    config = config_from_mapping({
        "name": "c",
        "base": minimal(),
        "runs": [{"name": "ok", "set": {}},
                 {"name": "bad", "set": {"n_dr": 0}}],
    })
    with pytest.raises(ConfigError) as info:
        config.resolve()
    assert info.value.path == "runs[bad].n_dr"


def test_duplicate_runs_and_top_level_keys():
    with pytest.raises(ConfigError):
        config_from_mapping({"base": minimal(), "runs": [
            {"name": "a"}, {"name": "a"}]})
    with pytest.raises(ConfigError) as info:
        config_from_mapping({"base": minimal(), "extra": 1})
    assert info.value.path == "extra"


def test_flat_file_is_one_run():
    data = minimal()
    data.pop("name")
    (run,) = config_from_mapping(data, "flat").resolve()
    assert run.name == "flat"


@pytest.mark.parametrize("text,expected", [
    ("n_dr=5", ("n_dr", 5)),
    ("model.kind=avg_h0", ("model.kind", "avg_h0")),
    ("sequence.tau_values=[1e-4, 2e-4]",
     ("sequence.tau_values", [1e-4, 2e-4])),
    ("output.csv=out/a.csv", ("output.csv", "out/a.csv")),
    ("model.omega1_over_2pi=null", ("model.omega1_over_2pi", None)),
])
def test_parse_assignment(text, expected):
    assert parse_assignment(text) == expected


def test_parse_assignment_needs_equals():
    with pytest.raises(ConfigError):
        parse_assignment("n_dr")


def test_overrides_copy_the_base():
    base = minimal()
    out = apply_overrides(base, {"disorder.n_spins": 5, "model.kind": "x"})
    assert base["disorder"]["n_spins"] == 3
    assert "model" not in base
    assert out["disorder"]["n_spins"] == 5
    assert out["model"] == {"kind": "x"}
    with pytest.raises(ConfigError) as info:
        apply_overrides(base, {"name.x": 1})
    assert info.value.path == "name"


def test_with_overrides_reaches_every_run():
    config = load_config("fig3").with_overrides({"n_dr": 2})
    assert all(r.n_dr == 2 for r in config.resolve())


def test_command_line_overrides_beat_run_settings():
    config = load_config("fig3").with_overrides({"model.kind": "delta"})
    runs = config.resolve()
    assert "n4_avg0" in [r.name for r in runs]
    assert all(r.model.kind is ModelKind.DELTA for r in runs)


def test_select_runs():
    runs = load_config("fig2").resolve()
    picked = select_runs(runs, ["cpmg", "cp"])
    assert [r.name for r in picked] == ["cpmg", "cp"]
    assert select_runs(runs, []) == runs
    with pytest.raises(ConfigError) as info:
        select_runs(runs, ["nope"])
    assert info.value.path == "--run"


def test_load_config_sources(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config("no_such_preset")
    assert info.value.path == "--config"

    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ConfigError):
        load_config(str(broken))

    good = tmp_path / "mine.json"
    good.write_text(json.dumps(minimal()))
    (run,) = load_config(str(good)).resolve()
    assert run.name == "t"


def test_dsl_sequences(tmp_path):
    text = "90(X) ; [ d(10u) 180(Y) d(10u) echo(+Y) ]*4"
    inline = SequenceConfig(builder="dsl", dsl=text).build()
    assert inline.name == "dsl"
    assert inline.n_echoes == 4

    path = tmp_path / "hahn_like.seq"
    path.write_text(text)
    from_file = SequenceConfig(builder="dsl", dsl_file=str(path)).build()
    assert from_file.name == "hahn_like"

    with pytest.raises(ConfigError):
        SequenceConfig(builder="dsl", dsl_file=str(tmp_path / "none.seq"))


def test_builders():
    assert SequenceConfig(builder="bb1", base="CP").build().name == "BB1-CP"
    assert SequenceConfig(builder="hahn", tau=1e-4).build().n_echoes == 1
    with pytest.raises(ConfigError):
        SequenceConfig(builder="ostroff_waugh", n_echoes=3).build()


def test_lattice_config():
    spec = LatticeConfig(name="fcc", multiplicity=60).build()
    assert spec.multiplicity == 60
    with pytest.raises(ConfigError):
        LatticeConfig(name="diamond", multiplicity=2).build()


def test_analytic_needs_times():
    with pytest.raises(ConfigError):
        AnalyticConfig().resolve()
    assert AnalyticConfig(times=(1e-3, 2e-3)).resolve() == (1e-3, 2e-3)
