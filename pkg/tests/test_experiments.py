import io

import numpy as np
import pytest
from pydantic import ValidationError

from quditlab.experiments import ExperimentSpec, Row, fidelity_curve, run
from quditlab.operators import LogicalLevels
from quditlab.tables import write_rows


def csv_text(rows):
    buf = io.StringIO()
    write_rows(rows, buf, {"seed": 42})
    return buf.getvalue()


class TestSpec:
    def test_defaults(self):
        s = ExperimentSpec(family="fidelity_vs_d")
        assert s.model == "xprime" and s.p == 0.01 and s.d_values == [2, 3, 4, 5, 6]
        assert s.n_steps == 1000 and s.seed == 42
        assert ExperimentSpec(family="kohlrausch_table").n_steps == 3600
        assert len(ExperimentSpec(family="qec_compare").grid) == 21

    def test_model_alias(self):
        assert ExperimentSpec(family="fidelity_vs_d", model="X'+Z").model == "xprime+z"

    @pytest.mark.parametrize("bad", [
        {"family": "nope"},
        {"family": "fidelity_vs_d", "colour": "red"},
        {"family": "fidelity_vs_d", "steps": 0},
        {"family": "fidelity_vs_d", "p": 1.5},
        {"family": "fidelity_vs_d", "d_values": [1, 2]},
        {"family": "fidelity_vs_d", "levels": [0, 3], "d_values": [3]},
        {"family": "fidelity_vs_l1", "l1_values": [6], "d_values": [6]},
        {"family": "fidelity_vs_d", "model": "y"},
        {"family": "qec_compare", "p_grid": [0.1, 2.0]},
        {"family": "qec_compare", "taus": [-1]},
    ])
    def test_rejects(self, bad):
        with pytest.raises(ValidationError):
            ExperimentSpec(**bad)


class TestRun:
    def test_rows_long_format(self):
        rows = run(ExperimentSpec(family="fidelity_vs_d", d_values=[2, 3], steps=5), jobs=1)
        assert len(rows) == 12
        assert rows[0] == Row("fidelity_vs_d", "xprime", 2, 0, 1, 0.01, 0, "encoded_fidelity", rows[0].value)
        assert [r.d for r in rows] == [2] * 6 + [3] * 6

    def test_slower_decay_for_larger_d(self):
        rows = run(ExperimentSpec(family="fidelity_vs_d", steps=200), jobs=1)
        final = [r.value for r in rows if r.t == 200]
        assert all(a < b for a, b in zip(final, final[1:]))

    def test_vs_l1_pairs(self):
        rows = run(ExperimentSpec(family="fidelity_vs_l1", d_values=[6], steps=1), jobs=1)
        assert sorted({(r.l0, r.l1) for r in rows}) == [(0, l1) for l1 in range(1, 6)]

    def test_shifted_pairs(self):
        rows = run(ExperimentSpec(family="fidelity_shifted_pair", d_values=[6], steps=1), jobs=1)
        assert sorted({(r.l0, r.l1) for r in rows}) == [(k, k + 1) for k in range(5)]
        rows = run(ExperimentSpec(family="fidelity_shifted_pair", d_values=[6], steps=1, distance=3), jobs=1)
        assert sorted({(r.l0, r.l1) for r in rows}) == [(0, 3), (1, 4), (2, 5)]

    def test_separation_monotone(self):
        vals = [fidelity_curve("xprime", 6, LogicalLevels(0, l1), steps=200).values[-1] for l1 in range(1, 6)]
        assert all(b >= a - 1e-6 for a, b in zip(vals, vals[1:]))

    def test_entropy_metrics(self):
        rows = run(ExperimentSpec(family="entropy_vs_d", d_values=[3], steps=4), jobs=1)
        assert {r.metric for r in rows} == {"S_total", "S_en", "S_nonen", "dS_total", "dS_en", "dS_nonen"}
        assert len(rows) == 6 * 5

    def test_kohlrausch_rows(self):
        rows = run(ExperimentSpec(family="kohlrausch_table", d_values=[2], steps=300), jobs=1)
        m = {r.metric: r.value for r in rows}
        assert all(r.t is None for r in rows)
        assert m["tau"] == pytest.approx(49.498, abs=0.5)
        assert m["converged"] == 1.0

    def test_qec_rows(self):
        spec = ExperimentSpec(family="qec_compare", model="z", d_values=[2], taus=[1, 2], p_grid=[0.01, 0.1])
        rows = run(spec, jobs=1)
        assert [(r.t, r.p) for r in rows[::3]] == [(1, 0.01), (1, 0.1), (2, 0.01), (2, 0.1)]
        assert {r.metric for r in rows} == {"fidelity_qec", "fidelity_noqec", "uncorrectable_fraction"}

    def test_trajectory_rows_seeded(self):
        spec = ExperimentSpec(family="qec_compare", model="xprime", d_values=[2], taus=[2], p_grid=[0.1],
                              qec_mode="trajectory", trajectories=300, seed=9)
        a, b = run(spec, jobs=1), run(spec, jobs=1)
        assert csv_text(a) == csv_text(b)
        assert {r.metric for r in a} >= {"fidelity_qec_se", "fidelity_noqec_se"}
        other = run(spec.model_copy(update={"seed": 10}), jobs=1)
        assert csv_text(other) != csv_text(a)

    def test_deterministic_across_workers(self):
        spec = ExperimentSpec(family="fidelity_shifted_pair", d_values=[3, 4], steps=20)
        assert csv_text(run(spec, jobs=1)) == csv_text(run(spec, jobs=2))

    def test_failed_cell_recorded(self, monkeypatch):
        monkeypatch.setenv("QUDITLAB_DENSE_CAP", "20")
        spec = ExperimentSpec(family="qec_compare", model="z", d_values=[2, 3], taus=[1], p_grid=[0.1])
        rows = run(spec, jobs=1)
        assert [r.metric for r in rows if r.d == 2] == ["fidelity_qec", "fidelity_noqec",
                                                        "uncorrectable_fraction"]
        bad = [r for r in rows if r.d == 3]
        assert len(bad) == 1 and bad[0].metric == "error:DimensionCapExceeded"
        assert np.isnan(bad[0].value)

    def test_full_entangled_option(self):
        rows = run(ExperimentSpec(family="fidelity_vs_d", d_values=[3], steps=3,
                                  initial_state="full_entangled"), jobs=1)
        assert rows[0].value == pytest.approx(1.0)
        assert rows[-1].value < 1.0
