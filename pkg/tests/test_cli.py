import numpy as np
import pytest

from querymind.cli import INTENT_FIXTURE, main
from querymind.model import Query, ThetaGrid
from querymind.inference import QueryGrid
from querymind.agents import BeliefEnsemble, bayes_factor
from querymind.reporting import fmt_real

FAST_CFG = """
grid.query_points = 13
grid.theta_points = 61
mle.mu1_count = 5
mle.mu2_count = 5
mle.sigma1_count = 2
mle.sigma2_count = 2
mle.p_z_count = 3
mle.refine_iters = 1
"""


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "fast.cfg"
    path.write_text(FAST_CFG)
    return str(path)


class TestExitCodes:
    def test_unknown_command_is_usage_error(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self):
        assert main(["reproduce", "fig2", "--wat"]) == 1

    def test_missing_command_is_usage_error(self):
        assert main([]) == 1

    def test_bad_config_file_is_runtime_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("prior.sigma1 = -2\n")
        code = main(["reproduce", "fig2", "--config", str(cfg),
                     "--out", str(tmp_path / "out")])
        assert code == 2
        assert "prior.sigma1" in capsys.readouterr().err

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0


class TestReproduce:
    def test_fig2_outputs(self, tmp_path, fast_config, capsys):
        out = tmp_path / "d"
        code = main(["reproduce", "fig2", "--seed", "7", "--out", str(out),
                     "--config", fast_config])
        assert code == 0
        for name in ("queries.csv", "eig_true.csv", "eig_estimated.csv",
                     "belief_estimated.csv", "belief_true.csv",
                     "heatmap_true.svg", "heatmap_estimated.svg",
                     "manifest.txt", "report.json"):
            assert (out / name).exists(), name
        printed = capsys.readouterr().out
        assert "estimated belief" in printed
        assert "correlation" in printed

    def test_fig4_outputs(self, tmp_path, fast_config):
        out = tmp_path / "t"
        code = main(["reproduce", "fig4", "--seed", "3", "--out", str(out),
                     "--config", fast_config])
        assert code == 0
        for name in ("teach_uniform.csv", "teach_adaptive.csv",
                     "heatmap_teach_uniform.svg", "heatmap_teach_adaptive.svg",
                     "belief_inferred.csv", "manifest.txt"):
            assert (out / name).exists(), name


class TestTeachAndLoop:
    def test_teach_uniform_only(self, tmp_path, fast_config):
        out = tmp_path / "teach"
        code = main(["teach", "uniform", "--out", str(out), "--config", fast_config])
        assert code == 0
        assert (out / "teach_uniform.csv").exists()
        assert not (out / "teach_adaptive.csv").exists()

    def test_loop_trace_rows(self, tmp_path, fast_config):
        out = tmp_path / "loop"
        code = main(["loop", "--teacher", "1", "--rounds", "4", "--seed", "2",
                     "--out", str(out), "--config", fast_config])
        assert code == 0
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines[0] == "round,x1,x2,y,entropy"
        assert len(lines) == 5

    def test_loop_rejects_bad_levels(self, tmp_path, fast_config):
        code = main(["loop", "--teacher", "4", "--out", str(tmp_path / "x"),
                     "--config", fast_config])
        assert code == 2


class TestEstimateAndIntent:
    def test_estimate_belief_prints_canonical_tuple(self, tmp_path, fast_config, capsys):
        qcsv = tmp_path / "qs.csv"
        qcsv.write_text("x1,x2\n-5.5,6\n-4,2\n")
        code = main(["estimate-belief", "--queries", str(qcsv), "--config", fast_config])
        assert code == 0
        fields = capsys.readouterr().out.strip().split()
        assert len(fields) == 5
        mu1, sigma1, mu2, sigma2, p_z = map(float, fields)
        assert mu1 <= mu2
        assert sigma1 > 0 and sigma2 > 0
        assert 0.0 <= p_z <= 1.0

    def test_intent_bf_matches_library(self, capsys):
        code = main(["intent-bf", "--query=-3,1"])
        assert code == 0
        printed = capsys.readouterr().out
        ensemble = BeliefEnsemble(INTENT_FIXTURE, np.array([0.5, 0.5]))
        expected = bayes_factor(Query(-3.0, 1.0), ensemble, 50.0, 0.5,
                                QueryGrid(-6.0, 6.0, 49), ThetaGrid(-6.0, 6.0, 241))
        assert fmt_real(expected) in printed

    def test_intent_bf_bad_query_is_runtime_error(self, capsys):
        assert main(["intent-bf", "--query", "oops"]) == 2

    def test_intent_bf_matches_brute_force_at_reduced_scale(self, tmp_path, capsys):
        from test_acceptance import brute_bayes_factor
        from querymind.model import discretize_belief

        cfg = tmp_path / "small.cfg"
        cfg.write_text("grid.query_points = 9\ngrid.theta_points = 41\n")
        code = main(["intent-bf", "--query=-3,1.5", "--config", str(cfg)])
        assert code == 0
        printed_bf = float(capsys.readouterr().out.split("=")[1].split("(")[0])

        grid = ThetaGrid(-6.0, 6.0, 41)
        qg = QueryGrid(-6.0, 6.0, 9)
        points = [float(p) for p in grid.points]
        masses = [[float(v) for v in discretize_belief(p, grid).mass]
                  for p in INTENT_FIXTURE]
        queries = [qg.query_at(i) for i in range(qg.n_candidates)]
        oracle = brute_bayes_factor(masses, [0.5, 0.5], points, queries,
                                    qg.index_of(Query(-3.0, 1.5)), 50.0, 0.5)
        assert abs(printed_bf - oracle) <= 1e-9
