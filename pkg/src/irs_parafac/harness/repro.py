"""Built-in experiment specs mirroring the published simulation setups."""

from ..system_model import PerturbationConfig, SystemConfig
from .spec import ExperimentSpec

SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)

_FIG3_BASE = SystemConfig(M=3, L=2, N=50, K=50, T=4, random_phase_fallback=True)
_FIG3_SWEEP = ({"N": 50}, {"N": 100})


def _fig3():
    # NMSE of H and G for KRF and BALS; KRF is dropped where K < N
    return ExperimentSpec(_FIG3_BASE, SNR_GRID, ("krf", "bals"), 5000, _FIG3_SWEEP,
                          name="fig3", skip_infeasible=True)


def _fig4():
    base = SystemConfig(M=3, L=20, N=10, K=100, T=4)
    return ExperimentSpec(base, SNR_GRID, ("krf", "bals"), 1000,
                          ({"N": 10}, {"N": 50}, {"N": 100}), name="fig4")


def _fig5():
    # runtime comparison on the fig3 setup (read the time_ms column)
    return _fig3().replace(name="fig5")


def _fig6():
    # BALS iteration counts on the fig3 setup
    return _fig3().replace(name="fig6", estimators=("bals",))


def _fig7():
    base = SystemConfig(M=20, L=8, N=50, K=50, T=20)
    return ExperimentSpec(base, SNR_GRID, ("ls", "krf"), 1000, name="fig7")


def _fig8():
    base = SystemConfig(M=4, L=4, N=64, K=64, T=4, channel_model="geometric", R1=1, R2=1)
    return ExperimentSpec(base, SNR_GRID, ("krf", "block_ls"), 1000,
                          ({"M": 4, "T": 4}, {"M": 20, "T": 20}), name="fig8")


def _fig9():
    base = SystemConfig(M=50, L=4, N=16, K=100, T=50,
                        perturbation=PerturbationConfig(0.2, 0.01))
    sweep = tuple({"N": n, "perturbation": p}
                  for n in (16, 32) for p in (base.perturbation, None))
    return ExperimentSpec(base, SNR_GRID, ("tals", "bals"), 200, sweep, name="fig9")


BUILTIN = {"fig3": _fig3, "fig4": _fig4, "fig5": _fig5, "fig6": _fig6,
           "fig7": _fig7, "fig8": _fig8, "fig9": _fig9}


def builtin_spec(figure_id):
    """Spec for ``"fig3"`` ... ``"fig9"`` (``KeyError`` otherwise)."""
    return BUILTIN[figure_id.lower()]()
