"""Model-based diagnosis with sampled diagnoses and sequential measurement."""

from .dpi import (
    Axiom, Dpi, apply_measurement, diagnosis_probability, dump_dpi,
    is_diagnosis, load_dpi, needs_repair, normalize, read_dpi,
)
from .formula import atoms, entails, is_consistent, parse_formula, to_text
from .conflict import find_min_conflict, inv_qx_diagnosis, is_conflict
from .hstree import enumerate_all, enumerate_best_first, enumerate_inv_hstree
from .sampling import SAMPLE_TYPES, Sample, draw_sample
from .measure import (
    HEURISTICS, generate_mp_pool, is_informative, partition_mp, score_mp,
    select_mp,
)
from .session import SessionConfig, bayes_update, oracle_answer, run_session

__version__ = "0.1.0"


def table1_dpi() -> Dpi:
    """The bundled five-axiom example instance."""
    from importlib.resources import files

    return load_dpi(files(__name__).joinpath("data/table1.dpi").read_text(encoding="utf-8"))
