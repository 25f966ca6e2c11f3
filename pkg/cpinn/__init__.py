from .errors import *
from .activation import *
from .mlp import *
from .certificate import *
from .geometry import *
from .loss import *
from .problems import *
from .optim import *
from .metrics import *
from .solvers import *
from .selftest import *
from .runner import *


def make_solver(problem, cfg, evaluator=None, on_row=None, on_checkpoint=None):
    """Instantiate the solver class of `cfg.method`."""
    return SOLVERS[Method.parse(cfg.method)](problem, cfg, evaluator=evaluator, on_row=on_row,
                                             on_checkpoint=on_checkpoint)
