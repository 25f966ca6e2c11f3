from .config import *
from .other import *
from .plot import *
from .storage import *
