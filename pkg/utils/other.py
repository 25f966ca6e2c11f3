import random
import numpy
import torch
import collections


STREAM_INIT = 0
STREAM_INTERIOR = 1
STREAM_BOUNDARY = 2
STREAM_DERIVATIVES = 3
STREAM_BOUNDS = 4


def seed(seed):
    random.seed(seed)
    numpy.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def make_rng(seed, stream=0):
    """Return a counter-based generator keyed by (seed, stream).

    Distinct streams of one seed never overlap and the sequence does not
    depend on the platform."""

    key = (int(stream) << 64) | (int(seed) & (2**64 - 1))
    return numpy.random.Generator(numpy.random.Philox(key=key))


def synthesize(array):
    d = collections.OrderedDict()
    d["mean"] = numpy.mean(array)
    d["std"] = numpy.std(array)
    d["min"] = numpy.amin(array)
    d["max"] = numpy.amax(array)
    return d
