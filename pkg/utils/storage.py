import csv
import os
import logging
import sys
import hashlib
import json
from collections import OrderedDict

import utils


def create_folders_if_necessary(path):
    dirname = os.path.dirname(path)
    if dirname and not os.path.isdir(dirname):
        os.makedirs(dirname)


def get_storage_dir():
    if "CPINN_STORAGE" in os.environ:
        return os.environ["CPINN_STORAGE"]
    return "storage"


def get_run_dir(run_name):
    return os.path.join(get_storage_dir(), run_name)


def check_writable(run_dir):
    """Create `run_dir` if needed and raise OSError if it cannot be written."""
    os.makedirs(run_dir, exist_ok=True)
    probe = os.path.join(run_dir, ".write_probe")
    with open(probe, "w"):
        pass
    os.remove(probe)


def get_checkpoint_path(run_dir, field, iteration=None):
    name = f"{field}.txt" if iteration is None else f"{field}_{iteration:07d}.txt"
    return os.path.join(run_dir, "checkpoints", name)


def get_txt_logger(run_dir):
    path = os.path.join(run_dir, "log.txt")
    utils.create_folders_if_necessary(path)

    logging.basicConfig(
        level=logging.INFO,
        format="%(message)s",
        handlers=[
            logging.FileHandler(filename=path),
            logging.StreamHandler(sys.stdout)
        ],
        force=True
    )

    return logging.getLogger()


def get_csv_logger(run_dir, name="trace.csv", header=None, append=True):
    """Open `name` in the run directory; the header is written when the
    file is new or `append` is False."""

    csv_path = os.path.join(run_dir, name)
    utils.create_folders_if_necessary(csv_path)
    new = not append or not os.path.isfile(csv_path) or os.path.getsize(csv_path) == 0
    csv_file = open(csv_path, "a" if append else "w", newline="")
    csv_logger = csv.writer(csv_file)
    if new and header is not None:
        csv_logger.writerow(header)
        csv_file.flush()
    return csv_file, csv_logger


def format_cell(value):
    if isinstance(value, float):
        return repr(float(value))
    return value


def save_table(path, header, rows):
    utils.create_folders_if_necessary(path)
    with open(path, "w", newline="") as csv_file:
        csv_writer = csv.writer(csv_file)
        csv_writer.writerow(header)
        for row in rows:
            csv_writer.writerow([format_cell(v) for v in row])


def read_table(path):
    """Return (header, rows); numeric cells are parsed as floats."""

    def parse(cell):
        try:
            return float(cell)
        except ValueError:
            return cell

    with open(path, newline="") as csv_file:
        csv_reader = csv.reader(csv_file)
        header = next(csv_reader)
        rows = [[parse(cell) for cell in row] for row in csv_reader]
    return header, rows


def save_config_in_table(config, name=None):
    """Append a flattened configuration to a CSV table in the storage root and return its hash."""

    csv_path = os.path.join(get_storage_dir(), f"{name or 'configs'}.csv")
    utils.create_folders_if_necessary(csv_path)
    if not os.path.isfile(csv_path):
        with open(csv_path, "w"): pass

    # Get current CSV header

    with open(csv_path) as csv_file:
        csv_reader = csv.reader(csv_file)

        csv_header = None
        for row in csv_reader:
            csv_header = row
            break

    # Write config (and header)

    config = OrderedDict(sorted(flatten(config).items(), key=lambda t: t[0]))
    config_hash = hashlib.md5(json.dumps(list(config.values()), default=str).encode()).hexdigest()[:10]

    with open(csv_path, "a", newline="") as csv_file:
        csv_writer = csv.writer(csv_file)

        config_header = ["hash"] + list(config.keys())
        if csv_header is None:
            csv_writer.writerow(config_header)
        elif csv_header != config_header:
            logging.getLogger(__name__).warning(
                "config keys differ from the header of {}; row written without header".format(csv_path))
        csv_writer.writerow([config_hash] + list(config.values()))

    return config_hash


def flatten(d, prefix=""):
    flat = {}
    for key, value in d.items():
        if isinstance(value, dict):
            flat.update(flatten(value, f"{prefix}{key}."))
        else:
            flat[f"{prefix}{key}"] = value
    return flat
