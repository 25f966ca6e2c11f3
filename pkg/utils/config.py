import json
import os


def load_json(path):
    """Parse a JSON file; OSError if it cannot be read, ValueError if it is not JSON."""
    with open(path) as file:
        return json.load(file)


def get_experiment_path(name):
    """Accept a path or the name of a file in experiments/."""
    if os.path.isfile(name):
        return name
    return os.path.join("experiments", name if name.endswith(".json") else name + ".json")


def unknown_keys(section, allowed):
    return sorted(set(section) - set(allowed))
