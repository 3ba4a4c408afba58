import csv
import json

import numpy as np


__all__ = ["format_cell", "write_csv", "write_json", "to_jsonable"]


def format_cell(value):
    """CSV cell text: repr for floats, empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(file_path, columns, rows):
    """
    Args:
        file_path (str): Output path
        columns (list): Column names
        rows (list): Dicts keyed by column name; absent keys are written empty
    """
    with open(file_path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(c)) for c in columns])


def to_jsonable(value):
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if np.isinf(value):
            return "inf" if value > 0 else "-inf"
        if np.isnan(value):
            return None
        return value
    return value


def write_json(file_path, data):
    """Sorted, indented JSON; infinities become the strings "inf" and "-inf"."""
    with open(file_path, "w", newline="\n") as f:
        json.dump(to_jsonable(data), f, sort_keys=True, indent=2)
        f.write("\n")
