import json
import logging
from datetime import datetime, timezone

import numpy as np
import pandas as pd

from ._version import __version__

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def _to_builtin(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def metadata(config=None):
    """
    Provenance block attached to every JSON output.
    """
    return {
        'version': __version__,
        'timestamp': datetime.now(timezone.utc).isoformat(),
        'config_hash': None if config is None else config.config_hash(),
    }


def write_csv(rows, csv_path):
    """
    Write a list of flat dicts (or a DataFrame) with 17 significant digits.
    """
    df = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(rows)
    df.to_csv(csv_path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(df)} rows to {csv_path}")
    return df


def read_csv(csv_path):
    """
    Read a CSV written by ``write_csv`` without losing float precision.
    """
    return pd.read_csv(csv_path, float_precision='round_trip')


def dumps(payload):
    """
    Canonical JSON text; floats are written with repr, which round-trips.
    """
    return json.dumps(payload, indent=2, sort_keys=True, default=_to_builtin)


def write_json(payload, json_path, config=None):
    """
    Write ``{'metadata': ..., 'results': payload}``.
    """
    document = {'metadata': metadata(config), 'results': payload}
    with open(json_path, 'w') as f:
        f.write(dumps(document))
        f.write('\n')
    return document


def read_json(json_path):
    with open(json_path, 'r') as f:
        return json.load(f)


def write_jsonl(rows, jsonl_path):
    """
    One JSON object per line.
    """
    with open(jsonl_path, 'w') as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True, default=_to_builtin))
            f.write('\n')
