import csv
import hashlib
import json
import os
from datetime import datetime

from core.errors import ConfigError


def canonical_json(payload) -> str:
    """JSON estable: claves ordenadas, sangría fija."""
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True)


def config_hash(payload) -> str:
    """SHA-256 of the canonical serialisation of a validated config."""
    blob = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(blob.encode('utf-8')).hexdigest()


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def write_json(path: str, payload) -> str:
    ensure_dir(os.path.dirname(path) or '.')
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        fh.write(canonical_json(payload))
        fh.write('\n')
    return path


def _csv_cell(value):
    # repr exacto para floats; determinista entre corridas
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(path: str, headers, rows) -> str:
    ensure_dir(os.path.dirname(path) or '.')
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(headers)
        for row in rows:
            if isinstance(row, dict):
                row = [row.get(h, '') for h in headers]
            writer.writerow([_csv_cell(v) for v in row])
    return path


def parse_float_list(text, key: str = 'value') -> list[float]:
    """'1/3, 1, 0.5' -> [0.333.., 1.0, 0.5]; simple fractions allowed."""
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    out = []
    for item in str(text).replace(';', ',').split(','):
        item = item.strip()
        if not item:
            continue
        try:
            if '/' in item:
                num, den = item.split('/', 1)
                out.append(float(num) / float(den))
            else:
                out.append(float(item))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f'{key}: could not read {item!r} as a number', key=key, value=item) from None
    if not out:
        raise ConfigError(f'{key}: empty list', key=key)
    return out


def parse_dmy(s: str):
    """Convierte 'dd/mm/aaaa' a datetime a las 00:00; devuelve None si no aplica."""
    try:
        return datetime.strptime(s.strip(), "%d/%m/%Y")
    except (AttributeError, ValueError):
        return None
