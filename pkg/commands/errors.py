import json
from dataclasses import dataclass, field
from functools import wraps

import click
from flask import current_app
from sqlalchemy.exc import SQLAlchemyError

from core.errors import LabError
from database.db import RunLog, db


@dataclass
class RunRecord:
    """Lo que el comando alcanzó a resolver antes de terminar (o fallar)."""

    command: str
    config_hash: str | None = None
    out_dir: str | None = None
    summary: dict = field(default_factory=dict)


def record_run(record: RunRecord, status: str, details: dict | None = None):
    try:
        db.session.add(RunLog(
            command=record.command,
            status=status,
            config_hash=record.config_hash,
            out_dir=record.out_dir,
            details=json.dumps(details if details is not None else record.summary, sort_keys=True),
        ))
        db.session.commit()
    except SQLAlchemyError:
        db.session.rollback()
        current_app.logger.warning("No se pudo registrar la corrida de %s", record.command)


def lab_command(name: str):
    """Wrap a CLI callback: LabError -> JSON on stderr + exit code, one ledger row per run.

    The callback receives a ``RunRecord`` as first argument and returns True
    when every check passed.
    """
    def decorator(f):
        @wraps(f)
        def decorated_function(*args, **kwargs):
            record = RunRecord(command=name)
            ctx = click.get_current_context()
            try:
                passed = f(record, *args, **kwargs)
            except LabError as exc:
                status = 'rejected' if exc.exit_code == 2 else 'failed'
                payload = exc.to_dict()
                click.echo(json.dumps(payload, sort_keys=True, default=str), err=True)
                current_app.logger.error("%s %s: %s", name, status, exc.message)
                record_run(record, status, payload)
                ctx.exit(exc.exit_code)
            record_run(record, 'ok' if passed else 'failed')
            if not passed:
                ctx.exit(1)
        return decorated_function
    return decorator
