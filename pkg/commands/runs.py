import json
from datetime import timedelta

import click

from core.helpers import parse_dmy
from database.db import RunLog


def _date(ctx, param, value):
    if value is None:
        return None
    parsed = parse_dmy(value)
    if parsed is None:
        raise click.BadParameter('usa el formato dd/mm/aaaa')
    return parsed


def register_runs(app):
    @app.cli.command('runs')
    @click.option('--command', 'command_q', help='Filtra por subcomando (coincidencia parcial).')
    @click.option('--status', 'status_q', type=click.Choice(['ok', 'failed', 'rejected']))
    @click.option('--start', callback=_date, help='Desde (dd/mm/aaaa).')
    @click.option('--end', callback=_date, help='Hasta (dd/mm/aaaa, inclusive).')
    @click.option('--limit', type=click.IntRange(min=1), default=50, show_default=True)
    def runs(command_q, status_q, start, end, limit):
        """List run-ledger rows as JSON, newest first."""
        q = RunLog.query

        if command_q:
            q = q.filter(RunLog.command.ilike(f"%{command_q.strip().lower()}%"))
        if status_q:
            q = q.filter(RunLog.status == status_q)
        if start:
            q = q.filter(RunLog.created_at >= start)
        if end:
            q = q.filter(RunLog.created_at < end + timedelta(days=1))

        entries = q.order_by(RunLog.created_at.desc(), RunLog.id.desc()).limit(limit).all()
        click.echo(json.dumps([e.to_dict() for e in entries], indent=2, ensure_ascii=False))
