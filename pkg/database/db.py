from datetime import datetime

import pytz
from flask_sqlalchemy import SQLAlchemy
from sqlalchemy import Column, DateTime, Integer, String, Text

db = SQLAlchemy()

DEFAULT_TIMEZONE = 'America/Santiago'
_zone = pytz.timezone(DEFAULT_TIMEZONE)


def set_timezone(name: str):
    global _zone
    _zone = pytz.timezone(name)


def now_local():
    # devuelve un datetime con tzinfo de la zona configurada
    return datetime.now(_zone)


def init_db(app):
    app.config.setdefault('SQLALCHEMY_DATABASE_URI', 'sqlite:///runs.db')
    set_timezone(app.config.get('LAB_TIMEZONE', DEFAULT_TIMEZONE))
    db.init_app(app)
    with app.app_context():
        db.create_all()


class RunLog(db.Model):
    __tablename__ = 'run_logs'
    id = Column(Integer, primary_key=True)
    command = Column(String(40), nullable=False, index=True)
    status = Column(String(20), nullable=False, index=True)  # 'ok', 'failed' o 'rejected'
    config_hash = Column(String(64), nullable=True)
    out_dir = Column(String(255), nullable=True)
    details = Column(Text, nullable=True)
    created_at = Column(DateTime(timezone=True), default=now_local, nullable=False)

    def __repr__(self):
        return (
            f"<RunLog id={self.id!r} command={self.command!r} "
            f"status={self.status!r} at={self.created_at}>"
        )

    def to_dict(self) -> dict:
        return {
            'id': self.id,
            'command': self.command,
            'status': self.status,
            'config_hash': self.config_hash,
            'out_dir': self.out_dir,
            'details': self.details,
            'created_at': self.created_at.strftime('%d/%m/%Y %H:%M:%S') if self.created_at else None,
        }
