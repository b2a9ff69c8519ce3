import logging
import os

from flask import Flask

from commands.barriers import register_barriers
from commands.minkowski import register_minkowski
from commands.runs import register_runs
from commands.solve import register_solve
from commands.verify import register_verify
from database.db import init_db

SCHEMA_VERSION = 1


def create_app(test_config=None):
    app = Flask(__name__)

    app.config.from_mapping(
        LAB_OUT_DIR=os.path.join(app.root_path, 'out'),
        LAB_SCHEMA_VERSION=SCHEMA_VERSION,
        LAB_DEFAULT_SEED=0,
        LAB_TIMEZONE='America/Santiago',
        LAB_LOG_LEVEL='INFO',
        SQLALCHEMY_DATABASE_URI='sqlite:///runs.db',
    )
    if test_config is not None:
        app.config.update(test_config)

    # los módulos de core usan logging.getLogger(__name__); un solo handler a stderr
    level = app.config['LAB_LOG_LEVEL']
    logging.basicConfig(format='%(levelname)s %(name)s: %(message)s')
    logging.getLogger('core').setLevel(level)
    app.logger.setLevel(level)

    init_db(app)

    register_verify(app)
    register_solve(app)
    register_minkowski(app)
    register_barriers(app)
    register_runs(app)

    return app


if __name__ == '__main__':
    app = create_app()
    with app.app_context():
        app.cli.main()
