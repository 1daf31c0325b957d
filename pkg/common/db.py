from peewee import Proxy, SqliteDatabase

db = Proxy()  # Use a Proxy for deferred initialization

RUNS_DB_NAME = "runs.db"


def init_db(db_path):
    """Bind the proxy to the SQLite file at ``db_path``."""
    if db.obj is not None and not db.obj.is_closed():
        db.obj.close()
    db.initialize(SqliteDatabase(db_path, pragmas={"foreign_keys": 1}))
    return db
