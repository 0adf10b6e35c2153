import logging

from sqlalchemy import text

from constants import SNP_DATABASE_URL
from database.database import init_db, make_engine

logger = logging.getLogger(__name__)


def clean_database(url: str = SNP_DATABASE_URL) -> None:
    """Empties the check and sweep ledgers."""
    engine = make_engine(url)
    init_db(engine)
    with engine.connect() as conn:
        conn.execute(text("DELETE FROM check_runs;"))
        conn.execute(text("DELETE FROM sweep_runs;"))
        conn.commit()
    logger.info("cleaned %s", url)


if __name__ == "__main__":
    clean_database()
    print("Database cleaned successfully!")
