import logging

from src.routers.cli import run

logger = logging.getLogger(__name__)


if __name__ == "__main__":
    try:
        run()
    except KeyboardInterrupt:
        logger.info("Interrupted")
