"""
Centralized logging configuration with Sentry integration.

Provides plain-text or JSON logging, error tracking, and a helper to
report failures from simulation runs with their context attached.
"""

import logging
import sys
from typing import Dict, Any, Optional, TextIO

try:
    import sentry_sdk
    from sentry_sdk.integrations.fastapi import FastApiIntegration
    from sentry_sdk.integrations.celery import CeleryIntegration
    SENTRY_AVAILABLE = True
except ImportError:
    SENTRY_AVAILABLE = False

from pythonjsonlogger import jsonlogger

from app.core.config import settings

TEXT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
JSON_FORMAT = '%(asctime)s %(name)s %(levelname)s %(message)s'

# Request fields holding numeric series; anything longer is replaced before upload
_SERIES_FIELDS = ('liquidity', 'points', 'target', 'f', 'g', 'a', 'b', 'records', 'series')
_MAX_SERIES_ITEMS = 32


def init_sentry():
    """
    Initialize Sentry for error tracking and performance monitoring.

    Only initializes if SENTRY_DSN is configured and sentry-sdk is installed.
    """
    if not SENTRY_AVAILABLE:
        logging.warning("Sentry SDK not installed. Error tracking disabled.")
        return

    sentry_dsn = getattr(settings, 'SENTRY_DSN', None)

    if not sentry_dsn:
        logging.info("SENTRY_DSN not configured. Sentry disabled.")
        return

    try:
        sentry_sdk.init(
            dsn=sentry_dsn,
            environment=getattr(settings, 'SENTRY_ENVIRONMENT', settings.MODE),
            traces_sample_rate=float(getattr(settings, 'SENTRY_TRACES_SAMPLE_RATE', 0.1)),
            integrations=[
                FastApiIntegration(),
                CeleryIntegration(),
            ],
            before_send=trim_large_payloads,
            send_default_pii=False,
            attach_stacktrace=True,
            max_breadcrumbs=50,
        )
        logging.info(f"Sentry initialized successfully for environment: {settings.MODE}")
    except Exception as e:
        logging.error(f"Failed to initialize Sentry: {e}")


def trim_large_payloads(event: Dict[str, Any], hint: Dict[str, Any] = None) -> Optional[Dict[str, Any]]:
    """
    Shorten numeric series in request bodies before sending to Sentry.

    Liquidity vectors and transaction lists can hold thousands of entries;
    only their length and first items are kept.

    Args:
        event: Sentry event dictionary
        hint: Sentry hint dictionary

    Returns:
        Modified event
    """
    if 'request' in event and 'data' in event['request']:
        data = event['request']['data']
        if isinstance(data, dict):
            for field in _SERIES_FIELDS:
                value = data.get(field)
                if isinstance(value, list) and len(value) > _MAX_SERIES_ITEMS:
                    data[field] = {
                        'length': len(value),
                        'head': value[:_MAX_SERIES_ITEMS],
                    }
    return event


def capture_error(
    error: Exception,
    context: Optional[Dict[str, Any]] = None,
    tags: Optional[Dict[str, str]] = None
) -> Optional[str]:
    """
    Capture an error and send to Sentry with context.

    Args:
        error: Exception to capture
        context: Additional context dict to attach (scenario name, seed, ...)
        tags: Tags to attach to the event

    Returns:
        Sentry event ID if sent, None otherwise
    """
    if not SENTRY_AVAILABLE or not getattr(settings, 'SENTRY_DSN', None):
        logging.error(f"Error occurred: {error}", exc_info=error)
        return None

    try:
        with sentry_sdk.push_scope() as scope:
            if context:
                for key, value in context.items():
                    scope.set_context(key, value if isinstance(value, dict) else {"value": value})

            if tags:
                for key, value in tags.items():
                    scope.set_tag(key, value)

            event_id = sentry_sdk.capture_exception(error)
            logging.info(f"Error captured in Sentry with event ID: {event_id}")
            return event_id
    except Exception as e:
        logging.error(f"Failed to capture error in Sentry: {e}")
        logging.error(f"Original error: {error}", exc_info=error)
        return None


def setup_logging(level: Optional[str] = None, fmt: Optional[str] = None, stream: Optional[TextIO] = None):
    """
    Configure logging for the application, the worker and the CLI.

    Args:
        level: Overrides LOG_LEVEL (e.g. "DEBUG")
        fmt: Overrides LOG_FORMAT ("text" or "json")
        stream: Defaults to stdout; the CLI keeps stdout for its JSON output
    """
    log_level = (level or getattr(settings, 'LOG_LEVEL', 'INFO')).upper()
    log_format = (fmt or getattr(settings, 'LOG_FORMAT', 'text')).lower()

    logger = logging.getLogger()
    logger.setLevel(getattr(logging, log_level))

    # Remove existing handlers
    logger.handlers = []

    console_handler = logging.StreamHandler(stream or sys.stdout)
    console_handler.setLevel(getattr(logging, log_level))

    if log_format == 'json':
        formatter = jsonlogger.JsonFormatter(JSON_FORMAT)
    else:
        formatter = logging.Formatter(TEXT_FORMAT, datefmt='%Y-%m-%d %H:%M:%S')
    console_handler.setFormatter(formatter)

    logger.addHandler(console_handler)

    logging.info(f"Logging configured with level: {log_level} ({log_format})")


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance with the specified name.

    Args:
        name: Logger name (typically __name__)

    Returns:
        Logger instance
    """
    return logging.getLogger(name)
