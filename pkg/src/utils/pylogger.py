import logging
from typing import Any, Mapping, Optional


class ContextLogger(logging.LoggerAdapter):
    """A python command line logger that prefixes messages with the problem they belong to."""

    def __init__(
        self,
        name: str = __name__,
        extra: Optional[Mapping[str, object]] = None,
    ) -> None:
        """Initializes a logger whose messages carry a ``[key=value ...]`` context prefix.

        :param name: The name of the logger. Default is ``__name__``.
        :param extra: (Optional) A dict-like object with the context, e.g. ``{"N": 3, "p": 5}``.
        """
        logger = logging.getLogger(name)
        super().__init__(logger=logger, extra=dict(extra or {}))

    def bind(self, **context: Any) -> "ContextLogger":
        """Returns a child logger whose context is this logger's context updated with `context`.

        :param context: Key/value pairs added to the prefix.
        :return: A new `ContextLogger` sharing the underlying logger.
        """
        merged = {**self.extra, **context}
        return ContextLogger(self.logger.name, extra=merged)

    def process(self, msg: str, kwargs: Any):
        """Prefixes `msg` with the bound context, if any.

        :param msg: The message to log.
        :param kwargs: Keyword arguments passed on to the underlying logger.
        """
        if not self.extra:
            return msg, kwargs
        prefix = " ".join(f"{key}={_format(value)}" for key, value in self.extra.items())
        return f"[{prefix}] {msg}", kwargs


def _format(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)
