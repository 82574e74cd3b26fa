"""Exception types shared across the package."""


class StrategySyntaxError(ValueError):
    def __init__(self, position: int, expected: str, text: str = ""):
        self.position = position
        self.expected = expected
        snippet = f" near {text[position:position + 20]!r}" if text else ""
        super().__init__(f"at offset {position}: expected {expected}{snippet}")


class UnknownSymbol(KeyError):
    def __init__(self, name: str, kind: str = "symbol"):
        self.name = name
        self.kind = kind
        super().__init__(f"unknown {kind} {name!r}")

    def __str__(self):
        return self.args[0]


class CatalogError(ValueError):
    pass


class StageError(ValueError):
    """Invalid stage configuration (e.g. combine stage with an empty pool)."""


class TerminalState(RuntimeError):
    pass


class NotTerminal(RuntimeError):
    pass


class IllegalAction(ValueError):
    pass


class RolloutOverflow(RuntimeError):
    pass


class EvaluationError(RuntimeError):
    """An eval_fn failure, carrying the strategy that triggered it."""

    def __init__(self, strategy, key: str):
        self.strategy = strategy
        self.key = key
        super().__init__(f"evaluation failed for {key}")


class BackendUnavailable(RuntimeError):
    pass


class CacheConflict(RuntimeError):
    pass


class EmptySet(ValueError):
    pass


class MissingRecord(KeyError):
    def __init__(self, strategy_key: str, instance_id: str, timeout_ms: int):
        self.pair = (strategy_key, instance_id)
        super().__init__(f"no cached record for {strategy_key!r} on {instance_id!r} at {timeout_ms} ms")

    def __str__(self):
        return self.args[0]


class MissingFeature(KeyError):
    def __init__(self, probe: str):
        self.probe = probe
        super().__init__(f"feature map has no value for probe {probe!r}")

    def __str__(self):
        return self.args[0]


class SmtParseError(ValueError):
    pass


class ConfigError(ValueError):
    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")
