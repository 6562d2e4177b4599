"""Exception hierarchy shared across the package."""


class CSAgentError(Exception):
    """Base class for every error raised by csagent."""


# graph core
class GraphError(CSAgentError, ValueError):
    pass


class EndpointOutOfRange(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class VertexNotInGraph(GraphError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class MalformedRecord(CSAgentError, ValueError):
    pass


# oracles
class KTooSmall(CSAgentError, ValueError):
    pass


class Disconnected(CSAgentError, ValueError):
    pass


class TooSmall(CSAgentError, ValueError):
    pass


class GraphTooLarge(CSAgentError, ValueError):
    pass


# generators
class InvalidParams(CSAgentError, ValueError):
    pass


class InfeasibleParams(InvalidParams):
    pass


class RetriesExhausted(CSAgentError, RuntimeError):
    pass


class NoViableInstance(CSAgentError):
    pass


# prompting
class EmptyExemplarPool(CSAgentError, ValueError):
    pass


# backends
class BackendError(CSAgentError):
    pass


class AuthMissing(BackendError):
    pass


class Timeout(BackendError):
    pass


class RateLimited(BackendError):
    pass


class ProviderError(BackendError):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class ScriptExhausted(BackendError):
    pass


class NoMatch(BackendError):
    pass


# decider / evaluation / cli
class NoCandidates(CSAgentError, ValueError):
    pass


class EmptyTruth(CSAgentError, ValueError):
    pass


class EmptyRecords(CSAgentError, ValueError):
    pass


class ConfigInvalid(CSAgentError, ValueError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason
