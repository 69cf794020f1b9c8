"""Fairness auditing and mitigation toolkit for top-K reviewer recommendation."""

__version__ = "0.1.0"


def __getattr__(name):
    # Lazy re-exports keep `import fairrank` cheap for the CLI entry point.
    from importlib import import_module

    exports = {
        "AuditConfig": "fairrank.audit",
        "run_audit": "fairrank.audit",
        "compare_reports": "fairrank.audit",
        "ingest_project": "fairrank.ingest",
    }
    if name in exports:
        return getattr(import_module(exports[name]), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
